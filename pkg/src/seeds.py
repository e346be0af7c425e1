"""
Independent random streams derived from the single configured seed.
Each consumer draws from its own labelled stream, so adding chains or
replications never shifts the numbers another consumer sees.
"""
import numpy as np

NOISE = 1
DUMMY = 2
CHAIN = 3


def derive_seed(seed: int, label: int, index: int = 0) -> int:
    return int(np.random.SeedSequence([int(seed), int(label), int(index)]).generate_state(1)[0])
