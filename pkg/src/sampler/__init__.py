from src.sampler.moves import (
    MoveProbabilities,
    ProposalMixture,
    acc_add,
    acc_relocate,
    acc_remove,
    log_ratio_add,
    log_ratio_relocate,
    log_ratio_remove,
)
from src.sampler.rjmcmc import (
    ChainState,
    MoveDiagnostics,
    PdSampler,
    SampleSet,
    run_add_remove,
    run_chains,
    run_mwg,
    run_rjmcmc,
)

__all__ = [
    "ChainState",
    "MoveDiagnostics",
    "MoveProbabilities",
    "PdSampler",
    "ProposalMixture",
    "SampleSet",
    "acc_add",
    "acc_relocate",
    "acc_remove",
    "log_ratio_add",
    "log_ratio_relocate",
    "log_ratio_remove",
    "run_add_remove",
    "run_chains",
    "run_mwg",
    "run_rjmcmc",
]
