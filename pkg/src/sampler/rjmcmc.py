"""
Reversible-jump MCMC sampling of persistence diagrams from a fitted model.

Each iteration draws one move type: a uniform birth anywhere in the window,
the removal of a uniformly chosen point, or a relocation sweep that proposes
a new location from q for every current point in turn. The chain keeps its
log potential up to date incrementally from the accepted moves.
"""
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import InvalidSpec
from src.homology.diagram import PersistenceDiagram
from src.model.pcpi import PcpiModel, log_potential
from src.sampler.moves import (
    ADD,
    MOVES,
    RELOCATE,
    REMOVE,
    MoveProbabilities,
    ProposalMixture,
    log_ratio_add,
    log_ratio_relocate,
    log_ratio_remove,
)
from src.seeds import CHAIN, derive_seed

logger = logging.getLogger(__name__)

CACHE_ATOL = 1e-9
TRACE_COLUMNS = ["chain", "iteration", "move", "proposed", "accepted", "cardinality", "log_potential"]


@dataclass
class ChainState:
    points: np.ndarray
    log_potential_cache: float
    iteration: int = 0
    homology_dimension: int = 1

    @property
    def diagram(self) -> PersistenceDiagram:
        return PersistenceDiagram(self.points.copy(), homology_dimension=self.homology_dimension)

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class MoveDiagnostics:
    proposed: Dict[str, int] = field(default_factory=lambda: {m: 0 for m in MOVES})
    accepted: Dict[str, int] = field(default_factory=lambda: {m: 0 for m in MOVES})

    def record(self, move: str, proposed: int, accepted: int) -> None:
        self.proposed[move] += proposed
        self.accepted[move] += accepted

    def acceptance_rate(self, move: str) -> float:
        return self.accepted[move] / self.proposed[move] if self.proposed[move] else float("nan")

    def merged(self, other: "MoveDiagnostics") -> "MoveDiagnostics":
        out = MoveDiagnostics()
        for m in MOVES:
            out.record(m, self.proposed[m] + other.proposed[m], self.accepted[m] + other.accepted[m])
        return out

    def to_dict(self) -> Dict[str, Dict[str, int]]:
        return {"proposed": dict(self.proposed), "accepted": dict(self.accepted)}

    @classmethod
    def from_trace(cls, trace: pd.DataFrame) -> "MoveDiagnostics":
        out = cls()
        for move, group in trace.groupby("move"):
            out.record(str(move), int(group["proposed"].sum()), int(group["accepted"].sum()))
        return out


@dataclass(frozen=True)
class StepOutcome:
    move: str
    proposed: int
    accepted: int


@dataclass
class SampleSet:
    """Recorded diagrams (after burn-in, thinned) with the full per-iteration trace."""

    diagrams: List[PersistenceDiagram]
    iterations: List[int]
    chain_ids: List[int]
    diagnostics: MoveDiagnostics
    trace: pd.DataFrame

    def __len__(self) -> int:
        return len(self.diagrams)

    @property
    def cardinality_trace(self) -> np.ndarray:
        return self.trace["cardinality"].to_numpy()

    @classmethod
    def concat(cls, sets: Sequence["SampleSet"]) -> "SampleSet":
        diagnostics = MoveDiagnostics()
        for s in sets:
            diagnostics = diagnostics.merged(s.diagnostics)
        return cls(
            diagrams=[d for s in sets for d in s.diagrams],
            iterations=[t for s in sets for t in s.iterations],
            chain_ids=[c for s in sets for c in s.chain_ids],
            diagnostics=diagnostics,
            trace=pd.concat([s.trace for s in sets], ignore_index=True),
        )

    def to_ndjson(self, path) -> None:
        """One JSON record per recorded diagram."""
        trace = self.trace.set_index(["chain", "iteration"])
        with open(path, "w") as f:
            for diagram, t, c in zip(self.diagrams, self.iterations, self.chain_ids):
                row = trace.loc[(c, t)]
                record = {
                    "chain": int(c),
                    "iteration": int(t),
                    "dim": diagram.homology_dimension,
                    "points": diagram.points.tolist(),
                    "move": str(row["move"]),
                    "proposed": int(row["proposed"]),
                    "accepted": int(row["accepted"]),
                }
                f.write(json.dumps(record) + "\n")

    def write_trace(self, path) -> None:
        self.trace.to_csv(path, index=False)

    @classmethod
    def from_ndjson(cls, path, trace_path=None) -> "SampleSet":
        """
        Read recorded diagrams back. Without `trace_path` the trace and the
        diagnostics only cover the recorded iterations.
        """
        diagrams, iterations, chains, rows = [], [], [], []
        with open(path) as f:
            for line in f:
                if not line.strip():
                    continue
                record = json.loads(line)
                points = np.asarray(record["points"], dtype=float).reshape(-1, 2)
                diagrams.append(PersistenceDiagram(points, homology_dimension=int(record.get("dim", 1))))
                iterations.append(int(record["iteration"]))
                chains.append(int(record.get("chain", 0)))
                rows.append({
                    "chain": chains[-1],
                    "iteration": iterations[-1],
                    "move": record.get("move"),
                    "proposed": int(record.get("proposed", 0)),
                    "accepted": int(record.get("accepted", 0)),
                    "cardinality": len(points),
                    "log_potential": np.nan,
                })
        if trace_path is not None:
            trace = pd.read_csv(trace_path, float_precision="round_trip")
        else:
            trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
        return cls(diagrams, iterations, chains, MoveDiagnostics.from_trace(trace), trace)


class PdSampler:
    """
    One RJ-MCMC kernel for a fixed model, move mix and relocation proposal.

    Subclasses may override `propose_birth` (e.g. to restrict births to a
    finite set of locations); the addition ratio is left unchanged.
    """

    def __init__(
        self,
        model: PcpiModel,
        moves: MoveProbabilities,
        q: Optional[ProposalMixture] = None,
        max_points: Optional[int] = None,
        validate_cache: bool = False,
    ):
        if moves.p_m > 0 and q is None:
            raise InvalidSpec("Relocation moves need a proposal mixture q")
        if max_points is not None and max_points < 0:
            raise InvalidSpec(f"max_points must be nonnegative, got {max_points}")
        self.model = model
        self.moves = moves
        self.q = q
        self.max_points = max_points
        self.validate_cache = validate_cache

    def propose_birth(self, rng: np.random.Generator) -> np.ndarray:
        return self.model.window.uniform(rng, 1)[0]

    def initial_state(self, initial) -> ChainState:
        points = self.model.check_inside(np.asarray(getattr(initial, "points", initial), dtype=float)).copy()
        dim = getattr(initial, "homology_dimension", 1)
        return ChainState(points=points, log_potential_cache=log_potential(points, self.model), homology_dimension=dim)

    @staticmethod
    def _accept(rng: np.random.Generator, log_r: float) -> bool:
        u = rng.random()
        return log_r >= 0.0 or (u > 0.0 and np.log(u) < log_r)

    def _check_cache(self, state: ChainState) -> None:
        full = log_potential(state.points, self.model)
        if abs(full - state.log_potential_cache) > CACHE_ATOL:
            raise RuntimeError(
                f"Cached log potential {state.log_potential_cache!r} drifted from {full!r} "
                f"at iteration {state.iteration}"
            )

    def _add(self, state: ChainState, rng: np.random.Generator) -> int:
        if self.max_points is not None and len(state) >= self.max_points:
            return 0
        d_star = self.propose_birth(rng)
        if not self._accept(rng, log_ratio_add(state.points, d_star, self.model)):
            return 0
        state.log_potential_cache += self.model.local_log_intensity(d_star, state.points)
        state.points = np.vstack([state.points, d_star])
        return 1

    def _remove(self, state: ChainState, rng: np.random.Generator) -> int:
        n = len(state)
        if n == 0:
            # nothing to remove: the chain stays put
            return 0
        i = int(rng.integers(n))
        if not self._accept(rng, log_ratio_remove(state.points, i, self.model)):
            return 0
        others = np.delete(state.points, i, axis=0)
        state.log_potential_cache -= self.model.local_log_intensity(state.points[i], others)
        state.points = others
        return 1

    def _relocate(self, state: ChainState, rng: np.random.Generator) -> int:
        accepted = 0
        for i in range(len(state)):
            d_star = self.q.sample_one(rng)
            if not self._accept(rng, log_ratio_relocate(state.points, i, d_star, self.model, self.q)):
                continue
            others = np.delete(state.points, i, axis=0)
            state.log_potential_cache += (
                self.model.local_log_intensity(d_star, others)
                - self.model.local_log_intensity(state.points[i], others)
            )
            state.points[i] = d_star
            accepted += 1
        return accepted

    def step(self, state: ChainState, rng: np.random.Generator) -> StepOutcome:
        """Advance `state` in place by one iteration."""
        move = self.moves.choose(rng.random())
        if move == ADD:
            proposed, accepted = 1, self._add(state, rng)
        elif move == REMOVE:
            proposed, accepted = 1, self._remove(state, rng)
        else:
            proposed = len(state)
            accepted = self._relocate(state, rng)
        state.iteration += 1
        if self.validate_cache and accepted:
            self._check_cache(state)
        return StepOutcome(move, proposed, accepted)

    def run(self, initial, iterations: int, burn_in: int = 0, thin: int = 1, seed: int = 0, chain: int = 0) -> SampleSet:
        if burn_in < 0 or thin < 1 or iterations <= burn_in:
            raise InvalidSpec(f"Need iterations > burn_in >= 0 and thin >= 1, got {iterations}, {burn_in}, {thin}")
        rng = np.random.default_rng(seed)
        state = self.initial_state(initial)
        diagnostics = MoveDiagnostics()
        diagrams, recorded = [], []
        trace = {name: [] for name in TRACE_COLUMNS}

        for _ in range(iterations):
            outcome = self.step(state, rng)
            diagnostics.record(outcome.move, outcome.proposed, outcome.accepted)
            t = state.iteration
            for name, value in zip(
                TRACE_COLUMNS,
                (chain, t, outcome.move, outcome.proposed, outcome.accepted, len(state), state.log_potential_cache),
            ):
                trace[name].append(value)
            if t > burn_in and (t - burn_in) % thin == 0:
                diagrams.append(state.diagram)
                recorded.append(t)

        logger.info(
            "Chain %d: %d iterations, %d recorded; acceptance add=%.3f remove=%.3f relocate=%.3f",
            chain, iterations, len(diagrams),
            diagnostics.acceptance_rate(ADD),
            diagnostics.acceptance_rate(REMOVE),
            diagnostics.acceptance_rate(RELOCATE),
        )
        return SampleSet(diagrams, recorded, [chain] * len(diagrams), diagnostics, pd.DataFrame(trace, columns=TRACE_COLUMNS))


def run_rjmcmc(
    initial,
    model: PcpiModel,
    moves: MoveProbabilities,
    q: Optional[ProposalMixture],
    iterations: int,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    max_points: Optional[int] = None,
    validate_cache: bool = False,
) -> SampleSet:
    sampler = PdSampler(model, moves, q, max_points=max_points, validate_cache=validate_cache)
    return sampler.run(initial, iterations, burn_in=burn_in, thin=thin, seed=seed)


def run_mwg(
    initial,
    model: PcpiModel,
    q: ProposalMixture,
    iterations: int,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    validate_cache: bool = False,
) -> SampleSet:
    """Relocation sweeps only; the cardinality never changes."""
    return run_rjmcmc(
        initial, model, MoveProbabilities.relocation_only(), q, iterations,
        burn_in=burn_in, thin=thin, seed=seed, validate_cache=validate_cache,
    )


def run_add_remove(
    initial,
    model: PcpiModel,
    p_a: float = 0.5,
    iterations: int = 1000,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    max_points: Optional[int] = None,
    validate_cache: bool = False,
) -> SampleSet:
    if not 0.0 < p_a < 1.0:
        raise InvalidSpec(f"p_a must lie strictly between 0 and 1, got {p_a}")
    return run_rjmcmc(
        initial, model, MoveProbabilities.birth_death(p_a), None, iterations,
        burn_in=burn_in, thin=thin, seed=seed, max_points=max_points, validate_cache=validate_cache,
    )


def _run_chain(sampler: PdSampler, initial, iterations: int, burn_in: int, thin: int, seed: int, chain: int) -> SampleSet:
    return sampler.run(initial, iterations, burn_in=burn_in, thin=thin, seed=seed, chain=chain)


def run_chains(
    initial,
    model: PcpiModel,
    moves: MoveProbabilities,
    q: Optional[ProposalMixture],
    iterations: int,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    chains: int = 1,
    workers: int = 1,
    max_points: Optional[int] = None,
    validate_cache: bool = False,
) -> List[SampleSet]:
    """
    Run `chains` independent chains; chain k uses seed derive_seed(seed, CHAIN, k).
    Results come back ordered by chain index whatever the worker count.
    """
    if chains < 1:
        raise InvalidSpec(f"Need at least one chain, got {chains}")
    sampler = PdSampler(model, moves, q, max_points=max_points, validate_cache=validate_cache)
    seeds = [derive_seed(seed, CHAIN, k) for k in range(chains)]
    if workers > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chain, sampler, initial, iterations, burn_in, thin, seeds[k], k)
                for k in range(chains)
            ]
            return [f.result() for f in futures]
    return [_run_chain(sampler, initial, iterations, burn_in, thin, seeds[k], k) for k in range(chains)]
