import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.errors import ConfigError, PdsimError
from src.fit.quadrature import DummyPointSpec, default_mixture
from src.geometry.tessellation import SPATIAL_TERMS, Window
from src.homology.point_cloud import PolarCurveSpec
from src.model.mixture import GaussianMixture
from src.model.pcpi import InteractionThresholds
from src.sampler.moves import MoveProbabilities

VARIANTS = ("rjmcmc", "mwg", "addremove")


@dataclass
class WindowConfig:
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0


@dataclass
class CurveConfig:
    a: float = 0.5
    b: float = 1.0
    n: int = 100
    noise_sd: float = 0.1


@dataclass
class DummyConfig:
    scheme: str = "mixture"
    count: int = 20
    grid_size: int = 10
    mixture: Dict[str, Any] = field(default_factory=default_mixture)


@dataclass
class MovesConfig:
    p_a: float = 0.35
    p_r: float = 0.35
    p_m: float = 0.3


@dataclass
class ChainConfig:
    iterations: int = 1000
    burn_in: int = 0
    thin: int = 1
    chains: int = 1
    workers: int = 1
    validate_cache: bool = False


@dataclass
class ExperimentConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    curve: CurveConfig = field(default_factory=CurveConfig)
    thresholds: List[float] = field(default_factory=lambda: [0.1, 0.2, 0.3])
    dummy: DummyConfig = field(default_factory=DummyConfig)
    moves: MovesConfig = field(default_factory=MovesConfig)
    proposal: Dict[str, Any] = field(default_factory=default_mixture)
    lambda_w: Optional[float] = None
    spatial: str = "density"
    chain: ChainConfig = field(default_factory=ChainConfig)
    alpha: float = 0.05
    max_rank: int = 5
    seed: int = 0
    max_scale: Optional[float] = None
    homology_dim: int = 1
    variants: List[str] = field(default_factory=lambda: list(VARIANTS))
    plot_iterates: List[int] = field(default_factory=lambda: [100, 500])
    robustness_replications: int = 100
    log_level: str = "INFO"

    # domain objects

    def window_spec(self) -> Window:
        return Window(**asdict(self.window))

    def curve_spec(self) -> PolarCurveSpec:
        return PolarCurveSpec(**asdict(self.curve))

    def interaction_thresholds(self) -> InteractionThresholds:
        return InteractionThresholds(self.thresholds)

    def dummy_spec(self, seed: int) -> DummyPointSpec:
        return DummyPointSpec(
            count=self.dummy.count,
            mixture=self.dummy.mixture,
            seed=seed,
            scheme=self.dummy.scheme,
            grid_size=self.dummy.grid_size,
        )

    def move_probabilities(self) -> MoveProbabilities:
        return MoveProbabilities(**asdict(self.moves))

    def proposal_mixture(self) -> GaussianMixture:
        return GaussianMixture.from_dict(self.proposal, self.window_spec())

    def validate(self) -> "ExperimentConfig":
        """Build every domain object once; any invariant violation becomes a ConfigError."""
        try:
            self.window_spec()
            self.curve_spec()
            self.interaction_thresholds()
            self.dummy_spec(0)
            self.move_probabilities()
            self.proposal_mixture()
            GaussianMixture.from_dict(self.dummy.mixture, self.window_spec())
        except PdsimError as exc:
            raise ConfigError(f"Invalid configuration: {exc}") from exc
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"Malformed configuration section: {exc}") from exc
        c = self.chain
        if c.iterations <= c.burn_in or c.burn_in < 0 or c.thin < 1 or c.chains < 1 or c.workers < 1:
            raise ConfigError(f"Invalid chain settings {asdict(c)}")
        if self.lambda_w is not None and not self.lambda_w > 0:
            raise ConfigError(f"lambda_w must be positive, got {self.lambda_w}")
        if self.spatial not in SPATIAL_TERMS:
            raise ConfigError(f"spatial must be one of {SPATIAL_TERMS}, got {self.spatial!r}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.max_rank < 1:
            raise ConfigError(f"max_rank must be at least 1, got {self.max_rank}")
        if self.homology_dim not in (0, 1):
            raise ConfigError(f"homology_dim must be 0 or 1, got {self.homology_dim}")
        if self.max_scale is not None and not self.max_scale > 0:
            raise ConfigError(f"max_scale must be positive, got {self.max_scale}")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"Unknown sampler variant(s) {unknown}, expected {VARIANTS}")
        if self.robustness_replications < 2:
            raise ConfigError("robustness_replications must be at least 2")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        return _merge(cls(), data)


_SECTIONS = {
    "window": WindowConfig,
    "curve": CurveConfig,
    "dummy": DummyConfig,
    "moves": MovesConfig,
    "chain": ChainConfig,
}


def _merge(config: ExperimentConfig, data: Dict[str, Any]) -> ExperimentConfig:
    """Overlay `data` on `config` key by key; unknown keys are rejected."""
    known = {f.name for f in fields(ExperimentConfig)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"Unknown configuration key '{key}'")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"Configuration section '{key}' must be an object")
            section = getattr(config, key)
            section_keys = {f.name for f in fields(_SECTIONS[key])}
            for sub_key, sub_value in value.items():
                if sub_key not in section_keys:
                    raise ConfigError(f"Unknown configuration key '{key}.{sub_key}'")
                setattr(section, sub_key, sub_value)
        else:
            setattr(config, key, value)
    return config


def _env_overrides() -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    try:
        if os.getenv("PDSIM_SEED"):
            overrides["seed"] = int(os.getenv("PDSIM_SEED"))
        if os.getenv("PDSIM_ITERATIONS"):
            overrides["chain"] = {"iterations": int(os.getenv("PDSIM_ITERATIONS"))}
    except ValueError as exc:
        raise ConfigError(f"Bad numeric environment override: {exc}") from exc
    if os.getenv("PDSIM_LOG_LEVEL"):
        overrides["log_level"] = os.getenv("PDSIM_LOG_LEVEL").upper()
    return overrides


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults, then .env / environment, then the JSON file at `path`, then keyword overrides."""
    load_dotenv()

    config = _merge(ExperimentConfig(), _env_overrides())
    if path is not None:
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        config = _merge(config, data)
    config = _merge(config, {k: v for k, v in overrides.items() if v is not None})
    return config.validate()
