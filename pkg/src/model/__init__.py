from src.model.mixture import GaussianMixture
from src.model.pcpi import (
    InteractionThresholds,
    PcpiModel,
    interaction_covariates,
    log_conditional_intensity,
    log_potential,
    pcpi,
)

__all__ = [
    "GaussianMixture",
    "InteractionThresholds",
    "PcpiModel",
    "interaction_covariates",
    "log_conditional_intensity",
    "log_potential",
    "pcpi",
]
