from src.fit.mple import (
    FitResult,
    fit_mple,
    log_pseudolikelihood,
    log_pseudolikelihood_direct,
    pseudolikelihood_gradient,
    pseudolikelihood_hessian,
)
from src.fit.quadrature import DummyPointSpec, QuadratureScheme, build_quadrature, default_mixture
from src.fit.robustness import RobustnessReport, robustness_study

__all__ = [
    "DummyPointSpec",
    "FitResult",
    "QuadratureScheme",
    "RobustnessReport",
    "build_quadrature",
    "default_mixture",
    "fit_mple",
    "log_pseudolikelihood",
    "log_pseudolikelihood_direct",
    "pseudolikelihood_gradient",
    "pseudolikelihood_hessian",
    "robustness_study",
]
