"""
Repeat the cloud -> H1 diagram -> fit pipeline over independent replications
and summarise how stable the estimated coefficients are.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.errors import InvalidSpec, PdsimError
from src.fit.mple import fit_mple
from src.fit.quadrature import DummyPointSpec, build_quadrature
from src.geometry.tessellation import Window
from src.homology.point_cloud import PolarCurveSpec, sample_polar_curve
from src.homology.rips import vietoris_rips_diagram
from src.model.pcpi import InteractionThresholds
from src.seeds import DUMMY, NOISE, derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RobustnessReport:
    replicates: pd.DataFrame
    summary: pd.DataFrame

    @property
    def failures(self) -> int:
        return int(self.replicates["error"].notna().sum())

    def all_significant(self, alpha: float = 0.05) -> int:
        """Replications in which every coefficient is significant at `alpha`."""
        p = self.replicates.filter(regex=r"^p_\d+$").to_numpy(dtype=float)
        return int(np.sum((p < alpha).all(axis=1)))

    def to_csv(self, replicates_path, summary_path) -> None:
        self.replicates.to_csv(replicates_path, index=False)
        self.summary.to_csv(summary_path, index=False)


def _replicate(
    index: int,
    curve: PolarCurveSpec,
    thresholds: InteractionThresholds,
    dummy: DummyPointSpec,
    seed: int,
    window: Window,
    max_scale: Optional[float],
    lambda_w: Optional[float],
    spatial: str,
) -> Dict[str, Any]:
    row: Dict[str, Any] = {"replication": index}
    k = thresholds.k
    try:
        cloud = sample_polar_curve(curve, derive_seed(seed, NOISE, index))
        diagram = vietoris_rips_diagram(cloud, dim=1, max_scale=max_scale)
        dummy_i = replace(dummy, seed=derive_seed(seed, DUMMY, index))
        Q, _ = build_quadrature(diagram, dummy_i, window, thresholds, lambda_w=lambda_w, spatial=spatial)
        fit = fit_mple(Q)
    except PdsimError as exc:
        logger.warning("Replication %d failed: %s", index, exc)
        row.update({f"theta_{l + 1}": np.nan for l in range(k)})
        row.update({f"p_{l + 1}": np.nan for l in range(k)})
        row.update({"n_points": np.nan, "converged": False, "error": f"{type(exc).__name__}: {exc}"})
        return row

    row.update({f"theta_{l + 1}": float(fit.theta_hat[l]) for l in range(k)})
    row.update({f"p_{l + 1}": float(fit.p_values[l]) for l in range(k)})
    row.update({"n_points": len(diagram), "converged": fit.converged, "error": None})
    return row


def _summarise(replicates: pd.DataFrame, k: int, alpha: float = 0.05) -> pd.DataFrame:
    rows = []
    for l in range(1, k + 1):
        theta = replicates[f"theta_{l}"].to_numpy(dtype=float)
        p = replicates[f"p_{l}"].to_numpy(dtype=float)
        ok = ~np.isnan(theta)
        if ok.any():
            low, high = np.nanpercentile(theta, [2.5, 97.5])
            mean = float(np.nanmean(theta))
            significant = float(np.mean(p[ok] < alpha))
        else:
            low = high = mean = significant = np.nan
        rows.append({
            "parameter": f"theta_{l}",
            "mean": mean,
            "ci_low": float(low),
            "ci_high": float(high),
            "significant_fraction": significant,
            "replications": int(ok.sum()),
        })
    return pd.DataFrame(rows)


def robustness_study(
    curve: PolarCurveSpec,
    replications: int,
    thresholds: InteractionThresholds,
    dummy: DummyPointSpec,
    seed: int,
    window: Window = Window(),
    max_scale: Optional[float] = None,
    workers: int = 1,
    lambda_w: Optional[float] = None,
    spatial: str = "density",
) -> RobustnessReport:
    """
    Fit `replications` independently sampled clouds.
    A replication whose fit raises a domain error is kept as a NaN row with
    the error message; the summary only averages the successful ones.
    """
    if replications < 2:
        raise InvalidSpec(f"A robustness study needs at least 2 replications, got {replications}")

    args = [(i, curve, thresholds, dummy, seed, window, max_scale, lambda_w, spatial) for i in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replicate, *zip(*args)))
    else:
        rows = [_replicate(*a) for a in args]

    replicates = pd.DataFrame(rows).sort_values("replication").reset_index(drop=True)
    report = RobustnessReport(replicates, _summarise(replicates, thresholds.k))
    logger.info("Robustness study: %d replications, %d failed", replications, report.failures)
    return report
