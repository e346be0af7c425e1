import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.config_loader import ExperimentConfig, load_config
from src.errors import ConfigError, PdsimError
from src.fit.mple import FitResult, fit_mple
from src.fit.quadrature import QuadratureScheme, build_quadrature
from src.fit.robustness import robustness_study
from src.homology.diagram import PersistenceDiagram
from src.homology.point_cloud import PointCloud, sample_polar_curve
from src.homology.rips import vietoris_rips_diagram
from src.inference.order_statistics import sequential_test
from src.model.pcpi import PcpiModel
from src.plots import diagram_figure, iterates_figure, write_svg
from src.sampler.moves import MoveProbabilities
from src.sampler.rjmcmc import SampleSet, run_chains
from src.seeds import DUMMY, NOISE, derive_seed

logger = logging.getLogger("pdsim")


def _write_json(data, path) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def trace_path_for(samples_path) -> Path:
    p = Path(samples_path)
    return p.with_name(p.stem + ".trace.csv")


def cmd_generate(config: ExperimentConfig, out) -> Path:
    cloud = sample_polar_curve(config.curve_spec(), derive_seed(config.seed, NOISE, 0))
    cloud.to_csv(out)
    print(f"Sampled {len(cloud)} points from {cloud.label} -> {out}")
    return Path(out)


def cmd_pd(config: ExperimentConfig, cloud_path, out, dim: Optional[int] = None) -> Path:
    dim = config.homology_dim if dim is None else dim
    cloud = PointCloud.from_csv(cloud_path)
    diagram = vietoris_rips_diagram(cloud, dim=dim, max_scale=config.max_scale)
    diagram.to_csv(out)
    print(f"H{dim} diagram: {len(diagram)} points, {diagram.metadata['essential']} essential -> {out}")
    return Path(out)


def fitted_model(config: ExperimentConfig, fit: FitResult, Q: QuadratureScheme, tess) -> PcpiModel:
    """
    Sampling model from a fit, on the reference scale the fit used.
    Negative estimates are clipped to 0 (inhibition only).
    """
    theta = fit.theta_hat
    if (theta < 0).any():
        logger.warning("Clipping negative coefficient(s) %s to 0 for sampling", theta[theta < 0].tolist())
        theta = np.clip(theta, 0.0, None)
    return PcpiModel(config.interaction_thresholds(), theta, tess, Q.lambda_w, Q.spatial)


def cmd_fit(config: ExperimentConfig, pd_path, out) -> Path:
    diagram = PersistenceDiagram.from_csv(pd_path)
    window = config.window_spec()
    Q, tess = build_quadrature(
        diagram,
        config.dummy_spec(derive_seed(config.seed, DUMMY, 0)),
        window,
        config.interaction_thresholds(),
        lambda_w=config.lambda_w,
        spatial=config.spatial,
    )
    fit = fit_mple(Q)
    model = fitted_model(config, fit, Q, tess)
    _write_json({"fit": fit.to_dict(), "model": model.to_dict(), "quadrature_points": Q.m}, out)
    print(fit.table().to_string(index=False, float_format="%.4f"))
    print(f"Fit ({'converged' if fit.converged else 'NOT converged'}, {fit.iterations} iterations) -> {out}")
    return Path(out)


def variant_moves(config: ExperimentConfig, variant: str) -> MoveProbabilities:
    if variant == "rjmcmc":
        return config.move_probabilities()
    if variant == "mwg":
        return MoveProbabilities.relocation_only()
    if variant == "addremove":
        return MoveProbabilities.birth_death(0.5)
    raise PdsimError(f"Unknown sampler variant '{variant}'")


def load_fitted_model(fit_path) -> PcpiModel:
    with open(fit_path) as f:
        try:
            saved = json.load(f)
        except ValueError as exc:
            raise ConfigError(f"Fit file {fit_path} is not valid JSON: {exc}") from exc
    if not isinstance(saved, dict) or "model" not in saved:
        raise ConfigError(f"Fit file {fit_path} has no 'model' entry")
    return PcpiModel.from_dict(saved["model"])


def cmd_sample(config: ExperimentConfig, pd_path, fit_path, variant: str, out) -> Path:
    diagram = PersistenceDiagram.from_csv(pd_path)
    model = load_fitted_model(fit_path)
    moves = variant_moves(config, variant)
    q = config.proposal_mixture() if moves.p_m > 0 else None
    c = config.chain
    chains = run_chains(
        diagram, model, moves, q, c.iterations,
        burn_in=c.burn_in, thin=c.thin, seed=config.seed,
        chains=c.chains, workers=c.workers, validate_cache=c.validate_cache,
    )
    samples = SampleSet.concat(chains)
    samples.to_ndjson(out)
    samples.write_trace(trace_path_for(out))
    print(f"{variant}: {len(samples)} diagrams from {c.chains} chain(s) -> {out}")
    return Path(out)


def cmd_infer(config: ExperimentConfig, samples_path, pd_path, out) -> Path:
    samples = SampleSet.from_ndjson(samples_path)
    original = PersistenceDiagram.from_csv(pd_path)
    report = sequential_test(samples, original, alpha=config.alpha, max_rank=config.max_rank)
    report.to_csv(out)
    print(report.to_text())
    return Path(out)


def cmd_plot(config: ExperimentConfig, input_path, out) -> Path:
    if str(input_path).endswith(".ndjson"):
        fig = iterates_figure(SampleSet.from_ndjson(input_path), config.plot_iterates)
    else:
        fig = diagram_figure(PersistenceDiagram.from_csv(input_path), title=Path(input_path).stem)
    write_svg(fig, out)
    print(f"Plot -> {out}")
    return Path(out)


def cmd_robustness(config: ExperimentConfig, out_dir, replications: Optional[int] = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = robustness_study(
        config.curve_spec(),
        replications or config.robustness_replications,
        config.interaction_thresholds(),
        config.dummy_spec(0),
        config.seed,
        window=config.window_spec(),
        max_scale=config.max_scale,
        workers=config.chain.workers,
        lambda_w=config.lambda_w,
        spatial=config.spatial,
    )
    report.to_csv(out_dir / "robustness.csv", out_dir / "robustness_summary.csv")
    print(report.summary.to_string(index=False, float_format="%.4f"))
    print(f"All coefficients significant in {report.all_significant(config.alpha)} of {len(report.replicates)} replications")
    return out_dir


def cmd_run_all(config: ExperimentConfig, out_dir, plots: bool = True) -> Path:
    """generate -> pd -> fit -> sample + infer for each configured variant."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(config.to_dict(), out_dir / "config.json")
    cloud = cmd_generate(config, out_dir / "cloud.csv")
    pd_path = cmd_pd(config, cloud, out_dir / "pd.csv")
    fit_path = cmd_fit(config, pd_path, out_dir / "fit.json")
    if plots:
        cmd_plot(config, pd_path, out_dir / "pd.svg")
    for variant in config.variants:
        samples = cmd_sample(config, pd_path, fit_path, variant, out_dir / f"samples_{variant}.ndjson")
        cmd_infer(config, samples, pd_path, out_dir / f"report_{variant}.csv")
        if plots:
            if max(config.plot_iterates) <= config.chain.iterations:
                cmd_plot(config, samples, out_dir / f"iterates_{variant}.svg")
            else:
                logger.warning("Skipping iterate plot: chain shorter than %s", config.plot_iterates)
    return out_dir


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="Global seed (overrides config)")

    parser = argparse.ArgumentParser(prog="pdsim", description="Fit and sample point-process models of persistence diagrams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Sample a noisy polar-curve point cloud")
    p.add_argument("--out", default="cloud.csv")

    p = sub.add_parser("pd", parents=[common], help="Vietoris-Rips persistence diagram of a cloud")
    p.add_argument("cloud")
    p.add_argument("--dim", type=int, choices=[0, 1])
    p.add_argument("--out", default="pd.csv")

    p = sub.add_parser("fit", parents=[common], help="Maximum pseudolikelihood fit of a diagram")
    p.add_argument("pd")
    p.add_argument("--out", default="fit.json")

    p = sub.add_parser("sample", parents=[common], help="Sample diagrams from a fitted model")
    p.add_argument("pd")
    p.add_argument("fit")
    p.add_argument("--variant", default="rjmcmc", choices=["rjmcmc", "mwg", "addremove"])
    p.add_argument("--out", default="samples.ndjson")

    p = sub.add_parser("infer", parents=[common], help="Sequential order-statistic tests")
    p.add_argument("samples")
    p.add_argument("pd")
    p.add_argument("--out", default="report.csv")

    p = sub.add_parser("plot", parents=[common], help="SVG of a diagram or of sampled iterates")
    p.add_argument("input")
    p.add_argument("--out", default="plot.svg")

    p = sub.add_parser("run-all", parents=[common], help="Whole pipeline into one directory")
    p.add_argument("--out", default="results")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("robustness", parents=[common], help="Repeat the fit over independent clouds")
    p.add_argument("--replications", type=int)
    p.add_argument("--out", default="robustness")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed=args.seed)
        logging.basicConfig(
            level=getattr(logging, config.log_level, logging.INFO),
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command == "generate":
            cmd_generate(config, args.out)
        elif args.command == "pd":
            cmd_pd(config, args.cloud, args.out, dim=args.dim)
        elif args.command == "fit":
            cmd_fit(config, args.pd, args.out)
        elif args.command == "sample":
            cmd_sample(config, args.pd, args.fit, args.variant, args.out)
        elif args.command == "infer":
            cmd_infer(config, args.samples, args.pd, args.out)
        elif args.command == "plot":
            cmd_plot(config, args.input, args.out)
        elif args.command == "run-all":
            cmd_run_all(config, args.out, plots=not args.no_plots)
        elif args.command == "robustness":
            cmd_robustness(config, args.out, replications=args.replications)
    except PdsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
