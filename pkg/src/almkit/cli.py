"""Command-line entry points for the three experiment pipelines.

Subcommands: ``control`` (budget-constrained control runs), ``denoise``
(multiscale Poisson denoising), and ``quantile`` (Monte-Carlo
calibration of the constraint quantile). Every run writes a JSON
manifest with the fully resolved configuration; re-running with the
same parameters reproduces all data artifacts byte for byte. Exit
codes: 0 success, 1 usage or input error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .alm import trace_csv_rows
from .control import ControlConfig, solve_sparse_control, verify_kkt
from .denoise import (
    BoxSystem,
    CountsGrid,
    DenoiseConfig,
    METRICS_HEADER,
    denoise,
    empirical_quantile,
    estimate_quantile,
    sample_max_statistics,
    simulate_counts,
    synthetic_image,
)
from .numkit import Rng

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2

VERSION = "almkit-0.1.0"


class UsageError(ValueError):
    """Invalid flags or unreadable input; maps to exit code 1."""


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int, started: float,
                    reason: str, metrics: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "version": VERSION,
        "seed": seed,
        "wall_clock_seconds": time.time() - started,
        "termination_reason": reason,
        "headline_metrics": metrics,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    json.loads(path.read_text())  # manifest must re-parse losslessly


def _ensure_out(raw: str) -> Path:
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_control(args: argparse.Namespace) -> int:
    if args.kappa <= 0.0:
        raise UsageError(f"--kappa must be positive, got {args.kappa}")
    started = time.time()
    out = _ensure_out(args.out)
    config = ControlConfig(
        mesh_m=args.mesh_m,
        sigma=args.sigma,
        rho0=args.rho0,
        tau=args.tau,
        gamma=args.gamma,
    )
    result = solve_sparse_control(args.kappa, config)
    trace = result.alm.state.trace

    rows = [f"{k},{inner},{rho!r},{v!r}" for k, inner, rho, v, _ in trace]
    io.write_csv(out / "trace.csv", "k,ell,rho,V", rows)
    fem = result.fem
    meta = {"mesh_m": fem.m, "interior_nodes": fem.n_interior}
    io.write_f64(out / "control_u.f64", result.iterate.u, meta)
    io.write_f64(out / "state_y.f64", result.iterate.y, meta)
    io.write_f64(out / "adjoint_p.f64", result.iterate.p, meta)
    if args.render_pgm:
        image = fem.interior_image(np.abs(result.iterate.u))
        io.write_pgm(out / "control_u.pgm", io.quantize_image(image))

    report = verify_kkt(result, args.kappa, config.sigma, fem, 1e-6)
    resolved = {
        "kappa": args.kappa,
        "mesh_m": args.mesh_m,
        "sigma": args.sigma,
        "rho0": args.rho0,
        "tau": args.tau,
        "gamma": args.gamma,
        "seed": args.seed,
    }
    metrics = {
        "outer_iterations": len(trace),
        "final_V": trace[-1][3],
        "control_l1": result.control_l1,
        "multiplier": result.lambda_final,
        "constraint_active": result.lambda_final > 0.0,
        "kkt_passed": report.passed,
    }
    _write_manifest(out, "control", resolved, args.seed, started, result.alm.reason, metrics)
    print(
        f"control kappa={args.kappa}: {result.alm.reason} after {len(trace)} outer iterations, "
        f"V={trace[-1][3]!r}, l1={result.control_l1!r}"
    )
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def _load_counts(args: argparse.Namespace) -> CountsGrid:
    if (args.input is None) == (args.synthetic is None):
        raise UsageError("exactly one of --input or --synthetic is required")
    if args.synthetic is not None:
        truth = synthetic_image(args.synthetic, args.n, peak=args.peak)
        return simulate_counts(truth, Rng(args.seed).spawn(0))
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"input file not found: {path}")
    try:
        if path.suffix == ".f64":
            values, _ = io.read_f64(path)
        else:
            pixels, maxval = io.read_pgm(path)
            peak = args.peak if args.peak is not None else 20.0 * pixels.shape[0] ** 2
            values = pixels.astype(np.float64) / maxval * peak
    except ValueError as err:
        raise UsageError(str(err)) from err
    n = values.shape[0]
    if values.ndim != 2 or values.shape[0] != values.shape[1] or n & (n - 1):
        raise UsageError(f"input must be square with power-of-two side, got {values.shape}")
    from .denoise import IntensityGrid

    truth = IntensityGrid(n, np.maximum(values, 0.0))
    return simulate_counts(truth, Rng(args.seed).spawn(0))


def cmd_denoise(args: argparse.Namespace) -> int:
    started = time.time()
    counts = _load_counts(args)
    out = _ensure_out(args.out)
    config = DenoiseConfig(
        alpha=args.alpha,
        q_tilde=args.qtilde,
        r_shift=args.r_shift,
        seed=args.seed,
        mc_samples=args.mc_samples,
        max_outer_iterations=args.max_outer,
    )
    result = denoise(counts, config)

    io.write_f64(
        out / "reconstruction.f64",
        result.reconstruction.values,
        {"n": result.reconstruction.n, "units": "intensity-per-unit-area"},
    )
    io.write_pgm(out / "reconstruction.pgm", io.quantize_image(result.reconstruction.values))
    io.write_csv(out / "metrics.csv", METRICS_HEADER, [m.csv() for m in result.metrics])

    resolved = {
        "n": counts.n,
        "alpha": args.alpha,
        "q_tilde": result.q_tilde,
        "r_shift": args.r_shift,
        "seed": args.seed,
        "mc_samples": args.mc_samples,
        "max_outer": args.max_outer,
        "input": args.input,
        "synthetic": args.synthetic,
        "peak": args.peak,
    }
    last = result.metrics[-1]
    metrics = {
        "outer_iterations": len(result.metrics),
        "final_V": last.V,
        "violated_fraction": last.violated_fraction,
        "constraints": result.box_count,
        "initial_f": result.initial_f,
        "final_f": last.f,
    }
    _write_manifest(out, "denoise", resolved, args.seed, started, result.alm.reason, metrics)
    print(
        f"denoise n={counts.n}: {result.alm.reason} after {len(result.metrics)} outer "
        f"iterations, V={last.V!r}, violated={last.violated_fraction!r}"
    )
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_quantile(args: argparse.Namespace) -> int:
    if args.samples < 100:
        raise UsageError(f"--samples must be at least 100, got {args.samples}")
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    started = time.time()
    out = _ensure_out(args.out)
    system = BoxSystem(args.n)
    samples = sample_max_statistics(system, args.samples, Rng(args.seed).spawn(1))
    q = empirical_quantile(samples, args.alpha)
    io.write_csv(
        out / "max_statistics.csv",
        "replication,value",
        [f"{i},{v!r}" for i, v in enumerate(samples)],
    )
    resolved = {"n": args.n, "alpha": args.alpha, "samples": args.samples, "seed": args.seed}
    _write_manifest(
        out, "quantile", resolved, args.seed, started, "completed", {"q_tilde": q}
    )
    print(f"q_tilde({1 - args.alpha:g}) = {q!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="almkit",
        description="Constrained reconstruction experiments: sparse control and Poisson denoising.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    control = sub.add_parser("control", help="solve the budget-constrained control problem")
    control.add_argument("--kappa", type=float, required=True, help="l1 budget for the control")
    control.add_argument("--rho0", type=float, default=1e-4)
    control.add_argument("--tau", type=float, default=0.1)
    control.add_argument("--gamma", type=float, default=2.0)
    control.add_argument("--mesh-m", type=int, default=32, dest="mesh_m")
    control.add_argument("--sigma", type=float, default=1e-2)
    control.add_argument("--seed", type=int, default=0)
    control.add_argument("--out", default="out/control")
    control.add_argument("--render-pgm", action="store_true", dest="render_pgm")
    control.set_defaults(func=cmd_control)

    den = sub.add_parser("denoise", help="denoise Poisson count data")
    den.add_argument("--input", help="PGM (P5) or .f64 intensity image to corrupt and denoise")
    den.add_argument("--synthetic", choices=["flat", "blocks", "ramp"])
    den.add_argument("--n", type=int, default=64, help="grid side for synthetic images")
    den.add_argument("--peak", type=float, default=None, help="peak intensity of the truth")
    den.add_argument("--alpha", type=float, default=0.1)
    den.add_argument("--qtilde", type=float, default=None)
    den.add_argument("--r-shift", type=float, default=0.0, dest="r_shift")
    den.add_argument("--mc-samples", type=int, default=1000, dest="mc_samples")
    den.add_argument("--max-outer", type=int, default=80, dest="max_outer")
    den.add_argument("--seed", type=int, default=0)
    den.add_argument("--out", default="out/denoise")
    den.set_defaults(func=cmd_denoise)

    quant = sub.add_parser("quantile", help="calibrate the constraint quantile")
    quant.add_argument("--n", type=int, required=True)
    quant.add_argument("--alpha", type=float, default=0.1)
    quant.add_argument("--samples", type=int, required=True)
    quant.add_argument("--seed", type=int, default=0)
    quant.add_argument("--out", default="out/quantile")
    quant.set_defaults(func=cmd_quantile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
