"""
cli.py - Command-line front end
Subcommands simulate, check, design, fragility, verify and contour. Reports are
JSON (fixed key order, no timestamps), or .xlsx when --out ends in .xlsx;
--pdf additionally renders a summary document.

Exit codes: 0 success / feasible / verified, 2 infeasible / unverified,
1 usage, file or numerical error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from analysis import (
    DEFAULTS, generate_trajectory, run_check, run_contour, run_design, run_fragility, run_verify,
)
from core.benchmarks import preset
from core.contour import parse_grid
from core.data_model import NoiseModel, SystemModel, TrajectoryData
from core.exceptions import NoiseModelError
from core.files import (
    DatasetFile, GainFile, SimulationSpec, SystemFile, dumps, load_dataset, load_model, load_noise_spec,
    noise_model_from, save_dataset, save_json,
)
from core.parallel import default_workers
from core.settings import PINV_RTOL, VERIFY_SAMPLES, Tolerances, default_solver_settings

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

PASSING_STATUSES = ("Certified", "Immune")


class UsageError(Exception):
    """Missing or conflicting command-line inputs."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; 2 is reserved for negative results here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="dataset JSON or CSV (t,u1..um,x1..xn)")
    p.add_argument("--noise", help="noise model JSON (norm_bound, general or noise_free)")
    p.add_argument("--system", help='system JSON {"A": [[...]], "B": [[...]]}')
    p.add_argument("--gain", help='gain JSON {"K": [[...]]}; fragility reports are accepted')
    p.add_argument("--preset", choices=["example2", "example3", "example4"],
                   help="use a built-in system / dataset / noise model")
    p.add_argument("--out", help="output path (.json, .csv or .xlsx); stdout when omitted")
    p.add_argument("--pdf", help="also render a PDF summary")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=PINV_RTOL, help="rank / pseudoinverse cutoff")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fragility",
                     description="Data-driven and model-based fragility of state feedback gains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a dataset from a system and a simulation spec")
    _common(p)
    p.add_argument("--spec", help="simulation spec JSON (T, x0, input, disturbance)")

    p = sub.add_parser("check", help="boundedness, fragility class and informativity of a dataset")
    _common(p)
    p.add_argument("--method", choices=["full", "reduced"], default=DEFAULTS["method"])

    p = sub.add_parser("design", help="certified gain from data, or membership test of --gain")
    _common(p)
    p.add_argument("--method", choices=["full", "reduced"], default=DEFAULTS["method"])

    p = sub.add_parser("fragility", help="fragility radius of a given or optimal gain")
    _common(p)
    p.add_argument("--mode", choices=["model-k", "model-opt", "data-k", "data-opt"], required=True)
    p.add_argument("--samples", type=int, default=VERIFY_SAMPLES, help="verification samples")
    p.add_argument("--mu", action="store_true", help="attach a sampled stability-radius bracket")

    p = sub.add_parser("verify", help="sample perturbations inside 0.99 lambda")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=float, help="radius to verify (default: from --gain)")
    p.add_argument("--samples", type=int, default=VERIFY_SAMPLES)
    p.add_argument("--target", choices=["model", "data"],
                   help="sample the system alone or Sigma_D (default: from the report kind, else data when given)")

    p = sub.add_parser("contour", help="radius over a grid of two-entry gains")
    _common(p)
    p.add_argument("--mode", choices=["model", "data"], required=True)
    p.add_argument("--grid", required=True, help='"k1min:k1max:steps,k2min:k2max:steps"')
    p.add_argument("--workers", type=int, default=default_workers())
    return parser


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def _preset(args) -> Dict[str, Any]:
    return preset(args.preset, seed=args.seed) if args.preset else {}


def _system(args, required: bool = True) -> Optional[SystemModel]:
    if args.system:
        return load_model(args.system, SystemFile).to_system()
    found = _preset(args).get("system")
    if found is None and required:
        raise UsageError("--system (or --preset) is required")
    return found


def _data_and_noise(args, required: bool = True):
    if args.dataset:
        data: TrajectoryData = load_dataset(args.dataset)
        if not args.noise:
            raise UsageError("--noise is required with --dataset")
        noise: NoiseModel = noise_model_from(load_noise_spec(args.noise), data.n, data.T)
        return data, noise
    found = _preset(args)
    if "data" not in found:
        if required:
            raise UsageError("--dataset and --noise (or --preset) are required")
        return None, None
    return found["data"], found["noise"]


def _gain(args, required: bool = True) -> Optional[GainFile]:
    if not args.gain:
        if required:
            raise UsageError("--gain is required")
        return None
    return load_model(args.gain, GainFile)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _emit(args, title: str, outputs: Dict[str, Any], warnings: List[str]) -> None:
    payload = dict(outputs)
    payload["seed"] = args.seed
    payload["warnings"] = list(dict.fromkeys(warnings))
    for w in payload["warnings"]:
        logger.warning(w)

    if args.out and args.out.lower().endswith(".xlsx"):
        from excel_export import create_report_workbook
        create_report_workbook(args.out, title, payload, payload["warnings"])
    elif args.out:
        save_json(args.out, payload)
    else:
        sys.stdout.write(dumps(payload))

    if args.pdf:
        from pdf_report import build_pdf
        build_pdf(args.pdf, title, payload, payload["warnings"])


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.preset and not args.spec:
        data = _preset(args)["data"]
        warnings: List[str] = []
    else:
        if not args.spec:
            raise UsageError("--spec (or --preset) is required")
        system = _system(args)
        spec = load_model(args.spec, SimulationSpec)
        noise = None
        if args.noise:
            noise = noise_model_from(load_noise_spec(args.noise), system.n, spec.T)
        try:
            data, warnings = generate_trajectory(system, spec, noise, seed=args.seed)
        except NoiseModelError as exc:
            logger.error(f"dataset not written: {exc}")
            return EXIT_NEGATIVE
    for w in warnings:
        logger.warning(w)
    if args.out:
        save_dataset(args.out, data)
    else:
        sys.stdout.write(dumps(DatasetFile.from_trajectory(data).model_dump(exclude_none=True)))
    return EXIT_OK


def cmd_check(args) -> int:
    tolerances = Tolerances(pinv_rtol=args.tol)
    data, noise = _data_and_noise(args)
    outputs, warnings, _ = run_check(data, noise, args.method, default_solver_settings(),
                                     tol=tolerances.pinv_rtol)
    _emit(args, "Informativity check", outputs, warnings)
    return EXIT_OK if outputs["informative"] else EXIT_NEGATIVE


def cmd_design(args) -> int:
    data, noise = _data_and_noise(args)
    gain = _gain(args, required=False)
    outputs, warnings, ok = run_design(data, noise, args.method,
                                       K=None if gain is None else gain.gain(),
                                       settings=default_solver_settings())
    _emit(args, "Gain design", outputs, warnings)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_fragility(args) -> int:
    model = args.mode.startswith("model")
    system = _system(args) if model else None
    data, noise = (None, None) if model else _data_and_noise(args)
    K = _gain(args).gain() if args.mode.endswith("-k") else None
    outputs, warnings, report = run_fragility(
        args.mode, system=system, data=data, noise=noise, K=K,
        settings=default_solver_settings(), seed=args.seed, samples=args.samples, with_mu=args.mu,
    )
    _emit(args, f"Fragility report ({args.mode})", outputs, warnings)
    if report.status == "NumericalFailure":
        return EXIT_ERROR
    return EXIT_OK if report.status in PASSING_STATUSES else EXIT_NEGATIVE


def _verify_target(args, gain: GainFile) -> str:
    if args.target:
        return args.target
    kind = gain.kind or ""
    if kind.startswith("Model") and (args.system or args.preset):
        return "model"
    if kind.startswith("Data"):
        return "data"
    has_data = bool(args.dataset) or "data" in _preset(args)
    return "data" if has_data else "model"


def cmd_verify(args) -> int:
    gain = _gain(args)
    lam = args.lam if args.lam is not None else gain.lam
    if lam is None:
        raise UsageError("no radius: pass --lambda or a gain file carrying 'lambda'")
    target = _verify_target(args, gain)
    system, data, noise = None, None, None
    if target == "model":
        system = _system(args)
    else:
        data, noise = _data_and_noise(args)
    outputs, warnings = run_verify(gain.gain(), lam, system=system, data=data, noise=noise,
                                   samples=args.samples, seed=args.seed, delta=gain.delta())
    _emit(args, "Perturbation sampling", outputs, warnings)
    return EXIT_OK if outputs["passed"] else EXIT_NEGATIVE


def cmd_contour(args) -> int:
    try:
        axes = parse_grid(args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.mode == "model":
        result, warnings = run_contour("model", axes, system=_system(args), workers=args.workers,
                                       settings=default_solver_settings())
    else:
        data, noise = _data_and_noise(args)
        result, warnings = run_contour("data", axes, data=data, noise=noise, workers=args.workers,
                                       settings=default_solver_settings())
    for w in warnings:
        logger.warning(w)

    frame = result.to_frame()
    out = args.out or ""
    if out.lower().endswith(".xlsx"):
        from excel_export import create_contour_workbook
        create_contour_workbook(out, result, warnings)
    elif out.lower().endswith(".json"):
        k1, k2, lam = result.best() if result.certified_cells else (None, None, None)
        save_json(out, {
            "mode": result.mode,
            "k1": result.k1, "k2": result.k2,
            "lambda": np.where(np.isfinite(result.lam), result.lam, np.nan),
            "best": {"k1": k1, "k2": k2, "lambda": lam},
            "certified_cells": result.certified_cells,
            "warnings": warnings,
        })
    elif out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format="%.10g")
        logger.info(f"wrote {out}")
    else:
        frame.to_csv(sys.stdout, index=False, float_format="%.10g")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "check": cmd_check,
    "design": cmd_design,
    "fragility": cmd_fragility,
    "verify": cmd_verify,
    "contour": cmd_contour,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        # FragilityToolkitError and pydantic validation errors are ValueErrors
        logger.error(str(exc))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
