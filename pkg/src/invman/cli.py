"""Command-line front end.

Subcommands:

* ``check``    -- invariance verdicts for a configured system
* ``reduce``   -- sample the reduced coefficient matrix and verify conjugacy
* ``flow``     -- trajectory drift on both sides, JSON/CSV residual curves
* ``generate`` -- write a ground-truth scenario config with known verdicts

Exit codes: 0 success / requested assertion holds; 1 assertion or
precondition fails; 2 configuration problems; 3 numerical failures.
Set INVMAN_LOG=debug|info|warning to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    EvaluationError,
    FrameError,
    IntegrationOverflowError,
    InvmanError,
    ParseError,
    PreconditionError,
    RankDeficiencyError,
    ScenarioError,
    ShapeError,
    SingularMatrixError,
)
from .flow import run_flow
from .invariance import SystemSpec, reduced_matrix, verdicts
from .matexpr import MatrixFunction
from .scenario import Structure, random_scenario, to_config

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    SingularMatrixError,
    RankDeficiencyError,
    IntegrationOverflowError,
    EvaluationError,
    FrameError,
    ScenarioError,
)

log = logging.getLogger("invman")

_ASSERTION_FIELDS = {
    "joint": "joint_invariant",
    "mn": "main_invariant",
    "complement": "complement_kernel_condition",
}


@dataclass(frozen=True)
class RunOptions:
    tolerance: float
    h: float
    seed: int
    trials: int
    window: tuple[float, float]
    grid: dict
    expected_verdicts: dict | None


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing required config key {key!r}")
    return config[key]


def _matrix_from_config(config: dict, key: str, shape: tuple[int, int]) -> MatrixFunction:
    raw = _require(config, key)
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        raise ConfigError(f"config key {key!r} must be a 2-D array of expression strings")
    try:
        mf = MatrixFunction.build(raw)
    except ParseError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc
    if mf.shape != shape:
        raise ConfigError(f"config key {key!r} has shape {mf.shape}, expected {shape}")
    return mf


def load_config(path: str) -> tuple[SystemSpec, RunOptions]:
    """Parse and validate a JSON config into a system spec plus run options."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config {path!r} must be a JSON object")

    m = _require(config, "m")
    n = _require(config, "n")
    if not (isinstance(m, int) and isinstance(n, int) and 0 < n < m):
        raise ConfigError(f"dimensions must be integers with 0 < n < m, got m={m!r}, n={n!r}")

    coeff = _matrix_from_config(config, "coeff", (m, m))
    chart = _matrix_from_config(config, "chart", (n, m))
    comp = None
    if config.get("comp_chart") is not None:
        comp = _matrix_from_config(config, "comp_chart", (m - n, m))

    grid_cfg = config.get("grid", {"start": 0.0, "end": 5.0, "count": 201})
    try:
        start = float(grid_cfg["start"])
        end = float(grid_cfg["end"])
        count = int(grid_cfg["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"grid must provide numeric start/end/count: {exc}") from exc
    if count < 2 or end <= start:
        raise ConfigError("grid needs count >= 2 and end > start")

    tolerance = float(config.get("tolerance", 1e-8))
    h = float(config.get("step", 1e-3))
    seed = int(config.get("seed", 42))
    trials = int(config.get("trials", 5))
    window_cfg = config.get("window", [start, end])
    if not (isinstance(window_cfg, list) and len(window_cfg) == 2):
        raise ConfigError("window must be a [t0, t1] pair")
    if tolerance <= 0 or h <= 0 or trials < 1:
        raise ConfigError("tolerance and step must be positive, trials >= 1")

    try:
        spec = SystemSpec(
            coeff=coeff,
            chart=chart,
            comp_chart=comp,
            t_grid=np.linspace(start, end, count),
        )
    except (ShapeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    options = RunOptions(
        tolerance=tolerance,
        h=h,
        seed=seed,
        trials=trials,
        window=(float(window_cfg[0]), float(window_cfg[1])),
        grid={"start": start, "end": end, "count": count},
        expected_verdicts=config.get("expected_verdicts"),
    )
    return spec, options


def _emit_json(payload: dict, path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    spec, opts = load_config(args.config)
    report = verdicts(spec, opts.tolerance)
    payload = {"schema": "invman.check/1", "grid": opts.grid, **report.to_dict()}

    lines = [
        f"grid: {opts.grid['count']} points on [{opts.grid['start']:g}, {opts.grid['end']:g}], "
        f"tolerance {opts.tolerance:g}",
        f"max |defect|          {report.max_defect:.3e}   joint invariance        "
        f"{'PASS' if report.joint_invariant else 'FAIL'}",
        f"max |defect.P|        {report.max_defect_main:.3e}   subspace (mn) invariance "
        f"{'PASS' if report.main_invariant else 'FAIL'}",
        f"max |defect.(E-P)|    {report.max_defect_complement:.3e}   complement condition    "
        f"{'PASS' if report.complement_kernel_condition else 'FAIL'}",
    ]
    print("\n".join(lines))
    if args.json:
        _emit_json(payload, args.json)

    if args.assertion:
        holds = getattr(report, _ASSERTION_FIELDS[args.assertion])
        return EXIT_OK if holds else EXIT_VERDICT
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .flow import conjugacy_check  # local import keeps CLI startup cheap

    spec, opts = load_config(args.config)
    try:
        conj = conjugacy_check(spec, h=opts.h, t_span=opts.window, tol=opts.tolerance)
    except PreconditionError as exc:
        print(f"reduce: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    report = verdicts(spec, opts.tolerance)
    reduced = [reduced_matrix(spec, t).tolist() for t in spec.t_grid]
    payload = {
        "schema": "invman.reduce/1",
        "grid": opts.grid,
        "tolerance": opts.tolerance,
        "t": spec.t_grid.tolist(),
        "reduced": reduced,
        "conjugacy": {
            "window": [opts.window[0], opts.window[1]],
            "h": opts.h,
            "max_embedding_residual": conj.max_embedding_residual,
            "max_chart_residual": conj.max_chart_residual,
        },
        "verdicts": report.to_dict()["verdicts"],
    }
    _emit_json(payload, args.json)
    print(
        f"reduce: conjugacy residuals {conj.max_embedding_residual:.3e} / "
        f"{conj.max_chart_residual:.3e} on [{opts.window[0]:g}, {opts.window[1]:g}]",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_flow(args) -> int:
    spec, opts = load_config(args.config)
    result = run_flow(
        spec,
        h=opts.h,
        trials=opts.trials,
        seed=opts.seed,
        t_span=opts.window,
        tol=opts.tolerance,
    )
    payload = {"schema": "invman.flow/1", **result.to_dict()}
    _emit_json(payload, args.json)
    if args.csv:
        directory = Path(args.csv)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / "residuals.csv"
        with target.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "drift_mn", "drift_complement", "conjugacy_residual"])
            writer.writerows(result.csv_rows())
        log.info("wrote %s", target)
    return EXIT_OK


def cmd_generate(args) -> int:
    scenario = random_scenario(
        Structure(args.kind), m=args.m, n=args.n, seed=args.seed
    )
    config = to_config(scenario, metadata={"kind": args.kind, "generator_seed": args.seed})
    text = json.dumps(config, indent=2, sort_keys=True) + "\n"
    try:
        Path(args.out).write_text(text)
    except OSError as exc:
        print(f"generate: cannot write {args.out!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invman",
        description="Decide, construct, and numerically validate invariant subspaces "
        "of linear time-varying ODE systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="invariance verdicts for a configured system")
    p_check.add_argument("--config", required=True)
    p_check.add_argument(
        "--assert",
        dest="assertion",
        choices=sorted(_ASSERTION_FIELDS),
        default=None,
        help="exit 0 only if this verdict holds",
    )
    p_check.add_argument("--json", default=None, help="also write the JSON report here")
    p_check.set_defaults(handler=cmd_check)

    p_reduce = sub.add_parser("reduce", help="sample the reduced system and verify conjugacy")
    p_reduce.add_argument("--config", required=True)
    p_reduce.add_argument("--json", default=None, help="write the JSON report here instead of stdout")
    p_reduce.set_defaults(handler=cmd_reduce)

    p_flow = sub.add_parser("flow", help="drift and conjugacy residual curves")
    p_flow.add_argument("--config", required=True)
    p_flow.add_argument("--csv", default=None, help="directory for residuals.csv")
    p_flow.add_argument("--json", default=None, help="write the JSON report here instead of stdout")
    p_flow.set_defaults(handler=cmd_flow)

    p_gen = sub.add_parser("generate", help="write a ground-truth scenario config")
    p_gen.add_argument("--kind", required=True, choices=[s.value for s in Structure])
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--m", type=int, default=3)
    p_gen.add_argument("--n", type=int, default=2)
    p_gen.set_defaults(handler=cmd_generate)
    return parser


def _configure_logging():
    level = os.environ.get("INVMAN_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvmanError as exc:  # ShapeError and anything else package-raised
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
