"""Command line harness: ``run``, ``spectrum`` and ``sweep``.

Exit codes: 0 on a normal stop, 1 for an invalid config, 2 when the
eigensolver fails.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .basis import build_so4_basis, build_su2_basis
from .config import ConfigError, ExperimentConfig, bundled_configs, load_config
from .eigensolver import lanczos_lowest
from .hamiltonian import assemble_so4, assemble_su2
from .reduction import ReductionTrace, SolverFailure, TraceWriter, run_reduction

THREADS_ENV = "LADDER_REDUCTION_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

log = logging.getLogger("ladder_reduction")


def _output_path(cfg: ExperimentConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.output is not None:
        return cfg.output
    return Path(Path(cfg.source).stem + "_trace.csv")


def execute(cfg: ExperimentConfig, out: Path) -> ReductionTrace:
    """Run one reduction, streaming the trace to ``out``."""
    out.parent.mkdir(parents=True, exist_ok=True)
    with TraceWriter(out) as writer:
        return run_reduction(cfg.reduction, on_step=writer)


def format_summary(trace: ReductionTrace) -> str:
    s = trace.summary()
    maxp = ", ".join(f"{x:.6g}" for x in s["max_p_before_N_min"])
    return "\n".join(
        [
            "# summary",
            f"N = {s['N']}",
            f"lambda1_N = {s['lambda1_N']:.17g}",
            f"N_min = {s['N_min']}",
            f"final_g = {s['final_g']:.17g}",
            f"max_p_before_N_min = {maxp}",
            f"stop_reason = {s['stop_reason']}",
        ]
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _output_path(cfg, args.out)
    try:
        trace = execute(cfg, out)
    except SolverFailure as err:
        print(f"error: eigensolver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"trace = {out}")
    print(format_summary(trace))
    return EXIT_OK


def spectra(cfg: ExperimentConfig, k: int) -> tuple[np.ndarray, np.ndarray]:
    su2 = assemble_su2(build_su2_basis(cfg.L, cfg.M_tot), cfg.couplings)
    so4 = assemble_so4(build_so4_basis(cfg.L, cfg.M_tot), cfg.couplings)
    solver = replace(cfg.solver, k=k)
    a = lanczos_lowest(su2.matvec, su2.n, solver).values
    b = lanczos_lowest(so4.matvec, so4.n, solver).values
    return a, b


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    if cfg.L > 8:
        print(f"error: {cfg.source}: spectrum needs L <= 8, got {cfg.L}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        a, b = spectra(cfg, args.k)
    except Exception as err:  # ConvergenceError and friends
        print(f"error: eigensolver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    print("i,su2,so4,rel_diff")
    rel = np.abs(a - b) / np.maximum(np.abs(a), 1e-300)
    for i, (x, y, r) in enumerate(zip(a, b, rel), start=1):
        print(f"{i},{x:.17g},{y:.17g},{r:.3e}")
    print(f"max_rel_diff = {rel.max():.3e}")
    return EXIT_OK


@dataclass
class SweepRow:
    J_t: float
    trace: Path
    N_min: int | None = None
    deepest_stable: int | None = None
    initial_entropy: float | None = None
    flags: int | None = None
    error: str = ""


def _sweep_one(cfg: ExperimentConfig, out: Path) -> SweepRow:
    row = SweepRow(cfg.couplings.J_t, out)
    try:
        trace = execute(cfg, out)
    except Exception as err:  # recorded, the sweep continues
        row.error = f"{type(err).__name__}: {err}"
        return row
    row.N_min = trace.N_min
    row.deepest_stable = trace.deepest_stable_n(1.0)
    row.initial_entropy = trace.steps[0].entropy
    row.flags = trace.flag_count()
    return row


def _jt_tag(value: float) -> str:
    return f"{value:g}".replace(".", "p")


def sweep(cfg: ExperimentConfig, values: list[float], out: Path, workers: int = 1) -> list[SweepRow]:
    jobs = [
        (cfg.with_rung_coupling(jt), out.with_name(f"{out.stem}_jt{_jt_tag(jt)}{out.suffix}"))
        for jt in values
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, *zip(*jobs)))
    return [_sweep_one(c, o) for c, o in jobs]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    try:
        values = [float(v) for v in args.jt.split(",") if v.strip()]
        for v in values:
            cfg.with_rung_coupling(v)
    except ValueError as err:
        print(f"error: --jt: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_path(cfg, args.out)
    workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    rows = sweep(cfg, values, out, workers)

    header = ["J_t", "N_min", "deepest_n_p1_le_1pct", "initial_entropy", "flag_count", "trace", "error"]
    table = out.with_name(f"{out.stem}_sweep.csv")
    with open(table, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([
                f"{r.J_t:g}",
                "" if r.N_min is None else r.N_min,
                "" if r.deepest_stable is None else r.deepest_stable,
                "" if r.initial_entropy is None else f"{r.initial_entropy:.17g}",
                "" if r.flags is None else r.flags,
                str(r.trace),
                r.error,
            ])
    print(table.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ladder-reduction",
        description="Hilbert-space reduction with coupling renormalization for two-leg spin ladders.",
        epilog="bundled configs: " + ", ".join(bundled_configs()),
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one reduction and write the trace CSV")
    p.add_argument("config", help="config file or bundled name (fig2 ... fig8)")
    p.add_argument("--out", help="trace CSV path (overrides the config's output key)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="lowest energies in both schemes")
    p.add_argument("config")
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="one reduction per J_t value plus a comparison table")
    p.add_argument("config")
    p.add_argument("--jt", required=True, help="comma-separated J_t values, e.g. 15,5.5,2.5")
    p.add_argument("--out", help="base trace path; runs get a _jt<value> suffix")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
