"""Step-by-step elimination of basis states with renormalization of ``g``.

Each step removes one basis state (the one with the largest diagonal energy)
and moves the coupling ``g`` so that the target ground energy ``lambda1``
stays an eigenvalue of the two-state problem spanned by the normalized
projected ground vector ``phi`` and the eliminated state ``e``::

    | A(g')  v(g') |          A(g') = <phi|H0 + g' H1|phi>
    | v(g')  d(g') |          v(g') = <phi|H0 + g' H1|e>
                              d(g') = <e|H0 + g' H1|e>

Folding ``e`` back onto ``phi`` (a one-state Feshbach reduction) gives
``A + v^2 / (lambda1 - d) = lambda1``, a quadratic in ``g'``. Of its real
roots the one closest to the current ``g`` is taken.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .basis import Scheme, build_basis, diagonal_order, order_by_diagonal
from .eigensolver import ConvergenceError, EigenSolution, SolverConfig, lanczos_lowest
from .hamiltonian import CouplingSet, SplitHamiltonian, assemble, permute, restrict
from .observables import DEFAULT_EPSILON, deviation_p, entropy_per_site, relevant_amplitudes

log = logging.getLogger(__name__)

NO_REAL_ROOT = "no-real-root"
INDETERMINATE = "indeterminate"
INSTABILITY = "instability"
WARM_START_FAILED = "warm-start-failed"
DEGENERATE = "degenerate"

N_TRACKED = 4
WARM_NOISE = 0.1
TRACE_COLUMNS = (
    ["n", "g"]
    + [f"lambda{i}" for i in range(1, N_TRACKED + 1)]
    + [f"e{i}" for i in range(1, N_TRACKED + 1)]
    + [f"p{i}" for i in range(1, N_TRACKED + 1)]
    + ["entropy", "relevant_count", "flags"]
)


class DegenerateProjectionError(ValueError):
    """The ground vector lies entirely on the state being eliminated."""


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RenormalizationInputs:
    lambda1: float
    d0: float
    d1: float
    A0: float
    A1: float
    v0: float
    v1: float
    g_prev: float

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} is not finite: {value}")


def feshbach_coefficients(
    h: SplitHamiltonian, psi1: np.ndarray, lambda1: float, elim: int
) -> RenormalizationInputs:
    """Scalars of the two-state problem for eliminating state ``elim``."""
    phi = np.array(psi1, dtype=float, copy=True)
    phi[elim] = 0.0
    norm = np.linalg.norm(phi)
    if norm <= 1e-300:
        raise DegenerateProjectionError("projected ground vector vanishes")
    phi /= norm
    y0 = h.H0 @ phi
    y1 = h.H1 @ phi
    return RenormalizationInputs(
        lambda1=float(lambda1),
        d0=float(h.H0[elim, elim]),
        d1=float(h.H1[elim, elim]),
        A0=float(phi @ y0),
        A1=float(phi @ y1),
        v0=float(y0[elim]),
        v1=float(y1[elim]),
        g_prev=float(h.g),
    )


def quadratic_coefficients(inp: RenormalizationInputs) -> tuple[float, float, float]:
    """``(alpha, beta, gamma)`` of ``alpha g'^2 + beta g' + gamma = 0``."""
    lam, d0, d1, A0, A1, v0, v1 = inp.lambda1, inp.d0, inp.d1, inp.A0, inp.A1, inp.v0, inp.v1
    alpha = v1 * v1 - A1 * d1
    beta = 2.0 * v0 * v1 + A1 * (lam - d0) - A0 * d1 + lam * d1
    gamma = v0 * v0 + (A0 - lam) * (lam - d0)
    return alpha, beta, gamma


def real_roots(alpha: float, beta: float, gamma: float) -> list[float] | None:
    """Real roots, ``[]`` when there are none, ``None`` when indeterminate."""
    if max(abs(alpha), abs(beta), abs(gamma)) <= 1e-14:
        return None
    if abs(alpha) < 1e-14 * max(abs(beta), 1.0):
        if abs(beta) <= 1e-14:
            return []
        root = -gamma / beta
        # keep the linear root only if the dropped term is negligible there
        if abs(alpha) * root * root <= 1e-12 * max(abs(gamma), 1.0):
            return [root]
        if alpha == 0.0:
            return [root]
    disc = beta * beta - 4.0 * alpha * gamma
    if disc < 0:
        return []
    q = -0.5 * (beta + math.copysign(math.sqrt(disc), beta))
    if q == 0.0:
        return [0.0]
    return sorted({q / alpha, gamma / q})


def solve_renormalization(inp: RenormalizationInputs) -> tuple[float, tuple[str, ...]]:
    """New coupling and flags; keeps ``g_prev`` when no real root exists."""
    roots = real_roots(*quadratic_coefficients(inp))
    if roots is None:
        return inp.g_prev, (INDETERMINATE,)
    if not roots:
        return inp.g_prev, (NO_REAL_ROOT,)
    # sorted ascending, so min() resolves exact ties to the smaller root
    return min(roots, key=lambda r: abs(r - inp.g_prev)), ()


@dataclass(frozen=True)
class ReductionConfig:
    scheme: Scheme
    L: int
    couplings: CouplingSet
    M_tot: int = 0
    epsilon: float = DEFAULT_EPSILON
    n_floor: int = 8
    p1_abort: float = 1.0
    g_jump_abort: float = 10.0
    no_root_run: int = 3
    lambda_target: float | None = None
    elimination_order: str = "diagonal"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("epsilon", "p1_abort", "g_jump_abort"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.g_jump_abort <= 1:
            raise ValueError("g_jump_abort must exceed 1")
        if self.n_floor < 1 or self.no_root_run < 1:
            raise ValueError("n_floor and no_root_run must be >= 1")
        if self.elimination_order not in ("diagonal", "amplitude"):
            raise ValueError("elimination_order must be 'diagonal' or 'amplitude'")


@dataclass
class ReductionStep:
    n: int
    g: float
    lambdas: np.ndarray
    e: np.ndarray
    p: np.ndarray
    entropy: float
    relevant_count: int
    flags: tuple[str, ...] = ()
    eliminated_amplitude: float = float("nan")
    iterations: int = 0

    def row(self) -> list[str]:
        def fmt(x: float) -> str:
            return f"{x:.17g}"

        return (
            [str(self.n), fmt(self.g)]
            + [fmt(x) for x in self.lambdas]
            + [fmt(x) for x in self.e]
            + [fmt(x) for x in self.p]
            + [fmt(self.entropy), str(self.relevant_count), ";".join(self.flags)]
        )


@dataclass
class ReductionTrace:
    config: ReductionConfig
    N: int
    lambda_target: float
    e_ref: np.ndarray
    steps: list[ReductionStep] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def N_min(self) -> int:
        return self.steps[-1].n

    @property
    def final_g(self) -> float:
        return self.steps[-1].g

    def column(self, name: str) -> np.ndarray:
        """Trace column by CSV name, e.g. ``"g"``, ``"lambda1"`` or ``"p2"``."""
        if name in ("n", "g", "entropy", "relevant_count"):
            return np.array([getattr(s, name) for s in self.steps])
        for prefix, attr in (("lambda", "lambdas"), ("e", "e"), ("p", "p")):
            if name.startswith(prefix) and name[len(prefix):].isdigit():
                i = int(name[len(prefix):]) - 1
                return np.array([getattr(s, attr)[i] for s in self.steps])
        raise KeyError(name)

    def step_at(self, n: int) -> ReductionStep:
        first = self.steps[0].n
        step = self.steps[first - n]
        assert step.n == n
        return step

    def deepest_stable_n(self, threshold: float = 1.0) -> int:
        """Smallest ``n`` reached before ``p1`` first exceeds ``threshold`` percent."""
        deepest = self.steps[0].n
        for s in self.steps:
            if s.p[0] > threshold:
                break
            deepest = s.n
        return deepest

    def flag_count(self, flag: str | None = None) -> int:
        return sum(1 for s in self.steps for f in s.flags if flag is None or f == flag)

    def summary(self) -> dict:
        before = [s.p for s in self.steps if s.n > self.N_min] or [self.steps[0].p]
        return {
            "N": self.N,
            "lambda1_N": self.lambda_target,
            "N_min": self.N_min,
            "final_g": self.final_g,
            "max_p_before_N_min": np.nanmax(np.array(before), axis=0).tolist(),
            "stop_reason": self.stop_reason,
            "deepest_n_p1_le_1pct": self.deepest_stable_n(1.0),
            "initial_entropy": self.steps[0].entropy,
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_trace(fh, self.steps)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        write_trace(buf, self.steps)
        return buf.getvalue()


def write_trace(fh, steps: Iterable[ReductionStep]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for s in steps:
        w.writerow(s.row())


class TraceWriter:
    """Streams trace rows to a CSV file as steps are produced."""

    def __init__(self, path: str | Path):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(TRACE_COLUMNS)

    def __call__(self, step: ReductionStep) -> None:
        self._w.writerow(step.row())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def detect_instability(steps: Sequence[ReductionStep], cfg: ReductionConfig) -> bool:
    """Stop rule evaluated on the most recent step of a trace."""
    if not steps:
        return False
    last = steps[-1]
    if last.p[0] > cfg.p1_abort:
        return True
    if len(steps) >= 2:
        prev = steps[-2].g
        ratio = last.g / prev if prev != 0 else math.inf
        if not (1.0 / cfg.g_jump_abort <= ratio <= cfg.g_jump_abort):
            return True
    tail = steps[-cfg.no_root_run :]
    if len(tail) == cfg.no_root_run and all(NO_REAL_ROOT in s.flags for s in tail):
        return True
    return False


def _pad(x: np.ndarray, width: int = N_TRACKED) -> np.ndarray:
    out = np.full(width, np.nan)
    out[: min(width, len(x))] = x[:width]
    return out


def _warm_start(prev: EigenSolution, keep: np.ndarray, seed: int, n: int) -> np.ndarray:
    v = prev.vectors[keep].sum(axis=1)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        return v
    noise = np.random.default_rng([seed, n]).standard_normal(len(keep))
    return v / norm + WARM_NOISE * noise / np.linalg.norm(noise)


def prepare(cfg: ReductionConfig) -> SplitHamiltonian:
    """Assembled Hamiltonian with states sorted by increasing diagonal energy."""
    basis = build_basis(cfg.scheme, cfg.L, cfg.M_tot)
    h = assemble(basis, cfg.couplings)
    diag = h.diagonal()
    perm = diagonal_order(diag)
    ordered = permute(h, perm)
    return replace(ordered, basis=order_by_diagonal(basis, diag))


def run_reduction(
    cfg: ReductionConfig,
    on_step: Callable[[ReductionStep], None] | None = None,
) -> ReductionTrace:
    """Reduce the sector basis state by state until a stop rule fires."""
    solver = replace(cfg.solver, k=N_TRACKED)
    L = cfg.L
    h = prepare(cfg)

    def solve(h: SplitHamiltonian, v0=None) -> tuple[EigenSolution, tuple[str, ...]]:
        try:
            sol = lanczos_lowest(h.matvec, h.n, solver, v0=v0)
            flags = ()
        except ConvergenceError as err:
            if v0 is None:
                raise SolverFailure(str(err)) from err
            log.warning("warm start failed at n=%d: %s", h.n, err)
            try:
                sol = lanczos_lowest(h.matvec, h.n, solver)
            except ConvergenceError as err2:
                raise SolverFailure(str(err2)) from err2
            flags = (WARM_START_FAILED,)
        if sol.degenerate:
            flags += (DEGENERATE,)
        return sol, flags

    sol, flags = solve(h)
    lam_target = sol.values[0] if cfg.lambda_target is None else float(cfg.lambda_target)
    e_ref = _pad(sol.values) / (2 * L)
    trace = ReductionTrace(cfg, N=h.n, lambda_target=float(lam_target), e_ref=e_ref)

    def record(sol: EigenSolution, g: float, flags: tuple[str, ...], a_elim: float) -> None:
        e = _pad(sol.values) / (2 * L)
        p = np.full(N_TRACKED, np.nan)
        ok = ~(np.isnan(e) | np.isnan(e_ref))
        p[ok] = deviation_p(e_ref[ok], e[ok])
        step = ReductionStep(
            n=h.n,
            g=float(g),
            lambdas=_pad(sol.values),
            e=e,
            p=p,
            entropy=entropy_per_site(sol.ground, L),
            relevant_count=relevant_amplitudes(sol.ground, cfg.epsilon),
            flags=flags,
            eliminated_amplitude=a_elim,
            iterations=sol.iterations,
        )
        trace.steps.append(step)
        if detect_instability(trace.steps, cfg):
            step.flags = step.flags + (INSTABILITY,)
            trace.stop_reason = "instability"
        if on_step is not None:
            on_step(step)

    record(sol, h.g, flags, float("nan"))
    while not trace.stop_reason:
        if h.n <= cfg.n_floor:
            trace.stop_reason = "n_floor"
            break
        psi = sol.ground
        if cfg.elimination_order == "amplitude":
            elim = int(np.argmin(np.abs(psi)))
        else:
            elim = h.n - 1
        try:
            inp = feshbach_coefficients(h, psi, lam_target, elim)
            g_new, step_flags = solve_renormalization(inp)
        except DegenerateProjectionError:
            g_new, step_flags = h.g, (INDETERMINATE,)
        keep = np.delete(np.arange(h.n), elim)
        h = restrict(h, keep).with_coupling(g_new)
        v0 = _warm_start(sol, keep, solver.seed, h.n)
        sol, solve_flags = solve(h, v0)
        record(sol, g_new, step_flags + solve_flags, float(abs(psi[elim])))
    return trace
