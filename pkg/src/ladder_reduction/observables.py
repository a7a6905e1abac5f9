"""Diagnostics recorded along a reduction run."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-8
DEFAULT_EPSILON = 1e-2


class UndefinedReferenceError(ZeroDivisionError):
    pass


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class ObservableRecord:
    e: np.ndarray  # energies per site
    p: np.ndarray  # percent deviations from the full-space values
    s: float
    relevant_count: int
    weights: np.ndarray  # |a_i|^2 of the ground state


def energies_per_site(values, L: int) -> np.ndarray:
    return np.asarray(values, dtype=float) / (2 * L)


def deviation_p(e_ref, e_now):
    """Percentage loss of accuracy ``|(e_ref - e_now) / e_ref| * 100``.

    Works elementwise on arrays of per-site energies.
    """
    e_ref = np.asarray(e_ref, dtype=float)
    e_now = np.asarray(e_now, dtype=float)
    if np.any(e_ref == 0):
        raise UndefinedReferenceError("reference energy is zero")
    p = np.abs((e_ref - e_now) / e_ref) * 100.0
    return float(p) if p.ndim == 0 else p


def amplitude_weights(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a * a


def entropy_per_site(a, L: int) -> float:
    """``-(1/2L) * sum P_i ln P_i`` with ``P_i = |a_i|^2``; zero weights drop out."""
    P = amplitude_weights(a)
    total = P.sum()
    if abs(np.sqrt(total) - 1.0) > NORM_TOL:
        raise NormalizationError(f"ground vector norm {np.sqrt(total):.3e} is not 1")
    P = P[P > 0]
    return float(max(0.0, -(P * np.log(P)).sum() / (2 * L)))


def relevant_amplitudes(a, epsilon: float = DEFAULT_EPSILON) -> int:
    """Number of components with ``|a_i| > epsilon``."""
    return int(np.count_nonzero(np.abs(np.asarray(a, dtype=float)) > epsilon))


def observe(values, ground, L: int, e_ref=None, epsilon: float = DEFAULT_EPSILON) -> ObservableRecord:
    e = energies_per_site(values, L)
    if e_ref is None:
        p = np.zeros_like(e)
    else:
        e_ref = np.asarray(e_ref, dtype=float)
        m = min(len(e), len(e_ref))
        p = np.full(len(e_ref), np.nan)
        p[:m] = deviation_p(e_ref[:m], e[:m])
    return ObservableRecord(
        e=e,
        p=p,
        s=entropy_per_site(ground, L),
        relevant_count=relevant_amplitudes(ground, epsilon),
        weights=amplitude_weights(ground),
    )
