"""Basis states of the two-leg ladder in a fixed total-magnetization sector.

Two encodings are supported:

* ``SU2`` (M-scheme): every state is an integer bit-vector of length 2L.
  Bit ``2*i`` is the leg-1 spin of rung ``i`` and bit ``2*i + 1`` the leg-2
  spin; a set bit means m = +1/2.
* ``SO4`` (rung scheme): every rung carries one of the four labels
  ``(0,0), (1,-1), (1,0), (1,+1)`` coded as 0..3. A state is stored as the
  base-4 integer with rung 0 as the most significant digit, so ascending
  integer order is the lexicographic order of the label sequence.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from itertools import product
from math import comb, sqrt
from pathlib import Path
from typing import Sequence

import numpy as np


class Scheme(str, enum.Enum):
    SU2 = "su2"
    SO4 = "so4"


class EmptySectorError(ValueError):
    """Requested magnetization sector holds no states."""


class DimensionError(ValueError):
    pass


# (S, M) for the rung codes 0..3
RUNG_LABELS: tuple[tuple[int, int], ...] = ((0, 0), (1, -1), (1, 0), (1, 1))
RUNG_M = np.array([m for _, m in RUNG_LABELS], dtype=np.int64)


@dataclass(frozen=True)
class Basis:
    """Ordered list of configurations spanning one M_tot sector.

    ``canonical_index[k]`` is the position of ``states[k]`` in the canonical
    (pre-sort) enumeration, so any reordering can be traced back.
    ``diagonal`` holds the per-state energies once they are known.
    """

    scheme: Scheme
    L: int
    M_tot: int
    states: np.ndarray
    canonical_index: np.ndarray = field(default=None)  # type: ignore[assignment]
    diagonal: np.ndarray | None = None

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=np.int64)
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        if self.canonical_index is None:
            idx = np.arange(len(states), dtype=np.int64)
        else:
            idx = np.asarray(self.canonical_index, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "canonical_index", idx)
        if self.diagonal is not None:
            diag = np.array(self.diagonal, dtype=float)
            if diag.shape != states.shape:
                raise DimensionError("diagonal length does not match number of states")
            diag.setflags(write=False)
            object.__setattr__(self, "diagonal", diag)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n(self) -> int:
        return len(self.states)

    def label(self, k: int) -> str:
        return state_label(self.scheme, self.L, int(self.states[k]))

    def index_of(self, state: int) -> int:
        """Position of ``state`` in a canonically ordered basis."""
        pos = int(np.searchsorted(self.states, state))
        if pos >= len(self.states) or self.states[pos] != state:
            raise KeyError(state)
        return pos

    def with_diagonal(self, diag: Sequence[float]) -> "Basis":
        return Basis(self.scheme, self.L, self.M_tot, self.states, self.canonical_index, diag)

    def take(self, keep: Sequence[int]) -> "Basis":
        keep = np.asarray(keep, dtype=np.int64)
        diag = None if self.diagonal is None else self.diagonal[keep]
        return Basis(self.scheme, self.L, self.M_tot, self.states[keep], self.canonical_index[keep], diag)


def _check_sector(L: int, M_tot: int) -> None:
    if L < 1:
        raise ValueError(f"L must be a positive integer, got {L}")
    if abs(M_tot) > L:
        raise EmptySectorError(f"|M_tot| = {abs(M_tot)} exceeds L = {L}")


def sector_dimension(L: int, M_tot: int = 0) -> int:
    _check_sector(L, M_tot)
    return comb(2 * L, L + M_tot)


def build_su2_basis(L: int, M_tot: int = 0) -> Basis:
    """All 2L-bit vectors with ``L + M_tot`` set bits, ascending."""
    _check_sector(L, M_tot)
    allstates = np.arange(1 << (2 * L), dtype=np.int64)
    popcount = np.bitwise_count(allstates.astype(np.uint64)).astype(np.int64)
    states = allstates[popcount == L + M_tot]
    return Basis(Scheme.SU2, L, M_tot, states)


def build_so4_basis(L: int, M_tot: int = 0) -> Basis:
    """All rung-label sequences with sum of M equal to ``M_tot``, lexicographic."""
    _check_sector(L, M_tot)
    digits = rung_digits(np.arange(4**L, dtype=np.int64), L)
    msum = RUNG_M[digits].sum(axis=1)
    states = np.flatnonzero(msum == M_tot).astype(np.int64)
    return Basis(Scheme.SO4, L, M_tot, states)


def build_basis(scheme: Scheme | str, L: int, M_tot: int = 0) -> Basis:
    scheme = Scheme(scheme)
    if scheme is Scheme.SU2:
        return build_su2_basis(L, M_tot)
    return build_so4_basis(L, M_tot)


def rung_digits(states: np.ndarray, L: int) -> np.ndarray:
    """Decode base-4 SO(4) state codes into an (n, L) array of rung codes."""
    states = np.asarray(states, dtype=np.int64)
    shifts = 2 * np.arange(L - 1, -1, -1, dtype=np.int64)
    return (states[:, None] >> shifts[None, :]) & 3


def rung_shift(i: int, L: int) -> int:
    """Bit offset of rung ``i`` inside a base-4 SO(4) code."""
    return 2 * (L - 1 - i)


def state_label(scheme: Scheme, L: int, state: int) -> str:
    if scheme is Scheme.SU2:
        return "".join("u" if (state >> b) & 1 else "d" for b in range(2 * L))
    parts = []
    for i in range(L):
        S, M = RUNG_LABELS[(state >> rung_shift(i, L)) & 3]
        parts.append(f"{S}{M}")
    return " ".join(parts)


def diagonal_order(diag: Sequence[float]) -> np.ndarray:
    """Stable ascending permutation of the diagonal energies (0-based)."""
    return np.argsort(np.asarray(diag, dtype=float), kind="stable")


def order_by_diagonal(basis: Basis, diag: Sequence[float]) -> Basis:
    """Reorder ``basis`` by increasing diagonal energy.

    Ties keep the incoming order, so the result is deterministic. The last
    state of the returned basis is the first candidate for elimination.
    """
    diag = np.asarray(diag, dtype=float)
    if diag.shape != (basis.n,):
        raise DimensionError(f"expected {basis.n} diagonal entries, got {diag.shape}")
    perm = diagonal_order(diag)
    return basis.with_diagonal(diag).take(perm)


def rung_transform(L: int, M_tot: int = 0) -> np.ndarray:
    """Orthogonal change of basis from the SU(2) to the SO(4) sector basis.

    Row ``a`` is the SO(4) state ``a`` (canonical order) expanded in the
    canonical SU(2) states. Per rung::

        |00> = (|ud> - |du>)/sqrt(2)    |10> = (|ud> + |du>)/sqrt(2)
        |11> = |uu>                      |1-1> = |dd>

    where the first letter is the leg-1 spin. ``H_so4 = U @ H_su2 @ U.T``.
    """
    su2 = build_su2_basis(L, M_tot)
    so4 = build_so4_basis(L, M_tot)
    r = 1.0 / sqrt(2.0)
    # rung code -> list of ((leg1 bit, leg2 bit), amplitude)
    local = {
        0: (((1, 0), r), ((0, 1), -r)),
        1: (((0, 0), 1.0),),
        2: (((1, 0), r), ((0, 1), r)),
        3: (((1, 1), 1.0),),
    }
    U = np.zeros((so4.n, su2.n))
    digits = rung_digits(so4.states, L)
    for a, codes in enumerate(digits):
        for combo in product(*(local[int(c)] for c in codes)):
            bits = 0
            amp = 1.0
            for i, ((b1, b2), c) in enumerate(combo):
                bits |= (b1 << (2 * i)) | (b2 << (2 * i + 1))
                amp *= c
            U[a, su2.index_of(bits)] += amp
    return U


def dump_basis(basis: Basis, path: str | Path) -> None:
    """Write ``index, label, eps`` rows (1-based index) as UTF-8 CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "label", "eps"])
        for k in range(basis.n):
            eps = "" if basis.diagonal is None else f"{basis.diagonal[k]:.17g}"
            w.writerow([k + 1, basis.label(k), eps])
