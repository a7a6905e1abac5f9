"""Split Hamiltonian ``H = H0 + g * H1`` for the frustrated two-leg ladder.

Open boundaries along the legs. The rung coupling ``J_t`` plays the role of
``g``; the leg and diagonal couplings enter ``H1`` through the fixed ratios
``J_l / J_t`` and ``J_c / J_t`` so renormalizing ``g`` rescales all three.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import sqrt
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .basis import Basis, DimensionError, Scheme, rung_digits, rung_shift


class SchemeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingSet:
    J_t: float
    J_l: float
    J_c: float

    def __post_init__(self) -> None:
        for name in ("J_t", "J_l", "J_c"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def gamma_tl(self) -> float:
        return self.J_l / self.J_t

    @property
    def gamma_c(self) -> float:
        return self.J_c / self.J_t

    @property
    def J_1(self) -> float:
        return 0.5 * (self.J_l + self.J_c)

    @property
    def J_2(self) -> float:
        return 0.5 * (self.J_l - self.J_c)


@dataclass(frozen=True)
class SplitHamiltonian:
    """Sparse symmetric pair ``(H0, H1)`` and the current coupling ``g``."""

    H0: sp.csr_matrix
    H1: sp.csr_matrix
    g: float
    basis: Basis | None = None

    @property
    def n(self) -> int:
        return self.H1.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return matvec(self, x)

    def matrix(self) -> sp.csr_matrix:
        return (self.H0 + self.g * self.H1).tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def diagonal(self) -> np.ndarray:
        return self.H0.diagonal() + self.g * self.H1.diagonal()

    def with_coupling(self, g: float) -> "SplitHamiltonian":
        return replace(self, g=float(g))


def matvec(h: SplitHamiltonian, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != h.n:
        raise DimensionError(f"vector of length {x.shape[0]} for operator of dimension {h.n}")
    y = h.g * (h.H1 @ x)
    if h.H0.nnz:
        y += h.H0 @ x
    return y


def _submatrix(m: sp.csr_matrix, keep: np.ndarray) -> sp.csr_matrix:
    n = m.shape[0]
    if len(keep) == n and np.array_equal(keep, np.arange(n)):
        return m.copy()
    if np.array_equal(keep, np.arange(len(keep))):
        return m[: len(keep), : len(keep)].tocsr()
    return m[keep][:, keep].tocsr()


def _take(h: SplitHamiltonian, keep: np.ndarray) -> SplitHamiltonian:
    if len(keep) == 0:
        raise ValueError("cannot restrict to an empty set of states")
    if keep.min() < 0 or keep.max() >= h.n:
        raise IndexError("index out of range in keep set")
    basis = None if h.basis is None else h.basis.take(keep)
    return SplitHamiltonian(_submatrix(h.H0, keep), _submatrix(h.H1, keep), h.g, basis)


def restrict(h: SplitHamiltonian, keep: Sequence[int]) -> SplitHamiltonian:
    """Principal submatrix pair on the kept indices (sorted, 0-based); ``g`` unchanged."""
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    return _take(h, keep)


def permute(h: SplitHamiltonian, perm: Sequence[int]) -> SplitHamiltonian:
    """Reorder states so that new state ``k`` is old state ``perm[k]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if len(np.unique(perm)) != len(perm) or len(perm) != h.n:
        raise ValueError("perm must be a permutation of range(n)")
    return _take(h, perm)


class RungOperators(NamedTuple):
    """SO(4) generators on one rung, basis order ``|00>, |1-1>, |10>, |11>``."""

    Sp: np.ndarray
    Sz: np.ndarray
    Rp: np.ndarray
    Rz: np.ndarray

    @property
    def Sm(self) -> np.ndarray:
        return self.Sp.T

    @property
    def Rm(self) -> np.ndarray:
        return self.Rp.T


def _ket_bra(a: int, b: int) -> np.ndarray:
    x = np.zeros((4, 4))
    x[a, b] = 1.0
    return x


def rung_operators() -> RungOperators:
    """Total spin ``S = s1 + s2`` and difference ``R = s1 - s2`` of a rung.

    Built from the projectors ``X^{(a)(b)} = |a><b|``. With these signs the
    singlet carries the phase ``(|du> - |ud>)/sqrt(2)``; every Hamiltonian
    term is even in R, so the spectrum does not depend on that choice.
    """
    s00, s1m, s10, s11 = 0, 1, 2, 3
    r2 = sqrt(2.0)
    Sp = r2 * (_ket_bra(s11, s10) + _ket_bra(s10, s1m))
    Sz = _ket_bra(s11, s11) - _ket_bra(s1m, s1m)
    Rp = r2 * (_ket_bra(s11, s00) - _ket_bra(s00, s1m))
    Rz = -(_ket_bra(s10, s00) + _ket_bra(s00, s10))
    return RungOperators(Sp, Sz, Rp, Rz)


def _dot(zA: np.ndarray, pA: np.ndarray, zB: np.ndarray, pB: np.ndarray) -> np.ndarray:
    """Two-site ``A.B`` as a 16x16 matrix, ``A`` on the first factor."""
    return np.kron(zA, zB) + 0.5 * (np.kron(pA, pB.T) + np.kron(pA.T, pB))


def rung_casimir_term() -> np.ndarray:
    """``(S^2 - R^2) / 4`` on one rung; diagonal with -3/4 on the singlet."""
    ops = rung_operators()
    S2 = ops.Sz @ ops.Sz + 0.5 * (ops.Sp @ ops.Sm + ops.Sm @ ops.Sp)
    R2 = ops.Rz @ ops.Rz + 0.5 * (ops.Rp @ ops.Rm + ops.Rm @ ops.Rp)
    return 0.25 * (S2 - R2)


def _locate(states: np.ndarray):
    order = np.argsort(states, kind="stable")
    sorted_states = states[order]

    def find(targets: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(sorted_states, targets)
        pos = np.minimum(pos, len(sorted_states) - 1)
        if not np.array_equal(sorted_states[pos], targets):
            raise RuntimeError("operator leaves the magnetization sector")
        return order[pos]

    return find


def _finish(rows, cols, vals, n: int) -> sp.csr_matrix:
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    m.sum_duplicates()
    m = ((m + m.T) * 0.5).tocsr()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def su2_bonds(L: int, couplings: CouplingSet) -> list[tuple[int, int, float]]:
    """``(site_a, site_b, weight)`` for every bond of ``H1`` (site = bit index)."""
    bonds = [(2 * i, 2 * i + 1, 1.0) for i in range(L)]
    gl, gc = couplings.gamma_tl, couplings.gamma_c
    for i in range(L - 1):
        bonds += [
            (2 * i, 2 * i + 2, gl),
            (2 * i + 1, 2 * i + 3, gl),
            (2 * i, 2 * i + 3, gc),
            (2 * i + 1, 2 * i + 2, gc),
        ]
    return bonds


def assemble_su2(basis: Basis, couplings: CouplingSet) -> SplitHamiltonian:
    if basis.scheme is not Scheme.SU2:
        raise SchemeMismatchError(f"assemble_su2 needs an SU2 basis, got {basis.scheme.value}")
    states = basis.states
    n = basis.n
    find = _locate(states)
    idx = np.arange(n)
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    for a, b, w in su2_bonds(basis.L, couplings):
        sa = (states >> a) & 1
        sb = (states >> b) & 1
        anti = sa != sb
        diag += np.where(anti, -0.25 * w, 0.25 * w)
        flipped = states[anti] ^ ((1 << a) | (1 << b))
        rows.append(find(flipped))
        cols.append(idx[anti])
        vals.append(np.full(int(anti.sum()), 0.5 * w))
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    H1 = _finish(rows, cols, vals, n)
    H0 = sp.csr_matrix((n, n))
    return SplitHamiltonian(H0, H1, couplings.J_t, basis)


def so4_bond_matrix(couplings: CouplingSet) -> np.ndarray:
    """16x16 ``(J_1 S_i.S_j + J_2 R_i.R_j) / J_t`` on a pair of rungs."""
    ops = rung_operators()
    SS = _dot(ops.Sz, ops.Sp, ops.Sz, ops.Sp)
    RR = _dot(ops.Rz, ops.Rp, ops.Rz, ops.Rp)
    return (couplings.J_1 * SS + couplings.J_2 * RR) / couplings.J_t


def assemble_so4(basis: Basis, couplings: CouplingSet) -> SplitHamiltonian:
    if basis.scheme is not Scheme.SO4:
        raise SchemeMismatchError(f"assemble_so4 needs an SO4 basis, got {basis.scheme.value}")
    L = basis.L
    states = basis.states
    n = basis.n
    find = _locate(states)
    idx = np.arange(n)
    digits = rung_digits(states, L)

    rung = np.diag(rung_casimir_term())
    diag = rung[digits].sum(axis=1)
    bond = so4_bond_matrix(couplings)

    rows, cols, vals = [], [], []
    for i in range(L - 1):
        si, sj = rung_shift(i, L), rung_shift(i + 1, L)
        pair = 4 * digits[:, i] + digits[:, i + 1]
        diag += bond[pair, pair]
        cleared = states - (digits[:, i] << si) - (digits[:, i + 1] << sj)
        for c in range(16):
            sel = pair == c
            if not sel.any():
                continue
            for c2 in np.flatnonzero(bond[:, c]):
                if c2 == c:
                    continue
                targets = cleared[sel] + ((c2 // 4) << si) + ((c2 % 4) << sj)
                rows.append(find(targets))
                cols.append(idx[sel])
                vals.append(np.full(int(sel.sum()), bond[c2, c]))
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    H1 = _finish(rows, cols, vals, n)
    H0 = sp.csr_matrix((n, n))
    return SplitHamiltonian(H0, H1, couplings.J_t, basis)


def assemble(basis: Basis, couplings: CouplingSet) -> SplitHamiltonian:
    if basis.scheme is Scheme.SU2:
        return assemble_su2(basis, couplings)
    return assemble_so4(basis, couplings)


def dump_matrix(m: sp.spmatrix | np.ndarray, path: str | Path) -> None:
    """Coordinate text dump, ``i j value`` with 1-based indices."""
    coo = sp.coo_matrix(m)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for k in order:
            fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {coo.data[k]:.17g}\n")
