from math import comb

import numpy as np
import pytest

from ladder_reduction.basis import (
    DimensionError,
    EmptySectorError,
    Scheme,
    build_so4_basis,
    build_su2_basis,
    diagonal_order,
    dump_basis,
    order_by_diagonal,
    rung_transform,
)
from ladder_reduction.hamiltonian import CouplingSet, assemble_su2

from oracles import brute_force_so4_count


@pytest.mark.parametrize("L, expected", [(1, 2), (6, 924), (8, 12870)])
def test_su2_dimensions(L, expected):
    assert build_su2_basis(L, 0).n == expected


def test_su2_l1_states():
    b = build_su2_basis(1, 0)
    # bit 0 = leg 1; ascending integers: |du> = 0b10, |ud> = 0b01
    assert list(b.states) == [0b01, 0b10]
    assert [b.label(k) for k in range(2)] == ["ud", "du"]


def test_su2_canonical_order_and_popcount():
    b = build_su2_basis(4, 1)
    assert np.all(np.diff(b.states) > 0)
    assert all(bin(int(s)).count("1") == 5 for s in b.states)
    assert b.n == comb(8, 5)


def test_so4_l1_states():
    b = build_so4_basis(1, 0)
    assert b.n == 2
    assert [b.label(k) for k in range(2)] == ["00", "10"]


@pytest.mark.parametrize("L", [2, 3, 6])
def test_so4_dimension_matches_enumeration(L):
    assert build_so4_basis(L, 0).n == brute_force_so4_count(L, 0)


def test_so4_l2_six_states():
    assert build_so4_basis(2, 0).n == 6


@pytest.mark.parametrize("L", range(1, 9))
def test_both_schemes_binomial(L):
    assert build_su2_basis(L).n == build_so4_basis(L).n == comb(2 * L, L)


@pytest.mark.parametrize("M", [-2, 1, 3])
def test_so4_other_sectors(M):
    assert build_so4_basis(3, M).n == comb(6, 3 + M) == brute_force_so4_count(3, M)


def test_so4_lexicographic():
    b = build_so4_basis(3, 0)
    assert np.all(np.diff(b.states) > 0)
    assert b.label(0) == "00 00 00"


@pytest.mark.parametrize("builder", [build_su2_basis, build_so4_basis])
def test_empty_sector(builder):
    with pytest.raises(EmptySectorError):
        builder(2, 3)


def test_diagonal_order_examples():
    assert list(diagonal_order([0.5, -0.3, 0.1]) + 1) == [2, 3, 1]
    assert list(diagonal_order([1.0] * 5)) == list(range(5))


def test_order_by_diagonal_sorts_and_tracks_canonical_index():
    b = build_su2_basis(2)
    diag = np.array([3.0, 1.0, 2.0, 1.0, 0.0, 5.0])
    ordered = order_by_diagonal(b, diag)
    assert list(ordered.canonical_index) == [4, 1, 3, 2, 0, 5]
    assert np.all(np.diff(ordered.diagonal) >= 0)


def test_order_by_diagonal_length_mismatch():
    with pytest.raises(DimensionError):
        order_by_diagonal(build_su2_basis(2), [1.0, 2.0])


def test_order_l1_ties_preserved():
    b = build_su2_basis(1)
    h = assemble_su2(b, CouplingSet(1.0, 1.0, 1.0))
    diag = h.diagonal()
    assert np.allclose(diag, [-0.25, -0.25])
    assert list(order_by_diagonal(b, diag).states) == list(b.states)


def test_order_idempotent():
    b = build_su2_basis(3)
    h = assemble_su2(b, CouplingSet(2.0, 1.0, 0.5))
    once = order_by_diagonal(b, h.diagonal())
    twice = order_by_diagonal(once, once.diagonal)
    assert np.array_equal(once.states, twice.states)


def test_rung_transform_l1_singlet():
    U = rung_transform(1)
    r = 1 / np.sqrt(2)
    # columns: |ud>, |du>
    assert np.allclose(U[0], [r, -r], atol=1e-15)
    assert np.allclose(U[1], [r, r], atol=1e-15)


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_rung_transform_orthogonal(L):
    U = rung_transform(L)
    assert U.shape == (comb(2 * L, L),) * 2
    assert np.abs(U.T @ U - np.eye(len(U))).max() < 1e-12


def test_basis_is_immutable():
    b = build_su2_basis(2)
    with pytest.raises(ValueError):
        b.states[0] = 7


def test_dump_basis(tmp_path):
    b = build_so4_basis(1)
    b = b.with_diagonal([-0.75, 0.25])
    path = tmp_path / "basis.csv"
    dump_basis(b, path)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "index,label,eps",
        "1,00,-0.75",
        "2,10,0.25",
    ]
    assert b.scheme is Scheme.SO4
