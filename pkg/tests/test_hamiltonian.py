import numpy as np
import pytest
import scipy.sparse as sp

from ladder_reduction.basis import DimensionError, build_so4_basis, build_su2_basis, rung_transform
from ladder_reduction.hamiltonian import (
    CouplingSet,
    SchemeMismatchError,
    SplitHamiltonian,
    assemble,
    assemble_so4,
    assemble_su2,
    dump_matrix,
    matvec,
    permute,
    restrict,
    rung_casimir_term,
    rung_operators,
    su2_bonds,
)

from oracles import ladder_full, sector_block

LADDER = CouplingSet(15.0, 5.0, 3.0)


def test_coupling_ratios():
    c = LADDER
    assert c.gamma_tl == pytest.approx(1 / 3)
    assert c.gamma_c == pytest.approx(0.2)
    assert c.J_1 == 4.0 and c.J_2 == 1.0
    assert c.gamma_tl * c.J_t == pytest.approx(c.J_l)
    assert c.gamma_c * c.J_t == pytest.approx(c.J_c)


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 1), (1, 1, float("nan"))])
def test_couplings_must_be_positive(bad):
    with pytest.raises(ValueError):
        CouplingSet(*bad)


def test_single_rung_spectrum():
    for build in (build_su2_basis, build_so4_basis):
        h = assemble(build(1, 0), CouplingSet(1.0, 1.0, 1.0))
        assert h.g == 1.0
        assert np.allclose(np.linalg.eigvalsh(h.dense()), [-0.75, 0.25], atol=1e-14)


@pytest.mark.parametrize("L", [2, 3, 4])
@pytest.mark.parametrize("J", [(1.0, 1.0, 1.0), (15.0, 5.0, 3.0), (2.5, 5.0, 3.0)])
def test_su2_matches_kronecker_oracle(L, J):
    h = assemble_su2(build_su2_basis(L), CouplingSet(*J))
    ref = sector_block(ladder_full(L, *J), L)
    assert np.max(np.abs(h.dense() - ref)) < 1e-12


def test_l2_ground_energy():
    h = assemble_su2(build_su2_basis(2), CouplingSet(1.0, 1.0, 1.0))
    w = np.linalg.eigvalsh(h.dense())
    assert w[0] == pytest.approx(-1.5, abs=1e-12)
    assert w[0] == pytest.approx(np.linalg.eigvalsh(sector_block(ladder_full(2, 1, 1, 1), 2))[0], abs=1e-12)


def test_h0_is_zero_and_g_is_rung_coupling():
    h = assemble_su2(build_su2_basis(3), LADDER)
    assert h.H0.nnz == 0 and h.g == 15.0
    assert np.allclose(h.dense(), 15.0 * h.H1.toarray())


@pytest.mark.parametrize("scheme_build", [build_su2_basis, build_so4_basis])
def test_exact_symmetry(scheme_build):
    h = assemble(scheme_build(5), LADDER)
    diff = h.H1 - h.H1.T
    assert diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((2, h.n))
    assert abs(x @ h.matvec(y) - y @ h.matvec(x)) < 1e-12 * max(1.0, np.linalg.norm(h.dense()))


def test_nnz_bound():
    L = 6
    b = build_su2_basis(L)
    h = assemble_su2(b, LADDER)
    assert h.H1.nnz <= b.n * (1 + len(su2_bonds(L, LADDER)))


def test_magnetization_conserved():
    # every nonzero connects states with the same number of up spins
    b = build_su2_basis(4, 1)
    h = assemble_su2(b, LADDER)
    coo = h.H1.tocoo()
    pc = np.array([bin(int(s)).count("1") for s in b.states])
    assert np.all(pc[coo.row] == pc[coo.col])
    # the M_tot=1 block agrees with the full-space oracle as well
    ref = sector_block(ladder_full(4, 15, 5, 3), 4, 1)
    assert np.max(np.abs(h.dense() - ref)) < 1e-12


def test_scheme_mismatch():
    with pytest.raises(SchemeMismatchError):
        assemble_su2(build_so4_basis(2), LADDER)
    with pytest.raises(SchemeMismatchError):
        assemble_so4(build_su2_basis(2), LADDER)


# rung operators -----------------------------------------------------------


def test_rung_operator_matrices():
    ops = rung_operators()
    s00, s1m, s10, s11 = np.eye(4)
    assert np.allclose(ops.Sz @ s11, s11) and np.allclose(ops.Sz @ s00, 0)
    assert np.allclose(ops.Rz @ s00, -s10)
    assert np.allclose(ops.Sm, ops.Sp.T) and np.allclose(ops.Rm, ops.Rp.T)
    comm = ops.Sz @ ops.Sp - ops.Sp @ ops.Sz
    assert np.allclose(comm, ops.Sp)
    comm = ops.Sz @ ops.Rp - ops.Rp @ ops.Sz
    assert np.allclose(comm, ops.Rp)


def test_rung_operators_match_spin_sum_and_difference():
    r = 1 / np.sqrt(2)
    # product index = b0 + 2*b1 with b0 the leg-1 spin (1 = up)
    T = np.zeros((4, 4))
    T[0, [1, 2]] = [r, -r]  # singlet (|ud> - |du>)/sqrt2
    T[1, 0] = 1.0
    T[2, [1, 2]] = [r, r]
    T[3, 3] = 1.0
    assert np.allclose(rung_transform(1), T[[0, 2]][:, [1, 2]])

    sp1 = np.array([[0.0, 0.0], [1.0, 0.0]])
    sz1 = np.diag([-0.5, 0.5])
    one = np.eye(2)
    s1p, s2p = np.kron(one, sp1), np.kron(sp1, one)
    s1z, s2z = np.kron(one, sz1), np.kron(sz1, one)
    ops = rung_operators()
    assert np.allclose(T @ (s1p + s2p) @ T.T, ops.Sp)
    assert np.allclose(T @ (s1z + s2z) @ T.T, ops.Sz)
    # the generators use the opposite singlet phase; flip it and R matches exactly
    T[0] *= -1
    assert np.allclose(T @ (s1p - s2p) @ T.T, ops.Rp)
    assert np.allclose(T @ (s1z - s2z) @ T.T, ops.Rz)


def test_rung_casimir_term():
    assert np.allclose(rung_casimir_term(), np.diag([-0.75, 0.25, 0.25, 0.25]))


# scheme equivalence --------------------------------------------------------


@pytest.mark.parametrize("L", [1, 2, 3, 4])
@pytest.mark.parametrize("J", [(1.0, 1.0, 1.0), (15.0, 5.0, 3.0), (2.5, 5.0, 3.0)])
def test_so4_is_conjugate_of_su2(L, J):
    c = CouplingSet(*J)
    a = assemble_su2(build_su2_basis(L), c).dense()
    b = assemble_so4(build_so4_basis(L), c).dense()
    U = rung_transform(L)
    assert np.max(np.abs(U @ a @ U.T - b)) < 1e-10 * max(1.0, J[0])
    wa, wb = np.linalg.eigvalsh(a)[:4], np.linalg.eigvalsh(b)[:4]
    assert np.allclose(wa, wb, rtol=1e-9, atol=0)


def test_rung_term_identity_under_conjugation():
    # (J_t/4)(S^2 - R^2) reproduces J_t s1.s2 on a single rung
    c = CouplingSet(7.0, 1.0, 1.0)  # L=1 has no leg or diagonal bonds
    a = assemble_su2(build_su2_basis(1), c).dense()
    b = assemble_so4(build_so4_basis(1), c).dense()
    U = rung_transform(1)
    assert np.allclose(U @ a @ U.T, b, atol=1e-12)
    assert np.allclose(np.diag(b), [-0.75 * 7, 0.25 * 7])


# matvec / restrict -----------------------------------------------------------


def test_matvec_basics():
    h = assemble_su2(build_su2_basis(2), CouplingSet(1.0, 1.0, 1.0))
    assert np.array_equal(matvec(h, np.zeros(h.n)), np.zeros(h.n))
    x = np.random.default_rng(0).standard_normal(h.n)
    assert np.allclose(matvec(h, x), h.dense() @ x, atol=1e-12)
    with pytest.raises(DimensionError):
        matvec(h, np.zeros(h.n + 1))


def test_matvec_identity_fragment():
    n = 3
    h = SplitHamiltonian(sp.csr_matrix((n, n)), sp.identity(n, format="csr"), 2.0)
    e1 = np.array([1.0, 0, 0])
    assert np.array_equal(matvec(h, e1), 2 * e1)


def test_matvec_includes_h0():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((2, 5, 5))
    A, B = A + A.T, B + B.T
    h = SplitHamiltonian(sp.csr_matrix(A), sp.csr_matrix(B), 0.7)
    x = rng.standard_normal(5)
    assert np.allclose(h.matvec(x), (A + 0.7 * B) @ x)
    assert np.allclose(h.diagonal(), np.diag(A + 0.7 * B))


def test_restrict():
    h = assemble_su2(build_su2_basis(2), LADDER)
    full = restrict(h, range(h.n))
    assert np.array_equal(full.dense(), h.dense()) and full.g == h.g
    one = restrict(h, [0])
    assert one.dense().shape == (1, 1) and one.dense()[0, 0] == h.dense()[0, 0]
    drop = restrict(h, range(h.n - 1))
    assert np.array_equal(drop.dense(), h.dense()[:-1, :-1])
    mid = restrict(h, [4, 1, 2])
    assert np.array_equal(mid.dense(), h.dense()[np.ix_([1, 2, 4], [1, 2, 4])])
    assert list(mid.basis.states) == list(h.basis.states[[1, 2, 4]])
    with pytest.raises(ValueError):
        restrict(h, [])


def test_permute():
    h = assemble_su2(build_su2_basis(2), LADDER)
    perm = [5, 0, 3, 1, 4, 2]
    p = permute(h, perm)
    assert np.array_equal(p.dense(), h.dense()[np.ix_(perm, perm)])
    with pytest.raises(ValueError):
        permute(h, [0, 0, 1, 2, 3, 4])


def test_with_coupling_rescales():
    h = assemble_su2(build_su2_basis(3), LADDER)
    h2 = h.with_coupling(30.0)
    assert np.allclose(h2.dense(), 2 * h.dense())
    assert h.g == 15.0


def test_dump_matrix(tmp_path):
    m = sp.csr_matrix(np.array([[1.0, 0.5], [0.5, -0.1]]))
    path = tmp_path / "m.txt"
    dump_matrix(m, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == ["1 1 1", "1 2 0.5", "2 1 0.5", "2 2 -0.10000000000000001"]
