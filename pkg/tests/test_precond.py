import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from thermoblock import precond as pc
from thermoblock.discretization import BlockJacobian, State, assemble_jacobian, assemble_schur_approx
from thermoblock.linalg import BlockVector, as_csr, gmres

from _helpers import perturbed_states
from conftest import small_problem

EXACT_BLOCK = pc.PreconditionerConfig(kind="block", schur="exact", inner="exact")
EXACT_CPR = pc.PreconditionerConfig(kind="cpr", inner="exact")


def scalar_jacobian(App, ApT, ATp, ATT, bp=0.0, bT=0.0):
    m = lambda v: as_csr(np.array([[float(v)]]))
    return BlockJacobian(m(App), m(ApT), m(ATp), m(ATT), np.array([bp]), np.array([bT]))


def random_jacobian(n, seed, coupled=True):
    """Diagonally dominant 2x2 block system with M-matrix-like diagonal blocks."""
    rng = np.random.default_rng(seed)

    def mmatrix():
        B = -np.abs(sp.random(n, n, density=0.3, random_state=rng).toarray())
        np.fill_diagonal(B, 0.0)
        return B + np.diag(np.abs(B).sum(axis=1) + 1.0 + rng.random(n))

    App, ATT = mmatrix(), mmatrix()
    c = 0.3 if coupled else 0.0
    ApT = c * sp.random(n, n, density=0.3, random_state=rng).toarray()
    ATp = c * sp.random(n, n, density=0.3, random_state=rng).toarray()
    return BlockJacobian(as_csr(App), as_csr(ApT), as_csr(ATp), as_csr(ATT), rng.random(n), rng.random(n))


def test_block_hand_example():
    J = scalar_jacobian(2.0, 1.0, 1.0, 3.0)
    inst = pc.build(EXACT_BLOCK, J)
    out = pc.apply_block(inst, BlockVector([1.0], [1.0]))
    assert out.T[0] == pytest.approx(0.2, rel=1e-14)
    assert out.p[0] == pytest.approx(0.4, rel=1e-14)
    np.testing.assert_allclose(pc.dense_schur(J), [[2.5]])


def test_cpr_hand_example():
    J = scalar_jacobian(2.0, 0.0, 0.0, 4.0)
    inst = pc.build(EXACT_CPR, J)
    out = pc.apply_cpr(inst, BlockVector([1.0], [1.0]))
    np.testing.assert_allclose(out.flat(), [0.5, 0.25], rtol=1e-14)
    # default (AMG + ILU(0)) stages are exact on 1x1 blocks as well
    inst = pc.build(pc.PreconditionerConfig(kind="cpr"), J)
    np.testing.assert_allclose(inst(np.ones(2)), [0.5, 0.25], rtol=1e-14)


def test_cpr_identity_map():
    n = 10
    I = as_csr(sp.identity(n))
    Z = as_csr(sp.csr_matrix((n, n)))
    J = BlockJacobian(I, Z, Z, I, np.zeros(n), np.zeros(n))
    r = np.random.default_rng(0).random(2 * n)
    np.testing.assert_allclose(pc.build(pc.PreconditionerConfig(kind="cpr"), J)(r), r, rtol=1e-14)


def test_cpr_zero_pressure_residual_skips_stage_one():
    J = random_jacobian(12, 1)
    J = BlockJacobian(J.App, J.ApT, as_csr(sp.csr_matrix(J.ATp.shape)), J.ATT, J.bp, J.bT)
    inst = pc.build(pc.PreconditionerConfig(kind="cpr"), J)
    r = np.concatenate([np.zeros(12), np.random.default_rng(3).random(12)])
    np.testing.assert_allclose(inst(r), inst.stage2(r), rtol=1e-14)


def test_block_diagonal_limit():
    J = random_jacobian(15, 2, coupled=False)
    inst = pc.build(pc.PreconditionerConfig(kind="block", schur="s_att", inner="exact"), J)
    r = BlockVector(np.ones(15), np.arange(15.0))
    out = inst.apply(r)
    np.testing.assert_allclose(out.p, np.linalg.solve(J.App.toarray(), r.p))
    np.testing.assert_allclose(out.T, np.linalg.solve(J.ATT.toarray(), r.T))


def test_block_decoupled_amg_two_iterations():
    # 64 cells: both AMG hierarchies are a single (directly solved) level
    pb = small_problem(dims=(8, 8), lengths=(8.0, 8.0), sources="none", hetero=False)
    st = State.uniform(pb.n, 4e5, 300.0)
    J = assemble_jacobian(st, st, 86400.0, pb)
    Z = as_csr(sp.csr_matrix(J.ApT.shape))
    J = BlockJacobian(J.App + sp.identity(pb.n) * J.App.diagonal().mean(), Z, Z, J.ATT, J.bp, np.ones(pb.n))
    inst = pc.build(pc.PreconditionerConfig(kind="block", schur="s_att"), J)
    res = gmres(J.matvec, np.ones(2 * pb.n), inst, rtol=1e-8)
    assert res.converged and res.iterations <= 2


def test_s_diag_exact_for_diagonal_App():
    J = random_jacobian(8, 4)
    J = BlockJacobian(as_csr(sp.diags(J.App.diagonal())), J.ApT, J.ATp, J.ATT, J.bp, J.bT)
    np.testing.assert_allclose(pc.schur_diag(J).toarray(), pc.dense_schur(J), rtol=1e-13)


def test_schur_matrix_selection():
    J = random_jacobian(6, 5)
    assert (pc.schur_matrix(J, "s_att") != J.ATT).nnz == 0
    with pytest.raises(ValueError):
        pc.schur_matrix(J, "s_tilde_T")
    with pytest.raises(ValueError):
        pc.PreconditionerConfig(schur="bogus")
    with pytest.raises(ValueError):
        pc.PreconditionerConfig(kind="ilu")


@pytest.mark.parametrize("config", [pc.PreconditionerConfig(kind="block"), pc.PreconditionerConfig(kind="cpr"),
                                    pc.PreconditionerConfig(kind="cpr", decoupling="quasi_impes"),
                                    pc.PreconditionerConfig(kind="block", schur="s_diag")])
def test_preconditioners_are_linear_and_pure(config):
    pb = small_problem(dims=(10, 9), lengths=(10.0, 9.0))
    old, new = perturbed_states(pb, 2)
    J = assemble_jacobian(new, old, 86400.0, pb)
    before = [M.copy() for M in (J.App, J.ApT, J.ATp, J.ATT)]
    inst = pc.build(config, J, assemble_schur_approx(new, 86400.0, pb))
    rng = np.random.default_rng(0)
    r1, r2 = rng.random(2 * pb.n), rng.random(2 * pb.n)
    assert np.all(inst(np.zeros(2 * pb.n)) == 0)
    lhs = inst(1.5 * r1 - 0.5 * r2)
    rhs = 1.5 * inst(r1) - 0.5 * inst(r2)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)
    for M0, M in zip(before, (J.App, J.ApT, J.ATp, J.ATT)):
        assert (M0 != M).nnz == 0


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 20), st.integers(0, 1000))
def test_exact_block_is_inverse(n, seed):
    J = random_jacobian(n, seed)
    A = J.full().toarray()
    inst = pc.build(EXACT_BLOCK, J)
    r = np.random.default_rng(seed).random(2 * n)
    np.testing.assert_allclose(inst(r), np.linalg.solve(A, r), rtol=1e-9, atol=1e-12)
    res = gmres(J.matvec, J.rhs, inst, rtol=1e-8)
    assert res.converged and res.iterations == 1


def test_decoupling_no_coupling_is_identity():
    J = random_jacobian(5, 6)
    J = BlockJacobian(J.App, as_csr(sp.csr_matrix((5, 5))), J.ATp, J.ATT, J.bp, J.bT)
    for mode in ("quasi_impes", "true_impes"):
        out, d = pc.decoupling_operator(J, mode)
        assert np.all(d == 0)
        np.testing.assert_array_equal(out.App.toarray(), J.App.toarray())
        np.testing.assert_array_equal(out.bp, J.bp)


def test_quasi_impes_annihilates_diagonal():
    J = random_jacobian(7, 7)
    out, d = pc.decoupling_operator(J, "quasi_impes")
    np.testing.assert_allclose(d, J.ApT.diagonal() / J.ATT.diagonal())
    np.testing.assert_allclose(out.ApT.diagonal(), 0.0, atol=1e-15)
    np.testing.assert_allclose(out.App.toarray(), J.App.toarray() - np.diag(d) @ J.ATp.toarray())
    np.testing.assert_allclose(out.bp, J.bp - d * J.bT)


def test_true_impes_annihilates_colsum():
    # exact annihilation of the column sums needs a diagonal ATT; in general it is approximate
    J = random_jacobian(7, 8)
    J = BlockJacobian(J.App, J.ApT, J.ATp, as_csr(sp.diags(J.ATT.diagonal())), J.bp, J.bT)
    out, d = pc.decoupling_operator(J, "true_impes")
    np.testing.assert_allclose(d, pc.colsum(J.ApT) / J.ATT.diagonal())
    np.testing.assert_allclose(pc.colsum(out.ApT), 0.0, atol=1e-14)


def test_colsum_hand():
    np.testing.assert_array_equal(pc.colsum(as_csr([[1.0, 2.0], [3.0, 4.0]])), [4.0, 6.0])


def test_decoupling_zero_denominator():
    J = scalar_jacobian(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ZeroDivisionError):
        pc.decoupling_operator(J, "quasi_impes")


def test_interleave_permutation():
    np.testing.assert_array_equal(pc.interleave_permutation(3), [0, 3, 1, 4, 2, 5])


@pytest.mark.parametrize("decoupling", ["none", "quasi_impes", "true_impes"])
def test_exact_cpr_one_iteration(decoupling):
    J = random_jacobian(20, 9)
    inst = pc.build(pc.PreconditionerConfig(kind="cpr", inner="exact", decoupling=decoupling), J)
    res = gmres(J.matvec, J.rhs, inst, rtol=1e-8)
    assert res.converged and res.iterations == 1


def test_labels():
    assert pc.PreconditionerConfig().label == "block[s_tilde_T]"
    assert pc.PreconditionerConfig(kind="cpr", decoupling="true_impes").label == "cpr[true_impes]"
