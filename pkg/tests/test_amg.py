import numpy as np
import pyamg
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from pyamg.classical.split import RS
from pyamg.strength import classical_strength_of_connection

from thermoblock.amg import AmgOptions, build_hierarchy, coarsen, interpolation, strength_graph, vcycle
from thermoblock.linalg import as_csr, gmres


def poisson(shape):
    return as_csr(pyamg.gallery.poisson(shape, format="csr"))


def graph_laplacian_1d(n):
    A = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)).tolil()
    A[0, 0] = A[n - 1, n - 1] = 1.0
    return as_csr(A)


def test_strength_identity_is_empty():
    assert strength_graph(sp.identity(5, format="csr")).nnz == 0


def test_strength_1d_poisson_all_strong():
    A = poisson((6,))
    S = strength_graph(A, 0.25)
    off = (A - sp.diags(A.diagonal())).astype(bool)
    assert (S != off).nnz == 0


def test_strength_weak_connection_dropped():
    A = as_csr([[2.0, -1.0, -0.1], [-1.0, 2.0, 0.0], [-0.1, 0.0, 2.0]])
    S = strength_graph(A, 0.25).toarray()
    assert S[0].tolist() == [False, True, False]
    # positive couplings are never strong
    B = as_csr([[2.0, 1.0], [1.0, 2.0]])
    assert strength_graph(B).nnz == 0


def test_strength_matches_reference():
    A = as_csr(pyamg.gallery.stencil_grid(pyamg.gallery.diffusion_stencil_2d(0.001, np.pi / 6), (12, 12), format="csr"))
    ref = classical_strength_of_connection(A, 0.25, norm="min")
    ref = ref - sp.diags(ref.diagonal())
    ref.eliminate_zeros()
    assert (strength_graph(A, 0.25) != ref.astype(bool)).nnz == 0


def test_empty_graph_all_coarse():
    S = strength_graph(sp.identity(7, format="csr"))
    assert coarsen(S).tolist() == [1] * 7


def test_1d_poisson_alternating():
    split = coarsen(strength_graph(poisson((5,))))
    assert split.tolist() in ([0, 1, 0, 1, 0], [1, 0, 1, 0, 1])


def test_2d_poisson_red_black():
    split = coarsen(strength_graph(poisson((4, 4)))).reshape(4, 4)
    assert split.mean() == pytest.approx(0.5)
    # no two C-points are horizontal or vertical neighbours
    assert not np.any(split[:, 1:] & split[:, :-1]) and not np.any(split[1:] & split[:-1])


@pytest.mark.parametrize("shape", [(5,), (17,), (4, 4), (20, 20), (9, 13)])
def test_splitting_matches_reference(shape):
    A = poisson(shape)
    ref = RS(classical_strength_of_connection(A, 0.25, norm="min"), second_pass=True)
    np.testing.assert_array_equal(coarsen(strength_graph(A)), ref)


def test_splitting_properties_random_mmatrix():
    rng = np.random.default_rng(3)
    A = pyamg.gallery.stencil_grid(pyamg.gallery.diffusion_stencil_2d(0.05, 0.7), (25, 25), format="csr")
    A = as_csr(A + sp.diags(rng.random(A.shape[0])))
    S = strength_graph(A)
    split = coarsen(S)
    for i in np.nonzero(split == 0)[0]:
        nbrs = S.indices[S.indptr[i]:S.indptr[i + 1]]
        assert split[nbrs].any(), f"F-point {i} without a strong C neighbour"


def test_interpolation_all_coarse_is_identity():
    A = poisson((6,))
    P = interpolation(A, np.ones(6, dtype=np.int8), strength_graph(A))
    np.testing.assert_array_equal(P.toarray(), np.eye(6))


def test_interpolation_1d_weights():
    A = poisson((7,))
    split = np.array([0, 1, 0, 1, 0, 1, 0], dtype=np.int8)
    P = interpolation(A, split, strength_graph(A)).toarray()
    np.testing.assert_allclose(P[2], [0.5, 0.5, 0.0])
    np.testing.assert_allclose(P[4], [0.0, 0.5, 0.5])
    np.testing.assert_allclose(P[1], [1.0, 0.0, 0.0])


@pytest.mark.parametrize("A", [graph_laplacian_1d(31), None])
def test_interpolation_preserves_constants(A):
    if A is None:
        L = pyamg.gallery.poisson((12, 12), format="csr")
        A = as_csr(L - sp.diags(np.asarray(L.sum(axis=1)).ravel()))   # zero row sums
    S = strength_graph(A)
    P = interpolation(A, coarsen(S), S)
    np.testing.assert_allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0, rtol=1e-13)


def test_hierarchy_invariants():
    A = poisson((40, 40))
    h = build_hierarchy(A)
    sizes = h.sizes
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] <= h.options.coarse_threshold
    for lvl, nxt in zip(h.levels, h.levels[1:]):
        G = (lvl.R @ lvl.A @ lvl.P).toarray()
        np.testing.assert_allclose(nxt.A.toarray(), G, rtol=0, atol=1e-12 * abs(G).max())
        assert (lvl.R != lvl.P.T).nnz == 0
    assert 1.0 < h.operator_complexity() < 3.0


def test_single_level_is_exact():
    A = poisson((7, 7))
    h = build_hierarchy(A, AmgOptions(coarse_threshold=100))
    assert len(h.levels) == 1
    b = np.random.default_rng(0).random(49)
    np.testing.assert_allclose(A @ vcycle(h, b), b, rtol=1e-12)


def test_vcycle_convergence_factor():
    A = poisson((63,))
    h = build_hierarchy(A, AmgOptions(coarse_threshold=4))
    assert len(h.levels) > 2
    rng = np.random.default_rng(1)
    b = rng.random(63)
    exact = sla.solve(A.toarray(), b)
    x = np.zeros(63)
    err = np.linalg.norm(exact)
    for _ in range(4):
        x = x + vcycle(h, b - A @ x)
        new = np.linalg.norm(exact - x)
        assert new <= err / 5
        err = new


def test_vcycle_is_linear():
    A = poisson((30, 30))
    h = build_hierarchy(A)
    rng = np.random.default_rng(2)
    b1, b2 = rng.random(900), rng.random(900)
    assert np.all(h(np.zeros(900)) == 0)
    lhs = h(2.0 * b1 - 3.0 * b2)
    rhs = 2.0 * h(b1) - 3.0 * h(b2)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_nonsymmetric_advection_diffusion():
    n = 40
    D = pyamg.gallery.poisson((n, n), format="csr")
    # upwind advection in x
    e = np.ones(n)
    C = sp.diags([-e[:-1], e], [-1, 0], shape=(n, n))
    A = as_csr(D + 5.0 * sp.kron(sp.identity(n), C))
    h = build_hierarchy(A)
    res = gmres(A, np.ones(n * n), h, rtol=1e-8)
    assert res.converged and res.iterations < 30


def test_poisson_gmres_iterations_mesh_independent():
    its = {}
    for n in (32, 64, 128):
        A = poisson((n, n))
        res = gmres(A, np.ones(n * n), build_hierarchy(A), rtol=1e-8)
        assert res.converged
        its[n] = res.iterations
    assert its[64] <= 25
    assert its[128] <= 1.5 * its[32]


@pytest.mark.parametrize("kw", [{"strength_threshold": 0.0}, {"strength_threshold": 1.0}, {"pre_sweeps": -1},
                                {"max_levels": 0}, {"smoother": "jacobi"}])
def test_options_validation(kw):
    with pytest.raises(ValueError):
        AmgOptions(**kw)
