import numpy as np
import pytest

from thermoblock.discretization import (
    DirichletBC, Problem, State, assemble_jacobian, assemble_residual, assemble_schur_approx, darcy_flux, harmonic,
    mass_in_place,
)
from thermoblock.mesh import build_grid
from thermoblock.physics import GRAVITY, FluidModel, RockModel, SourceTerm

from _helpers import ConstantViscosityFluid, incompressible_fluid, jacobian_block_errors, perturbed_states
from conftest import small_problem


def test_harmonic_average():
    assert harmonic(1e-13, 3e-13) == pytest.approx(1.5e-13, rel=1e-15)


def test_problem_transmissibility_uses_harmonic_mean():
    g = build_grid((2, 1), (2.0, 1.0))
    rock = RockModel(perm=[[1e-13, 1e-13], [3e-13, 3e-13]], poro=[0.2, 0.2])
    pb = Problem(g, FluidModel(), rock)
    assert pb.trans.perm[0] == pytest.approx(1.5e-13)
    assert pb.trans.flow[0] == pytest.approx(1.5e-13 * 1.0 / 1.0)


def test_uniform_pressure_no_flux(problem):
    st = State.uniform(problem.n, 5e5, 300.0)
    for f in range(problem.grid.n_facets):
        flux, up = darcy_flux(f, st, problem)
        assert flux == 0.0
        assert up == problem.grid.face_a[f]      # ties go to cell_a


def test_two_cell_upwind():
    g = build_grid((2, 1), (2.0, 1.0))
    pb = Problem(g, FluidModel(), RockModel.uniform(2, [3e-13, 3e-13]))
    flux, up = darcy_flux(0, State([6e5, 5e5], [300.0, 350.0]), pb)
    assert up == 0 and flux > 0
    flux, up = darcy_flux(0, State([5e5, 6e5], [300.0, 350.0]), pb)
    assert up == 1 and flux < 0
    fl = pb.fluid
    expected = 3e-13 * fl.density(6e5, 350.0) / fl.viscosity(350.0) * (-1e5)
    assert flux == pytest.approx(expected, rel=1e-12)


def test_equilibrium_residual_is_zero():
    pb = small_problem(sources="none")
    st = State.uniform(pb.n, 4.1369e5, 288.706)
    gm, ge = assemble_residual(st, st, 86400.0, pb)
    assert np.all(gm == 0.0) and np.all(ge == 0.0)


def test_single_cell_injector():
    g = build_grid((1, 1), (2.0, 3.0))
    fl = FluidModel()
    rock = RockModel.uniform(1, [3e-13, 3e-13], poro=0.25)
    q = 1e-6
    pb = Problem(g, fl, rock, [SourceTerm("injector", 0, q_target=q, T_inj=400.0)])
    old = State([4e5], [300.0])
    new = State([4.5e5], [310.0])
    dt = 3600.0
    gm, ge = assemble_residual(new, old, dt, pb)
    V = 6.0
    expected = 0.25 * (fl.density(4.5e5, 310.0) - fl.density(4e5, 300.0)) / dt * V - q * fl.density(4.5e5, 400.0)
    assert gm[0] == pytest.approx(expected, rel=1e-12)
    e_acc = V / dt * (0.25 * fl.c_v * (fl.density(4.5e5, 310.0) * 310.0 - fl.density(4e5, 300.0) * 300.0)
                      + 0.75 * rock.rho_r * rock.c_r * 10.0)
    assert ge[0] == pytest.approx(e_acc - q * fl.density(4.5e5, 400.0) * fl.c_v * 400.0, rel=1e-12)


def test_closed_box_fluxes_telescope():
    pb = small_problem(sources="none")
    old, new = perturbed_states(pb, 3)
    dt = 1e4
    gm, ge = assemble_residual(new, old, dt, pb)
    acc = (mass_in_place(new, pb) - mass_in_place(old, pb)) / dt
    assert gm.sum() == pytest.approx(acc.sum(), rel=1e-9, abs=1e-12 * np.abs(gm).max())


@pytest.mark.parametrize("sources", ["mixed", "heater", "wells", "none"])
@pytest.mark.parametrize("seed", [0, 1])
def test_jacobian_matches_finite_differences(sources, seed):
    pb = small_problem(sources=sources, seed=seed)
    old, new = perturbed_states(pb, seed + 10)
    errs = jacobian_block_errors(new, old, 86400.0, pb)
    assert max(errs.values()) < 1e-6, errs


def test_jacobian_with_gravity_3d():
    pb = small_problem(dims=(2, 2, 3), lengths=(2.0, 2.0, 3.0), sources="wells", gravity=True)
    old, new = perturbed_states(pb, 5)
    errs = jacobian_block_errors(new, old, 86400.0, pb)
    assert max(errs.values()) < 1e-6, errs


def test_jacobian_with_dirichlet_faces():
    pb = small_problem(sources="none")
    faces = np.arange(4)
    p = np.array([5e5, np.nan, 3e5, 4e5])
    pb.dirichlet = DirichletBC(faces, p, [350.0, 300.0, 320.0, 290.0])
    old, new = perturbed_states(pb, 7)
    errs = jacobian_block_errors(new, old, 86400.0, pb)
    assert max(errs.values()) < 1e-6, errs


def test_dirichlet_requires_temperature():
    with pytest.raises(ValueError):
        DirichletBC([0], [1e5], [np.nan])


def test_linear_limit_blocks():
    g = build_grid((3, 3), (3.0, 3.0))
    fl = incompressible_fluid()
    pb = Problem(g, fl, RockModel.uniform(9, [3e-13, 3e-13]))
    rng = np.random.default_rng(2)
    st = State(4e5 + rng.normal(0, 1e4, 9), np.full(9, 300.0))
    J = assemble_jacobian(st, st, 86400.0, pb)
    assert abs(J.ApT).max() == 0.0
    App = J.App.toarray()
    np.testing.assert_allclose(App, App.T, rtol=0, atol=1e-15 * abs(App).max())
    np.testing.assert_allclose(App.sum(axis=1), 0.0, atol=1e-12 * abs(App).max())


def hand_tpfa(nx, ny, hx, hy, k, lam):
    """Directly coded 5-point finite-volume matrix for constant coefficients."""
    n = nx * ny
    A = np.zeros((n, n))
    for j in range(ny):
        for i in range(nx):
            c = i + nx * j
            for di, dj, t in ((1, 0, hy / hx), (-1, 0, hy / hx), (0, 1, hx / hy), (0, -1, hx / hy)):
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < ny:
                    w = k * lam * t
                    A[c, c] += w
                    A[c, ii + nx * jj] -= w
    return A


@pytest.mark.parametrize("nx,ny", [(1, 1), (2, 3), (5, 5), (4, 2)])
def test_tpfa_oracle(nx, ny):
    lengths = (2.0 * nx, 1.5 * ny)
    g = build_grid((nx, ny), lengths)
    fl = incompressible_fluid()
    pb = Problem(g, fl, RockModel.uniform(g.n_cells, [2e-13, 2e-13]))
    st = State.uniform(g.n_cells, 4e5, 300.0)
    App = assemble_jacobian(st, st, 1.0, pb).App.toarray()
    lam = fl.density(4e5, 300.0) / fl.viscosity(300.0)
    ref = hand_tpfa(nx, ny, 2.0, 1.5, 2e-13, lam)
    np.testing.assert_allclose(App, ref, rtol=0, atol=1e-12 * max(abs(ref).max(), 1e-300))


def test_heater_adds_U_to_ATT_diagonal():
    g = build_grid((3, 3), (3.0, 3.0))
    rock = RockModel.uniform(9, [3e-13, 3e-13])
    st = State.uniform(9, 4e5, 300.0)
    J0 = assemble_jacobian(st, st, 86400.0, Problem(g, FluidModel(), rock))
    src = SourceTerm("heater", 4)
    J1 = assemble_jacobian(st, st, 86400.0, Problem(g, FluidModel(), rock, [src]))
    dTT = (J1.ATT - J0.ATT).toarray()
    expected = np.zeros((9, 9))
    expected[4, 4] = src.U
    np.testing.assert_allclose(dTT, expected, atol=1e-12 * src.U)
    assert abs(J1.ATp - J0.ATp).max() == 0.0


def test_hydrostatic_column_has_no_flux():
    g = build_grid((1, 1, 6), (1.0, 1.0, 6.0))
    fl = incompressible_fluid()
    pb = Problem(g, fl, RockModel.uniform(6, [3e-13] * 3), gravity=True)
    z = g.cell_centers[:, 2]
    rho = fl.density(0.0, 300.0)
    st = State(1e6 - rho * GRAVITY * z, np.full(6, 300.0))
    gm, ge = assemble_residual(st, st, 86400.0, pb)
    assert np.abs(gm).max() < 1e-12 * 1e-6 * rho
    # pressure uniform instead: fluid moves down (out of the upper cells)
    st2 = State.uniform(6, 1e6, 300.0)
    gm2, _ = assemble_residual(st2, st2, 86400.0, pb)
    assert gm2[-1] > 0 and gm2[0] < 0


def test_schur_approx_without_flow_is_spd():
    pb = small_problem(sources="none")
    st = State.uniform(pb.n, 4.1369e5, 300.0)
    S = assemble_schur_approx(st, 86400.0, pb).toarray()
    np.testing.assert_allclose(S, S.T, rtol=1e-14, atol=0)
    assert np.linalg.eigvalsh(S).min() > 0
    J = assemble_jacobian(st, st, 86400.0, pb)
    # without flow, S_e equals ATT minus the rho_T * T accumulation part
    V, phi = pb.grid.cell_volumes, pb.rock.poro
    rho_T = pb.fluid.density_dT(st.p, st.T)
    np.testing.assert_allclose(J.ATT.toarray() - np.diag(V * phi * pb.fluid.c_v * rho_T * st.T / 86400.0), S, rtol=1e-12)


def test_schur_approx_structure(problem):
    old, new = perturbed_states(problem, 4)
    S = assemble_schur_approx(new, 86400.0, problem)
    J = assemble_jacobian(new, old, 86400.0, problem)
    np.testing.assert_array_equal(S.indptr, J.ATT.indptr)
    np.testing.assert_array_equal(S.indices, J.ATT.indices)
    # conduction part is symmetric: remove advection by a no-flow state
    st = State.uniform(problem.n, 4e5, 300.0)
    C = assemble_schur_approx(st, 86400.0, problem).toarray()
    np.testing.assert_allclose(C - np.diag(np.diag(C)), (C - np.diag(np.diag(C))).T)


def test_schur_approx_source_terms():
    g = build_grid((3, 1), (3.0, 1.0))
    rock = RockModel.uniform(3, [3e-13, 3e-13])
    st = State.uniform(3, 4e5, 300.0)
    base = assemble_schur_approx(st, 86400.0, Problem(g, FluidModel(), rock)).toarray()
    q = 2e-7
    pb = Problem(g, FluidModel(), rock, [SourceTerm("heater", 0), SourceTerm("producer", 2, q_target=q)])
    S = assemble_schur_approx(st, 86400.0, pb).toarray()
    fl = pb.fluid
    assert S[0, 0] - base[0, 0] == pytest.approx(5.44409e-6, rel=1e-10)
    assert S[2, 2] - base[2, 2] == pytest.approx(fl.c_v * q * fl.density(4e5, 300.0), rel=1e-10)


def test_state_validation():
    with pytest.raises(ValueError):
        State([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        State([np.nan], [300.0])
    with pytest.raises(ValueError):
        assemble_residual(State([1e5], [300.0]), State([1e5], [300.0]), 0.0, small_problem((1, 1), (1.0, 1.0), sources="none"))
