"""Cell-centred TPFA discretization of coupled mass and energy conservation.

Residual ordering: mass equations (pressure block) first, energy equations second.
Facet orientation: cell ``a`` is the "+" side, jumps are ``v_a - v_b`` and a
positive facet flux leaves ``a``. Gravity acts along the last axis (pointing
towards decreasing coordinate) and is only switched on for 3D cases.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .physics import GRAVITY, source_contributions


def harmonic(a, b):
    return 2.0 * a * b / (a + b)


@dataclass
class State:
    p: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.T = np.asarray(self.T, dtype=float)
        if self.p.shape != self.T.shape or self.p.ndim != 1:
            raise ValueError("p and T must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.T))):
            raise ValueError("state contains non-finite values")

    @classmethod
    def uniform(cls, n, p, T):
        return cls(np.full(n, float(p)), np.full(n, float(T)))

    def as_vector(self):
        return np.concatenate([self.p, self.T])

    @classmethod
    def from_vector(cls, x):
        n = len(x) // 2
        return cls(x[:n].copy(), x[n:].copy())

    def copy(self):
        return State(self.p.copy(), self.T.copy())


@dataclass
class DirichletBC:
    """Prescribed boundary values on selected boundary facets.

    ``p`` entries may be NaN (no mass exchange across that facet); ``T`` must be
    finite on every listed facet.
    """
    faces: np.ndarray
    p: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.p = np.broadcast_to(np.asarray(self.p, dtype=float), self.faces.shape).copy()
        self.T = np.broadcast_to(np.asarray(self.T, dtype=float), self.faces.shape).copy()
        if not np.all(np.isfinite(self.T)):
            raise ValueError("Dirichlet temperature required on every listed facet")


@dataclass(eq=False)
class Transmissibility:
    geo: np.ndarray       # area / centre distance
    perm: np.ndarray      # harmonic permeability along the facet normal
    cond: np.ndarray      # harmonic thermal conductivity
    dz: np.ndarray        # vertical offset z_b - z_a (0 without gravity)

    @property
    def flow(self):
        return self.perm * self.geo

    @property
    def heat(self):
        return self.cond * self.geo


@dataclass(eq=False)
class Problem:
    """Everything the assembly needs besides the two time levels."""
    grid: object
    fluid: object
    rock: object
    sources: list = field(default_factory=list)
    gravity: bool = False
    dirichlet: DirichletBC = None

    def __post_init__(self):
        n = self.grid.n_cells
        if self.rock.perm.shape[0] != n or self.rock.poro.shape[0] != n:
            raise ValueError("rock fields do not match the grid")
        if self.rock.perm.shape[1] < self.grid.ndim:
            raise ValueError("need one permeability per axis")
        for s in self.sources:
            if not 0 <= s.cell < n:
                raise IndexError(f"source cell {s.cell} outside grid")
            s.bind(self.rock)

    @property
    def n(self):
        return self.grid.n_cells

    @property
    def g(self):
        return GRAVITY if self.gravity else 0.0

    @cached_property
    def conductivity(self):
        return self.rock.conductivity(self.fluid)

    @cached_property
    def trans(self):
        g = self.grid
        a, b, ax = g.face_a, g.face_b, g.face_axis
        perm = harmonic(self.rock.perm[a, ax], self.rock.perm[b, ax])
        kt = self.conductivity
        dz = np.zeros(len(a))
        if self.gravity:
            z = g.cell_centers[:, -1]
            dz = z[b] - z[a]
        return Transmissibility(g.transmissibility_geometry(), perm, harmonic(kt[a], kt[b]), dz)

    @cached_property
    def pattern(self):
        """Row/col index arrays of the shared TPFA sparsity and the CSR permutation."""
        n = self.n
        a, b = self.grid.face_a, self.grid.face_b
        rows = np.concatenate([np.arange(n), a, a, b, b])
        cols = np.concatenate([np.arange(n), a, b, a, b])
        key = rows * n + cols
        uniq, inv = np.unique(key, return_inverse=True)
        r, c = np.divmod(uniq, n)
        indptr = np.zeros(n + 1, dtype=np.int32)
        np.add.at(indptr, r + 1, 1)
        indptr = np.cumsum(indptr).astype(np.int32)
        return inv, c.astype(np.int32), indptr, len(uniq)

    def csr(self, diag, aa, ab, ba, bb):
        """CSR matrix on the TPFA pattern from diagonal and per-facet 2x2 contributions."""
        inv, indices, indptr, nnz = self.pattern
        vals = np.bincount(inv, weights=np.concatenate([diag, aa, ab, ba, bb]), minlength=nnz)
        return sp.csr_matrix((vals, indices.copy(), indptr.copy()), shape=(self.n, self.n))


@dataclass(eq=False)
class BlockJacobian:
    """Newton system ``[[App, ApT], [ATp, ATT]] [dp; dT] = [bp; bT]`` with ``b = -G``."""
    App: sp.csr_matrix
    ApT: sp.csr_matrix
    ATp: sp.csr_matrix
    ATT: sp.csr_matrix
    bp: np.ndarray
    bT: np.ndarray

    @property
    def n(self):
        return self.App.shape[0]

    @property
    def rhs(self):
        return np.concatenate([self.bp, self.bT])

    def full(self):
        return sp.bmat([[self.App, self.ApT], [self.ATp, self.ATT]], format="csr")

    def matvec(self, x):
        n = self.n
        xp, xT = x[:n], x[n:]
        return np.concatenate([self.App @ xp + self.ApT @ xT, self.ATp @ xp + self.ATT @ xT])


def _cell_props(state, problem):
    fl = problem.fluid
    rho = fl.density(state.p, state.T)
    rho_p = fl.c * rho
    rho_T = fl.thermal_coefficient * rho
    mu, mu_T = fl.viscosity_and_dT(state.T)
    lam = rho / mu
    return rho, rho_p, rho_T, mu, mu_T, lam, rho_p / mu, rho_T / mu - rho * mu_T / mu**2


def darcy_flux(facet, state, problem):
    """Mass flux (kg/s, positive from ``cell_a`` to ``cell_b``) and the upwind cell for one facet index."""
    fl = problem.fluid
    a, b = int(problem.grid.face_a[facet]), int(problem.grid.face_b[facet])
    tr = problem.trans
    rho_a, rho_b = fl.density(state.p[a], state.T[a]), fl.density(state.p[b], state.T[b])
    phi = state.p[a] - state.p[b] - 0.5 * (rho_a + rho_b) * problem.g * tr.dz[facet]
    up = a if phi >= 0 else b
    lam = fl.density(state.p[up], state.T[up]) / fl.viscosity(state.T[up])
    return float(tr.flow[facet] * lam * phi), up


class _Fluxes:
    """Facet fluxes and their derivatives at one state (upwind frozen)."""

    def __init__(self, state, problem, props):
        rho, rho_p, rho_T, mu, mu_T, lam, lam_p, lam_T = props
        tr = problem.trans
        a, b = problem.grid.face_a, problem.grid.face_b
        g = problem.g
        gdz = g * tr.dz
        self.phi = state.p[a] - state.p[b] - 0.5 * (rho[a] + rho[b]) * gdz
        self.up_a = self.phi >= 0
        u = np.where(self.up_a, a, b)
        self.u = u
        t = tr.flow
        self.F = t * lam[u] * self.phi
        ua = self.up_a.astype(float)
        ub = 1.0 - ua
        self.dF_dpa = t * (lam_p[u] * ua * self.phi + lam[u] * (1.0 - 0.5 * gdz * rho_p[a]))
        self.dF_dpb = t * (lam_p[u] * ub * self.phi + lam[u] * (-1.0 - 0.5 * gdz * rho_p[b]))
        self.dF_dTa = t * (lam_T[u] * ua * self.phi - lam[u] * 0.5 * gdz * rho_T[a])
        self.dF_dTb = t * (lam_T[u] * ub * self.phi - lam[u] * 0.5 * gdz * rho_T[b])
        self.ua, self.ub = ua, ub
        self.Tu = state.T[u]


def _boundary_terms(state, problem, props):
    """Dirichlet boundary fluxes: per-face (cell, F, dF/dp, dF/dT, H, dH/dp, dH/dT, upwind-is-cell, Fc)."""
    bc = problem.dirichlet
    if bc is None or len(bc.faces) == 0:
        return None
    grid, fl = problem.grid, problem.fluid
    rho, rho_p, rho_T, mu, mu_T, lam, lam_p, lam_T = props
    f = bc.faces
    c = grid.bface_cell[f]
    geo = grid.bface_area[f] / grid.bface_dist[f]
    ax = grid.bface_axis[f]
    kperm = problem.rock.perm[c, ax]
    kt = problem.conductivity[c]
    has_p = np.isfinite(bc.p)
    pD = np.where(has_p, bc.p, state.p[c])
    TD = bc.T
    rhoD = fl.density(pD, TD)
    lamD = rhoD / fl.viscosity(TD)
    dz = np.zeros(len(f))
    if problem.gravity:
        dz = np.where(ax == grid.ndim - 1, grid.bface_sign[f] * grid.bface_dist[f], 0.0)
    gdz = problem.g * dz
    phi = np.where(has_p, state.p[c] - pD - 0.5 * (rho[c] + rhoD) * gdz, 0.0)
    upc = phi >= 0
    t = kperm * geo * has_p
    lam_up = np.where(upc, lam[c], lamD)
    F = t * lam_up * phi
    dF_dp = t * (np.where(upc, lam_p[c], 0.0) * phi + lam_up * (1.0 - 0.5 * gdz * rho_p[c]))
    dF_dT = t * (np.where(upc, lam_T[c], 0.0) * phi - lam_up * 0.5 * gdz * rho_T[c])
    cv = fl.c_v
    Tup = np.where(upc, state.T[c], TD)
    tc = kt * geo
    H = cv * Tup * F + tc * (state.T[c] - TD)
    dH_dp = cv * Tup * dF_dp
    dH_dT = cv * Tup * dF_dT + cv * F * upc + tc
    return c, F, dF_dp, dF_dT, H, dH_dp, dH_dT, upc, tc


def _accumulation(state_new, state_old, dt, problem, props):
    fl, rock = problem.fluid, problem.rock
    V = problem.grid.cell_volumes
    phi = rock.poro
    rho, rho_p, rho_T = props[:3]
    rho_old = fl.density(state_old.p, state_old.T)
    cv = fl.c_v
    rc = (1.0 - phi) * rock.rho_r * rock.c_r
    m = V * phi * (rho - rho_old) / dt
    e = V * (phi * cv * (rho * state_new.T - rho_old * state_old.T) + rc * (state_new.T - state_old.T)) / dt
    return m, e


def _sources(state, problem):
    """Integrated source terms and derivatives per cell: arrays (f, fT, fp, fT_, fTp, fTT) * |E|."""
    n = problem.n
    out = np.zeros((6, n))
    V = problem.grid.cell_volumes
    for s in problem.sources:
        i = s.cell
        vals = source_contributions(s, state.p[i], state.T[i], problem.fluid, V[i])
        out[:, i] += np.asarray(vals) * V[i]
    return out


def assemble_residual(state_new, state_old, dt, problem):
    """Nonlinear residual ``(G_mass, G_energy)`` in kg/s and W."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    props = _cell_props(state_new, problem)
    return _residual(state_new, state_old, dt, problem, props)


def _residual(state_new, state_old, dt, problem, props, fx=None):
    n = problem.n
    a, b = problem.grid.face_a, problem.grid.face_b
    gm, ge = _accumulation(state_new, state_old, dt, problem, props)
    fx = fx or _Fluxes(state_new, problem, props)
    H = problem.fluid.c_v * fx.Tu * fx.F + problem.trans.heat * (state_new.T[a] - state_new.T[b])
    gm = gm + np.bincount(a, fx.F, n) - np.bincount(b, fx.F, n)
    ge = ge + np.bincount(a, H, n) - np.bincount(b, H, n)
    bt = _boundary_terms(state_new, problem, props)
    if bt is not None:
        c, F, _, _, Hb = bt[:5]
        gm += np.bincount(c, F, n)
        ge += np.bincount(c, Hb, n)
    if problem.sources:
        src = _sources(state_new, problem)
        gm -= src[0]
        ge -= src[1]
    return gm, ge


def assemble_jacobian(state_new, state_old, dt, problem):
    """Analytic Newton Jacobian (upwind direction frozen at ``state_new``) and ``-G``."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    n = problem.n
    fl, rock = problem.fluid, problem.rock
    props = _cell_props(state_new, problem)
    rho, rho_p, rho_T = props[:3]
    fx = _Fluxes(state_new, problem, props)
    gm, ge = _residual(state_new, state_old, dt, problem, props, fx)

    V = problem.grid.cell_volumes
    phi = rock.poro
    cv = fl.c_v
    T = state_new.T
    rc = (1.0 - phi) * rock.rho_r * rock.c_r
    d_pp = V * phi * rho_p / dt
    d_pT = V * phi * rho_T / dt
    d_Tp = V * phi * cv * rho_p * T / dt
    d_TT = V * (phi * cv * (rho + rho_T * T) + rc) / dt

    bt = _boundary_terms(state_new, problem, props)
    if bt is not None:
        c, _, dF_dp, dF_dT, _, dH_dp, dH_dT = bt[:7]
        d_pp = d_pp + np.bincount(c, dF_dp, n)
        d_pT = d_pT + np.bincount(c, dF_dT, n)
        d_Tp = d_Tp + np.bincount(c, dH_dp, n)
        d_TT = d_TT + np.bincount(c, dH_dT, n)
    if problem.sources:
        src = _sources(state_new, problem)
        d_pp = d_pp - src[2]
        d_pT = d_pT - src[3]
        d_Tp = d_Tp - src[4]
        d_TT = d_TT - src[5]

    tc = problem.trans.heat
    Tu = fx.Tu
    dH_dpa = cv * Tu * fx.dF_dpa
    dH_dpb = cv * Tu * fx.dF_dpb
    dH_dTa = cv * Tu * fx.dF_dTa + cv * fx.F * fx.ua + tc
    dH_dTb = cv * Tu * fx.dF_dTb + cv * fx.F * fx.ub - tc

    csr = problem.csr
    App = csr(d_pp, fx.dF_dpa, fx.dF_dpb, -fx.dF_dpa, -fx.dF_dpb)
    ApT = csr(d_pT, fx.dF_dTa, fx.dF_dTb, -fx.dF_dTa, -fx.dF_dTb)
    ATp = csr(d_Tp, dH_dpa, dH_dpb, -dH_dpa, -dH_dpb)
    ATT = csr(d_TT, dH_dTa, dH_dTb, -dH_dTa, -dH_dTb)
    return BlockJacobian(App, ApT, ATp, ATT, -gm, -ge)


def assemble_schur_approx(state_new, dt, problem):
    """Sparse temperature-Schur approximation: accumulation, upwind advection, conduction, heaters, producers."""
    n = problem.n
    fl, rock = problem.fluid, problem.rock
    props = _cell_props(state_new, problem)
    rho = props[0]
    fx = _Fluxes(state_new, problem, props)
    V = problem.grid.cell_volumes
    phi = rock.poro
    cv = fl.c_v
    diag = V * (phi * cv * rho + (1.0 - phi) * rock.rho_r * rock.c_r) / dt

    bt = _boundary_terms(state_new, problem, props)
    if bt is not None:
        c, F, upc, tcb = bt[0], bt[1], bt[7], bt[8]
        diag = diag + np.bincount(c, tcb + cv * F * upc, n)
    for s in problem.sources:
        i = s.cell
        if s.kind == "heater":
            diag[i] += s.U
        elif s.kind == "producer":
            q = s.rate(state_new.p[i], state_new.T[i], fl)[0]
            diag[i] += cv * q * rho[i]

    tc = problem.trans.heat
    adv = cv * fx.F
    ua, ub = fx.ua, fx.ub
    return problem.csr(diag, adv * ua + tc, adv * ub - tc, -adv * ua - tc, -adv * ub + tc)


def mass_in_place(state, problem):
    """Pore-fluid mass per cell (kg)."""
    rho = problem.fluid.density(state.p, state.T)
    return problem.grid.cell_volumes * problem.rock.poro * rho


def energy_in_place(state, problem):
    """Stored heat per cell (J) with the same reference as the energy accumulation term."""
    fl, rock = problem.fluid, problem.rock
    rho = fl.density(state.p, state.T)
    V = problem.grid.cell_volumes
    return V * (rock.poro * fl.c_v * rho * state.T + (1.0 - rock.poro) * rock.rho_r * rock.c_r * state.T)


def source_totals(state, problem):
    """Integrated mass (kg/s) and energy (W) source rates at ``state``."""
    if not problem.sources:
        return 0.0, 0.0
    src = _sources(state, problem)
    return float(src[0].sum()), float(src[1].sum())
