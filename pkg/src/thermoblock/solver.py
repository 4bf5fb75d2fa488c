"""Newton's method with backtracking line search, time-step control and the outer loop."""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import precond as pc
from .discretization import State, assemble_jacobian, assemble_residual, assemble_schur_approx
from .linalg import gmres

log = logging.getLogger(__name__)

DAY = 86400.0


@dataclass(frozen=True)
class NewtonConfig:
    rtol_f: float = 1e-8
    rtol_step: float = 1e-8
    atol_f: float = 0.0
    max_newton: int = 25
    linesearch_max: int = 8
    linesearch_factor: float = 0.5
    gmres_rtol: float = 1e-5
    gmres_restart: int = 30
    gmres_maxit: int = 1000

    def __post_init__(self):
        for name in ("rtol_f", "rtol_step", "gmres_rtol"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if min(self.max_newton, self.linesearch_max, self.gmres_restart, self.gmres_maxit) < 1:
            raise ValueError("iteration limits must be >= 1")
        if not 0 < self.linesearch_factor < 1:
            raise ValueError("line-search factor must lie in (0, 1)")


@dataclass
class NewtonResult:
    state: State
    converged: bool
    iterations: int
    linear_iterations: list = field(default_factory=list)
    reason: str = ""
    residual_norms: list = field(default_factory=list)
    non_monotone: int = 0
    timings: dict = field(default_factory=lambda: {"assembly": 0.0, "setup": 0.0, "krylov": 0.0})


def _norm(gm, ge):
    return float(np.sqrt(gm @ gm + ge @ ge))


def _safe_residual(state, state_old, dt, problem):
    try:
        gm, ge = assemble_residual(state, state_old, dt, problem)
    except (ValueError, FloatingPointError):
        return None
    nrm = _norm(gm, ge)
    return nrm if np.isfinite(nrm) else None


def newton_step(state_old, state_guess, dt, problem, precond_config=None, config=None):
    """Solve one backward-Euler step. Never raises on divergence; check ``converged``."""
    precond_config = precond_config or pc.PreconditionerConfig()
    config = config or NewtonConfig()
    res = NewtonResult(state_guess.copy(), False, 0)
    tm = res.timings
    x = state_guess.copy()
    t0 = time.perf_counter()
    g_norm = _safe_residual(x, state_old, dt, problem)
    tm["assembly"] += time.perf_counter() - t0
    if g_norm is None:
        res.reason = "invalid initial guess"
        return res
    g0 = g_norm
    res.residual_norms.append(g_norm)
    if g_norm <= config.atol_f:
        res.converged, res.reason = True, "initial residual below tolerance"
        return res

    for it in range(1, config.max_newton + 1):
        t0 = time.perf_counter()
        J = assemble_jacobian(x, state_old, dt, problem)
        S_e = None
        if precond_config.kind == "block" and precond_config.schur == "s_tilde_T":
            S_e = assemble_schur_approx(x, dt, problem)
        t1 = time.perf_counter()
        tm["assembly"] += t1 - t0
        try:
            M = pc.build(precond_config, J, S_e)
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            res.reason = f"preconditioner setup failed: {exc}"
            res.iterations = it
            return res
        t2 = time.perf_counter()
        tm["setup"] += t2 - t1
        lin = gmres(J.matvec, J.rhs, M, rtol=config.gmres_rtol, restart=config.gmres_restart, maxit=config.gmres_maxit)
        tm["krylov"] += time.perf_counter() - t2
        res.iterations = it
        res.linear_iterations.append(lin.iterations)
        if not lin.converged:
            res.reason = f"linear solver did not converge in {lin.iterations} iterations"
            return res

        xv = x.as_vector()
        dx = lin.x
        alpha = 1.0
        t0 = time.perf_counter()
        accepted = None
        for _ in range(config.linesearch_max):
            trial = State.from_vector(xv + alpha * dx)
            nrm = _safe_residual(trial, state_old, dt, problem)
            if nrm is not None and nrm < g_norm:
                accepted = (trial, nrm)
                break
            alpha *= config.linesearch_factor
        if accepted is None:
            trial = State.from_vector(xv + dx)
            nrm = _safe_residual(trial, state_old, dt, problem)
            if nrm is None:
                tm["assembly"] += time.perf_counter() - t0
                res.reason = "line search produced an invalid state"
                return res
            alpha = 1.0
            accepted = (trial, nrm)
            res.non_monotone += 1
        tm["assembly"] += time.perf_counter() - t0
        x, g_norm = accepted
        res.residual_norms.append(g_norm)
        step = alpha * np.linalg.norm(dx)
        if g_norm <= max(config.rtol_f * g0, config.atol_f):
            res.converged, res.reason = True, "relative residual"
            break
        if step <= config.rtol_step * np.linalg.norm(x.as_vector()):
            res.converged, res.reason = True, "relative step"
            break
    else:
        res.reason = f"no convergence in {config.max_newton} Newton iterations"
    res.state = x
    return res


@dataclass
class TimeController:
    """Adaptive steps aiming at ``target_newton`` iterations, or a fixed list of steps."""
    dt: float = 1.0 * DAY
    t_end: float = 1000.0 * DAY
    grow: float = 1.5
    shrink: float = 0.7
    cut: float = 0.5
    target_newton: int = 4
    dt_min: float = 1.0
    dt_max: float = 100.0 * DAY
    fixed_steps: list = None

    def __post_init__(self):
        if not 0 < self.shrink < 1 < self.grow:
            raise ValueError("need 0 < shrink < 1 < grow")
        if not 0 < self.cut < 1:
            raise ValueError("failure cut factor must lie in (0, 1)")
        if self.fixed_steps is not None:
            self.fixed_steps = [float(s) for s in self.fixed_steps]
            if any(s <= 0 for s in self.fixed_steps):
                raise ValueError("fixed steps must be positive")
            self.t_end = sum(self.fixed_steps)
        else:
            if not self.dt_min <= self.dt_max:
                raise ValueError("dt_min must not exceed dt_max")
            self.dt = min(max(self.dt, self.dt_min), self.dt_max)

    @property
    def adaptive(self):
        return self.fixed_steps is None

    def after_success(self, newton_its):
        if not self.adaptive:
            return
        if newton_its <= self.target_newton - 1:
            self.dt *= self.grow
        elif newton_its >= self.target_newton + 2:
            self.dt *= self.shrink
        self.dt = min(max(self.dt, self.dt_min), self.dt_max)


@dataclass
class StepRecord:
    step: int
    time: float
    dt: float
    newton_iterations: int
    linear_iterations: list
    converged: bool
    reason: str = ""
    timings: dict = field(default_factory=dict)

    @property
    def total_linear(self):
        return int(sum(self.linear_iterations))


@dataclass
class SolverStats:
    records: list = field(default_factory=list)
    aborted: bool = False
    message: str = ""

    @property
    def total_newton(self):
        return sum(r.newton_iterations for r in self.records)

    @property
    def total_linear(self):
        return sum(r.total_linear for r in self.records)

    @property
    def average_linear_per_newton(self):
        n = self.total_newton
        return self.total_linear / n if n else 0.0

    @property
    def accepted(self):
        return [r for r in self.records if r.converged]

    @property
    def linear_failures(self):
        return sum(1 for r in self.records if r.reason.startswith("linear solver"))


class SimulationAborted(RuntimeError):
    def __init__(self, message, stats):
        super().__init__(message)
        self.stats = stats


def run_simulation(problem, initial, controller, precond_config=None, newton_config=None,
                   on_step=None, raise_on_abort=False):
    """Advance from ``initial`` to ``controller.t_end``; returns (final state, SolverStats).

    Failed Newton solves cut the step by ``controller.cut`` and retry; every
    attempt (failed or not) is recorded. ``on_step`` receives each StepRecord.
    """
    stats = SolverStats()
    state = initial.copy()
    t = 0.0
    plan = list(controller.fixed_steps) if not controller.adaptive else None
    k = 0
    dt = controller.dt if controller.adaptive else plan[0]
    remaining = None if controller.adaptive else plan[0]
    while True:
        if controller.adaptive:
            if t >= controller.t_end * (1 - 1e-12):
                break
            dt = min(controller.dt, controller.t_end - t)
        else:
            dt = min(dt, remaining)
        res = newton_step(state, state, dt, problem, precond_config, newton_config)
        rec = StepRecord(k, t + dt, dt, res.iterations, list(res.linear_iterations), res.converged, res.reason, dict(res.timings))
        stats.records.append(rec)
        if on_step:
            on_step(rec)
        log.info("step %d t=%.4g dt=%.4g newton=%d linear=%s %s", k, t + dt, dt, res.iterations, res.linear_iterations, res.reason)
        if not res.converged:
            dt *= controller.cut
            if controller.adaptive:
                controller.dt = dt
            if dt < controller.dt_min:
                stats.aborted = True
                stats.message = f"time step {dt:.3g} s fell below dt_min after: {res.reason}"
                if raise_on_abort:
                    raise SimulationAborted(stats.message, stats)
                return state, stats
            continue
        state = res.state
        t += dt
        k += 1
        if controller.adaptive:
            controller.after_success(res.iterations)
        else:
            remaining -= dt
            if remaining <= 1e-9 * dt:
                plan.pop(0)
                if not plan:
                    break
                remaining = plan[0]
                dt = plan[0]
    return state, stats
