"""Dense condition-number diagnostic for the temperature Schur complement approximations."""
import warnings

import numpy as np
import scipy.linalg as sla

from . import precond as pc
from .discretization import assemble_jacobian, assemble_schur_approx
from .solver import newton_step

MAX_DENSE_CELLS = 2500

VARIANTS = ("s_tilde_T", "s_att", "s_diag")


def cond2(A):
    """2-norm condition number from singular values; ``inf`` for singular input."""
    s = sla.svdvals(np.asarray(A, dtype=float))
    if s[-1] == 0 or not np.isfinite(s[0]):
        return np.inf
    return float(s[0] / s[-1])


def preconditioned_cond(S_approx, S):
    """cond2(S_approx^-1 S), or ``inf`` if ``S_approx`` is singular."""
    S_approx = np.asarray(S_approx, dtype=float)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(S_approx, check_finite=True)
    except (ValueError, sla.LinAlgError):
        return np.inf
    if np.any(np.abs(np.diag(lu[0])) <= np.finfo(float).tiny):
        return np.inf
    with np.errstate(all="ignore"):
        X = sla.lu_solve(lu, S)
    if not np.all(np.isfinite(X)):
        return np.inf
    return cond2(X)


def condition_numbers(J, S_e=None):
    """Condition numbers for one Jacobian.

    Returns a dict with ``cond(S)``, ``cond(ATT)`` and ``cond(Sx^-1 S)`` for
    every available approximation ``Sx`` (``s_tilde_T`` needs ``S_e``).
    """
    if J.n > MAX_DENSE_CELLS:
        raise ValueError(f"{J.n} cells is too many for a dense diagnostic (limit {MAX_DENSE_CELLS})")
    S = pc.dense_schur(J)
    out = {"S": cond2(S), "ATT": cond2(J.ATT.toarray())}
    approx = {"s_att": J.ATT.toarray()}
    try:
        approx["s_diag"] = pc.schur_diag(J).toarray()
    except ZeroDivisionError:
        approx["s_diag"] = None
    if S_e is not None:
        approx["s_tilde_T"] = S_e.toarray()
    for name in VARIANTS:
        if name in approx:
            out[name] = np.inf if approx[name] is None else preconditioned_cond(approx[name], S)
    return out


def condition_diagnostic(case, warmup=True):
    """Condition numbers of the Schur approximations for a (small) case.

    The Jacobian is taken at the first Newton iterate of a step. With
    ``warmup`` one full step is solved first so that the flow field, and
    with it the advective part of the Schur complement, is developed.
    """
    problem, state, ctrl = case.build()
    if problem.n > MAX_DENSE_CELLS:
        raise ValueError(f"{problem.n} cells is too many for a dense diagnostic (limit {MAX_DENSE_CELLS})")
    dt = ctrl.fixed_steps[0] if not ctrl.adaptive else ctrl.dt
    if warmup:
        res = newton_step(state, state, dt, problem, case.precond, case.newton)
        if res.converged:
            state = res.state
    J = assemble_jacobian(state, state, dt, problem)
    S_e = assemble_schur_approx(state, dt, problem)
    return condition_numbers(J, S_e)


def format_table(rows):
    """Plain-text table for ``{label: condition_numbers(...)}``."""
    cols = ["S", "ATT", "s_tilde_T", "s_att", "s_diag"]
    lines = ["case".ljust(16) + "".join(c.rjust(13) for c in cols)]
    for label, cond in rows.items():
        lines.append(label.ljust(16) + "".join(f"{cond.get(c, np.nan):13.4e}" for c in cols))
    return "\n".join(lines)
