"""Restarted GMRES with right preconditioning (modified Gram-Schmidt, Givens rotations)."""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)  # Arnoldi estimates, one per inner iteration (plus initial)

    def __iter__(self):
        return iter((self.x, self.iterations, self.converged))


def _as_op(A):
    if A is None:
        return lambda v: v
    if callable(A) and not hasattr(A, "shape"):
        return A
    return lambda v: A @ v


def gmres(A, b, precond=None, rtol=1e-5, restart=30, maxit=1000, atol=0.0):
    """Solve ``A x = b`` from a zero initial guess.

    ``A`` and ``precond`` may be matrices or callables; ``precond`` applies M^-1.
    The Krylov space is built for ``A M^-1``; convergence is judged on the
    (unpreconditioned) residual estimate and confirmed explicitly at the end.
    ``iterations`` counts inner (Arnoldi) steps across restarts.
    """
    op = _as_op(A)
    M = _as_op(precond)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    target = max(rtol * bnorm, atol)
    history = [bnorm]
    if bnorm == 0.0:
        return GmresResult(x, 0, True, history)
    if not np.isfinite(bnorm):
        raise FloatingPointError("non-finite right-hand side")

    r = b.copy()
    beta = bnorm
    its = 0
    m = restart
    while True:
        V = np.empty((m + 1, n))
        Z = np.empty((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        V[0] = r / beta
        g[0] = beta
        k = 0
        done = broken = False
        for j in range(m):
            Z[j] = M(V[j])
            w = op(Z[j])
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            hnext = np.linalg.norm(w)
            if not (np.isfinite(hnext) and np.all(np.isfinite(H[:j + 1, j]))):
                # the preconditioned operator produced inf/nan; keep the last finite iterate
                broken = True
                break
            H[j + 1, j] = hnext
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                # A M^-1 singular on the Krylov space; nothing more to gain
                done = True
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            its += 1
            k = j + 1
            history.append(abs(g[j + 1]))
            if abs(g[j + 1]) <= target or hnext <= 1e-14 * denom:
                done = True
                break
            if its >= maxit:
                break
            V[j + 1] = w / hnext
        if k:
            y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k > 1 else g[:1] / H[0, 0]
            x += Z[:k].T @ y
        r = b - op(x)
        beta = np.linalg.norm(r)
        if beta <= target:
            return GmresResult(x, its, True, history)
        if its >= maxit or broken or not np.isfinite(beta) or (done and k == 0):
            return GmresResult(x, its, False, history)
