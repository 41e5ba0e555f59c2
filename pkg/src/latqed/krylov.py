"""Matrix-free Krylov solvers for the Cayley linear systems.

The one-step maps of the kinetic and gauge subsystems need solutions of
(I - S dt/2) x = b with S a skew or Hamiltonian generator.  These systems
are well conditioned at CFL-like time steps, so unpreconditioned BiCGStab
is the default, with a GMRES(restart) fallback on breakdown.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

BICGSTAB = "bicgstab"
GMRES = "gmres"


@dataclass(frozen=True)
class LinearOperatorHandle:
    """Square matrix-free linear operator: dimension plus an apply callable."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    tag: str = ""


@dataclass(frozen=True)
class SolverConfig:
    method: str = BICGSTAB
    rel_tolerance: float = 1e-12
    max_iterations: int = 500
    gmres_restart: int = 30

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError("rel_tolerance must lie in (0, 1)")
        if self.method not in (BICGSTAB, GMRES):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.gmres_restart < 1:
            raise ValueError("gmres_restart must be >= 1")


@dataclass
class SolveStats:
    method: str
    iterations: int
    residual: float
    fallback_used: bool = False


class SolverError(RuntimeError):
    """Base class of solver failures; carries the best iterate found."""

    def __init__(self, message, best_x=None, residual=np.inf, iterations=0):
        super().__init__(message)
        self.best_x = best_x
        self.residual = residual
        self.iterations = iterations


class NonConvergence(SolverError):
    pass


class BreakdownDetected(SolverError):
    pass


def _bicgstab(apply_op, b, tol, maxiter, x0=None):
    """Unpreconditioned BiCGStab; returns (x, iterations, residual)."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    x = b.copy() if x0 is None else x0.copy()
    r = b - apply_op(x)
    r0 = r.copy()
    rho = float(r0 @ r)
    p = r.copy()
    best_x, best_res = x.copy(), float(np.linalg.norm(r)) / bnorm
    if best_res <= tol:
        return x, 0, best_res
    breakdown = np.finfo(np.float64).tiny * 1e4
    for it in range(1, maxiter + 1):
        v = apply_op(p)
        denom = float(r0 @ v)
        if abs(rho) < breakdown * bnorm**2 or abs(denom) < breakdown * bnorm**2:
            raise BreakdownDetected(
                "BiCGStab rho breakdown", best_x=best_x, residual=best_res, iterations=it
            )
        alpha = rho / denom
        s = r - alpha * v
        snorm = float(np.linalg.norm(s)) / bnorm
        if snorm <= tol:
            x = x + alpha * p
            return x, it, snorm
        t = apply_op(s)
        tt = float(t @ t)
        if tt < breakdown * bnorm**2:
            raise BreakdownDetected(
                "BiCGStab omega breakdown", best_x=best_x, residual=best_res, iterations=it
            )
        omega = float(t @ s) / tt
        x = x + alpha * p + omega * s
        r = s - omega * t
        res = float(np.linalg.norm(r)) / bnorm
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= tol:
            return x, it, res
        rho_new = float(r0 @ r)
        beta = (rho_new / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        rho = rho_new
    raise NonConvergence(
        f"BiCGStab did not reach tol={tol} in {maxiter} iterations",
        best_x=best_x,
        residual=best_res,
        iterations=maxiter,
    )


def _gmres(apply_op, b, tol, maxiter, restart, x0=None):
    """Restarted GMRES with modified Gram-Schmidt and Givens rotations."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    x = np.zeros_like(b) if x0 is None else x0.copy()
    total_it = 0
    best_x, best_res = x.copy(), float(np.linalg.norm(b - apply_op(x))) / bnorm
    while total_it < maxiter:
        r = b - apply_op(x)
        beta = float(np.linalg.norm(r))
        res = beta / bnorm
        if res <= tol:
            return x, total_it, res
        m = min(restart, maxiter - total_it)
        v = np.empty((m + 1, b.size))
        v[0] = r / beta
        h = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        k_used = 0
        for k in range(m):
            w = apply_op(v[k])
            for i in range(k + 1):
                h[i, k] = float(w @ v[i])
                w -= h[i, k] * v[i]
            h[k + 1, k] = float(np.linalg.norm(w))
            if h[k + 1, k] > 0.0:
                v[k + 1] = w / h[k + 1, k]
            for i in range(k):
                tmp = cs[i] * h[i, k] + sn[i] * h[i + 1, k]
                h[i + 1, k] = -sn[i] * h[i, k] + cs[i] * h[i + 1, k]
                h[i, k] = tmp
            denom = np.hypot(h[k, k], h[k + 1, k])
            cs[k] = h[k, k] / denom
            sn[k] = h[k + 1, k] / denom
            h[k, k] = denom
            h[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k_used = k + 1
            total_it += 1
            if abs(g[k + 1]) / bnorm <= tol:
                break
        yk = np.linalg.solve(h[:k_used, :k_used], g[:k_used])
        x = x + yk @ v[:k_used]
        res = float(np.linalg.norm(b - apply_op(x))) / bnorm
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= tol:
            return x, total_it, res
    raise NonConvergence(
        f"GMRES did not reach tol={tol} in {maxiter} iterations",
        best_x=best_x,
        residual=best_res,
        iterations=total_it,
    )


def solve(
    op: LinearOperatorHandle,
    rhs: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveStats]:
    """Solve op(x) = rhs to the configured relative residual.

    BiCGStab breakdowns trigger an automatic GMRES fallback; running out of
    iterations raises NonConvergence carrying the best iterate.  The
    advertised residual bound is re-checked with one extra apply.
    """
    b = np.asarray(rhs, dtype=np.float64).reshape(-1)
    if b.size != op.dim:
        raise ValueError(f"rhs size {b.size} does not match operator dim {op.dim}")
    tol = cfg.rel_tolerance
    fallback = False
    if cfg.method == BICGSTAB:
        try:
            x, its, res = _bicgstab(op.apply, b, tol, cfg.max_iterations, x0)
        except BreakdownDetected:
            fallback = True
            x, its, res = _gmres(op.apply, b, tol, cfg.max_iterations, cfg.gmres_restart, x0)
    else:
        x, its, res = _gmres(op.apply, b, tol, cfg.max_iterations, cfg.gmres_restart, x0)

    bnorm = float(np.linalg.norm(b))
    true_res = float(np.linalg.norm(op.apply(x) - b)) / bnorm if bnorm else 0.0
    if true_res > 10.0 * tol:
        raise NonConvergence(
            f"solver residual re-check failed: {true_res:.3e} > {tol:.1e} "
            f"({op.tag or 'operator'})",
            best_x=x,
            residual=true_res,
            iterations=its,
        )
    return x, SolveStats(cfg.method, its, true_res, fallback)


def dense_cayley_oracle(generator: np.ndarray, dt: float) -> np.ndarray:
    """(I - S dt/2)^{-1} (I + S dt/2) by direct elimination (test support).

    For skew S the result is orthogonal; a singular shift matrix cannot
    occur for skew S with real dt and raises from the dense solve.
    """
    s = np.asarray(generator, dtype=np.float64)
    n = s.shape[0]
    if s.shape != (n, n):
        raise ValueError("generator must be square")
    eye = np.eye(n)
    return np.linalg.solve(eye - 0.5 * dt * s, eye + 0.5 * dt * s)
