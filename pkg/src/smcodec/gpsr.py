"""Gradient projection for the l1-penalised least squares problem.

Solves ``min_s 0.5 * ||y - A s||^2 + tau * ||s||_1`` by splitting ``s = u - v``
with ``u, v >= 0`` and running projected gradient steps with Barzilai-Borwein
step lengths (monotone GPSR-BB).  An exact line search along each projected
direction keeps the objective non-increasing.  Optional continuation solves
a short decreasing sequence of ``tau`` values, warm-starting each from the
previous solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SolverOptions:
    """Solver settings.

    ``tau`` is absolute when given; otherwise ``tau_factor * ||A^T y||_inf``.
    ``continuation_steps`` > 1 enables a geometric tau schedule that starts at
    ``continuation_start * ||A^T y||_inf``.
    """

    tau: float | None = None
    tau_factor: float = 0.01
    max_iters: int = 400
    rel_tol: float = 1e-5
    debias: bool = False
    debias_iters: int = 50
    continuation_steps: int = 1
    continuation_start: float = 0.5
    alpha_min: float = 1e-30
    alpha_max: float = 1e30

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.tau_factor > 0:
            raise ValueError("tau_factor must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.continuation_steps < 1:
            raise ValueError("continuation_steps must be >= 1")

    def resolve_tau(self, aty_inf: float) -> float:
        return float(self.tau) if self.tau is not None else self.tau_factor * aty_inf


@dataclass
class SolverResult:
    x: np.ndarray
    tau: float
    iterations: int
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False


def objective(y, Ax, x, tau) -> float:
    r = y - Ax
    return 0.5 * float(np.dot(r, r)) + tau * float(np.abs(x).sum())


def _stage(A, At, y, u, v, Au_v, tau, max_iters, rel_tol, opts, trace):
    """Monotone GPSR-BB from (u, v); returns updated state and iteration count."""
    r = y - Au_v
    f = 0.5 * float(np.dot(r, r)) + tau * float(u.sum() + v.sum())
    alpha = 1.0
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        grad = -At(r)
        gu = grad + tau
        gv = tau - grad
        du = np.maximum(u - alpha * gu, 0.0) - u
        dv = np.maximum(v - alpha * gv, 0.0) - v
        dx = du - dv
        Adx = A(dx)
        dGd = float(np.dot(Adx, Adx))
        gd = float(np.dot(gu, du) + np.dot(gv, dv))
        dd = float(np.dot(du, du) + np.dot(dv, dv))
        if dd == 0.0:
            converged = True
            trace.append(f)
            break
        lam = 1.0 if dGd <= 0.0 else min(max(-gd / dGd, 0.0), 1.0)
        u += lam * du
        v += lam * dv
        r -= lam * Adx
        Au_v += lam * Adx
        f_new = 0.5 * float(np.dot(r, r)) + tau * float(u.sum() + v.sum())
        trace.append(f_new)
        alpha = opts.alpha_max if dGd <= 0.0 else min(max(dd / dGd, opts.alpha_min), opts.alpha_max)
        change = abs(f - f_new) / max(f, np.finfo(float).tiny)
        f = f_new
        if change < rel_tol:
            converged = True
            break
    return it, converged


def _debias(A, At, y, x, iters):
    """Conjugate gradients on the normal equations restricted to the support of ``x``."""
    mask = x != 0
    if not mask.any():
        return x
    xs = x.copy()
    r = y - A(xs)
    g = At(r) * mask
    p = g.copy()
    gg = float(np.dot(g, g))
    for _ in range(iters):
        if gg == 0.0:
            break
        Ap = A(p)
        step = gg / float(np.dot(Ap, Ap))
        xs += step * p
        r -= step * Ap
        g = At(r) * mask
        gg_new = float(np.dot(g, g))
        p = g + (gg_new / gg) * p
        gg = gg_new
    return xs


def gpsr_solve(A: Operator, At: Operator, y, opts: SolverOptions = SolverOptions(),
               x0: np.ndarray | None = None) -> SolverResult:
    """Approximate minimiser of ``0.5 ||y - A x||^2 + tau ||x||_1``.

    ``A`` and ``At`` are the forward operator and its exact adjoint.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("measurement vector must be a non-empty 1-D array")
    if not np.all(np.isfinite(y)):
        raise ValueError("measurements contain non-finite values")
    aty = At(y)
    aty_inf = float(np.abs(aty).max())
    tau = opts.resolve_tau(aty_inf)
    n = aty.shape[0]
    if aty_inf == 0.0:
        return SolverResult(x=np.zeros(n), tau=tau, iterations=0, objective_trace=[0.0], converged=True)

    if x0 is None:
        u = np.zeros(n)
        v = np.zeros(n)
        Ax = np.zeros_like(y)
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        if not np.all(np.isfinite(x0)):
            raise ValueError("initial point contains non-finite values")
        u = np.maximum(x0, 0.0)
        v = np.maximum(-x0, 0.0)
        Ax = A(x0)

    if opts.continuation_steps > 1:
        start = max(opts.continuation_start * aty_inf, tau)
        taus = np.geomspace(start, tau, opts.continuation_steps)
    else:
        taus = np.array([tau])

    trace: list[float] = []
    total = 0
    converged = False
    for k, t in enumerate(taus):
        last = k == len(taus) - 1
        budget = opts.max_iters - total
        if budget <= 0:
            break
        if not last:
            # intermediate stages only need to get close
            budget = max(budget // (len(taus) - k), 1)
        tol = opts.rel_tol if last else max(opts.rel_tol, 1e-3)
        its, conv = _stage(A, At, y, u, v, Ax, float(t), budget, tol, opts, trace)
        total += its
        converged = conv and last
        if last or total >= opts.max_iters:
            break
    x = u - v
    if opts.debias:
        x = _debias(A, At, y, x, opts.debias_iters)
    return SolverResult(x=x, tau=tau, iterations=total, objective_trace=trace, converged=converged)
