"""First-order solver for the relaxed worst-case selection problem.

Minimizes  max_g tr{J_g(c)^-1} (+ optional linear term)  over the slice
{ 0 <= c <= 1, sum(c) = M, c_m = 1 on pinned indices }.  The max is smoothed
by a log-sum-exp with increasing sharpness (beta continuation); each stage
runs a projected-gradient loop with a Barzilai-Borwein step and monotone
backtracking.  Iterates that make any grid matrix singular evaluate to +inf
and are rejected by the line search, which keeps the whole trajectory in the
invertible region without an explicit barrier term.

The per-coordinate gradient of tr{J_g^-1} is -eps_mg * |J_g^-1 u_mg|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crlb import batch_inv3, batch_trace_inverse
from .scene import GridGeometry

DEFAULT_TOL = 1e-6


def project_capped_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {0 <= c <= 1, sum(c) = total}.

    Bisection on the shift tau in c = clip(v - tau, 0, 1); the coordinate sum
    is continuous and non-increasing in tau.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if not -1e-9 <= total <= n + 1e-9:
        raise ValueError(f"infeasible mass {total} for {n} box coordinates")
    total = min(max(total, 0.0), float(n))
    lo = float(v.min()) - 1.0  # sum = n here
    hi = float(v.max())  # sum = 0 here; the sum is non-increasing in tau
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, 1.0).sum() > total:
            lo = mid
        else:
            hi = mid
    c = np.clip(v - 0.5 * (lo + hi), 0.0, 1.0)
    # Spread the residual bisection error over strictly interior coordinates
    # so the mass constraint holds to working precision.
    interior = (c > 0.0) & (c < 1.0)
    if interior.any():
        c[interior] += (total - c.sum()) / interior.sum()
        c = np.clip(c, 0.0, 1.0)
    return c


def _project(c: np.ndarray, total: float, fixed: np.ndarray) -> np.ndarray:
    """Projection with pinned-to-one coordinates."""
    out = np.empty_like(c)
    out[fixed] = 1.0
    free = ~fixed
    n_free = int(free.sum())
    mass = total - float(fixed.sum())
    if n_free == 0:
        return out
    out[free] = project_capped_simplex(c[free], mass)
    return out


@dataclass
class RelaxedSolution:
    """Solver output: the weight vector, its exact worst-case objective,
    per-grid-point values, and convergence bookkeeping."""

    c: np.ndarray
    objective: float
    grid_values: np.ndarray
    converged: bool
    iterations: int
    warning: str | None = None


class _WorstCaseModel:
    """Evaluates the per-grid-point bounds and their gradients for weights c."""

    def __init__(self, grid: GridGeometry):
        self.outer = grid.weighted_outer()  # (G, M, 3, 3)
        self.w = grid.weighted_los()  # (G, M, 3)
        self.n = grid.n_sensors

    def values(self, c: np.ndarray) -> np.ndarray:
        j = np.einsum("m,gmij->gij", c, self.outer)
        vals, _ = batch_trace_inverse(j)
        return vals

    def values_and_grad(self, c: np.ndarray):
        j = np.einsum("m,gmij->gij", c, self.outer)
        vals, singular = batch_trace_inverse(j)
        if np.any(singular):
            return vals, None
        j_inv = batch_inv3(j)
        jw = np.einsum("gij,gmj->gmi", j_inv, self.w)
        grads = -np.einsum("gmi,gmi->gm", jw, jw)
        return vals, grads


def _smoothed(vals: np.ndarray, beta: float) -> float:
    m = vals.max()
    if not np.isfinite(m):
        return float("inf")
    return float(m + np.log(np.exp(beta * (vals - m)).sum()) / beta)


def minimize_worst_case(
    grid: GridGeometry,
    m: float,
    fixed_ones=(),
    linear: np.ndarray | None = None,
    c0: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_inner: int = 400,
    beta_rounds: int = 6,
) -> RelaxedSolution:
    """Solve the smoothed relaxed problem; see module docstring.

    ``m`` is the required total mass, ``fixed_ones`` pins coordinates at one,
    ``linear`` adds a term linear.c to the objective (used by the
    difference-of-convex iterations).
    """
    n = grid.n_sensors
    fixed = np.zeros(n, dtype=bool)
    fixed[list(fixed_ones)] = True
    if fixed.sum() > m + 1e-9:
        raise ValueError("more pinned sensors than the selection budget")
    lin = np.zeros(n) if linear is None else np.asarray(linear, dtype=float)
    model = _WorstCaseModel(grid)

    c = _project(np.full(n, m / n) if c0 is None else np.asarray(c0, dtype=float), m, fixed)
    vals = model.values(c)
    if not np.all(np.isfinite(vals)):
        return RelaxedSolution(
            c=c,
            objective=float("inf"),
            grid_values=vals,
            converged=False,
            iterations=0,
            warning="initial point already singular on the grid",
        )

    # Sharpness schedule: start with a smoothing gap around 10% of the
    # objective scale and end far below the requested tolerance.
    scale = max(abs(float(vals.max())), 1e-12)
    beta = np.log(grid.n_targets + 1.0) / (0.1 * scale)
    total_iters = 0
    converged = True
    for _ in range(beta_rounds):
        c, iters, ok = _pg_stage(model, c, m, fixed, lin, beta, tol, max_inner)
        total_iters += iters
        converged = ok
        beta *= 8.0
    vals = model.values(c)
    objective = float(vals.max() + lin @ c)
    return RelaxedSolution(
        c=c,
        objective=objective,
        grid_values=vals,
        converged=converged,
        iterations=total_iters,
        warning=None if converged else "inner iteration cap reached",
    )


def _pg_stage(model, c, m, fixed, lin, beta, tol, max_inner):
    """One beta stage of projected gradient with BB step and backtracking."""

    def f_and_g(x):
        vals, grads = model.values_and_grad(x)
        if grads is None:
            return float("inf"), None
        shifted = np.exp(beta * (vals - vals.max()))
        wgt = shifted / shifted.sum()
        return _smoothed(vals, beta) + float(lin @ x), wgt @ grads + lin

    f, g = f_and_g(c)
    step = 1.0 / max(np.linalg.norm(g), 1e-12)
    prev_c, prev_g = None, None
    for it in range(1, max_inner + 1):
        if prev_c is not None:
            dc = c - prev_c
            dg = g - prev_g
            denom = float(dc @ dg)
            if denom > 1e-18:
                step = float(dc @ dc) / denom
            step = min(max(step, 1e-12), 1e6)
        accepted = False
        for _ in range(80):
            cand = _project(c - step * g, m, fixed)
            delta = cand - c
            dn = float(delta @ delta)
            if dn == 0.0:
                return c, it, True
            f_cand, g_cand = f_and_g(cand)
            if f_cand <= f - 1e-4 * dn / step:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return c, it, True  # no descent direction left at line-search floor
        prev_c, prev_g = c, g
        moved = float(np.linalg.norm(cand - c))
        rel_drop = (f - f_cand) / max(abs(f), 1e-12)
        c, f, g = cand, f_cand, g_cand
        if moved <= 1e-10 * np.sqrt(c.size) or rel_drop <= 0.01 * tol:
            return c, it, True
    return c, max_inner, False
