"""Worst-case (min-max) sensor selection over a target grid.

The objective of every routine here is the maximum, over the candidate grid,
of the trace-form bound evaluated with a weighted information matrix
``J_g(c) = sum_m c_m eps_mg u_mg u_mg^T``; weights may be binary (an actual
subset) or continuous (a relaxation).  The module provides the objective
itself, the convex relaxation, the naive top-weight rounding whose
instability motivates the stronger algorithms, the greedy
iterated-convex-optimization selector, and an exhaustive oracle.  The
difference-of-convex and monotonic-optimization selectors live in their own
modules (:mod:`sensorsel.dcp`, :mod:`sensorsel.dmo`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .convex import RelaxedSolution, minimize_worst_case
from .crlb import batch_trace_inverse
from .dynamic import EnumerationCapError
from .scene import GridGeometry, grid_geometry

BINARY_TOL = 1e-6


def is_binary(c: np.ndarray, tol: float = BINARY_TOL) -> bool:
    """True when every weight sits within ``tol`` of 0 or 1."""
    c = np.asarray(c, dtype=float)
    return bool(np.all(np.minimum(np.abs(c), np.abs(c - 1.0)) <= tol))


def subset_to_vector(subset, n: int) -> np.ndarray:
    c = np.zeros(n)
    c[list(subset)] = 1.0
    return c


def vector_to_subset(c: np.ndarray, tol: float = BINARY_TOL) -> list[int]:
    if not is_binary(c, tol):
        raise ValueError("selection vector is not binary")
    return [int(i) for i in np.flatnonzero(np.asarray(c) > 0.5)]


@dataclass(frozen=True)
class WorstCase:
    """Worst-case bound over the grid and the index attaining it."""

    value: float
    argmax_g: int

    def __float__(self) -> float:
        return self.value


def _as_grid(scene_or_grid) -> GridGeometry:
    if isinstance(scene_or_grid, GridGeometry):
        return scene_or_grid
    return grid_geometry(scene_or_grid)


def grid_values(grid: GridGeometry, c: np.ndarray) -> np.ndarray:
    """Per-grid-point bound values for weights c (inf where singular)."""
    j = np.einsum("m,gmij->gij", np.asarray(c, dtype=float), grid.weighted_outer())
    vals, _ = batch_trace_inverse(j)
    return vals


def worst_case_crlb(scene_or_grid, c) -> WorstCase:
    """max over the grid of the weighted bound; any singular point wins with inf."""
    grid = _as_grid(scene_or_grid)
    vals = grid_values(grid, c)
    g = int(np.argmax(vals))
    return WorstCase(value=float(vals[g]), argmax_g=g)


def relaxed_solve(
    scene_or_grid,
    m: int,
    fixed_ones=(),
    tol: float = 1e-6,
    c0: np.ndarray | None = None,
    linear: np.ndarray | None = None,
) -> RelaxedSolution:
    """Continuous relaxation of the min-max problem (convex; global optimum).

    Pins ``fixed_ones`` at weight one and distributes the remaining mass over
    the free coordinates.  Returns the solution object from the smoothed
    first-order solver; ``.c`` is the weight vector and ``.objective`` the
    exact worst-case value at it.
    """
    grid = _as_grid(scene_or_grid)
    if len(set(fixed_ones)) > m:
        raise ValueError("fixed_ones larger than the selection size")
    return minimize_worst_case(grid, float(m), fixed_ones=fixed_ones, tol=tol, c0=c0, linear=linear)


def round_top_m(c: np.ndarray, m: int) -> np.ndarray:
    """Binary vector keeping the M largest weights (lowest index on ties)."""
    c = np.asarray(c, dtype=float)
    order = np.lexsort((np.arange(c.size), -c))
    out = np.zeros_like(c)
    out[order[:m]] = 1.0
    return out


def ico(scene_or_grid, m: int, tol: float = 1e-6) -> np.ndarray:
    """Iterated convex optimization: pin one sensor per relaxation round.

    Each round re-solves the relaxation with previously chosen sensors fixed
    at weight one and commits the unselected sensor with the largest weight
    (lowest index on ties).  Output is binary with exactly M ones.
    """
    grid = _as_grid(scene_or_grid)
    n = grid.n_sensors
    if m > n:
        raise ValueError("cannot select more sensors than exist")
    chosen: list[int] = []
    for _ in range(m):
        sol = relaxed_solve(grid, m, fixed_ones=chosen, tol=tol)
        weights = sol.c.copy()
        weights[chosen] = -np.inf
        best = int(np.argmax(weights))  # argmax returns the lowest index on ties
        chosen.append(best)
    return subset_to_vector(chosen, n)


@dataclass
class ExhaustiveRobustResult:
    c: np.ndarray
    subset: list[int]
    value: float
    all_singular: bool


def exhaustive_robust(scene_or_grid, m: int, cap: int = 500_000) -> ExhaustiveRobustResult:
    """Global min-max optimizer by enumeration (lexicographic tie-break).

    When every size-M subset is singular somewhere on the grid, returns the
    lexicographically first subset with an infinite value and a flag.
    """
    grid = _as_grid(scene_or_grid)
    n = grid.n_sensors
    count = math.comb(n, m)
    if count > cap:
        raise EnumerationCapError(f"C({n}, {m}) = {count} subsets exceeds the cap of {cap}")
    outer = grid.weighted_outer()  # (G, M, 3, 3)
    subsets = np.array(list(combinations(range(n), m)))  # (S, m)
    # Batch over subsets in chunks to bound the (G, chunk, m, 3, 3) gather.
    chunk = max(1, int(2e7 // (grid.n_targets * m * 9)))
    worst = np.empty(len(subsets))
    for start in range(0, len(subsets), chunk):
        block = subsets[start : start + chunk]
        j = outer[:, block, :, :].sum(axis=2)  # (G, B, 3, 3)
        vals, _ = batch_trace_inverse(j)
        worst[start : start + len(block)] = vals.max(axis=0)
    best = int(np.argmin(worst))  # first index wins ties, i.e. lexicographic
    subset = [int(i) for i in subsets[best]]
    value = float(worst[best])
    return ExhaustiveRobustResult(
        c=subset_to_vector(subset, n),
        subset=subset,
        value=value,
        all_singular=not np.isfinite(value),
    )
