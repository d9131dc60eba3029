"""Fisher information and the positioning error bound in two closed forms.

The 3x3 information matrix for a sensor subset is a sum of rank-one terms
``eps_m * u_m u_m^T``.  The bound equals the trace of its inverse, which this
module computes two ways:

* trace form: closed-form adjugate/determinant inversion of the 3x3 matrix;
* fractional form: pair/triplet angle sums (numerator = sum of eps-weighted
  sin^2 of pairwise LOS angles, denominator = sum of eps-weighted squared
  triple products), which never forms the matrix.

Both forms agree to floating-point accuracy on non-degenerate subsets, and
both flag co-planar LOS geometries as singular (bound = +inf).  Incremental
quantities used by the greedy selectors (rank-one marginal reduction and the
matching inverse update) live here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import Scene, SensorTargetGeometry, geometry

# Singularity thresholds (relative, scale-free).  Trace form: smallest
# eigenvalue vs trace.  Fractional form: denominator vs numerator.
EIG_SING_RTOL = 1e-10
DEN_SING_RTOL = 1e-12


@dataclass(frozen=True)
class CrlbValue:
    """Bound value in m**2; ``singular`` mirrors ``value == inf``."""

    value: float
    singular: bool

    @staticmethod
    def finite(value: float) -> "CrlbValue":
        return CrlbValue(value=float(value), singular=False)

    @staticmethod
    def infinite() -> "CrlbValue":
        return CrlbValue(value=float("inf"), singular=True)

    def __float__(self) -> float:
        return self.value


def subset_geometries(scene: Scene, subset, target) -> list[SensorTargetGeometry]:
    return [geometry(scene, m, target) for m in subset]


def fim_from_geoms(eps, los) -> np.ndarray:
    """Sum of eps * u u^T over the leading axis; los shape (k, 3)."""
    eps = np.asarray(eps, dtype=float)
    los = np.asarray(los, dtype=float)
    return np.einsum("m,mi,mj->ij", eps, los, los)


def fim(scene: Scene, subset, target) -> np.ndarray:
    """3x3 Fisher information matrix of a sensor subset at a target."""
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be non-empty")
    if len(set(subset)) != len(subset):
        raise ValueError("subset indices must be distinct")
    geoms = subset_geometries(scene, subset, target)
    eps = np.array([g.epsilon for g in geoms])
    los = np.array([g.los for g in geoms])
    return fim_from_geoms(eps, los)


def _adjugate_diag_sum(J) -> np.ndarray:
    """tr(adj(J)) for symmetric (..., 3, 3) input."""
    a, b, c = J[..., 0, 0], J[..., 0, 1], J[..., 0, 2]
    d, e, f = J[..., 1, 1], J[..., 1, 2], J[..., 2, 2]
    return (d * f - e * e) + (a * f - c * c) + (a * d - b * b)


def _det3_sym(J) -> np.ndarray:
    a, b, c = J[..., 0, 0], J[..., 0, 1], J[..., 0, 2]
    d, e, f = J[..., 1, 1], J[..., 1, 2], J[..., 2, 2]
    return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)


def inv3(J: np.ndarray) -> np.ndarray:
    """Closed-form inverse of a symmetric 3x3 matrix (adjugate / determinant)."""
    a, b, c = J[0, 0], J[0, 1], J[0, 2]
    d, e, f = J[1, 1], J[1, 2], J[2, 2]
    adj = np.array(
        [
            [d * f - e * e, c * e - b * f, b * e - c * d],
            [c * e - b * f, a * f - c * c, b * c - a * e],
            [b * e - c * d, b * c - a * e, a * d - b * b],
        ]
    )
    det = a * adj[0, 0] + b * adj[0, 1] + c * adj[0, 2]
    return adj / det


def batch_inv3(J: np.ndarray) -> np.ndarray:
    """Closed-form inverses of stacked symmetric (..., 3, 3) matrices.

    Caller guarantees invertibility (see :func:`batch_trace_inverse` for the
    singularity test).
    """
    a, b, c = J[..., 0, 0], J[..., 0, 1], J[..., 0, 2]
    d, e, f = J[..., 1, 1], J[..., 1, 2], J[..., 2, 2]
    adj = np.empty_like(J)
    adj[..., 0, 0] = d * f - e * e
    adj[..., 0, 1] = adj[..., 1, 0] = c * e - b * f
    adj[..., 0, 2] = adj[..., 2, 0] = b * e - c * d
    adj[..., 1, 1] = a * f - c * c
    adj[..., 1, 2] = adj[..., 2, 1] = b * c - a * e
    adj[..., 2, 2] = a * d - b * b
    det = a * adj[..., 0, 0] + b * adj[..., 0, 1] + c * adj[..., 0, 2]
    return adj / det[..., None, None]


def batch_trace_inverse(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Trace of the inverse for stacked symmetric PSD (..., 3, 3) matrices.

    Returns (values, singular_mask); singular entries carry +inf.  A matrix
    counts as singular when its smallest eigenvalue falls at or below
    ``EIG_SING_RTOL`` times its trace.
    """
    J = np.asarray(J, dtype=float)
    eig_min = np.linalg.eigvalsh(J)[..., 0]
    tr = np.trace(J, axis1=-2, axis2=-1)
    singular = eig_min <= EIG_SING_RTOL * np.maximum(tr, 0.0)
    num = _adjugate_diag_sum(J)
    den = _det3_sym(J)
    values = np.where(singular, np.inf, num / np.where(singular, 1.0, den))
    return values, singular


def trace_inverse(J: np.ndarray) -> CrlbValue:
    values, singular = batch_trace_inverse(J[None])
    if singular[0]:
        return CrlbValue.infinite()
    return CrlbValue.finite(values[0])


def crlb_trace(scene: Scene, subset, target) -> CrlbValue:
    """Trace-form bound tr{FIM**-1}; singular sentinel for rank-deficient FIMs."""
    return trace_inverse(fim(scene, subset, target))


def pair_term(geom_a: SensorTargetGeometry, geom_b: SensorTargetGeometry) -> float:
    """eps_a * eps_b * sin^2(theta_ab), via the cross-product norm."""
    cross = np.cross(geom_a.los, geom_b.los)
    return geom_a.epsilon * geom_b.epsilon * float(cross @ cross)


def triplet_term(
    geom_a: SensorTargetGeometry,
    geom_b: SensorTargetGeometry,
    geom_c: SensorTargetGeometry,
) -> float:
    """eps_a*eps_b*eps_c * ((u_a x u_b) . u_c)**2 (squared triple product)."""
    trip = float(np.cross(geom_a.los, geom_b.los) @ geom_c.los)
    return geom_a.epsilon * geom_b.epsilon * geom_c.epsilon * trip * trip


def fractional_sums(eps, los) -> tuple[float, float]:
    """Pair/triplet angle sums (N, D) of the fractional form.

    N = sum_{a<b} eps_a eps_b |u_a x u_b|^2
    D = sum_{a<b<c} eps_a eps_b eps_c ((u_a x u_b) . u_c)^2
    """
    eps = np.asarray(eps, dtype=float)
    los = np.asarray(los, dtype=float)
    k = len(eps)
    ia, ib = np.triu_indices(k, 1)
    crosses = np.cross(los[ia], los[ib])
    pair_vals = eps[ia] * eps[ib] * np.einsum("pi,pi->p", crosses, crosses)
    n_sum = float(pair_vals.sum())
    d_sum = 0.0
    if k >= 3:
        for p, (a, b) in enumerate(zip(ia, ib)):
            cs = los[b + 1 :] @ crosses[p]
            d_sum += eps[a] * eps[b] * float((eps[b + 1 :] * cs * cs).sum())
    return n_sum, d_sum


def crlb_fractional(scene: Scene, subset, target) -> CrlbValue:
    """Fractional-form bound N/D from pairwise and triple LOS angles.

    Requires at least three sensors; flags the subset singular when the
    triple-product denominator vanishes relative to the numerator (co-planar
    LOS arrangement).
    """
    subset = list(subset)
    if len(subset) < 3:
        raise ValueError("fractional form needs a subset of size >= 3")
    geoms = subset_geometries(scene, subset, target)
    eps = np.array([g.epsilon for g in geoms])
    los = np.array([g.los for g in geoms])
    n_sum, d_sum = fractional_sums(eps, los)
    if d_sum <= DEN_SING_RTOL * n_sum:
        return CrlbValue.infinite()
    return CrlbValue.finite(n_sum / d_sum)


def marginal_reduction(fim_inverse: np.ndarray, geom: SensorTargetGeometry) -> float:
    """Bound decrease from adding one sensor to a non-singular subset.

    eps * |J^-1 u|^2 / (1 + eps * u^T J^-1 u); always >= 0.
    """
    ju = fim_inverse @ geom.los
    return geom.epsilon * float(ju @ ju) / (1.0 + geom.epsilon * float(geom.los @ ju))


def sherman_morrison_update(fim_inverse: np.ndarray, geom: SensorTargetGeometry) -> np.ndarray:
    """Inverse of (J + eps u u^T) from J^-1 via the rank-one update."""
    ju = fim_inverse @ geom.los
    denom = 1.0 + geom.epsilon * float(geom.los @ ju)
    return fim_inverse - (geom.epsilon / denom) * np.outer(ju, ju)


@dataclass(frozen=True)
class SvrDecomposition:
    """Eigenvalue box of the FIM: full surface area, volume, and the identity
    bound = (surface/2) / volume for non-singular matrices."""

    eigenvalues: np.ndarray
    surface: float
    volume: float


def svr_decompose(fim_matrix: np.ndarray) -> SvrDecomposition:
    lam = np.linalg.eigvalsh(fim_matrix)
    l1, l2, l3 = lam
    surface = 2.0 * (l1 * l2 + l1 * l3 + l2 * l3)
    volume = float(l1 * l2 * l3)
    return SvrDecomposition(eigenvalues=lam, surface=float(surface), volume=volume)
