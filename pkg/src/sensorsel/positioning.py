"""Hybrid TOA/RSS measurement simulation and position estimation.

Measurements per selected sensor are the TOA-derived distance (Gaussian
around the true distance) and the RSS-derived log distance (Gaussian around
the true log distance), correlated within a sensor by the hybrid coefficient
eta and independent across sensors.  The estimator is an iteratively
re-linearized weighted least squares (Gauss-Newton on the stacked residuals
with the inverse per-sensor covariance as weights), and ``mse_eval`` wraps it
in a seeded Monte-Carlo loop so the sample MSE can be checked against the
bound computed for the same subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crlb import crlb_trace
from .scene import Scene

TOL_EST = 1e-8
MAX_ITER = 50


@dataclass(frozen=True)
class MeasurementSet:
    """One draw of per-sensor distance estimates for a subset."""

    subset: tuple[int, ...]
    d_hat_toa: np.ndarray
    log_d_hat_rss: np.ndarray
    seed: object


@dataclass(frozen=True)
class Estimate:
    location: np.ndarray
    iterations: int
    converged: bool


def _subset_sigmas(scene: Scene, subset, distances):
    eta = np.array([scene.sensors[m].eta for m in subset])
    if scene.noise is not None:
        st = scene.noise.sigma_t(np.asarray(distances, dtype=float))
        sr = np.full(len(subset), scene.noise.sigma_r())
    else:
        st = np.array([scene.sensors[m].sigma_t for m in subset])
        sr = np.array([scene.sensors[m].sigma_r for m in subset])
    return st, sr, eta


def simulate_measurements(
    scene: Scene, subset, true_target, seed, noise_scale: float = 1.0
) -> MeasurementSet:
    """Draw correlated TOA/RSS distance estimates for one positioning round.

    The within-sensor (TOA, log-RSS) error pair has covariance
    [[sigma_t^2, eta*sigma_t*sigma_r], [eta*sigma_t*sigma_r, sigma_r^2]],
    realized through its Cholesky factor; sensors are independent.
    ``noise_scale`` scales every error draw, with 0 giving exact distances.
    """
    subset = tuple(subset)
    if not subset:
        raise ValueError("subset must be non-empty")
    rng = np.random.default_rng(seed)
    target = np.asarray(true_target, dtype=float).reshape(3)
    dists = np.linalg.norm(scene.positions[list(subset)] - target, axis=1)
    st, sr, eta = _subset_sigmas(scene, subset, dists)
    z = rng.standard_normal((len(subset), 2))
    # Cholesky of the 2x2 unit-correlation block: [[1, 0], [eta, sqrt(1-eta^2)]].
    e_toa = st * z[:, 0]
    e_rss = sr * (eta * z[:, 0] + np.sqrt(1.0 - eta**2) * z[:, 1])
    return MeasurementSet(
        subset=subset,
        d_hat_toa=dists + noise_scale * e_toa,
        log_d_hat_rss=np.log(dists) + noise_scale * e_rss,
        seed=seed,
    )


def _weight_blocks(st, sr, eta):
    """Inverse 2x2 covariance blocks, stacked (k, 2, 2)."""
    det = (st * sr) ** 2 * (1.0 - eta**2)
    w = np.empty((len(st), 2, 2))
    w[:, 0, 0] = sr**2 / det
    w[:, 1, 1] = st**2 / det
    w[:, 0, 1] = w[:, 1, 0] = -eta * st * sr / det
    return w


def measurement_covariance(scene: Scene, subset, true_target) -> np.ndarray:
    """Full (2k, 2k) covariance of the stacked per-sensor measurement pairs.

    Block diagonal by construction: cross-sensor noise is uncorrelated, and
    each 2x2 block couples a sensor's TOA and log-RSS errors through eta.
    """
    subset = list(subset)
    target = np.asarray(true_target, dtype=float).reshape(3)
    dists = np.linalg.norm(scene.positions[subset] - target, axis=1)
    st, sr, eta = _subset_sigmas(scene, subset, dists)
    out = np.zeros((2 * len(subset), 2 * len(subset)))
    for k in range(len(subset)):
        block = np.array(
            [
                [st[k] ** 2, eta[k] * st[k] * sr[k]],
                [eta[k] * st[k] * sr[k], sr[k] ** 2],
            ]
        )
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = block
    return out


def taylor_ls_estimate(
    scene: Scene,
    subset,
    measurements: MeasurementSet,
    init,
    tol: float = TOL_EST,
    max_iter: int = MAX_ITER,
) -> Estimate:
    """Iteratively re-linearized weighted least squares position fix.

    Each iteration solves (A' W A) delta = A' W r at the current iterate,
    where the TOA rows of A are -u_m', the RSS rows -u_m'/d_m, and W stacks
    the inverse per-sensor covariance blocks.  W is fixed once per call from
    the measured ranges (the classical linearized-WLS weighting), which makes
    the weighted residual cost a proper descent criterion; the update is then
    damped by step halving whenever the raw step overshoots.  Stops when the
    accepted step norm drops below ``tol``; a singular normal matrix, a step
    past the positioning range, or a stalled search flag non-convergence.
    """
    subset = list(subset)
    if len(subset) < 3:
        raise ValueError("need at least three sensors for a 3D fix")
    pos = scene.positions[subset]
    est = np.asarray(init, dtype=float).reshape(3).copy()
    # Weights from the measured ranges, floored away from zero so a noisy
    # range draw cannot produce a near-singular covariance block.
    d_meas = np.maximum(np.asarray(measurements.d_hat_toa, dtype=float), 0.1 * scene.d_s)
    st, sr, eta = _subset_sigmas(scene, subset, d_meas)
    wb = _weight_blocks(st, sr, eta)

    def residuals(x):
        diff = pos - x[None, :]
        d = np.linalg.norm(diff, axis=1)
        if np.any(d <= 0.0):
            return None
        r = np.stack(
            [measurements.d_hat_toa - d, measurements.log_d_hat_rss - np.log(d)], axis=1
        )
        return d, diff / d[:, None], r

    for it in range(1, max_iter + 1):
        terms = residuals(est)
        if terms is None:
            return Estimate(location=est, iterations=it, converged=False)
        d, u, r = terms
        a = np.empty((len(subset), 2, 3))
        a[:, 0, :] = -u
        a[:, 1, :] = -u / d[:, None]
        ata = np.einsum("kri,krs,ksj->ij", a, wb, a)
        atr = np.einsum("kri,krs,ks->i", a, wb, r)
        try:
            delta = np.linalg.solve(ata, atr)
        except np.linalg.LinAlgError:
            return Estimate(location=est, iterations=it, converged=False)
        if not np.all(np.isfinite(delta)) or np.linalg.norm(delta) > scene.d_max:
            return Estimate(location=est, iterations=it, converged=False)
        cost = float(np.einsum("kr,krs,ks->", r, wb, r))
        accepted = False
        step = delta
        for _ in range(20):
            terms_new = residuals(est + step)
            if terms_new is not None:
                cost_new = float(np.einsum("kr,krs,ks->", terms_new[2], wb, terms_new[2]))
                if cost_new < cost:
                    accepted = True
                    break
            step = 0.5 * step
        if not accepted:
            # No decrease along the update direction: the iterate is a local
            # optimum of the weighted cost up to line-search resolution.
            return Estimate(location=est, iterations=it, converged=True)
        est = est + step
        if float(np.linalg.norm(step)) < tol:
            return Estimate(location=est, iterations=it, converged=True)
    return Estimate(location=est, iterations=max_iter, converged=False)


def default_init(scene: Scene, subset, true_target) -> np.ndarray:
    """Start point: the selected-sensor centroid pushed to mid positioning
    range along the mean line of sight (sensors toward target)."""
    subset = list(subset)
    pos = scene.positions[subset]
    target = np.asarray(true_target, dtype=float).reshape(3)
    centroid = pos.mean(axis=0)
    diff = pos - target[None, :]
    u = diff / np.linalg.norm(diff, axis=1, keepdims=True)
    mean_u = u.mean(axis=0)
    norm = np.linalg.norm(mean_u)
    direction = mean_u / norm if norm > 1e-12 else np.array([0.0, 0.0, 1.0])
    return centroid - direction * 0.5 * (scene.d_s + scene.d_max)


@dataclass(frozen=True)
class MseResult:
    """Sample mean squared 3D error with exclusion accounting."""

    value: float
    n_trials: int
    n_excluded: int
    stderr: float

    def __float__(self) -> float:
        return self.value


def mse_eval(scene: Scene, subset, true_target, n_trials: int, seed, init=None) -> MseResult:
    """Monte-Carlo MSE of the weighted least-squares fix for one subset.

    ``init`` defaults to the centroid-push heuristic; pass the approximate
    target location when emulating the known-location scenario, where that
    prior is available to the estimator by assumption.  Non-converged trials
    are retried once from a perturbed start, then excluded and counted; the
    exclusion count is part of the result because silently keeping diverged
    fixes would corrupt the average.
    """
    target = np.asarray(true_target, dtype=float).reshape(3)
    if init is None:
        init = default_init(scene, subset, target)
    else:
        init = np.asarray(init, dtype=float).reshape(3)
    streams = np.random.SeedSequence(seed).spawn(n_trials)
    sq_errors = []
    excluded = 0
    for stream in streams:
        rng = np.random.default_rng(stream)
        meas = simulate_measurements(scene, subset, target, rng)
        est = taylor_ls_estimate(scene, subset, meas, init)
        if not est.converged:
            jitter = rng.standard_normal(3) * 0.05 * scene.d_max
            est = taylor_ls_estimate(scene, subset, meas, init + jitter)
        if est.converged:
            sq_errors.append(float(np.sum((est.location - target) ** 2)))
        else:
            excluded += 1
    used = np.asarray(sq_errors)
    value = float(used.mean()) if used.size else float("nan")
    stderr = float(used.std(ddof=1) / np.sqrt(used.size)) if used.size > 1 else float("nan")
    return MseResult(value=value, n_trials=n_trials, n_excluded=excluded, stderr=stderr)


def crlb_for_subset(scene: Scene, subset, true_target) -> float:
    """Convenience: the trace-form bound the MSE is compared against."""
    return crlb_trace(scene, subset, true_target).value
