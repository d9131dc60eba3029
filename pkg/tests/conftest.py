"""Shared fixtures and independent oracle helpers for the test suite.

The oracles here deliberately avoid the library's own code paths: matrix
inverses go through numpy's LAPACK solver instead of the closed-form
adjugate, information-matrix entries come from an explicit scalar loop over
coordinate pairs, and angle sums are written as naive nested loops.
"""

from __future__ import annotations

import numpy as np
import pytest

from sensorsel.scene import NoiseModel, Scene, SensorSpec, random_scene


PAPER_NOISE = NoiseModel(bandwidth_hz=500e6, pathloss_exp=2.0, shadowing_var=0.83)


@pytest.fixture
def paper_noise():
    return PAPER_NOISE


@pytest.fixture
def small_scene():
    """10 sensors, 3 targets, unit noise constants."""
    return random_scene(seed=1234, m_max=10, d_s=4.0, d_max=14.0, g=3)


@pytest.fixture
def noisy_scene():
    """10 sensors, 3 targets, distance-dependent noise at the default levels."""
    return random_scene(seed=99, m_max=10, d_s=4.0, d_max=14.0, g=3, noise=PAPER_NOISE)


def axis_cross_scene(d_s=1.0, d_max=10.0, targets=((3.0, 0.0, 0.0),)):
    """Six sensors on the coordinate axes; centroid exactly at the origin."""
    pts = np.array(
        [
            [1.0, 0, 0],
            [-1.0, 0, 0],
            [0, 1.0, 0],
            [0, -1.0, 0],
            [0, 0, 1.0],
            [0, 0, -1.0],
        ]
    ) * d_s
    sensors = tuple(SensorSpec(position=p) for p in pts)
    return Scene(
        sensors=sensors,
        d_s=d_s,
        d_max=d_max,
        targets=np.asarray(targets, dtype=float),
        sensor_center=np.zeros(3),
    )


def planar_scene(n_extra_off_plane=1):
    """Sensors in the z=0 plane plus optional off-plane ones; target also at
    z=0 so the in-plane sensors have co-planar lines of sight."""
    pts = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
    for k in range(n_extra_off_plane):
        pts.append([0.3 * (k + 1), 0.2, 1.0 + 0.5 * k])
    pts = np.array(pts)
    pts -= pts.mean(axis=0)
    d_s = np.linalg.norm(pts, axis=1).max()
    # Keep the target in the sensors' original z plane (z of the recentered
    # in-plane sensors), so their LOS vectors stay co-planar.
    z_plane = pts[0, 2]
    target = np.array([4.0 * d_s, 0.5, z_plane])
    sensors = tuple(SensorSpec(position=p) for p in pts)
    return Scene(
        sensors=sensors,
        d_s=d_s,
        d_max=20.0 * d_s,
        targets=target[None, :],
        sensor_center=pts.mean(axis=0),
    )


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------
def fim_entry_oracle(eps, los_vectors):
    """Scalar-loop evaluation of the information-matrix entries."""
    out = np.zeros((3, 3))
    for v in range(3):
        for w in range(3):
            acc = 0.0
            for e, u in zip(eps, los_vectors):
                acc += e * u[v] * u[w]
            out[v, w] = acc
    return out


def trace_inv_oracle(j):
    """LAPACK-based trace of the inverse (independent of the adjugate path)."""
    return float(np.trace(np.linalg.inv(j)))


def fractional_oracle(eps, los):
    """Naive nested-loop pair and triple angle sums."""
    k = len(eps)
    n_sum = 0.0
    d_sum = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            cross = np.cross(los[a], los[b])
            n_sum += eps[a] * eps[b] * float(cross @ cross)
            for c in range(b + 1, k):
                trip = float(cross @ los[c])
                d_sum += eps[a] * eps[b] * eps[c] * trip * trip
    return n_sum, d_sum


def random_spd(rng, lam_lo=0.5, lam_hi=2.0):
    """Random symmetric positive definite 3x3 with bounded spectrum."""
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    lam = rng.uniform(lam_lo, lam_hi, size=3)
    return q @ np.diag(lam) @ q.T


def gram_rank(los_vectors, tol=1e-9):
    """Rank of the stacked LOS vectors (the co-planarity oracle)."""
    return int(np.linalg.matrix_rank(np.asarray(los_vectors), tol=tol))
