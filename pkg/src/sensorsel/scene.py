"""Sensor geometry, target grids, and per-sensor noise statistics.

A scene holds M_max sensors confined to a ball of radius ``d_s`` around their
centroid, plus a set of candidate target points in the spherical shell
``d_s < r <= d_max`` around that centroid.  Every selection metric downstream
consumes only two per-(sensor, target) quantities produced here: the unit
line-of-sight vector ``u`` and the information weight ``epsilon`` combining
the TOA- and RSS-derived distance-error statistics.

Distance-error standard deviations may either be fixed per sensor or resolved
at evaluation time from a bandwidth / path-loss / shadowing model, in which
case the TOA component grows with distance (SNR = d**-xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Relative tolerance on "sensor_center equals the sensor centroid".
CENTER_RTOL = 1e-9


class DegenerateGeometryError(ValueError):
    """Sensor and target coincide; line of sight undefined."""


@dataclass(frozen=True)
class NoiseModel:
    """Distance-dependent measurement-noise model.

    sigma_T**2 = c**2 / (8*pi*SNR*W**2) with SNR = d**-xi, and
    sigma_R**2 = (ln(10) / (10*xi))**2 * sigma_S**2 (distance independent).

    Parameters
    ----------
    bandwidth_hz : float
        Signal bandwidth W in Hz.
    pathloss_exp : float
        Path-loss exponent xi.
    shadowing_var : float
        Shadowing variance sigma_S**2 (dB domain, unitless here).
    """

    bandwidth_hz: float
    pathloss_exp: float
    shadowing_var: float

    def __post_init__(self):
        if self.bandwidth_hz <= 0 or self.pathloss_exp <= 0 or self.shadowing_var <= 0:
            raise ValueError("noise model parameters must be positive")

    def sigma_t(self, distance):
        """TOA distance-error std dev (meters) at the given distance(s)."""
        d = np.asarray(distance, dtype=float)
        var = SPEED_OF_LIGHT**2 * d**self.pathloss_exp / (8.0 * math.pi * self.bandwidth_hz**2)
        return np.sqrt(var)

    def sigma_r(self):
        """RSS log-distance-error std dev (unitless)."""
        return math.sqrt((math.log(10.0) / (10.0 * self.pathloss_exp)) ** 2 * self.shadowing_var)


def default_noise(model: NoiseModel, distance: float) -> tuple[float, float]:
    """Resolve (sigma_t, sigma_r) from the bandwidth/path-loss model at one distance."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return float(model.sigma_t(distance)), float(model.sigma_r())


@dataclass(frozen=True)
class SensorSpec:
    """One sensor: position plus its distance-error statistics.

    ``sigma_t`` (meters) and ``sigma_r`` (unitless, log-distance) are used as
    given unless the owning scene carries a :class:`NoiseModel`, which then
    resolves the TOA term per target distance.  ``eta`` is the within-sensor
    correlation between the two error components.
    """

    position: np.ndarray
    sigma_t: float = 1.0
    sigma_r: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(pos)):
            raise ValueError("sensor position must be finite")
        object.__setattr__(self, "position", pos)
        if self.sigma_t <= 0 or self.sigma_r <= 0:
            raise ValueError("sigma_t and sigma_r must be positive")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")


@dataclass(frozen=True)
class Scene:
    """Immutable world description shared by all selection algorithms."""

    sensors: tuple[SensorSpec, ...]
    d_s: float
    d_max: float
    targets: np.ndarray
    sensor_center: np.ndarray
    noise: NoiseModel | None = None

    def __post_init__(self):
        sensors = tuple(self.sensors)
        object.__setattr__(self, "sensors", sensors)
        targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if targets.shape[1] != 3:
            raise ValueError("targets must be an (G, 3) array")
        object.__setattr__(self, "targets", targets)
        center = np.asarray(self.sensor_center, dtype=float).reshape(3)
        object.__setattr__(self, "sensor_center", center)
        if self.d_s <= 0 or self.d_max <= self.d_s:
            raise ValueError("need 0 < d_s < d_max")
        positions = np.array([s.position for s in sensors])
        if not np.allclose(positions.mean(axis=0), center, atol=CENTER_RTOL * self.d_s, rtol=0.0):
            raise ValueError("sensor_center must equal the sensor centroid")
        radii = np.linalg.norm(positions - center, axis=1)
        if np.any(radii > self.d_s * (1 + 1e-12)):
            raise ValueError("all sensors must lie within d_s of the center")
        tdist = np.linalg.norm(targets - center, axis=1)
        if np.any(tdist <= self.d_s) or np.any(tdist > self.d_max * (1 + 1e-12)):
            raise ValueError("targets must lie in the shell d_s < r <= d_max")
        # Cached per-sensor arrays for the vectorized paths.
        object.__setattr__(self, "_positions", positions)
        object.__setattr__(self, "_sigma_t", np.array([s.sigma_t for s in sensors]))
        object.__setattr__(self, "_sigma_r", np.array([s.sigma_r for s in sensors]))
        object.__setattr__(self, "_eta", np.array([s.eta for s in sensors]))

    @property
    def m_max(self) -> int:
        return len(self.sensors)

    @property
    def positions(self) -> np.ndarray:
        """Sensor positions, shape (M_max, 3)."""
        return self._positions


def epsilon_value(sigma_t, sigma_r, eta, distance):
    """Information weight epsilon (m**-2) for given error stats and distance.

    epsilon = [sigma_T**-2 + sigma_R**-2 / d**2 - 2*eta/(sigma_T*sigma_R*d)]
              / (1 - eta**2)

    Accepts scalars or broadcastable arrays.
    """
    st, sr, et, d = (np.asarray(x, dtype=float) for x in (sigma_t, sigma_r, eta, distance))
    num = st**-2 + sr**-2 / d**2 - 2.0 * et / (st * sr * d)
    return num / (1.0 - et**2)


def resolved_sigmas(scene: Scene, distances) -> tuple[np.ndarray, np.ndarray]:
    """Per-sensor (sigma_t, sigma_r) arrays, honoring the scene's noise model.

    ``distances`` broadcasts against the sensor axis (last axis length M_max).
    """
    d = np.asarray(distances, dtype=float)
    if scene.noise is not None:
        st = scene.noise.sigma_t(d)
        sr = np.broadcast_to(scene.noise.sigma_r(), d.shape).copy()
        return st, sr
    st = np.broadcast_to(scene._sigma_t, d.shape).copy()
    sr = np.broadcast_to(scene._sigma_r, d.shape).copy()
    return st, sr


@dataclass(frozen=True)
class SensorTargetGeometry:
    """Distance, unit LOS vector, and information weight for one pair."""

    distance: float
    los: np.ndarray
    epsilon: float


def geometry(scene: Scene, sensor_index: int, target) -> SensorTargetGeometry:
    """Per-(sensor, target) quantities consumed by every CRLB computation.

    LOS points from the target toward the sensor.  Raises
    :class:`DegenerateGeometryError` if the two coincide.
    """
    spec = scene.sensors[sensor_index]
    target = np.asarray(target, dtype=float).reshape(3)
    diff = spec.position - target
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise DegenerateGeometryError(f"sensor {sensor_index} coincides with the target")
    if scene.noise is not None:
        st, sr = default_noise(scene.noise, d)
    else:
        st, sr = spec.sigma_t, spec.sigma_r
    eps = float(epsilon_value(st, sr, spec.eta, d))
    return SensorTargetGeometry(distance=d, los=diff / d, epsilon=eps)


@dataclass(frozen=True)
class GridGeometry:
    """Vectorized per-(target, sensor) geometry over a whole grid.

    eps : (G, M) information weights
    los : (G, M, 3) unit LOS vectors
    """

    eps: np.ndarray
    los: np.ndarray

    @property
    def n_targets(self) -> int:
        return self.eps.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.eps.shape[1]

    def weighted_outer(self) -> np.ndarray:
        """eps_mg * u u^T stacked as (G, M, 3, 3)."""
        return self.eps[..., None, None] * (self.los[..., :, None] * self.los[..., None, :])

    def weighted_los(self) -> np.ndarray:
        """sqrt(eps_mg) * u stacked as (G, M, 3)."""
        return np.sqrt(self.eps)[..., None] * self.los


def grid_geometry(scene: Scene, targets=None) -> GridGeometry:
    """Evaluate eps and LOS for every (target, sensor) pair at once."""
    if targets is None:
        targets = scene.targets
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    diff = scene.positions[None, :, :] - targets[:, None, :]  # (G, M, 3)
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist == 0.0):
        raise DegenerateGeometryError("a target coincides with a sensor")
    los = diff / dist[..., None]
    st, sr = resolved_sigmas(scene, dist)
    eps = epsilon_value(st, sr, scene._eta[None, :], dist)
    return GridGeometry(eps=eps, los=los)


# ---------------------------------------------------------------------------
# Scene construction
# ---------------------------------------------------------------------------
def _shell_radii_uniform(rng, n, d_s, d_max):
    # Uniform in shell volume; open at d_s, closed at d_max.
    u = 1.0 - rng.random(n)
    return np.cbrt(d_s**3 + u * (d_max**3 - d_s**3))


def _fibonacci_directions(n):
    """n near-evenly spread unit vectors (golden-angle spiral)."""
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    s = np.sqrt(np.maximum(0.0, 1.0 - z**2))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def shell_grid(d_s: float, d_max: float, g: int) -> np.ndarray:
    """Low-discrepancy target lattice in the shell (d_s, d_max].

    Directions come from a Fibonacci sphere; radii are stratified in shell
    volume so every point carries equal volume share.
    """
    dirs = _fibonacci_directions(g)
    radii = np.cbrt(d_s**3 + (np.arange(g) + 0.5) / g * (d_max**3 - d_s**3))
    return dirs * radii[:, None]


def random_scene(
    seed,
    m_max: int,
    d_s: float,
    d_max: float,
    g: int,
    noise: NoiseModel | None = None,
    mode: str = "uniform",
    sigma_t: float = 1.0,
    sigma_r: float = 1.0,
    eta: float = 0.0,
) -> Scene:
    """Random sensor layout plus a target grid, deterministic under ``seed``.

    Sensors are drawn uniformly in the ball of radius ``d_s``, recentered so
    their mean is the origin, then rescaled so the farthest sensor sits
    exactly at ``d_s`` (making d_s the tightest enclosing radius).  Targets
    fill the shell either uniformly at random (``mode="uniform"``) or on the
    deterministic low-discrepancy lattice (``mode="even"``).
    """
    if m_max < 4:
        raise ValueError("need at least 4 sensors")
    if g < 1:
        raise ValueError("need at least one target")
    if mode not in ("uniform", "even"):
        raise ValueError(f"unknown target mode {mode!r}")
    rng = np.random.default_rng(seed)
    # Uniform in the unit ball via normalized Gaussians and r ~ U**(1/3).
    raw = rng.normal(size=(m_max, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    raw *= np.cbrt(rng.random((m_max, 1)))
    raw -= raw.mean(axis=0)
    raw *= d_s / np.linalg.norm(raw, axis=1).max()
    if mode == "uniform":
        radii = _shell_radii_uniform(rng, g, d_s, d_max)
        dirs = rng.normal(size=(g, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        targets = dirs * radii[:, None]
    else:
        targets = shell_grid(d_s, d_max, g)
    sensors = tuple(
        SensorSpec(position=p, sigma_t=sigma_t, sigma_r=sigma_r, eta=eta) for p in raw
    )
    return Scene(
        sensors=sensors,
        d_s=d_s,
        d_max=d_max,
        targets=targets,
        sensor_center=np.zeros(3),
        noise=noise,
    )


def prism_scene(
    d_s: float = 4.0,
    d_max: float = 14.0,
    g: int = 152,
    noise: NoiseModel | None = None,
    height_ratio: float = 0.28,
    sigma_t: float = 1.0,
    sigma_r: float = 1.0,
    eta: float = 0.0,
) -> Scene:
    """Deterministic 14-sensor prism layout with an even target grid.

    Two stacked hexagonal rings (z = +-h) plus two axial apex sensors.  The
    listing order puts the whole top ring first, so a top-weight rounding
    heuristic that ties across the symmetric ring collapses onto spatially
    clustered sensors; this is the layout used to demonstrate the rounding
    instability of the relaxed selection.
    """
    ring = np.arange(6) * (2.0 * math.pi / 6.0)
    h = height_ratio
    top = np.stack([np.cos(ring), np.sin(ring), np.full(6, h)], axis=1)
    bottom = np.stack(
        [np.cos(ring + math.pi / 6.0), np.sin(ring + math.pi / 6.0), np.full(6, -h)], axis=1
    )
    apex = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    pts = np.vstack([top, bottom, apex])
    pts -= pts.mean(axis=0)
    pts *= d_s / np.linalg.norm(pts, axis=1).max()
    sensors = tuple(
        SensorSpec(position=p, sigma_t=sigma_t, sigma_r=sigma_r, eta=eta) for p in pts
    )
    return Scene(
        sensors=sensors,
        d_s=d_s,
        d_max=d_max,
        targets=shell_grid(d_s, d_max, g),
        sensor_center=np.zeros(3),
        noise=noise,
    )


# ---------------------------------------------------------------------------
# JSON-compatible serialization (schema documented in the harness module)
# ---------------------------------------------------------------------------
def scene_to_dict(scene: Scene) -> dict:
    out = {
        "d_s": scene.d_s,
        "d_max": scene.d_max,
        "sensor_center": scene.sensor_center.tolist(),
        "sensors": [
            {
                "position": s.position.tolist(),
                "sigma_t": s.sigma_t,
                "sigma_r": s.sigma_r,
                "eta": s.eta,
            }
            for s in scene.sensors
        ],
        "targets": scene.targets.tolist(),
    }
    if scene.noise is not None:
        out["noise"] = {
            "bandwidth_hz": scene.noise.bandwidth_hz,
            "pathloss_exp": scene.noise.pathloss_exp,
            "shadowing_var": scene.noise.shadowing_var,
        }
    else:
        out["noise"] = None
    return out


def scene_from_dict(data: dict) -> Scene:
    noise = None
    if data.get("noise") is not None:
        noise = NoiseModel(**data["noise"])
    sensors = tuple(
        SensorSpec(
            position=np.asarray(s["position"], dtype=float),
            sigma_t=float(s.get("sigma_t", 1.0)),
            sigma_r=float(s.get("sigma_r", 1.0)),
            eta=float(s.get("eta", 0.0)),
        )
        for s in data["sensors"]
    )
    return Scene(
        sensors=sensors,
        d_s=float(data["d_s"]),
        d_max=float(data["d_max"]),
        targets=np.asarray(data["targets"], dtype=float),
        sensor_center=np.asarray(data["sensor_center"], dtype=float),
        noise=noise,
    )
