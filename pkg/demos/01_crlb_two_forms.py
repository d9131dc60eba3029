"""The positioning bound, computed two ways.

Builds a random scene, evaluates the bound for a few sensor subsets with the
trace form (invert the 3x3 information matrix) and the fractional form (pair
and triple angle sums, no inversion), and shows the eigenvalue-box reading:
the bound equals half the surface-to-volume ratio of the box spanned by the
information matrix's eigenvalues.
"""

import numpy as np

from sensorsel import crlb_fractional, crlb_trace, fim, marginal_reduction, svr_decompose
from sensorsel.crlb import inv3, subset_geometries
from sensorsel.scene import NoiseModel, random_scene

noise = NoiseModel(bandwidth_hz=500e6, pathloss_exp=2.0, shadowing_var=0.83)
scene = random_scene(seed=42, m_max=14, d_s=4.0, d_max=14.0, g=1, noise=noise)
target = scene.targets[0]
print(f"scene: {scene.m_max} sensors in a {scene.d_s} m ball, "
      f"target at {np.linalg.norm(target):.2f} m\n")

print(f"{'subset':<24}{'trace form':>12}{'fractional':>12}{'rel diff':>12}")
rng = np.random.default_rng(1)
for _ in range(5):
    subset = sorted(rng.choice(14, size=rng.integers(4, 9), replace=False).tolist())
    t = crlb_trace(scene, subset, target)
    f = crlb_fractional(scene, subset, target)
    rel = abs(t.value - f.value) / t.value if not t.singular else float("nan")
    print(f"{str(subset):<24}{t.value:>12.5f}{f.value:>12.5f}{rel:>12.2e}")

subset = [0, 2, 5, 9, 12]
j = fim(scene, subset, target)
svr = svr_decompose(j)
print(f"\neigenvalue box for {subset}: lambda = {np.round(svr.eigenvalues, 4)}")
print(f"  (surface/2) / volume = {(svr.surface / 2) / svr.volume:.6f}")
print(f"  trace of inverse     = {crlb_trace(scene, subset, target).value:.6f}")

j_inv = inv3(j)
geoms = subset_geometries(scene, range(14), target)
best = max(
    (m for m in range(14) if m not in subset),
    key=lambda m: marginal_reduction(j_inv, geoms[m]),
)
gain = marginal_reduction(j_inv, geoms[best])
print(f"\nbest sensor to add: {best} (marginal bound reduction {gain:.6f} m^2),")
print(f"  check: {crlb_trace(scene, subset, target).value:.6f} -> "
      f"{crlb_trace(scene, subset + [best], target).value:.6f}")
