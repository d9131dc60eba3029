"""Does the bound predict real estimator accuracy?

Simulates hybrid TOA/RSS measurements for the exhaustively optimal subset at
each size, runs the damped weighted-least-squares fix over many trials, and
compares the sample MSE to the bound.  In the moderate-noise regime the two
track each other within a few percent.
"""

import numpy as np

from sensorsel import crlb_trace, exhaustive_dynamic, mse_eval
from sensorsel.scene import NoiseModel, random_scene

noise = NoiseModel(bandwidth_hz=5e9, pathloss_exp=2.0, shadowing_var=0.83)
scene = random_scene(seed=77, m_max=10, d_s=4.0, d_max=14.0, g=1, noise=noise)
target = scene.targets[0]
print(f"target at {np.linalg.norm(target):.2f} m; 4000 trials per subset\n")

print(f"{'M':>3} {'bound (m^2)':>12} {'MSE (m^2)':>12} {'ratio':>7} {'excluded':>9}")
for m in (4, 5, 6, 8):
    subset = exhaustive_dynamic(scene, target, m).subset
    bound = crlb_trace(scene, subset, target).value
    res = mse_eval(scene, subset, target, n_trials=4000, seed=m)
    print(f"{m:>3} {bound:>12.5f} {res.value:>12.5f} {res.value / bound:>7.3f} "
          f"{res.n_excluded:>9}")
