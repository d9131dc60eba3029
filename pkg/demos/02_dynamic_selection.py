"""Greedy selection for a known approximate target location.

Runs the two low-complexity greedy selectors, the full-evaluation benchmark,
and the exhaustive optimum across subset sizes, printing bound values next to
arithmetic-operation counts (measured and closed-form).
"""

import numpy as np

from sensorsel import bof, exhaustive_dynamic, gss_f, gss_t, op_count_model
from sensorsel.scene import NoiseModel, random_scene

noise = NoiseModel(bandwidth_hz=500e6, pathloss_exp=2.0, shadowing_var=0.83)
scene = random_scene(seed=7, m_max=14, d_s=4.0, d_max=14.0, g=1, noise=noise)
target = scene.targets[0]

print(f"{'M':>3} {'exhaustive':>11} {'gss_t':>9} {'gss_f':>9} {'bof':>9}"
      f" {'ops(gss_t)':>11} {'ops(gss_f)':>11}")
for m in range(4, 11):
    ex = exhaustive_dynamic(scene, target, m)
    rt = gss_t(scene, target, m, seed=m)
    rf = gss_f(scene, target, m, seed=m)
    rb = bof(scene, target, m, seed=m)
    print(f"{m:>3} {ex.crlb.value:>11.4f} {rt.crlb.value:>9.4f} {rf.crlb.value:>9.4f}"
          f" {rb.crlb.value:>9.4f} {rt.op_count:>11} {rf.op_count:>11}")

print("\nclosed-form totals at M = M_max:")
for m_max in (14, 50, 100):
    t_ops = op_count_model("gss_t", m_max, m_max)
    f_ops = op_count_model("gss_f", m_max, m_max)
    print(f"  M_max={m_max:>3}: gss_t {t_ops:>9}  gss_f {f_ops:>9}  "
          f"(quadratic vs cubic growth)")

print("\nwith a shared seed, gss_t and bof pick identical subsets:")
a = gss_t(scene, target, 7, seed=123)
b = bof(scene, target, 7, seed=123)
print(f"  gss_t: {sorted(a.subset)}\n  bof:   {sorted(b.subset)}")
