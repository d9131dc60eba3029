"""End-to-end pipeline: scenario config -> CSV -> verification -> figures.

Writes a small dynamic and a small robust scenario, runs both suites through
the harness API (the `select` CLI wraps the same calls), re-verifies every
stored record, and renders the figure families from the CSVs via the plots
package.  All outputs land in ./pipeline_out.
"""

import json
import pathlib
import subprocess
import sys

from sensorsel.harness import run_dynamic_suite, run_robust_suite, verify

OUT = pathlib.Path(__file__).resolve().parent / "pipeline_out"
OUT.mkdir(exist_ok=True)
ROOT = pathlib.Path(__file__).resolve().parents[1]

noise = {"bandwidth_hz": 500e6, "pathloss_exp": 2.0, "shadowing_var": 0.83}
dyn_cfg = {
    "schema_version": 1,
    "scenario_id": "pipeline-dynamic",
    "seed": 11,
    "scene": {"generator": {"m_max": 10, "d_s": 4.0, "d_max": 14.0, "g": 4,
                            "mode": "uniform", "noise": noise}},
    "experiments": 3,
    "m_max_sweep": [6, 10, 14],
    "algorithms": [
        {"name": "gss_t", "m": 5},
        {"name": "gss_f", "m": 5},
        {"name": "bof", "m": 5},
        {"name": "exhaustive", "m": 5},
    ],
}
rob_cfg = {
    "schema_version": 1,
    "scenario_id": "pipeline-robust",
    "seed": 22,
    "scene": {"generator": {"m_max": 8, "d_s": 4.0, "d_max": 14.0, "g": 8,
                            "mode": "even", "noise": noise}},
    "experiments": 2,
    "algorithms": [
        {"name": "relaxed", "m": 4},
        {"name": "relaxed_round", "m": 4},
        {"name": "ico", "m": 4},
        {"name": "dcp", "m": 4, "kappa": 0.2, "n_dcp": 8},
        {"name": "dcp", "m": 4, "kappa": 5.0, "n_dcp": 8},
        {"name": "dmo", "m": 4},
        {"name": "exhaustive", "m": 4},
    ],
}

dyn_csv = OUT / "dynamic.csv"
rob_csv = OUT / "robust.csv"
(OUT / "dynamic.json").write_text(json.dumps(dyn_cfg, indent=2))
(OUT / "robust.json").write_text(json.dumps(rob_cfg, indent=2))

print("running dynamic suite ...")
run_dynamic_suite(dyn_cfg, str(dyn_csv))
print("running robust suite ...")
run_robust_suite(rob_cfg, str(rob_csv))

for path in (dyn_csv, rob_csv):
    report = verify(str(path))
    print(f"verify {path.name}: {len(report.failures)} mismatches "
          f"in {report.n_checked} checked rows")

families = [
    ("crlb_vs_m", dyn_csv),
    ("ops_vs_mmax", dyn_csv),
    ("robust_crlb_vs_m", rob_csv),
    ("zero_penalty_vs_kappa", rob_csv),
    ("rounding_gap", rob_csv),
]
for family, csv_path in families:
    png = OUT / f"{family}.png"
    cmd = [sys.executable, str(ROOT / "plots" / "render.py"),
           "--family", family, "--in", str(csv_path), "--out", str(png)]
    subprocess.run(cmd, check=True)
    print(f"rendered {png.name}")
print(f"\nall artifacts in {OUT}")
