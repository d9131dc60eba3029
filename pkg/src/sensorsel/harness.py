"""Experiment runner: scenario configs in, long-format CSV + JSON summary out.

A scenario file is strictly validated JSON (unknown keys are rejected) that
names a scene (explicit or generated), a master seed, an experiment count,
and a list of algorithm invocations.  Suites derive one RNG stream per
(experiment, algorithm run) by hierarchical seed splitting, so results are
byte-identical across reruns and across worker counts; wall-clock timings
live in a clearly marked column excluded from that guarantee.

Output format: two comment lines (schema version, canonical config echo),
then a fixed-column CSV.  The config echo makes every file self-describing:
``verify`` rebuilds the scenes from it and re-evaluates every stored
subset's bound against the stored value.

Config schema (dynamic suite)::

    {
      "schema_version": 1,
      "scenario_id": "name",
      "seed": 1234,
      "scene": {"generator": {"m_max": 14, "d_s": 4.0, "d_max": 14.0,
                              "g": 152, "mode": "uniform",
                              "noise": {"bandwidth_hz": 5e8,
                                        "pathloss_exp": 2.0,
                                        "shadowing_var": 0.83}}}
               | {"explicit": {...scene dict...}},
      "experiments": 10,
      "targets_per_experiment": 10,        # optional cap, dynamic only
      "m_max_sweep": [6, 10, 14],          # optional, dynamic only
      "algorithms": [{"name": "gss_t", "m": 5}, ...]
    }

Robust-suite algorithm names: relaxed, relaxed_round, ico, dcp, dmo,
exhaustive; dynamic-suite names: gss_t, gss_f, bof, exhaustive.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamic as dyn
from .crlb import crlb_trace
from .dcp import dcp
from .dmo import dmo
from .robust import (
    exhaustive_robust,
    ico,
    relaxed_solve,
    round_top_m,
    subset_to_vector,
    vector_to_subset,
    worst_case_crlb,
)
from .scene import NoiseModel, Scene, random_scene, scene_from_dict

RESULTS_SCHEMA = "select-results-v1"
WORKERS_ENV = "SELECT_WORKERS"

COLUMNS = [
    "scenario_id",
    "suite",
    "experiment",
    "target_index",
    "algorithm",
    "seed",
    "m_max",
    "m",
    "g",
    "value",
    "subset",
    "weights",
    "op_count",
    "kappa",
    "zero_penalty_rate",
    "binary",
    "converged",
    "error",
    "wall_time_s",
]

DYNAMIC_ALGOS = {"gss_t", "gss_f", "bof", "exhaustive"}
ROBUST_ALGOS = {"relaxed", "relaxed_round", "ico", "dcp", "dmo", "exhaustive"}


class ConfigError(ValueError):
    """Scenario file failed validation."""


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------
def _check_keys(d: dict, required: dict, optional: dict, ctx: str) -> None:
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{ctx}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"{ctx}: missing keys {sorted(missing)}")
    for key, types in {**required, **optional}.items():
        if key in d and d[key] is not None and not isinstance(d[key], types):
            raise ConfigError(f"{ctx}: key {key!r} has wrong type {type(d[key]).__name__}")


_ALGO_PARAMS = {
    "gss_t": {"m": (int,)},
    "gss_f": {"m": (int,)},
    "bof": {"m": (int,)},
    "exhaustive": {"m": (int,)},
    "relaxed": {"m": (int,)},
    "relaxed_round": {"m": (int,)},
    "ico": {"m": (int,)},
    "dcp": {"m": (int,), "kappa": (int, float)},
    "dmo": {"m": (int,)},
}
_ALGO_OPTIONAL = {
    "exhaustive": {"cap": (int,)},
    "gss_t": {"k_t": (int,)},
    "dcp": {"n_dcp": (int,), "eps": (int, float)},
    "dmo": {"mu": (int, float), "delta": (int, float)},
    "relaxed": {"tol": (int, float)},
    "relaxed_round": {"tol": (int, float)},
    "ico": {"tol": (int, float)},
}


def validate_config(raw: dict, suite: str) -> dict:
    """Validate a scenario dict for the given suite; returns it unchanged."""
    allowed = DYNAMIC_ALGOS if suite == "dynamic" else ROBUST_ALGOS
    optional = {"targets_per_experiment": (int,), "m_max_sweep": (list,)}
    if suite != "dynamic":
        optional = {}
    _check_keys(
        raw,
        required={
            "schema_version": (int,),
            "scenario_id": (str,),
            "seed": (int,),
            "scene": (dict,),
            "experiments": (int,),
            "algorithms": (list,),
        },
        optional=optional,
        ctx="config",
    )
    if raw["schema_version"] != 1:
        raise ConfigError(f"unsupported schema_version {raw['schema_version']}")
    if raw["experiments"] < 1:
        raise ConfigError("experiments must be >= 1")
    scene = raw["scene"]
    if set(scene) == {"generator"}:
        _check_keys(
            scene["generator"],
            required={"m_max": (int,), "d_s": (int, float), "d_max": (int, float), "g": (int,)},
            optional={
                "mode": (str,),
                "noise": (dict,),
                "sigma_t": (int, float),
                "sigma_r": (int, float),
                "eta": (int, float),
            },
            ctx="scene.generator",
        )
        noise = scene["generator"].get("noise")
        if noise is not None:
            _check_keys(
                noise,
                required={
                    "bandwidth_hz": (int, float),
                    "pathloss_exp": (int, float),
                    "shadowing_var": (int, float),
                },
                optional={},
                ctx="scene.generator.noise",
            )
    elif set(scene) == {"explicit"}:
        if raw["experiments"] != 1:
            raise ConfigError("an explicit scene requires experiments == 1")
        if raw.get("m_max_sweep"):
            raise ConfigError("m_max_sweep requires a generator scene")
        scene_from_dict(scene["explicit"])  # raises on malformed content
    else:
        raise ConfigError("scene must contain exactly one of 'generator' or 'explicit'")
    for i, entry in enumerate(raw["algorithms"]):
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"algorithms[{i}] must be a dict with a 'name'")
        name = entry["name"]
        if name not in allowed:
            raise ConfigError(f"algorithms[{i}]: {name!r} is not a {suite}-suite algorithm")
        params = dict(entry)
        params.pop("name")
        _check_keys(
            params,
            required=_ALGO_PARAMS[name],
            optional=_ALGO_OPTIONAL.get(name, {}),
            ctx=f"algorithms[{i}] ({name})",
        )
    return raw


def load_config(path: str, suite: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return validate_config(raw, suite)


# ---------------------------------------------------------------------------
# Scene and stream derivation (shared by run and verify)
# ---------------------------------------------------------------------------
def _blocks(config: dict) -> list[int | None]:
    """m_max sweep values, or [None] when the generator default applies."""
    sweep = config.get("m_max_sweep")
    return list(sweep) if sweep else [None]


def _build_scene(config: dict, block_m_max, scene_stream) -> Scene:
    scene_cfg = config["scene"]
    if "explicit" in scene_cfg:
        return scene_from_dict(scene_cfg["explicit"])
    gen = scene_cfg["generator"]
    noise = None
    if gen.get("noise") is not None:
        noise = NoiseModel(**gen["noise"])
    return random_scene(
        seed=scene_stream,
        m_max=block_m_max if block_m_max is not None else gen["m_max"],
        d_s=float(gen["d_s"]),
        d_max=float(gen["d_max"]),
        g=gen["g"],
        noise=noise,
        mode=gen.get("mode", "uniform"),
        sigma_t=float(gen.get("sigma_t", 1.0)),
        sigma_r=float(gen.get("sigma_r", 1.0)),
        eta=float(gen.get("eta", 0.0)),
    )


def _experiment_tasks(config: dict) -> list[tuple[int, int | None, int, np.random.SeedSequence]]:
    """Deterministic (task_index, m_max_block, experiment, seed stream) list."""
    blocks = _blocks(config)
    root = np.random.SeedSequence(config["seed"])
    children = root.spawn(len(blocks) * config["experiments"])
    tasks = []
    for bi, block in enumerate(blocks):
        for e in range(config["experiments"]):
            idx = bi * config["experiments"] + e
            tasks.append((idx, block, e, children[idx]))
    return tasks


def _display_seed(stream: np.random.SeedSequence) -> int:
    return int(stream.generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# Row helpers
# ---------------------------------------------------------------------------
def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _subset_str(subset) -> str:
    return "|".join(str(int(i)) for i in sorted(subset))


def _weights_str(c) -> str:
    return "|".join(repr(float(x)) for x in c)


def _base_row(config, suite, experiment, scene, stream) -> dict:
    return {
        "scenario_id": config["scenario_id"],
        "suite": suite,
        "experiment": experiment,
        "target_index": "",
        "algorithm": "",
        "seed": _display_seed(stream),
        "m_max": scene.m_max,
        "m": "",
        "g": scene.targets.shape[0],
        "value": "",
        "subset": "",
        "weights": "",
        "op_count": "",
        "kappa": "",
        "zero_penalty_rate": "",
        "binary": "",
        "converged": "",
        "error": "",
        "wall_time_s": "",
    }


# ---------------------------------------------------------------------------
# Suite workers (module level so a process pool can pickle them)
# ---------------------------------------------------------------------------
def _run_dynamic_experiment(config: dict, task) -> list[dict]:
    _, block, experiment, stream = task
    scene_stream, alg_root = stream.spawn(2)
    scene = _build_scene(config, block, scene_stream)
    n_targets = scene.targets.shape[0]
    cap = config.get("targets_per_experiment")
    if cap is not None:
        n_targets = min(cap, n_targets)
    runs = [
        (t, ai) for t in range(n_targets) for ai in range(len(config["algorithms"]))
    ]
    streams = alg_root.spawn(len(runs))
    rows = []
    for (t, ai), run_stream in zip(runs, streams):
        entry = config["algorithms"][ai]
        row = _base_row(config, "dynamic", experiment, scene, run_stream)
        row["target_index"] = t
        row["algorithm"] = entry["name"]
        row["m"] = entry["m"]
        target = scene.targets[t]
        start = time.perf_counter()
        try:
            if entry["name"] == "gss_t":
                res = dyn.gss_t(scene, target, entry["m"], run_stream, k_t=entry.get("k_t", dyn.GSS_T_OPS_PROSE))
            elif entry["name"] == "gss_f":
                res = dyn.gss_f(scene, target, entry["m"], run_stream)
            elif entry["name"] == "bof":
                res = dyn.bof(scene, target, entry["m"], run_stream)
            else:
                res = dyn.exhaustive_dynamic(scene, target, entry["m"], cap=entry.get("cap", 500_000))
            row["value"] = res.crlb.value
            row["subset"] = _subset_str(res.subset)
            row["op_count"] = res.op_count
            row["converged"] = True
        except Exception as exc:  # recorded per row; the suite keeps going
            row["error"] = f"{type(exc).__name__}: {exc}"
            row["converged"] = False
        row["wall_time_s"] = time.perf_counter() - start
        rows.append(row)
    return rows


def _run_robust_experiment(config: dict, task) -> list[dict]:
    _, block, experiment, stream = task
    scene_stream, alg_root = stream.spawn(2)
    scene = _build_scene(config, block, scene_stream)
    streams = alg_root.spawn(len(config["algorithms"]))
    rows = []
    for entry, run_stream in zip(config["algorithms"], streams):
        row = _base_row(config, "robust", experiment, scene, run_stream)
        row["algorithm"] = entry["name"]
        row["m"] = entry["m"]
        m = entry["m"]
        start = time.perf_counter()
        try:
            if entry["name"] == "relaxed":
                sol = relaxed_solve(scene, m, tol=entry.get("tol", 1e-6))
                row["value"] = sol.objective
                row["weights"] = _weights_str(sol.c)
                row["converged"] = sol.converged
            elif entry["name"] == "relaxed_round":
                sol = relaxed_solve(scene, m, tol=entry.get("tol", 1e-6))
                rounded = round_top_m(sol.c, m)
                row["value"] = worst_case_crlb(scene, rounded).value
                row["subset"] = _subset_str(vector_to_subset(rounded))
                row["converged"] = sol.converged
            elif entry["name"] == "ico":
                c = ico(scene, m, tol=entry.get("tol", 1e-6))
                row["value"] = worst_case_crlb(scene, c).value
                row["subset"] = _subset_str(vector_to_subset(c))
                row["converged"] = True
            elif entry["name"] == "dcp":
                res = dcp(
                    scene,
                    m,
                    kappa=float(entry["kappa"]),
                    n_starts=entry.get("n_dcp", 20),
                    eps_conv=entry.get("eps", 0.05),
                    seed=run_stream,
                )
                row["value"] = res.worst_case
                row["kappa"] = float(entry["kappa"])
                row["zero_penalty_rate"] = res.zero_penalty_rate
                row["binary"] = res.binary
                if res.binary:
                    row["subset"] = _subset_str(vector_to_subset(res.c))
                else:
                    row["weights"] = _weights_str(res.c)
                row["converged"] = res.warning is None
            elif entry["name"] == "dmo":
                res = dmo(scene, m, mu=entry.get("mu", 100.0), delta=entry.get("delta", 0.05))
                row["value"] = res.value
                row["subset"] = _subset_str(res.subset)
                row["converged"] = True
            else:
                res = exhaustive_robust(scene, m, cap=entry.get("cap", 500_000))
                row["value"] = res.value
                row["subset"] = _subset_str(res.subset)
                row["converged"] = True
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            row["converged"] = False
        row["wall_time_s"] = time.perf_counter() - start
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Suite drivers
# ---------------------------------------------------------------------------
def _n_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _run_suite(config: dict, suite: str, out_path: str, workers: int | None) -> list[dict]:
    validate_config(config, suite)
    worker_fn = _run_dynamic_experiment if suite == "dynamic" else _run_robust_experiment
    tasks = _experiment_tasks(config)
    if _n_workers(workers) == 1 or len(tasks) == 1:
        results = [worker_fn(config, task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=_n_workers(workers)) as pool:
            futures = [pool.submit(worker_fn, config, task) for task in tasks]
            results = [f.result() for f in futures]  # submission order == task order
    rows = [row for batch in results for row in batch]
    write_results(out_path, config, suite, rows)
    write_summary(out_path + ".summary.json", config, suite, rows)
    return rows


def run_dynamic_suite(config: dict, out_path: str, workers: int | None = None) -> list[dict]:
    """Run the dynamic-selection protocol and write CSV + summary sidecar."""
    return _run_suite(config, "dynamic", out_path, workers)


def run_robust_suite(config: dict, out_path: str, workers: int | None = None) -> list[dict]:
    """Run the robust-selection protocol and write CSV + summary sidecar."""
    return _run_suite(config, "robust", out_path, workers)


def write_results(path: str, config: dict, suite: str, rows: list[dict]) -> None:
    buf = io.StringIO()
    buf.write(f"#results-schema: {RESULTS_SCHEMA}\n")
    buf.write(f"#suite: {suite}\n")
    buf.write(f"#config: {json.dumps(config, sort_keys=True, separators=(',', ':'))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[col]) for col in COLUMNS])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_summary(path: str, config: dict, suite: str, rows: list[dict]) -> None:
    """Aggregate means per (algorithm, m, m_max) into a JSON sidecar."""
    groups: dict[tuple, dict] = {}
    for row in rows:
        key = (row["algorithm"], row["m"], row["m_max"])
        g = groups.setdefault(
            key, {"n": 0, "n_finite": 0, "sum_value": 0.0, "sum_ops": 0, "errors": 0}
        )
        g["n"] += 1
        if row["error"]:
            g["errors"] += 1
        value = row["value"]
        if isinstance(value, float) and np.isfinite(value):
            g["n_finite"] += 1
            g["sum_value"] += value
        if isinstance(row["op_count"], int):
            g["sum_ops"] += row["op_count"]
    summary = {
        "schema": RESULTS_SCHEMA,
        "suite": suite,
        "scenario_id": config["scenario_id"],
        "groups": [
            {
                "algorithm": alg,
                "m": m,
                "m_max": m_max,
                "runs": g["n"],
                "errors": g["errors"],
                "mean_value": (g["sum_value"] / g["n_finite"]) if g["n_finite"] else None,
                "finite_runs": g["n_finite"],
                "mean_op_count": (g["sum_ops"] / g["n"]) if g["n"] else None,
            }
            for (alg, m, m_max), g in sorted(groups.items(), key=lambda kv: str(kv[0]))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------
@dataclass
class VerifyReport:
    n_rows: int
    n_checked: int
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def read_results(path: str) -> tuple[dict, str, list[dict]]:
    """Parse a results CSV back into (config, suite, rows)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            body_start = i + 1
        else:
            break
    if meta.get("results-schema") != RESULTS_SCHEMA:
        raise ConfigError(f"unsupported results schema {meta.get('results-schema')!r}")
    suite = meta["suite"]
    config = json.loads(meta["config"])
    reader = csv.DictReader(io.StringIO("\n".join(lines[body_start:])))
    return config, suite, list(reader)


def verify(path: str, tol: float = 1e-9) -> VerifyReport:
    """Re-evaluate every stored subset's bound and diff against stored values.

    Dynamic rows are re-checked with the trace-form bound at the stored
    target index; robust rows with the worst case over the scene grid,
    rebuilt from either the stored subset or the stored continuous weights.
    """
    config, suite, rows = read_results(path)
    tasks = {(t[1], t[2]): t[3] for t in _experiment_tasks(config)}
    scenes: dict[tuple, Scene] = {}
    report = VerifyReport(n_rows=len(rows), n_checked=0)
    blocks = _blocks(config)
    for index, row in enumerate(rows):
        if row["error"] or (not row["subset"] and not row["weights"]):
            continue
        m_max = int(row["m_max"])
        block = None if blocks == [None] else m_max
        key = (block, int(row["experiment"]))
        if key not in scenes:
            stream, _ = tasks[key].spawn(2)
            scenes[key] = _build_scene(config, block, stream)
        scene = scenes[key]
        stored = float(row["value"])
        if suite == "dynamic":
            subset = [int(x) for x in row["subset"].split("|")]
            recomputed = crlb_trace(scene, subset, scene.targets[int(row["target_index"])]).value
        else:
            if row["weights"]:
                c = np.array([float(x) for x in row["weights"].split("|")])
            else:
                subset = [int(x) for x in row["subset"].split("|")]
                c = subset_to_vector(subset, scene.m_max)
            recomputed = worst_case_crlb(scene, c).value
        report.n_checked += 1
        if np.isinf(stored) and np.isinf(recomputed):
            continue
        rel = abs(stored - recomputed) / max(abs(recomputed), 1e-300)
        if not np.isfinite(rel) or rel > tol:
            report.failures.append(
                {"row": index, "stored": stored, "recomputed": recomputed, "rel_err": rel}
            )
    return report
