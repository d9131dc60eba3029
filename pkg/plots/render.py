#!/usr/bin/env python3
"""Figure regeneration from suite result CSVs.

Standalone display layer over the results-CSV contract: two leading comment
lines (``#results-schema: select-results-v1`` and ``#suite: ...``, plus a
``#config`` echo) followed by a fixed-column CSV.  No computation happens
here beyond grouping and averaging values already present in the rows.

Families:
    crlb_vs_m             mean bound per algorithm against subset size
    ops_vs_mmax           mean arithmetic-operation count against sensor count
    robust_crlb_vs_m      mean worst-case bound per robust algorithm
    zero_penalty_vs_kappa binary-convergence rate against the penalty scale
    rounding_gap          relaxed / exhaustive / rounded worst cases, bar chart

Usage: render.py --family <id> --in <csv> --out <png>
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

RESULTS_SCHEMA = "select-results-v1"
PNG_METADATA = {"Software": "sensorsel-plots"}

FAMILIES = (
    "crlb_vs_m",
    "ops_vs_mmax",
    "robust_crlb_vs_m",
    "zero_penalty_vs_kappa",
    "rounding_gap",
)


class SchemaError(RuntimeError):
    pass


def read_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    if meta.get("results-schema") != RESULTS_SCHEMA:
        raise SchemaError(
            f"unsupported results schema {meta.get('results-schema')!r}; "
            f"expected {RESULTS_SCHEMA!r}"
        )
    return meta, list(csv.DictReader(body))


def fnum(text):
    if text is None or text == "":
        return None
    value = float(text)
    return value if math.isfinite(value) else None


def mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def grouped_means(rows, key_fields, value_field):
    groups = defaultdict(list)
    for row in rows:
        key = tuple(row[k] for k in key_fields)
        groups[key].append(fnum(row[value_field]))
    return {k: mean(v) for k, v in groups.items() if mean(v) is not None}


def _series_plot(ax, rows, x_field, value_field, x_type=float):
    by_algo = defaultdict(dict)
    for (algo, x), v in grouped_means(rows, ["algorithm", x_field], value_field).items():
        by_algo[algo][x_type(x)] = v
    for algo in sorted(by_algo):
        xs = sorted(by_algo[algo])
        ax.plot(xs, [by_algo[algo][x] for x in xs], marker="o", label=algo)
    if by_algo:
        ax.legend()


def render_crlb_vs_m(ax, rows):
    _series_plot(ax, rows, "m", "value", x_type=int)
    ax.set_xlabel("selected sensors M")
    ax.set_ylabel("mean bound (m^2)")
    ax.set_title("Bound vs subset size, dynamic selection")


def render_ops_vs_mmax(ax, rows):
    counted = [r for r in rows if r["op_count"] not in ("", "0")]
    _series_plot(ax, counted, "m_max", "op_count", x_type=int)
    ax.set_xlabel("available sensors M_max")
    ax.set_ylabel("mean arithmetic operations")
    ax.set_yscale("log")
    ax.set_title("Metric-evaluation cost vs sensor count")


def render_robust_crlb_vs_m(ax, rows):
    _series_plot(ax, rows, "m", "value", x_type=int)
    ax.set_xlabel("selected sensors M")
    ax.set_ylabel("mean worst-case bound (m^2)")
    ax.set_title("Worst-case bound vs subset size, robust selection")


def render_zero_penalty_vs_kappa(ax, rows):
    dcp_rows = [r for r in rows if r["algorithm"] == "dcp"]
    means = {
        float(key[0]): value
        for key, value in grouped_means(dcp_rows, ["kappa"], "zero_penalty_rate").items()
    }
    xs = sorted(means)
    ax.plot(xs, [means[x] for x in xs], marker="s", color="tab:purple")
    ax.set_xlabel("penalty scale kappa")
    ax.set_ylabel("zero-penalty (binary) rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("Binary-convergence rate vs penalty scale")


def render_rounding_gap(ax, rows):
    algos = ("relaxed", "exhaustive", "relaxed_round")
    means = grouped_means(
        [r for r in rows if r["algorithm"] in algos], ["algorithm", "m"], "value"
    )
    ms = sorted({int(k[1]) for k in means})
    width = 0.25
    for i, algo in enumerate(algos):
        offs = [m + (i - 1) * width for m in ms]
        vals = [means.get((algo, str(m))) for m in ms]
        ax.bar(offs, [v if v is not None else 0.0 for v in vals], width=width, label=algo)
    ax.set_xlabel("selected sensors M")
    ax.set_ylabel("mean worst-case bound (m^2)")
    ax.set_yscale("log")
    ax.set_title("Relaxation vs exact vs top-M rounding")
    if ms:
        ax.set_xticks(ms)
        ax.legend()


RENDERERS = {
    "crlb_vs_m": render_crlb_vs_m,
    "ops_vs_mmax": render_ops_vs_mmax,
    "robust_crlb_vs_m": render_robust_crlb_vs_m,
    "zero_penalty_vs_kappa": render_zero_penalty_vs_kappa,
    "rounding_gap": render_rounding_gap,
}


def render(family: str, csv_path: str, out_path: str) -> None:
    meta, rows = read_rows(csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if not rows:
        print(f"warning: {csv_path} has no data rows; rendering empty axes", file=sys.stderr)
        ax.set_title(f"{family} (no data)")
    else:
        RENDERERS[family](ax, rows)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata=PNG_METADATA)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", required=True, choices=FAMILIES)
    parser.add_argument("--in", dest="csv_path", required=True, help="results CSV")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        render(args.family, args.csv_path, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
