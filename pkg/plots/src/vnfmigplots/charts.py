"""Render Fig.-3-style charts from vnfmigsim's metrics.csv / summary.json.

Pure file-to-file transforms: series values are taken from the CSV verbatim
(no resampling or smoothing). With a summary.json carrying active-FG-count
buckets, the energy and delay charts switch to the load-bucketed view.
"""

import csv
import json
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("energy", "delay", "reward")

COLUMN_FOR_KIND = {
    "energy": "avg_energy",
    "delay": "avg_delay_ms",
    "reward": "norm_reward",
}

Y_LABEL = {
    "energy": "Average energy consumption",
    "delay": "Average E2E delay (ms)",
    "reward": "Normalized cumulative reward",
}


class SchemaError(ValueError):
    """The input files do not carry the columns the chart needs."""


@dataclass
class ChartSpec:
    csv_path: str
    kind: str
    out_path: str
    summary_path: str | None = None

    def validate(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown chart kind {self.kind!r}")


def read_rows(csv_path: str) -> list[dict]:
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{csv_path} has no data rows")
    return rows


def extract_series(csv_path: str, kind: str) -> dict:
    """(policy, seed) -> (episode list, value list), values straight from the CSV."""
    column = COLUMN_FOR_KIND.get(kind)
    if column is None:
        raise SchemaError(f"unknown chart kind {kind!r}")
    rows = read_rows(csv_path)
    for needed in ("episode", "policy", "seed", column):
        if needed not in rows[0]:
            raise SchemaError(f"missing column {needed!r} in {csv_path}")
    series = {}
    for row in rows:
        key = (row["policy"], row["seed"])
        xs, ys = series.setdefault(key, ([], []))
        xs.append(int(row["episode"]))
        ys.append(float(row[column]))
    return series


def extract_buckets(summary_path: str, kind: str) -> dict:
    """policy -> (bucket FG counts, median values) from a compare summary."""
    with open(summary_path) as fh:
        summary = json.load(fh)
    buckets = summary.get("buckets") or {}
    edges = buckets.get("active_fg_edges")
    if not edges:
        raise SchemaError(f"{summary_path} carries no active-FG buckets")
    column = COLUMN_FOR_KIND[kind]
    out = {}
    for policy, table in buckets.items():
        if policy == "active_fg_edges":
            continue
        if column not in table:
            raise SchemaError(f"missing column {column!r} in {summary_path} buckets")
        out[policy] = (edges, table[column])
    return out


def render(spec: ChartSpec) -> str:
    """Write one chart (one line per series, legend, labeled axes); returns out_path."""
    spec.validate()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if spec.kind in ("energy", "delay") and spec.summary_path:
        for policy, (edges, values) in sorted(extract_buckets(spec.summary_path, spec.kind).items()):
            pts = [(x, y) for x, y in zip(edges, values) if y is not None]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=policy)
        ax.set_xlabel("Number of VNF-FGs")
    else:
        for (policy, seed), (xs, ys) in sorted(extract_series(spec.csv_path, spec.kind).items()):
            ax.plot(xs, ys, marker=".", label=f"{policy} (seed {seed})")
        ax.set_xlabel("Episode")
    ax.set_ylabel(Y_LABEL[spec.kind])
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return spec.out_path
