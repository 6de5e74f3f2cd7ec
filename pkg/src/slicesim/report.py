"""Tables and figures for run summaries and policy comparisons.

Output is split by audience: JSON keeps full precision for downstream
tooling, CSV rounds to six significant digits for spreadsheets, and the
figures give the at-a-glance normalized view (everything relative to
the first run, which is the comparison baseline).

Rendering is headless; figures go straight to PNG files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import Summary

COMPARISON_FIELDS = [
    "policy", "mechanism", "app", "n_arrived", "n_completed",
    "mean_ntat", "ntat_ratio", "ntat_reduction",
    "throughput_per_cycle", "throughput_ratio",
    "mean_latency_cycles", "latency_ratio", "reconfig_fraction",
]

_MECH_SHORT = {"sequential_bus": "bus", "fast_parallel": "fast"}


def run_label(run: dict) -> str:
    mech = _MECH_SHORT.get(run.get("mechanism"), run.get("mechanism"))
    return f"{run['policy']}+{mech}"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_summary_json(summary: Summary, path) -> Path:
    path = Path(path)
    payload = summary.to_dict() if isinstance(summary, Summary) else summary
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def comparison_rows(comparison: dict) -> list:
    """Flatten a comparison into one row per (run, app), plus a mean
    row per run so the headline numbers survive the CSV round trip."""
    rows = []
    for run in comparison["runs"]:
        frames = run.get("frames", {})
        for app_id in sorted(run["per_app"]):
            entry = run["per_app"][app_id]
            rows.append({
                "policy": run["policy"],
                "mechanism": run["mechanism"],
                "app": app_id,
                "n_arrived": entry.get("n_arrived"),
                "n_completed": entry.get("n_completed"),
                "mean_ntat": entry.get("mean_ntat"),
                "ntat_ratio": entry.get("ntat_ratio"),
                "ntat_reduction": entry.get("ntat_reduction"),
                "throughput_per_cycle": entry.get("throughput_per_cycle"),
                "throughput_ratio": entry.get("throughput_ratio"),
                "mean_latency_cycles": None,
                "latency_ratio": None,
                "reconfig_fraction": None,
            })
        rows.append({
            "policy": run["policy"],
            "mechanism": run["mechanism"],
            "app": "(mean)",
            "n_arrived": run["overall"].get("n_arrived"),
            "n_completed": run["overall"].get("n_completed"),
            "mean_ntat": run["overall"].get("mean_ntat"),
            "ntat_ratio": None,
            "ntat_reduction": run.get("mean_ntat_reduction"),
            "throughput_per_cycle": None,
            "throughput_ratio": run.get("mean_throughput_ratio"),
            "mean_latency_cycles": frames.get("mean_latency_cycles"),
            "latency_ratio": frames.get("latency_ratio"),
            "reconfig_fraction": frames.get("reconfig_fraction"),
        })
    return rows


def write_comparison_csv(comparison: dict, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPARISON_FIELDS)
        writer.writeheader()
        for row in comparison_rows(comparison):
            writer.writerow({k: _fmt(row.get(k)) for k in COMPARISON_FIELDS})
    return path


def write_comparison_json(comparison: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(comparison, sort_keys=True, indent=2) + "\n")
    return path


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def _grouped_bars(ax, apps, runs, values, ylabel):
    n_runs = len(runs)
    width = 0.8 / n_runs
    for i, run in enumerate(runs):
        xs = [j + (i - (n_runs - 1) / 2) * width for j in range(len(apps))]
        ax.bar(xs, values[i], width=width, label=run_label(run))
    ax.set_xticks(range(len(apps)))
    ax.set_xticklabels(apps, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)


def render_ntat_figure(comparison: dict, path) -> Path:
    runs = comparison["runs"]
    apps = sorted({a for run in runs for a in run["per_app"]})
    values = [[run["per_app"].get(a, {}).get("mean_ntat", 0.0) or 0.0
               for a in apps] for run in runs]
    fig, ax = plt.subplots(figsize=(7, 4))
    _grouped_bars(ax, apps, runs, values, "mean NTAT (lower is better)")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle=":")
    ax.set_title(f"Normalized turnaround vs {comparison['baseline']}")
    return _save(fig, Path(path))


def render_throughput_figure(comparison: dict, path) -> Path:
    runs = comparison["runs"]
    apps = sorted({a for run in runs for a in run["per_app"]})
    values = [[run["per_app"].get(a, {}).get("throughput_ratio", 0.0) or 0.0
               for a in apps] for run in runs]
    fig, ax = plt.subplots(figsize=(7, 4))
    _grouped_bars(ax, apps, runs, values,
                  f"throughput relative to {comparison['baseline']}")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle=":")
    ax.set_title("Per-application throughput ratio")
    return _save(fig, Path(path))


def render_latency_figure(comparison: dict, path) -> Path:
    """Stacked per-run frame latency: reconfiguration vs everything else."""
    runs = [r for r in comparison["runs"] if "frames" in r]
    labels = [run_label(r) for r in runs]
    total = [r["frames"]["mean_latency_cycles"] / 1e6 for r in runs]
    reconf = [t * r["frames"]["reconfig_fraction"]
              for t, r in zip(total, runs)]
    other = [t - c for t, c in zip(total, reconf)]
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = range(len(runs))
    ax.bar(xs, other, label="execution + waiting")
    ax.bar(xs, reconf, bottom=other, label="reconfiguration")
    for x, (t, r) in enumerate(zip(total, runs)):
        ax.annotate(f"{r['frames']['reconfig_fraction'] * 100:.1f}%",
                    (x, t), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=15, ha="right")
    ax.set_ylabel("mean frame latency (Mcycles)")
    ax.set_title("Frame latency and reconfiguration share")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    return _save(fig, Path(path))


def render_comparison_figures(comparison: dict, out_dir) -> list:
    """Render every figure the comparison has data for."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        render_ntat_figure(comparison, out_dir / "fig_ntat.png"),
        render_throughput_figure(comparison, out_dir / "fig_throughput.png"),
    ]
    if any("frames" in r for r in comparison["runs"]):
        paths.append(
            render_latency_figure(comparison, out_dir / "fig_latency.png"))
    return paths
