"""Sweep-based calibration of free workload and cost-model knobs.

The simulator has two kinds of knobs with no single defensible value:
cloud arrival rates and the shared-bus transfer cost.  Each calibration
target sweeps one knob family, scores every setting against published
reference bands, writes the winning parameter files, and records what
was actually achieved (feasible or not, the best point is reported).

``fig5-rates`` calibrates two operating points of the cloud mix, not
one.  Turnaround separation is a light-load effect: once the baseline
machine saturates, queueing dwarfs everything and normalized turnaround
ratios leave the reference band.  Throughput separation is the
opposite: below saturation both policies complete all offered work and
drain-makespan ratios pin to 1.0.  No single arrival-rate setting shows
both, so the sweep records a turnaround point and a throughput point
and ships one scenario file per point.

``fig6-dpr`` calibrates the shared-bus word cost and the detection-event
cadence of the autonomous scenario jointly, so that reconfiguration
consumes a realistic share of baseline frame latency while staying
negligible under per-slice parallel streaming.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import yaml

from .catalog import Catalog
from .engine import run
from .errors import ConfigError
from .metrics import compare
from .platform import PlatformConfig
from .workload import (AutonomousScenario, CloudScenario, EventType,
                       autonomous_default, cloud_default, dump_scenario)

TARGETS = ("fig5-rates", "fig6-dpr")

# Reference bands the sweeps score against.
NTAT_REDUCTION_BAND = (0.15, 0.35)
NTAT_REDUCTION_GOAL = 0.255
THROUGHPUT_RATIO_BAND = (1.02, 1.35)
THROUGHPUT_RATIO_GOAL = 1.145
RECONFIG_FRACTION_BAND = (0.13, 0.16)
RECONFIG_FRACTION_GOAL = 0.144
FAST_FRACTION_MAX = 0.05
LATENCY_REDUCTION_MIN = 0.45

LIGHT_SCALES = (0.05, 0.08, 0.10, 0.12, 0.15, 0.20, 0.30)
HEAVY_SCALES = (1.2, 1.4, 1.6, 1.8, 2.0)
BUS_COST_GRID = (4, 5, 6, 7)
GAP_GRID = ((4, 8), (5, 10), (6, 12), (7, 13))


def _in(value, band) -> bool:
    return band[0] <= value <= band[1]


def _mean(xs):
    return sum(xs) / len(xs)


def _scaled_cloud(base: CloudScenario, scale: float) -> CloudScenario:
    # Rounded so the swept value and the shipped YAML agree exactly.
    tenants = tuple(dataclasses.replace(t, rate_hz=round(t.rate_hz * scale, 9))
                    for t in base.tenants)
    return dataclasses.replace(base, tenants=tenants)


def _cloud_point(platform, catalog, scenario, seeds) -> dict:
    """Baseline (shared-bus) vs flexible (parallel-stream) on one rate
    setting, drained to completion so throughput is a makespan ratio."""
    bus = platform.dpr.with_mechanism("sequential_bus")
    per_app: dict = {}
    means, tpts, utils = [], [], []
    for seed in seeds:
        tb = run(platform, catalog, scenario, "baseline", seed=seed,
                 horizon=0, dpr_params=bus)
        tf = run(platform, catalog, scenario, "flexible", seed=seed,
                 horizon=0)
        rpt = compare([tb, tf])
        flex = rpt["runs"][1]
        for app, row in flex["per_app"].items():
            if "ntat_reduction" in row:
                per_app.setdefault(app, []).append(row["ntat_reduction"])
        means.append(flex["mean_ntat_reduction"])
        tpts.append(flex["mean_throughput_ratio"])
        utils.append(rpt["runs"][0]["utilization"]["array"])
    return {
        "mean_ntat_reduction": _mean(means),
        "mean_throughput_ratio": _mean(tpts),
        "baseline_utilization": _mean(utils),
        "per_app_ntat_reduction": {a: _mean(v)
                                   for a, v in sorted(per_app.items())},
    }


def calibrate_fig5_rates(platform: PlatformConfig, catalog: Catalog,
                         out_dir, seeds=(0, 1, 2),
                         light_scales=LIGHT_SCALES,
                         heavy_scales=HEAVY_SCALES) -> dict:
    if not light_scales or not heavy_scales or not seeds:
        raise ConfigError("empty sweep range for fig5-rates")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = cloud_default()

    cells = []
    for scale in sorted(set(light_scales) | set(heavy_scales)):
        point = _cloud_point(platform, catalog,
                             _scaled_cloud(base, scale), seeds)
        point["scale"] = scale
        cells.append(point)

    def pick(candidates, key, goal, band):
        infos = [c for c in candidates if _in(c[key], band)]
        pool = infos or candidates
        best = min(pool, key=lambda c: abs(c[key] - goal))
        return best, bool(infos)

    light = [c for c in cells if c["scale"] in light_scales]
    heavy = [c for c in cells if c["scale"] in heavy_scales]
    ntat_pt, ntat_ok = pick(light, "mean_ntat_reduction",
                            NTAT_REDUCTION_GOAL, NTAT_REDUCTION_BAND)
    tpt_pt, tpt_ok = pick(heavy, "mean_throughput_ratio",
                          THROUGHPUT_RATIO_GOAL, THROUGHPUT_RATIO_BAND)

    scenarios = {}
    for tag, point in (("ntat", ntat_pt), ("throughput", tpt_pt)):
        sc = _scaled_cloud(base, point["scale"])
        path = out_dir / f"cloud-{tag}.yaml"
        path.write_text(dump_scenario(sc))
        scenarios[tag] = str(path)
        point["rates_hz"] = {t.tenant_id: t.rate_hz for t in sc.tenants}

    achieved = {
        "target": "fig5-rates",
        "feasible": ntat_ok and tpt_ok,
        "seeds": list(seeds),
        "bands": {
            "mean_ntat_reduction": list(NTAT_REDUCTION_BAND),
            "mean_throughput_ratio": list(THROUGHPUT_RATIO_BAND),
        },
        "ntat_point": ntat_pt,
        "throughput_point": tpt_pt,
        "scenario_files": scenarios,
        "sweep": cells,
    }
    (out_dir / "achieved.json").write_text(
        json.dumps(achieved, sort_keys=True, indent=2) + "\n")
    lines = [
        f"fig5-rates calibration over seeds {list(seeds)}",
        (f"  turnaround point: rate scale {ntat_pt['scale']} -> mean NTAT "
         f"reduction {ntat_pt['mean_ntat_reduction']:.3f} "
         f"(band {NTAT_REDUCTION_BAND}, in band: {ntat_ok})"),
        (f"  throughput point: rate scale {tpt_pt['scale']} -> throughput "
         f"ratio {tpt_pt['mean_throughput_ratio']:.3f} "
         f"(band {THROUGHPUT_RATIO_BAND}, in band: {tpt_ok})"),
        (f"  baseline utilization: {ntat_pt['baseline_utilization']:.3f} "
         f"light, {tpt_pt['baseline_utilization']:.3f} heavy"),
    ]
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
    return achieved


def _autonomous_point(platform, catalog, scenario, bus_cost, seeds) -> dict:
    """Baseline (shared bus at the swept word cost) vs flexible
    (parallel streams), scored on frame-latency structure."""
    bus = dataclasses.replace(platform.dpr, mechanism="sequential_bus",
                              bus_cycles_per_word=bus_cost)
    fast = bus.with_mechanism("fast_parallel")
    fracs_b, fracs_f, reds = [], [], []
    for seed in seeds:
        tb = run(platform, catalog, scenario, "baseline",
                 scheduler_name="greedy-patient", seed=seed, dpr_params=bus)
        tf = run(platform, catalog, scenario, "flexible",
                 scheduler_name="greedy-patient", seed=seed, dpr_params=fast)
        rpt = compare([tb, tf])
        fracs_b.append(rpt["runs"][0]["frames"]["reconfig_fraction"])
        fracs_f.append(rpt["runs"][1]["frames"]["reconfig_fraction"])
        reds.append(rpt["runs"][1]["frames"]["latency_reduction"])
    return {
        "bus_cycles_per_word": bus_cost,
        "baseline_reconfig_fraction": _mean(fracs_b),
        "fast_reconfig_fraction": _mean(fracs_f),
        "latency_reduction": _mean(reds),
    }


def calibrate_fig6_dpr(platform: PlatformConfig, catalog: Catalog,
                       out_dir, seeds=(0, 1, 2),
                       bus_grid=BUS_COST_GRID, gap_grid=GAP_GRID) -> dict:
    if not bus_grid or not gap_grid or not seeds:
        raise ConfigError("empty sweep range for fig6-dpr")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = autonomous_default()

    cells = []
    for lo, hi in gap_grid:
        events = tuple(dataclasses.replace(e, min_gap_frames=lo,
                                           max_gap_frames=hi)
                       for e in base.events)
        scenario = dataclasses.replace(base, events=events)
        for bus_cost in bus_grid:
            point = _autonomous_point(platform, catalog, scenario,
                                      bus_cost, seeds)
            point["min_gap_frames"] = lo
            point["max_gap_frames"] = hi
            cells.append(point)

    def feasible(c):
        return (_in(c["baseline_reconfig_fraction"], RECONFIG_FRACTION_BAND)
                and c["fast_reconfig_fraction"] < FAST_FRACTION_MAX
                and c["latency_reduction"] >= LATENCY_REDUCTION_MIN)

    good = [c for c in cells if feasible(c)]
    pool = good or cells
    best = min(pool, key=lambda c: (
        abs(c["baseline_reconfig_fraction"] - RECONFIG_FRACTION_GOAL),
        -c["latency_reduction"]))

    events = tuple(dataclasses.replace(e,
                                       min_gap_frames=best["min_gap_frames"],
                                       max_gap_frames=best["max_gap_frames"])
                   for e in base.events)
    scenario = dataclasses.replace(base, events=events)
    scenario_path = out_dir / "autonomous-detect.yaml"
    scenario_path.write_text(dump_scenario(scenario))

    dpr = dataclasses.replace(platform.dpr, mechanism="sequential_bus",
                              bus_cycles_per_word=best["bus_cycles_per_word"])
    calibrated = dataclasses.replace(platform, dpr=dpr)
    platform_path = out_dir / "platform-bus.yaml"
    platform_path.write_text(yaml.safe_dump(calibrated.to_dict(),
                                            sort_keys=True))

    achieved = {
        "target": "fig6-dpr",
        "feasible": bool(good),
        "seeds": list(seeds),
        "scheduler": "greedy-patient",
        "bands": {
            "baseline_reconfig_fraction": list(RECONFIG_FRACTION_BAND),
            "fast_reconfig_fraction_max": FAST_FRACTION_MAX,
            "latency_reduction_min": LATENCY_REDUCTION_MIN,
        },
        "chosen": best,
        "scenario_file": str(scenario_path),
        "platform_file": str(platform_path),
        "sweep": cells,
    }
    (out_dir / "achieved.json").write_text(
        json.dumps(achieved, sort_keys=True, indent=2) + "\n")
    lines = [
        f"fig6-dpr calibration over seeds {list(seeds)} "
        f"(scheduler greedy-patient)",
        (f"  chosen: bus {best['bus_cycles_per_word']} cycles/word, event "
         f"gap {best['min_gap_frames']}-{best['max_gap_frames']} frames"),
        (f"  baseline reconfig fraction {best['baseline_reconfig_fraction']:.3f} "
         f"(band {RECONFIG_FRACTION_BAND})"),
        (f"  fast reconfig fraction {best['fast_reconfig_fraction']:.3f} "
         f"(< {FAST_FRACTION_MAX})"),
        (f"  frame latency reduction {best['latency_reduction']:.3f} "
         f"(>= {LATENCY_REDUCTION_MIN})"),
        f"  all constraints met: {bool(good)}",
    ]
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
    return achieved


def calibrate(target: str, platform: PlatformConfig, catalog: Catalog,
              out_dir, seeds=(0, 1, 2)) -> dict:
    if target == "fig5-rates":
        return calibrate_fig5_rates(platform, catalog, out_dir, seeds)
    if target == "fig6-dpr":
        return calibrate_fig6_dpr(platform, catalog, out_dir, seeds)
    raise ConfigError(
        f"unknown calibration target {target!r}; expected one of {TARGETS}")
