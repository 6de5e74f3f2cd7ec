"""Batch front door for the simulator.

Four subcommands: ``run`` simulates a scenario under one or more
policies and seeds and emits traces, summaries, comparison tables, and
figures; ``replay`` does the same for a previously exported request
stream; ``calibrate`` sweeps free knobs against their reference bands;
``catalog-dump`` prints the task catalog.

Policies are written ``kind[:AxG][@mechanism]``.  The optional unit
suffix applies to the fixed and variable kinds; the optional mechanism
suffix picks the reconfiguration transport.  Without a suffix the
monolithic baseline reconfigures over the shared sequential bus and the
sliced kinds use the platform's configured mechanism (fast parallel
streaming by default), mirroring the hardware each policy implies.

Everything is deterministic: the same command line writes byte-identical
summary and comparison files every time.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .allocator import parse_policy, policy_label
from .calibrate import TARGETS, calibrate
from .catalog import dump_catalog, load_catalog
from .dpr import MECHANISMS
from .engine import run, run_stream
from .errors import ConfigError, SliceSimError
from .metrics import compare, summarize
from .platform import load_platform
from .report import (render_comparison_figures, write_comparison_csv,
                     write_comparison_json, write_summary_json)
from .scheduler import SCHEDULER_NAMES
from .workload import generate, load_scenario, read_stream, write_stream

# The fixed default unit is coarser than the policy default of 1x4:
# the smallest builtin variant needs two array slices, so 1x4 slots
# could never host anything.  4x8 keeps every application runnable.
DEFAULT_POLICIES = ("baseline", "fixed:4x8", "variable:1x4", "flexible")
_MECH_SHORT = {"sequential_bus": "bus", "fast_parallel": "fast"}


def _parse_policy_arg(text: str, platform):
    """Split ``kind[:AxG][@mechanism]`` into (policy, dpr, label)."""
    base, _, mech = text.partition("@")
    policy = parse_policy(base)
    if mech:
        if mech not in MECHANISMS:
            raise ConfigError(
                f"unknown mechanism {mech!r} in policy {text!r}; expected "
                f"one of {MECHANISMS}")
    elif policy.kind == "baseline":
        mech = "sequential_bus"
    else:
        mech = platform.dpr.mechanism
    dpr = platform.dpr.with_mechanism(mech)
    label = f"{policy_label(policy)}+{_MECH_SHORT[mech]}"
    return policy, dpr, label


def _provenance(args, platform, scenario=None, extra=None) -> dict:
    catalog_text = dump_catalog(load_catalog(args.catalog))
    block = {
        "version": __version__,
        "argv": list(sys.argv[1:]),
        "platform": platform.to_dict(),
        "catalog": args.catalog,
        "catalog_digest": hashlib.sha256(catalog_text.encode()).hexdigest()[:16],
        "scheduler": args.scheduler,
        "seeds": getattr(args, "seed", None),
        "policies": list(args.policy),
        "horizon": getattr(args, "horizon", None),
    }
    if scenario is not None:
        block["scenario"] = scenario.to_dict()
    if extra:
        block.update(extra)
    return block


def _write_run_artifacts(out: Path, label: str, seed_tag: str, trace) -> dict:
    run_dir = out / "runs" / label / seed_tag
    run_dir.mkdir(parents=True, exist_ok=True)
    trace.write(run_dir / "trace.json")
    summary = summarize(trace)
    write_summary_json(summary, run_dir / "summary.json")
    return summary.to_dict()


def _write_comparison(out: Path, seed_tag: str, traces: list) -> dict:
    cmp_dir = out / "compare" / seed_tag
    cmp_dir.mkdir(parents=True, exist_ok=True)
    rpt = compare(traces)
    write_comparison_json(rpt, cmp_dir / "comparison.json")
    write_comparison_csv(rpt, cmp_dir / "comparison.csv")
    render_comparison_figures(rpt, cmp_dir)
    return rpt


def _print_seed_block(seed_tag: str, labels, summaries, rpt) -> None:
    print(f"[{seed_tag}]")
    print(f"  {'policy':<22} {'done':>9} {'mean NTAT':>10} {'util':>6}")
    for label, s in zip(labels, summaries):
        done = f"{s['overall']['n_completed']}/{s['overall']['n_arrived']}"
        print(f"  {label:<22} {done:>9} {s['overall']['mean_ntat']:>10.3f} "
              f"{s['utilization']['array']:>6.3f}")
    if rpt:
        for entry in rpt["runs"][1:]:
            name = f"{entry['policy']}+{_MECH_SHORT.get(entry['mechanism'], '?')}"
            print(f"  {name} vs {rpt['baseline']}: "
                  f"NTAT -{entry['mean_ntat_reduction'] * 100:.1f}%, "
                  f"throughput x{entry['mean_throughput_ratio']:.3f}")


def cmd_run(args) -> int:
    platform = load_platform(args.platform)
    catalog = load_catalog(args.catalog)
    scenario = load_scenario(args.scenario)
    parsed = [_parse_policy_arg(p, platform) for p in args.policy]
    seeds = args.seed

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "provenance.json").write_text(
        json.dumps(_provenance(args, platform, scenario),
                   sort_keys=True, indent=2) + "\n")
    for seed in seeds:
        seed_tag = f"s{seed}"
        stream = generate(scenario, catalog, platform.clock_hz, seed)
        write_stream(stream, out / f"stream_{seed_tag}.jsonl")
        traces, labels, summaries = [], [], []
        for policy, dpr, label in parsed:
            trace = run(platform, catalog, scenario, policy,
                        scheduler_name=args.scheduler, seed=seed,
                        horizon=args.horizon, dpr_params=dpr)
            traces.append(trace)
            labels.append(label)
            summaries.append(_write_run_artifacts(out, label, seed_tag, trace))
        rpt = _write_comparison(out, seed_tag, traces) if len(traces) > 1 else None
        _print_seed_block(seed_tag, labels, summaries, rpt)
    print(f"artifacts in {out}")
    return 0


def cmd_replay(args) -> int:
    platform = load_platform(args.platform)
    catalog = load_catalog(args.catalog)
    parsed = [_parse_policy_arg(p, platform) for p in args.policy]
    digest = hashlib.sha256(Path(args.stream).read_bytes()).hexdigest()[:16]
    meta = {"scenario": f"stream:{digest}", "scenario_kind": "replay",
            "seed": None, "clock_hz": platform.clock_hz}

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "provenance.json").write_text(
        json.dumps(_provenance(args, platform,
                               extra={"stream": args.stream,
                                      "stream_digest": digest}),
                   sort_keys=True, indent=2) + "\n")
    traces, labels, summaries = [], [], []
    for policy, dpr, label in parsed:
        stream = read_stream(args.stream, catalog)
        trace = run_stream(platform, catalog, stream, policy,
                           scheduler_name=args.scheduler, dpr_params=dpr,
                           horizon=args.horizon, meta=dict(meta))
        traces.append(trace)
        labels.append(label)
        summaries.append(_write_run_artifacts(out, label, "replay", trace))
    rpt = _write_comparison(out, "replay", traces) if len(traces) > 1 else None
    _print_seed_block("replay", labels, summaries, rpt)
    print(f"artifacts in {out}")
    return 0


def cmd_calibrate(args) -> int:
    platform = load_platform(args.platform)
    catalog = load_catalog(args.catalog)
    out = Path(args.out) if args.out else Path(f"calibration-{args.target}")
    calibrate(args.target, platform, catalog, out, seeds=tuple(args.seed))
    print((out / "report.txt").read_text(), end="")
    print(f"artifacts in {out}")
    return 0


def cmd_catalog_dump(args) -> int:
    text = dump_catalog(load_catalog(args.catalog))
    if args.out:
        Path(args.out).write_text(text)
        print(f"catalog written to {args.out}")
    else:
        print(text, end="")
    return 0


def _add_common(p, scenario=False, stream=False):
    p.add_argument("--platform", default="amber-default",
                   help="platform profile name or YAML file")
    p.add_argument("--catalog", default="builtin",
                   help="task catalog name or YAML file")
    if scenario:
        p.add_argument("--scenario", required=True,
                       help="scenario name (cloud-default, autonomous-default) "
                            "or YAML file")
    if stream:
        p.add_argument("stream", help="request stream file (one JSON per line)")


def _add_run_flags(p, seeds=True):
    p.add_argument("--policy", action="append", metavar="KIND[:AxG][@MECH]",
                   help="region policy; repeatable (default: all four kinds)")
    p.add_argument("--scheduler", default="greedy", choices=SCHEDULER_NAMES)
    if seeds:
        p.add_argument("--seed", action="append", type=int,
                       help="run seed; repeatable (default: 0)")
        horizon_default = "scenario duration"
    else:
        # A stream file carries no nominal duration, so replays drain.
        horizon_default = "drain to completion"
    p.add_argument("--horizon", type=int, default=None,
                   help=f"cycle cutoff; 0 drains to completion "
                        f"(default: {horizon_default})")
    p.add_argument("--out", default="slicesim-out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesim",
        description="Sliced-accelerator scheduling simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario")
    _add_common(p_run, scenario=True)
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay",
                              help="re-run an exported request stream")
    _add_common(p_replay, stream=True)
    _add_run_flags(p_replay, seeds=False)
    p_replay.set_defaults(func=cmd_replay)

    p_cal = sub.add_parser("calibrate", help="sweep free knobs to reference "
                                             "bands and write the winners")
    p_cal.add_argument("target", choices=TARGETS)
    _add_common(p_cal)
    p_cal.add_argument("--seed", action="append", type=int,
                       help="sweep seed; repeatable (default: 0 1 2)")
    p_cal.add_argument("--out", default=None, help="output directory")
    p_cal.set_defaults(func=cmd_calibrate)

    p_dump = sub.add_parser("catalog-dump", help="print the task catalog")
    _add_common(p_dump)
    p_dump.add_argument("--out", default=None, help="write here instead of stdout")
    p_dump.set_defaults(func=cmd_catalog_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "policy") and not args.policy:
        args.policy = list(DEFAULT_POLICIES)
    if hasattr(args, "seed") and not args.seed:
        args.seed = [0] if args.command in ("run", "replay") else [0, 1, 2]
    if not hasattr(args, "scheduler"):
        args.scheduler = None
    if not hasattr(args, "policy"):
        args.policy = []
    try:
        return args.func(args)
    except SliceSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
