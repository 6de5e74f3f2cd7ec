"""Turnaround, throughput, utilization, and latency metrics.

Turnaround time (TAT) spans arrival to completion; normalized TAT
divides by the time the request actually executed, so 1.0 means "ran
the moment it arrived with zero overhead" and anything above measures
queueing plus reconfiguration.  Reconfiguration time counts as waiting,
not execution: it is overhead the task did not ask for.

Summaries exclude a warm-up prefix of the run so start-of-run
transients (an empty machine absorbing its first requests) do not
flatter any policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ComparabilityError, ValidationError
from .workload import Request


@dataclass(frozen=True)
class RequestMetrics:
    wait_cycles: int
    exec_cycles: int

    @property
    def tat_cycles(self) -> int:
        return self.wait_cycles + self.exec_cycles

    @property
    def ntat(self) -> float:
        return self.tat_cycles / self.exec_cycles


def request_metrics(r: Request) -> RequestMetrics:
    """Metrics for one finished request.

    Waiting spans arrival to execution start, so queueing, image
    preload, bus contention, and reconfiguration all land in the wait
    term and NTAT is always at least 1.
    """
    if not r.done:
        raise ValidationError(
            f"request {r.request_id} never finished; turnaround metrics "
            f"are undefined for it")
    return RequestMetrics(wait_cycles=r.exec_start - r.arrival,
                          exec_cycles=r.finish - r.exec_start)


@dataclass(frozen=True)
class LatencyBreakdown:
    """Aggregate end-to-end frame latency split into reconfiguration
    and everything else (execution plus queueing)."""

    frames_counted: int
    frames_incomplete: int
    mean_latency_cycles: float
    reconfig_fraction: float

    @property
    def other_fraction(self) -> float:
        return 1.0 - self.reconfig_fraction


@dataclass
class Summary:
    """Per-run metrics over the post-warm-up window."""

    policy: str
    mechanism: str
    scenario: str
    seed: int
    window_start: int
    end_time: int
    per_app: dict
    overall: dict
    utilization: dict
    frames: LatencyBreakdown = None

    def to_dict(self) -> dict:
        d = {
            "policy": self.policy,
            "mechanism": self.mechanism,
            "scenario": self.scenario,
            "seed": self.seed,
            "window_start": self.window_start,
            "end_time": self.end_time,
            "per_app": self.per_app,
            "overall": self.overall,
            "utilization": self.utilization,
        }
        if self.frames is not None:
            d["frames"] = {
                "frames_counted": self.frames.frames_counted,
                "frames_incomplete": self.frames.frames_incomplete,
                "mean_latency_cycles": self.frames.mean_latency_cycles,
                "reconfig_fraction": self.frames.reconfig_fraction,
            }
        return d


def _mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def _time_weighted_util(samples, window_start, end_time, a_total, g_total):
    """Integrate the stepwise busy counts over the metrics window."""
    if end_time <= window_start:
        return {"array": 0.0, "glb": 0.0}
    area_a = 0
    area_g = 0
    prev_t, prev_a, prev_g = 0, 0, 0
    for t, a, g in samples + [(end_time, None, None)]:
        t_clip = min(max(t, window_start), end_time)
        prev_clip = min(max(prev_t, window_start), end_time)
        if t_clip > prev_clip:
            area_a += prev_a * (t_clip - prev_clip)
            area_g += prev_g * (t_clip - prev_clip)
        if t >= end_time:
            break
        prev_t, prev_a, prev_g = t, a, g
    span = end_time - window_start
    return {"array": area_a / (span * a_total),
            "glb": area_g / (span * g_total)}


def _frame_breakdown(trace, window_start) -> LatencyBreakdown:
    clock = trace.meta.get("clock_hz")
    fps = trace.meta.get("frame_rate_hz")
    frames: dict = {}
    for r in trace.requests:
        if r.frame is None:
            continue
        frames.setdefault(r.frame, []).append(r)
    latency_sum = 0
    reconfig_sum = 0
    counted = 0
    incomplete = 0
    latencies = []
    for f in sorted(frames):
        start = round(f * clock / fps)
        if start < window_start:
            continue
        group = frames[f]
        if not all(r.done for r in group):
            incomplete += 1
            continue
        latency = max(r.finish for r in group) - start
        latency_sum += latency
        reconfig_sum += sum(r.exec_start - r.reconfig_start for r in group)
        latencies.append(latency)
        counted += 1
    return LatencyBreakdown(
        frames_counted=counted,
        frames_incomplete=incomplete,
        mean_latency_cycles=_mean(latencies),
        reconfig_fraction=(reconfig_sum / latency_sum) if latency_sum else 0.0,
    )


def summarize(trace, warmup_fraction: float = 0.1) -> Summary:
    """Reduce a trace to its headline metrics.

    Only requests arriving at or after the warm-up boundary count.
    Throughput is work completed per cycle of window; requests still in
    flight at the end contribute nothing to it, so a policy that leaves
    a backlog scores lower.
    """
    if not 0.0 <= warmup_fraction < 1.0:
        raise ValidationError("warmup_fraction must be in [0, 1)")
    end_time = trace.end_time
    window_start = int(end_time * warmup_fraction)
    window = [r for r in trace.requests if r.arrival >= window_start]
    per_app: dict = {}
    for r in window:
        per_app.setdefault(r.app_id, []).append(r)
    span = end_time - window_start
    app_rows = {}
    for app_id in sorted(per_app):
        rs = per_app[app_id]
        done = [r for r in rs if r.done]
        ms = [request_metrics(r) for r in done]
        app_rows[app_id] = {
            "n_arrived": len(rs),
            "n_completed": len(done),
            "mean_ntat": _mean([m.ntat for m in ms]),
            "mean_tat_cycles": _mean([m.tat_cycles for m in ms]),
            "mean_wait_cycles": _mean([m.wait_cycles for m in ms]),
            "throughput_per_cycle": (sum(r.work for r in done) / span
                                     if span else 0.0),
        }
    done_all = [r for r in window if r.done]
    ms_all = [request_metrics(r) for r in done_all]
    overall = {
        "n_arrived": len(window),
        "n_completed": len(done_all),
        "mean_ntat": _mean([m.ntat for m in ms_all]),
        "mean_tat_cycles": _mean([m.tat_cycles for m in ms_all]),
        "backlog": len(window) - len(done_all),
    }
    platform = trace.meta["platform"]
    a_total = platform["columns"] // platform["cols_per_array_slice"]
    g_total = platform["glb_banks"]
    utilization = _time_weighted_util(trace.util_samples, window_start,
                                      end_time, a_total, g_total)
    frames = None
    if trace.meta.get("scenario_kind") == "autonomous":
        frames = _frame_breakdown(trace, window_start)
    return Summary(
        policy=trace.meta.get("policy"),
        mechanism=trace.meta.get("mechanism"),
        scenario=trace.meta.get("scenario"),
        seed=trace.meta.get("seed"),
        window_start=window_start,
        end_time=end_time,
        per_app=app_rows,
        overall=overall,
        utilization=utilization,
        frames=frames,
    )


def compare(traces: list, baseline_index: int = 0,
            warmup_fraction: float = 0.1) -> dict:
    """Compare runs of the same scenario and seed against a baseline.

    Ratios are per application and then averaged, so applications with
    work counted in different units never get summed together.
    """
    if len(traces) < 2:
        raise ComparabilityError("need at least two runs to compare")
    ref = traces[baseline_index]
    for t in traces:
        for key in ("scenario", "seed"):
            if t.meta.get(key) != ref.meta.get(key):
                raise ComparabilityError(
                    f"runs disagree on {key}: {t.meta.get(key)!r} vs "
                    f"{ref.meta.get(key)!r}; comparisons require the same "
                    f"scenario and seed")
        if len(t.requests) != len(ref.requests):
            raise ComparabilityError("runs saw different request streams")
    summaries = [summarize(t, warmup_fraction) for t in traces]
    base = summaries[baseline_index]
    runs = []
    for s in summaries:
        apps = {}
        ntat_reductions = []
        tpt_ratios = []
        for app_id, row in s.per_app.items():
            b = base.per_app.get(app_id, {})
            entry = dict(row)
            if b.get("mean_ntat") and row["mean_ntat"]:
                entry["ntat_ratio"] = row["mean_ntat"] / b["mean_ntat"]
                entry["ntat_reduction"] = 1.0 - entry["ntat_ratio"]
                ntat_reductions.append(entry["ntat_reduction"])
            if b.get("throughput_per_cycle"):
                entry["throughput_ratio"] = (row["throughput_per_cycle"]
                                             / b["throughput_per_cycle"])
                tpt_ratios.append(entry["throughput_ratio"])
            apps[app_id] = entry
        run = {
            "policy": s.policy,
            "mechanism": s.mechanism,
            "per_app": apps,
            "mean_ntat_reduction": _mean(ntat_reductions),
            "mean_throughput_ratio": _mean(tpt_ratios),
            "utilization": s.utilization,
            "overall": s.overall,
        }
        if s.frames is not None:
            run["frames"] = {
                "mean_latency_cycles": s.frames.mean_latency_cycles,
                "reconfig_fraction": s.frames.reconfig_fraction,
                "frames_counted": s.frames.frames_counted,
            }
            if base.frames is not None and base.frames.mean_latency_cycles:
                run["frames"]["latency_ratio"] = (
                    s.frames.mean_latency_cycles
                    / base.frames.mean_latency_cycles)
                run["frames"]["latency_reduction"] = (
                    1.0 - run["frames"]["latency_ratio"])
        runs.append(run)
    return {
        "baseline": base.policy,
        "scenario": base.scenario,
        "seed": base.seed,
        "runs": runs,
    }
