"""Deterministic discrete-event simulation core.

Time is integer cycles.  The event heap is ordered by (time, kind
priority, sequence number): completions are processed before
reconfiguration finishes, and both before new arrivals, so resources
freed at an instant are visible to scheduling decisions at that same
instant; the sequence number makes ordering total and runs repeatable.

A placed request moves through three phases on its region:

  start (region reserved) -> reconfig_start -> exec_start -> finish

The distance from reconfig_start to exec_start is exactly the
reconfiguration cost of the chosen mechanism.  Under the shared-bus
mechanism concurrent reconfigurations also serialize on the bus, which
can push reconfig_start past start; image preload, when not treated as
overlapped, does the same.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

from . import dpr as dprmod
from . import workload
from .allocator import RegionPolicy, ResourceState, parse_policy, policy_label
from .catalog import Catalog, exec_cycles
from .dpr import BitstreamImage, DprParams
from .errors import SimulationLogicError, ValidationError
from .platform import PlatformConfig
from .scheduler import get_scheduler

# Priorities for same-cycle events.
_TASK_DONE, _RECONFIG_DONE, _ARRIVAL = 0, 1, 2


@dataclass
class Trace:
    """Everything one run produced, enough to audit or compare it."""

    meta: dict
    requests: list
    events: list
    util_samples: list
    end_time: int

    def completed(self) -> list:
        return [r for r in self.requests if r.done]

    def to_dict(self) -> dict:
        req_rows = []
        for r in self.requests:
            row = {name: getattr(r, name) for name in (
                "request_id", "tenant_id", "app_id", "task_id", "arrival",
                "work", "frame", "start", "reconfig_start", "exec_start",
                "finish", "variant", "region_id")}
            row["depends_on"] = list(r.depends_on)
            req_rows.append(row)
        return {
            "meta": self.meta,
            "end_time": self.end_time,
            "requests": req_rows,
            "events": self.events,
            "util_samples": self.util_samples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=None,
                          separators=(",", ":"))

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")


class Simulation:
    """One run of a request stream on one platform under one policy."""

    def __init__(self, platform: PlatformConfig, catalog: Catalog,
                 stream: list, policy: RegionPolicy, scheduler,
                 dpr_params: DprParams = None, horizon: int = None):
        self.platform = platform
        self.catalog = catalog
        self.stream = stream
        if isinstance(policy, str):
            policy = parse_policy(policy)
        self.policy = policy
        self.scheduler = scheduler
        self.dpr = dpr_params if dpr_params is not None else platform.dpr
        self.horizon = horizon
        self.state = ResourceState.for_platform(platform)
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self.pending: list = []
        self.finished: set = set()
        self.running: dict = {}
        self.bus_free_at = 0
        self.events: list = []
        self.util_samples: list = [(0, 0, 0)]
        self._validate_stream()

    def _validate_stream(self):
        totals = self.state.array_total, self.state.glb_total
        for r in self.stream:
            node = self.catalog.app(r.app_id).node(r.task_id)
            fitting = [v for v in node.variants
                       if v.usage.array_slices <= totals[0]
                       and v.usage.glb_slices <= totals[1]]
            if not fitting:
                raise ValidationError(
                    f"request {r.request_id}: no variant of {r.task_id} fits "
                    f"the platform at all; it could never be scheduled")
            for dep in r.depends_on:
                if self.stream[dep].arrival > r.arrival:
                    raise SimulationLogicError(
                        f"request {r.request_id} arrives before its "
                        f"dependency {dep}")

    def _push(self, time: int, prio: int, payload) -> None:
        if time < self.now:
            raise SimulationLogicError(
                f"event scheduled at {time}, before current time {self.now}")
        heapq.heappush(self._heap, (time, prio, self._seq, payload))
        self._seq += 1

    def _sample_util(self):
        a = bin(self.state.array_mask).count("1")
        g = bin(self.state.glb_mask).count("1")
        last = self.util_samples[-1]
        if last[0] == self.now:
            self.util_samples[-1] = (self.now, a, g)
        else:
            self.util_samples.append((self.now, a, g))

    def _log(self, kind: str, **fields):
        entry = {"t": self.now, "ev": kind}
        entry.update(fields)
        self.events.append(entry)

    def _ready(self) -> list:
        return [r for r in self.pending
                if all(d in self.finished for d in r.depends_on)]

    def _dispatch(self) -> None:
        placements = self.scheduler.schedule(self.state, self._ready(),
                                             self.policy, self.catalog)
        placed_ids = set()
        for p in placements:
            r = p.request
            if r.request_id in placed_ids or r not in self.pending:
                raise SimulationLogicError(
                    f"scheduler placed request {r.request_id} twice or "
                    f"out of the pending queue")
            placed_ids.add(r.request_id)
            r.start = self.now
            r.variant = p.variant.version
            r.region_id = p.region.region_id
            image = BitstreamImage.for_variant(p.variant)
            plan = dprmod.relocate(image, p.region)
            reconfig_start = self.now
            if self.dpr.mechanism == "sequential_bus":
                # All images share one configuration bus; later loads
                # wait for it even though their regions are reserved.
                reconfig_start = max(reconfig_start, self.bus_free_at)
            elif not self.dpr.preload_overlaps_execution:
                reconfig_start += dprmod.preload_cycles(image, self.dpr)
            cost = dprmod.reconfig_cycles(image, self.dpr)
            if self.dpr.mechanism == "sequential_bus":
                self.bus_free_at = reconfig_start + cost
            r.reconfig_start = reconfig_start
            self.running[p.region.region_id] = (r, p.variant)
            self._push(reconfig_start + cost, _RECONFIG_DONE,
                       ("reconfig_done", p.region.region_id))
            self._log("place", rid=r.request_id, variant=r.variant,
                      region=p.region.region_id,
                      array=list(p.region.array_run),
                      glb=list(p.region.glb_run),
                      bound_at=plan.bindings[0][1])
        if placed_ids:
            self.pending = [r for r in self.pending
                            if r.request_id not in placed_ids]
            self._sample_util()

    def run(self) -> Trace:
        for r in self.stream:
            self._push(r.arrival, _ARRIVAL, ("arrival", r.request_id))
        by_id = {r.request_id: r for r in self.stream}
        end = self.now
        while self._heap:
            time, prio, _, payload = self._heap[0]
            if self.horizon is not None and time > self.horizon:
                break
            heapq.heappop(self._heap)
            if time < self.now:
                raise SimulationLogicError("event time went backwards")
            self.now = time
            end = max(end, time)
            kind = payload[0]
            if kind == "arrival":
                req = by_id[payload[1]]
                self.pending.append(req)
                self._log("arrival", rid=req.request_id)
                self._dispatch()
            elif kind == "reconfig_done":
                req, variant = self.running[payload[1]]
                req.exec_start = self.now
                self._log("reconfig_done", rid=req.request_id)
                self._push(self.now + exec_cycles(variant), _TASK_DONE,
                           ("task_done", payload[1]))
            elif kind == "task_done":
                req, _ = self.running.pop(payload[1])
                req.finish = self.now
                self.finished.add(req.request_id)
                self.state.free(payload[1])
                self._log("task_done", rid=req.request_id,
                          region=payload[1])
                self._sample_util()
                self._dispatch()
            else:
                raise SimulationLogicError(f"unknown event kind {kind}")
        end_time = self.horizon if self.horizon is not None else end
        self._check_invariants()
        meta = {
            "platform": self.platform.to_dict(),
            "policy": policy_label(self.policy),
            "mechanism": self.dpr.mechanism,
            "horizon": self.horizon,
            "n_requests": len(self.stream),
        }
        return Trace(meta=meta, requests=self.stream, events=self.events,
                     util_samples=self.util_samples, end_time=end_time)

    def _check_invariants(self):
        for r in self.stream:
            if r.start is None:
                continue
            if not (r.arrival <= r.start <= r.reconfig_start):
                raise SimulationLogicError(
                    f"request {r.request_id} has disordered start times")
            if r.exec_start is not None and r.exec_start < r.reconfig_start:
                raise SimulationLogicError(
                    f"request {r.request_id} executed before its region "
                    f"was configured")
            if r.finish is not None and r.finish < r.exec_start:
                raise SimulationLogicError(
                    f"request {r.request_id} finished before it started")
            for dep in r.depends_on:
                dep_req = self.stream[dep]
                if dep_req.finish is None or dep_req.finish > r.start:
                    raise SimulationLogicError(
                        f"request {r.request_id} started before its "
                        f"dependency {dep} finished")


def run_stream(platform: PlatformConfig, catalog: Catalog, stream: list,
               policy: RegionPolicy, scheduler_name: str = "greedy",
               dpr_params: DprParams = None, horizon: int = None,
               meta: dict = None) -> Trace:
    """Run an already-expanded request stream and return its trace."""
    sim = Simulation(platform, catalog, stream, policy,
                     get_scheduler(scheduler_name), dpr_params, horizon)
    trace = sim.run()
    trace.meta["scheduler"] = scheduler_name
    if meta:
        trace.meta.update(meta)
    return trace


def default_horizon(scenario, platform: PlatformConfig) -> int:
    if isinstance(scenario, workload.CloudScenario):
        return int(scenario.duration_s * platform.clock_hz)
    return scenario.frame_start(scenario.duration_frames, platform.clock_hz)


def run(platform: PlatformConfig, catalog: Catalog, scenario,
        policy: RegionPolicy, scheduler_name: str = "greedy", seed: int = 0,
        horizon: int = None, dpr_params: DprParams = None) -> Trace:
    """Expand ``scenario`` with ``seed`` and simulate it.

    The horizon defaults to the scenario's nominal duration; work still
    in flight at the horizon is left unfinished in the trace.  A
    non-positive horizon means no cutoff: the run drains to completion
    and the trace ends at the last event.
    """
    stream = workload.generate(scenario, catalog, platform.clock_hz, seed)
    if horizon is None:
        horizon = default_horizon(scenario, platform)
    elif horizon <= 0:
        horizon = None
    meta = {
        "scenario": workload.scenario_fingerprint(scenario),
        "scenario_kind": scenario.kind,
        "seed": seed,
        "clock_hz": platform.clock_hz,
        "frame_rate_hz": getattr(scenario, "frame_rate_hz", None),
    }
    return run_stream(platform, catalog, stream, policy, scheduler_name,
                      dpr_params, horizon, meta)
