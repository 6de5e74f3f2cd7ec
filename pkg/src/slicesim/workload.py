"""Workload scenarios and request-stream generation.

A scenario is a compact, declarative description (tenants and rates,
or a frame loop with sporadic events).  Generation expands it into a
flat, replayable stream of task requests with integer arrival cycles.
Dependencies are expanded at submission time, so the stream itself is
static: every policy replays exactly the same requests.

Randomness is drawn from per-source substreams (one per tenant, one
per event type), so changing one source's seed leaves every other
source's arrivals untouched.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .catalog import Catalog
from .errors import ValidationError


@dataclass
class Request:
    """One task instance travelling through the simulator.

    Generation fills the identity and arrival fields; the engine fills
    the timestamps.  ``depends_on`` holds request ids within the same
    stream.  ``work`` is copied from the task so traces are
    self-contained.  Times are cycles.
    """

    request_id: int
    tenant_id: str
    app_id: str
    task_id: str
    arrival: int
    depends_on: tuple = ()
    work: int = 0
    frame: int = None
    # Filled by the engine:
    start: int = None
    reconfig_start: int = None
    exec_start: int = None
    finish: int = None
    variant: str = None
    region_id: int = None

    @property
    def done(self) -> bool:
        return self.finish is not None


@dataclass(frozen=True)
class CloudTenant:
    """One tenant submitting a single application at a Poisson rate."""

    tenant_id: str
    app_id: str
    rate_hz: float
    seed: int = None

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValidationError(
                f"tenant {self.tenant_id} has non-positive rate "
                f"{self.rate_hz}")


@dataclass(frozen=True)
class CloudScenario:
    """Independent tenants sharing the platform."""

    tenants: tuple
    duration_s: float = 1.0

    kind = "cloud"

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValidationError("cloud scenario duration must be positive")
        ids = [t.tenant_id for t in self.tenants]
        if len(set(ids)) != len(ids):
            raise ValidationError("cloud scenario has duplicate tenant ids")
        if not self.tenants:
            raise ValidationError("cloud scenario has no tenants")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "duration_s": self.duration_s,
            "tenants": [
                {"tenant_id": t.tenant_id, "app_id": t.app_id,
                 "rate_hz": t.rate_hz, "seed": t.seed}
                for t in self.tenants
            ],
        }


@dataclass(frozen=True)
class EventType:
    """A sporadic event firing every few frames.

    Each occurrence submits every application in ``apps`` as an
    independent chain; gaps between occurrences are uniform integers in
    [min_gap_frames, max_gap_frames].
    """

    name: str
    apps: tuple
    min_gap_frames: int = 3
    max_gap_frames: int = 7
    seed: int = None

    def __post_init__(self):
        if not self.apps:
            raise ValidationError(f"event type {self.name} lists no apps")
        if self.min_gap_frames < 1 or self.max_gap_frames < self.min_gap_frames:
            raise ValidationError(
                f"event type {self.name} has bad gap range "
                f"[{self.min_gap_frames}, {self.max_gap_frames}]")


@dataclass(frozen=True)
class AutonomousScenario:
    """A frame loop with sporadic event processing.

    ``per_frame_task`` names the application run once per frame; event
    tasks triggered by frame f's output arrive at the next frame
    boundary, once that output exists.
    """

    per_frame_task: str = "camera_pipeline"
    frame_rate_hz: float = 30.0
    duration_frames: int = 300
    events: tuple = ()

    kind = "autonomous"

    def __post_init__(self):
        if self.frame_rate_hz <= 0:
            raise ValidationError("frame rate must be positive")
        if self.duration_frames < 1:
            raise ValidationError("duration must be at least one frame")
        names = [e.name for e in self.events]
        if len(set(names)) != len(names):
            raise ValidationError("autonomous scenario has duplicate event "
                                  "type names")

    def frame_start(self, frame: int, clock_hz: float) -> int:
        return round(frame * clock_hz / self.frame_rate_hz)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "per_frame_task": self.per_frame_task,
            "frame_rate_hz": self.frame_rate_hz,
            "duration_frames": self.duration_frames,
            "events": [
                {"name": e.name, "apps": list(e.apps),
                 "min_gap_frames": e.min_gap_frames,
                 "max_gap_frames": e.max_gap_frames, "seed": e.seed}
                for e in self.events
            ],
        }


def scenario_fingerprint(scenario) -> str:
    """Stable digest of the scenario itself, independent of run seed."""
    canon = json.dumps(scenario.to_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _expand_chain(catalog: Catalog, app_id: str, arrival: int,
                  tenant_id: str, frame, requests: list) -> None:
    """Append one submission of ``app_id`` to ``requests``.

    All tasks of the chain share the submission arrival; ordering
    within the chain is expressed purely through dependencies.
    """
    app = catalog.app(app_id)
    id_by_task: dict = {}
    for node, eff_deps in app.schedulable_tasks():
        rid = len(requests)
        id_by_task[node.task_id] = rid
        requests.append(Request(
            request_id=rid,
            tenant_id=tenant_id,
            app_id=app_id,
            task_id=node.task_id,
            arrival=arrival,
            depends_on=tuple(id_by_task[d] for d in eff_deps),
            work=node.work,
            frame=frame,
        ))


def gen_cloud(scenario: CloudScenario, catalog: Catalog, clock_hz: float,
              seed: int) -> list:
    """Expand a cloud scenario into a request stream.

    Tenant i draws inter-arrival gaps from substream (seed, i), or from
    its own seed when one is set, so reseeding one tenant cannot
    perturb the others.
    """
    for t in scenario.tenants:
        catalog.app(t.app_id)
    duration_cycles = scenario.duration_s * clock_hz
    submissions = []
    for i, tenant in enumerate(scenario.tenants):
        entropy = [tenant.seed] if tenant.seed is not None else [seed, i]
        rng = np.random.default_rng(entropy)
        mean_gap = clock_hz / tenant.rate_hz
        t = 0.0
        k = 0
        while True:
            t += rng.exponential(mean_gap)
            if t >= duration_cycles:
                break
            submissions.append((int(t), i, k, tenant))
            k += 1
    submissions.sort(key=lambda s: (s[0], s[1], s[2]))
    requests: list = []
    for arrival, _, _, tenant in submissions:
        _expand_chain(catalog, tenant.app_id, arrival, tenant.tenant_id,
                      None, requests)
    return requests


def gen_autonomous(scenario: AutonomousScenario, catalog: Catalog,
                   clock_hz: float, seed: int) -> list:
    """Expand an autonomous scenario into a request stream.

    The per-frame application arrives at every frame boundary.  An
    event triggered by frame f arrives at the boundary of frame f+1,
    tagged with that frame, since it consumes frame f's output.
    """
    catalog.app(scenario.per_frame_task)
    for e in scenario.events:
        for app_id in e.apps:
            catalog.app(app_id)
    submissions = []
    for f in range(scenario.duration_frames):
        arrival = scenario.frame_start(f, clock_hz)
        submissions.append((arrival, 0, f, 0, scenario.per_frame_task,
                            scenario.per_frame_task, f))
    for j, event in enumerate(scenario.events):
        entropy = [event.seed] if event.seed is not None else [seed, j]
        rng = np.random.default_rng(entropy)
        f = 0
        occurrence = 0
        while True:
            f += int(rng.integers(event.min_gap_frames,
                                  event.max_gap_frames + 1))
            if f + 1 >= scenario.duration_frames:
                break
            arrival = scenario.frame_start(f + 1, clock_hz)
            for a, app_id in enumerate(event.apps):
                submissions.append((arrival, 1 + j, occurrence, a, app_id,
                                    event.name, f + 1))
            occurrence += 1
    submissions.sort(key=lambda s: s[:4])
    requests: list = []
    for arrival, _, _, _, app_id, tenant_id, frame in submissions:
        _expand_chain(catalog, app_id, arrival, tenant_id, frame, requests)
    return requests


def generate(scenario, catalog: Catalog, clock_hz: float, seed: int) -> list:
    if isinstance(scenario, CloudScenario):
        return gen_cloud(scenario, catalog, clock_hz, seed)
    if isinstance(scenario, AutonomousScenario):
        return gen_autonomous(scenario, catalog, clock_hz, seed)
    raise ValidationError(f"unknown scenario type {type(scenario).__name__}")


STREAM_FIELDS = ("request_id", "tenant_id", "app_id", "task_id", "arrival",
                 "depends_on", "work", "frame")


def write_stream(requests: list, path: str) -> None:
    """Write a stream as one JSON object per line."""
    with open(path, "w") as fh:
        for r in requests:
            row = {name: getattr(r, name) for name in STREAM_FIELDS}
            row["depends_on"] = list(row["depends_on"])
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_stream(path: str, catalog: Catalog) -> list:
    """Read a stream written by write_stream, validating against the
    catalog so replays cannot reference tasks that do not exist."""
    requests = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{path}:{lineno}: not valid JSON: {exc}") from exc
            missing = set(STREAM_FIELDS) - set(row)
            if missing:
                raise ValidationError(
                    f"{path}:{lineno}: missing fields {sorted(missing)}")
            app = catalog.app(row["app_id"])
            node = app.node(row["task_id"])
            if node.barrier:
                raise ValidationError(
                    f"{path}:{lineno}: task {row['task_id']} is a barrier "
                    f"and cannot be requested")
            requests.append(Request(
                request_id=row["request_id"],
                tenant_id=row["tenant_id"],
                app_id=row["app_id"],
                task_id=row["task_id"],
                arrival=row["arrival"],
                depends_on=tuple(row["depends_on"]),
                work=row["work"],
                frame=row["frame"],
            ))
    ids = [r.request_id for r in requests]
    if ids != list(range(len(ids))):
        raise ValidationError(f"{path}: request ids must be dense and "
                              f"ordered from zero")
    for r in requests:
        for dep in r.depends_on:
            if not 0 <= dep < len(requests):
                raise ValidationError(
                    f"{path}: request {r.request_id} depends on unknown "
                    f"request {dep}")
    return requests


def cloud_default() -> CloudScenario:
    """Four tenants mixing both CNNs and both vision kernels.

    Rates put the platform near saturation for a whole-platform region
    discipline while leaving headroom for spatial sharing to pay off.
    """
    return CloudScenario(tenants=(
        CloudTenant("tenant0", "resnet18", 18.0),
        CloudTenant("tenant1", "mobilenet", 30.0),
        CloudTenant("tenant2", "camera_pipeline", 140.0),
        CloudTenant("tenant3", "harris", 70.0),
    ), duration_s=1.0)


def autonomous_default() -> AutonomousScenario:
    """A 30 fps camera loop with sporadic detection events.

    Each event dispatches two independent detector network instances
    (two regions of interest from the same frame), which is what gives
    spatial sharing something to overlap.
    """
    return AutonomousScenario(
        per_frame_task="camera_pipeline",
        frame_rate_hz=30.0,
        duration_frames=600,
        events=(
            EventType("detect", ("mobilenet", "mobilenet"),
                      min_gap_frames=6, max_gap_frames=12),
        ),
    )


_BUILTIN_SCENARIOS = {
    "cloud-default": cloud_default,
    "autonomous-default": autonomous_default,
}


def _scenario_from_dict(raw: dict, source: str):
    kind = raw.get("kind")
    if kind == "cloud":
        tenants = tuple(
            CloudTenant(tenant_id=t["tenant_id"], app_id=t["app_id"],
                        rate_hz=t["rate_hz"], seed=t.get("seed"))
            for t in raw.get("tenants", []))
        return CloudScenario(tenants=tenants,
                             duration_s=raw.get("duration_s", 1.0))
    if kind == "autonomous":
        events = tuple(
            EventType(name=e["name"], apps=tuple(e["apps"]),
                      min_gap_frames=e.get("min_gap_frames", 3),
                      max_gap_frames=e.get("max_gap_frames", 7),
                      seed=e.get("seed"))
            for e in raw.get("events", []))
        return AutonomousScenario(
            per_frame_task=raw.get("per_frame_task", "camera_pipeline"),
            frame_rate_hz=raw.get("frame_rate_hz", 30.0),
            duration_frames=raw.get("duration_frames", 300),
            events=events)
    raise ValidationError(
        f"{source}: scenario kind must be 'cloud' or 'autonomous', "
        f"got {kind!r}")


def load_scenario(source: str):
    """Load a scenario from YAML, or a built-in one by name."""
    if source in _BUILTIN_SCENARIOS:
        return _BUILTIN_SCENARIOS[source]()
    try:
        with open(source) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(
            f"cannot read scenario file {source}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(
            f"scenario file {source} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"scenario file {source} must hold a mapping")
    try:
        return _scenario_from_dict(raw, source)
    except KeyError as exc:
        raise ValidationError(
            f"scenario file {source} is missing field {exc}") from exc


def dump_scenario(scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)
