"""Task catalog: applications, task graphs, and mapping variants.

Each task offers one or more pre-compiled variants trading resources
for throughput.  ``work`` is the task's total operation count (MACs
for neural-network layers, pixels for image kernels) and is a property
of the task, so every variant of a task carries the same value;
``throughput`` is operations retired per cycle for that mapping, and
execution time is their quotient rounded up.

Barrier tasks carry no variants and no cost; they only express
ordering (e.g. an initial layer whose output gates the rest of the
network but which is not part of the scheduled workload).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .errors import ValidationError
from .platform import SliceUsage

# Configuration stream length per array slice, in words.  One slice is
# 4 columns x 16 rows of tiles at 64 words of bitstream per tile.
DEFAULT_BITSTREAM_WORDS = 4096


@dataclass(frozen=True)
class TaskVariant:
    """One pre-compiled mapping of a task."""

    task_id: str
    version: str
    throughput: float
    usage: SliceUsage
    work: int
    bitstream_words: int = DEFAULT_BITSTREAM_WORDS

    def __post_init__(self):
        if self.throughput <= 0:
            raise ValidationError(
                f"variant {self.task_id}/{self.version} has non-positive "
                f"throughput {self.throughput}")
        if self.work < 1:
            raise ValidationError(
                f"variant {self.task_id}/{self.version} has non-positive "
                f"work {self.work}")
        if self.bitstream_words < 1:
            raise ValidationError(
                f"variant {self.task_id}/{self.version} has non-positive "
                f"bitstream_words {self.bitstream_words}")

    @property
    def exec_cycles(self) -> int:
        return exec_cycles(self)


def exec_cycles(variant: TaskVariant) -> int:
    """Cycles to run the variant to completion, rounded up."""
    work, tpt = variant.work, variant.throughput
    if isinstance(tpt, int) or (isinstance(tpt, float) and tpt.is_integer()):
        return -(-work // int(tpt))
    return math.ceil(work / tpt)


@dataclass(frozen=True)
class TaskNode:
    """A task within an application graph."""

    task_id: str
    depends_on: tuple = ()
    variants: tuple = ()
    barrier: bool = False

    def __post_init__(self):
        if self.barrier and self.variants:
            raise ValidationError(
                f"barrier task {self.task_id} must not carry variants")
        if not self.barrier and not self.variants:
            raise ValidationError(
                f"task {self.task_id} has no variants and is not a barrier")
        versions = [v.version for v in self.variants]
        if len(set(versions)) != len(versions):
            raise ValidationError(
                f"task {self.task_id} has duplicate variant versions")
        works = {v.work for v in self.variants}
        if len(works) > 1:
            raise ValidationError(
                f"task {self.task_id} variants disagree on work: "
                f"{sorted(works)}; work is a property of the task")
        for v in self.variants:
            if v.task_id != self.task_id:
                raise ValidationError(
                    f"variant {v.task_id}/{v.version} listed under task "
                    f"{self.task_id}")

    @property
    def work(self) -> int:
        if self.barrier:
            return 0
        return self.variants[0].work


@dataclass(frozen=True)
class Application:
    """A DAG of tasks submitted as one unit."""

    app_id: str
    tasks: tuple

    def __post_init__(self):
        ids = [t.task_id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValidationError(
                f"application {self.app_id} has duplicate task ids")
        known = set(ids)
        for t in self.tasks:
            for dep in t.depends_on:
                if dep not in known:
                    raise ValidationError(
                        f"task {t.task_id} in {self.app_id} depends on "
                        f"unknown task {dep}")
        cycle = self._find_cycle()
        if cycle:
            raise ValidationError(
                f"application {self.app_id} has a dependency cycle: "
                + " -> ".join(cycle))

    def _find_cycle(self):
        by_id = {t.task_id: t for t in self.tasks}
        WHITE, GREY, BLACK = 0, 1, 2
        color = {tid: WHITE for tid in by_id}
        path: list = []

        def visit(tid):
            color[tid] = GREY
            path.append(tid)
            for dep in by_id[tid].depends_on:
                if color[dep] == GREY:
                    return path[path.index(dep):] + [dep]
                if color[dep] == WHITE:
                    found = visit(dep)
                    if found:
                        return found
            path.pop()
            color[tid] = BLACK
            return None

        for tid in by_id:
            if color[tid] == WHITE:
                found = visit(tid)
                if found:
                    return found
        return None

    def node(self, task_id: str) -> TaskNode:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise ValidationError(
            f"application {self.app_id} has no task {task_id}")

    def schedulable_tasks(self) -> list:
        """Non-barrier tasks in topological order, with dependencies
        rewritten to skip over barriers.

        Returns a list of (TaskNode, effective dependency task ids).
        """
        by_id = {t.task_id: t for t in self.tasks}
        order: list = []
        seen: set = set()

        def visit(tid):
            if tid in seen:
                return
            seen.add(tid)
            for dep in by_id[tid].depends_on:
                visit(dep)
            order.append(tid)

        for t in self.tasks:
            visit(t.task_id)

        effective: dict = {}
        for tid in order:
            deps: list = []
            for dep in by_id[tid].depends_on:
                if by_id[dep].barrier:
                    for inherited in effective[dep]:
                        if inherited not in deps:
                            deps.append(inherited)
                elif dep not in deps:
                    deps.append(dep)
            effective[tid] = tuple(deps)
        return [(by_id[tid], effective[tid]) for tid in order
                if not by_id[tid].barrier]


@dataclass(frozen=True)
class Catalog:
    """A set of applications keyed by id."""

    applications: tuple

    def __post_init__(self):
        ids = [a.app_id for a in self.applications]
        if len(set(ids)) != len(ids):
            raise ValidationError("catalog has duplicate application ids")

    def app(self, app_id: str) -> Application:
        for a in self.applications:
            if a.app_id == app_id:
                return a
        raise ValidationError(f"catalog has no application {app_id}")

    @property
    def app_ids(self) -> tuple:
        return tuple(a.app_id for a in self.applications)


def eligible_variants(task: TaskNode, free) -> list:
    """Variants of ``task`` that fit in ``free`` slices, best first.

    ``free`` is (array, glb) as a tuple or SliceUsage; zero is allowed
    since a busy machine may have nothing free.  Order: higher
    throughput first, then smaller array footprint, smaller buffer
    footprint, then version label as the final tiebreak.
    """
    if isinstance(free, SliceUsage):
        free_a, free_g = free.array_slices, free.glb_slices
    else:
        free_a, free_g = free
    fits = [v for v in task.variants
            if v.usage.array_slices <= free_a and v.usage.glb_slices <= free_g]
    fits.sort(key=lambda v: (-v.throughput, v.usage.array_slices,
                             v.usage.glb_slices, v.version))
    return fits


def _variant_to_row(v: TaskVariant) -> dict:
    return {
        "version": v.version,
        "throughput": v.throughput,
        "array_slices": v.usage.array_slices,
        "glb_slices": v.usage.glb_slices,
        "work": v.work,
        "bitstream_words": v.bitstream_words,
    }


def dump_catalog(catalog: Catalog) -> str:
    """Serialize a catalog to YAML; loading the result round-trips."""
    apps = []
    for app in catalog.applications:
        tasks = []
        for t in app.tasks:
            row: dict = {"task_id": t.task_id}
            if t.depends_on:
                row["depends_on"] = list(t.depends_on)
            if t.barrier:
                row["barrier"] = True
            else:
                row["variants"] = [_variant_to_row(v) for v in t.variants]
            tasks.append(row)
        apps.append({"app_id": app.app_id, "tasks": tasks})
    return yaml.safe_dump({"applications": apps}, sort_keys=False)


def _parse_variant(task_id: str, row: dict) -> TaskVariant:
    required = {"version", "throughput", "array_slices", "glb_slices", "work"}
    missing = required - set(row)
    if missing:
        raise ValidationError(
            f"variant row of task {task_id} is missing {sorted(missing)}")
    return TaskVariant(
        task_id=task_id,
        version=str(row["version"]),
        throughput=row["throughput"],
        usage=SliceUsage(row["array_slices"], row["glb_slices"]),
        work=row["work"],
        bitstream_words=row.get("bitstream_words", DEFAULT_BITSTREAM_WORDS),
    )


def parse_catalog(raw: dict, source: str = "<catalog>") -> Catalog:
    if not isinstance(raw, dict) or "applications" not in raw:
        raise ValidationError(
            f"{source}: expected a mapping with an 'applications' list")
    apps = []
    for app_row in raw["applications"]:
        app_id = app_row.get("app_id")
        if not app_id:
            raise ValidationError(f"{source}: application without app_id")
        tasks = []
        for task_row in app_row.get("tasks", []):
            task_id = task_row.get("task_id")
            if not task_id:
                raise ValidationError(
                    f"{source}: task without task_id in {app_id}")
            variants = tuple(_parse_variant(task_id, v)
                             for v in task_row.get("variants", []))
            tasks.append(TaskNode(
                task_id=task_id,
                depends_on=tuple(task_row.get("depends_on", [])),
                variants=variants,
                barrier=bool(task_row.get("barrier", False)),
            ))
        apps.append(Application(app_id=app_id, tasks=tuple(tasks)))
    return Catalog(applications=tuple(apps))


def load_catalog(source: str) -> Catalog:
    """Load a catalog from a YAML file, or the built-in one for the
    literal name ``builtin``."""
    if source == "builtin":
        return builtin_catalog()
    try:
        with open(source) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read catalog file {source}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(
            f"catalog file {source} is not valid YAML: {exc}") from exc
    return parse_catalog(raw, source=source)


# Total operation counts for the built-in tasks.  Values are derived
# from the published layer shapes by scripts/derive_work.py in the
# repository; rerun it to audit them.  Units: MACs for network layers,
# pixels for the image kernels (1920x1080 frames).
RESNET_WORK = {
    "conv2_x": 462_422_016,
    "conv3_x": 411_041_792,
    "conv4_x": 411_041_792,
    "conv5_x": 411_041_792,
}
RESNET_BARRIER_WORK = {"conv1_x": 118_013_952, "fc": 512_000}
MOBILENET_WORK = {
    "conv_dw_pw_2_x": 82_489_344,
    "conv_dw_pw_3_x": 79_779_840,
    "conv_dw_pw_4_x": 287_558_656,
}
FRAME_PIXELS = 1920 * 1080


def _variants(task_id, work, rows, words):
    return tuple(
        TaskVariant(task_id=task_id, version=ver, throughput=tpt,
                    usage=SliceUsage(a, g), work=work, bitstream_words=words)
        for ver, tpt, a, g in rows)


def builtin_catalog(bitstream_words: int = DEFAULT_BITSTREAM_WORDS,
                    cost_barriers: bool = False) -> Catalog:
    """The built-in four-application catalog.

    Two CNNs (one residual chain of four stages bracketed by an input
    layer and a classifier, one depthwise-separable chain of three
    stages), a camera processing pipeline, and a corner detector.
    Variant menus give each task two or three resource/throughput
    operating points.

    ``cost_barriers`` swaps the zero-cost barrier tasks for costed
    single-variant tasks; the default keeps them as pure ordering
    constraints because they are not part of the scheduled workload.
    """
    w = bitstream_words

    def barrier(task_id, deps=()):
        if not cost_barriers:
            return TaskNode(task_id=task_id, depends_on=deps, barrier=True)
        work = RESNET_BARRIER_WORK[task_id]
        return TaskNode(
            task_id=task_id, depends_on=deps,
            variants=_variants(task_id, work, [("a", 64, 2, 4)], w))

    resnet = Application(app_id="resnet18", tasks=(
        barrier("conv1_x"),
        TaskNode("conv2_x", ("conv1_x",), _variants(
            "conv2_x", RESNET_WORK["conv2_x"],
            [("a", 64, 2, 7), ("b", 256, 6, 7)], w)),
        TaskNode("conv3_x", ("conv2_x",), _variants(
            "conv3_x", RESNET_WORK["conv3_x"],
            [("a", 64, 2, 4), ("b", 256, 6, 4)], w)),
        TaskNode("conv4_x", ("conv3_x",), _variants(
            "conv4_x", RESNET_WORK["conv4_x"],
            [("a", 64, 2, 6), ("b", 256, 6, 6)], w)),
        TaskNode("conv5_x", ("conv4_x",), _variants(
            "conv5_x", RESNET_WORK["conv5_x"],
            [("a", 64, 2, 20), ("b", 128, 6, 20)], w)),
        barrier("fc", ("conv5_x",)),
    ))

    mobilenet = Application(app_id="mobilenet", tasks=(
        TaskNode("conv_dw_pw_2_x", (), _variants(
            "conv_dw_pw_2_x", MOBILENET_WORK["conv_dw_pw_2_x"],
            [("a", 52, 2, 4), ("b", 208, 5, 4)], w)),
        TaskNode("conv_dw_pw_3_x", ("conv_dw_pw_2_x",), _variants(
            "conv_dw_pw_3_x", MOBILENET_WORK["conv_dw_pw_3_x"],
            [("a", 52, 2, 4), ("b", 104, 3, 4)], w)),
        TaskNode("conv_dw_pw_4_x", ("conv_dw_pw_3_x",), _variants(
            "conv_dw_pw_4_x", MOBILENET_WORK["conv_dw_pw_4_x"],
            [("a", 52, 2, 4), ("b", 104, 3, 4)], w)),
    ))

    camera = Application(app_id="camera_pipeline", tasks=(
        TaskNode("camera_pipeline", (), _variants(
            "camera_pipeline", FRAME_PIXELS,
            [("a", 3, 4, 4), ("b", 12, 6, 14)], w)),
    ))

    harris = Application(app_id="harris", tasks=(
        TaskNode("harris", (), _variants(
            "harris", FRAME_PIXELS,
            [("a", 1, 2, 4), ("b", 2, 4, 7), ("c", 4, 7, 14)], w)),
    ))

    return Catalog(applications=(resnet, mobilenet, camera, harris))
