"""Partial-reconfiguration cost model.

Two mechanisms are supported:

* ``sequential_bus``: one shared configuration bus writes every word of
  every occupied slice in series.  Cost scales with the full region
  footprint and the per-word bus overhead.
* ``fast_parallel``: each array slice has a private configuration stream
  fed from its adjacent memory, so all slices load concurrently and the
  cost is one slice's worth of words regardless of region width.

Bitstream images are position-independent: the same image can be bound
to any contiguous run of array slices, and rebinding costs a single
register write rather than a rebuild of the image.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import ConfigError, ValidationError

if TYPE_CHECKING:
    from .allocator import Region
    from .catalog import TaskVariant

MECHANISMS = ("sequential_bus", "fast_parallel")


@dataclass(frozen=True)
class DprParams:
    """Knobs for the reconfiguration cost model.

    ``preload_overlaps_execution`` controls whether image preload into
    on-chip memory is treated as pipelined with earlier activity (the
    host pushes the next image while the fabric is busy).  When clear,
    preload is charged in full on the dispatch path.
    """

    mechanism: str = "fast_parallel"
    bus_cycles_per_word: int = 4
    stream_words_per_cycle: int = 1
    preload_words_per_cycle: int = 8
    preload_overlaps_execution: bool = True

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(
                f"unknown reconfiguration mechanism {self.mechanism!r}; "
                f"expected one of {MECHANISMS}"
            )
        for name in ("bus_cycles_per_word", "stream_words_per_cycle",
                     "preload_words_per_cycle"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")

    def with_mechanism(self, mechanism: str) -> "DprParams":
        """Same transfer parameters, different delivery mechanism."""
        return dataclasses.replace(self, mechanism=mechanism)


@dataclass(frozen=True)
class BitstreamImage:
    """A relocatable configuration image for one task variant.

    ``words_per_slice`` is the stream length seen by a single array
    slice; ``slices`` is how many slices the image spans.  Images carry
    no placement information, so relocation never rewrites them.
    """

    task_id: str
    version: str
    words_per_slice: int
    slices: int

    def __post_init__(self):
        if self.words_per_slice < 1:
            raise ValidationError(
                f"bitstream for {self.task_id}/{self.version} has "
                f"words_per_slice={self.words_per_slice}; must be >= 1"
            )
        if self.slices < 1:
            raise ValidationError(
                f"bitstream for {self.task_id}/{self.version} spans "
                f"{self.slices} slices; must be >= 1"
            )

    @classmethod
    def for_variant(cls, variant: "TaskVariant") -> "BitstreamImage":
        return cls(
            task_id=variant.task_id,
            version=variant.version,
            words_per_slice=variant.bitstream_words,
            slices=variant.usage.array_slices,
        )

    @property
    def total_words(self) -> int:
        return self.words_per_slice * self.slices


@dataclass(frozen=True)
class RelocationPlan:
    """Binding of a position-independent image onto a concrete run.

    ``bindings`` maps stream index -> absolute array-slice index.  The
    only runtime cost is one write to the relocation register.
    """

    task_id: str
    version: str
    bindings: tuple
    register_write_cycles: int = 1


def reconfig_cycles(image: BitstreamImage, params: DprParams) -> int:
    """Cycles to load ``image`` into an already-reserved region."""
    if params.mechanism == "fast_parallel":
        # All occupied slices stream concurrently; the widest stream is
        # one slice's worth of words.
        return math.ceil(image.words_per_slice / params.stream_words_per_cycle)
    return image.words_per_slice * image.slices * params.bus_cycles_per_word


def preload_cycles(image: BitstreamImage, params: DprParams) -> int:
    """Cycles to stage the full image into on-chip memory."""
    return math.ceil(image.total_words / params.preload_words_per_cycle)


def relocate(image: BitstreamImage, target: "Region") -> RelocationPlan:
    """Bind ``image`` to the array run of ``target`` without rebuilding it.

    The run must hold the image; when it is wider (a region policy may
    grant more than the variant occupies), the image binds to the low
    end of the run and the surplus slices stay unconfigured.
    """
    start, length = target.array_run
    if length < image.slices:
        raise ValidationError(
            f"bitstream for {image.task_id}/{image.version} spans "
            f"{image.slices} slices but the target run holds only {length}"
        )
    bindings = tuple((i, start + i) for i in range(image.slices))
    return RelocationPlan(task_id=image.task_id, version=image.version,
                          bindings=bindings)
