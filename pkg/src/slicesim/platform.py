"""Platform geometry and the slice-level resource abstraction.

The fabric is described twice: once in fine-grained terms (PE tiles,
memory tiles, global-buffer capacity and bandwidth) and once in slice
terms.  An array slice is a fixed vertical strip of columns containing
both tile kinds; a buffer slice is one global-buffer bank.  Scheduling
and allocation operate purely on slice counts, so converting a
fine-grained requirement into slices is the only place tile arithmetic
happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import yaml

from .dpr import DprParams
from .errors import CapacityError, ConfigError


@dataclass(frozen=True)
class SliceUsage:
    """A resource amount in slice units."""

    array_slices: int
    glb_slices: int

    def __post_init__(self):
        if self.array_slices < 1 or self.glb_slices < 1:
            raise ConfigError(
                f"slice usage must be at least one of each kind, got "
                f"({self.array_slices}, {self.glb_slices}); a runnable task "
                f"needs compute and at least one buffer bank"
            )


@dataclass(frozen=True)
class FineGrainedUsage:
    """A resource requirement in tile/byte terms, before slicing.

    ``glb_bandwidth`` is in bytes per second; capacities are bytes.
    """

    pe_tiles: int = 0
    mem_tiles: int = 0
    glb_capacity: int = 0
    glb_bandwidth: float = 0.0

    def __post_init__(self):
        for name in ("pe_tiles", "mem_tiles", "glb_capacity", "glb_bandwidth"):
            if getattr(self, name) < 0:
                raise ConfigError(f"fine-grained usage field {name} is negative")


@dataclass(frozen=True)
class PlatformConfig:
    """Static description of one fabric.

    Defaults correspond to a 32x16 tile array: 384 PE tiles and 128
    memory tiles in a 3:1 column interleave, sliced four columns at a
    time, with 32 banks of 128 KiB global buffer.  ``bank_bandwidth``
    is bytes per second for a single bank.
    """

    columns: int = 32
    rows: int = 16
    pe_tiles: int = 384
    mem_tiles: int = 128
    cols_per_array_slice: int = 4
    glb_banks: int = 32
    bank_capacity: int = 128 * 1024
    bank_bandwidth: float = 2_000_000_000.0
    clock_hz: float = 500_000_000.0
    dpr: DprParams = field(default_factory=DprParams)

    def __post_init__(self):
        for name in ("columns", "rows", "pe_tiles", "mem_tiles",
                     "cols_per_array_slice", "glb_banks", "bank_capacity"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"platform field {name} must be a positive "
                                  f"integer, got {value!r}")
        for name in ("bank_bandwidth", "clock_hz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"platform field {name} must be positive")
        if self.columns % self.cols_per_array_slice != 0:
            raise ConfigError(
                f"columns ({self.columns}) not divisible by "
                f"cols_per_array_slice ({self.cols_per_array_slice}); slices "
                f"must tile the array exactly"
            )
        if self.pe_tiles + self.mem_tiles != self.columns * self.rows:
            raise ConfigError(
                f"pe_tiles + mem_tiles = {self.pe_tiles + self.mem_tiles} "
                f"does not equal columns x rows = {self.columns * self.rows}"
            )
        n = self.array_slice_count
        if self.pe_tiles % n != 0 or self.mem_tiles % n != 0:
            raise ConfigError(
                f"tile counts ({self.pe_tiles} PE, {self.mem_tiles} MEM) do "
                f"not divide evenly across {n} array slices; the slice "
                f"abstraction must conserve resources"
            )

    @property
    def array_slice_count(self) -> int:
        return self.columns // self.cols_per_array_slice

    @property
    def glb_slice_count(self) -> int:
        return self.glb_banks

    @property
    def pe_per_slice(self) -> int:
        return self.pe_tiles // self.array_slice_count

    @property
    def mem_per_slice(self) -> int:
        return self.mem_tiles // self.array_slice_count

    @property
    def total_slices(self) -> SliceUsage:
        return SliceUsage(self.array_slice_count, self.glb_slice_count)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)
             if f.name != "dpr"}
        d["dpr"] = {f.name: getattr(self.dpr, f.name) for f in fields(self.dpr)}
        return d


def slice_counts(config: PlatformConfig) -> tuple:
    """Total (array slices, buffer slices) offered by the platform."""
    return (config.array_slice_count, config.glb_slice_count)


def derive_slices(usage: FineGrainedUsage, config: PlatformConfig,
                  bitstream_banks: int = 0) -> SliceUsage:
    """Round a fine-grained requirement up to whole slices.

    Array slices are driven by whichever tile kind is scarcer for this
    request; buffer slices by whichever of capacity and bandwidth needs
    more banks.  Both dimensions floor at one slice: a mapped task
    always occupies some compute and at least one bank.

    ``bitstream_banks`` adds a flat surcharge of buffer slices for
    configuration-image storage kept resident next to the task.  It
    defaults to zero, which treats image staging as accounted for
    elsewhere.

    Raises a capacity error when the result exceeds what the platform
    has in total; a transient shortage during scheduling is not an
    error and is signalled by the allocator instead.
    """
    if bitstream_banks < 0:
        raise ConfigError("bitstream_banks must be >= 0")
    array = max(1, math.ceil(max(usage.pe_tiles / config.pe_per_slice,
                                 usage.mem_tiles / config.mem_per_slice)))
    glb = max(math.ceil(usage.glb_capacity / config.bank_capacity),
              math.ceil(usage.glb_bandwidth / config.bank_bandwidth),
              1)
    glb += bitstream_banks
    if array > config.array_slice_count or glb > config.glb_slice_count:
        raise CapacityError(
            f"requirement rounds to ({array}, {glb}) slices but the platform "
            f"offers only ({config.array_slice_count}, "
            f"{config.glb_slice_count})"
        )
    return SliceUsage(array, glb)


def amber_default() -> PlatformConfig:
    """The default fabric profile used throughout the tests and docs."""
    return PlatformConfig()


def _dpr_from_dict(data: dict) -> DprParams:
    known = {f.name for f in fields(DprParams)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown dpr fields: {sorted(unknown)}")
    return DprParams(**data)


def load_platform(source: str) -> PlatformConfig:
    """Load a platform description.

    ``source`` is either the literal profile name ``amber-default`` or a
    path to a YAML file whose top-level keys mirror the PlatformConfig
    fields (an optional ``dpr`` sub-mapping mirrors DprParams).
    """
    if source == "amber-default":
        return amber_default()
    try:
        with open(source) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read platform file {source}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"platform file {source} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"platform file {source} must hold a mapping")
    known = {f.name for f in fields(PlatformConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(
            f"platform file {source} has unknown fields: {sorted(unknown)}")
    kwargs = dict(raw)
    if "dpr" in kwargs:
        if not isinstance(kwargs["dpr"], dict):
            raise ConfigError(f"platform file {source}: dpr must be a mapping")
        kwargs["dpr"] = _dpr_from_dict(kwargs["dpr"])
    return PlatformConfig(**kwargs)
