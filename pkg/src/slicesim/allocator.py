"""Region construction over slice occupancy vectors.

A region is a pair of contiguous runs, one over array slices and one
over buffer slices.  Four construction policies are supported:

* ``baseline``: the whole platform is one region; a single task runs
  at a time.
* ``fixed``: the platform is pre-cut into equal units pairing the k-th
  array block with the k-th buffer block; a request takes exactly one
  unit or does not fit.
* ``variable``: a request takes a run of whole units, as many as its
  larger dimension demands; both runs grow in lockstep.
* ``flexible``: the array run and the buffer run are sized and placed
  independently at exact request size, so neither dimension strands
  capacity for the other.

All placement is deterministic first-fit at the lowest free index.
Occupancy is kept as integer bitmasks (bit i set = slice i busy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CapacityError, ConfigError, SimulationLogicError
from .platform import PlatformConfig, SliceUsage

POLICY_KINDS = ("baseline", "fixed", "variable", "flexible")


@dataclass(frozen=True)
class RegionPolicy:
    """Which region shapes the allocator may carve.

    ``unit`` only matters for ``fixed`` and ``variable``; it must tile
    the platform evenly, which is checked against the live state at
    allocation time because the policy object is platform-agnostic.
    """

    kind: str
    unit: SliceUsage = SliceUsage(1, 4)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(
                f"unknown region policy {self.kind!r}; expected one of "
                f"{POLICY_KINDS}")


@dataclass(frozen=True)
class Region:
    """An allocated pair of runs.  ``*_run`` is (start, length)."""

    region_id: int
    array_run: tuple
    glb_run: tuple

    @property
    def usage(self) -> SliceUsage:
        return SliceUsage(self.array_run[1], self.glb_run[1])


def _lowest_free_run(mask: int, total: int, length: int):
    """Lowest start index of a free run of ``length`` bits, or None."""
    if length > total:
        return None
    window = (1 << length) - 1
    for start in range(total - length + 1):
        if mask & (window << start) == 0:
            return start
    return None


class ResourceState:
    """Mutable occupancy of one platform plus the live region table."""

    def __init__(self, array_total: int, glb_total: int):
        if array_total < 1 or glb_total < 1:
            raise ConfigError("platform must offer at least one slice of "
                              "each kind")
        self.array_total = array_total
        self.glb_total = glb_total
        self.array_mask = 0
        self.glb_mask = 0
        self.live_regions: dict = {}
        self._next_region_id = 0

    @classmethod
    def for_platform(cls, config: PlatformConfig) -> "ResourceState":
        return cls(config.array_slice_count, config.glb_slice_count)

    def array_occupancy(self) -> tuple:
        return tuple(bool(self.array_mask >> i & 1)
                     for i in range(self.array_total))

    def glb_occupancy(self) -> tuple:
        return tuple(bool(self.glb_mask >> i & 1)
                     for i in range(self.glb_total))

    def free_slices(self) -> tuple:
        """(free array slices, free buffer slices), ignoring fragmentation."""
        return (self.array_total - bin(self.array_mask).count("1"),
                self.glb_total - bin(self.glb_mask).count("1"))

    def _unit_count(self, policy: RegionPolicy) -> int:
        ua, ug = policy.unit.array_slices, policy.unit.glb_slices
        if self.array_total % ua != 0 or self.glb_total % ug != 0:
            raise ConfigError(
                f"unit ({ua}, {ug}) does not tile the platform "
                f"({self.array_total}, {self.glb_total}) evenly")
        # Units pair the k-th array block with the k-th buffer block, so
        # only as many units exist as the scarcer dimension provides.
        return min(self.array_total // ua, self.glb_total // ug)

    def _unit_free(self, policy: RegionPolicy, k: int) -> bool:
        ua, ug = policy.unit.array_slices, policy.unit.glb_slices
        a_window = ((1 << ua) - 1) << (k * ua)
        g_window = ((1 << ug) - 1) << (k * ug)
        return self.array_mask & a_window == 0 and self.glb_mask & g_window == 0

    def _admit(self, array_run: tuple, glb_run: tuple) -> Region:
        a_start, a_len = array_run
        g_start, g_len = glb_run
        a_window = ((1 << a_len) - 1) << a_start
        g_window = ((1 << g_len) - 1) << g_start
        if self.array_mask & a_window or self.glb_mask & g_window:
            raise SimulationLogicError("placement overlaps a live region")
        self.array_mask |= a_window
        self.glb_mask |= g_window
        region = Region(self._next_region_id, array_run, glb_run)
        self._next_region_id += 1
        self.live_regions[region.region_id] = region
        return region

    def allocate(self, policy: RegionPolicy, request: SliceUsage):
        """Carve a region for ``request`` under ``policy``.

        Returns the region, or None when nothing fits right now.  A
        request larger than the whole platform is a capacity error: it
        could never fit and retrying is pointless.
        """
        if (request.array_slices > self.array_total
                or request.glb_slices > self.glb_total):
            raise CapacityError(
                f"request ({request.array_slices}, {request.glb_slices}) "
                f"exceeds the platform ({self.array_total}, {self.glb_total})")

        if policy.kind == "baseline":
            if self.live_regions:
                return None
            return self._admit((0, self.array_total), (0, self.glb_total))

        if policy.kind == "fixed":
            ua, ug = policy.unit.array_slices, policy.unit.glb_slices
            n = self._unit_count(policy)
            if request.array_slices > ua or request.glb_slices > ug:
                # The request can never fit in one unit under this
                # policy, however empty the machine is.
                return None
            for k in range(n):
                if self._unit_free(policy, k):
                    return self._admit((k * ua, ua), (k * ug, ug))
            return None

        if policy.kind == "variable":
            ua, ug = policy.unit.array_slices, policy.unit.glb_slices
            n = self._unit_count(policy)
            k_units = max(math.ceil(request.array_slices / ua),
                          math.ceil(request.glb_slices / ug))
            if k_units > n:
                return None
            for k in range(n - k_units + 1):
                if all(self._unit_free(policy, k + j) for j in range(k_units)):
                    return self._admit((k * ua, k_units * ua),
                                       (k * ug, k_units * ug))
            return None

        # flexible: exact-size runs placed independently per dimension.
        a_start = _lowest_free_run(self.array_mask, self.array_total,
                                   request.array_slices)
        g_start = _lowest_free_run(self.glb_mask, self.glb_total,
                                   request.glb_slices)
        if a_start is None or g_start is None:
            return None
        return self._admit((a_start, request.array_slices),
                           (g_start, request.glb_slices))

    def free(self, region_id: int) -> None:
        region = self.live_regions.pop(region_id, None)
        if region is None:
            raise SimulationLogicError(f"free of unknown region {region_id}")
        a_start, a_len = region.array_run
        g_start, g_len = region.glb_run
        self.array_mask &= ~(((1 << a_len) - 1) << a_start)
        self.glb_mask &= ~(((1 << g_len) - 1) << g_start)

    def utilization(self) -> tuple:
        """(array fraction, buffer fraction) of slices currently busy."""
        return (bin(self.array_mask).count("1") / self.array_total,
                bin(self.glb_mask).count("1") / self.glb_total)


def allocate(state: ResourceState, policy: RegionPolicy,
             request: SliceUsage):
    return state.allocate(policy, request)


def free(state: ResourceState, region_id: int) -> None:
    state.free(region_id)


def utilization(state: ResourceState) -> tuple:
    return state.utilization()


def parse_policy(text: str) -> RegionPolicy:
    """Parse a policy string like ``flexible`` or ``fixed:2x8``.

    The optional suffix sets the unit as ARRAYxGLB slices.
    """
    kind, _, unit_text = text.partition(":")
    kind = kind.strip()
    if not unit_text:
        return RegionPolicy(kind=kind)
    try:
        a_text, x, g_text = unit_text.partition("x")
        if not x:
            raise ValueError("missing 'x'")
        unit = SliceUsage(int(a_text), int(g_text))
    except (ValueError, ConfigError) as exc:
        raise ConfigError(
            f"bad policy unit {unit_text!r} in {text!r} (want e.g. "
            f"fixed:1x4): {exc}") from exc
    return RegionPolicy(kind=kind, unit=unit)


def policy_label(policy: RegionPolicy) -> str:
    if policy.kind in ("fixed", "variable"):
        return (f"{policy.kind}:{policy.unit.array_slices}x"
                f"{policy.unit.glb_slices}")
    return policy.kind
