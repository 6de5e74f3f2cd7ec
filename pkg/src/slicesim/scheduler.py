"""Scheduling strategies: which ready request runs next, and how big.

Schedulers see the ready queue in arrival order and own variant
selection; placement is delegated to the allocator, so a strategy
simply walks its preferred (request, variant) pairs and keeps whatever
the allocator accepts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .allocator import Region, RegionPolicy, ResourceState
from .catalog import Catalog, TaskVariant, eligible_variants
from .errors import ConfigError
from .workload import Request


@dataclass(frozen=True)
class Placement:
    """One scheduling decision with its region already reserved."""

    request: Request
    variant: TaskVariant
    region: Region


class GreedyPacker:
    """Highest-throughput variant per request, packing until full.

    Requests are visited in arrival order.  For each, the variant menu
    is walked best-first and the first one the allocator can place
    wins; a request that fits nowhere right now is skipped rather than
    blocking those behind it.  With ``pack`` clear the scheduler stops
    after its first hit, leaving the rest of the machine idle until the
    next event.

    ``patience`` guards against starvation-by-downgrade: when set, a
    variant is only considered if its throughput is at least that
    fraction of the task's best variant, so a briefly crowded machine
    makes the request wait for a decent region instead of grabbing a
    many-times-slower mapping that then occupies slices for ages.
    """

    def __init__(self, pack: bool = True, patience: float = None):
        if patience is not None and not 0.0 < patience <= 1.0:
            raise ConfigError(f"patience must be in (0, 1], got {patience}")
        self.pack = pack
        self.patience = patience

    def _menu(self, node, free):
        variants = eligible_variants(node, free)
        if self.patience is None or not variants:
            return variants
        best = max(v.throughput for v in node.variants)
        return [v for v in variants
                if v.throughput >= self.patience * best]

    def schedule(self, state: ResourceState, ready: list,
                 policy: RegionPolicy, catalog: Catalog) -> list:
        placements = []
        for request in ready:
            node = catalog.app(request.app_id).node(request.task_id)
            for variant in self._menu(node, state.free_slices()):
                region = state.allocate(policy, variant.usage)
                if region is not None:
                    placements.append(Placement(request, variant, region))
                    break
            if placements and not self.pack:
                break
        return placements


class SerialFifo:
    """One task at a time, oldest first, fastest variant that fits."""

    def schedule(self, state: ResourceState, ready: list,
                 policy: RegionPolicy, catalog: Catalog) -> list:
        if state.live_regions:
            return []
        for request in ready:
            node = catalog.app(request.app_id).node(request.task_id)
            for variant in eligible_variants(node, state.free_slices()):
                region = state.allocate(policy, variant.usage)
                if region is not None:
                    return [Placement(request, variant, region)]
        return []


_SCHEDULERS = {
    "greedy": lambda: GreedyPacker(pack=True),
    "greedy-single": lambda: GreedyPacker(pack=False),
    "greedy-patient": lambda: GreedyPacker(pack=True, patience=0.5),
    "serial": SerialFifo,
}

SCHEDULER_NAMES = tuple(sorted(_SCHEDULERS))


def get_scheduler(name: str):
    try:
        factory = _SCHEDULERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scheduler {name!r}; expected one of "
            f"{sorted(_SCHEDULERS)}") from None
    return factory()
