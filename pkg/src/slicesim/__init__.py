"""Discrete-event simulator for multi-task scheduling on a
slice-partitioned CGRA.

The fabric is modelled as interchangeable vertical slices of the
compute array plus individually allocatable global-buffer banks.
Tasks request slices, a region policy decides which contiguous region
shapes may be carved for them, and partial reconfiguration loads
position-independent images into the carved regions.
"""

from .allocator import Region, RegionPolicy, ResourceState, parse_policy
from .catalog import (Application, Catalog, TaskNode, TaskVariant,
                      builtin_catalog, eligible_variants, exec_cycles,
                      load_catalog)
from .dpr import (BitstreamImage, DprParams, preload_cycles, reconfig_cycles,
                  relocate)
from .engine import Simulation, Trace, run, run_stream
from .errors import (CapacityError, ComparabilityError, ConfigError,
                     SimulationLogicError, SliceSimError, ValidationError)
from .metrics import (LatencyBreakdown, RequestMetrics, Summary, compare,
                      request_metrics, summarize)
from .platform import (FineGrainedUsage, PlatformConfig, SliceUsage,
                       amber_default, derive_slices, load_platform,
                       slice_counts)
from .workload import (AutonomousScenario, CloudScenario, CloudTenant,
                       EventType, Request, autonomous_default, cloud_default,
                       generate, load_scenario, read_stream, write_stream)

__version__ = "0.1.0"

__all__ = [
    "Application", "AutonomousScenario", "BitstreamImage", "CapacityError",
    "Catalog", "CloudScenario", "CloudTenant", "ComparabilityError",
    "ConfigError", "DprParams", "EventType", "FineGrainedUsage",
    "LatencyBreakdown", "PlatformConfig", "Region", "RegionPolicy",
    "Request", "RequestMetrics", "ResourceState", "Simulation",
    "SimulationLogicError", "SliceSimError", "SliceUsage", "Summary",
    "TaskNode", "TaskVariant", "Trace", "ValidationError", "amber_default",
    "autonomous_default", "builtin_catalog", "cloud_default", "compare",
    "derive_slices", "eligible_variants",
    "exec_cycles", "generate", "load_catalog", "load_platform",
    "load_scenario", "parse_policy", "preload_cycles", "read_stream",
    "reconfig_cycles", "relocate", "request_metrics", "run", "run_stream",
    "slice_counts", "summarize", "write_stream",
]
