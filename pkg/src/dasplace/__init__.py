"""Transmit-power-minimizing placement of four edge-mounted arrays in a square region."""

from .linkbudget import (
    Combining,
    CoverageResult,
    InfeasibleCoverageError,
    LinkModel,
    aggregate,
    contributor_map,
    link_coefficient,
    required_tx_power,
    rx_power_map,
)
from .optimizer import OptimizationResult, SearchConfig, brute_force_oracle, line_search
from .radiation import (
    ArraySpec,
    ElementPattern,
    PatternKind,
    array_gain_general,
    embedded_element_gain,
    mrt_gain,
    pattern_table,
)
from .scenario import (
    ApPose,
    Placement,
    RegionSpec,
    centralized_placement,
    geometry,
    make_grid,
    symmetric_placement,
)

__version__ = "0.1.0"
