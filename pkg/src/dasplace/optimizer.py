"""Line search over the symmetric placement family, plus an exhaustive oracle."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linkbudget import (
    InfeasibleCoverageError,
    LinkModel,
    SymmetricFamily,
    mw_to_dbm,
    required_tx_power,
)
from .radiation import ArraySpec
from .scenario import RegionSpec, symmetric_placement


@dataclass(frozen=True)
class SearchConfig:
    resolution_m: float = 1.0
    # None means the edge length, i.e. every AP sweeps its whole edge
    total_shift_criterion_m: Optional[float] = None

    def __post_init__(self):
        if not self.resolution_m > 0:
            raise ValueError("resolution_m must be positive")
        crit = self.total_shift_criterion_m
        if crit is not None and not crit >= self.resolution_m:
            raise ValueError("total_shift_criterion_m must be >= resolution_m")

    def criterion(self, region: RegionSpec) -> float:
        if self.total_shift_criterion_m is None:
            return region.edge_length_m
        return self.total_shift_criterion_m


@dataclass(frozen=True)
class OptimizationResult:
    best_offset_m: float
    best_ratio: float
    best_tx_power_mw: float
    trace: list = field(default_factory=list)

    @property
    def best_tx_power_dbm(self) -> float:
        return float(mw_to_dbm(self.best_tx_power_mw))


class _Evaluator:
    """P_T for a corner offset, via the sliced-map fast path when it applies."""

    def __init__(self, region, spec, model):
        self.region, self.spec, self.model = region, spec, model
        self.family = SymmetricFamily(region, spec, model)

    def __call__(self, offset_m: float) -> float:
        try:
            if self.family.supports(offset_m):
                res = self.family.required_tx_power(offset_m)
            else:
                placement = symmetric_placement(self.region, offset_m)
                res = required_tx_power(placement, self.spec, self.region, self.model)
        except InfeasibleCoverageError:
            return math.inf
        return res.required_tx_power_mw


def _map(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def shift_schedule(region: RegionSpec, search: SearchConfig) -> list[float]:
    """Offsets visited while the APs shift clockwise from the corners.

    Shifting stops once the accumulated shift meets the criterion; offsets
    are clamped to the edge length.
    """
    L = region.edge_length_m
    crit = search.criterion(region)
    offsets = []
    k = 0
    while True:
        shift = k * search.resolution_m
        offsets.append(min(shift, L))
        if shift >= crit or shift >= L:
            break
        k += 1
    return offsets


def line_search(region: RegionSpec, spec: ArraySpec, model: LinkModel,
                search: SearchConfig = SearchConfig(), workers: int = 1) -> OptimizationResult:
    """Walk the four APs clockwise from the corners and keep the cheapest placement.

    Infeasible candidates are skipped. Ties go to the smaller offset.
    """
    evaluate = _Evaluator(region, spec, model)
    offsets = shift_schedule(region, search)
    powers = _map(evaluate, offsets, workers)

    best_offset, best_power = None, math.inf
    trace = []
    for offset, power in zip(offsets, powers):
        trace.append((offset, power))
        if power < best_power:
            best_offset, best_power = offset, power
    if best_offset is None:
        raise InfeasibleCoverageError("no candidate placement meets the coverage target")
    return OptimizationResult(best_offset, best_offset / region.edge_length_m, best_power, trace)


def brute_force_oracle(region: RegionSpec, spec: ArraySpec, model: LinkModel,
                       resolution_m: float = 1.0) -> OptimizationResult:
    """Evaluate every lattice offset in ``[0, L]`` and return the argmin."""
    L = region.edge_length_m
    count = int(math.floor(L / resolution_m + 1e-9)) + 1
    lattice = resolution_m * np.arange(count)
    if lattice[-1] < L:
        lattice = np.append(lattice, L)
    evaluate = _Evaluator(region, spec, model)
    powers = np.array([evaluate(float(d)) for d in lattice])
    if not np.isfinite(powers).any():
        raise InfeasibleCoverageError("no candidate placement meets the coverage target")
    i = int(np.argmin(powers))
    trace = [(float(d), float(p)) for d, p in zip(lattice, powers)]
    return OptimizationResult(float(lattice[i]), float(lattice[i]) / L, float(powers[i]), trace)


def write_trace_csv(path, result: OptimizationResult, edge_length_m: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["offset_m", "ratio", "tx_power_dBm"])
        for offset, power in result.trace:
            dbm = float(mw_to_dbm(power)) if math.isfinite(power) else math.inf
            w.writerow([f"{offset:.6g}", f"{offset / edge_length_m:.6f}", f"{dbm:.6f}"])
