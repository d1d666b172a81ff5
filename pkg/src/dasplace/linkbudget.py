"""Received-power coefficients, AP combining and the percentile coverage solve."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .radiation import ArraySpec, mrt_gain
from .scenario import ApPose, Placement, RegionSpec, geometry, geometry_arrays, make_grid


class InfeasibleCoverageError(RuntimeError):
    """No transmit power can meet the coverage target for this placement."""


class Combining(enum.Enum):
    COHERENT = "coherent"
    NONCOHERENT = "noncoherent"


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    mw = np.asarray(mw, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class LinkModel:
    wavelength_m: float = 0.12
    pathloss_exponent: float = 2.0
    farfield_m: float = 3.0
    required_rx_power_mw: float = 1e-6  # -60 dBm
    combining: Combining = Combining.NONCOHERENT
    coverage_fraction: float = 0.98

    def __post_init__(self):
        if not self.wavelength_m > 0:
            raise ValueError("wavelength_m must be positive")
        if not self.pathloss_exponent >= 2:
            raise ValueError("pathloss_exponent must be >= 2")
        if not self.farfield_m > 0:
            raise ValueError("farfield_m must be positive")
        if not self.required_rx_power_mw > 0:
            raise ValueError("required_rx_power_mw must be positive")
        if not 0 < self.coverage_fraction <= 1:
            raise ValueError("coverage_fraction must be in (0, 1]")
        object.__setattr__(self, "combining", Combining(self.combining))

    def replace(self, **changes) -> "LinkModel":
        fields = dict(self.__dict__)
        fields.update(changes)
        return LinkModel(**fields)


def _free_space_factor(model: LinkModel, distance):
    return model.wavelength_m ** 2 / (16.0 * np.pi ** 2 * np.asarray(distance) ** model.pathloss_exponent)


def link_coefficient(spec: ArraySpec, pose: ApPose, location, model: LinkModel) -> float:
    """Received power per unit transmit power from ``pose`` at ``location``."""
    r, theta = geometry(pose, location, model.farfield_m)
    return float(mrt_gain(spec, theta) * _free_space_factor(model, r))


def link_coefficients(spec: ArraySpec, pose: ApPose, points: np.ndarray, model: LinkModel) -> np.ndarray:
    """:func:`link_coefficient` for every row of ``points``."""
    r, theta = geometry_arrays(pose, points, model.farfield_m)
    return mrt_gain(spec, theta) * _free_space_factor(model, r)


def coefficient_matrix(placement: Placement, spec: ArraySpec, points: np.ndarray, model: LinkModel) -> np.ndarray:
    """``(T, N)`` coefficients, one row per AP."""
    return np.stack([link_coefficients(spec, p, points, model) for p in placement.poses])


def _sorted_rows(terms: np.ndarray) -> list:
    # odd-even transposition network; elementwise, much cheaper than np.sort(axis=0) for a few rows
    rows = list(terms)
    n = len(rows)
    for step in range(n):
        for i in range(step % 2, n - 1, 2):
            lo = np.minimum(rows[i], rows[i + 1])
            rows[i + 1] = np.maximum(rows[i], rows[i + 1])
            rows[i] = lo
    return rows


def aggregate(coefficients, combining: Combining):
    """Combine per-AP coefficients along the first axis.

    Non-coherent adds powers, coherent adds amplitudes and squares. Terms are
    summed in ascending order so the result does not depend on how the APs
    are numbered. The coherent square is expanded as the power sum plus the
    nonnegative cross terms, so it never rounds below the non-coherent value.
    """
    g = np.asarray(coefficients, dtype=float)
    if g.shape[0] == 0:
        raise ValueError("need at least one coefficient")
    combining = Combining(combining)
    rows = _sorted_rows(g)
    total = rows[0].copy()
    for row in rows[1:]:
        total += row
    if combining is Combining.COHERENT:
        amp = [np.sqrt(r) for r in rows]
        prefix = amp[0].copy()
        cross = np.zeros_like(total)
        for a in amp[1:]:
            cross += a * prefix
            prefix += a
        total = total + 2.0 * cross
    return float(total) if total.ndim == 0 else total


def aggregate_coefficients(placement: Placement, spec: ArraySpec, region: RegionSpec, model: LinkModel) -> np.ndarray:
    points = make_grid(region)
    return aggregate(coefficient_matrix(placement, spec, points, model), model.combining)


def dropped_count(n_locations: int, coverage_fraction: float) -> int:
    """Number of weakest locations ignored, ``floor((1 - f) * N)``."""
    # slack absorbs representation error such as (1 - 0.98) * 100 = 2.0000000000000018
    return int(math.floor((1.0 - coverage_fraction) * n_locations + 1e-9))


@dataclass(frozen=True)
class CoverageResult:
    required_tx_power_mw: float
    limiting_location: tuple[float, float]
    limiting_index: int
    aggregate_coefficients: np.ndarray
    dropped_indices: np.ndarray

    @property
    def required_tx_power_dbm(self) -> float:
        return float(mw_to_dbm(self.required_tx_power_mw))


def percentile_cut(values: np.ndarray, drop: int) -> tuple[int, np.ndarray]:
    """Order statistic after dropping the ``drop`` smallest values.

    Equivalent to a stable ascending sort and picking position ``drop``, but
    linear time. Returns the index of that element and the sorted indices of
    the dropped ones.
    """
    cut = np.partition(values, drop)[drop]
    below = np.flatnonzero(values < cut)
    ties = np.flatnonzero(values == cut)
    take = drop - below.size
    dropped = np.sort(np.concatenate([below, ties[:take]]))
    return int(ties[take]), dropped


def coverage_from_aggregate(values: np.ndarray, points: np.ndarray, model: LinkModel) -> CoverageResult:
    n = values.size
    if model.coverage_fraction * n < 1:
        raise ValueError("coverage_fraction leaves no location to cover")
    limiting, dropped = percentile_cut(values, dropped_count(n, model.coverage_fraction))
    weakest = values[limiting]
    if not weakest > 0:
        raise InfeasibleCoverageError(
            f"location {tuple(points[limiting].tolist())} receives no signal after dropping {dropped.size} locations"
        )
    return CoverageResult(
        required_tx_power_mw=float(model.required_rx_power_mw / weakest),
        limiting_location=(float(points[limiting, 0]), float(points[limiting, 1])),
        limiting_index=limiting,
        aggregate_coefficients=values,
        dropped_indices=dropped,
    )


def required_tx_power(placement: Placement, spec: ArraySpec, region: RegionSpec, model: LinkModel) -> CoverageResult:
    """Smallest per-AP transmit power covering ``coverage_fraction`` of the grid."""
    values = aggregate_coefficients(placement, spec, region, model)
    return coverage_from_aggregate(values, make_grid(region), model)


@dataclass(frozen=True)
class RxPowerMap:
    rx_power_mw: np.ndarray
    below_threshold: np.ndarray


def rx_power_map(placement: Placement, spec: ArraySpec, region: RegionSpec, model: LinkModel,
                 tx_power_mw: float) -> RxPowerMap:
    power = tx_power_mw * aggregate_coefficients(placement, spec, region, model)
    return RxPowerMap(power, power < model.required_rx_power_mw)


def contributor_map(placement: Placement, spec: ArraySpec, region: RegionSpec, model: LinkModel) -> np.ndarray:
    """Index of the strongest AP at every location, lowest index on ties."""
    g = coefficient_matrix(placement, spec, make_grid(region), model)
    return np.argmax(g, axis=0)


def to_image(values: np.ndarray, region: RegionSpec) -> np.ndarray:
    """Reshape a per-location vector to a north-up image (row 0 is ``y = L``)."""
    n = region.points_per_axis
    return np.asarray(values).reshape(n, n)[::-1]


class SymmetricFamily:
    """Fast coefficient matrices for :func:`~dasplace.scenario.symmetric_placement`.

    The top AP's coefficient map depends only on ``(x - D, y)``, so it is
    computed once over x-offsets in ``[-L, L]`` and sliced per offset. The
    other three APs are quarter-turn rotations of that map. This needs a
    rotation-symmetric grid (``L`` a multiple of the spacing) and offsets on
    the grid lattice; :meth:`supports` says whether an offset qualifies.
    """

    def __init__(self, region: RegionSpec, spec: ArraySpec, model: LinkModel):
        self.region = region
        self.spec = spec
        self.model = model
        n = region.points_per_axis
        s = region.grid_spacing_m
        L = region.edge_length_m
        self._n = n
        self.grid_symmetric = abs((n - 1) * s - L) <= 1e-9 * max(1.0, L)
        if self.grid_symmetric:
            offsets = (np.arange(2 * n - 1) - (n - 1)) * s
            ys = region.axis()
            yy, xx = np.meshgrid(ys, offsets, indexing="ij")
            pts = np.column_stack([xx.ravel(), yy.ravel()])
            top = ApPose((0.0, L), (0.0, -1.0))
            self._wide = link_coefficients(spec, top, pts, model).reshape(n, 2 * n - 1)

    def _lattice_index(self, offset_m: float):
        k = offset_m / self.region.grid_spacing_m
        kr = round(k)
        if abs(k - kr) > 1e-9 or not 0 <= kr <= self._n - 1:
            return None
        return int(kr)

    def supports(self, offset_m: float) -> bool:
        return self.grid_symmetric and self._lattice_index(offset_m) is not None

    def coefficient_images(self, offset_m: float) -> list:
        """Per-AP ``(n, n)`` maps indexed ``[row, col]`` = ``[y, x]`` (not north-up)."""
        k = self._lattice_index(offset_m)
        if not self.grid_symmetric or k is None:
            raise ValueError(f"offset {offset_m} is not on the symmetric grid lattice")
        n = self._n
        start = n - 1 - k
        imgs = [self._wide[:, start:start + n]]
        for _ in range(3):
            # clockwise quarter turn of the AP == g_next[r, c] = g_prev[c, n-1-r]
            imgs.append(imgs[-1].T[::-1])
        return imgs

    def coefficient_matrix(self, offset_m: float) -> np.ndarray:
        return np.stack([img.ravel() for img in self.coefficient_images(offset_m)])

    def required_tx_power(self, offset_m: float) -> CoverageResult:
        values = aggregate(self.coefficient_matrix(offset_m), self.model.combining)
        return coverage_from_aggregate(values, make_grid(self.region), self.model)
