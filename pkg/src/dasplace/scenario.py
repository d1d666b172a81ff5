"""Square region, user-location grid and AP poses on the region edges."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

# tolerance for "on the boundary" / unit-normal checks
_EDGE_TOL = 1e-9
# distances below this count as a coincident AP/location
_COINCIDENT_TOL = 1e-12


@dataclass(frozen=True)
class RegionSpec:
    """An ``L x L`` square ``[0, L] x [0, L]`` sampled on a regular grid."""

    edge_length_m: float
    grid_spacing_m: float = 1.0

    def __post_init__(self):
        if not self.edge_length_m > 0:
            raise ValueError(f"edge_length_m must be > 0, got {self.edge_length_m}")
        if not self.grid_spacing_m > 0:
            raise ValueError(f"grid_spacing_m must be > 0, got {self.grid_spacing_m}")
        if self.grid_spacing_m > self.edge_length_m:
            raise ValueError("grid_spacing_m must not exceed edge_length_m")

    @property
    def points_per_axis(self) -> int:
        # the small slack keeps e.g. 0.3/0.1 from flooring to 2
        return int(math.floor(self.edge_length_m / self.grid_spacing_m + 1e-9)) + 1

    @property
    def size(self) -> int:
        return self.points_per_axis ** 2

    @property
    def center(self) -> tuple[float, float]:
        half = self.edge_length_m / 2
        return (half, half)

    def axis(self) -> np.ndarray:
        """Grid coordinates along one axis (identical for x and y)."""
        return np.arange(self.points_per_axis) * self.grid_spacing_m


@lru_cache(maxsize=8)
def _grid(region: RegionSpec) -> np.ndarray:
    ax = region.axis()
    yy, xx = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    pts.setflags(write=False)
    return pts


def make_grid(region: RegionSpec) -> np.ndarray:
    """User locations as an ``(N, 2)`` array of ``(x, y)``.

    Row-major: index ``r * n + c`` holds ``(c * spacing, r * spacing)``, so the
    first row is ``y = 0`` and x varies fastest. The array is read-only and
    cached per region.
    """
    return _grid(region)


@dataclass(frozen=True)
class ApPose:
    position: tuple[float, float]
    inward_normal: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(
            self, "inward_normal", (float(self.inward_normal[0]), float(self.inward_normal[1]))
        )
        if abs(math.hypot(*self.inward_normal) - 1.0) > _EDGE_TOL:
            raise ValueError(f"inward_normal must be a unit vector, got {self.inward_normal}")


@dataclass(frozen=True)
class Placement:
    """Ordered AP poses; ``corner_offset_m`` is set for the symmetric family."""

    poses: tuple[ApPose, ...]
    corner_offset_m: Optional[float] = None
    edge_length_m: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise ValueError("a placement needs at least one AP")

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def ratio(self) -> Optional[float]:
        """x-coordinate of the top AP over the edge length (symmetric family only)."""
        if self.corner_offset_m is None or self.edge_length_m is None:
            return None
        return self.corner_offset_m / self.edge_length_m


def _rotate_cw(point, center):
    # -90 degrees about center: (dx, dy) -> (dy, -dx)
    dx, dy = point[0] - center[0], point[1] - center[1]
    return (center[0] + dy, center[1] - dx)


def symmetric_placement(region: RegionSpec, corner_offset_m: float) -> Placement:
    """Four APs, one per edge, each ``D`` from its nearest corner.

    AP 0 sits on the top edge at ``(D, L)`` facing down; APs 1-3 follow by
    successive clockwise quarter turns about the region center, which gives
    ``(L, L-D)``, ``(L-D, 0)`` and ``(0, D)``.
    """
    L = region.edge_length_m
    D = float(corner_offset_m)
    if not 0.0 <= D <= L:
        raise ValueError(f"corner offset must lie in [0, {L}], got {D}")
    # written out rather than rotated numerically so that positions stay exact
    poses = (
        ApPose((D, L), (0.0, -1.0)),
        ApPose((L, L - D), (-1.0, 0.0)),
        ApPose((L - D, 0.0), (0.0, 1.0)),
        ApPose((0.0, D), (1.0, 0.0)),
    )
    return Placement(poses, corner_offset_m=D, edge_length_m=L)


def centralized_placement(region: RegionSpec) -> Placement:
    """Single AP at the middle of the top edge."""
    L = region.edge_length_m
    return Placement((ApPose((L / 2, L), (0.0, -1.0)),))


def rotate_placement(region: RegionSpec, placement: Placement) -> Placement:
    """Rotate every pose a quarter turn clockwise about the region center."""
    c = region.center
    poses = tuple(
        ApPose(_rotate_cw(p.position, c), (p.inward_normal[1], -p.inward_normal[0]))
        for p in placement.poses
    )
    return Placement(poses, placement.corner_offset_m, placement.edge_length_m)


def on_boundary(region: RegionSpec, pose: ApPose) -> bool:
    """True when ``pose`` is on an edge and faces into the region."""
    L = region.edge_length_m
    x, y = pose.position
    nx, ny = pose.inward_normal
    if not (-_EDGE_TOL <= x <= L + _EDGE_TOL and -_EDGE_TOL <= y <= L + _EDGE_TOL):
        return False
    edges = (
        (abs(y - L) <= _EDGE_TOL, (0.0, -1.0)),
        (abs(x - L) <= _EDGE_TOL, (-1.0, 0.0)),
        (abs(y) <= _EDGE_TOL, (0.0, 1.0)),
        (abs(x) <= _EDGE_TOL, (1.0, 0.0)),
    )
    return any(
        hit and abs(nx - ex) <= _EDGE_TOL and abs(ny - ey) <= _EDGE_TOL
        for hit, (ex, ey) in edges
    )


def geometry_arrays(pose: ApPose, points: np.ndarray, r0_m: float):
    """Vectorised :func:`geometry` over an ``(N, 2)`` point array.

    Returns ``(distance, theta)`` arrays. ``theta`` is positive when the
    location lies counter-clockwise of the broadside direction.
    """
    px, py = pose.position
    nx, ny = pose.inward_normal
    dx = points[:, 0] - px
    dy = points[:, 1] - py
    raw = np.hypot(dx, dy)
    along = dx * nx + dy * ny
    across = nx * dy - ny * dx
    theta = np.arctan2(across, along)
    np.clip(theta, -np.pi / 2, np.pi / 2, out=theta)
    theta[raw < _COINCIDENT_TOL] = 0.0
    return np.maximum(r0_m, raw), theta


def geometry(pose: ApPose, location, r0_m: float) -> tuple[float, float]:
    """Far-field clamped distance and broadside angle from ``pose`` to ``location``."""
    d, th = geometry_arrays(pose, np.asarray([location], dtype=float), r0_m)
    return float(d[0]), float(th[0])
