"""Element patterns, coupling scan loss and array gain in the azimuth plane."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

HALF_PI = np.pi / 2
# exponent of the cos(theta) scan loss caused by mutual coupling in a patch array
COUPLING_EXPONENT = 1.5

DEFAULT_PATCH_PEAK_DBI = 6.0
DEFAULT_PATCH_EXPONENT = 1.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    """``10 log10``; exact zeros map to ``-inf`` without a warning."""
    lin = np.asarray(lin, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(lin)


class PatternKind(enum.Enum):
    ISOTROPIC = "isotropic"
    COSINE_POWER = "cosine_power"


@dataclass(frozen=True)
class ElementPattern:
    """Isolated-element power gain pattern.

    ``COSINE_POWER`` gives ``peak * cos(theta) ** power_exponent``; with the
    default exponent it stands in for a broad measured patch azimuth cut.
    """

    kind: PatternKind = PatternKind.ISOTROPIC
    peak_gain_linear: float = 1.0
    power_exponent: float = 0.0

    def __post_init__(self):
        if not self.peak_gain_linear > 0:
            raise ValueError("peak_gain_linear must be positive")
        if self.power_exponent < 0:
            raise ValueError("power_exponent must be nonnegative")

    @classmethod
    def isotropic(cls) -> "ElementPattern":
        return cls(PatternKind.ISOTROPIC, 1.0, 0.0)

    @classmethod
    def cosine_power(cls, peak_gain_dbi: float, power_exponent: float) -> "ElementPattern":
        return cls(PatternKind.COSINE_POWER, float(db_to_linear(peak_gain_dbi)), power_exponent)

    @classmethod
    def patch(cls) -> "ElementPattern":
        return cls.cosine_power(DEFAULT_PATCH_PEAK_DBI, DEFAULT_PATCH_EXPONENT)

    def gain(self, theta_rad):
        theta = _check_theta(theta_rad)
        if self.kind is PatternKind.ISOTROPIC:
            return np.ones_like(theta)
        return self.peak_gain_linear * _cos_endfire_zero(theta) ** self.power_exponent


@dataclass(frozen=True)
class ArraySpec:
    element_count: int
    pattern: ElementPattern = ElementPattern()
    coupling: bool = False

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise ValueError(f"element_count must be a positive integer, got {self.element_count}")

    def with_elements(self, element_count: int) -> "ArraySpec":
        return ArraySpec(element_count, self.pattern, self.coupling)


def _check_theta(theta_rad) -> np.ndarray:
    theta = np.asarray(theta_rad, dtype=float)
    if np.any(np.abs(theta) > HALF_PI + 1e-12):
        raise ValueError("angle outside [-pi/2, pi/2]")
    return theta


def _cos_endfire_zero(theta: np.ndarray) -> np.ndarray:
    # cos(pi/2) is 6e-17 in floating point; endfire must be an exact zero
    c = np.cos(theta)
    return np.where(np.abs(theta) >= HALF_PI, 0.0, np.maximum(c, 0.0))


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def embedded_element_gain(spec: ArraySpec, theta_rad):
    """Element gain as seen inside the array, with the coupling scan loss if enabled."""
    theta = _check_theta(theta_rad)
    g = spec.pattern.gain(theta)
    if spec.coupling:
        g = g * _cos_endfire_zero(theta) ** COUPLING_EXPONENT
    return _scalar_or_array(g, theta_rad)


def array_gain_general(spec: ArraySpec, theta_rad, scan_angle_rad):
    """Array gain of a half-wavelength spaced linear array steered to ``scan_angle_rad``.

    ``|sum_m sqrt(G_e) exp(j pi m (sin scan - sin theta))|^2 / M`` with ``G_e``
    the embedded element gain in direction ``theta``.
    """
    theta = _check_theta(theta_rad)
    scan = _check_theta(scan_angle_rad)
    amp = np.sqrt(np.asarray(embedded_element_gain(spec, theta)))
    m = np.arange(spec.element_count)
    phase = np.pi * np.multiply.outer(np.sin(scan) - np.sin(theta), m)
    total = np.exp(1j * phase).sum(axis=-1)
    g = np.abs(amp * total) ** 2 / spec.element_count
    return _scalar_or_array(g, np.broadcast(theta_rad, scan_angle_rad))


def mrt_gain(spec: ArraySpec, theta_rad):
    """Array gain with maximum ratio transmission, ``M`` times the embedded gain."""
    return spec.element_count * embedded_element_gain(spec, theta_rad)


def pattern_table(spec: ArraySpec, step_deg: float = 1.0) -> list[tuple[float, float]]:
    """Embedded element gain in dBi from -90 to +90 degrees.

    Zero linear gain shows up as ``-inf``. The +90 endpoint is always included
    even when ``step_deg`` does not divide 180.
    """
    if not step_deg > 0:
        raise ValueError("step_deg must be positive")
    count = int(math.floor(180.0 / step_deg + 1e-9)) + 1
    deg = -90.0 + step_deg * np.arange(count)
    if deg[-1] < 90.0 - 1e-9:
        deg = np.append(deg, 90.0)
    deg = np.minimum(deg, 90.0)
    gain = np.asarray(embedded_element_gain(spec, np.deg2rad(deg)))
    return [(float(d), float(g)) for d, g in zip(deg, linear_to_db(gain))]


def write_pattern_csv(path, table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "gain_dBi"])
        for deg, gain_db in table:
            w.writerow([f"{deg:.6g}", "-inf" if gain_db == -math.inf else f"{gain_db:.6f}"])
