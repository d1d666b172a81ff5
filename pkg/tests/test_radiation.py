import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dasplace.radiation import (
    ArraySpec,
    ElementPattern,
    array_gain_general,
    embedded_element_gain,
    mrt_gain,
    pattern_table,
    write_pattern_csv,
)

ISO = ElementPattern.isotropic()
PATCH = ElementPattern.patch()
angles = st.floats(-math.pi / 2, math.pi / 2)
patterns = st.sampled_from([ISO, PATCH, ElementPattern.cosine_power(3.0, 2.0)])


def test_isotropic_pattern_is_flat():
    th = np.linspace(-math.pi / 2, math.pi / 2, 11)
    assert np.array_equal(ISO.gain(th), np.ones_like(th))


def test_cosine_power_pattern():
    p = ElementPattern.cosine_power(6.0, 2.0)
    assert p.gain(0.0) == pytest.approx(10 ** 0.6)
    assert p.gain(math.pi / 3) == pytest.approx(10 ** 0.6 * 0.25)
    assert p.gain(math.pi / 2) == 0.0


@pytest.mark.parametrize("pattern", [ISO, PATCH])
def test_coupling_zero_at_endfire(pattern):
    spec = ArraySpec(32, pattern, coupling=True)
    assert embedded_element_gain(spec, math.pi / 2) == 0.0
    assert embedded_element_gain(spec, -math.pi / 2) == 0.0


def test_coupling_broadside_isotropic():
    assert embedded_element_gain(ArraySpec(1, ISO, True), 0.0) == 1.0


def test_coupling_at_60_degrees():
    g = embedded_element_gain(ArraySpec(1, ISO, True), math.pi / 3)
    assert g == pytest.approx(0.5 ** 1.5, rel=1e-12)
    assert 10 * math.log10(g) == pytest.approx(-4.515, abs=5e-4)


def test_angle_domain():
    with pytest.raises(ValueError):
        embedded_element_gain(ArraySpec(1), 1.6)
    with pytest.raises(ValueError):
        array_gain_general(ArraySpec(4), 0.0, -2.0)


def test_element_count_validation():
    with pytest.raises(ValueError):
        ArraySpec(0)
    with pytest.raises(ValueError):
        ArraySpec(2.5)


def test_array_gain_single_element():
    spec = ArraySpec(1, PATCH, True)
    for scan in (-1.0, 0.0, 0.7):
        assert array_gain_general(spec, 0.4, scan) == pytest.approx(embedded_element_gain(spec, 0.4), rel=1e-12)


def test_array_gain_off_steer_matches_geometric_sum():
    # oracle: closed form of the geometric series |sum e^{-j pi m / 32}|^2
    M = 32
    theta = math.asin(1 / M)
    x = math.pi / M
    closed = (math.sin(M * x / 2) / math.sin(x / 2)) ** 2 / M
    direct = abs(sum(complex(math.cos(-math.pi * m / M), math.sin(-math.pi * m / M)) for m in range(M))) ** 2 / M
    got = array_gain_general(ArraySpec(M, ISO, False), theta, 0.0)
    assert closed == pytest.approx(direct, rel=1e-12)
    assert got == pytest.approx(closed, rel=1e-9)


@given(angles, patterns, st.booleans(), st.integers(1, 256))
def test_mrt_identity(theta, pattern, coupling, M):
    spec = ArraySpec(M, pattern, coupling)
    a = array_gain_general(spec, theta, theta)
    b = mrt_gain(spec, theta)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-300)


def test_mrt_examples():
    assert mrt_gain(ArraySpec(32, ISO, False), 0.0) == 32
    assert 10 * math.log10(32) == pytest.approx(15.05, abs=0.005)
    assert mrt_gain(ArraySpec(32, ISO, True), math.pi / 3) == pytest.approx(32 * 0.5 ** 1.5, rel=1e-12)
    assert mrt_gain(ArraySpec(128, PATCH, True), math.pi / 2) == 0.0


@given(angles, patterns)
def test_coupling_never_increases_gain(theta, pattern):
    on = embedded_element_gain(ArraySpec(8, pattern, True), theta)
    off = embedded_element_gain(ArraySpec(8, pattern, False), theta)
    assert on <= off
    if on == off:
        # equality only where the scan loss factor rounds to 1, or both vanish
        assert math.cos(theta) == 1.0 or off == 0


@given(angles, patterns, st.booleans(), st.integers(1, 64))
def test_gains_even_nonnegative_and_linear_in_m(theta, pattern, coupling, M):
    spec = ArraySpec(M, pattern, coupling)
    g = mrt_gain(spec, theta)
    assert g >= 0
    assert mrt_gain(spec, -theta) == g
    assert mrt_gain(spec.with_elements(2 * M), theta) == pytest.approx(2 * g, rel=1e-15)


def test_pattern_table_flat_isotropic():
    table = pattern_table(ArraySpec(32, ISO, False), 30.0)
    assert [d for d, _ in table] == [-90, -60, -30, 0, 30, 60, 90]
    assert all(g == 0.0 for _, g in table)


def test_pattern_table_coupling():
    table = dict(pattern_table(ArraySpec(32, ISO, True), 1.0))
    assert table[90.0] == -math.inf and table[-90.0] == -math.inf
    assert table[60.0] == pytest.approx(-4.515, abs=5e-4)


def test_pattern_table_odd_step_keeps_endpoint():
    table = pattern_table(ArraySpec(1, PATCH, False), 7.0)
    assert table[0][0] == -90 and table[-1][0] == 90


def test_pattern_csv(tmp_path):
    path = tmp_path / "p.csv"
    write_pattern_csv(path, pattern_table(ArraySpec(32, PATCH, True), 45.0))
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_deg,gain_dBi"
    assert lines[1] == "-90,-inf" and lines[-1] == "90,-inf"
    assert lines[3].startswith("0,") and float(lines[3].split(",")[1]) == pytest.approx(6.0)
