import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dasplace.linkbudget import Combining, InfeasibleCoverageError, LinkModel
from dasplace.optimizer import (
    SearchConfig,
    brute_force_oracle,
    line_search,
    shift_schedule,
    write_trace_csv,
)
from dasplace.radiation import ArraySpec, ElementPattern
from dasplace.scenario import RegionSpec

ISO = ArraySpec(32)
PATCH_C = ArraySpec(32, ElementPattern.patch(), True)


def test_schedule_default_covers_edge():
    s = shift_schedule(RegionSpec(10), SearchConfig(3.0))
    assert s == [0, 3, 6, 9, 10]
    assert shift_schedule(RegionSpec(10), SearchConfig(1.0))[-1] == 10


def test_schedule_stops_at_criterion():
    assert shift_schedule(RegionSpec(10), SearchConfig(2.0, 5.0)) == [0, 2, 4, 6]


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(0.0)
    with pytest.raises(ValueError):
        SearchConfig(2.0, 1.0)


def test_resolution_equal_to_edge_picks_corner():
    region = RegionSpec(20)
    res = line_search(region, ISO, LinkModel(), SearchConfig(20.0))
    assert [d for d, _ in res.trace] == [0, 20]
    assert res.trace[0][1] == res.trace[1][1]
    assert res.best_offset_m == 0 and res.best_ratio == 0


def test_matches_oracle_half_meter():
    region = RegionSpec(20)
    model = LinkModel(pathloss_exponent=2.0)
    a = line_search(region, ISO, model, SearchConfig(0.5))
    b = brute_force_oracle(region, ISO, model, 0.5)
    assert (a.best_offset_m, a.best_tx_power_mw) == (b.best_offset_m, b.best_tx_power_mw)
    assert a.trace == b.trace
    assert len(b.trace) == math.floor(20 / 0.5) + 1


def test_result_invariants():
    region = RegionSpec(30)
    res = line_search(region, PATCH_C, LinkModel(pathloss_exponent=3.0))
    assert res.best_tx_power_mw == min(p for _, p in res.trace)
    assert (res.best_offset_m, res.best_tx_power_mw) in res.trace
    assert res.trace[0][0] == 0 and res.trace[-1][0] == 30
    assert res.best_ratio == res.best_offset_m / 30


def test_oracle_trace_reflection_symmetric():
    region = RegionSpec(24)
    res = brute_force_oracle(region, PATCH_C, LinkModel(pathloss_exponent=2.5), 1.0)
    powers = [p for _, p in res.trace]
    for a, b in zip(powers, powers[::-1]):
        assert a == pytest.approx(b, rel=1e-6)
    assert res.best_ratio <= 0.5


def test_oracle_trace_length_with_final_clamp():
    res = brute_force_oracle(RegionSpec(10), ISO, LinkModel(), 3.0)
    assert [d for d, _ in res.trace] == [0, 3, 6, 9, 10]


@settings(max_examples=10, deadline=None)
@given(st.integers(10, 30), st.sampled_from([1.0, 2.0]), st.sampled_from([2.0, 3.0, 4.0]))
def test_refinement_never_worse(L, step, n):
    region = RegionSpec(L)
    model = LinkModel(pathloss_exponent=n)
    coarse = line_search(region, PATCH_C, model, SearchConfig(step))
    fine = line_search(region, PATCH_C, model, SearchConfig(step / 2))
    assert fine.best_tx_power_mw <= coarse.best_tx_power_mw


def test_off_lattice_resolution_uses_direct_path():
    region = RegionSpec(15)
    model = LinkModel(pathloss_exponent=3.0, combining=Combining.COHERENT)
    a = line_search(region, PATCH_C, model, SearchConfig(0.7))
    b = brute_force_oracle(region, PATCH_C, model, 0.7)
    assert a.trace == b.trace and a.best_offset_m == b.best_offset_m


def test_threads_do_not_change_result():
    region = RegionSpec(40)
    model = LinkModel(pathloss_exponent=3.5)
    a = line_search(region, PATCH_C, model, workers=1)
    b = line_search(region, PATCH_C, model, workers=3)
    assert a == b


def _infeasible_below(limit):
    from dasplace import linkbudget

    real = linkbudget.SymmetricFamily.required_tx_power

    def patched(self, offset_m):
        if offset_m < limit:
            raise InfeasibleCoverageError("forced")
        return real(self, offset_m)

    return patched


def test_infeasible_candidates_are_skipped(monkeypatch):
    from dasplace import linkbudget

    monkeypatch.setattr(linkbudget.SymmetricFamily, "required_tx_power", _infeasible_below(8))
    res = line_search(RegionSpec(10), ISO, LinkModel())
    assert all(math.isinf(p) for d, p in res.trace if d < 8)
    assert res.best_offset_m >= 8


def test_all_infeasible_raises(monkeypatch):
    from dasplace import linkbudget

    monkeypatch.setattr(linkbudget.SymmetricFamily, "required_tx_power", _infeasible_below(math.inf))
    with pytest.raises(InfeasibleCoverageError):
        line_search(RegionSpec(10), ISO, LinkModel())
    with pytest.raises(InfeasibleCoverageError):
        brute_force_oracle(RegionSpec(10), ISO, LinkModel())


def test_trace_csv(tmp_path):
    region = RegionSpec(10)
    res = line_search(region, ISO, LinkModel(), SearchConfig(5.0))
    path = tmp_path / "trace.csv"
    write_trace_csv(path, res, 10)
    lines = path.read_text().splitlines()
    assert lines[0] == "offset_m,ratio,tx_power_dBm"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0", "5", "10"]
    assert float(lines[2].split(",")[2]) == pytest.approx(10 * math.log10(res.trace[1][1]), abs=1e-6)
