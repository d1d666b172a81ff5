"""The result battery: C-mMIMO vs D-mMIMO comparison, factor sweep, heatmaps,
contributor maps and the element pattern table.

Every ``run_*`` function returns its rows in memory and, when ``out_dir`` is
given, also writes CSV tables, PGM images and a ``manifest.json``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import export
from .linkbudget import (
    Combining,
    LinkModel,
    SymmetricFamily,
    contributor_map,
    mw_to_dbm,
    required_tx_power,
    rx_power_map,
    to_image,
)
from .optimizer import SearchConfig, line_search
from .radiation import ArraySpec, ElementPattern, pattern_table, write_pattern_csv
from .scenario import Placement, RegionSpec, centralized_placement, make_grid, symmetric_placement

DEFAULT_EXPONENTS = (2.0, 2.5, 3.0, 3.5, 4.0)


class System(enum.Enum):
    CENTRALIZED = "c-mmimo"
    DISTRIBUTED_UNOPTIMIZED = "d-mmimo-unoptimized"
    DISTRIBUTED_OPTIMIZED = "d-mmimo-optimized"


@dataclass(frozen=True)
class Settings:
    """Knobs shared by every experiment (the fixed system parameters)."""

    grid_spacing_m: float = 1.0
    wavelength_m: float = 0.12
    farfield_m: float = 3.0
    required_rx_power_mw: float = 1e-6  # -60 dBm
    coverage_fraction: float = 0.98
    distributed_elements: int = 32
    centralized_elements: int = 128
    patch: ElementPattern = field(default_factory=ElementPattern.patch)
    search: SearchConfig = SearchConfig()
    workers: int = 1

    def model(self, n: float, combining=Combining.NONCOHERENT) -> LinkModel:
        return LinkModel(
            wavelength_m=self.wavelength_m,
            pathloss_exponent=n,
            farfield_m=self.farfield_m,
            required_rx_power_mw=self.required_rx_power_mw,
            combining=Combining(combining),
            coverage_fraction=self.coverage_fraction,
        )

    def region(self, edge_length_m: float) -> RegionSpec:
        return RegionSpec(edge_length_m, self.grid_spacing_m)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    edge_length_m: float
    pattern: ElementPattern
    coupling: bool
    combining: Combining = Combining.NONCOHERENT
    pathloss_exponents: tuple = DEFAULT_EXPONENTS
    system: System = System.DISTRIBUTED_OPTIMIZED

    def __post_init__(self):
        exps = tuple(float(n) for n in self.pathloss_exponents)
        if not exps or min(exps) < 2:
            raise ValueError("pathloss_exponents must be nonempty with values >= 2")
        object.__setattr__(self, "pathloss_exponents", exps)
        object.__setattr__(self, "combining", Combining(self.combining))

    def describe(self) -> dict:
        d = asdict(self)
        d["pattern"] = _pattern_dict(self.pattern)
        d["combining"] = self.combining.value
        d["system"] = self.system.value
        d["pathloss_exponents"] = list(self.pathloss_exponents)
        return d


def _pattern_dict(p: ElementPattern) -> dict:
    return {"kind": p.kind.value, "peak_gain_linear": p.peak_gain_linear,
            "power_exponent": p.power_exponent}


@dataclass(frozen=True)
class SystemPower:
    """Outcome of evaluating one system; ``total_tx_power_mw`` sums all APs."""

    system: System
    ap_count: int
    tx_power_per_ap_mw: float
    offset_m: Optional[float] = None
    ratio: Optional[float] = None
    trace: Optional[list] = None

    @property
    def total_tx_power_mw(self) -> float:
        return self.ap_count * self.tx_power_per_ap_mw

    @property
    def total_tx_power_dbm(self) -> float:
        return float(mw_to_dbm(self.total_tx_power_mw))


def evaluate_system(scenario: ScenarioSpec, n: float, settings: Settings = Settings()) -> SystemPower:
    region = settings.region(scenario.edge_length_m)
    model = settings.model(n, scenario.combining)
    if scenario.system is System.CENTRALIZED:
        spec = ArraySpec(settings.centralized_elements, scenario.pattern, scenario.coupling)
        res = required_tx_power(centralized_placement(region), spec, region, model)
        return SystemPower(scenario.system, 1, res.required_tx_power_mw)

    spec = ArraySpec(settings.distributed_elements, scenario.pattern, scenario.coupling)
    if scenario.system is System.DISTRIBUTED_UNOPTIMIZED:
        half = region.edge_length_m / 2
        family = SymmetricFamily(region, spec, model)
        if family.supports(half):
            res = family.required_tx_power(half)
        else:
            res = required_tx_power(symmetric_placement(region, half), spec, region, model)
        return SystemPower(scenario.system, 4, res.required_tx_power_mw, half, 0.5)

    opt = line_search(region, spec, model, settings.search, workers=settings.workers)
    return SystemPower(scenario.system, 4, opt.best_tx_power_mw, opt.best_offset_m,
                       opt.best_ratio, opt.trace)


# ---------------------------------------------------------------------------
# C-mMIMO vs D-mMIMO


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    n: float
    cmimo_dbm: float
    dmimo_unoptimized_dbm: float
    dmimo_optimized_dbm: float
    optimized_ratio: float

    @property
    def saving_db(self) -> float:
        return self.cmimo_dbm - self.dmimo_optimized_dbm

    @property
    def unoptimized_penalty_db(self) -> float:
        """Positive when the unoptimized D-mMIMO needs more power than C-mMIMO."""
        return self.dmimo_unoptimized_dbm - self.cmimo_dbm


def comparison_patterns(settings: Settings) -> list[tuple[str, ElementPattern, bool]]:
    return [
        ("isotropic-no-coupling", ElementPattern.isotropic(), False),
        ("patch-coupling", settings.patch, True),
    ]


COMPARISON_HEADER = ["scenario", "n", "cmimo_dBm", "dmimo_unoptimized_dBm",
                     "dmimo_optimized_dBm", "optimized_ratio", "saving_dB"]


def run_comparison(n_values: Sequence[float] = DEFAULT_EXPONENTS, settings: Settings = Settings(),
                   edge_length_m: float = 400.0, out_dir=None) -> list[ComparisonRow]:
    """Total transmit power of C-mMIMO and both D-mMIMO variants, non-coherent."""
    rows = []
    for name, pattern, coupling in comparison_patterns(settings):
        for n in n_values:
            base = ScenarioSpec(name, edge_length_m, pattern, coupling, Combining.NONCOHERENT, (n,))
            c = evaluate_system(replace(base, system=System.CENTRALIZED), n, settings)
            u = evaluate_system(replace(base, system=System.DISTRIBUTED_UNOPTIMIZED), n, settings)
            o = evaluate_system(base, n, settings)
            rows.append(ComparisonRow(name, float(n), c.total_tx_power_dbm, u.total_tx_power_dbm,
                                      o.total_tx_power_dbm, o.ratio))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = out / "comparison.csv"
        export.write_table_csv(table, COMPARISON_HEADER, [
            [r.scenario, r.n, r.cmimo_dbm, r.dmimo_unoptimized_dbm, r.dmimo_optimized_dbm,
             r.optimized_ratio, r.saving_db] for r in rows])
        export.write_manifest(out, {
            "experiment": "comparison",
            "edge_length_m": edge_length_m,
            "pathloss_exponents": [float(n) for n in n_values],
            "combining": Combining.NONCOHERENT.value,
            "power": "total over all APs",
            "settings": settings_dict(settings),
        }, [table])
    return rows


# ---------------------------------------------------------------------------
# factor sweep


def factor_scenarios(settings: Settings, n_values=DEFAULT_EXPONENTS) -> dict[int, ScenarioSpec]:
    """The six-scenario battery; (4) is the baseline, the rest toggle one or two factors."""
    p = settings.patch
    nc, co = Combining.NONCOHERENT, Combining.COHERENT
    return {
        1: ScenarioSpec("patch no-coupling coherent 400x400", 400.0, p, False, co, n_values),
        2: ScenarioSpec("patch no-coupling non-coherent 400x400", 400.0, p, False, nc, n_values),
        3: ScenarioSpec("patch coupling coherent 400x400", 400.0, p, True, co, n_values),
        4: ScenarioSpec("patch coupling non-coherent 400x400", 400.0, p, True, nc, n_values),
        5: ScenarioSpec("patch coupling non-coherent 200x200", 200.0, p, True, nc, n_values),
        6: ScenarioSpec("patch no-coupling non-coherent 200x200", 200.0, p, False, nc, n_values),
    }


@dataclass(frozen=True)
class FactorRow:
    scenario_id: int
    scenario: str
    n: float
    ratio: float
    tx_power_dbm: float


def run_factor_sweep(n_values: Sequence[float] = DEFAULT_EXPONENTS, settings: Settings = Settings(),
                     out_dir=None) -> list[FactorRow]:
    """Optimal placement ratio and total power for every scenario and exponent."""
    rows = []
    scenarios = factor_scenarios(settings, tuple(n_values))
    for sid, sc in scenarios.items():
        for n in sc.pathloss_exponents:
            res = evaluate_system(sc, n, settings)
            rows.append(FactorRow(sid, sc.name, n, res.ratio, res.total_tx_power_dbm))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = out / "factor_sweep.csv"
        export.write_table_csv(table, ["scenario_id", "scenario", "n", "ratio", "tx_power_dBm"],
                               [[r.scenario_id, r.scenario, r.n, r.ratio, r.tx_power_dbm] for r in rows])
        export.write_manifest(out, {
            "experiment": "factor_sweep",
            "scenarios": {str(k): v.describe() for k, v in scenarios.items()},
            "scenario_numbering": "reconstructed; the source labels six scenarios without listing them",
            "power": "total over all APs",
            "settings": settings_dict(settings),
        }, [table])
    return rows


def rows_by(rows, key):
    """Group factor rows as ``{key(row): {n: row}}``."""
    out: dict = {}
    for r in rows:
        out.setdefault(key(r), {})[r.n] = r
    return out


# ---------------------------------------------------------------------------
# heatmaps and contributor maps


@dataclass
class HeatmapResult:
    name: str
    region: RegionSpec
    placement: Placement
    tx_power_mw: float
    rx_power_dbm: np.ndarray  # per grid location, row-major from y = 0
    below_threshold: np.ndarray
    threshold_dbm: float
    files: list = field(default_factory=list)


def heatmap(name: str, region: RegionSpec, placement: Placement, spec: ArraySpec, model: LinkModel,
            tx_power_mw: Optional[float] = None, out_dir=None) -> HeatmapResult:
    """Received power map at ``tx_power_mw`` (default: the coverage-target power)."""
    if tx_power_mw is None:
        tx_power_mw = required_tx_power(placement, spec, region, model).required_tx_power_mw
    rx = rx_power_map(placement, spec, region, model, tx_power_mw)
    res = HeatmapResult(name, region, placement, tx_power_mw, mw_to_dbm(rx.rx_power_mw),
                        rx.below_threshold, float(mw_to_dbm(model.required_rx_power_mw)))
    if out_dir is not None:
        res.files = write_heatmap(Path(out_dir), res)
    return res


def write_heatmap(out: Path, res: HeatmapResult) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    img = to_image(res.rx_power_dbm, res.region)
    mask = to_image(res.below_threshold, res.region)
    finite = img[np.isfinite(img)]
    lo = float(finite.min()) if finite.size else res.threshold_dbm
    hi = float(finite.max()) if finite.size else res.threshold_dbm
    paths = {
        "csv": out / f"{res.name}_rx_dBm.csv",
        "pgm": out / f"{res.name}_rx.pgm",
        "mask_csv": out / f"{res.name}_mask.csv",
        "mask_pgm": out / f"{res.name}_mask.pgm",
        "meta": out / f"{res.name}_meta.json",
    }
    export.write_grid_csv(paths["csv"], img)
    export.write_pgm(paths["pgm"], export.db_to_gray(img, lo, hi))
    export.write_grid_csv(paths["mask_csv"], mask.astype(int))
    export.write_pgm(paths["mask_pgm"], np.where(mask, 255, 0))
    export.write_json(paths["meta"], {
        "min_dBm": lo,
        "max_dBm": hi,
        "threshold_dBm": res.threshold_dbm,
        "nodata": export.NODATA,
        "gray_mapping": "gray = 1 + round(254 * (dBm - min_dBm) / (max_dBm - min_dBm)), clipped; no signal -> nodata",
        "mask_mapping": "255 where received power < threshold, else 0",
        "orientation": "row 0 is y = L (north up), column 0 is x = 0",
        "grid_spacing_m": res.region.grid_spacing_m,
        "edge_length_m": res.region.edge_length_m,
        "tx_power_per_ap_dBm": float(mw_to_dbm(res.tx_power_mw)),
        "masked_cells": int(res.below_threshold.sum()),
        "ap_positions": [list(p.position) for p in res.placement.poses],
    })
    return list(paths.values())


def heatmap_battery(settings: Settings) -> list[tuple[str, ElementPattern, bool, float]]:
    return [
        ("isotropic_no_coupling_n2", ElementPattern.isotropic(), False, 2.0),
        ("patch_coupling_n4", settings.patch, True, 4.0),
    ]


def run_heatmaps(settings: Settings = Settings(), edge_length_m: float = 400.0,
                 out_dir=None) -> list[HeatmapResult]:
    """Single-AP (C-mMIMO) maps for the two directivity extremes."""
    region = settings.region(edge_length_m)
    placement = centralized_placement(region)
    results = []
    for name, pattern, coupling, n in heatmap_battery(settings):
        spec = ArraySpec(settings.centralized_elements, pattern, coupling)
        results.append(heatmap(name, region, placement, spec, settings.model(n), out_dir=out_dir))
    if out_dir is not None:
        export.write_manifest(Path(out_dir), {
            "experiment": "heatmaps",
            "maps": [{"name": nm, "pattern": _pattern_dict(p), "coupling": c, "n": n}
                     for nm, p, c, n in heatmap_battery(settings)],
            "edge_length_m": edge_length_m,
            "settings": settings_dict(settings),
        }, [f for r in results for f in r.files])
    return results


def masked_half_counts(res: HeatmapResult) -> tuple[int, int]:
    """Masked cells strictly nearer to / farther from the top edge than the midline."""
    y = make_grid(res.region)[:, 1]
    half = res.region.edge_length_m / 2
    m = res.below_threshold
    return int((m & (y > half)).sum()), int((m & (y < half)).sum())


@dataclass
class ContributorResult:
    name: str
    region: RegionSpec
    placement: Placement
    labels: np.ndarray  # per grid location, row-major from y = 0
    files: list = field(default_factory=list)

    def max_dominated_distance(self) -> list[float]:
        """Per AP, the farthest location for which it is the major contributor."""
        pts = make_grid(self.region)
        out = []
        for t, pose in enumerate(self.placement.poses):
            sel = pts[self.labels == t]
            if sel.size == 0:
                out.append(0.0)
                continue
            d = np.hypot(sel[:, 0] - pose.position[0], sel[:, 1] - pose.position[1])
            out.append(float(d.max()))
        return out


def contributors(name: str, region: RegionSpec, placement: Placement, spec: ArraySpec,
                 model: LinkModel, out_dir=None) -> ContributorResult:
    labels = contributor_map(placement, spec, region, model)
    res = ContributorResult(name, region, placement, labels)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        img = to_image(labels, region)
        paths = [out / f"{name}_labels.csv", out / f"{name}_labels.pgm", out / f"{name}_meta.json"]
        export.write_grid_csv(paths[0], img)
        export.write_pgm(paths[1], export.labels_to_gray(img, len(placement)))
        levels = export.labels_to_gray(np.arange(len(placement)), len(placement))
        export.write_json(paths[2], {
            "labels": {str(t): {"gray": int(g), "position": list(p.position)}
                       for t, (g, p) in enumerate(zip(levels, placement.poses))},
            "tie_rule": "lowest AP index",
            "orientation": "row 0 is y = L (north up), column 0 is x = 0",
            "corner_offset_m": placement.corner_offset_m,
            "ratio": placement.ratio,
            "nodata": export.NODATA,
        })
        res.files = paths
    return res


def run_contributor_maps(n: float = 3.0, settings: Settings = Settings(), edge_length_m: float = 400.0,
                         out_dir=None) -> dict[bool, ContributorResult]:
    """Major-contributor maps of the optimized D-mMIMO, with and without coupling."""
    region = settings.region(edge_length_m)
    model = settings.model(n)
    results = {}
    for coupling in (True, False):
        spec = ArraySpec(settings.distributed_elements, settings.patch, coupling)
        opt = line_search(region, spec, model, settings.search, workers=settings.workers)
        name = "coupling" if coupling else "no_coupling"
        results[coupling] = contributors(name, region, symmetric_placement(region, opt.best_offset_m),
                                         spec, model, out_dir=out_dir)
    if out_dir is not None:
        export.write_manifest(Path(out_dir), {
            "experiment": "contributors",
            "n": float(n),
            "edge_length_m": edge_length_m,
            "settings": settings_dict(settings),
        }, [f for r in results.values() for f in r.files])
    return results


# ---------------------------------------------------------------------------
# element pattern table


def run_pattern_table(settings: Settings = Settings(), step_deg: float = 1.0, out_dir=None):
    """Embedded element gain of the patch element with and without coupling."""
    tables = {}
    files = []
    for coupling in (False, True):
        spec = ArraySpec(settings.distributed_elements, settings.patch, coupling)
        name = "patch_coupling" if coupling else "patch_no_coupling"
        tables[name] = pattern_table(spec, step_deg)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"{name}.csv"
            write_pattern_csv(path, tables[name])
            files.append(path)
    if out_dir is not None:
        export.write_manifest(Path(out_dir), {
            "experiment": "pattern",
            "step_deg": step_deg,
            "pattern": _pattern_dict(settings.patch),
        }, files)
    return tables


def settings_dict(settings: Settings) -> dict:
    return {
        "grid_spacing_m": settings.grid_spacing_m,
        "wavelength_m": settings.wavelength_m,
        "farfield_m": settings.farfield_m,
        "required_rx_power_dBm": float(mw_to_dbm(settings.required_rx_power_mw)),
        "coverage_fraction": settings.coverage_fraction,
        "distributed_elements": settings.distributed_elements,
        "centralized_elements": settings.centralized_elements,
        "patch": _pattern_dict(settings.patch),
        "resolution_m": settings.search.resolution_m,
        "total_shift_criterion_m": settings.search.total_shift_criterion_m,
    }
