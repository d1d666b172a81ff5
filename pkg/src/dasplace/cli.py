"""Command-line entry point.

Configuration is a single JSON file (every key optional) overridden by flags.
Human units at this boundary: meters, GHz, dBm, dBi.

    dasplace optimize --n 3 --coupling on --out out/opt
    dasplace compare --out out/fig4
    dasplace heatmap --battery --out out/fig5
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from . import experiments as ex
from . import export
from .linkbudget import (
    Combining,
    InfeasibleCoverageError,
    LinkModel,
    dbm_to_mw,
    mw_to_dbm,
    required_tx_power,
)
from .optimizer import SearchConfig, line_search, write_trace_csv
from .radiation import DEFAULT_PATCH_EXPONENT, DEFAULT_PATCH_PEAK_DBI, ArraySpec, ElementPattern
from .scenario import RegionSpec, centralized_placement, symmetric_placement

log = logging.getLogger("dasplace")

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_FREQUENCY_GHZ = 2.6
DEFAULT_WAVELENGTH_M = 0.12
# allowed relative disagreement between an explicit wavelength and frequency
WAVELENGTH_TOLERANCE = 0.05

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    edge_length_m: float = 400.0
    grid_spacing_m: float = 1.0
    frequency_ghz: Optional[float] = None
    wavelength_m: Optional[float] = None
    distributed_elements: int = 32
    centralized_elements: int = 128
    pattern: str = "patch"
    peak_gain_dbi: float = DEFAULT_PATCH_PEAK_DBI
    power_exponent: float = DEFAULT_PATCH_EXPONENT
    coupling: bool = True
    combining: str = "noncoherent"
    pathloss_exponent: Optional[float] = None
    pathloss_exponents: tuple = ex.DEFAULT_EXPONENTS
    farfield_m: float = 3.0
    required_rx_power_dbm: float = -60.0
    coverage_fraction: float = 0.98
    resolution_m: float = 1.0
    total_shift_m: Optional[float] = None
    offset_m: Optional[float] = None
    system: str = "distributed"
    pattern_step_deg: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pathloss_exponents"] = list(self.pathloss_exponents)
        return d

    # model builders -------------------------------------------------------

    def region(self) -> RegionSpec:
        return RegionSpec(self.edge_length_m, self.grid_spacing_m)

    def element(self) -> ElementPattern:
        if self.pattern == "isotropic":
            return ElementPattern.isotropic()
        return self.patch()

    def patch(self) -> ElementPattern:
        return ElementPattern.cosine_power(self.peak_gain_dbi, self.power_exponent)

    def model(self, n: float) -> LinkModel:
        return LinkModel(
            wavelength_m=self.wavelength_m,
            pathloss_exponent=n,
            farfield_m=self.farfield_m,
            required_rx_power_mw=float(dbm_to_mw(self.required_rx_power_dbm)),
            combining=Combining(self.combining),
            coverage_fraction=self.coverage_fraction,
        )

    def search(self) -> SearchConfig:
        return SearchConfig(self.resolution_m, self.total_shift_m)

    def settings(self, workers: int = 1) -> ex.Settings:
        return ex.Settings(
            grid_spacing_m=self.grid_spacing_m,
            wavelength_m=self.wavelength_m,
            farfield_m=self.farfield_m,
            required_rx_power_mw=float(dbm_to_mw(self.required_rx_power_dbm)),
            coverage_fraction=self.coverage_fraction,
            distributed_elements=self.distributed_elements,
            centralized_elements=self.centralized_elements,
            patch=self.patch(),
            search=self.search(),
            workers=workers,
        )


_NUMBER = (int, float)
_CHOICES = {
    "pattern": ("patch", "isotropic"),
    "combining": ("coherent", "noncoherent"),
    "system": ("distributed", "centralized"),
}
_POSITIVE = {"edge_length_m", "grid_spacing_m", "frequency_ghz", "wavelength_m", "farfield_m",
             "resolution_m", "total_shift_m", "pattern_step_deg"}
_INTEGERS = {"distributed_elements", "centralized_elements"}
_DBM = re.compile(r"^\s*([-+−]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*(dBm)?\s*$")


def _parse_dbm(value) -> float:
    if isinstance(value, bool):
        raise ConfigError("required_rx_power_dbm: expected a number or '<x> dBm'")
    if isinstance(value, _NUMBER):
        return float(value)
    if isinstance(value, str):
        m = _DBM.match(value)
        if m:
            return float(m.group(1).replace("−", "-"))
    raise ConfigError(f"required_rx_power_dbm: cannot parse {value!r} as dBm")


def _check_field(name: str, value):
    if value is None:
        if name in ("frequency_ghz", "wavelength_m", "pathloss_exponent", "total_shift_m", "offset_m"):
            return None
        raise ConfigError(f"{name}: must not be null")
    if name == "required_rx_power_dbm":
        return _parse_dbm(value)
    if name in _CHOICES:
        if value not in _CHOICES[name]:
            raise ConfigError(f"{name}: expected one of {', '.join(_CHOICES[name])}, got {value!r}")
        return value
    if name == "coupling":
        if not isinstance(value, bool):
            raise ConfigError("coupling: expected true or false")
        return value
    if name == "pathloss_exponents":
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError("pathloss_exponents: expected a nonempty list of numbers")
        return tuple(_check_number(name, v, minimum=2.0) for v in value)
    if name in _INTEGERS:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigError(f"{name}: expected a positive integer")
        return value
    if name == "pathloss_exponent":
        return _check_number(name, value, minimum=2.0)
    if name == "coverage_fraction":
        v = _check_number(name, value)
        if not 0 < v <= 1:
            raise ConfigError("coverage_fraction: must be in (0, 1]")
        return v
    if name == "offset_m":
        return _check_number(name, value, minimum=0.0)
    v = _check_number(name, value)
    if name in _POSITIVE and not v > 0:
        raise ConfigError(f"{name}: must be positive")
    return v


def _check_number(name, value, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, _NUMBER) or not math.isfinite(value):
        raise ConfigError(f"{name}: expected a finite number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name}: must be >= {minimum}")
    return float(value)


def parse_config(raw: Optional[dict] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Validate a config mapping, apply ``overrides`` and resolve defaults.

    Unknown keys are rejected. The wavelength is used as given; it is derived
    from the frequency only when absent, and a wavelength/frequency pair that
    disagrees by more than 5 % is an error.
    """
    raw = dict(raw or {})
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {k: _check_field(k, v) for k, v in raw.items()}

    freq, lam = values.get("frequency_ghz"), values.get("wavelength_m")
    if lam is None and freq is None:
        freq, lam = DEFAULT_FREQUENCY_GHZ, DEFAULT_WAVELENGTH_M
    elif lam is None:
        lam = SPEED_OF_LIGHT / (freq * 1e9)
    elif freq is None:
        freq = SPEED_OF_LIGHT / lam / 1e9
    else:
        implied = SPEED_OF_LIGHT / (freq * 1e9)
        if abs(lam - implied) / lam > WAVELENGTH_TOLERANCE:
            raise ConfigError(
                f"wavelength_m: {lam} disagrees with frequency_ghz {freq} (implies {implied:.4f} m)"
            )
    values["frequency_ghz"], values["wavelength_m"] = freq, lam

    cfg = RunConfig(**values)
    if cfg.grid_spacing_m > cfg.edge_length_m:
        raise ConfigError("grid_spacing_m: must not exceed edge_length_m")
    if cfg.offset_m is not None and cfg.offset_m > cfg.edge_length_m:
        raise ConfigError("offset_m: must lie in [0, edge_length_m]")
    if cfg.total_shift_m is not None and cfg.total_shift_m < cfg.resolution_m:
        raise ConfigError("total_shift_m: must be >= resolution_m")
    if cfg.power_exponent < 0:
        raise ConfigError("power_exponent: must be nonnegative")
    if cfg.coverage_fraction * cfg.region().size < 1:
        raise ConfigError("coverage_fraction: leaves no location to cover")
    return cfg


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    return parse_config(raw, overrides)


# ---------------------------------------------------------------------------
# subcommands


def _finish(out: Path, cfg: RunConfig, command: str, artifacts, extra=None):
    payload = {"subcommand": command, "config": cfg.to_dict()}
    payload.update(extra or {})
    existing = out / "manifest.json"
    if existing.exists():
        # experiments write their own manifest; fold it in
        inner = json.loads(existing.read_text())
        artifacts = sorted(set(map(str, artifacts)) | {str(out / k) for k in inner.pop("artifacts", {})})
        payload["experiment"] = inner
    export.write_manifest(out, payload, artifacts)


def _single_exponent(cfg: RunConfig, default: float) -> float:
    return cfg.pathloss_exponent if cfg.pathloss_exponent is not None else default


def _placement(cfg: RunConfig, region: RegionSpec):
    if cfg.system == "centralized":
        return centralized_placement(region), cfg.centralized_elements
    offset = cfg.offset_m if cfg.offset_m is not None else region.edge_length_m / 2
    return symmetric_placement(region, offset), cfg.distributed_elements


def cmd_evaluate(cfg: RunConfig, out: Path, threads: int):
    region = cfg.region()
    placement, m = _placement(cfg, region)
    n = _single_exponent(cfg, 2.0)
    res = required_tx_power(placement, ArraySpec(m, cfg.element(), cfg.coupling), region, cfg.model(n))
    total = len(placement) * res.required_tx_power_mw
    summary = {
        "system": cfg.system,
        "pathloss_exponent": n,
        "corner_offset_m": placement.corner_offset_m,
        "ratio": placement.ratio,
        "tx_power_per_ap_dBm": res.required_tx_power_dbm,
        "total_tx_power_dBm": float(mw_to_dbm(total)),
        "limiting_location": list(res.limiting_location),
        "dropped_locations": int(res.dropped_indices.size),
    }
    path = out / "evaluate.json"
    export.write_json(path, summary)
    log.info("P_T per AP %.3f dBm (total %.3f dBm)", summary["tx_power_per_ap_dBm"], summary["total_tx_power_dBm"])
    return [path]


def cmd_optimize(cfg: RunConfig, out: Path, threads: int):
    region = cfg.region()
    n = _single_exponent(cfg, 2.0)
    spec = ArraySpec(cfg.distributed_elements, cfg.element(), cfg.coupling)
    res = line_search(region, spec, cfg.model(n), cfg.search(), workers=threads)
    trace = out / "trace.csv"
    write_trace_csv(trace, res, region.edge_length_m)
    summary = out / "summary.json"
    export.write_json(summary, {
        "pathloss_exponent": n,
        "best_offset_m": res.best_offset_m,
        "best_ratio": res.best_ratio,
        "tx_power_per_ap_dBm": res.best_tx_power_dbm,
        "total_tx_power_dBm": float(mw_to_dbm(4 * res.best_tx_power_mw)),
        "candidates": len(res.trace),
    })
    log.info("best ratio %.4f at %.3f dBm per AP", res.best_ratio, res.best_tx_power_dbm)
    return [trace, summary]


def cmd_compare(cfg: RunConfig, out: Path, threads: int):
    ex.run_comparison(cfg.pathloss_exponents, cfg.settings(threads), cfg.edge_length_m, out_dir=out)
    return [out / "comparison.csv"]


def cmd_sweep(cfg: RunConfig, out: Path, threads: int):
    ex.run_factor_sweep(cfg.pathloss_exponents, cfg.settings(threads), out_dir=out)
    return [out / "factor_sweep.csv"]


def cmd_heatmap(cfg: RunConfig, out: Path, threads: int, battery: bool = False):
    if battery:
        results = ex.run_heatmaps(cfg.settings(threads), cfg.edge_length_m, out_dir=out)
        return [f for r in results for f in r.files]
    region = cfg.region()
    placement, m = _placement(cfg, region)
    n = _single_exponent(cfg, 2.0)
    res = ex.heatmap("heatmap", region, placement, ArraySpec(m, cfg.element(), cfg.coupling),
                     cfg.model(n), out_dir=out)
    return res.files


def cmd_contributors(cfg: RunConfig, out: Path, threads: int):
    settings = replace(cfg.settings(threads), patch=cfg.element())
    results = ex.run_contributor_maps(_single_exponent(cfg, 3.0), settings, cfg.edge_length_m, out_dir=out)
    return [f for r in results.values() for f in r.files]


def cmd_pattern(cfg: RunConfig, out: Path, threads: int):
    settings = replace(cfg.settings(threads), patch=cfg.element())
    ex.run_pattern_table(settings, cfg.pattern_step_deg, out_dir=out)
    return sorted(out.glob("*.csv"))


COMMANDS = {
    "evaluate": (cmd_evaluate, "required transmit power for one placement"),
    "optimize": (cmd_optimize, "line search for the best corner offset"),
    "compare": (cmd_compare, "C-mMIMO vs D-mMIMO over path-loss exponents"),
    "sweep": (cmd_sweep, "six-scenario factor sweep"),
    "heatmap": (cmd_heatmap, "received-power map and below-threshold mask"),
    "contributors": (cmd_contributors, "major signal contributor maps"),
    "pattern": (cmd_pattern, "embedded element gain table"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for candidate evaluation")
    common.add_argument("--offset", type=float, help="corner offset D in meters")
    common.add_argument("--n", type=float, nargs="+", help="path-loss exponent(s)")
    common.add_argument("--coupling", choices=["on", "off"])
    common.add_argument("--combining", choices=["coherent", "noncoherent"])
    common.add_argument("--coverage", type=float, help="coverage fraction in (0, 1]")
    common.add_argument("--resolution", type=float, help="line-search step in meters")
    common.add_argument("--system", choices=["distributed", "centralized"])
    common.add_argument("--pattern", choices=["patch", "isotropic"])
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dasplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "heatmap":
            p.add_argument("--battery", action="store_true",
                           help="render both reference C-mMIMO maps instead of the configured one")
    return parser


def _overrides(args) -> dict:
    o = {
        "offset_m": args.offset,
        "combining": args.combining,
        "coverage_fraction": args.coverage,
        "resolution_m": args.resolution,
        "system": args.system,
        "pattern": args.pattern,
    }
    if args.coupling is not None:
        o["coupling"] = args.coupling == "on"
    if args.n:
        o["pathloss_exponent"] = args.n[0]
        o["pathloss_exponents"] = list(args.n)
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").unlink(missing_ok=True)
    fn = COMMANDS[args.command][0]
    kwargs = {"battery": args.battery} if args.command == "heatmap" else {}
    try:
        artifacts = fn(cfg, out, args.threads, **kwargs)
    except InfeasibleCoverageError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _finish(out, cfg, args.command, artifacts)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
