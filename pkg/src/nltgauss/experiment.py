"""Declarative sweep runner: YAML config in, fixed-schema CSV (or JSON) out."""

from __future__ import annotations

import copy
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import distributions as dist
from . import nonlinearities as nl
from .expectations import McSettings, QuadratureSettings
from .gains import GainSet, Scenario, gains_analytic, gains_empirical, split_power
from .metrics import metric_set, mutual_information_histogram

COLUMNS = (
    "sweep_variable",
    "sweep_value",
    "g",
    "engine",
    "k_y",
    "k_y_se",
    "k_x",
    "k_x_se",
    "k_n",
    "k_n_se",
    "e_g2",
    "snr_x",
    "snr_y",
    "mse",
    "mse_u",
    "c_snr_x",
    "c_snr_y",
    "c_mse",
    "c_awgn",
    "mi_hist",
    "flags",
)
NA = "NA"
SWEEP_VARIABLES = ("rho_p", "snr_db", "y_th")
ENGINES = ("empirical", "analytic")
OUT_DIR_ENV = "NLTGAUSS_OUT_DIR"


class ConfigError(ValueError):
    """Invalid experiment config; ``where`` names the offending field or line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    raw: dict
    source: dict
    noise: dict
    correlation: float
    g: tuple[dict, ...]
    variable: str
    grid: tuple[float, ...]
    total_power: float = 10.0
    rho_p: float = 0.5
    source_variance: float = 1.0
    engine: str = "empirical"
    mc: McSettings = field(default_factory=McSettings)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    mi_histogram: bool = False
    mi_samples: int = 10**7
    mi_bins: int = 512
    mi_range: float = 8.0
    workers: int = 1
    csv_name: str = ""
    plot_name: str | None = None
    plot_kind: str = "gains"

    def with_overrides(self, seed: int | None = None, samples: int | None = None) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        eng = raw.setdefault("engine", {})
        if seed is not None:
            eng["seed"] = int(seed)
        if samples is not None:
            eng["samples"] = int(samples)
        return parse_config(raw)


def _get(d: dict, key: str, where: str, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}", "missing required field")
        return default
    v = d[key]
    if kind is not None:
        try:
            v = kind(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.{key}", f"expected {kind.__name__}, got {v!r}") from exc
    return v


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed YAML mapping and build an :class:`ExperimentConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    name = str(raw.get("name", "experiment"))
    sc = _get(raw, "scenario", "<root>")
    if not isinstance(sc, dict):
        raise ConfigError("scenario", "must be a mapping")
    source = _get(sc, "source", "scenario")
    noise = _get(sc, "noise", "scenario")
    for label, frag in (("scenario.source", source), ("scenario.noise", noise)):
        if not isinstance(frag, dict) or "kind" not in frag:
            raise ConfigError(label, "must be a mapping with a 'kind'")
    g = sc.get("g")
    if isinstance(g, dict):
        g = [g]
    if not g or not all(isinstance(x, dict) and "kind" in x for x in g):
        raise ConfigError("scenario.g", "must be a nonlinearity mapping or a non-empty list of them")
    correlation = _get(sc, "correlation", "scenario", float, 0.0)

    sw = _get(raw, "sweep", "<root>")
    variable = _get(sw, "variable", "sweep", str)
    if variable not in SWEEP_VARIABLES:
        raise ConfigError("sweep.variable", f"must be one of {SWEEP_VARIABLES}, got {variable!r}")
    grid = _get(sw, "grid", "sweep")
    try:
        grid = tuple(float(v) for v in grid)
    except (TypeError, ValueError) as exc:
        raise ConfigError("sweep.grid", "must be a list of numbers") from exc
    if not grid:
        raise ConfigError("sweep.grid", "must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep.grid", "must be strictly increasing")

    eng = raw.get("engine", {}) or {}
    engine = _get(eng, "gains", "engine", str, "empirical")
    if engine not in ENGINES:
        raise ConfigError("engine.gains", f"must be one of {ENGINES}")
    try:
        mc = McSettings(
            n_samples=_get(eng, "samples", "engine", int, 10**6),
            seed=_get(eng, "seed", "engine", int, 0),
            n_batches=_get(eng, "batches", "engine", int, 100),
        )
        quad = QuadratureSettings(relative_tolerance=_get(eng, "relative_tolerance", "engine", float, 1e-10))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("engine", str(exc)) from exc

    out = raw.get("output", {}) or {}
    plot_kind = _get(out, "plot_kind", "output", str, "gains")
    if plot_kind not in ("gains", "capacity"):
        raise ConfigError("output.plot_kind", "must be 'gains' or 'capacity'")
    return ExperimentConfig(
        name=name,
        raw=raw,
        source=source,
        noise=noise,
        correlation=correlation,
        g=tuple(g),
        variable=variable,
        grid=grid,
        total_power=_get(sc, "total_power", "scenario", float, 10.0),
        rho_p=_get(sc, "rho_p", "scenario", float, 0.5),
        source_variance=_get(sc, "source_variance", "scenario", float, 1.0),
        engine=engine,
        mc=mc,
        quadrature=quad,
        mi_histogram=bool(eng.get("mi_histogram", False)),
        mi_samples=_get(eng, "mi_samples", "engine", int, 10**7),
        mi_bins=_get(eng, "mi_bins", "engine", int, 512),
        mi_range=_get(eng, "mi_range", "engine", float, 8.0),
        workers=max(1, _get(eng, "workers", "engine", int, 1)),
        csv_name=str(out.get("csv", f"{name}.csv")),
        plot_name=out.get("plot"),
        plot_kind=plot_kind,
    )


def load_config(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<yaml>"
        raise ConfigError(where, str(exc.problem)) from exc
    return parse_config(raw)


def preset_names() -> list[str]:
    root = resources.files("nltgauss") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = resources.files("nltgauss") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text(encoding="utf-8")


def resolve_config(ref: str) -> ExperimentConfig:
    """``ref`` is a YAML file path or a shipped preset name."""
    p = Path(ref)
    if p.is_file():
        return load_config(p.read_text(encoding="utf-8"))
    return load_config(preset_text(ref))


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


# --- scenario construction -----------------------------------------------------


def _point_powers(cfg: ExperimentConfig, value: float) -> tuple[float, float]:
    if cfg.variable == "rho_p":
        return split_power(cfg.total_power, value, cfg.correlation)
    if cfg.variable == "snr_db":
        return cfg.source_variance, cfg.source_variance / 10.0 ** (value / 10.0)
    return split_power(cfg.total_power, cfg.rho_p, cfg.correlation)


def _build_g(frag: dict, cfg: ExperimentConfig, value: float, source, noise, flags: list[str]):
    frag = dict(frag)
    if cfg.variable == "y_th" and frag["kind"] in ("soft_limiter", "blanker"):
        frag["y_th"] = value

    def resolve(what: str):
        mix = dist.as_mixture(noise)
        if not isinstance(source, dist.Gaussian) or mix is None:
            raise ValueError(f"{what} needs a Gaussian source and Gaussian or mixture noise")
        if what == "mixture_mmse":
            return nl.mixture_mmse(source.variance, mix)
        search = nl.optimal_blanker_threshold(source.variance, mix, cfg.quadrature)
        if search.degraded:
            flags.append("threshold_degraded")
        return nl.Blanker(search.threshold)

    return nl.from_config(frag, resolve)


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0])


@dataclass
class ResultRow:
    sweep_variable: str
    sweep_value: float
    g: str
    engine: str
    gains: GainSet | None = None
    metrics: Any = None
    mi_hist: float | None = None
    flags: list[str] = field(default_factory=list)

    def values(self) -> dict[str, Any]:
        out: dict[str, Any] = {c: None for c in COLUMNS}
        out.update(sweep_variable=self.sweep_variable, sweep_value=self.sweep_value, g=self.g, engine=self.engine)
        if self.gains is not None:
            for k in ("y", "x", "n"):
                e = getattr(self.gains, f"k_{k}")
                out[f"k_{k}"] = e.value
                out[f"k_{k}_se"] = e.std_error
        if self.metrics is not None:
            m = self.metrics.to_bits()
            for c in ("e_g2", "snr_x", "snr_y", "mse", "mse_u", "c_snr_x", "c_snr_y", "c_mse", "c_awgn"):
                out[c] = getattr(m, c)
        out["mi_hist"] = self.mi_hist
        out["flags"] = ";".join(self.flags)
        return out


def _run_point(cfg: ExperimentConfig, index: int, value: float) -> list[ResultRow]:
    rows: list[ResultRow] = []
    try:
        px, pn = _point_powers(cfg, value)
        source = dist.from_config(cfg.source, px)
        noise = dist.from_config(cfg.noise, pn)
    except Exception as exc:  # engine failures are recorded per row
        return [ResultRow(cfg.variable, value, "-", cfg.engine, flags=[f"error:{exc}"])]
    seed = _point_seed(cfg.mc.seed, index)
    mc = McSettings(cfg.mc.n_samples, seed, cfg.mc.n_batches)

    mi_bits = None
    mi_flags: list[str] = []
    if cfg.mi_histogram:
        try:
            sc0 = Scenario(source, noise, nl.Identity(), cfg.correlation)
            est = mutual_information_histogram(
                sc0, cfg.mi_bins, cfg.mi_range, McSettings(cfg.mi_samples, seed, cfg.mc.n_batches)
            )
            mi_bits = est.corrected / math.log(2.0)
        except Exception as exc:
            mi_flags.append(f"mi_error:{exc}")

    for frag in cfg.g:
        flags = list(mi_flags)
        row = ResultRow(cfg.variable, value, str(frag.get("kind")), cfg.engine, mi_hist=mi_bits, flags=flags)
        try:
            g = _build_g(frag, cfg, value, source, noise, flags)
            row.g = nl.label(g)
            sc = Scenario(source, noise, g, cfg.correlation)
            if cfg.engine == "analytic":
                gs = gains_analytic(sc, cfg.quadrature)
            else:
                gs = gains_empirical(sc, mc)
            row.gains = gs
            row.metrics = metric_set(sc, gs)
            if row.metrics.snr_x is None:
                flags.append("snr_x_degenerate")
            if row.metrics.mse_u is None:
                flags.append("k_x_degenerate")
        except Exception as exc:
            flags.append(f"error:{type(exc).__name__}:{exc}")
        rows.append(row)
    return rows


def run_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """Rows in grid order (then ``g`` order), independent of ``workers``."""
    jobs = list(enumerate(cfg.grid))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(lambda iv: _run_point(cfg, *iv), jobs))
    else:
        chunks = [_run_point(cfg, i, v) for i, v in jobs]
    return [r for chunk in chunks for r in chunk]


# --- serialization -----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return NA
    if isinstance(v, float):
        return NA if not math.isfinite(v) else repr(v)
    return str(v).replace(",", ";").replace("\n", " ")


def header_lines(cfg: ExperimentConfig) -> list[str]:
    from . import __version__

    dumped = yaml.safe_dump(cfg.raw, sort_keys=False, default_flow_style=None, width=10**6).rstrip("\n")
    lines = [f"nltgauss {__version__}", f"experiment: {cfg.name}", "capacity unit: bits", "config:"]
    lines += ["  " + ln for ln in dumped.splitlines()]
    return ["# " + ln for ln in lines]


def to_csv(cfg: ExperimentConfig, rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    for ln in header_lines(cfg):
        buf.write(ln + "\n")
    buf.write(",".join(COLUMNS) + "\n")
    for r in rows:
        vals = r.values()
        buf.write(",".join(_fmt(vals[c]) for c in COLUMNS) + "\n")
    return buf.getvalue()


def to_json(cfg: ExperimentConfig, rows: list[ResultRow]) -> str:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v

    payload = {
        "experiment": cfg.name,
        "config": cfg.raw,
        "capacity_unit": "bits",
        "columns": list(COLUMNS),
        "rows": [{c: clean(v) for c, v in r.values().items()} for r in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Parse a sweep CSV; returns header comments and rows keyed by column."""
    comments, rows = [], []
    header = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line)
                continue
            if not line:
                continue
            cells = line.split(",")
            if header is None:
                if tuple(cells) != COLUMNS:
                    raise ConfigError(f"{path}:{lineno}", "column header does not match the sweep schema")
                header = cells
                continue
            if len(cells) != len(COLUMNS):
                raise ConfigError(f"{path}:{lineno}", f"expected {len(COLUMNS)} cells, got {len(cells)}")
            rows.append(dict(zip(COLUMNS, cells)))
    if header is None:
        raise ConfigError(str(path), "no column header found")
    return comments, rows
