"""Experiment configuration, orchestration, CSV output and the ``cascade-fade`` CLI.

Config files are UTF-8, one ``key=value`` per line, ``#`` starts a comment.
A comma-separated value on a scalar key is a sweep; the cross product of all
swept keys defines the runs. ``levels_db`` and ``outputs`` are lists, not
sweeps.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import itertools
import math
import re
import subprocess
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import click
import numpy as np

from . import __version__
from . import estimators as est
from . import theory as th
from .channel import (ComplexSeries, ConfigError, LosGeometry, SimulatorConfig, SimulatorKind,
                      draw_realization, generate_series)

__all__ = [
    "ConfigParseError",
    "ExperimentSpec",
    "CsvTable",
    "OUTPUTS",
    "parse_config",
    "parse_sweep",
    "run_experiment",
    "run_sweep",
    "write_csv",
    "read_csv",
    "benchmark_mse",
    "benchmark_timing",
    "main",
]

OUTPUTS = ("pdf", "cdf", "autocorr", "crosscorr", "sqenv", "lcr", "afd", "timeavg_var",
           "complex_autocorr")

# Default geometry for kinds C/D: both terminals at 10 m/s, wavelength
# 0.1 m, perpendicular motion. Gives f3 = 100 sqrt(2) Hz and phi3 = 3 pi/4.
DEFAULT_GEOMETRY = dict(v1=10.0, v2=10.0, phi1=math.pi / 2, phi12=math.pi / 2, wavelength=0.1)

_INT_KEYS = {"N", "M", "Q", "P", "seed", "trials", "count", "bins", "lag_points"}
_FLOAT_KEYS = {"f1", "f2", "K", "f3", "phi3", "v1", "v2", "phi1", "phi12", "lambda", "ts",
               "z_max", "lags_max_f1tau"}
_LIST_KEYS = {"levels_db", "outputs"}
_OTHER_KEYS = {"kind", "out_dir", "emit_theory"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _OTHER_KEYS
_LOS_KEYS = ("K", "f3", "phi3", "v1", "v2", "phi1", "phi12", "lambda")
_GEOMETRY_KEYS = ("v1", "v2", "phi1", "phi12", "lambda")

DEFAULT_LEVELS_DB = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0)
# timeavg_var needs many realizations; used when trials < 2.
DEFAULT_VARIANCE_TRIALS = 200


class ConfigParseError(ValueError):
    """Config text rejected; ``line`` is 1-based (0 if not tied to a line)."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    simulator: SimulatorConfig
    estimator: est.EstimatorSettings
    outputs: tuple[str, ...] = ("autocorr",)
    out_dir: Path = Path(".")
    emit_theory: bool = True
    ts: float = 1e-5
    count: int = 1_000_000
    label: str = ""

    def __post_init__(self):
        if not self.outputs:
            raise ConfigError("at least one output must be selected")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError(f"unknown output(s): {', '.join(bad)}")
        if not self.ts > 0 or self.count < 2:
            raise ConfigError("ts must be > 0 and count >= 2")

    @property
    def f1(self) -> float:
        return self.simulator.f1

    def with_seed(self, seed: int) -> "ExperimentSpec":
        return dataclasses.replace(self, simulator=dataclasses.replace(self.simulator, seed=seed))

    def with_out_dir(self, out_dir) -> "ExperimentSpec":
        return dataclasses.replace(self, out_dir=Path(out_dir))


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

_PI_RE = re.compile(r"^([+-]?[0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?$")


def _parse_float(token: str) -> float:
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        match = _PI_RE.match(token)
        if not match:
            raise
        mult_s = match.group(1)
        mult = -1.0 if mult_s == "-" else 1.0 if mult_s in ("", "+") else float(mult_s)
        value = mult * math.pi / (float(match.group(2)) if match.group(2) else 1.0)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {token!r}")
    return value


def _parse_int(token: str) -> int:
    token = token.strip()
    value = float(token)
    if not value.is_integer():
        raise ValueError(f"{token!r} is not an integer")
    return int(value)


def _parse_bool(token: str) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{token!r} is not a boolean")


def _convert(key: str, token: str):
    if key in _INT_KEYS:
        return _parse_int(token)
    if key in _FLOAT_KEYS:
        return _parse_float(token)
    if key == "emit_theory":
        return _parse_bool(token)
    if key == "kind":
        kind = token.strip().upper()
        if kind not in ("A", "B", "C", "D"):
            raise ValueError(f"kind must be one of A, B, C, D, got {token!r}")
        return kind
    return token.strip()


def _tokenize(text: str):
    """Yield (line_no, key, raw_value) for every non-blank line."""
    seen = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(line_no, f"expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigParseError(line_no, f"unknown key {key!r}")
        if key in seen:
            raise ConfigParseError(line_no, f"duplicate key {key!r} (first on line {seen[key]})")
        if value == "":
            raise ConfigParseError(line_no, f"empty value for {key!r}")
        seen[key] = line_no
        yield line_no, key, value


def _parse_entries(text: str):
    """Returns {key: (line, [values], raw tokens)} preserving file order."""
    entries = {}
    for line_no, key, value in _tokenize(text):
        tokens = [t.strip() for t in value.split(",")]
        if any(t == "" for t in tokens):
            raise ConfigParseError(line_no, f"empty list element in {key!r}")
        try:
            if key == "levels_db":
                values = [tuple(_parse_float(t) for t in tokens)]
            elif key == "outputs":
                outs = tuple(t.lower() for t in tokens)
                bad = [o for o in outs if o not in OUTPUTS]
                if bad:
                    raise ValueError(f"unknown output(s) {', '.join(bad)}; choose from {', '.join(OUTPUTS)}")
                values = [outs]
            else:
                values = [_convert(key, t) for t in tokens]
        except ValueError as exc:
            raise ConfigParseError(line_no, f"malformed value for {key!r}: {exc}") from None
        entries[key] = (line_no, values, tokens)
    return entries


def _check_ranges(point: dict, lines: dict):
    def fail(key, msg):
        raise ConfigParseError(lines.get(key, 0), msg)

    for key in ("N", "M", "Q", "P", "trials", "lag_points"):
        if key in point and point[key] < 1:
            fail(key, f"{key} must be >= 1")
    if "count" in point and point["count"] < 2:
        fail("count", "count must be >= 2")
    if "bins" in point and point["bins"] < 2:
        fail("bins", "bins must be >= 2")
    for key in ("f1", "f2", "ts", "z_max", "lags_max_f1tau", "lambda"):
        if key in point and not point[key] > 0:
            fail(key, f"{key} must be > 0")
    for key in ("K", "f3", "v1", "v2"):
        if key in point and point[key] < 0:
            fail(key, f"{key} must be >= 0")
    for key in ("phi1", "phi12"):
        if key in point and not -math.pi <= point[key] < math.pi:
            fail(key, f"{key} must lie in [-pi, pi)")


def _build_spec(point: dict, lines: dict, label: str) -> ExperimentSpec:
    kind = SimulatorKind(point.get("kind", "B"))
    _check_ranges(point, lines)
    if kind.uses_cosine_sums:
        for key in ("Q", "P"):
            if key in point:
                raise ConfigParseError(lines[key], f"{key} is the sinusoid count of kinds A/C; use N/M for kind {kind.value}")
        n_tx, n_rx = point.get("N", 16), point.get("M", 16)
    else:
        for key in ("N", "M"):
            if key in point:
                raise ConfigParseError(lines[key], f"{key} is the sinusoid count of kinds B/D; use Q/P for kind {kind.value}")
        n_tx, n_rx = point.get("Q", 16), point.get("P", 16)
    sim_kw = dict(kind=kind, n_tx=n_tx, n_rx=n_rx, f1=point.get("f1", 100.0),
                  f2=point.get("f2", 100.0), seed=point.get("seed", 0))
    if kind.has_los:
        sim_kw["k_factor"] = point.get("K", 0.0)
        if "f3" in point:
            for key in _GEOMETRY_KEYS:
                if key in point:
                    raise ConfigParseError(lines[key], f"{key} conflicts with an explicit f3")
            if "phi3" not in point:
                raise ConfigParseError(lines["f3"], "explicit f3 needs phi3")
            sim_kw["f3"] = point["f3"]
            sim_kw["phi3"] = point["phi3"]
        else:
            geom = dict(DEFAULT_GEOMETRY)
            for key in _GEOMETRY_KEYS:
                if key in point:
                    geom["wavelength" if key == "lambda" else key] = point[key]
            sim_kw["los"] = LosGeometry(**geom)
            if "phi3" in point:
                sim_kw["phi3"] = point["phi3"]
    else:
        for key in _LOS_KEYS:
            if key in point:
                raise ConfigParseError(lines[key], f"{key} is only valid for kinds C/D (kind is {kind.value})")
    try:
        simulator = SimulatorConfig(**sim_kw)
    except ConfigError as exc:
        line = min((lines[k] for k in ("phi3", "f3", "v1", "v2", "lambda", "kind") if k in lines), default=0)
        raise ConfigParseError(line, str(exc)) from None
    outputs = point.get("outputs", ("autocorr",))
    if "timeavg_var" in outputs and not kind.uses_cosine_sums:
        raise ConfigParseError(lines.get("outputs", 0), "timeavg_var needs kind B or D")
    f1 = simulator.f1
    z_max = point.get("z_max", 4.0 if kind.has_los else 6.0)
    ts = point.get("ts", 1e-5)
    count = point.get("count", 1_000_000)
    lags = est.default_lag_grid(f1, point.get("lags_max_f1tau", 10.0), point.get("lag_points", 512))
    if lags[-1] >= (count - 1) * ts:
        raise ConfigParseError(lines.get("lags_max_f1tau", lines.get("count", 0)),
                               "largest lag exceeds the series length")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", est.LagSnapWarning)
        try:
            _, lags = est.snap_lags(lags, ts)
        except est.EstimatorError as exc:
            raise ConfigParseError(lines.get("lag_points", 0), str(exc)) from None
    try:
        estimator = est.EstimatorSettings(
            lags=lags, trials=point.get("trials", 1), bins=point.get("bins", 100),
            bin_range=(0.0, z_max), levels_db=point.get("levels_db", DEFAULT_LEVELS_DB))
        return ExperimentSpec(simulator=simulator, estimator=estimator, outputs=tuple(outputs),
                              out_dir=Path(point.get("out_dir", ".")),
                              emit_theory=point.get("emit_theory", True), ts=ts, count=count,
                              label=label)
    except (ConfigError, est.EstimatorError) as exc:
        raise ConfigParseError(0, str(exc)) from None


def parse_sweep(text: str) -> list[ExperimentSpec]:
    """Parse config text into one spec per sweep point (cross product, file order)."""
    entries = _parse_entries(text)
    lines = {k: v[0] for k, v in entries.items()}
    swept = [k for k, (_, values, _) in entries.items() if len(values) > 1]
    axes = [list(zip(entries[k][1], entries[k][2])) for k in swept]
    specs = []
    for combo in itertools.product(*axes):
        point = {k: v[1][0] for k, v in entries.items()}
        label = ""
        for key, (value, raw) in zip(swept, combo):
            point[key] = value
            label += f"_{key}{raw}"
        specs.append(_build_spec(point, lines, label))
    return specs


def parse_config(text: str) -> ExperimentSpec:
    """Parse config text without sweeps into a validated spec."""
    specs = parse_sweep(text)
    if len(specs) != 1:
        raise ConfigParseError(0, f"config defines a sweep of {len(specs)} runs; use parse_sweep")
    return specs[0]


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


@dataclass
class CsvTable:
    metadata: dict
    columns: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def version_string() -> str:
    """``git describe`` of the source tree if available, else ``v<version>``."""
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def write_csv(path: Path, metadata: dict, columns: dict) -> Path:
    """Write ``#`` metadata lines, a header row and the columns.

    The ``generated`` timestamp line is the only line that changes between
    identical runs.
    """
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = {a.shape[0] for a in arrays}
    if len(length) != 1:
        raise ValueError("CSV columns must have equal length")
    buf = io.StringIO()
    buf.write(f"# cascade-fade {version_string()}\n")
    buf.write(f"# generated={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    for key, value in metadata.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*arrays):
        writer.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> CsvTable:
    """Read a CSV written by :func:`write_csv`. Empty cells become NaN."""
    metadata, body = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            content = line[1:].strip()
            if "=" in content:
                key, value = content.split("=", 1)
                metadata[key.strip()] = value.strip()
            else:
                metadata.setdefault("_banner", content)
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    columns = {}
    for j, name in enumerate(header):
        columns[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in data])
    return CsvTable(metadata, columns)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def nlos_params(cfg: SimulatorConfig) -> th.NlosStatParams:
    return th.NlosStatParams(cfg.f1, cfg.f2, cfg.n_tx, cfg.n_rx)


def los_params(cfg: SimulatorConfig) -> th.LosStatParams:
    f3, phi3 = cfg.resolved_los()
    return th.LosStatParams(nlos_params(cfg), cfg.k_factor, f3, phi3)


def simulate(spec: ExperimentSpec, workers: int = 1) -> list[ComplexSeries]:
    """Generate every trial of ``spec`` (trial order preserved)."""
    def one(i):
        return generate_series(draw_realization(spec.simulator, i), 0.0, spec.ts, spec.count)

    trials = range(spec.estimator.trials)
    if workers > 1 and spec.estimator.trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, trials))
    return [one(i) for i in trials]


def _metadata(spec: ExperimentSpec, statistic: str) -> dict:
    cfg = spec.simulator
    meta = {"statistic": statistic, "kind": cfg.kind.value, "n_tx": cfg.n_tx, "n_rx": cfg.n_rx,
            "f1": _fmt(cfg.f1), "f2": _fmt(cfg.f2)}
    if cfg.kind.has_los:
        f3, phi3 = cfg.resolved_los()
        meta.update(K=_fmt(cfg.k_factor), f3=_fmt(f3), phi3=_fmt(phi3))
    meta.update(seed=cfg.seed, trials=spec.estimator.trials, count=spec.count, ts=_fmt(spec.ts))
    return meta


def _lag_columns(spec, lags):
    return {"tau_s": lags, "f1_tau": spec.f1 * lags}


def _statistic_tables(spec: ExperimentSpec, series: list[ComplexSeries]):
    """Yield (statistic, metadata, columns) for every selected output."""
    cfg = spec.simulator
    los = cfg.kind.has_los
    lags = spec.estimator.lags
    nlos_p = nlos_params(cfg)
    los_p = los_params(cfg) if los else None
    theory = spec.emit_theory
    envelope = np.concatenate([s.envelope for s in series]) if (
        {"pdf", "cdf"} & set(spec.outputs)) else None

    for stat in spec.outputs:
        meta = _metadata(spec, stat)
        cols: dict = {}
        if stat == "pdf":
            dens = est.histogram_pdf(envelope, spec.estimator.bins, spec.estimator.bin_range)
            cols["z"] = dens.centers
            cols["empirical_pdf"] = dens.density
            meta["mass_outside"] = _fmt(dens.mass_outside)
            if theory:
                ref = th.envelope_pdf_los(dens.centers, cfg.k_factor) if los else th.envelope_pdf_nlos(dens.centers)
                cols["theory_pdf"] = ref
                cols["l1_contribution"] = np.abs(dens.density - ref) * dens.widths
                meta["l1_distance"] = _fmt(float(np.sum(cols["l1_contribution"])))
        elif stat == "cdf":
            z = np.linspace(0.0, spec.estimator.bin_range[1], 201)[1:]
            cols["z"] = z
            cols["empirical_cdf"] = est.empirical_cdf(envelope, z)
            if theory:
                cols["theory_cdf"] = th.envelope_cdf_los(z, cfg.k_factor) if los else th.envelope_cdf_nlos(z)
        elif stat == "autocorr":
            cols.update(_lag_columns(spec, lags))
            cols["empirical_cc"] = est.empirical_correlation(series, lags, "cc").values
            cols["empirical_ss"] = est.empirical_correlation(series, lags, "ss").values
            if theory:
                cols["theory"] = th.autocorr_iq_los(lags, los_p) if los else th.autocorr_iq_nlos(lags, nlos_p)
        elif stat == "crosscorr":
            # empirical_cs estimates E[c(t + tau) s(t)]
            cols.update(_lag_columns(spec, lags))
            cols["empirical_cs"] = est.empirical_correlation(series, lags, "sc").values
            cols["empirical_sc"] = est.empirical_correlation(series, lags, "cs").values
            if theory:
                if los:
                    cols["theory_cs"] = th.crosscorr_iq_los(lags, los_p, "cs")
                    cols["theory_sc"] = th.crosscorr_iq_los(lags, los_p, "sc")
                else:
                    cols["theory_cs"] = th.crosscorr_iq_nlos(lags)
                    cols["theory_sc"] = th.crosscorr_iq_nlos(lags)
        elif stat == "sqenv":
            cols.update(_lag_columns(spec, lags))
            cols["empirical"] = est.empirical_sq_env_corr(series, lags).values
            if theory:
                if los:
                    cols["theory"] = th.sq_env_autocorr_los(lags, los_p)
                    cols["theory_asymptotic"] = th.sq_env_autocorr_los(lags, los_p, asymptotic=True)
                else:
                    cols["theory"] = th.sq_env_autocorr_nlos(lags, nlos_p)
        elif stat == "complex_autocorr":
            cols.update(_lag_columns(spec, lags))
            emp = est.empirical_complex_autocorr(series, lags).values
            cols["empirical_re"] = emp.real
            cols["empirical_im"] = emp.imag
            if theory:
                ref = th.complex_autocorr_los(lags, los_p) if los else th.autocorr_iq_nlos(lags, nlos_p) + 0j
                cols["theory_re"] = np.real(ref)
                cols["theory_im"] = np.imag(ref)
        elif stat in ("lcr", "afd"):
            rho = np.array(spec.estimator.levels_db)
            levels = th.los_level(rho) if los else th.nlos_level(rho)
            stats = est.merge_level_stats(est.level_crossing_stats(s.envelope, s.ts, levels)
                                          for s in series)
            cols["rho_db"] = rho
            cols["level"] = levels
            if stat == "lcr":
                cols["up_crossings"] = np.array([s.up_crossings for s in stats])
                cols["empirical_lcr_over_f1"] = np.array([est.lcr_from_stats(s) / cfg.f1 for s in stats])
                if theory:
                    cols["theory_lcr_over_f1"] = np.array(
                        [(th.lcr_los(r, los_p) if los else th.lcr_nlos(r, cfg.f1, cfg.f2)) / cfg.f1
                         for r in levels])
            else:
                cols["completed_fades"] = np.array([s.completed_fades for s in stats])
                emp = []
                for s in stats:
                    try:
                        emp.append(est.afd_from_stats(s) * cfg.f1)
                    except est.InsufficientDataError:
                        emp.append(np.nan)
                cols["empirical_afd_times_f1"] = np.array(emp)
                if theory:
                    ref = []
                    for r in levels:
                        try:
                            ref.append((th.afd_los(r, los_p) if los else th.afd_nlos(r, cfg.f1, cfg.f2)) * cfg.f1)
                        except OverflowError:
                            ref.append(np.nan)
                    cols["theory_afd_times_f1"] = np.array(ref)
        elif stat == "timeavg_var":
            n_real = spec.estimator.trials if spec.estimator.trials >= 2 else DEFAULT_VARIANCE_TRIALS
            meta["realizations"] = n_real
            cols.update(_lag_columns(spec, lags))
            cols["sample_var_cc"] = est.time_avg_variance(cfg, lags, n_real, "cc").values
            cols["sample_var_cs"] = est.time_avg_variance(cfg, lags, n_real, "cs").values
            if theory:
                var = (th.var_time_avg_autocorr_los(lags, los_p) if los
                       else th.var_time_avg_autocorr_nlos(lags, nlos_p))
                cols["closed_form_cc"] = var
        yield stat, meta, cols


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[Path]:
    """Simulate, estimate and write one CSV per selected statistic."""
    needs_series = set(spec.outputs) - {"timeavg_var"}
    series = simulate(spec, workers) if needs_series else []
    paths = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", est.LagSnapWarning)
        for stat, meta, cols in _statistic_tables(spec, series):
            paths.append(write_csv(spec.out_dir / f"{stat}{spec.label}.csv", meta, cols))
    return paths


def run_sweep(specs: Sequence[ExperimentSpec], workers: int = 1) -> list[Path]:
    """Run sweep points (concurrently if workers > 1); results in sweep order."""
    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_experiment, specs))
    else:
        results = [run_experiment(s, workers) for s in specs]
    return [p for paths in results for p in paths]


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

BENCHMARK_SIZES = (32, 50, 72, 98)


@dataclass
class MseRow:
    size: int
    additions: int
    mse_a: list = field(default_factory=list)
    mse_b: list = field(default_factory=list)

    @property
    def median_a(self) -> float:
        return float(np.median(self.mse_a))

    @property
    def median_b(self) -> float:
        return float(np.median(self.mse_b))


def one_trial_mse(kind: str, size: int, seed: int, lags=None, count: int = 1_000_000,
                  ts: float = 1e-5, f: float = 100.0) -> float:
    """MSE of the real part of the complex-envelope autocorrelation vs J0 J0."""
    lags = est.default_lag_grid(f) if lags is None else lags
    cfg = SimulatorConfig(kind=kind, n_tx=size, n_rx=size, f1=f, f2=f, seed=seed)
    s = generate_series(draw_realization(cfg, 0), 0.0, ts, count)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", est.LagSnapWarning)
        emp = est.empirical_complex_autocorr(s, lags)
    ref = th.CorrelationCurve(emp.lags, th.autocorr_iq_nlos(emp.lags, th.NlosStatParams(f, f, size, size)))
    return est.mse(th.CorrelationCurve(emp.lags, emp.values.real), ref)


def benchmark_mse(sizes: Sequence[int] = BENCHMARK_SIZES, seeds: Iterable[int] = range(10),
                  count: int = 1_000_000, ts: float = 1e-5, max_f1tau: float = 10.0,
                  lag_points: int = 512, workers: int = 1) -> list[MseRow]:
    """Median one-trial autocorrelation MSE of kinds A and B per sinusoid count."""
    seeds = list(seeds)
    lags = est.default_lag_grid(100.0, max_f1tau, lag_points)
    jobs = [(kind, size, seed) for size in sizes for kind in ("A", "B") for seed in seeds]

    def run(job):
        return one_trial_mse(job[0], job[1], job[2], lags, count, ts)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, jobs))
    else:
        values = [run(j) for j in jobs]
    rows = {size: MseRow(size, 2 * (size + size)) for size in sizes}
    for (kind, size, _), v in zip(jobs, values):
        (rows[size].mse_a if kind == "A" else rows[size].mse_b).append(v)
    return [rows[s] for s in sizes]


def benchmark_timing(samples: int = 10_000_000, size: int = 8, chunk: int = 1_000_000) -> dict:
    """Wall time per generated sample for kinds A and B (chunked generation)."""
    out = {"samples": int(samples), "size": size}
    for kind in ("A", "B"):
        r = draw_realization(SimulatorConfig(kind=kind, n_tx=size, n_rx=size), 0)
        start = time.perf_counter()
        done = 0
        while done < samples:
            n = min(chunk, samples - done)
            generate_series(r, done * 1e-5, 1e-5, n)
            done += n
        out[f"ns_per_sample_{kind}"] = (time.perf_counter() - start) / samples * 1e9
    out["ratio_A_over_B"] = out["ns_per_sample_A"] / out["ns_per_sample_B"]
    return out


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


THEORY_STATISTICS = ("pdf", "cdf", "autocorr", "crosscorr", "sqenv", "complex_autocorr",
                     "lcr", "afd", "timeavg_var")


def theory_table(spec: ExperimentSpec, statistic: str) -> dict:
    """Closed-form curve for ``statistic`` on the spec's grids (no simulation)."""
    cfg = spec.simulator
    los = cfg.kind.has_los
    lags = spec.estimator.lags
    nlos_p = nlos_params(cfg)
    los_p = los_params(cfg) if los else None
    cols = {}
    if statistic in ("pdf", "cdf"):
        z = np.linspace(0.0, spec.estimator.bin_range[1], 201)
        cols["z"] = z
        if statistic == "pdf":
            cols["pdf"] = th.envelope_pdf_los(z, cfg.k_factor) if los else th.envelope_pdf_nlos(z)
        else:
            cols["cdf"] = th.envelope_cdf_los(z, cfg.k_factor) if los else th.envelope_cdf_nlos(z)
    elif statistic in ("lcr", "afd"):
        rho = np.array(spec.estimator.levels_db)
        levels = th.los_level(rho) if los else th.nlos_level(rho)
        cols["rho_db"] = rho
        cols["level"] = levels
        if statistic == "lcr":
            cols["lcr_over_f1"] = np.array(
                [(th.lcr_los(r, los_p) if los else th.lcr_nlos(r, cfg.f1, cfg.f2)) / cfg.f1 for r in levels])
        else:
            vals = []
            for r in levels:
                try:
                    vals.append((th.afd_los(r, los_p) if los else th.afd_nlos(r, cfg.f1, cfg.f2)) * cfg.f1)
                except OverflowError:
                    vals.append(np.nan)
            cols["afd_times_f1"] = np.array(vals)
    else:
        cols.update(_lag_columns(spec, lags))
        if statistic == "autocorr":
            cols["value"] = th.autocorr_iq_los(lags, los_p) if los else th.autocorr_iq_nlos(lags, nlos_p)
        elif statistic == "crosscorr":
            cols["value"] = th.crosscorr_iq_los(lags, los_p) if los else th.crosscorr_iq_nlos(lags)
        elif statistic == "sqenv":
            cols["value"] = th.sq_env_autocorr_los(lags, los_p) if los else th.sq_env_autocorr_nlos(lags, nlos_p)
        elif statistic == "complex_autocorr":
            ref = th.complex_autocorr_los(lags, los_p) if los else th.autocorr_iq_nlos(lags, nlos_p) + 0j
            cols["value_re"] = np.real(ref)
            cols["value_im"] = np.imag(ref)
        elif statistic == "timeavg_var":
            cols["value"] = (th.var_time_avg_autocorr_los(lags, los_p) if los
                             else th.var_time_avg_autocorr_nlos(lags, nlos_p))
        else:
            raise click.BadParameter(f"unknown statistic {statistic!r}")
    return cols


@click.group()
@click.version_option(__version__, prog_name="cascade-fade")
def main():
    """Cascaded Rayleigh sum-of-sinusoids simulators and their statistics."""


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Concurrent trials / sweep points.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Override out_dir (relative paths in the config resolve against the config's folder).")
def run(config: Path, workers: int, seed, out_dir):
    """Run the experiment(s) described by CONFIG and write CSV files."""
    try:
        specs = parse_sweep(config.read_text(encoding="utf-8"))
    except ConfigParseError as exc:
        raise click.ClickException(f"{config}: {exc}")
    except OSError as exc:
        raise click.ClickException(str(exc))
    resolved = []
    for s in specs:
        if seed is not None:
            s = s.with_seed(seed)
        if out_dir is not None:
            s = s.with_out_dir(out_dir)
        elif not s.out_dir.is_absolute():
            s = s.with_out_dir(config.parent / s.out_dir)
        resolved.append(s)
    try:
        paths = run_sweep(resolved, workers)
    except OSError as exc:
        raise click.ClickException(f"I/O failure: {exc}")
    for p in paths:
        click.echo(str(p))


@main.group()
def benchmark():
    """Reproducible benchmarks (MSE vs complexity, generation timing)."""


@benchmark.command("mse")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="First of ten consecutive seeds.")
@click.option("--seeds", "n_seeds", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--count", type=click.IntRange(min=2), default=1_000_000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the table to this CSV file as well.")
def benchmark_mse_cmd(workers, seed, n_seeds, count, out):
    """Median one-trial autocorrelation MSE for kinds A and B."""
    rows = benchmark_mse(seeds=range(seed, seed + n_seeds), count=count, workers=workers)
    click.echo("size,additions,median_mse_A,median_mse_B")
    for r in rows:
        click.echo(f"{r.size},{r.additions},{r.median_a:.4g},{r.median_b:.4g}")
    if out is not None:
        meta = {"seeds": f"{seed}..{seed + n_seeds - 1}", "count": count, "ts": "1e-05",
                "lag_range_f1tau": "0..10", "lag_points": 512}
        write_csv(out, meta, {"size": np.array([r.size for r in rows]),
                              "additions": np.array([r.additions for r in rows]),
                              "median_mse_A": np.array([r.median_a for r in rows]),
                              "median_mse_B": np.array([r.median_b for r in rows])})


@benchmark.command("timing")
@click.option("--samples", type=click.IntRange(min=1), default=10_000_000, show_default=True)
@click.option("--size", type=click.IntRange(min=1), default=8, show_default=True)
def benchmark_timing_cmd(samples, size):
    """Wall time per sample for kinds A and B."""
    res = benchmark_timing(samples, size)
    for key, value in res.items():
        click.echo(f"{key}={value:.4g}" if isinstance(value, float) else f"{key}={value}")


@main.command("theory")
@click.argument("statistic", type=click.Choice(THEORY_STATISTICS))
@click.argument("params", nargs=-1)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write CSV here instead of standard output.")
def theory_cmd(statistic, params, out):
    """Evaluate a closed-form STATISTIC; PARAMS are config-style key=value pairs."""
    try:
        spec = parse_config("\n".join(params))
    except ConfigParseError as exc:
        raise click.ClickException(f"parameter {exc}")
    cols = theory_table(spec, statistic)
    meta = _metadata(spec, statistic)
    for key in ("seed", "trials", "count", "ts"):
        meta.pop(key, None)
    if out is not None:
        write_csv(out, meta, cols)
        click.echo(str(out))
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    for key, value in meta.items():
        sys.stdout.write(f"# {key}={value}\n")
    writer.writerow(list(cols))
    for row in zip(*cols.values()):
        writer.writerow([_fmt(v) for v in row])


if __name__ == "__main__":  # pragma: no cover
    main()
