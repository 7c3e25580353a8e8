"""Empirical estimators for simulated channel series.

Correlation estimates use the biased normalisation: for lag index ``l`` the
estimate of ``<x(t) y(t + l ts)>`` is ``sum_i x[i] y[i + l] / count``.
Multiple trials are combined by averaging in trial order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import ComplexSeries, ConfigError, SimulatorConfig, SimulatorKind, draw_realization
from .theory import CorrelationCurve, time_avg_autocorr

__all__ = [
    "EstimatorError",
    "InsufficientDataError",
    "LagSnapWarning",
    "EstimatorSettings",
    "LevelStats",
    "Density",
    "default_lag_grid",
    "snap_lags",
    "crosscorr",
    "empirical_correlation",
    "empirical_complex_autocorr",
    "empirical_sq_env_corr",
    "histogram_pdf",
    "l1_distance",
    "empirical_cdf",
    "level_crossing_stats",
    "merge_level_stats",
    "lcr_from_stats",
    "afd_from_stats",
    "time_avg_variance",
    "mse",
]

# Use FFT correlation when more lags than this are requested.
_DIRECT_LAG_LIMIT = 32


class EstimatorError(ValueError):
    """Invalid estimator input."""


class InsufficientDataError(EstimatorError):
    """Too few events to form the estimate."""


class LagSnapWarning(UserWarning):
    """A requested lag was moved to the nearest multiple of the sampling period."""


def default_lag_grid(f1: float = 100.0, max_f1tau: float = 10.0, points: int = 512) -> np.ndarray:
    """Evenly spaced lags (s) with f1 * tau running from 0 to ``max_f1tau``."""
    return np.linspace(0.0, max_f1tau / f1, points)


@dataclass(frozen=True, eq=False)
class EstimatorSettings:
    lags: np.ndarray
    trials: int = 1
    bins: int = 100
    bin_range: tuple[float, float] = (0.0, 6.0)
    levels_db: tuple[float, ...] = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0)

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float).reshape(-1)
        problems = []
        if self.trials < 1:
            problems.append("trials >= 1")
        if self.bins < 2:
            problems.append("bins >= 2")
        if lags.size == 0 or np.any(lags < 0) or np.any(np.diff(lags) <= 0):
            problems.append("lags nonnegative and strictly increasing")
        lo, hi = self.bin_range
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            problems.append("bin_range must be finite with z_max > z_min")
        if not all(math.isfinite(v) for v in self.levels_db):
            problems.append("levels finite")
        if problems:
            raise EstimatorError("EstimatorSettings violates: " + ", ".join(problems))
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "levels_db", tuple(float(v) for v in self.levels_db))


def snap_lags(lags, ts: float) -> tuple[np.ndarray, np.ndarray]:
    """Round lags (s) to sample offsets. Returns (indices, snapped lags in s)."""
    lags = np.asarray(lags, dtype=float).reshape(-1)
    idx = np.rint(lags / ts).astype(np.int64)
    snapped = idx * ts
    moved = np.abs(snapped - lags) > 1e-9 * max(ts, float(np.max(np.abs(lags), initial=0.0)))
    if np.any(moved):
        warnings.warn(
            f"{int(moved.sum())} lag(s) snapped to multiples of ts={ts:g} "
            f"(largest shift {float(np.max(np.abs(snapped - lags))):.3g} s)",
            LagSnapWarning, stacklevel=3)
    if idx.size > 1 and np.any(np.diff(idx) <= 0):
        raise EstimatorError("lag grid collapses after snapping to ts; use a coarser grid")
    return idx, snapped


def crosscorr(x: np.ndarray, y: np.ndarray, lag_idx: np.ndarray) -> np.ndarray:
    """Biased estimate ``sum_i x[i] y[i + l] / len(x)`` for each lag index l.

    Works for real or complex inputs (no conjugation is applied).
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = x.size
    if y.size != n:
        raise EstimatorError("series must have equal length")
    lag_idx = np.asarray(lag_idx, dtype=np.int64)
    if lag_idx.size and (lag_idx.min() < 0 or lag_idx.max() >= n):
        raise EstimatorError(f"lag index {int(lag_idx.max())} exceeds series length {n}")
    if lag_idx.size <= _DIRECT_LAG_LIMIT:
        return np.array([np.dot(x[: n - l], y[l:]) for l in lag_idx]) / n
    size = 1 << int(math.ceil(math.log2(2 * n)))
    if np.iscomplexobj(x) or np.iscomplexobj(y):
        full = np.fft.ifft(np.conj(np.fft.fft(np.conj(x), size)) * np.fft.fft(y, size))
    else:
        fx = np.fft.rfft(x, size)
        fy = np.fft.rfft(y, size)
        full = np.fft.irfft(np.conj(fx) * fy, size)
    return full[lag_idx] / n


_COMPONENTS = {"c": "real", "s": "imag"}


def _as_trials(series) -> list[ComplexSeries]:
    if isinstance(series, ComplexSeries):
        return [series]
    trials = list(series)
    if not trials:
        raise EstimatorError("at least one trial is required")
    ts = trials[0].ts
    if any(s.ts != ts for s in trials):
        raise EstimatorError("all trials must share ts")
    return trials


def _component(s: ComplexSeries, key: str) -> np.ndarray:
    try:
        return getattr(s.samples, _COMPONENTS[key])
    except KeyError:
        raise EstimatorError(f"component selector must be 'c' or 's', got {key!r}") from None


def empirical_correlation(series: ComplexSeries | Iterable[ComplexSeries], lags,
                          pair: str = "cc") -> CorrelationCurve:
    """Trial-averaged correlation between two I/Q components.

    ``pair = "xy"`` with x, y in {c, s} estimates ``<x(t) y(t + tau)>``, where
    c is the in-phase and s the quadrature component. In ensemble notation
    ``R_ab(tau) = E[a(t + tau) b(t)]`` this is ``R_yx``; for example the
    ensemble R_hchs corresponds to ``pair="sc"``.
    """
    if len(pair) != 2:
        raise EstimatorError("pair must be two component selectors, e.g. 'cc' or 'cs'")
    trials = _as_trials(series)
    idx, snapped = snap_lags(lags, trials[0].ts)
    acc = np.zeros(idx.size)
    for s in trials:
        acc += crosscorr(_component(s, pair[0]), _component(s, pair[1]), idx)
    return CorrelationCurve(snapped, acc / len(trials))


def empirical_complex_autocorr(series, lags) -> CorrelationCurve:
    """Trial-averaged ``0.5 <h(t + tau) h*(t)>``. Its real part is (cc + ss)/2."""
    trials = _as_trials(series)
    idx, snapped = snap_lags(lags, trials[0].ts)
    acc = np.zeros(idx.size, dtype=complex)
    for s in trials:
        acc += 0.5 * crosscorr(np.conj(s.samples), s.samples, idx)
    return CorrelationCurve(snapped, acc / len(trials))


def empirical_sq_env_corr(series, lags) -> CorrelationCurve:
    """Trial-averaged ``<|s(t)|^2 |s(t + tau)|^2>`` (raw fourth moment scale)."""
    trials = _as_trials(series)
    idx, snapped = snap_lags(lags, trials[0].ts)
    acc = np.zeros(idx.size)
    for s in trials:
        p = s.samples.real ** 2 + s.samples.imag ** 2
        acc += crosscorr(p, p, idx)
    return CorrelationCurve(snapped, acc / len(trials))


@dataclass(frozen=True, eq=False)
class Density:
    """Density-normalised histogram.

    ``mass_outside`` is the fraction of samples outside ``[edges[0], edges[-1]]``.
    """

    edges: np.ndarray
    density: np.ndarray
    mass_outside: float
    total: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def histogram_pdf(samples, bins: int = 100, bin_range: tuple[float, float] = (0.0, 6.0)) -> Density:
    """Histogram counts divided by (total samples x bin width)."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise EstimatorError("histogram_pdf needs at least one sample")
    if bins < 2:
        raise EstimatorError("bins must be >= 2")
    if np.any(samples < 0):
        raise EstimatorError("envelope samples must be nonnegative")
    counts, edges = np.histogram(samples, bins=bins, range=bin_range)
    inside = int(counts.sum())
    density = counts / (samples.size * np.diff(edges))
    return Density(edges, density, 1.0 - inside / samples.size, samples.size)


def l1_distance(density: Density, pdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sum over bins of |histogram density - pdf(bin centre)| x bin width."""
    ref = np.asarray(pdf(density.centers), dtype=float)
    return float(np.sum(np.abs(density.density - ref) * density.widths))


def empirical_cdf(samples, levels) -> np.ndarray:
    """Fraction of samples <= each level."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise EstimatorError("empirical_cdf needs at least one sample")
    levels = np.asarray(levels, dtype=float)
    if levels.ndim and levels.size > 1 and np.any(np.diff(levels) < 0):
        raise EstimatorError("levels must be increasing")
    ordered = np.sort(samples)
    return np.searchsorted(ordered, levels, side="right") / samples.size


@dataclass(frozen=True)
class LevelStats:
    """Crossing and fade bookkeeping at one envelope level.

    ``fade_time`` is the summed duration of completed fades only, while
    ``time_below`` counts every sample below the level.
    """

    level: float
    up_crossings: int
    observation_time: float
    time_below: float
    completed_fades: int
    fade_time: float

    def __post_init__(self):
        if self.up_crossings < 0 or self.completed_fades < 0:
            raise EstimatorError("counts must be >= 0")
        if self.time_below > self.observation_time * (1 + 1e-12):
            raise EstimatorError("time_below exceeds observation_time")


def level_crossing_stats(values, ts: float, levels: Sequence[float]) -> list[LevelStats]:
    """Positive-going crossings and fades of a real sequence at each level.

    An up-crossing at i means ``values[i] < R <= values[i + 1]``. Pass the
    envelope (``np.abs(series.samples)``) for channel statistics. Runs below
    the level that touch either end of the record are not completed fades.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 2:
        raise EstimatorError("level_crossing_stats needs at least two samples")
    out = []
    for level in levels:
        below = v < level
        starts = np.flatnonzero(~below[:-1] & below[1:]) + 1
        ends = np.flatnonzero(below[:-1] & ~below[1:]) + 1
        # completed runs: a start at s (s >= 1) and its end e, below[s:e]
        if starts.size and ends.size:
            ends_after = ends[ends > starts[0]]
            n_done = min(starts.size, ends_after.size)
            fade_samples = int(np.sum(ends_after[:n_done] - starts[:n_done]))
        else:
            n_done = 0
            fade_samples = 0
        out.append(LevelStats(
            level=float(level),
            up_crossings=int(ends.size),
            observation_time=v.size * ts,
            time_below=int(below.sum()) * ts,
            completed_fades=int(n_done),
            fade_time=fade_samples * ts,  # integer counts keep fade_time <= time_below
        ))
    return out


def merge_level_stats(per_trial: Iterable[Sequence[LevelStats]]) -> list[LevelStats]:
    """Add counts and times level by level across trials (in the given order)."""
    merged = None
    for stats in per_trial:
        if merged is None:
            merged = list(stats)
            continue
        merged = [LevelStats(a.level, a.up_crossings + b.up_crossings,
                             a.observation_time + b.observation_time,
                             a.time_below + b.time_below,
                             a.completed_fades + b.completed_fades,
                             a.fade_time + b.fade_time)
                  for a, b in zip(merged, stats)]
    if merged is None:
        raise EstimatorError("no trials to merge")
    return merged


def lcr_from_stats(stats: LevelStats) -> float:
    """Up-crossings per second."""
    return stats.up_crossings / stats.observation_time


def afd_from_stats(stats: LevelStats) -> float:
    """Mean duration (s) of completed fades."""
    if stats.completed_fades < 1:
        raise InsufficientDataError(f"no completed fades at level {stats.level:g}")
    return stats.fade_time / stats.completed_fades


def time_avg_variance(config: SimulatorConfig, lags, trials: int = 200,
                      which: str = "cc") -> CorrelationCurve:
    """Sample variance (ddof=1) over realizations of the analytic time average.

    Realizations are trials 0..trials-1 of ``config``; no samples are
    generated.
    """
    if trials < 2:
        raise EstimatorError("time_avg_variance needs trials >= 2")
    if config.kind not in (SimulatorKind.B, SimulatorKind.D):
        raise ConfigError("time averages are defined for kinds B and D only")
    lags = np.asarray(lags, dtype=float)
    rows = np.array([time_avg_autocorr(draw_realization(config, i), lags, which)
                     for i in range(trials)])
    return CorrelationCurve(lags, np.var(rows, axis=0, ddof=1))


def mse(curve: CorrelationCurve, reference: CorrelationCurve) -> float:
    """Mean over lags of |curve - reference|^2 on identical lag grids."""
    if curve.lags.shape != reference.lags.shape or not np.array_equal(curve.lags, reference.lags):
        raise EstimatorError("mse needs identical lag grids")
    return float(np.mean(np.abs(curve.values - reference.values) ** 2))
