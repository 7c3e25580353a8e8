"""Closed-form statistics of the cascaded Rayleigh simulators.

Conventions
-----------
* ``R_xy(tau) = E[x(t + tau) y(t)]`` for ensemble correlations.
* Complex-envelope autocorrelation is ``0.5 * E[h(t + tau) h*(t)]``.
* Without LOS the channel has mean power 2 (rms envelope sqrt(2)); with LOS
  the power is normalised to 1.

All ``tau`` arguments accept scalars or arrays.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .channel import Realization, SimulatorKind
from .specfun import QuadratureSpec

__all__ = [
    "NlosStatParams",
    "LosStatParams",
    "CorrelationCurve",
    "nlos_level",
    "los_level",
    "autocorr_iq_nlos",
    "crosscorr_iq_nlos",
    "xi",
    "moments_over_offset",
    "sq_env_autocorr_nlos",
    "autocorr_iq_los",
    "crosscorr_iq_los",
    "complex_autocorr_los",
    "sq_env_autocorr_los",
    "time_avg_autocorr",
    "var_time_avg_autocorr_nlos",
    "var_time_avg_autocorr_los",
    "envelope_pdf_nlos",
    "envelope_cdf_nlos",
    "envelope_pdf_los",
    "envelope_cdf_los",
    "lcr_nlos",
    "lcr_los",
    "afd_nlos",
    "afd_los",
]

_WHICH = ("cc", "cs", "sc", "ss")


@dataclass(frozen=True)
class NlosStatParams:
    """Doppler frequencies and sinusoid counts of the scattered part."""

    f1: float = 100.0
    f2: float = 100.0
    n_tx: int = 16
    n_rx: int = 16

    def __post_init__(self):
        if not (self.f1 > 0 and self.f2 > 0):
            raise ValueError("NlosStatParams needs f1 > 0 and f2 > 0")
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("NlosStatParams needs n_tx >= 1 and n_rx >= 1")

    @property
    def doppler_ratio(self) -> float:
        return self.f2 / self.f1


@dataclass(frozen=True)
class LosStatParams:
    """Scattered part plus the LOS power ratio, Doppler and angle."""

    base: NlosStatParams = NlosStatParams()
    k_factor: float = 0.0
    f3: float = 0.0
    phi3: float = 0.0

    def __post_init__(self):
        if not self.k_factor >= 0:
            raise ValueError("LosStatParams needs K >= 0")
        if not self.f3 >= 0:
            raise ValueError("LosStatParams needs f3 >= 0")

    @property
    def los_doppler(self) -> float:
        """Doppler shift actually seen on the LOS phasor, f3 cos(phi3)."""
        return self.f3 * math.cos(self.phi3)


@dataclass(frozen=True, eq=False)
class CorrelationCurve:
    """Values of a statistic on a strictly increasing lag grid (seconds)."""

    lags: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float).reshape(-1)
        values = np.asarray(self.values).reshape(-1)
        if lags.shape != values.shape:
            raise ValueError("lags and values must have the same length")
        if lags.size > 1 and not np.all(np.diff(lags) > 0):
            raise ValueError("lags must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.lags.size


def nlos_level(rho_db):
    """Absolute envelope level for a normalised level in dB (rms sqrt(2))."""
    return math.sqrt(2.0) * 10.0 ** (np.asarray(rho_db, dtype=float) / 20.0)


def los_level(rho_db):
    """Absolute envelope level for a normalised level in dB (rms 1)."""
    return 10.0 ** (np.asarray(rho_db, dtype=float) / 20.0)


def _tau(tau):
    arr = np.asarray(tau, dtype=float)
    return arr, arr.ndim == 0


def _out(values, scalar):
    values = np.asarray(values)
    if scalar:
        return complex(values.reshape(-1)[0]) if np.iscomplexobj(values) else float(values.reshape(-1)[0])
    return values


# ---------------------------------------------------------------------------
# Correlations without LOS
# ---------------------------------------------------------------------------


def autocorr_iq_nlos(tau, p: NlosStatParams = NlosStatParams()):
    """In-phase (and quadrature) autocorrelation, J0(2 pi f1 tau) J0(2 pi f2 tau)."""
    t, scalar = _tau(tau)
    two_pi = 2.0 * np.pi
    vals = specfun.bessel_j0(two_pi * p.f1 * np.atleast_1d(t)) * specfun.bessel_j0(
        two_pi * p.f2 * np.atleast_1d(t))
    return _out(vals, scalar)


def crosscorr_iq_nlos(tau):
    """I/Q cross-correlation without LOS: identically zero."""
    t, scalar = _tau(tau)
    return _out(np.zeros(np.atleast_1d(t).shape), scalar)


@functools.lru_cache(maxsize=16384)
def _moments_cached(f: float, tau: float, count: int, spec: QuadratureSpec):
    x = 2.0 * np.pi * f * tau
    n = np.arange(1, count + 1)[:, None]

    def integrand(psi):
        alpha = (2.0 * n * np.pi - np.pi + psi[None, :]) / (4.0 * count)
        a = np.cos(x * np.cos(alpha))
        c = np.cos(x * np.sin(alpha))
        return np.concatenate([a, c, a * c]) / (2.0 * np.pi)

    if x == 0.0:
        ones = np.ones(count)
        out = (ones, ones, ones)
    else:
        vals = specfun.integrate_vector(integrand, -np.pi, np.pi, spec)
        out = (vals[:count], vals[count:2 * count], vals[2 * count:])
    for arr in out:
        arr.setflags(write=False)
    return out


def moments_over_offset(f: float, tau: float, count: int, spec: QuadratureSpec | None = None):
    """Per-sinusoid expectations over the uniform angle offset.

    With ``alpha_n = (2 n pi - pi + psi) / (4 count)`` and psi uniform on
    [-pi, pi), returns the arrays ``E[cos(x cos alpha_n)]``,
    ``E[cos(x sin alpha_n)]`` and ``E[cos(x cos alpha_n) cos(x sin alpha_n)]``
    for ``x = 2 pi f tau``.
    """
    return _moments_cached(float(f), float(abs(tau)), int(count), spec or QuadratureSpec())


def xi(f: float, tau, count: int, spec: QuadratureSpec | None = None):
    """Sum over sinusoids of the squared mean of cos(2 pi f tau cos alpha_n)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    t, scalar = _tau(tau)
    vals = np.array([np.sum(moments_over_offset(f, ti, count, spec)[0] ** 2)
                     for ti in np.atleast_1d(t)])
    return _out(vals, scalar)


def _offset_covariance(f: float, tau, count: int, spec):
    """Sum over n of E[A_n C_n] - E[A_n] E[C_n]."""
    vals = []
    for ti in np.atleast_1d(tau):
        ea, ec, eac = moments_over_offset(f, ti, count, spec)
        vals.append(np.sum(eac - ea * ec))
    return np.array(vals)


def sq_env_autocorr_nlos(tau, p: NlosStatParams = NlosStatParams(),
                         spec: QuadratureSpec | None = None):
    """Squared-envelope autocorrelation E[|g(t)|^2 |g(t + tau)|^2] (raw moment).

    Product form of the finite-N expression: one factor per link end, each
    with a J0^2 term, a J0(4 pi f tau)/4 term and the xi correction.
    """
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    j0 = specfun.bessel_j0
    n, m = p.n_tx, p.n_rx
    xi1 = xi(p.f1, t, n, spec)
    xi2 = xi(p.f2, t, m, spec)
    tx = n * n + n * n * j0(2 * np.pi * p.f1 * t) ** 2 + n * j0(4 * np.pi * p.f1 * t) / 4.0 - xi1
    rx = m * m + m * m * j0(2 * np.pi * p.f2 * t) ** 2 + m * j0(4 * np.pi * p.f2 * t) / 4.0 - xi2
    return _out(4.0 / (n * n * m * m) * tx * rx, scalar)


# ---------------------------------------------------------------------------
# Correlations with LOS
# ---------------------------------------------------------------------------


def _los_phase(t, p: LosStatParams):
    return 2.0 * np.pi * p.los_doppler * t


def autocorr_iq_los(tau, p: LosStatParams):
    """In-phase autocorrelation with LOS: (J0 J0 + K cos(LOS phase)) / (2(1+K))."""
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    k = p.k_factor
    vals = (autocorr_iq_nlos(t, p.base) + k * np.cos(_los_phase(t, p))) / (2.0 * (1.0 + k))
    return _out(vals, scalar)


def crosscorr_iq_los(tau, p: LosStatParams, which: str = "cs"):
    """I/Q cross-correlation with LOS.

    ``which="cs"`` gives E[hc(t + tau) hs(t)] = -K sin(LOS phase)/(2(1+K));
    ``which="sc"`` gives E[hs(t + tau) hc(t)], its negative.
    """
    if which not in ("cs", "sc"):
        raise ValueError("which must be 'cs' or 'sc'")
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    k = p.k_factor
    vals = -k * np.sin(_los_phase(t, p)) / (2.0 * (1.0 + k))
    return _out(vals if which == "cs" else -vals, scalar)


def complex_autocorr_los(tau, p: LosStatParams):
    """Complex-envelope autocorrelation (J0 J0 + K exp(j LOS phase)) / (1+K)."""
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    k = p.k_factor
    vals = (autocorr_iq_nlos(t, p.base) + k * np.exp(1j * _los_phase(t, p))) / (1.0 + k)
    return _out(vals, scalar)


def sq_env_autocorr_los(tau, p: LosStatParams, asymptotic: bool = False,
                        spec: QuadratureSpec | None = None):
    """Squared-envelope autocorrelation with LOS.

    The exact mode uses the finite-N squared-envelope moment of the scattered
    part; the asymptotic mode is its large-N limit.
    """
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    k = p.k_factor
    cos_los = np.cos(_los_phase(t, p))
    b = p.base
    j1 = specfun.bessel_j0(2 * np.pi * b.f1 * t)
    j2 = specfun.bessel_j0(2 * np.pi * b.f2 * t)
    if asymptotic:
        vals = (1 + j1 ** 2 + j2 ** 2 + j1 ** 2 * j2 ** 2
                + 2 * k * (1 + j1 * j2 * cos_los) + k * k) / (1.0 + k) ** 2
    else:
        vals = (sq_env_autocorr_nlos(t, b, spec) + 8 * k * j1 * j2 * cos_los
                + 8 * k + 4 * k * k) / (4.0 * (1.0 + k) ** 2)
    return _out(vals, scalar)


# ---------------------------------------------------------------------------
# Time averages of one realization
# ---------------------------------------------------------------------------


def time_avg_autocorr(r: Realization, tau, which: str = "cc"):
    """Infinite-window time-average correlation of one realization.

    ``which`` selects <x(t) y(t + tau)> for x, y in {c, s} (in-phase and
    quadrature). Valid for kinds B and D. For D the LOS phasor contributes
    K cos(phase)/(2(1+K)) to cc/ss and +K sin(phase)/(2(1+K)) to cs; sc
    carries the opposite sign, since <hs(t) hc(t + tau)> = <hc(t') hs(t' - tau)>.
    """
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    kind = r.config.kind
    if kind not in (SimulatorKind.B, SimulatorKind.D):
        raise ValueError("time-average correlations are defined for kinds B and D only")
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)[:, None]
    cfg = r.config
    x1 = 2 * np.pi * cfg.f1 * t
    x2 = 2 * np.pi * cfg.f2 * t
    a = np.cos(x1 * np.cos(r.alpha)[None, :]).sum(axis=1)
    c = np.cos(x1 * np.sin(r.alpha)[None, :]).sum(axis=1)
    b = np.cos(x2 * np.cos(r.beta)[None, :]).sum(axis=1)
    d = np.cos(x2 * np.sin(r.beta)[None, :]).sum(axis=1)
    norm = 2.0 * cfg.n_tx * cfg.n_rx
    if which == "cc":
        g = (a * b + c * d) / norm
    elif which == "ss":
        g = (a * d + c * b) / norm
    else:
        g = np.zeros(t.shape[0])
    if kind == SimulatorKind.B:
        return _out(g, scalar)
    k = cfg.k_factor
    phase = 2 * np.pi * r.f3 * math.cos(r.phi3) * t[:, 0]
    if which in ("cc", "ss"):
        vals = (g + k * np.cos(phase)) / (2.0 * (1.0 + k))
    else:
        sign = 1.0 if which == "cs" else -1.0
        vals = sign * k * np.sin(phase) / (2.0 * (1.0 + k))
    return _out(vals, scalar)


def var_time_avg_autocorr_nlos(tau, p: NlosStatParams = NlosStatParams(), which: str = "cc",
                               spec: QuadratureSpec | None = None):
    """Closed-form variance of the time-average correlation without LOS.

    cc and ss share one expression; the cross components return 0. The
    expression treats the per-sinusoid angle terms as independent across
    sinusoids; see ``moments_over_offset`` for the expectations used.
    """
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    t, scalar = _tau(tau)
    t = np.atleast_1d(t)
    if which in ("cs", "sc"):
        return _out(np.zeros(t.shape), scalar)
    j0 = specfun.bessel_j0
    n, m = float(p.n_tx), float(p.n_rx)
    j1 = j0(2 * np.pi * p.f1 * t) ** 2
    j2 = j0(2 * np.pi * p.f2 * t) ** 2
    j41 = j0(4 * np.pi * p.f1 * t)
    j42 = j0(4 * np.pi * p.f2 * t)
    xi1 = xi(p.f1, t, p.n_tx, spec)
    xi2 = xi(p.f2, t, p.n_rx, spec)
    v_ac = _offset_covariance(p.f1, t, p.n_tx, spec)
    v_bd = _offset_covariance(p.f2, t, p.n_rx, spec)
    vals = ((1 + j41) * (1 + j42) + 2 * n * j1 * (j42 + 1) + 2 * m * j2 * (j41 + 1)) / (8 * n * m)
    vals = vals + j2 * v_ac / (2 * n * n) + j1 * v_bd / (2 * m * m)
    vals = vals + (v_ac * v_bd + xi1 * xi2) / (2 * n * n * m * m)
    vals = vals - (1 + j42 + 2 * m * j2) * xi1 / (4 * n * n * m)
    vals = vals - (1 + j41 + 2 * n * j1) * xi2 / (4 * n * m * m)
    return _out(vals, scalar)


def var_time_avg_autocorr_los(tau, p: LosStatParams, which: str = "cc",
                              spec: QuadratureSpec | None = None):
    """Variance of the time-average correlation with LOS: NLOS value / (4 (1+K)^2)."""
    nlos = var_time_avg_autocorr_nlos(tau, p.base, which, spec)
    return nlos / (4.0 * (1.0 + p.k_factor) ** 2)


# ---------------------------------------------------------------------------
# Envelope distributions
# ---------------------------------------------------------------------------


def _z(z, name):
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise specfun.DomainError(f"{name}: z must be finite and >= 0")
    return np.atleast_1d(arr), arr.ndim == 0


def envelope_pdf_nlos(z):
    """Double-Rayleigh envelope density 2 z K0(sqrt(2) z)."""
    zz, scalar = _z(z, "envelope_pdf_nlos")
    out = np.zeros_like(zz)
    pos = zz > 0
    out[pos] = 2 * zz[pos] * specfun.bessel_k0(math.sqrt(2) * zz[pos])
    return _out(out, scalar)


def envelope_cdf_nlos(z):
    """Double-Rayleigh envelope distribution 1 - sqrt(2) z K1(sqrt(2) z)."""
    zz, scalar = _z(z, "envelope_cdf_nlos")
    out = np.zeros_like(zz)
    pos = zz > 0
    out[pos] = 1 - math.sqrt(2) * zz[pos] * specfun.bessel_k1(math.sqrt(2) * zz[pos])
    return _out(out, scalar)


def _los_breakpoint(k: float) -> float:
    return math.sqrt(k) / math.sqrt(1 + k)


def envelope_pdf_los(z, k_factor: float):
    """Envelope density with LOS, piecewise around z* = sqrt(K/(1+K))."""
    zz, scalar = _z(z, "envelope_pdf_los")
    k = float(k_factor)
    s = math.sqrt(1 + k)
    zb = _los_breakpoint(k)
    out = np.zeros_like(zz)
    low = (zz < zb) & (zz > 0)
    high = (zz >= zb) & (zz > 0)
    if low.any():
        out[low] = 4 * (1 + k) * zz[low] * specfun.bessel_i0(2 * s * zz[low]) * specfun.bessel_k0(2 * math.sqrt(k))
    if high.any():
        out[high] = 4 * (1 + k) * zz[high] * specfun.bessel_i0(2 * math.sqrt(k)) * specfun.bessel_k0(2 * s * zz[high])
    return _out(out, scalar)


def envelope_cdf_los(z, k_factor: float):
    """Envelope distribution with LOS, piecewise around z* = sqrt(K/(1+K))."""
    zz, scalar = _z(z, "envelope_cdf_los")
    k = float(k_factor)
    s = math.sqrt(1 + k)
    zb = _los_breakpoint(k)
    out = np.zeros_like(zz)
    low = (zz < zb) & (zz > 0)
    high = (zz >= zb) & (zz > 0)
    if low.any():
        out[low] = 2 * s * zz[low] * specfun.bessel_i1(2 * s * zz[low]) * specfun.bessel_k0(2 * math.sqrt(k))
    if high.any():
        out[high] = 1 - 2 * s * zz[high] * specfun.bessel_i0(2 * math.sqrt(k)) * specfun.bessel_k1(2 * s * zz[high])
    return _out(out, scalar)


# ---------------------------------------------------------------------------
# Level crossing rate and fade duration
# ---------------------------------------------------------------------------


def _lcr_nlos_integrand(level_r: float, a: float):
    r2 = level_r * level_r

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        x2 = xp * xp
        out[pos] = np.sqrt(a * a * r2 + x2 * x2) / x2 * np.exp(-(r2 + x2 * x2) / (math.sqrt(2) * x2))
        return out

    return f


def lcr_nlos(level_r: float, f1: float = 100.0, f2: float = 100.0,
             spec: QuadratureSpec | None = None) -> float:
    """Level crossing rate (crossings/s) of the envelope without LOS."""
    if not level_r > 0:
        raise specfun.DomainError("lcr_nlos: level must be > 0")
    integral = specfun.integrate_semi_infinite(_lcr_nlos_integrand(level_r, f2 / f1), spec)
    return math.sqrt(2 * math.pi * math.sqrt(2)) * level_r * f1 * integral


def _lcr_los_integrand(level_r: float, p: LosStatParams):
    k = p.k_factor
    s = math.sqrt(1 + k)
    a = p.base.doppler_ratio
    # The LOS term enters through the Doppler shift on the LOS phasor.
    fl = p.los_doppler
    sqrt_2_over_pi = math.sqrt(2 / math.pi)

    def f(x: float, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if x <= 0:
            return np.zeros_like(theta)
        y1 = level_r ** 2 + k / (1 + k) - 2 * level_r * math.sqrt(k) * np.cos(theta) / s
        y1 = np.maximum(y1, 0.0)
        x2 = x * x
        root = np.sqrt(a * a * y1 + x2 * x2)
        y2 = 2 * x * fl * math.sqrt(k) * np.sin(theta) / (p.base.f1 * math.sqrt(s) * root)
        bracket = y2 * specfun.erfc(-y2 / math.sqrt(2)) + sqrt_2_over_pi * np.exp(-0.5 * y2 * y2)
        return root / x2 * bracket * np.exp(-s * (x2 + y1 / x2))

    return f


def lcr_los(level_r: float, p: LosStatParams, spec: QuadratureSpec | None = None) -> float:
    """Level crossing rate (crossings/s) of the envelope with LOS.

    Nested quadrature over the Rice-variable x in (0, inf) and the LOS phase
    angle theta in [-pi, pi).
    """
    if not level_r > 0:
        raise specfun.DomainError("lcr_los: level must be > 0")
    integral = specfun.integrate_rect_2d(_lcr_los_integrand(level_r, p), spec)
    return (1 + p.k_factor) ** 0.75 * level_r * p.base.f1 * integral


def _afd(cdf: float, lcr: float) -> float:
    if lcr < 1e-300:
        raise OverflowError(f"level crossing rate {lcr!r} too small; fade duration unbounded")
    return cdf / lcr


def afd_nlos(level_r: float, f1: float = 100.0, f2: float = 100.0,
             spec: QuadratureSpec | None = None) -> float:
    """Average fade duration (s) without LOS: CDF / LCR."""
    return _afd(envelope_cdf_nlos(level_r), lcr_nlos(level_r, f1, f2, spec))


def afd_los(level_r: float, p: LosStatParams, spec: QuadratureSpec | None = None) -> float:
    """Average fade duration (s) with LOS: CDF / LCR."""
    return _afd(envelope_cdf_los(level_r, p.k_factor), lcr_los(level_r, p, spec))
