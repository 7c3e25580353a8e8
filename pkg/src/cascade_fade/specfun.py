"""Special functions and adaptive quadrature.

Everything here is plain numpy. The Bessel functions cover only the orders
needed by the fading statistics (J0, I0, I1, K0, K1) and accept scalars or
arrays. Quadrature is a global-adaptive Gauss-Kronrod (7/15) scheme with a
doubling scan for semi-infinite ranges.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "ConvergenceError",
    "QuadratureSpec",
    "bessel_j0",
    "bessel_mod",
    "bessel_i0",
    "bessel_i1",
    "bessel_k0",
    "bessel_k1",
    "erf",
    "erfc",
    "integrate",
    "integrate_vector",
    "integrate_semi_infinite",
    "integrate_rect_2d",
]

EULER_GAMMA = 0.57721566490153286060651209008240243

# Branch switch points. Each pair of neighbouring branches agrees to ~1e-15
# at its seam (see tests/test_specfun.py).
_J0_SERIES_MAX = 4.0
_J0_HANKEL_MIN = 25.0
_J0_MILLER_START = 100
_I_SERIES_MAX = 30.0
_K_SERIES_MAX = 2.0
_ERF_SERIES_MAX = 2.5


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class ConvergenceError(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    estimate : float
        Best estimate of the integral at the point of failure.
    error : float
        Estimated absolute error of ``estimate``.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate:.17g}, error={error:.3g})")
        self.estimate = estimate
        self.error = error


def _as_float_array(x, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    return np.atleast_1d(arr).copy(), arr.ndim == 0


def _finish(out: np.ndarray, scalar: bool):
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# J0
# ---------------------------------------------------------------------------


def _j0_series(x: np.ndarray) -> np.ndarray:
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 40):
        term = term * q / (k * k)
        total += term
    return total


def _j0_miller(x: np.ndarray) -> np.ndarray:
    # Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised with
    # J0 + 2 * sum J_{2k} = 1.
    upper = np.zeros_like(x)
    cur = np.ones_like(x)
    norm = np.zeros_like(x)
    for k in range(_J0_MILLER_START, 0, -1):
        if k % 2 == 0:
            norm += 2.0 * cur
        prev = (2.0 * k / x) * cur - upper
        upper, cur = cur, prev
    return cur / (norm + cur)


def _hankel_pq(x: np.ndarray, mu: float, terms: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Hankel asymptotic sums P and Q for order nu with mu = 4 nu^2."""
    p = np.ones_like(x)
    q = np.zeros_like(x)
    c = np.ones_like(x)
    eight_x = 8.0 * x
    for k in range(1, terms + 1):
        c = c * (mu - (2 * k - 1) ** 2) / (k * eight_x)
        if k % 2 == 1:
            q += c if (k // 2) % 2 == 0 else -c
        else:
            p += c if (k // 2) % 2 == 0 else -c
    return p, q


def _j0_hankel(x: np.ndarray) -> np.ndarray:
    p, q = _hankel_pq(x, 0.0)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Ascending series for ``|x| <= 4``, Miller backward recurrence up to 25 and
    the Hankel asymptotic expansion beyond.
    """
    arr, scalar = _as_float_array(x, "bessel_j0")
    arr = np.abs(arr)
    out = np.empty_like(arr)
    small = arr <= _J0_SERIES_MAX
    big = arr >= _J0_HANKEL_MIN
    mid = ~(small | big)
    if small.any():
        out[small] = _j0_series(arr[small])
    if mid.any():
        out[mid] = _j0_miller(arr[mid])
    if big.any():
        out[big] = _j0_hankel(arr[big])
    return _finish(out, scalar)


# ---------------------------------------------------------------------------
# Modified Bessel functions
# ---------------------------------------------------------------------------


def _i_series(x: np.ndarray, order: int) -> np.ndarray:
    q = 0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, 120):
        term = term * q / (k * (k + order))
        total += term
    return total


def _i_asymptotic(x: np.ndarray, order: int, terms: int = 20) -> np.ndarray:
    mu = 4.0 * order * order
    total = np.ones_like(x)
    c = np.ones_like(x)
    for k in range(1, terms + 1):
        c = -c * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total += c
    with np.errstate(over="ignore"):
        return np.exp(x) / np.sqrt(2.0 * np.pi * x) * total


def _bessel_i(x, order: int):
    arr, scalar = _as_float_array(x, f"bessel_i{order}")
    sign = np.where(arr < 0, -1.0 if order == 1 else 1.0, 1.0)
    arr = np.abs(arr)
    out = np.empty_like(arr)
    small = arr <= _I_SERIES_MAX
    if small.any():
        out[small] = _i_series(arr[small], order)
    if (~small).any():
        out[~small] = _i_asymptotic(arr[~small], order)
    return _finish(sign * out, scalar)


def _k_series(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # K0 = -(ln(x/2) + gamma) I0 + sum H_k t^k/(k!)^2
    # K1 = 1/x + ln(x/2) I1 - (x/4) sum (psi(k+1) + psi(k+2)) t^k/(k!(k+1)!)
    t = 0.25 * x * x
    log_half = np.log(0.5 * x)
    i0 = _i_series(x, 0)
    i1 = _i_series(x, 1)
    term0 = np.ones_like(x)
    term1 = np.ones_like(x)
    harmonic = 0.0
    s0 = np.zeros_like(x)
    psi_k1 = -EULER_GAMMA
    s1 = (2.0 * psi_k1 + 1.0) * term1
    for k in range(1, 40):
        harmonic += 1.0 / k
        term0 = term0 * t / (k * k)
        term1 = term1 * t / (k * (k + 1))
        s0 += harmonic * term0
        psi_k1 = -EULER_GAMMA + harmonic
        s1 += (2.0 * psi_k1 + 1.0 / (k + 1)) * term1
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    return k0, k1


def _k_steed(x: np.ndarray, max_iter: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    # Steed's continued fraction (Temme's CF2) for K0, with K1 from the
    # companion ratio; valid for x >~ 2.
    eps = 1e-17
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, max_iter):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(active, h + delh, h)
        dels = q * delh
        s = np.where(active, s + dels, s)
        active &= np.abs(dels / s) >= eps
        if not active.any():
            break
    h = a1 * h
    with np.errstate(under="ignore"):
        k0 = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _bessel_k(x, order: int):
    arr, scalar = _as_float_array(x, f"bessel_k{order}")
    if np.any(arr <= 0):
        raise DomainError(f"bessel_k{order}: argument must be > 0")
    out = np.empty_like(arr)
    small = arr < _K_SERIES_MAX
    if small.any():
        out[small] = _k_series(arr[small])[order]
    if (~small).any():
        out[~small] = _k_steed(arr[~small])[order]
    return _finish(out, scalar)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero."""
    return _bessel_i(x, 0)


def bessel_i1(x):
    """Modified Bessel function of the first kind, order one."""
    return _bessel_i(x, 1)


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero (x > 0)."""
    return _bessel_k(x, 0)


def bessel_k1(x):
    """Modified Bessel function of the second kind, order one (x > 0)."""
    return _bessel_k(x, 1)


def bessel_mod(kind: str, order: int, x):
    """Dispatch to I0, I1, K0 or K1.

    Parameters
    ----------
    kind : {"first", "second"}
    order : {0, 1}
    x : float or array_like
    """
    if order not in (0, 1):
        raise DomainError(f"bessel_mod: unsupported order {order!r}")
    if kind == "first":
        return _bessel_i(x, order)
    if kind == "second":
        return _bessel_k(x, order)
    raise DomainError(f"bessel_mod: kind must be 'first' or 'second', got {kind!r}")


# ---------------------------------------------------------------------------
# Error function
# ---------------------------------------------------------------------------


def _erf_series(x: np.ndarray) -> np.ndarray:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (2n+1)!!
    x2 = 2.0 * x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, 100):
        term = term * x2 / (2 * n + 1)
        total += term
    return 2.0 / math.sqrt(math.pi) * np.exp(-x * x) * total


def _erfc_cf(x: np.ndarray, depth: int = 120) -> np.ndarray:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    f = x.copy()
    for k in range(depth, 0, -1):
        f = x + 0.5 * k / f
    with np.errstate(under="ignore"):
        return np.exp(-x * x) / (math.sqrt(math.pi) * f)


def erfc(x):
    """Complementary error function, accurate in the far right tail."""
    arr, scalar = _as_float_array(x, "erfc")
    out = np.empty_like(arr)
    small = np.abs(arr) < _ERF_SERIES_MAX
    big_pos = arr >= _ERF_SERIES_MAX
    big_neg = arr <= -_ERF_SERIES_MAX
    if small.any():
        out[small] = 1.0 - _erf_series(arr[small])
    if big_pos.any():
        out[big_pos] = _erfc_cf(arr[big_pos])
    if big_neg.any():
        out[big_neg] = 2.0 - _erfc_cf(-arr[big_neg])
    return _finish(out, scalar)


def erf(x):
    """Error function (odd, saturating to +/-1)."""
    arr, scalar = _as_float_array(x, "erf")
    a = np.abs(arr)
    out = np.empty_like(arr)
    small = a < _ERF_SERIES_MAX
    if small.any():
        out[small] = _erf_series(a[small])
    if (~small).any():
        out[~small] = 1.0 - _erfc_cf(a[~small])
    return _finish(np.copysign(out, arr), scalar)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

# Kronrod 15-point nodes (positive half) and weights, Gauss 7-point weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full symmetric node/weight vectors on [-1, 1].
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss points are the odd-indexed Kronrod points (1, 3, 5, 7, 9, 11, 13).
GAUSS_WEIGHTS = np.array([_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]])


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive integrators.

    ``tail_cutoff`` controls where a semi-infinite integral is truncated: the
    doubling scan stops once a chunk contributes less than
    ``tail_cutoff * |estimate|`` and its largest sampled integrand value times
    the chunk width is also below that bound.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    tail_cutoff: float = 1e-14

    def __post_init__(self):
        problems = []
        if not self.abs_tol > 0:
            problems.append("abs_tol > 0")
        if not self.rel_tol > 0:
            problems.append("rel_tol > 0")
        if self.max_subdivisions < 1:
            problems.append("max_subdivisions >= 1")
        if not self.tail_cutoff > 0:
            problems.append("tail_cutoff > 0")
        if problems:
            raise ValueError("QuadratureSpec violates: " + ", ".join(problems))


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float):
    """One Kronrod/Gauss panel. ``f`` may return shape (15,) or (k, 15)."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center + half * KRONROD_NODES
    fx = np.asarray(f(x), dtype=float)
    if fx.shape[-1:] != x.shape:
        fx = np.broadcast_to(fx, fx.shape[:-1] + x.shape) if fx.ndim else np.broadcast_to(fx, x.shape)
    kronrod = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx[..., 1::2] @ GAUSS_WEIGHTS)
    err = float(np.max(np.abs(kronrod - gauss)))
    if fx.ndim == 1:
        kronrod = float(kronrod)
    return kronrod, err, float(np.max(np.abs(fx)))


def _adaptive(f, a: float, b: float, spec: QuadratureSpec):
    """Global-adaptive bisection. Returns (value, error, peak |f|).

    For vector-valued integrands the panel error is the largest component
    error and the tolerance is checked against the largest component.
    """
    value, err, peak = _gk15(f, a, b)
    heap = [(-err, 0, a, b, value, err)]
    total, total_err = value, err
    counter = 1
    subdivisions = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total)))):
        if subdivisions >= spec.max_subdivisions:
            raise ConvergenceError(
                f"adaptive quadrature on [{a}, {b}] hit max_subdivisions",
                float(np.max(total)), total_err)
        _, _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise ConvergenceError("interval width reached machine precision",
                                   float(np.max(total)), total_err)
        v1, e1, p1 = _gk15(f, lo, mid)
        v2, e2, p2 = _gk15(f, mid, hi)
        peak = max(peak, p1, p2)
        total = total + v1 + v2 - v
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, counter, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, counter + 1, mid, hi, v2, e2))
        counter += 2
        subdivisions += 1
    # Re-sum in a fixed order to shed accumulated update round-off.
    pieces = sorted(heap, key=lambda item: item[2])
    if isinstance(value, float):
        total = math.fsum(item[4] for item in pieces)
    else:
        total = np.sum([item[4] for item in pieces], axis=0)
    total_err = math.fsum(item[5] for item in pieces)
    return total, total_err, peak


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec | None = None) -> float:
    """Integrate a vectorised real function over the finite interval [a, b]."""
    spec = spec or QuadratureSpec()
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, spec)
    return _adaptive(f, float(a), float(b), spec)[0]


def integrate_vector(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     spec: QuadratureSpec | None = None) -> np.ndarray:
    """Integrate several functions over [a, b] on one shared subdivision.

    ``f(x)`` receives the node vector of shape (n,) and returns shape (k, n).
    """
    spec = spec or QuadratureSpec()
    if not b > a:
        raise ValueError("integrate_vector needs a < b")
    return np.asarray(_adaptive(f, float(a), float(b), spec)[0])


def integrate_semi_infinite(f: Callable[[np.ndarray], np.ndarray],
                            spec: QuadratureSpec | None = None,
                            scale: float = 1.0, max_chunks: int = 64) -> float:
    """Integrate ``f`` over (0, inf) by a doubling scan of finite chunks.

    The chunks are [0, scale], [scale, 2 scale], [2 scale, 4 scale], ... and
    the scan stops once a chunk is negligible relative to the running total
    (see :class:`QuadratureSpec`). Kronrod nodes are interior, so ``f`` is
    never evaluated at 0.
    """
    spec = spec or QuadratureSpec()
    lo, hi = 0.0, float(scale)
    values, errors = [], []
    for _ in range(max_chunks):
        v, e, peak = _adaptive(f, lo, hi, spec)
        values.append(v)
        errors.append(e)
        total = math.fsum(values)
        bound = spec.tail_cutoff * abs(total)
        if total != 0.0 and abs(v) <= bound and peak * (hi - lo) <= bound:
            return total
        lo, hi = hi, 2.0 * hi
    total = math.fsum(values)
    if total == 0.0:
        return 0.0
    raise ConvergenceError("semi-infinite tail did not decay", total, math.fsum(errors))


def integrate_rect_2d(f: Callable[[float, np.ndarray], np.ndarray],
                      spec: QuadratureSpec | None = None, scale: float = 1.0) -> float:
    """Integrate ``f(x, theta)`` over x in (0, inf) and theta in [-pi, pi).

    Nested 1-D quadrature: the inner theta integral is evaluated for every
    outer node x. ``f`` must be vectorised in theta.
    """
    spec = spec or QuadratureSpec()

    def outer(xs: np.ndarray) -> np.ndarray:
        return np.array([integrate(lambda th, x=x: f(x, th), -np.pi, np.pi, spec) for x in xs])

    return integrate_semi_infinite(outer, spec, scale=scale)
