"""Sum-of-sinusoids generators for cascaded Rayleigh channels.

Four simulator kinds share one interface:

* ``A``: product of two complex-exponential sums (angles on [0, pi/2) at the
  transmitter and [0, pi) at the receiver).
* ``B``: product of two complex Gaussian approximations, each built from
  separate cosine sums for the in-phase and quadrature parts.
* ``C`` / ``D``: ``A`` / ``B`` plus a rotating line-of-sight phasor weighted
  by the power ratio ``K``.

Random phases come from a counter-based Philox stream keyed by
``(seed, trial_index, stream_id)``, so any trial can be regenerated alone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

__all__ = [
    "ConfigError",
    "GeometryError",
    "SimulatorKind",
    "LosGeometry",
    "SimulatorConfig",
    "Realization",
    "ComplexSeries",
    "relative_doppler",
    "los_angle",
    "phase_stream",
    "draw_realization",
    "sample",
    "generate_series",
]

# Samples per GEMM block in generate_series.
_BLOCK = 1024
# Blocks processed per pass, bounding the working set to ~ _BLOCK * _PASS.
_PASS = 256


class ConfigError(ValueError):
    """Invalid simulator configuration."""


class GeometryError(ConfigError):
    """LOS geometry for which the LOS angle is undefined."""


class SimulatorKind(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def has_los(self) -> bool:
        return self in (SimulatorKind.C, SimulatorKind.D)

    @property
    def uses_cosine_sums(self) -> bool:
        """True for B/D (separate I/Q cosine sums), False for A/C."""
        return self in (SimulatorKind.B, SimulatorKind.D)


@dataclass(frozen=True)
class LosGeometry:
    """Terminal speeds, directions and carrier wavelength for the LOS path."""

    v1: float
    v2: float
    phi1: float
    phi12: float
    wavelength: float

    def __post_init__(self):
        problems = []
        if not (self.v1 >= 0 and math.isfinite(self.v1)):
            problems.append("v1 >= 0")
        if not (self.v2 >= 0 and math.isfinite(self.v2)):
            problems.append("v2 >= 0")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            problems.append("lambda > 0")
        for name in ("phi1", "phi12"):
            if not -math.pi <= getattr(self, name) < math.pi:
                problems.append(f"{name} in [-pi, pi)")
        if problems:
            raise ConfigError("LosGeometry violates: " + ", ".join(problems))

    @property
    def degenerate(self) -> bool:
        """True when the LOS angle formula is undefined (v1 = 0 or v3 = 0)."""
        return self.v1 == 0 or relative_doppler(self) == 0


def relative_doppler(geom: LosGeometry) -> float:
    """Doppler frequency of the LOS path from the relative terminal velocity."""
    v1, v2 = abs(geom.v1), abs(geom.v2)
    dx = v1 * math.cos(geom.phi12) - v2
    dy = v1 * math.sin(geom.phi12)
    return math.hypot(dx, dy) / geom.wavelength


def los_angle(geom: LosGeometry, f3: float) -> float:
    """Angle between the relative velocity and the LOS direction.

    Uses the law of cosines on the triangle (v1, v2, v3) with v3 = f3 * lambda,
    offset by ``phi1``.
    """
    v3 = f3 * geom.wavelength
    if geom.v1 == 0 or v3 == 0:
        raise GeometryError("LOS angle undefined for v1 = 0 or v3 = 0; supply phi3 explicitly")
    arg = (geom.v1 ** 2 + v3 ** 2 - geom.v2 ** 2) / (2.0 * geom.v1 * v3)
    if abs(arg) > 1.0:
        if abs(arg) - 1.0 > 1e-12:
            raise GeometryError(f"arccos argument {arg!r} outside [-1, 1]")
        arg = math.copysign(1.0, arg)
    return math.acos(arg) + geom.phi1


@dataclass(frozen=True)
class SimulatorConfig:
    """Which simulator to run and its parameters.

    ``n_tx``/``n_rx`` are the sinusoid counts at the transmitter and the
    receiver. Kinds C/D need the LOS Doppler and angle, given either
    explicitly (``f3`` and ``phi3``) or through ``los``. When the geometry is
    degenerate, ``phi3`` must be supplied alongside ``los``.
    """

    kind: SimulatorKind = SimulatorKind.B
    n_tx: int = 16
    n_rx: int = 16
    f1: float = 100.0
    f2: float = 100.0
    k_factor: float = 0.0
    los: Optional[LosGeometry] = None
    f3: Optional[float] = None
    phi3: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SimulatorKind(self.kind))
        problems = []
        if int(self.n_tx) < 1 or int(self.n_tx) != self.n_tx:
            problems.append("n_tx >= 1 (integer)")
        if int(self.n_rx) < 1 or int(self.n_rx) != self.n_rx:
            problems.append("n_rx >= 1 (integer)")
        if not (self.f1 > 0 and math.isfinite(self.f1)):
            problems.append("f1 > 0")
        if not (self.f2 > 0 and math.isfinite(self.f2)):
            problems.append("f2 > 0")
        if self.kind.has_los:
            if not (self.k_factor >= 0 and math.isfinite(self.k_factor)):
                problems.append("K >= 0")
            if self.los is None:
                if self.f3 is None or self.phi3 is None:
                    problems.append("kinds C/D need either (f3, phi3) or a LosGeometry")
                elif not self.f3 >= 0:
                    problems.append("f3 >= 0")
            else:
                if self.f3 is not None:
                    problems.append("f3 is derived from the LosGeometry; do not give both")
                if self.los.degenerate and self.phi3 is None:
                    problems.append("degenerate LosGeometry (v1 = 0 or v3 = 0) needs an explicit phi3")
                if not self.los.degenerate and self.phi3 is not None:
                    problems.append("phi3 override is only accepted for degenerate LosGeometry")
        else:
            if self.k_factor != 0:
                problems.append("K must be absent for kinds A/B")
            if self.los is not None or self.f3 is not None or self.phi3 is not None:
                problems.append("LOS parameters must be absent for kinds A/B")
        if problems:
            raise ConfigError("SimulatorConfig violates: " + "; ".join(problems))

    def resolved_los(self) -> tuple[float, float]:
        """Return (f3, phi3), deriving them from the geometry if needed."""
        if not self.kind.has_los:
            return 0.0, 0.0
        if self.los is None:
            return float(self.f3), float(self.phi3)
        f3 = relative_doppler(self.los)
        phi3 = self.phi3 if self.phi3 is not None else los_angle(self.los, f3)
        return f3, float(phi3)


# Stream ids per phase array. B and D share ids so that K = 0 reproduces B.
_STREAM_PSI = 0
_STREAM_VARPHI = 1
_STREAM_THETA = 2
_STREAM_BIG_THETA = 3
_STREAM_PHI = 4
_STREAM_BIG_PSI = 5
_STREAM_PHI0 = 6


def phase_stream(seed: int, trial_index: int, stream_id: int) -> np.random.Generator:
    """Independent Philox generator for one phase array of one trial."""
    key = np.random.SeedSequence([int(seed) % 2 ** 64, int(trial_index), int(stream_id)])
    return np.random.Generator(np.random.Philox(key))


def _uniform_phases(seed, trial, stream, size):
    return phase_stream(seed, trial, stream).uniform(-np.pi, np.pi, size)


@dataclass(frozen=True, eq=False)
class Realization:
    """One frozen draw of every random quantity of a simulator.

    Use :func:`draw_realization` for seeded draws, or :meth:`from_phases` to
    pin the phases by hand.
    """

    config: SimulatorConfig
    psi: float
    varphi: float
    theta: np.ndarray
    phi: np.ndarray
    big_theta: Optional[np.ndarray]
    big_psi: Optional[np.ndarray]
    phi0: float
    alpha: np.ndarray
    beta: np.ndarray
    f3: float
    phi3: float
    trial_index: int = -1

    @classmethod
    def from_phases(cls, config: SimulatorConfig, *, psi: float, varphi: float,
                    theta, phi, big_theta=None, big_psi=None, phi0: float = 0.0,
                    trial_index: int = -1) -> "Realization":
        q, p = config.n_tx, config.n_rx
        theta = _frozen(theta, q, "theta")
        phi = _frozen(phi, p, "phi")
        if config.kind.uses_cosine_sums:
            big_theta = _frozen(big_theta, q, "big_theta")
            big_psi = _frozen(big_psi, p, "big_psi")
        elif big_theta is not None or big_psi is not None:
            raise ConfigError("big_theta/big_psi only exist for kinds B/D")
        n = np.arange(1, q + 1)
        m = np.arange(1, p + 1)
        alpha = (2 * n * np.pi - np.pi + psi) / (4 * q)
        if config.kind.uses_cosine_sums:
            beta = (2 * m * np.pi - np.pi + varphi) / (4 * p)
        else:
            beta = (2 * m * np.pi - np.pi + varphi) / (2 * p)
        alpha.setflags(write=False)
        beta.setflags(write=False)
        f3, phi3 = config.resolved_los()
        return cls(config, float(psi), float(varphi), theta, phi, big_theta, big_psi,
                   float(phi0) if config.kind.has_los else 0.0, alpha, beta, f3, phi3,
                   int(trial_index))

    def same_draw(self, other: "Realization") -> bool:
        """Bit-exact equality of every drawn and derived quantity."""
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def _frozen(values, size, name):
    if values is None:
        raise ConfigError(f"{name} is required for this simulator kind")
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise ConfigError(f"{name} must have {size} entries, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


def draw_realization(config: SimulatorConfig, trial_index: int = 0) -> Realization:
    """Draw all phases of trial ``trial_index`` uniformly on [-pi, pi)."""
    if trial_index < 0:
        raise ConfigError("trial_index must be >= 0")
    s, t = config.seed, trial_index
    q, p = config.n_tx, config.n_rx
    kw = dict(
        psi=float(_uniform_phases(s, t, _STREAM_PSI, None)),
        varphi=float(_uniform_phases(s, t, _STREAM_VARPHI, None)),
        theta=_uniform_phases(s, t, _STREAM_THETA, q),
        phi=_uniform_phases(s, t, _STREAM_PHI, p),
    )
    if config.kind.uses_cosine_sums:
        kw["big_theta"] = _uniform_phases(s, t, _STREAM_BIG_THETA, q)
        kw["big_psi"] = _uniform_phases(s, t, _STREAM_BIG_PSI, p)
    if config.kind.has_los:
        kw["phi0"] = float(_uniform_phases(s, t, _STREAM_PHI0, None))
    return Realization.from_phases(config, trial_index=trial_index, **kw)


@dataclass(frozen=True, eq=False)
class ComplexSeries:
    """Uniformly sampled complex gain: ``samples[i]`` is the gain at ``t0 + i*ts``."""

    t0: float
    ts: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.ts > 0:
            raise ConfigError("ts must be > 0")
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ConfigError("series needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("series samples must be finite")

    @property
    def count(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.ts * np.arange(self.count)

    @property
    def duration(self) -> float:
        return self.count * self.ts

    @property
    def inphase(self) -> np.ndarray:
        return self.samples.real

    @property
    def quadrature(self) -> np.ndarray:
        return self.samples.imag

    @property
    def envelope(self) -> np.ndarray:
        return np.abs(self.samples)


def _branch_terms(r: Realization):
    """Angular frequencies (rad/s) and phases of every sinusoid.

    Returns a list of (omega, phase) pairs: two for kinds A/C (complex sums)
    and four for B/D (cosine sums, order c1, s1, c2, s2).
    """
    w1 = 2 * np.pi * r.config.f1
    w2 = 2 * np.pi * r.config.f2
    if r.config.kind.uses_cosine_sums:
        return [
            (w1 * np.cos(r.alpha), r.theta),
            (w1 * np.sin(r.alpha), r.big_theta),
            (w2 * np.cos(r.beta), r.phi),
            (w2 * np.sin(r.beta), r.big_psi),
        ]
    return [(w1 * np.cos(r.alpha), r.theta), (w2 * np.cos(r.beta), r.phi)]


def _combine(r: Realization, sums, t):
    cfg = r.config
    k_tx = math.sqrt(math.sqrt(2.0) / cfg.n_tx)
    k_rx = math.sqrt(math.sqrt(2.0) / cfg.n_rx)
    if cfg.kind.uses_cosine_sums:
        c1, s1, c2, s2 = sums
        scale = k_tx * k_rx
        g = np.empty(c1.shape, dtype=complex)
        g.real = scale * (c1 * c2 - s1 * s2)
        g.imag = scale * (c1 * s2 + s1 * c2)
    else:
        g = (k_tx * sums[0]) * (k_rx * sums[1])
    if not cfg.kind.has_los:
        return g
    k = cfg.k_factor
    los = np.sqrt(2.0 * k) * np.exp(1j * (2 * np.pi * r.f3 * np.cos(r.phi3) * t + r.phi0))
    return (g + los) / np.sqrt(2.0 * (1.0 + k))


def sample(r: Realization, t):
    """Channel gain at time(s) ``t`` by direct evaluation of every sinusoid."""
    t_arr = np.asarray(t, dtype=float)
    tt = np.atleast_1d(t_arr)[:, None]
    sums = []
    for omega, phase in _branch_terms(r):
        arg = tt * omega[None, :] + phase[None, :]
        if r.config.kind.uses_cosine_sums:
            sums.append(np.cos(arg).sum(axis=1))
        else:
            sums.append(np.exp(1j * arg).sum(axis=1))
    out = _combine(r, sums, np.atleast_1d(t_arr))
    return complex(out[0]) if t_arr.ndim == 0 else out


def _phasor_sum_blocks(omega, phase, t0, ts, count, real_only):
    """sum_n exp(j(omega_n t_i + phase_n)) on t_i = t0 + i ts, block by block.

    Each block b of _BLOCK samples is a matrix product: the block start
    phasors exp(j(omega (t0 + b B ts) + phase)) times the within-block
    rotations exp(j omega k ts).
    """
    blocks = -(-count // _BLOCK)
    k = np.arange(_BLOCK) * ts
    rot = np.exp(1j * np.outer(omega, k))
    if real_only:
        # Re(S R) = [Re S, Im S] @ [Re R; -Im R], a single real product
        rot_stack = np.concatenate([rot.real, -rot.imag], axis=0)
    out = np.empty(blocks * _BLOCK, dtype=float if real_only else complex)
    for start in range(0, blocks, _PASS):
        stop = min(blocks, start + _PASS)
        b = np.arange(start, stop)
        arg = np.outer(t0 + b * (_BLOCK * ts), omega) + phase[None, :]
        if real_only:
            chunk = np.concatenate([np.cos(arg), np.sin(arg)], axis=1) @ rot_stack
        else:
            chunk = np.exp(1j * arg) @ rot
        out[start * _BLOCK: stop * _BLOCK] = chunk.reshape(-1)
    return out[:count]


def generate_series(r: Realization, t0: float = 0.0, ts: float = 1e-5,
                    count: int = 1_000_000) -> ComplexSeries:
    """Sample the channel on a uniform grid ``t0 + i*ts`` for ``i < count``."""
    count = int(count)
    if count < 1:
        raise ConfigError("count must be >= 1")
    if not ts > 0:
        raise ConfigError("ts must be > 0")
    real_only = r.config.kind.uses_cosine_sums
    sums = [_phasor_sum_blocks(omega, phase, float(t0), float(ts), count, real_only)
            for omega, phase in _branch_terms(r)]
    t = t0 + ts * np.arange(count) if r.config.kind.has_los else None
    return ComplexSeries(float(t0), float(ts), _combine(r, sums, t))
