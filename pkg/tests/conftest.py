import functools
import math

import pytest

from cascade_fade.channel import LosGeometry, SimulatorConfig, draw_realization, generate_series

DEFAULT_GEOMETRY = LosGeometry(v1=10.0, v2=10.0, phi1=math.pi / 2, phi12=math.pi / 2, wavelength=0.1)


def make_config(kind, k=0.0, n=16, seed=0):
    if kind in ("C", "D"):
        return SimulatorConfig(kind=kind, n_tx=n, n_rx=n, k_factor=k, los=DEFAULT_GEOMETRY, seed=seed)
    return SimulatorConfig(kind=kind, n_tx=n, n_rx=n, seed=seed)


@functools.lru_cache(maxsize=24)
def cached_series(kind, trial=0, k=0.0, n=16, seed=0, count=1_000_000, ts=1e-5):
    """Seeded series shared across test modules (default settings unless overridden)."""
    return generate_series(draw_realization(make_config(kind, k, n, seed), trial), ts=ts, count=count)


# -- acceptance report -------------------------------------------------------

_RESULTS = []


class AcceptanceRecorder:
    def check(self, criterion, name, value, passed, bound):
        _RESULTS.append((criterion, name, passed, value, bound))
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted({r[0] for r in _RESULTS}):
        rows = [r for r in _RESULTS if r[0] == criterion]
        ok = sum(1 for r in rows if r[2])
        tr.write_line(f"criterion {criterion:2d}: {'PASS' if ok == len(rows) else 'FAIL'} "
                      f"({ok}/{len(rows)} checks)")
    tr.write_line("")
    for criterion, name, passed, value, bound in sorted(_RESULTS, key=lambda r: (r[0], r[1])):
        tr.write_line(f"{'PASS' if passed else 'FAIL'} c{criterion:02d} {name}: value={_fmt(value)} bound={bound}")
    n_pass = sum(1 for r in _RESULTS if r[2])
    tr.write_line(f"{n_pass}/{len(_RESULTS)} acceptance checks passed")
