import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_fade.channel import (ComplexSeries, ConfigError, GeometryError, LosGeometry,
                                  Realization, SimulatorConfig, SimulatorKind, draw_realization,
                                  generate_series, los_angle, relative_doppler, sample)

GEOM = LosGeometry(v1=10, v2=10, phi1=math.pi / 2, phi12=math.pi / 2, wavelength=0.1)


def config(kind="B", **kw):
    if SimulatorKind(kind).has_los:
        if "los" not in kw and "f3" not in kw:
            kw["los"] = GEOM
    else:
        kw.pop("k_factor", None)
    return SimulatorConfig(kind=kind, **kw)


def zero_phases(cfg, psi=0.0, varphi=0.0):
    kw = dict(psi=psi, varphi=varphi, theta=np.zeros(cfg.n_tx), phi=np.zeros(cfg.n_rx))
    if cfg.kind.uses_cosine_sums:
        kw.update(big_theta=np.zeros(cfg.n_tx), big_psi=np.zeros(cfg.n_rx))
    return Realization.from_phases(cfg, **kw)


class TestConfig:
    def test_defaults(self):
        cfg = SimulatorConfig()
        assert cfg.kind is SimulatorKind.B and cfg.n_tx == cfg.n_rx == 16

    @pytest.mark.parametrize("kw", [dict(n_tx=0), dict(n_rx=-1), dict(f1=0), dict(f2=-5),
                                    dict(k_factor=1.0), dict(los=GEOM), dict(f3=10.0)])
    def test_nlos_rejects(self, kw):
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="B", **kw)

    def test_lists_every_violation(self):
        with pytest.raises(ConfigError) as info:
            SimulatorConfig(kind="A", n_tx=0, f1=0)
        msg = str(info.value)
        assert "n_tx" in msg and "f1" in msg

    def test_los_needs_exactly_one_source(self):
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="D", k_factor=1.0)
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="D", k_factor=1.0, los=GEOM, f3=10.0)
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="C", k_factor=-1.0, los=GEOM)
        SimulatorConfig(kind="D", k_factor=1.0, f3=50.0, phi3=0.3)

    def test_degenerate_geometry_needs_phi3(self):
        still = LosGeometry(v1=10, v2=10, phi1=0.0, phi12=0.0, wavelength=0.1)
        assert still.degenerate
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="D", los=still)
        cfg = SimulatorConfig(kind="D", los=still, phi3=0.7)
        assert cfg.resolved_los() == (0.0, 0.7)
        with pytest.raises(ConfigError):
            SimulatorConfig(kind="D", los=GEOM, phi3=0.7)

    @pytest.mark.parametrize("kw", [dict(v1=-1), dict(v2=float("nan")), dict(wavelength=0),
                                    dict(phi1=math.pi), dict(phi12=-4.0)])
    def test_geometry_rejects(self, kw):
        base = dict(v1=10, v2=10, phi1=0.0, phi12=0.0, wavelength=0.1)
        base.update(kw)
        with pytest.raises(ConfigError):
            LosGeometry(**base)


class TestGeometry:
    def test_co_moving(self):
        g = LosGeometry(v1=10, v2=10, phi1=0.0, phi12=0.0, wavelength=0.1)
        assert relative_doppler(g) == 0.0

    def test_perpendicular(self):
        assert relative_doppler(GEOM) == pytest.approx(100 * math.sqrt(2), rel=1e-15)

    def test_rx_only(self):
        g = LosGeometry(v1=0, v2=20, phi1=0.0, phi12=0.0, wavelength=0.2)
        assert relative_doppler(g) == pytest.approx(100.0, rel=1e-15)

    def test_head_on(self):
        g = LosGeometry(v1=10, v2=10, phi1=0.4, phi12=-math.pi, wavelength=0.1)
        assert los_angle(g, relative_doppler(g)) == pytest.approx(0.4, abs=1e-12)

    def test_default_angle(self):
        assert los_angle(GEOM, relative_doppler(GEOM)) == pytest.approx(3 * math.pi / 4, abs=1e-12)

    def test_tx_only(self):
        g = LosGeometry(v1=10, v2=0, phi1=0.25, phi12=0.3, wavelength=0.1)
        assert los_angle(g, relative_doppler(g)) == pytest.approx(0.25, abs=1e-7)

    def test_degenerate_and_out_of_range(self):
        with pytest.raises(GeometryError):
            los_angle(LosGeometry(v1=0, v2=20, phi1=0, phi12=0, wavelength=0.2), 100.0)
        with pytest.raises(GeometryError):
            los_angle(GEOM, 0.0)
        with pytest.raises(GeometryError):
            los_angle(GEOM, 1e6)  # triangle inequality broken

    def test_default_los_doppler(self):
        f3, phi3 = config("D", k_factor=3).resolved_los()
        assert f3 * math.cos(phi3) == pytest.approx(-100.0, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 50), st.floats(0.0, 50), st.floats(-math.pi, 3.1))
    def test_angle_defined_for_valid_triangles(self, v1, v2, phi12):
        g = LosGeometry(v1=v1, v2=v2, phi1=0.0, phi12=phi12, wavelength=0.1)
        f3 = relative_doppler(g)
        if f3 * 0.1 < 1e-6 * v1:
            return
        phi3 = los_angle(g, f3)
        assert 0.0 <= phi3 <= math.pi


class TestRealization:
    def test_range(self):
        r = draw_realization(config("B", seed=42), 0)
        for arr in (r.theta, r.big_theta, r.phi, r.big_psi):
            assert arr.shape == (16,)
            assert np.all((arr >= -np.pi) & (arr < np.pi))
        assert -np.pi <= r.psi < np.pi and -np.pi <= r.varphi < np.pi

    def test_deterministic(self):
        cfg = config("D", seed=42, k_factor=2.0)
        assert draw_realization(cfg, 3).same_draw(draw_realization(cfg, 3))
        assert not draw_realization(cfg, 3).same_draw(draw_realization(cfg, 4))

    def test_seed_wraps_to_64_bits(self):
        a = draw_realization(config("B", seed=-1))
        b = draw_realization(config("B", seed=2 ** 64 - 1))
        assert np.array_equal(a.theta, b.theta)

    def test_forced_offset(self):
        r = zero_phases(config("B"), psi=math.pi / 2)
        assert r.alpha[0] == pytest.approx(3 * math.pi / 128, abs=1e-15)

    def test_angle_spacing(self):
        for n in (1, 4, 16, 33):
            r = draw_realization(config("B", n_tx=n, n_rx=n))
            assert np.allclose(np.diff(r.alpha), np.pi / (2 * n), atol=1e-15, rtol=0)
            assert np.allclose(np.diff(r.beta), np.pi / (2 * n), atol=1e-15, rtol=0)

    def test_kind_a_angles(self):
        r = draw_realization(config("A", n_tx=8, n_rx=8))
        n = np.arange(1, 9)
        assert np.allclose(r.alpha, (2 * n * np.pi - np.pi + r.psi) / 32)
        assert np.allclose(r.beta, (2 * n * np.pi - np.pi + r.varphi) / 16)
        assert r.big_theta is None and r.big_psi is None

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 2 ** 63), st.sampled_from(list("ABCD")))
    def test_angle_bounds(self, n, seed, kind):
        r = draw_realization(config(kind, n_tx=n, n_rx=n, seed=seed, k_factor=0.5))
        pad = np.pi / (4 * n)
        assert np.all(r.alpha > -pad) and np.all(r.alpha < np.pi / 2 + pad)
        if kind in "BD":
            assert np.all(r.beta > -pad) and np.all(r.beta < np.pi / 2 + pad)
        else:
            assert np.all(r.beta > -2 * pad) and np.all(r.beta < np.pi + 2 * pad)

    def test_read_only(self):
        r = draw_realization(config("B"))
        with pytest.raises(ValueError):
            r.theta[0] = 1.0

    def test_hook_validation(self):
        cfg = config("B", n_tx=2, n_rx=2)
        with pytest.raises(ConfigError):
            Realization.from_phases(cfg, psi=0, varphi=0, theta=[0, 0], phi=[0, 0])
        with pytest.raises(ConfigError):
            Realization.from_phases(config("A", n_tx=2, n_rx=2), psi=0, varphi=0, theta=[0, 0],
                                    phi=[0, 0], big_theta=[0, 0], big_psi=[0, 0])
        with pytest.raises(ConfigError):
            Realization.from_phases(cfg, psi=0, varphi=0, theta=[0], phi=[0, 0],
                                    big_theta=[0, 0], big_psi=[0, 0])
        with pytest.raises(ConfigError):
            draw_realization(cfg, -1)


class TestSample:
    def test_hand_value(self):
        r = zero_phases(config("B", n_tx=1, n_rx=1))
        assert sample(r, 0.0) == pytest.approx(2 * math.sqrt(2) * 1j, abs=1e-15)

    def test_kind_a_formula(self):
        cfg = config("A", n_tx=3, n_rx=5)
        r = draw_realization(cfg, 2)
        t = 0.0123
        g1 = math.sqrt(math.sqrt(2) / 3) * sum(
            np.exp(1j * (2 * np.pi * 100 * t * np.cos(a) + th)) for a, th in zip(r.alpha, r.theta))
        g2 = math.sqrt(math.sqrt(2) / 5) * sum(
            np.exp(1j * (2 * np.pi * 100 * t * np.cos(b) + ph)) for b, ph in zip(r.beta, r.phi))
        assert sample(r, t) == pytest.approx(g1 * g2, abs=1e-13)

    def test_kind_b_formula(self):
        cfg = config("B", n_tx=4, n_rx=3, f1=70.0, f2=130.0)
        r = draw_realization(cfg, 1)
        t = 0.031
        w1, w2 = 2 * np.pi * 70, 2 * np.pi * 130
        c1 = np.sum(np.cos(w1 * t * np.cos(r.alpha) + r.theta))
        s1 = np.sum(np.cos(w1 * t * np.sin(r.alpha) + r.big_theta))
        c2 = np.sum(np.cos(w2 * t * np.cos(r.beta) + r.phi))
        s2 = np.sum(np.cos(w2 * t * np.sin(r.beta) + r.big_psi))
        ref = math.sqrt(2) / math.sqrt(12) * (c1 + 1j * s1) * (c2 + 1j * s2)
        assert sample(r, t) == pytest.approx(ref, abs=1e-13)

    def test_los_dominated(self):
        r = draw_realization(config("D", k_factor=1e6))
        assert abs(abs(sample(r, 0.0)) - 1) < 1e-3
        # the residual scales as |g| / sqrt(2K), so peaks of |g| near 3 reach ~3e-3
        dev = np.abs(np.abs(sample(r, np.linspace(0, 1, 1001))) - 1)
        assert np.median(dev) < 1e-3
        assert np.max(dev) < 5 / math.sqrt(2e6)

    def test_los_wraps_nlos(self):
        cfg = config("C", k_factor=2.0)
        r = draw_realization(cfg, 0)
        t = 0.2
        g = sample(Realization.from_phases(config("A"), psi=r.psi, varphi=r.varphi,
                                           theta=r.theta, phi=r.phi), t)
        los = math.sqrt(4.0) * np.exp(1j * (2 * np.pi * -100.0 * t + r.phi0))
        assert sample(r, t) == pytest.approx((g + los) / math.sqrt(6.0), abs=1e-12)

    def test_k0_reduces_to_b(self):
        b = draw_realization(config("B", seed=9), 5)
        d = draw_realization(config("D", seed=9, k_factor=0.0), 5)
        t = np.linspace(0, 3, 4001)
        assert np.array_equal(sample(d, t), sample(b, t) / np.sqrt(2.0))

    def test_scalar_vs_array(self):
        r = draw_realization(config("B"))
        assert isinstance(sample(r, 0.5), complex)
        assert sample(r, np.array([0.5]))[0] == sample(r, 0.5)


class TestSeries:
    @pytest.mark.parametrize("kind", list("ABCD"))
    def test_matches_direct_evaluation(self, kind):
        r = draw_realization(config(kind, k_factor=1.5), 0)
        s = generate_series(r, t0=0.37, ts=1e-4, count=5000)
        assert np.max(np.abs(s.samples - sample(r, s.times))) < 1e-10

    def test_single_sample(self):
        r = draw_realization(config("B"))
        s = generate_series(r, t0=5.0, count=1)
        assert s.count == 1 and s.samples[0] == pytest.approx(sample(r, 5.0), abs=1e-12)

    def test_default_window(self):
        s = generate_series(draw_realization(config("B", seed=42)), ts=1e-5, count=1_000_000)
        assert s.duration == pytest.approx(10.0)
        assert 1.95 <= np.mean(np.abs(s.samples) ** 2) <= 2.05

    @pytest.mark.parametrize("kind,k", [("C", 0.0), ("C", 3.0), ("D", 0.5), ("D", 10.0)])
    def test_los_power(self, kind, k):
        s = generate_series(draw_realization(config(kind, k_factor=k), 1), ts=1e-5, count=1_000_000)
        assert 0.95 <= np.mean(np.abs(s.samples) ** 2) <= 1.05

    @pytest.mark.parametrize("n", [8, 12])
    def test_b_power(self, n):
        s = generate_series(draw_realization(config("B", n_tx=n, n_rx=n), 0), count=1_000_000)
        assert 1.9 <= np.mean(np.abs(s.samples) ** 2) <= 2.1

    def test_trials_differ(self):
        cfg = config("B")
        a = generate_series(draw_realization(cfg, 0), count=1000)
        b = generate_series(draw_realization(cfg, 1), count=1000)
        assert np.max(np.abs(a.samples - b.samples)) > 0

    def test_bit_exact_repeat(self):
        cfg = config("D", k_factor=3.0, seed=77)
        a = generate_series(draw_realization(cfg, 2), count=20_000)
        b = generate_series(draw_realization(cfg, 2), count=20_000)
        assert np.array_equal(a.samples, b.samples)

    def test_k0_series_reduction(self):
        b = generate_series(draw_realization(config("B"), 0), count=50_000)
        d = generate_series(draw_realization(config("D", k_factor=0.0), 0), count=50_000)
        assert np.array_equal(d.samples, b.samples / np.sqrt(2.0))

    def test_validation(self):
        r = draw_realization(config("B"))
        with pytest.raises(ConfigError):
            generate_series(r, count=0)
        with pytest.raises(ConfigError):
            generate_series(r, ts=0.0)
        with pytest.raises(ConfigError):
            ComplexSeries(0.0, 1e-3, np.array([np.nan + 0j]))

    def test_views(self):
        s = ComplexSeries(1.0, 0.5, np.array([3 + 4j, 1j]))
        assert np.array_equal(s.times, [1.0, 1.5])
        assert np.array_equal(s.envelope, [5.0, 1.0])
        assert np.array_equal(s.inphase, [3.0, 0.0]) and np.array_equal(s.quadrature, [4.0, 1.0])
