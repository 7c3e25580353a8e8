import math

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_fade import estimators as est
from cascade_fade import harness
from cascade_fade.channel import SimulatorKind, draw_realization, generate_series
from cascade_fade.harness import (ConfigParseError, ExperimentSpec, benchmark_mse, benchmark_timing,
                                  main, parse_config, parse_sweep, read_csv, run_experiment,
                                  run_sweep, write_csv)
from cascade_fade.theory import envelope_pdf_nlos

SMALL = "count=20000\nlags_max_f1tau=2\nlag_points=64\n"


def body(path):
    """CSV text without the timestamp line."""
    return "\n".join(l for l in path.read_text().splitlines() if not l.startswith("# generated="))


class TestParse:
    def test_empty_is_defaults(self):
        spec = parse_config("")
        cfg = spec.simulator
        assert cfg.kind is SimulatorKind.B and cfg.n_tx == cfg.n_rx == 16
        assert cfg.f1 == cfg.f2 == 100.0 and cfg.seed == 0
        assert spec.ts == 1e-5 and spec.count == 1_000_000
        assert spec.outputs == ("autocorr",)
        assert spec.estimator.lags.size == 512 and spec.estimator.lags[-1] == pytest.approx(0.1)
        assert spec.estimator.bins == 100 and spec.estimator.bin_range == (0.0, 6.0)

    def test_los(self):
        spec = parse_config("kind=D\nK=10")
        assert spec.simulator.kind is SimulatorKind.D and spec.simulator.k_factor == 10.0
        f3, phi3 = spec.simulator.resolved_los()
        assert f3 == pytest.approx(100 * math.sqrt(2)) and phi3 == pytest.approx(3 * math.pi / 4)
        assert spec.estimator.bin_range == (0.0, 4.0)

    def test_k_illegal_for_b(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config("kind=B\nK=3")
        assert info.value.line == 2 and "line 2" in str(info.value)

    def test_comments_and_whitespace(self):
        spec = parse_config("# a comment\n  kind = A  # trailing\n\nQ=8\nP=12\n")
        assert spec.simulator.kind is SimulatorKind.A
        assert (spec.simulator.n_tx, spec.simulator.n_rx) == (8, 12)

    def test_pi_expressions(self):
        spec = parse_config("kind=D\nK=1\nf3=50\nphi3=3*pi/4")
        assert spec.simulator.phi3 == pytest.approx(3 * math.pi / 4)
        spec = parse_config("kind=C\nphi1=pi/4\nphi12=-pi/2")
        assert spec.simulator.los.phi1 == pytest.approx(math.pi / 4)

    @pytest.mark.parametrize("text,line", [
        ("kind=B\nfoo=1", 2),
        ("N=abc", 1),
        ("kind=B\n\nQ=4", 3),
        ("kind=A\nN=4", 2),
        ("f1=-3", 1),
        ("kind=X", 1),
        ("outputs=pdf,nonsense", 1),
        ("kind=D\nf3=10", 2),
        ("kind=D\nf3=10\nphi3=0\nv1=3", 4),
        ("kind=B\nlambda=0.1", 2),
        ("emit_theory=maybe", 1),
        ("kind=B\nN=16\nN=8", 3),
        ("noequals", 1),
        ("kind=A\noutputs=timeavg_var", 2),
    ])
    def test_errors_carry_line(self, text, line):
        with pytest.raises(ConfigParseError) as info:
            parse_config(text)
        assert info.value.line == line

    def test_sweep(self):
        specs = parse_sweep("kind=D\nK=0,3,10")
        assert [s.simulator.k_factor for s in specs] == [0.0, 3.0, 10.0]
        assert [s.label for s in specs] == ["_K0", "_K3", "_K10"]
        with pytest.raises(ConfigParseError):
            parse_config("kind=D\nK=0,3")

    def test_sweep_cross_product(self):
        specs = parse_sweep("kind=D\nK=0,3\nN=8,16")
        assert len(specs) == 4
        assert {(s.simulator.k_factor, s.simulator.n_tx) for s in specs} == {(0, 8), (0, 16), (3, 8), (3, 16)}

    def test_lag_validation(self):
        with pytest.raises(ConfigParseError):
            parse_config("count=100")

    def test_spec_validation(self):
        spec = parse_config("")
        with pytest.raises(ValueError):
            ExperimentSpec(spec.simulator, spec.estimator, outputs=())
        with pytest.raises(ValueError):
            ExperimentSpec(spec.simulator, spec.estimator, outputs=("bogus",))


class TestCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        cols = {"x": rng.normal(size=50) * 10.0 ** rng.integers(-30, 30, 50),
                "n": np.arange(50), "gap": np.r_[np.nan, np.ones(49)]}
        path = write_csv(tmp_path / "t.csv", {"seed": 3}, cols)
        table = read_csv(path)
        assert table.metadata["seed"] == "3"
        assert table.metadata["_banner"].startswith("cascade-fade")
        for name, values in cols.items():
            got = table[name]
            both = np.isnan(values) & np.isnan(got)
            assert np.all(both | (np.abs(got - values) <= 1e-15 * np.abs(values)))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
    def test_round_trip_property(self, tmp_path_factory, values):
        path = tmp_path_factory.mktemp("csv") / "p.csv"
        arr = np.array(values)
        got = read_csv(write_csv(path, {}, {"v": arr}))["v"]
        assert np.all(np.abs(got - arr) <= 1e-15 * np.abs(arr))

    def test_unequal_columns(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "bad.csv", {}, {"a": np.ones(2), "b": np.ones(3)})


class TestRun:
    def test_pdf_defaults(self, tmp_path):
        spec = parse_config(f"outputs=pdf\nout_dir={tmp_path}")
        (path,) = run_experiment(spec)
        assert path.name == "pdf.csv"
        table = read_csv(path)
        s = generate_series(draw_realization(spec.simulator, 0), count=1_000_000)
        direct = est.l1_distance(est.histogram_pdf(s.envelope), envelope_pdf_nlos)
        assert float(table.metadata["l1_distance"]) == pytest.approx(direct, rel=1e-12)
        assert np.nansum(table["l1_contribution"]) == pytest.approx(direct, rel=1e-12)
        assert float(table.metadata["l1_distance"]) < 0.02

    def test_sweep_writes_three_files(self, tmp_path):
        specs = parse_sweep(f"kind=D\nK=0,3,10\n{SMALL}out_dir={tmp_path}")
        paths = run_sweep(specs, workers=3)
        assert [p.name for p in paths] == ["autocorr_K0.csv", "autocorr_K3.csv", "autocorr_K10.csv"]
        tables = [read_csv(p) for p in paths]
        assert [t.metadata["K"] for t in tables] == ["0", "3", "10"]
        for t in tables:
            assert list(t.columns)[:2] == ["tau_s", "f1_tau"]

    def test_rerun_identical(self, tmp_path):
        text = f"kind=D\nK=3\nseed=11\ntrials=2\noutputs=pdf,cdf,autocorr,crosscorr,sqenv,lcr,afd,complex_autocorr\n{SMALL}"
        a = run_experiment(parse_config(text + f"out_dir={tmp_path / 'a'}"))
        b = run_experiment(parse_config(text + f"out_dir={tmp_path / 'b'}"), workers=2)
        assert len(a) == 8
        for pa, pb in zip(a, b):
            assert body(pa) == body(pb)

    def test_every_output(self, tmp_path):
        outs = ",".join(harness.OUTPUTS)
        paths = run_experiment(parse_config(f"kind=B\noutputs={outs}\ntrials=3\n{SMALL}out_dir={tmp_path}"))
        names = {p.stem for p in paths}
        assert names == set(harness.OUTPUTS)
        tv = read_csv(tmp_path / "timeavg_var.csv")
        assert np.all(tv["sample_var_cs"] == 0)
        assert tv["closed_form_cc"][0] == pytest.approx(0.0, abs=1e-15)
        lcr = read_csv(tmp_path / "lcr.csv")
        assert list(lcr.columns)[0] == "rho_db"
        afd = read_csv(tmp_path / "afd.csv")
        # -20 dB on a 0.2 s record: too few fades, embedded as an empty cell
        assert np.isnan(afd["empirical_afd_times_f1"][0]) or afd["completed_fades"][0] >= 1

    def test_theory_off(self, tmp_path):
        (path,) = run_experiment(parse_config(f"emit_theory=false\n{SMALL}out_dir={tmp_path}"))
        assert "theory" not in read_csv(path).columns


class TestBenchmarks:
    def test_additions_column(self):
        (row,) = benchmark_mse(sizes=(50,), seeds=range(2), count=20_000, max_f1tau=2.0, lag_points=64)
        assert row.additions == 200
        assert len(row.mse_a) == len(row.mse_b) == 2

    def test_timing(self):
        res = benchmark_timing(samples=10_000_000, size=8)
        assert res["samples"] >= 10_000_000
        assert 0.5 <= res["ratio_A_over_B"] <= 2.0


class TestCli:
    def test_run(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(f"kind=B\noutputs=autocorr,lcr\n{SMALL}out_dir=out\n")
        result = CliRunner().invoke(main, ["run", str(cfg), "--seed", "4", "--workers", "2"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "lcr.csv").exists()
        assert read_csv(tmp_path / "out" / "autocorr.csv").metadata["seed"] == "4"

    def test_run_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("kind=B\nK=3\n")
        result = CliRunner().invoke(main, ["run", str(cfg)])
        assert result.exit_code != 0
        assert "line 2" in result.output

    def test_run_io_failure(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(SMALL)
        result = CliRunner().invoke(main, ["run", str(cfg), "--out-dir", str(blocker / "sub")])
        assert result.exit_code != 0

    def test_theory(self, tmp_path):
        result = CliRunner().invoke(main, ["theory", "lcr", "kind=D", "K=3", "levels_db=0"])
        assert result.exit_code == 0, result.output
        lines = [l for l in result.output.splitlines() if not l.startswith("#")]
        assert lines[0] == "rho_db,level,lcr_over_f1"
        assert float(lines[1].split(",")[2]) == pytest.approx(1.2331246709272214, rel=1e-6)
        out = tmp_path / "pdf.csv"
        result = CliRunner().invoke(main, ["theory", "pdf", "--out", str(out)])
        assert result.exit_code == 0 and read_csv(out)["pdf"][0] == 0.0

    def test_theory_bad_param(self):
        result = CliRunner().invoke(main, ["theory", "autocorr", "kind=B", "K=2"])
        assert result.exit_code != 0

    def test_benchmark_commands(self, tmp_path):
        result = CliRunner().invoke(main, ["benchmark", "timing", "--samples", "200000"])
        assert result.exit_code == 0 and "ratio_A_over_B=" in result.output
        out = tmp_path / "mse.csv"
        result = CliRunner().invoke(main, ["benchmark", "mse", "--seeds", "1", "--count", "20000",
                                           "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert list(read_csv(out)["additions"]) == [128, 200, 288, 392]

    def test_version(self):
        result = CliRunner().invoke(main, ["--version"])
        assert result.exit_code == 0 and "cascade-fade" in result.output
