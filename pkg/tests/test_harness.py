import json

import numpy as np
import pytest
import yaml

from displab.harness import (
    EXPERIMENTS,
    Check,
    decoupling_exponent,
    default_config,
    fingerprint,
    fit_exponent,
    fit_loglog,
    fixed_time_exponent,
    run_experiment,
    smoothing_window,
    strichartz_exponent,
    theoretical_exponents,
)
from displab.harness.cli import load_config, main
from displab.harness.report import write_report


class TestExponents:
    def test_spot_values(self):
        assert strichartz_exponent(8, 1) == 0.125
        assert strichartz_exponent(4, 2) == 0.0
        assert decoupling_exponent(4, 1, 2) == 0.125
        assert theoretical_exponents(8, 2, d=1).s_nec_mod == 0.125

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_s_continuous_at_threshold(self, d):
        pc = 2 * (d + 2) / d
        assert strichartz_exponent(pc, d) == 0.0
        assert strichartz_exponent(pc * (1 + 1e-9), d) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("d,k", [(1, 0), (2, 0), (2, 1)])
    def test_alpha_continuous_at_threshold(self, d, k):
        pc = 2 * (d + 2 - k) / (d - k)
        below = decoupling_exponent(pc, k, d)
        above = decoupling_exponent(pc * (1 + 1e-9), k, d)
        assert above == pytest.approx(below, abs=1e-8)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            strichartz_exponent(1.5, 1)
        with pytest.raises(ValueError):
            decoupling_exponent(4, 2, 2)

    def test_fixed_time(self):
        assert [fixed_time_exponent(p, 1) for p in (2, 4, np.inf)] == [0.0, 0.25, 0.5]

    def test_squeeze_matches_at_p8(self):
        lo, hi = smoothing_window(8, 2, 1)
        assert lo == hi == 0.125

    def test_bundle_json(self):
        doc = theoretical_exponents(np.inf, np.inf).as_dict()
        assert doc["p"] == "inf" and doc["q"] == "inf"
        json.dumps(doc)


class TestFit:
    def test_exact_power_law(self):
        k = np.arange(6)
        fit = fit_loglog(2.0**k, 2.0 ** (0.75 * k))
        assert fit.slope == pytest.approx(0.75, abs=1e-12)
        assert fit.stderr < 1e-12 and fit.reliable

    def test_constant(self):
        slope, stderr, r2 = fit_exponent([(2.0**k, 3.0) for k in range(5)])
        assert slope == pytest.approx(0.0, abs=1e-12)
        assert r2 == 1.0

    def test_four_tuple_records(self):
        recs = [(2.0**k, 1.0, 1.0, 2.0 ** (-k)) for k in range(4)]
        assert fit_exponent(recs)[0] == pytest.approx(-1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="nonpositive"):
            fit_exponent([(1, 1.0), (2, 2.0), (4, 0.0), (8, 3.0)])

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            fit_exponent([(1, 1.0), (2, 2.0), (4, 3.0)])

    def test_drops_boundary_outlier(self):
        s = 2.0 ** np.arange(6)
        v = s**0.5
        v[0] *= 4
        fit = fit_loglog(s, v)
        assert fit.dropped == (1.0,)
        assert fit.slope == pytest.approx(0.5)

    def test_monte_carlo_calibration(self):
        s = 2.0 ** np.arange(4, 10)
        worst = 0.0
        for seed in range(100):
            noise = 1 + 0.02 * np.random.default_rng(seed).standard_normal(6)
            slope = fit_exponent(zip(s, s**0.25 * noise))[0]
            worst = max(worst, abs(slope - 0.25))
        assert worst <= 0.05


class TestRunner:
    def test_registry(self):
        assert {"strichartz_mod", "sqfn", "nls_monitor", "decouple_const"} <= set(EXPERIMENTS)

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            run_experiment("knapp_aniso_local", {"bogus": 1})

    def test_unknown_kind(self):
        with pytest.raises((KeyError, ValueError)):
            run_experiment("nope")

    def test_too_few_scales(self):
        with pytest.raises(ValueError):
            run_experiment("knapp_aniso_local", {"scales": [0.125, 0.0625]})

    def test_deterministic_and_fingerprinted(self):
        a = run_experiment("knapp_aniso_local")
        b = run_experiment("knapp_aniso_local")
        assert a.fingerprint == b.fingerprint
        assert a.to_dict() == b.to_dict()
        assert a.passed
        c = run_experiment("knapp_aniso_local", seed=1)
        assert c.fingerprint != a.fingerprint

    def test_fingerprint_is_order_independent(self):
        assert fingerprint("k", {"a": 1, "b": 2}, 0) == fingerprint("k", {"b": 2, "a": 1}, 0)

    def test_workers_give_same_records(self):
        a = run_experiment("knapp_aniso_local")
        b = run_experiment("knapp_aniso_local", workers=2)
        assert a.records == b.records and a.slope == b.slope

    def test_grid_section(self):
        cfg = default_config("kernel")
        res = run_experiment("mp1", {"grid": {"d": 1, "n": 1024, "L": 64.0}, "ks": [0, 4, 16], "steps": 33})
        assert res.config["n"] == 1024
        assert "d" in cfg

    def test_check_line(self):
        c = Check("slope", 0.26, 0.25, 0.1)
        assert c.passed and c.line().startswith("[PASS]")
        assert not Check("x", float("nan"), 0.0, 1.0, "le").passed


class TestReportAndCli:
    def test_report_byte_identical(self, tmp_path):
        res = run_experiment("knapp_aniso_local")
        write_report(res, tmp_path / "a")
        write_report(run_experiment("knapp_aniso_local"), tmp_path / "b")
        for name in ("result.csv", "result.json", "plot.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        head = (tmp_path / "a" / "result.csv").read_text().splitlines()[0]
        assert head == "scale,lhs,rhs,ratio"

    def test_table(self, capsys):
        assert main(["table", "--p", "8", "--q", "2", "--d", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["s"] == 0.125 and doc["s_nec_mod"] == 0.125

    def test_table_domain_error(self, capsys):
        assert main(["table", "--p", "1"]) == 2

    def test_run_with_yaml(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(yaml.safe_dump({"experiment": "knapp_aniso_local", "exponents": {"p": 4, "q": 2}, "tolerance": 0.1}))
        assert load_config(cfg) == {"p": 4, "q": 2, "tolerance": 0.1}
        out = tmp_path / "out"
        assert main(["knapp_aniso_local", "--config", str(cfg), "--out", str(out), "--no-plot"]) == 0
        assert (out / "result.csv").exists() and not (out / "plot.svg").exists()
        assert "fingerprint" in capsys.readouterr().out

    def test_bad_config_exit_code(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["knapp_aniso_local", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_failing_sweep_exit_code(self, tmp_path):
        # a tolerance of zero cannot be met by a fitted slope
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"tolerance": 0.0, "scales": [0.125, 0.0625, 0.03125, 0.015625]}))
        assert main(["knapp_aniso_local", "--config", str(cfg), "--out", str(tmp_path), "--no-plot"]) == 1
