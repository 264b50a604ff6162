import csv
import io
import json
import math

import numpy as np
import pytest

from formbound.drift import DriftSpec
from formbound.errors import ConfigError
from formbound.harness import (
    CHECKS,
    SUITES,
    SWEEP_COLUMNS,
    DiagnosticsReport,
    SuiteContext,
    replay,
    run_calibration,
    run_suite,
    suite_checks,
    sweep,
    sweep_csv_text,
)
from formbound.resolvent import contraction_constant

from conftest import small_config, zero_config


@pytest.fixture(scope="module")
def zero_report():
    return run_suite(zero_config())


class TestRegistry:
    def test_full_suite_size(self):
        names = suite_checks("full")
        assert len(names) >= 20 and len(set(names)) == len(names)

    def test_named_suites_resolve(self):
        for name in SUITES:
            assert suite_checks(name)

    def test_prerequisites_added_and_ordered(self):
        names = suite_checks("contraction")
        assert names == ["form_bound", "calibration", "contraction"]

    def test_unknown(self):
        with pytest.raises(ConfigError):
            suite_checks("nope,dense_oracle")

    def test_every_check_has_known_phase(self):
        from formbound.harness import PHASES

        assert all(c.phase in PHASES for c in CHECKS.values())


class TestSeeds:
    def test_tags_separate_streams(self):
        ctx = SuiteContext(zero_config())
        assert ctx.seed("a") != ctx.seed("b") and ctx.seed("a", 1) == ctx.seed("a", 1)

    def test_root_seed_matters(self):
        assert SuiteContext(zero_config(seed=1)).seed("x") != SuiteContext(zero_config(seed=2)).seed("x")

    def test_fields_nonnegative(self):
        ctx = SuiteContext(zero_config())
        fs = ctx.fields(ctx.grid, 2, "t", nonnegative=True)
        assert len(fs) == 2 and all(f.min() >= 0 for f in fs)


class TestZeroDrift:
    def test_all_pass(self, zero_report):
        failed = [(c.name, c.status, c.message) for c in zero_report.checks if not c.passed]
        assert not failed
        assert zero_report.exit_code == 0

    def test_each_check_once(self, zero_report):
        names = [c.name for c in zero_report.checks]
        assert sorted(names) == sorted(CHECKS)

    def test_constants_ledger(self, zero_report):
        led = zero_report.constants["zero"]
        assert set(led) >= {"2", "3"}
        assert led["3"]["c_delta_p"] == 0.0

    def test_json_round_trip(self, zero_report):
        again = DiagnosticsReport.from_json(zero_report.to_json())
        assert again.measured_values() == json.loads(json.dumps(zero_report.measured_values()))
        assert again.exit_code == 0

    def test_write(self, zero_report, tmp_path):
        jpath, cpath = zero_report.write(tmp_path / "out")
        data = json.load(open(jpath))
        assert data["passed"] and data["metadata"]["suite"] == "full"
        rows = list(csv.reader(open(cpath)))
        assert rows[0] == ["check", "status", "passed", "runtime_s", "quantity", "value"]
        assert {r[0] for r in rows[1:]} <= set(CHECKS)

    def test_markdown(self, zero_report):
        md = zero_report.to_markdown()
        assert md.startswith("# Diagnostics report") and "| dense_oracle |" in md
        assert "verdict: PASS" in md

    def test_replay(self, zero_report):
        again = replay(zero_report.to_dict(), suite="quick")
        names = set(suite_checks("quick"))
        orig = {k: v for k, v in zero_report.measured_values().items() if k in names}
        assert again.measured_values() == orig


class TestAbort:
    def test_calibration_failure_skips_rest(self, tmp_path):
        # the file claims delta = 0.01 but |b| = 1 gives delta_hat = 1
        from formbound.fieldio import write_field
        from formbound.spectral import TorusGrid

        g = TorusGrid(3, 16)
        b = np.zeros((3,) + g.shape)
        b[0] = 1.0
        write_field(tmp_path / "b.fbnd", g, b)
        cfg = small_config([DriftSpec("file", path=str(tmp_path / "b.fbnd"), delta=0.01, name="f")])
        rep = run_suite(cfg, "contraction")
        assert rep.aborted and rep.exit_code == 1
        assert rep.check("calibration").status == "error"
        assert rep.check("contraction").status == "skipped"


class TestThreads:
    def test_threaded_matches_serial(self):
        suite = "dense_oracle,quadrature,pseudo_resolvent,mu_to_identity"
        a = run_suite(small_config(threads=1), suite)
        b = run_suite(small_config(threads=3), suite)
        assert a.measured_values() == b.measured_values()


class TestCalibration:
    def test_run_calibration(self):
        rep = run_calibration(small_config())
        assert [c.name for c in rep.checks] == ["form_bound", "calibration"]
        assert rep.passed
        assert rep.constants["hardy"]["3"]["mu0"] >= 1


class TestSweeps:
    def test_mu_zero_drift(self):
        cfg = zero_config()
        cfg.sweep.mu = [1.0, 10.0, 100.0]
        cols, rows = sweep(cfg, "mu")
        assert cols == SWEEP_COLUMNS["mu"]
        assert len(rows) == 3 * len(cfg.resolvent.p)
        for r in rows:
            assert r[cols.index("theta_norm")] == pytest.approx(1 / r[cols.index("mu")], rel=1e-10)
            assert r[cols.index("T_norm")] == 0

    def test_delta_c_column(self):
        cfg = small_config()
        cfg.sweep.delta = [0.01, 0.1, 0.5]
        cols, rows = sweep(cfg, "delta")
        for r in rows:
            delta, p, c = r[cols.index("delta")], r[cols.index("p")], r[cols.index("c_delta_p")]
            if p < 2 / math.sqrt(delta):
                assert c == contraction_constant(delta, p)
            else:
                assert math.isnan(c)

    def test_p_and_n(self):
        cfg = small_config([DriftSpec("smooth-trig", name="s")])
        cfg.sweep.p = [2.0, 3.0]
        cfg.sweep.n = [8]
        cols, rows = sweep(cfg, "p")
        assert len(rows) == 2 and all(r[cols.index("T_norm")] < 1 for r in rows)
        cols, rows = sweep(cfg, "n")
        assert rows[0][cols.index("n")] == 8 and rows[0][cols.index("mu0")] >= 1

    def test_empty_axis(self):
        assert sweep(zero_config(), "p") == (SWEEP_COLUMNS["p"], [])

    def test_unknown_axis(self):
        with pytest.raises(ConfigError):
            sweep(zero_config(), "t")

    def test_csv(self):
        text = sweep_csv_text(["a", "b"], [["x", 0.1], ["y", np.float64(2.0)]])
        rows = list(csv.reader(io.StringIO(text)))
        assert rows == [["a", "b"], ["x", "0.1"], ["y", "2.0"]]
