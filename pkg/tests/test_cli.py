import csv
import json

import numpy as np
import pytest

from formbound.cli import THREADS_ENV, build_parser, main
from formbound.config import dump_config
from formbound.drift import DriftSpec
from formbound.fieldio import read_field, write_field
from formbound.spectral import TorusGrid

from conftest import small_config, zero_config


def write_cfg(path, cfg):
    path.write_text(dump_config(cfg))
    return str(path)


@pytest.fixture
def zero_toml(tmp_path):
    return write_cfg(tmp_path / "zero.toml", zero_config())


@pytest.fixture
def strong_file_drift(tmp_path):
    # constant |b| = 100 on 16^3: ||T|| ~ 100 / (2 sqrt(mu)) >> 1, while the file claims delta = 0.01
    g = TorusGrid(3, 16)
    b = np.zeros((3,) + g.shape)
    b[0] = 100.0
    write_field(tmp_path / "b.fbnd", g, b)
    cfg = small_config([DriftSpec("file", path=str(tmp_path / "b.fbnd"), delta=0.01, name="strong")])
    return write_cfg(tmp_path / "strong.toml", cfg)


class TestVerify:
    def test_pass_exit_zero(self, zero_toml, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["verify", "--config", zero_toml, "--out", str(out), "--suite", "quick"]) == 0
        text = capsys.readouterr().out
        assert "PASS dense_oracle" in text
        report = json.load(open(out / "report.json"))
        assert report["exit_code"] == 0 and (out / "checks.csv").exists()

    def test_fail_exit_one(self, tmp_path):
        # the decay-rate check needs a resolved grid; on 8^3 it fails
        cfg = small_config()
        cfg.scaling.n = 8
        path = write_cfg(tmp_path / "c.toml", cfg)
        assert main(["verify", "--config", path, "--out", str(tmp_path / "o"), "--suite", "mu_scaling",
                     "--quiet"]) == 1

    def test_divergence_exit_three(self, strong_file_drift, tmp_path):
        assert main(["verify", "--config", strong_file_drift, "--out", str(tmp_path / "o"),
                     "--suite", "residual", "--quiet"]) == 3
        report = json.load(open(tmp_path / "o" / "report.json"))
        assert report["checks"][0]["status"] == "divergence"

    def test_seed_override(self, zero_toml, tmp_path):
        main(["verify", "--config", zero_toml, "--out", str(tmp_path / "o"), "--suite", "dense_oracle",
              "--seed", "99", "--quiet"])
        assert json.load(open(tmp_path / "o" / "report.json"))["metadata"]["seed"] == 99


class TestUsageErrors:
    def test_missing_config(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "none.toml")]) == 2

    def test_malformed_config(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("seed = = 1\n")
        assert main(["verify", "--config", str(p)]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_unknown_suite(self, zero_toml, tmp_path):
        assert main(["verify", "--config", zero_toml, "--suite", "nope", "--out", str(tmp_path)]) == 2

    def test_bad_thread_env(self, zero_toml, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        assert main(["verify", "--config", zero_toml]) == 2

    def test_argparse_errors(self):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--axis", "bogus"])
        assert exc.value.code == 2

    def test_unreadable_report(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text("{not json")
        assert main(["report", str(p)]) == 2


class TestThreadsEnv:
    def test_env_used(self, zero_toml, tmp_path, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        main(["verify", "--config", zero_toml, "--out", str(tmp_path / "o"), "--suite", "dense_oracle", "--quiet"])
        assert json.load(open(tmp_path / "o" / "report.json"))["metadata"]["threads"] == 3

    def test_flag_beats_env(self, zero_toml, tmp_path, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        main(["verify", "--config", zero_toml, "--out", str(tmp_path / "o"), "--suite", "dense_oracle",
              "--threads", "2", "--quiet"])
        assert json.load(open(tmp_path / "o" / "report.json"))["metadata"]["threads"] == 2


class TestSolve:
    def test_round_trip(self, zero_toml, tmp_path, capsys):
        g = TorusGrid(3, 8)
        f = np.random.default_rng(0).standard_normal(g.shape)
        write_field(tmp_path / "f.fbnd", g, f)
        code = main(["solve", "--config", zero_toml, "--field", str(tmp_path / "f.fbnd"), "--mu", "2",
                     "--out", str(tmp_path / "o"), "--csv"])
        assert code == 0
        info = json.loads(capsys.readouterr().out)
        assert info["converged"] and info["drift"] == "zero"
        u, g2 = read_field(tmp_path / "o" / "solution.fbnd")
        assert g2 == g
        # zero drift: 2u - Laplacian u = f
        k = 2 * np.pi * np.fft.fftfreq(g.n, g.L / g.n)
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
        lhs = np.real(np.fft.ifftn((2 + kx**2 + ky**2 + kz**2) * np.fft.fftn(u)))
        np.testing.assert_allclose(lhs, f, atol=1e-12)
        assert len(list(csv.reader(open(tmp_path / "o" / "solution.csv")))) == 1 + g.size

    def test_divergence(self, strong_file_drift, tmp_path):
        g = TorusGrid(3, 16)
        write_field(tmp_path / "f.fbnd", g, np.random.default_rng(0).standard_normal(g.shape))
        assert main(["solve", "--config", strong_file_drift, "--field", str(tmp_path / "f.fbnd"),
                     "--mu", "1", "--out", str(tmp_path / "o")]) == 3

    def test_vector_field_rejected(self, zero_toml, tmp_path):
        g = TorusGrid(3, 4)
        write_field(tmp_path / "b.fbnd", g, np.zeros((3,) + g.shape))
        assert main(["solve", "--config", zero_toml, "--field", str(tmp_path / "b.fbnd"), "--mu", "1"]) == 2

    def test_unknown_drift(self, zero_toml, tmp_path):
        g = TorusGrid(3, 4)
        write_field(tmp_path / "f.fbnd", g, np.zeros(g.shape))
        assert main(["solve", "--config", zero_toml, "--field", str(tmp_path / "f.fbnd"), "--mu", "1",
                     "--drift", "nope"]) == 2


class TestSweepCalibrateReport:
    def test_sweep_csv(self, tmp_path):
        cfg = zero_config()
        cfg.sweep.mu = [1.0, 10.0]
        path = write_cfg(tmp_path / "c.toml", cfg)
        assert main(["sweep", "--config", path, "--axis", "mu", "--out", str(tmp_path / "o")]) == 0
        rows = list(csv.reader(open(tmp_path / "o" / "sweep_mu.csv")))
        assert rows[0][:3] == ["drift", "p", "mu"] and len(rows) == 1 + 2 * len(cfg.resolvent.p)

    def test_calibrate(self, tmp_path):
        path = write_cfg(tmp_path / "c.toml", small_config())
        assert main(["calibrate", "--config", path, "--out", str(tmp_path / "o")]) == 0
        consts = json.load(open(tmp_path / "o" / "constants.json"))
        assert consts["hardy"]["3"]["mu0"] >= 1

    def test_report_markdown(self, zero_toml, tmp_path, capsys):
        main(["verify", "--config", zero_toml, "--out", str(tmp_path / "o"), "--suite", "quick", "--quiet"])
        capsys.readouterr()
        assert main(["report", str(tmp_path / "o" / "report.json")]) == 0
        assert capsys.readouterr().out.startswith("# Diagnostics report")
        assert main(["report", str(tmp_path / "o" / "report.json"), "--out", str(tmp_path / "md")]) == 0
        assert (tmp_path / "md" / "report.md").read_text().startswith("# Diagnostics report")


class TestGlobalFlags:
    def test_flags_before_and_after_command(self):
        parser = build_parser()
        a = parser.parse_args(["--seed", "7", "--suite", "quick", "verify"])
        b = parser.parse_args(["verify", "--seed", "7", "--suite", "quick"])
        assert (a.seed, a.suite) == (b.seed, b.suite) == (7, "quick")
        c = parser.parse_args(["--seed", "7", "verify", "--seed", "9"])
        assert c.seed == 9 and c.config is None
