import math

import pytest

from formbound.config import (
    ExperimentConfig,
    default_config,
    dump_config,
    from_dict,
    load_config,
    loads_config,
)
from formbound.drift import DriftSpec
from formbound.errors import AdmissibilityViolation, ConfigError


class TestRoundTrip:
    def test_default(self):
        cfg = default_config()
        again = loads_config(dump_config(cfg))
        assert again == cfg
        assert again.to_dict() == cfg.to_dict()

    def test_infinite_cutoff_survives(self):
        cfg = loads_config(dump_config(default_config()))
        assert math.isinf(cfg.scaling.cutoff)
        assert math.isinf(cfg.drift_by_name("smooth").cutoff)

    def test_file_round_trip(self, tmp_path):
        cfg = default_config(seed=42)
        cfg.drift = [DriftSpec("zero", name="z")]
        path = tmp_path / "c.toml"
        path.write_text(dump_config(cfg))
        assert load_config(path) == cfg

    def test_integers_become_floats(self):
        cfg = loads_config("[resolvent]\nmu = [10, 20]\n[semigroup]\nt = 1\n")
        assert cfg.resolvent.mu == [10.0, 20.0] and isinstance(cfg.semigroup.t, float)

    def test_partial_file_keeps_defaults(self):
        cfg = loads_config("seed = 7\n")
        assert cfg.seed == 7 and cfg.grid.n == ExperimentConfig().grid.n
        assert [s.label for s in cfg.drift] == ["hardy", "smooth"]

    def test_drift_tables(self):
        text = '[[drift]]\nkind = "hardy"\nc = 0.1\nname = "h"\n[[drift]]\nkind = "zero"\n'
        cfg = loads_config(text)
        assert [s.label for s in cfg.drift] == ["h", "zero"]
        assert cfg.first_drift("hardy").c == 0.1 and cfg.first_drift("file") is None


class TestErrors:
    def test_malformed_toml_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            loads_config("seed = 1\n[grid]\nn = = 3\n")

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            loads_config("bogus = 1\n")

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="grid"):
            loads_config("[grid]\nsize = 8\n")

    def test_unknown_drift_key(self):
        with pytest.raises(ConfigError, match="drift"):
            loads_config('[[drift]]\nkind = "zero"\nstrength = 2\n')

    def test_bad_drift_kind(self):
        with pytest.raises(ConfigError):
            loads_config('[[drift]]\nkind = "vortex"\n')

    def test_wrong_types(self):
        with pytest.raises(ConfigError):
            loads_config('seed = "x"\n')
        with pytest.raises(ConfigError):
            loads_config('dealias = 1\n')
        with pytest.raises(ConfigError):
            loads_config('grid = 3\n')

    def test_admissibility_revalidated(self):
        with pytest.raises(AdmissibilityViolation):
            loads_config("[resolvent]\np = [1.5]\n")
        with pytest.raises(AdmissibilityViolation):
            loads_config("[regularity]\nsmoothing_prq = [3, 3.5, 6]\n")
        with pytest.raises(AdmissibilityViolation):
            loads_config("[resolvent]\nrq = [[1.5, 6]]\n")

    @pytest.mark.parametrize("text", [
        "seed = -1\n", "threads = 0\n", "[grid]\nd = 2\n", "[resolvent]\nmu_grid = [10, 1]\n",
        "[semigroup]\nt = 0\n", "[trotter]\nlevels = [[0, 0.1]]\n", "drift = []\n",
        '[[drift]]\nkind = "zero"\nname = "a"\n[[drift]]\nkind = "zero"\nname = "a"\n',
    ])
    def test_validation(self, text):
        with pytest.raises(ConfigError):
            loads_config(text)

    def test_missing_file_path_in_message(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("x = 1\n")
        with pytest.raises(ConfigError, match="bad.toml"):
            load_config(p)

    def test_drift_by_name(self):
        with pytest.raises(ConfigError):
            default_config().drift_by_name("nope")

    def test_from_dict_requires_tables(self):
        with pytest.raises(ConfigError):
            from_dict({"drift": {"kind": "zero"}})
