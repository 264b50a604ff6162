import math

import numpy as np
import pytest

from formbound.dense import dense_form_bound
from formbound.drift import (
    DriftField,
    DriftSpec,
    drift_power,
    estimate_form_bound,
    estimate_weak_form_bound,
    hardy_center,
    hardy_constant,
    make_drift,
    make_hardy_drift,
    mollify_drift,
    weak_class_constants,
)
from formbound.errors import AdmissibilityViolation, ConfigError, InvalidParameter
from formbound.spectral import TorusGrid

from oracles import mp_md


class TestDriftSpec:
    @pytest.mark.parametrize("kw", [
        dict(kind="bogus"), dict(kind="hardy", c=0.0), dict(kind="file"),
        dict(kind="hardy", eps=-1.0), dict(kind="hardy", cutoff=0.0), dict(kind="zero", lam=0.0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            DriftSpec(**kw)

    def test_label_defaults_to_kind(self):
        assert DriftSpec("zero").label == "zero"
        assert DriftSpec("zero", name="z").label == "z"


class TestCatalog:
    def test_hardy_claim(self, grid16):
        dr = make_hardy_drift(grid16, 0.2)
        assert dr.delta_claimed == pytest.approx(0.16)
        assert hardy_constant(3) == 4.0

    def test_hardy_is_radial(self, grid16):
        dr = make_hardy_drift(grid16, 0.2)
        x = grid16.coordinates()
        off = [xj - cj for xj, cj in zip(x, hardy_center(grid16))]
        r2 = sum(o**2 for o in off)
        np.testing.assert_allclose(dr.b[0], 0.2 * off[0] / r2 * np.ones(grid16.shape))

    def test_samples_finite(self, grid16):
        assert np.all(np.isfinite(make_hardy_drift(grid16, 0.5).b))

    def test_mollification_caps_magnitude(self, grid16):
        dr = make_drift(grid16, DriftSpec("hardy", c=0.2, cutoff=1.0))
        assert dr.magnitude.max() <= 1.0

    def test_mollify_cutoff_radius(self, grid16):
        b = np.zeros((3,) + grid16.shape)
        b[0] = 0.5
        out = mollify_drift(grid16, b, cutoff=1.0, eps=0.0)
        assert out.sum() > 0
        assert out[:, 0, 0, 0].sum() == 0  # the corner is far from the center

    def test_smooth_claim_is_sup_squared(self, grid16):
        dr = make_drift(grid16, DriftSpec("smooth-trig", amplitudes=(0.1, 0.2, 0.3), lam=2.0))
        assert dr.delta_claimed == pytest.approx(dr.magnitude.max() ** 2 / 2.0)

    def test_zero(self, grid8):
        dr = make_drift(grid8, DriftSpec("zero"))
        assert dr.is_zero and dr.delta_claimed == 0

    def test_fields_are_read_only(self, hardy16):
        with pytest.raises(ValueError):
            hardy16.b[0, 0, 0, 0] = 1.0

    def test_scaled(self, hardy16):
        s = hardy16.scaled(2.0)
        assert s.delta_claimed == pytest.approx(4 * hardy16.delta_claimed)
        np.testing.assert_array_equal(s.b, 2 * hardy16.b)

    def test_file_drift(self, grid8, tmp_path):
        from formbound.fieldio import write_field

        b = np.random.default_rng(0).standard_normal((3,) + grid8.shape)
        path = tmp_path / "b.fbnd"
        write_field(path, grid8, b)
        dr = make_drift(grid8, DriftSpec("file", path=str(path), delta=0.3))
        np.testing.assert_array_equal(dr.b, b)
        with pytest.raises(ConfigError):
            make_drift(TorusGrid(3, 16), DriftSpec("file", path=str(path), delta=0.3))
        with pytest.raises(ConfigError):
            make_drift(grid8, DriftSpec("file", path=str(path)))


class TestDriftPower:
    def test_factorization(self, hardy16):
        for p in (2.0, 3.0, 4.5):
            b_pow, b_comp = drift_power(hardy16, p)
            np.testing.assert_allclose(b_pow * b_comp, hardy16.b, atol=1e-14)

    def test_p2_weights(self, hardy16):
        b_pow, b_comp = drift_power(hardy16, 2)
        np.testing.assert_array_equal(b_comp, 1.0)

    def test_zero_where_b_vanishes(self, grid8):
        b = np.zeros((3,) + grid8.shape)
        b[0, 1, 1, 1] = 2.0
        dr = DriftField(grid8, b)
        _, comp = drift_power(dr, 3.0)
        assert comp[0, 0, 0] == 0 and comp[1, 1, 1] == pytest.approx(2 ** (1 / 3))

    def test_rejects_small_p(self, hardy16):
        with pytest.raises(InvalidParameter):
            drift_power(hardy16, 1.5)


class TestFormBound:
    @pytest.mark.parametrize("kind", ["hardy", "smooth-trig"])
    def test_matches_dense_eigensolve(self, grid8, kind):
        dr = make_drift(grid8, DriftSpec(kind, cutoff=3.0, eps=0.01))
        est, res = estimate_form_bound(dr, probes=2, iters=1000, tol=1e-12)
        assert est == pytest.approx(dense_form_bound(grid8, dr.b, dr.lam), rel=1e-8)

    def test_constant_drift_exact(self, grid8):
        # |b| = a constant: the top eigenvalue sits at k = 0, giving a^2 / lam
        b = np.zeros((3,) + grid8.shape)
        b[0] = 0.3
        dr = DriftField(grid8, b, lam=2.0)
        assert estimate_form_bound(dr)[0] == pytest.approx(0.09 / 2.0, rel=1e-10)

    def test_quadratic_scaling(self, hardy16):
        d1 = estimate_form_bound(hardy16, seed=3)[0]
        d3 = estimate_form_bound(hardy16.scaled(3.0), seed=3)[0]
        assert d3 == pytest.approx(9 * d1, rel=1e-8)

    def test_below_claim(self, hardy16, smooth16):
        for dr in (hardy16, smooth16):
            assert estimate_form_bound(dr)[0] <= dr.delta_claimed

    def test_zero(self, grid8):
        assert estimate_form_bound(DriftField.zero(grid8)) == (0.0, 0.0)
        assert estimate_weak_form_bound(DriftField.zero(grid8)) == 0.0

    def test_weak_bound_positive(self, hardy16):
        assert estimate_weak_form_bound(hardy16) > 0

    def test_seed_reproducible(self, hardy16):
        assert estimate_form_bound(hardy16, seed=5) == estimate_form_bound(hardy16, seed=5)


class TestWeakClass:
    def test_m3(self):
        w = weak_class_constants(3, 0.1)
        assert w.m_d == pytest.approx(float(mp_md(3)), rel=1e-14)
        assert w.m_d == pytest.approx(1.9751, abs=1e-3)

    @pytest.mark.parametrize("d", [3, 4, 7])
    def test_window_brackets_two(self, d):
        m = weak_class_constants(d, 0).m_d
        w = weak_class_constants(d, 0.5 / m)
        assert 1 < w.p_minus < 2 < w.p_plus
        # p_- and p_+ are conjugate around 2: 1/p_- + 1/p_+ = 1
        assert 1 / w.p_minus + 1 / w.p_plus == pytest.approx(1.0)

    def test_delta_zero_unbounded(self):
        w = weak_class_constants(3, 0.0)
        assert w.p_minus == 1.0 and math.isinf(w.p_plus)

    def test_degenerate_and_empty(self):
        m = weak_class_constants(3, 0).m_d
        w = weak_class_constants(3, 1 / m)
        assert w.p_minus == pytest.approx(2) and w.p_plus == pytest.approx(2)
        with pytest.raises(AdmissibilityViolation):
            weak_class_constants(3, 1.01 / m)

    @pytest.mark.parametrize("args", [(2, 0.1), (3.5, 0.1), (3, -0.1)])
    def test_domain(self, args):
        with pytest.raises(InvalidParameter):
            weak_class_constants(*args)


class TestOperationExamples:
    def test_hardy_vanishes_with_c(self, grid16):
        sups = [make_hardy_drift(grid16, c).magnitude.max() for c in (0.4, 0.04, 0.004)]
        assert sups[1] == pytest.approx(sups[0] / 10) and sups[2] == pytest.approx(sups[0] / 100)

    def test_wider_mollifier_lowers_sup(self, grid16):
        sups = [make_drift(grid16, DriftSpec("hardy", c=0.2, eps=e)).magnitude.max() for e in (0.0, 0.01, 0.05, 0.2)]
        assert all(b < a for a, b in zip(sups, sups[1:]))

    def test_mollify_identity_on_bounded_field(self, grid16):
        # field supported inside the cutoff ball with |b| <= cutoff
        x = grid16.coordinates()
        r2 = sum((xj - cj) ** 2 for xj, cj in zip(x, grid16.center))
        b = np.stack([np.exp(-r2) * np.ones(grid16.shape)] * 3) * (r2 <= 1.0) / np.sqrt(3)
        np.testing.assert_array_equal(mollify_drift(grid16, b, cutoff=1.0, eps=0.0), b)

    def test_mollified_sequence_converges(self, grid16):
        # smooth field: heat smoothing errors shrink with eps
        b = make_drift(grid16, DriftSpec("smooth-trig"))
        errs = [np.linalg.norm(mollify_drift(grid16, b.b, cutoff=1e6, eps=e) - b.b) for e in (0.1, 0.01, 0.001)]
        assert errs[0] > errs[1] > errs[2] > 0

    def test_power_of_constant_magnitude(self, grid8):
        b = np.zeros((3,) + grid8.shape)
        b[1] = 2.0
        for p in (2.5, 3.0, 6.0):
            b_pow, b_comp = drift_power(DriftField(grid8, b), p)
            np.testing.assert_allclose(np.sqrt(np.sum(b_pow**2, axis=0)), 2.0 ** (2 / p))
            np.testing.assert_allclose(b_comp, 2.0 ** (1 - 2 / p))

    def test_power_p3_identity(self, hardy16):
        b_pow, _ = drift_power(hardy16, 3.0)
        mag = np.sqrt(np.sum(b_pow**2, axis=0))
        np.testing.assert_allclose(mag**3, hardy16.magnitude**2, rtol=1e-12, atol=1e-300)

    def test_weak_bound_constant_drift(self, grid8):
        # |b| = beta: top eigenvalue at k = 0, giving beta / sqrt(lam)
        b = np.zeros((3,) + grid8.shape)
        b[2] = 0.49
        dr = DriftField(grid8, b, lam=4.0)
        assert estimate_weak_form_bound(dr) == pytest.approx(0.49 / 2.0, rel=1e-10)

    def test_weak_and_strong_both_reported(self, hardy16):
        strong, _ = estimate_form_bound(hardy16)
        weak = estimate_weak_form_bound(hardy16)
        assert math.isfinite(strong) and math.isfinite(weak) and strong > 0 and weak > 0
