import math

import numpy as np
import pytest

from conftest import make_model
from quantogreeks import (
    SimConfig,
    WeightVariant,
    sample_terminal,
    weight_corr_cross_gamma,
    weight_corr_delta_E,
    weight_corr_delta_I,
    weight_for,
    weight_indep_cross_gamma,
    weight_indep_delta_E,
    weight_indep_delta_I,
)
from quantogreeks.simulate import SampleDraw
from quantogreeks.weights import CROSS_GAMMA_VARIANTS, DELTA_E_VARIANTS, WeightedSample, greek_of

V = WeightVariant

CORR_TO_INDEP = {
    V.CORR_DELTA_E_ONE_PLUS_RHO: V.INDEP_DELTA_E,
    V.CORR_DELTA_E_MATRIX_INVERSE: V.INDEP_DELTA_E,
    V.CORR_DELTA_E_CONDITIONAL: V.INDEP_DELTA_E,
    V.CORR_DELTA_I: V.INDEP_DELTA_I,
    V.CORR_CROSS_GAMMA_SCALED_PRODUCT: V.INDEP_CROSS_GAMMA,
    V.CORR_CROSS_GAMMA_MATRIX_INVERSE: V.INDEP_CROSS_GAMMA,
    V.CORR_CROSS_GAMMA_CONDITIONAL: V.INDEP_CROSS_GAMMA,
}


def manual_draw(**overrides):
    """A single hand-built draw; unspecified fields default to zero/one."""
    fields = {name: np.array([0.0]) for name in
              ("gE", "gI", "iE", "iI", "wE_T", "wI_tilde_T", "iE_cross", "gI_cross")}
    fields["fE_T"] = np.array([100.0])
    fields["fI_T"] = np.array([100.0])
    for key, value in overrides.items():
        fields[key] = np.array([float(value)])
    return SampleDraw(**fields)


class TestIndependentWeights:
    def test_delta_E_constant_vol_formula(self, atm_model, uniform_tuning):
        # sigma=0.2, a=1/T, T=1: iE = W(T)/(sigma T) and the weight is W / (f0 sigma T)
        draw = manual_draw(iE=0.5 / (0.2 * 1.0), wE_T=0.5)
        w = weight_indep_delta_E(draw, atm_model, uniform_tuning)
        assert w[0] == pytest.approx(0.025, rel=1e-12)

    def test_delta_E_zero_driver(self, atm_model, uniform_tuning):
        assert weight_indep_delta_E(manual_draw(), atm_model, uniform_tuning)[0] == 0.0

    def test_delta_I_formula(self, uniform_tuning):
        m = make_model(f0I=50.0, sigI=0.4)
        draw = manual_draw(iI=-1.0 / 0.4, wI_tilde_T=-1.0)
        w = weight_indep_delta_I(draw, m, uniform_tuning)
        assert w[0] == pytest.approx(-0.05, rel=1e-12)

    def test_cross_gamma_is_the_product(self, uniform_tuning):
        m = make_model(f0I=50.0, sigI=0.4)
        draw = manual_draw(iE=2.5, iI=-2.5)
        w = weight_indep_cross_gamma(draw, m, uniform_tuning)
        assert w[0] == pytest.approx(0.025 * -0.05, rel=1e-12)

    def test_sample_means_vanish(self, atm_model, uniform_tuning):
        draw = sample_terminal(atm_model, uniform_tuning, SimConfig(1_000_000, seed=21))
        for fn in (weight_indep_delta_E, weight_indep_delta_I, weight_indep_cross_gamma):
            w = fn(draw, atm_model, uniform_tuning)
            assert abs(w.mean()) < 3.0 * w.std(ddof=1) / math.sqrt(len(w))

    def test_nonzero_rho_rejected_without_override(self, uniform_tuning):
        m = make_model(rho=0.4)
        with pytest.raises(ValueError, match="rho"):
            weight_indep_delta_E(manual_draw(), m, uniform_tuning)
        weight_indep_delta_E(manual_draw(), m, uniform_tuning, allow_rho_mismatch=True)


class TestCorrelatedDeltaE:
    def test_one_plus_rho_multiplier(self, uniform_tuning):
        m = make_model(rho=0.3)
        w, mult = weight_corr_delta_E(manual_draw(iE=2.0), m, uniform_tuning,
                                      V.CORR_DELTA_E_ONE_PLUS_RHO)
        assert mult == pytest.approx(1.3)
        assert w[0] == pytest.approx(0.02)

    def test_matrix_inverse_two_integral_form(self, uniform_tuning):
        # constant sigma, a = 1/T: weight = [W_E/sig - rho W~_I/(sig sqrt(1-rho^2))] / (f0 T)
        rho, sig = 0.6, 0.2
        m = make_model(rho=rho)
        wE, wI = 0.5, -0.8
        draw = manual_draw(iE=wE / sig, iE_cross=wI / sig, wE_T=wE, wI_tilde_T=wI)
        w, mult = weight_corr_delta_E(draw, m, uniform_tuning, V.CORR_DELTA_E_MATRIX_INVERSE)
        expected = (wE / sig - rho * wI / (sig * math.sqrt(1 - rho * rho))) / 100.0
        assert mult == 1.0
        assert w[0] == pytest.approx(expected, rel=1e-12)

    def test_conditional_keeps_single_integral(self, uniform_tuning):
        m = make_model(rho=0.6)
        w, mult = weight_corr_delta_E(manual_draw(iE=2.5), m, uniform_tuning,
                                      V.CORR_DELTA_E_CONDITIONAL)
        assert (w[0], mult) == (pytest.approx(0.025), 1.0)

    def test_wrong_family_rejected(self, uniform_tuning):
        m = make_model(rho=0.6)
        with pytest.raises(ValueError):
            weight_corr_delta_E(manual_draw(), m, uniform_tuning, V.CORR_DELTA_I)


class TestCorrelatedDeltaI:
    def test_scaling_pair(self, uniform_tuning):
        # rho=0.6, f0I=50, sigma_I=0.4, W~(T)=1: weight 0.0625, multiplier 0.8
        m = make_model(f0I=50.0, sigI=0.4, rho=0.6)
        draw = manual_draw(iI=1.0 / 0.4, wI_tilde_T=1.0)
        w, mult = weight_corr_delta_I(draw, m, uniform_tuning)
        assert w[0] == pytest.approx(0.0625, rel=1e-12)
        assert mult == pytest.approx(0.8, rel=1e-12)
        assert w[0] * mult == pytest.approx(0.05, rel=1e-12)


class TestCorrelatedCrossGamma:
    def test_compensator_value(self, uniform_tuning):
        m = make_model(f0E=100.0, f0I=50.0, sigE=0.2, sigI=0.4, rho=0.5)
        w, mult = weight_corr_cross_gamma(manual_draw(), m, uniform_tuning,
                                          V.CORR_CROSS_GAMMA_MATRIX_INVERSE)
        # zero integrals leave only the deterministic term: rho/(f0E f0I sigE sigI (1-rho^2) T)
        assert mult == 1.0
        assert w[0] == pytest.approx(-0.5 / 300.0, rel=1e-12)

    def test_scaled_product_multiplier(self, uniform_tuning):
        m = make_model(rho=0.5)
        w, mult = weight_corr_cross_gamma(manual_draw(iE=1.0, iI=1.0), m, uniform_tuning,
                                          V.CORR_CROSS_GAMMA_SCALED_PRODUCT)
        s = math.sqrt(0.75)
        assert mult == pytest.approx(s * 1.5, rel=1e-12)
        assert w[0] == pytest.approx((1.0 / 100.0) * (1.0 / (100.0 * s)), rel=1e-12)

    def test_conditional_is_plain_product(self, uniform_tuning):
        m = make_model(rho=0.5)
        w, mult = weight_corr_cross_gamma(manual_draw(iE=2.0, iI=3.0), m, uniform_tuning,
                                          V.CORR_CROSS_GAMMA_CONDITIONAL)
        assert (w[0], mult) == (pytest.approx(0.02 * 0.03), 1.0)

    def test_mean_matches_gaussian_covariance_algebra(self, uniform_tuning):
        # the two integral factors have covariance -compensator, so the full
        # weight (product minus compensator) has expectation -2 * compensator
        m = make_model(rho=0.5)
        draw = sample_terminal(m, uniform_tuning, SimConfig(1_000_000, seed=22))
        w, _ = weight_corr_cross_gamma(draw, m, uniform_tuning,
                                       V.CORR_CROSS_GAMMA_MATRIX_INVERSE)
        comp = 0.5 * 25.0 / (0.75 * 1e4)  # rho v_aa / ((1-rho^2) f0E f0I)
        se = w.std(ddof=1) / math.sqrt(len(w))
        assert abs(w.mean() + 2.0 * comp) < 3.0 * se


class TestZeroRhoReduction:
    def test_every_correlated_variant_reduces_bitwise(self, uniform_tuning):
        m = make_model(rho=0.0)
        draw = sample_terminal(m, uniform_tuning, SimConfig(10_000, seed=23))
        for corr, indep in CORR_TO_INDEP.items():
            w_corr, mult_corr = weight_for(corr, draw, m, uniform_tuning)
            w_ind, mult_ind = weight_for(indep, draw, m, uniform_tuning)
            assert np.array_equal(w_corr * mult_corr, w_ind * mult_ind), corr

    def test_greek_labels(self):
        assert greek_of(V.INDEP_DELTA_E) == "dE"
        assert all(greek_of(v) == "dE" for v in DELTA_E_VARIANTS)
        assert greek_of(V.CORR_DELTA_I) == "dI"
        assert all(greek_of(v) == "dEdI" for v in CROSS_GAMMA_VARIANTS)


class TestWeightedSample:
    def test_products(self):
        ws = WeightedSample(np.array([2.0, 4.0]), np.array([0.5, 0.25]), 3.0)
        assert ws.products().tolist() == [3.0, 3.0]
