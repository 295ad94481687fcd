import math

import pytest

from triquanta import (
    TransitionSpec,
    build_space,
    compare_rates,
    effective_coupling,
    rate_from_gap,
    w11_analytic,
    w22_analytic,
)


@pytest.fixture
def params_11(closed_params):
    return closed_params  # omega_drive = 1.3, the (1,1) resonance


@pytest.fixture
def params_22(closed_params):
    return closed_params.replace(omega_drive=2.6)


class TestEffectiveCoupling:
    def test_direct_transition_magnitude(self, params_11):
        spec = TransitionSpec((0, 0, "+"), (1, 1, "-"), 1)
        v = effective_coupling(params_11, spec)
        assert abs(v) == pytest.approx(0.075, abs=1e-14)

    def test_order_one_symmetry(self, params_11):
        forward = effective_coupling(params_11, TransitionSpec((0, 0, "+"), (1, 1, "-"), 1))
        backward = effective_coupling(params_11, TransitionSpec((1, 1, "-"), (0, 0, "+"), 1))
        assert abs(forward) == pytest.approx(abs(backward), abs=1e-15)

    def test_second_order_reference_value(self, params_22):
        # (lam^2/2) [1/(delta_a + omega_b) + 1/(2 Omega - delta_a - omega_b)]
        spec = TransitionSpec((0, 0, "+"), (2, 2, "-"), 2)
        v = effective_coupling(params_22, spec)
        assert abs(v) == pytest.approx(8.6538461538e-3, rel=1e-9)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_parity_forbidden_vanishes(self, params_11, order):
        spec = TransitionSpec((0, 0, "+"), (1, 0, "-"), order)
        p = params_11.replace(omega_drive=0.8)
        assert abs(effective_coupling(p, spec)) < 1e-14

    def test_third_order_against_located_gap(self, closed_params, space6):
        # deep perturbative regime: gap = 2|V1 + V3| up to fourth order
        from triquanta import locate_anticrossing

        lam = 0.05
        p = closed_params.replace(lam=lam)
        v1 = effective_coupling(p, TransitionSpec((0, 0, "+"), (1, 1, "-"), 1))
        v3 = effective_coupling(p, TransitionSpec((0, 0, "+"), (1, 1, "-"), 3))
        found = locate_anticrossing(p, space6, ((0, 0, "+"), (1, 1, "-")), (1.2, 1.4))
        assert 0 < abs(v3) < abs(v1)
        assert found.gap == pytest.approx(2 * abs(v1 + v3), rel=0.01)

    def test_resonant_intermediate_rejected(self, params_11):
        # at Omega = 1.3 the |11-> intermediate of the (2,2) path is degenerate
        # with the initial state
        spec = TransitionSpec((0, 0, "+"), (2, 2, "-"), 2)
        with pytest.raises(ValueError, match="resonant intermediate"):
            effective_coupling(params_11, spec)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            TransitionSpec((0, 0, "+"), (0, 0, "+"), 1)
        with pytest.raises(ValueError):
            TransitionSpec((0, 0, "+"), (1, 1, "-"), 4)


class TestAnalyticRates:
    def test_w11_reference(self):
        assert w11_analytic(0.15) == pytest.approx(0.035342917, rel=1e-7)
        assert w11_analytic(0.0) == 0.0
        assert w11_analytic(0.3) == pytest.approx(4 * w11_analytic(0.15))

    def test_w22_reference(self):
        assert w22_analytic(0.15, 2.6, 1.6, 1.0) == pytest.approx(4.70542e-4, rel=1e-5)
        assert w22_analytic(0.0, 2.6, 1.6, 1.0) == 0.0
        assert w22_analytic(0.3, 2.6, 1.6, 1.0) == pytest.approx(
            16 * w22_analytic(0.15, 2.6, 1.6, 1.0))

    def test_w22_singular_drive(self):
        with pytest.raises(ValueError, match="singular"):
            w22_analytic(0.15, 1.3, 1.6, 1.0)

    def test_rate_from_gap(self):
        assert rate_from_gap(0.15) == pytest.approx(w11_analytic(0.15), rel=1e-12)
        assert rate_from_gap(0.0) == 0.0
        with pytest.raises(ValueError):
            rate_from_gap(-0.1)

    def test_rate_convention_consistency(self, params_11, params_22):
        # W = 2 pi |V|^2 exactly ties rate_from_gap(2 V) to the closed forms
        v11 = effective_coupling(params_11, TransitionSpec((0, 0, "+"), (1, 1, "-"), 1))
        assert rate_from_gap(2 * abs(v11)) == pytest.approx(w11_analytic(0.15), rel=1e-12)
        v22 = effective_coupling(params_22, TransitionSpec((0, 0, "+"), (2, 2, "-"), 2))
        assert rate_from_gap(2 * abs(v22)) == pytest.approx(
            w22_analytic(0.15, 2.6, 1.6, 1.0), rel=1e-12)


class TestCompareRates:
    def test_small_coupling_agreement(self, closed_params, space6):
        comparison = compare_rates(
            closed_params, space6, ((0, 0, "+"), (1, 1, "-")), (1.2, 1.4), [0.05])
        assert comparison.numeric[0] == pytest.approx(comparison.analytic[0], rel=0.02)

    def test_tracking_loss_yields_nan(self, closed_params):
        space = build_space(8, 8)
        with pytest.warns(RuntimeWarning, match="NaN"):
            comparison = compare_rates(
                closed_params, space, ((0, 0, "+"), (2, 2, "-")), (2.4, 2.8), [0.2])
        assert math.isnan(comparison.numeric[0])
        assert comparison.analytic[0] > 0
