import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from anisqg.errors import DegenerateSystem, HypothesisViolated, InvalidParameters, ZeroField
from anisqg.inequalities import (CONSTANT_ONE_THRESHOLD, EMPIRICAL_IDS, InequalityId, InterpolationTriple,
                                 Moment, OdeComparison, check_aniso_interpolation,
                                 check_directional_interpolation, check_symbol_inequalities,
                                 constant_one_suite, directional_lp_r, embedding_exponents,
                                 empirical_ratio_report, interpolation_weights, mixed_lp_exponents,
                                 ode_comparison_bound, ode_comparison_verify, splitting_moment,
                                 splitting_moment_exponent, splitting_moment_quadrature,
                                 time_convolution_ratio)
from anisqg.spectral import GridSpec, SpectralField, random_band_limited, single_mode
from anisqg.theory import DissipationParams

G = GridSpec(64, 64)


class TestWeights:
    def test_axis_aligned_case(self):
        # eps on axis 2 and gamma on axis 1 decouple: mu = d2/e2, lam = d1/g1
        w = interpolation_weights((0.3, 0.4), (0.0, 2.0), (1.5, 0.0))
        assert w.mu == pytest.approx(0.2) and w.lam == pytest.approx(0.2) and w.valid

    def test_delta_equal_eps(self):
        w = interpolation_weights((0.6, 0.9), (0.6, 0.9), (1.0, 0.2))
        assert w.mu == pytest.approx(1.0) and w.lam == pytest.approx(0.0, abs=1e-15) and w.valid

    def test_outside_simplex_is_flagged(self):
        assert not interpolation_weights((2.0, 2.0), (0.0, 1.0), (1.0, 0.0)).valid

    def test_degenerate(self):
        with pytest.raises(DegenerateSystem):
            interpolation_weights((0.3, 0.3), (1.0, 1.0), (2.0, 2.0))

    @given(st.floats(0.01, 2), st.floats(0.01, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2),
           st.floats(0, 2))
    @example(1.0, 1.0, 2.2250738585e-313, 1.0, 0.0, 1.0)  # subnormal determinant
    def test_consistency(self, d1, d2, e1, e2, g1, g2):
        t = InterpolationTriple((d1, d2), (e1, e2), (g1, g2))
        try:
            w = t.weights
        except DegenerateSystem:
            return
        scale = max(1.0, abs(w.mu), abs(w.lam))
        assert t.consistency_defect() <= 1e-12 * scale * 4

    def test_triple_validation(self):
        with pytest.raises(InvalidParameters):
            InterpolationTriple((0.0, 1.0), (1, 1), (1, 0))
        with pytest.raises(InvalidParameters):
            InterpolationTriple((1.0, 1.0), (-1, 1), (1, 0))


class TestFieldChecks:
    triple = InterpolationTriple((0.5, 0.5), (1.0, 0.0), (0.0, 1.0))

    @pytest.mark.parametrize("k", [(1, 1), (3, -2), (7, 5)])
    def test_single_mode_is_equality(self, k):
        assert check_aniso_interpolation(single_mode(G, *k), self.triple) == pytest.approx(1.0, rel=1e-12)

    def test_two_modes_strict(self):
        f = single_mode(G, 1, 0) + single_mode(G, 0, 6)
        assert check_aniso_interpolation(f, self.triple) < 1.0

    def test_violated_hypothesis(self):
        with pytest.raises(HypothesisViolated):
            check_aniso_interpolation(single_mode(G, 1, 1), InterpolationTriple((2, 2), (0, 1), (1, 0)))

    def test_zero_field(self):
        with pytest.raises(ZeroField):
            check_aniso_interpolation(SpectralField.zeros(G), self.triple)

    @pytest.mark.parametrize("gamma", [0.0, 1.3])
    def test_directional_endpoints(self, gamma):
        f = random_band_limited(2, G, (1, 20))
        assert check_directional_interpolation(f, 1, gamma, 1.3) == pytest.approx(1.0, rel=1e-12)

    def test_directional_interior(self):
        f = random_band_limited(2, G, (1, 20))
        assert check_directional_interpolation(f, 2, 0.4, 1.3) < 1.0
        with pytest.raises(HypothesisViolated):
            check_directional_interpolation(f, 2, 1.5, 1.3)

    def test_symbol_facts(self):
        worst = check_symbol_inequalities(G)
        assert max(worst.values()) <= CONSTANT_ONE_THRESHOLD
        # the first comparison is attained on an axis-aligned mode with l = 1
        assert worst["first"] == pytest.approx(1.0)


class TestConstantOne:
    def test_small_suite(self):
        reps = constant_one_suite(samples=40, n=64, seed=3)
        assert [r["id"] for r in reps] == ["ANISO_INTERPOLATION", "DIRECTIONAL_INTERPOLATION", "SYMBOL_FACTS"]
        assert all(r["pass"] and r["violations"] == 0 for r in reps)

    def test_seed_determinism(self):
        a = constant_one_suite(samples=10, n=32, seed=11)
        b = constant_one_suite(samples=10, n=32, seed=11)
        assert a == b


class TestEmpirical:
    def test_exponents(self):
        r, e1, e2 = embedding_exponents(DissipationParams(0.25, 0.25))
        assert r == pytest.approx(8 / 3) and e1 == e2 == 0.5
        with pytest.raises(HypothesisViolated):
            embedding_exponents(DissipationParams(1, 1))
        e = mixed_lp_exponents(DissipationParams(0.5, 0.5), 1.0)
        assert sum(e) == pytest.approx(1.0)
        assert directional_lp_r(0.5, 1.0, 2.0, math.inf) == pytest.approx(4.0)
        with pytest.raises(HypothesisViolated):
            mixed_lp_exponents(DissipationParams(0.5, 0.5), 2.0)

    @pytest.mark.parametrize("iid", EMPIRICAL_IDS)
    def test_report_shape(self, iid):
        rep = empirical_ratio_report(iid, samples=12, n=32)
        assert rep["threshold"] is None and rep["pass"]
        assert 0 < rep["sup_ratio"] < math.inf
        assert sum(rep["histogram"]["counts"]) == 12

    def test_constant_one_id_rejected(self):
        with pytest.raises(InvalidParameters):
            empirical_ratio_report(InequalityId.SYMBOL_FACTS)

    def test_refinement_stability(self):
        a = empirical_ratio_report(InequalityId.EMBEDDING_SPT402, samples=30, n=128)["sup_ratio"]
        b = empirical_ratio_report(InequalityId.EMBEDDING_SPT402, samples=30, n=256)["sup_ratio"]
        assert abs(a / b - 1) < 0.05


class TestSplitting:
    def test_isotropic_closed_forms(self):
        p = DissipationParams(1, 1)
        for rho in (0.5, 2.0):
            assert splitting_moment(p, rho, Moment.AREA) == pytest.approx(math.pi * rho)
            assert splitting_moment(p, rho, Moment.XI1_SQ) == pytest.approx(math.pi * rho**2 / 4)

    def test_diamond(self):
        p = DissipationParams(0.5, 0.5)
        rho = 0.7
        assert splitting_moment(p, rho, Moment.AREA) == pytest.approx(2 * rho**2)
        assert splitting_moment(p, rho, Moment.XI1_SQ) == pytest.approx(rho**4 / 3)

    @pytest.mark.parametrize("a,b", [(0.3, 0.8), (0.6, 0.6), (1.0, 0.4)])
    @pytest.mark.parametrize("m", [Moment.AREA, Moment.XI1_SQ, Moment.XI2_SQ])
    def test_against_quadrature(self, a, b, m):
        p = DissipationParams(a, b)
        q, err = splitting_moment_quadrature(p, 0.8, m)
        assert splitting_moment(p, 0.8, m) == pytest.approx(q, rel=1e-8)

    def test_axis_swap(self):
        p = DissipationParams(0.3, 0.7)
        assert splitting_moment(p, 0.4, Moment.XI1_SQ) == pytest.approx(
            splitting_moment(p.swapped(), 0.4, Moment.XI2_SQ), rel=1e-14)

    @pytest.mark.parametrize("m", [Moment.AREA, Moment.XI1_SQ, Moment.XI2_SQ])
    def test_scaling(self, m):
        p = DissipationParams(0.45, 0.8)
        r = splitting_moment(p, 0.2, m) / splitting_moment(p, 0.1, m)
        assert r == pytest.approx(2 ** splitting_moment_exponent(p, m), rel=1e-12)

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0])
    def test_iso_bound_dominates(self, s):
        p = DissipationParams(0.4, 0.9)
        for rho in (0.3, 1.0, 3.0):
            exact, _ = splitting_moment_quadrature(p, rho, Moment.ISO_BOUND, s)
            assert splitting_moment(p, rho, Moment.ISO_BOUND, s) >= exact

    def test_bad_rho(self):
        with pytest.raises(InvalidParameters):
            splitting_moment(DissipationParams(1, 1), 0.0, Moment.AREA)


class TestOde:
    def test_bound_examples(self):
        assert ode_comparison_bound(OdeComparison(1.0, 1.0, 2.0), 1.0) == pytest.approx(0.5)
        assert ode_comparison_bound(OdeComparison(0.0, 1.0, 2.0), 5.0) == 0.0
        assert ode_comparison_bound(OdeComparison(1.0, 1.0, 3.0), 2.0) == pytest.approx(1 / math.sqrt(5))

    def test_equality_case_saturates(self):
        r = ode_comparison_verify(OdeComparison(1.0, 1.0, 2.0), 1e-2, 10.0)
        assert r["pass"] and r["max_rel_gap"] < 1e-8

    def test_forcing_stays_below(self):
        r = ode_comparison_verify(OdeComparison(2.0, 0.5, 1.5), 1e-2, 20.0, forcing=lambda t: math.exp(-t))
        assert r["pass"] and r["max_rel_excess"] <= 0

    def test_validation(self):
        with pytest.raises(InvalidParameters):
            OdeComparison(1.0, 1.0, 1.0)


class TestTimeConvolution:
    def test_shape(self):
        times = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 30)])
        r = time_convolution_ratio(2.0, 1.5, times)
        assert r["values"][0] == 0 and r["pass"]
        assert r["values"][-1] == pytest.approx(0.5, rel=1e-2)
        assert r["sup"] < math.inf

    def test_validation(self):
        with pytest.raises(InvalidParameters):
            time_convolution_ratio(0.0, 1.0, [1.0])
