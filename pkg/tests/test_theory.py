import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisqg.errors import InvalidParameters, PreconditionViolated
from anisqg.theory import (Branch, DecayQuery, DissipationParams, critical_exponent, critical_p,
                           decay_exponent, difference_exponent, difference_exponent_l2only,
                           region_threshold, regularity_region, small_data_sobolev_index)

unit = st.floats(min_value=0.01, max_value=1.0)


# Exact-arithmetic oracle, written from the theorem statements rather than from the module.
def oracle_decay(a, b, s, p):
    a, b, s, p = F(a), F(b), F(s), F(p)
    return ((a + b) * (2 - p) + 2 * min(a, b) * s * p) / (4 * a * b * p)


def oracle_difference(a, b, p):
    a, b, p = F(a), F(b), F(p)
    pstar = 2 * (a + b) / (2 * a * b + a + b)
    shifted = min(a + (p + 1) * b, (p + 1) * a + b)
    amp = shifted + 2 * (a + b) - (a + b + 2 * a * b) * p
    m3 = min(a + 3 * b, 3 * a + b)
    denom = 4 * a * b * p
    if p == pstar:
        return shifted / denom
    if p < pstar:
        return min(m3 * p, amp) / denom
    return min(m3 * p + 2 * (a + b) * (2 - p) - 4 * a * b * p, amp) / denom


class TestParams:
    @pytest.mark.parametrize("a,b", [(0, 0.5), (0.5, 0), (1.2, 0.5), (0.5, -1), (float("nan"), 0.5),
                                     (float("inf"), 0.5)])
    def test_rejects_out_of_range(self, a, b):
        with pytest.raises(InvalidParameters):
            DissipationParams(a, b)

    def test_symbol_vanishes_only_at_origin(self):
        p = DissipationParams(0.3, 0.9)
        assert p.symbol(0.0, 0.0) == 0.0
        xi = np.linspace(-3, 3, 13)
        x1, x2 = np.meshgrid(xi, xi)
        lam = p.symbol(x1, x2)
        assert np.all(lam[(x1 != 0) | (x2 != 0)] > 0)

    @pytest.mark.parametrize("s,p", [(-0.1, 2), (0, 0.9), (0, 2.1)])
    def test_query_validation(self, s, p):
        with pytest.raises(InvalidParameters):
            DecayQuery(s, p)


class TestRegion:
    def test_low_alpha_example(self):
        v = regularity_region(DissipationParams(0.4, 0.6))
        assert v.admissible and v.branch is Branch.LOW_ALPHA
        assert region_threshold(0.4) == pytest.approx(1 / 1.8, rel=1e-15)

    def test_boundary_is_inadmissible(self):
        v = regularity_region(DissipationParams(0.5, 0.5))
        assert not v.admissible and v.branch is Branch.COMPLEMENT

    def test_high_alpha_example(self):
        v = regularity_region(DissipationParams(0.75, 0.2))
        assert v.admissible and v.branch is Branch.HIGH_ALPHA

    @pytest.mark.parametrize("a,b", [(1.0, 0.9), (0.9, 1.0), (1.0, 1.0)])
    def test_unit_exponents_fall_in_complement(self, a, b):
        assert regularity_region(DissipationParams(a, b)).branch is Branch.COMPLEMENT

    def test_branch_curves_meet_at_half(self):
        low = 1.0 / (2 * 0.5 + 1)
        high = (1 - 0.5) / (2 * 0.5)
        assert low == high == region_threshold(0.5) == 0.5
        eps = 1e-9
        assert region_threshold(0.5 + eps) == pytest.approx(0.5, abs=1e-8)

    @given(unit, unit)
    def test_every_inadmissible_point_is_complement(self, a, b):
        v = regularity_region(DissipationParams(a, b))
        assert v.admissible == (v.branch is not Branch.COMPLEMENT)


class TestDecayExponent:
    @pytest.mark.parametrize("a,b,s,p,want", [
        (1, 1, 0, 1, 0.5),
        (0.7, 0.8, 0, 2, 0.0),
        (0.5, 0.5, 1, 2, 1.0),
    ])
    def test_examples(self, a, b, s, p, want):
        assert decay_exponent(DissipationParams(a, b), DecayQuery(s, p)) == pytest.approx(want, abs=1e-15)

    @given(unit, unit, st.floats(0, 3), st.floats(1, 2))
    def test_matches_oracle(self, a, b, s, p):
        got = decay_exponent(DissipationParams(a, b), DecayQuery(s, p))
        assert got == pytest.approx(float(oracle_decay(a, b, s, p)), rel=1e-12, abs=1e-12)

    @given(unit, unit, st.floats(0, 3), st.floats(1, 2))
    def test_axis_swap_symmetry(self, a, b, s, p):
        q = DecayQuery(s, p)
        assert decay_exponent(DissipationParams(a, b), q) == pytest.approx(
            decay_exponent(DissipationParams(b, a), q), rel=1e-12, abs=1e-15)

    @given(unit, unit)
    def test_zero_at_s0_p2(self, a, b):
        assert decay_exponent(DissipationParams(a, b), DecayQuery(0, 2)) == 0.0

    @given(unit, st.floats(0, 3), st.floats(1, 2))
    def test_isotropic_reduction(self, a, s, p):
        got = decay_exponent(DissipationParams(a, a), DecayQuery(s, p))
        assert got == pytest.approx((2 * a * (2 - p) + 2 * a * s * p) / (4 * a * a * p), rel=1e-12, abs=1e-15)

    @given(unit, unit, st.floats(0, 3))
    def test_p2_is_l2_only_rate(self, a, b, s):
        got = decay_exponent(DissipationParams(a, b), DecayQuery(s, 2))
        assert got == pytest.approx(min(a, b) * s / (2 * a * b), rel=1e-12, abs=1e-15)


class TestDifferenceExponent:
    def test_unit_case_sits_on_critical_p(self):
        params = DissipationParams(1, 1)
        assert critical_p(params) == 1.0
        assert difference_exponent(params, 1.0) == pytest.approx(0.75, abs=1e-15)

    def test_unit_case_unsquared_convention(self):
        # The proof bounds ||W||^2 by (1+t)^(-2 E'); halving gives the unsquared rate.
        # At alpha=beta=p=1 the squared bound exponent is min{3,3}/(2*1*1*1) = 3/2.
        assert difference_exponent(DissipationParams(1, 1), 1.0) == pytest.approx(1.5 / 2)

    def test_half_half_uses_lower_branch(self):
        params = DissipationParams(0.5, 0.5)
        assert critical_p(params) == pytest.approx(4 / 3)
        assert difference_exponent(params, 1.0) == pytest.approx(float(oracle_difference(0.5, 0.5, 1)))

    @given(unit, unit, st.floats(1, 1.999))
    def test_matches_oracle(self, a, b, p):
        got = difference_exponent(DissipationParams(a, b), p)
        assert got == pytest.approx(float(oracle_difference(a, b, p)), rel=1e-9, abs=1e-12)

    def test_faster_than_solution_on_grid(self):
        worst = math.inf
        for a, b in itertools.product(np.linspace(0.05, 1, 20), repeat=2):
            params = DissipationParams(a, b)
            for p in np.linspace(1, 1.95, 10):
                gap = difference_exponent(params, p) - decay_exponent(params, DecayQuery(0, p))
                worst = min(worst, gap)
        assert worst > 0

    @given(st.floats(0.05, 1), st.floats(0.05, 1))
    def test_continuous_across_critical_p(self, a, b):
        params = DissipationParams(a, b)
        ps = critical_p(params)
        if not 1.0 < ps < 2.0:
            return
        mid = difference_exponent(params, ps)
        for q in (ps * (1 - 1e-10), ps * (1 + 1e-10)):
            assert difference_exponent(params, q) == pytest.approx(mid, abs=1e-7)

    @pytest.mark.parametrize("p", [0.99, 2.0, 2.5])
    def test_p_range(self, p):
        with pytest.raises(InvalidParameters):
            difference_exponent(DissipationParams(0.5, 0.5), p)


class TestL2Only:
    @pytest.mark.parametrize("a,b,want", [(0.5, 0.5, 0.5), (0.25, 1.0, 0.375)])
    def test_examples(self, a, b, want):
        assert difference_exponent_l2only(DissipationParams(a, b)) == pytest.approx(want, abs=1e-15)

    def test_unit_case_precondition(self):
        with pytest.raises(PreconditionViolated):
            difference_exponent_l2only(DissipationParams(1, 1))


class TestCritical:
    @pytest.mark.parametrize("s,p,want", [(1, 1, 2.0), (1, 2, 1.0), (2, 2, 2.0)])
    def test_examples(self, s, p, want):
        assert critical_exponent(s, p) == want

    def test_p_range(self):
        with pytest.raises(InvalidParameters):
            critical_exponent(1, 3)

    def test_small_data_index(self):
        assert small_data_sobolev_index(DissipationParams(0.5, 0.5)) == pytest.approx(1.0)
