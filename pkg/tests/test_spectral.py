import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisqg.errors import EmptyBand, InvalidParameters, SingularSymbol
from anisqg.spectral import (GridSpec, MultiplierSymbol, SpectralField, anisotropic_norm, apply_multiplier,
                             dealias, gradient, inner_product, lp_norm, mixed_norm, random_band_limited,
                             read_snapshot, resample, riesz_velocity, single_mode, snapshot_bytes,
                             sobolev_norm, write_snapshot)

G32 = GridSpec(32, 32)
seeds = st.integers(0, 2**32 - 1)


def rnd(seed=0, grid=G32, band=(1, 8), slope=-1.0):
    return random_band_limited(seed, grid, band, slope)


class TestGrid:
    def test_integer_wavenumbers_on_2pi(self):
        g = GridSpec(8, 6)
        assert sorted(set(g.k1[:, 0])) == [-4, -3, -2, -1, 0, 1, 2, 3]
        assert np.array_equal(g.xi1, g.k1.astype(float))

    def test_wavenumber_unit_follows_period(self):
        g = GridSpec(8, 8, l1=math.pi, l2=4 * math.pi)
        assert g.xi1[1, 0] == pytest.approx(2.0)
        assert g.xi2[0, 1] == pytest.approx(0.5)

    def test_dealias_mask(self):
        g = GridSpec(12, 12)
        kept = sorted(set(np.abs(g.k1[g.mask])))
        assert kept == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("kw", [dict(n1=7, n2=8), dict(n1=8, n2=0), dict(n1=8, n2=8, l1=-1),
                                    dict(n1=8, n2=8, dealias_fraction=0)])
    def test_rejects_bad_grid(self, kw):
        with pytest.raises(InvalidParameters):
            GridSpec(**kw)

    def test_equality_and_hash(self):
        assert GridSpec(16, 16) == GridSpec(16, 16)
        assert hash(GridSpec(16, 16)) == hash(GridSpec(16, 16))
        assert GridSpec(16, 16) != GridSpec(16, 32)


class TestMultipliers:
    def test_dissipation_unit_mode(self):
        f = single_mode(G32, 1, 0)
        out = apply_multiplier(f, MultiplierSymbol.dissipation(0.3, 0.7))
        assert np.allclose(out.coeffs, f.coeffs, atol=0, rtol=1e-15)

    def test_identity_symbol(self):
        f = rnd(3)
        assert np.array_equal(apply_multiplier(f, MultiplierSymbol.isotropic_power(0)).coeffs, f.coeffs)

    def test_axis_power_factor(self):
        f = single_mode(G32, 0, 2)
        out = apply_multiplier(f, MultiplierSymbol.axis_power(2, 0.5))
        assert out.coeffs[0, 2] == pytest.approx(1.41421356, rel=1e-8)

    def test_values_at_origin(self):
        g = GridSpec(8, 8)
        assert MultiplierSymbol.heat_kernel(0.5, 0.5, 3.0).evaluate(g)[0, 0] == 1.0
        assert MultiplierSymbol.isotropic_power(0).evaluate(g)[0, 0] == 1.0
        assert MultiplierSymbol.axis_power(1, 0.7).evaluate(g)[0, 0] == 0.0
        assert MultiplierSymbol.dissipation(0.5, 0.5).evaluate(g)[0, 0] == 0.0

    def test_negative_power_on_mean_mode(self):
        f = SpectralField.from_physical(G32, np.ones(G32.shape))
        with pytest.raises(SingularSymbol):
            apply_multiplier(f, MultiplierSymbol.isotropic_power(-1))
        out = apply_multiplier(rnd(1), MultiplierSymbol.isotropic_power(-1))
        assert out.mean_mode == 0

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_multipliers_commute(self, seed):
        f = rnd(seed)
        a = MultiplierSymbol.axis_power(1, 0.6)
        b = MultiplierSymbol.heat_kernel(0.4, 0.9, 0.3)
        ab = apply_multiplier(apply_multiplier(f, a), b).coeffs
        ba = apply_multiplier(apply_multiplier(f, b), a).coeffs
        assert np.max(np.abs(ab - ba)) < 1e-13

    def test_multiplier_keeps_field_real(self):
        out = apply_multiplier(rnd(2), MultiplierSymbol.dissipation(0.3, 0.8))
        assert out.hermitian_defect() < 1e-14


class TestRiesz:
    def test_unit_mode(self):
        g = GridSpec(16, 16)
        c = np.zeros(g.shape, complex)
        c[1, 0] = 1.0
        u1, u2 = riesz_velocity(SpectralField(g, c))
        assert u1.coeffs[1, 0] == 0
        assert u2.coeffs[1, 0] == pytest.approx(1j)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_divergence_free(self, seed):
        u1, u2 = riesz_velocity(rnd(seed))
        g = G32
        div = np.abs(g.xi1 * u1.coeffs + g.xi2 * u2.coeffs)
        scale = np.abs(u1.coeffs) + np.abs(u2.coeffs)
        assert np.all(div <= 1e-14 * np.maximum(scale, 1e-300))

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_isometry_for_mean_free(self, seed):
        f = rnd(seed)
        u1, u2 = riesz_velocity(f)
        assert math.hypot(sobolev_norm(u1, 0), sobolev_norm(u2, 0)) == pytest.approx(sobolev_norm(f, 0), rel=1e-13)

    def test_velocity_is_real(self):
        u1, u2 = riesz_velocity(rnd(4, band=(1, 15)))
        assert u1.hermitian_defect() < 1e-15 and u2.hermitian_defect() < 1e-15

    def test_gradient_single_mode(self):
        d1, d2 = gradient(single_mode(G32, 2, 3))
        assert d1.coeffs[2, 3] == pytest.approx(2j) and d2.coeffs[2, 3] == pytest.approx(3j)


class TestNorms:
    def test_zero_field(self):
        z = SpectralField.zeros(G32)
        assert sobolev_norm(z, 1.3) == anisotropic_norm(z, 2, 0.5) == lp_norm(z, 3) == lp_norm(z, math.inf) == 0

    @pytest.mark.parametrize("s", [0, 0.5, 1, 2.5])
    def test_unit_mode_independent_of_s(self, s):
        f = single_mode(G32, 1, 0, 0.7)
        assert sobolev_norm(f, s) == pytest.approx(0.7 * math.sqrt(2), rel=1e-14)

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_parseval(self, seed):
        f = rnd(seed)
        assert lp_norm(f, 2) == pytest.approx(sobolev_norm(f, 0), rel=1e-12)

    def test_parseval_against_grid_quadrature(self):
        g = GridSpec(16, 24, l1=3.0, l2=5.0)
        x1, x2 = g.coords()
        v = np.sin(2 * np.pi * x1 / 3.0) + 0.5 * np.cos(4 * np.pi * x2 / 5.0)
        f = SpectralField.from_physical(g, v)
        assert sobolev_norm(f, 0) ** 2 == pytest.approx(np.sum(v**2) * g.dx1 * g.dx2, rel=1e-13)

    @given(seeds, st.floats(0.1, 1), st.floats(0.1, 1))
    @settings(max_examples=25, deadline=None)
    def test_dissipation_quadratic_form(self, seed, a, b):
        f = rnd(seed)
        lam = MultiplierSymbol.dissipation(a, b).evaluate(G32)
        want = float(np.sum(lam * np.abs(f.coeffs) ** 2))
        got = anisotropic_norm(f, 1, a) ** 2 + anisotropic_norm(f, 2, b) ** 2
        assert got == pytest.approx(want, rel=1e-12)

    def test_mixed_norm_reduces(self):
        f = rnd(9)
        assert mixed_norm(f, 0.4, 0) == pytest.approx(anisotropic_norm(f, 1, 0.4), rel=1e-14)
        assert mixed_norm(f, 0, 0.4) == pytest.approx(anisotropic_norm(f, 2, 0.4), rel=1e-14)

    def test_lp_of_constant(self):
        g = GridSpec(8, 8)
        f = SpectralField.from_physical(g, np.full(g.shape, 2.0))
        assert lp_norm(f, 1) == pytest.approx(2.0 * g.area)
        assert lp_norm(f, math.inf) == pytest.approx(2.0)
        with pytest.raises(InvalidParameters):
            lp_norm(f, 0.5)

    def test_inner_product_matches_physical(self):
        f, g_ = rnd(1), rnd(2)
        phys = np.sum(f.to_physical() * g_.to_physical()) * G32.dx1 * G32.dx2
        assert inner_product(f, g_) == pytest.approx(phys, rel=1e-12)


class TestFields:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_round_trip(self, seed):
        f = rnd(seed)
        back = SpectralField.from_physical(G32, f.to_physical())
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))

    def test_random_field_deterministic(self):
        assert np.array_equal(rnd(1).coeffs, rnd(1).coeffs)
        assert not np.array_equal(rnd(1).coeffs, rnd(2).coeffs)

    def test_random_field_unit_shell(self):
        f = rnd(5, band=(1, 1))
        assert np.all(G32.xi_abs[np.abs(f.coeffs) > 0] == 1.0)

    def test_random_field_is_real(self):
        f = rnd(6)
        assert np.max(np.abs(f.to_physical(real=False).imag)) < 1e-12
        assert f.mean_mode == 0
        assert sobolev_norm(f, 0) == pytest.approx(1.0)

    def test_empty_band(self):
        with pytest.raises(EmptyBand):
            rnd(0, band=(0.2, 0.5))
        with pytest.raises(EmptyBand):
            rnd(0, band=(5, 2))

    def test_fields_are_immutable(self):
        f = rnd(0)
        with pytest.raises(ValueError):
            f.coeffs[1, 1] = 3.0

    def test_arithmetic(self):
        f = rnd(0)
        assert sobolev_norm(f - f, 0) == 0
        assert sobolev_norm(f + f, 0) == pytest.approx(2 * sobolev_norm(f * 1.0, 0))

    def test_resample_preserves_function(self):
        f = rnd(7, band=(1, 10))
        fine = resample(f, GridSpec(64, 64))
        assert sobolev_norm(fine, 0.7) == pytest.approx(sobolev_norm(f, 0.7), rel=1e-14)
        assert np.allclose(fine.to_physical()[::2, ::2], f.to_physical(), atol=1e-14)


class TestDealias:
    def test_inside_mask_unchanged(self):
        f = single_mode(G32, 3, 4)
        assert np.array_equal(dealias(f).coeffs, f.coeffs)

    def test_nyquist_removed(self):
        f = single_mode(G32, 16, 0)
        assert np.all(dealias(f).coeffs == 0)

    def test_idempotent(self):
        f = rnd(1, band=(1, 20))
        once = dealias(f)
        assert np.array_equal(dealias(once).coeffs, once.coeffs)


class TestSnapshots:
    @pytest.mark.parametrize("order", ["<", ">"])
    def test_round_trip(self, order):
        f = random_band_limited(3, GridSpec(16, 8, 3.0, 7.0), (1, 4))
        buf = io.BytesIO()
        write_snapshot(f, buf, order)
        buf.seek(0)
        g = read_snapshot(buf)
        assert g.grid == f.grid and np.array_equal(g.coeffs, f.coeffs)

    def test_layout(self):
        f = single_mode(GridSpec(4, 4), 1, 0, 2 + 1j)
        raw = snapshot_bytes(f, ">")
        assert raw[:6] == b"ASQG>\x01"
        assert len(raw) == 32 + 16 * 16
        # k1 slow: element (1, 0) is the fifth complex value
        off = 32 + 16 * 4
        assert np.frombuffer(raw[off:off + 16], dtype=">f8").tolist() == [2.0, 1.0]

    def test_rejects_garbage(self):
        with pytest.raises(InvalidParameters):
            read_snapshot(io.BytesIO(b"NOPE" + bytes(40)))
        with pytest.raises(InvalidParameters):
            read_snapshot(io.BytesIO(snapshot_bytes(single_mode(GridSpec(4, 4), 1, 0))[:-5]))
