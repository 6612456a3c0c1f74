"""Trace formula terms, full residual, Weyl counting, measure comparison."""
import math

import numpy as np
import pytest

from specsurf import traceform as tf
from specsurf import modsurf as ms
from specsurf.fuchsian import ConjClassEntry
from specsurf.specfun import log_gamma
from specsurf.transforms import SpectralInterval, heat_triple, monk_window
from specsurf._quadrature import quad_err


class TestIdentityTerm:
    def test_zero(self):
        val, _ = tf.identity_term(lambda r: 0.0, math.pi / 3)
        assert val == 0.0

    def test_linearity(self):
        h = lambda r: math.exp(-(0.25 + r * r))
        v1, _ = tf.identity_term(h, math.pi / 3)
        v2, _ = tf.identity_term(lambda r: 2.0 * h(r), math.pi / 3)
        assert v2 == pytest.approx(2.0 * v1, rel=1e-10)

    def test_refinement_stable(self):
        h = lambda r: math.exp(-(0.25 + r * r))
        a, _ = tf.identity_term(h, math.pi / 3, tol=1e-8)
        b, _ = tf.identity_term(h, math.pi / 3, tol=1e-12)
        assert a == pytest.approx(b, abs=1e-8)


class TestHyperbolicTerm:
    def test_empty(self):
        g = lambda u: math.exp(-u * u)
        val, tail = tf.hyperbolic_term(g, [], 4.0)
        assert val == 0.0

    def test_multiplicity_linearity(self):
        g = lambda u: math.exp(-u * u / 4.0)
        e1 = ConjClassEntry(length=2.0, primitive=True, multiplicity=1,
                            representative_word="", trace=3.086)
        e2 = ConjClassEntry(length=2.0, primitive=True, multiplicity=2,
                            representative_word="", trace=3.086)
        v1, _ = tf.hyperbolic_term(g, [e1], 4.0)
        v2, _ = tf.hyperbolic_term(g, [e2], 4.0)
        assert v2 == pytest.approx(2.0 * v1, rel=1e-12)

    def test_incomplete_refused(self):
        with pytest.raises(ValueError):
            tf.hyperbolic_term(lambda u: 0.0, [], 4.0, complete=False)

    def test_truncation_stability(self):
        # value moves less than the reported tail bound when Lmax grows
        from specsurf.fuchsian import length_spectrum, modular_group
        G = modular_group()
        trip = heat_triple(0.5, build_kernel=False)
        s8, c8 = length_spectrum(G, 8.0)
        s10, c10 = length_spectrum(G, 10.0)
        v8, tail8 = tf.hyperbolic_term(trip.g, s8, 8.0, complete=c8)
        v10, _ = tf.hyperbolic_term(trip.g, s10, 10.0, complete=c10)
        assert abs(v10 - v8) <= tail8


class TestParabolicTerms:
    def test_compact_case(self):
        terms, err = tf.parabolic_terms(lambda r: 1.0, lambda u: 1.0, 0, -1.0)
        assert terms == (0.0, 0.0, 0.0)

    def test_modular_first_term_is_half_h0(self):
        trip = heat_triple(1.0, build_kernel=False)
        terms, _ = tf.parabolic_terms(trip.h, trip.g, 1, -1.0)
        assert terms[0] == pytest.approx(0.5 * float(np.real(trip.h(0.0))), rel=1e-12)

    def test_window_g0_term(self):
        iv = SpectralInterval.from_r(1.0, 3.0)
        trip = monk_window(iv, 2.0)
        terms, _ = tf.parabolic_terms(trip.h, trip.g, 1, -1.0)
        assert terms[1] == pytest.approx(-math.log(2.0) * 2.0 * (3.0 - 1.0) / math.pi, rel=1e-12)

    def test_window_digamma_decomposition(self):
        # int H_t psi(1+ir) dr splits into the log-Gamma phase increment
        # plus the window-tail correction
        iv = SpectralInterval.from_r(1.0, 3.0)
        t = 2.0
        trip = monk_window(iv, t)
        from specsurf.specfun import digamma

        full, _ = quad_err(lambda r: float(np.real(trip.h(r))) * digamma(complex(1, r)).real,
                           0.0, 25.0, tol=1e-11)
        full *= 2.0  # two-sided int_R H_t Re psi(1+ir) dr
        main = 2.0 * (log_gamma(complex(1, iv.beta)).imag - log_gamma(complex(1, iv.alpha)).imag)

        def tail(r):
            ind = 1.0 if iv.alpha <= abs(r) <= iv.beta else 0.0
            return (float(np.real(trip.h(r))) - ind) * digamma(complex(1, r)).real
        corr, _ = quad_err(tail, 0.0, 25.0, tol=1e-11, limit=400)
        corr *= 2.0
        assert full == pytest.approx(main + corr, abs=1e-3)


class TestSpectralSide:
    def test_zero_function(self):
        m = tf.modular_measure()
        val, _ = tf.spectral_side(lambda r: 0.0 * r if isinstance(r, float) else 0.0, m,
                                  include_lambda0=False)
        assert val == 0.0

    def test_partial_sums_monotone(self):
        trip = heat_triple(0.05, build_kernel=False)
        table = ms.load_eigenvalue_table()
        vals = []
        for n in (5, 10, 25):
            m = tf.modular_measure(table.head(n))
            v, _ = tf.spectral_side(trip.h, m)
            vals.append(v)
        assert vals[0] < vals[1] < vals[2]

    def test_lambda0_is_one_for_heat(self):
        trip = heat_triple(1.7, build_kernel=False)
        m = tf.modular_measure()
        with_l0, _ = tf.spectral_side(trip.h, m, include_lambda0=True)
        without, _ = tf.spectral_side(trip.h, m, include_lambda0=False)
        assert with_l0 - without == pytest.approx(1.0, abs=1e-12)


class TestTraceResidual:
    def test_heat_t1_within_budget(self):
        trip = heat_triple(1.0, build_kernel=False)
        rep = tf.trace_residual(trip, l_max=10.0)
        assert rep.ok
        assert abs(rep.residual) < 0.05

    def test_refinement_strictly_decreases(self):
        trip = heat_triple(1.0, build_kernel=False)
        coarse = tf.trace_residual(trip, l_max=8.0, n_eigenvalues=10)
        fine = tf.trace_residual(trip, l_max=10.0, n_eigenvalues=25)
        assert abs(fine.residual) < abs(coarse.residual)

    def test_table_extension_matters_at_small_t(self):
        # at t = 0.045 the tabulated tail beyond entry 10 is visible
        trip = heat_triple(0.045, build_kernel=False)
        coarse = tf.trace_residual(trip, l_max=10.0, n_eigenvalues=10)
        fine = tf.trace_residual(trip, l_max=10.0, n_eigenvalues=25)
        assert abs(fine.residual) < abs(coarse.residual)

    def test_lambda0_omission_detector(self):
        trip = heat_triple(1.0, build_kernel=False)
        rep = tf.trace_residual(trip, l_max=8.0)
        spec_no_l0, _ = tf.spectral_side(trip.h, tf.modular_measure(), include_lambda0=False)
        broken_residual = spec_no_l0 - rep.geometric_side
        assert abs(broken_residual) > 0.9  # the missing h(i/2) = 1

    def test_serializes(self):
        trip = heat_triple(1.0, build_kernel=False)
        rep = tf.trace_residual(trip, l_max=6.0)
        import json

        doc = json.loads(rep.to_json())
        assert "residual" in doc and "budget" in doc

    def test_non_modular_rejected(self):
        from specsurf.fuchsian import punctured_torus_group
        trip = heat_triple(1.0, build_kernel=False)
        with pytest.raises(ValueError):
            tf.trace_residual(trip, model=punctured_torus_group())


class TestWeyl:
    def test_degenerate_interval(self):
        rep = tf.weyl_count(SpectralInterval(0.7, 0.7))
        assert rep.n_discrete == 0
        assert rep.m_continuous == pytest.approx(0.0, abs=1e-12)
        assert rep.main_term == pytest.approx(0.0, abs=1e-12)

    def test_additivity(self):
        a = tf.weyl_count(SpectralInterval(0.5, 60.0))
        b = tf.weyl_count(SpectralInterval(60.0, 120.0))
        c = tf.weyl_count(SpectralInterval(0.5, 120.0))
        assert a.n_plus_m + b.n_plus_m == pytest.approx(c.n_plus_m, abs=1e-8)

    def test_first_maass_window(self):
        rep = tf.weyl_count(SpectralInterval(0.25 + 81.0, 0.25 + 100.0))
        assert rep.n_discrete == 1
        rep2 = tf.weyl_count(SpectralInterval(0.25 + 81.0, 0.25 + 100.0), tol=1e-12)
        assert rep.m_continuous == pytest.approx(rep2.m_continuous, abs=1e-6)

    def test_remainder_loose_bound(self):
        rep = tf.weyl_count(SpectralInterval(0.5, 1.0))
        assert abs(rep.remainder) <= 0.5


class TestMeasureCompare:
    def test_zero_window(self):
        rep = tf.measure_compare(lambda r: 0.0)
        assert rep.abs_integral == 0.0
        assert rep.signed_abs == 0.0

    def test_triangle_inequality(self):
        rep = tf.measure_compare(lambda r: math.exp(-((r - 2.0) ** 2)))
        assert rep.abs_integral >= rep.signed_abs - 1e-12

    def test_window_family_single_constant(self):
        # smooth window family; the comparison constant stays below 10
        worst = 0.0
        for c in np.linspace(0.8, 10.0, 10):
            rep = tf.measure_compare(lambda r, c=c: math.exp(-4.0 * (r - c) ** 2))
            worst = max(worst, rep.ratio)
        assert worst <= 10.0
