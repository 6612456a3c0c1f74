"""Modular-surface spectral machinery: scattering, Eisenstein, counting."""
import cmath
import math

import numpy as np
import pytest

from specsurf import modsurf as ms
from specsurf.hgeom import UHPoint
from specsurf.specfun import PoleError
from specsurf.transforms import SpectralInterval
from specsurf._quadrature import quad_err

R1_MAASS = 9.533695261353  # first cusp-form spectral parameter (shipped table)


class TestEigenvalueTable:
    def test_shipped_table(self):
        t = ms.load_eigenvalue_table()
        assert len(t) == 25
        assert t.r_values[0] == pytest.approx(R1_MAASS, abs=1e-9)
        assert list(t.r_values) == sorted(t.r_values)

    def test_comments_and_sorting(self, tmp_path):
        p = tmp_path / "tab.txt"
        p.write_text("# hello\n1.5\n2.5 # trailing\n\n3.5\n")
        t = ms.load_eigenvalue_table(p)
        assert len(t) == 3

    def test_empty_rejected(self, tmp_path):
        p = tmp_path / "tab.txt"
        p.write_text("# only a comment\n")
        with pytest.raises(ms.TableParseError):
            ms.load_eigenvalue_table(p)

    def test_unsorted_rejected_with_line(self, tmp_path):
        p = tmp_path / "tab.txt"
        p.write_text("2.0\n1.0\n")
        with pytest.raises(ms.TableParseError) as exc:
            ms.load_eigenvalue_table(p)
        assert exc.value.line_no == 2

    def test_negative_rejected(self, tmp_path):
        p = tmp_path / "tab.txt"
        p.write_text("-1.0\n")
        with pytest.raises(ms.TableParseError):
            ms.load_eigenvalue_table(p)


class TestScattering:
    def test_unitarity_grid(self):
        for r in np.linspace(0.1, 50.0, 120):
            assert abs(abs(ms.scattering_det(float(r))) - 1.0) < 1e-9

    def test_functional_equation(self):
        for r in (0.3, 3.0, 17.0):
            prod = ms.scattering_det(r) * ms.scattering_det(-r)
            assert abs(prod - 1.0) < 1e-9

    def test_limit_at_zero(self):
        vals = [ms.scattering_det(10.0 ** -k) for k in (2, 3, 4, 5)]
        errs = [abs(v + 1.0) for v in vals]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 1e-4

    def test_pole_rejected(self):
        with pytest.raises(PoleError):
            ms.scattering_det(0.0)

    def test_log_deriv_real_and_even(self):
        assert ms.scattering_log_deriv(2.0) == pytest.approx(ms.scattering_log_deriv(-2.0), abs=1e-8)

    def test_log_deriv_matches_phase_derivative(self):
        r, h = 10.0, 1e-4
        fd = (cmath.phase(ms.scattering_det(r + h)) - cmath.phase(ms.scattering_det(r - h))) / (2 * h)
        assert -fd == pytest.approx(ms.scattering_log_deriv(r), abs=1e-5)

    def test_r_min_guard(self):
        with pytest.raises(PoleError):
            ms.scattering_log_deriv(0.01)


class TestEisenstein:
    def test_periodicity_exact(self):
        ev = ms.EisensteinEvaluator(2.0, 30)
        z = UHPoint(0.3, 1.2)
        assert ev.value(UHPoint(z.x + 1.0, z.y), reduce=False) == ev.value(z, reduce=False)

    def test_modular_invariance(self):
        ev = ms.EisensteinEvaluator(2.0, 30)
        z = complex(0.3, 1.2)
        w = -1.0 / z
        a = ev.value(UHPoint(z.real, z.imag), reduce=False)
        b = ev.value(UHPoint(w.real, w.imag), reduce=False)
        assert abs(a - b) < 1e-8

    def test_laplacian_eigenfunction_random(self):
        rng = np.random.default_rng(4)
        h = 1e-3
        for _ in range(20):
            r = rng.uniform(0.5, 4.0)
            z = UHPoint(rng.uniform(-0.4, 0.4), rng.uniform(1.1, 2.5))
            ev = ms.EisensteinEvaluator(r, 40)

            def E(x, y):
                return ev.value(UHPoint(x, y), reduce=False)
            lap = -(z.y ** 2) * ((E(z.x + h, z.y) - 2 * E(z.x, z.y) + E(z.x - h, z.y)) / h ** 2
                                 + (E(z.x, z.y + h) - 2 * E(z.x, z.y) + E(z.x, z.y - h)) / h ** 2)
            lam = 0.25 + r * r
            assert abs(lap / E(z.x, z.y) - lam) < 1e-4 * max(1.0, lam)

    def test_constant_term(self):
        ev = ms.EisensteinEvaluator(1.3, 30)
        y = 2.7
        c0 = ev.constant_term(y)
        expect = y ** complex(0.5, 1.3) + ev.phi * y ** complex(0.5, -1.3)
        assert abs(c0 - expect) < 1e-12

    def test_truncation_bound_honest(self):
        # dropping modes beyond n_modes really is below the reported bound
        big = ms.EisensteinEvaluator(2.0, 60)
        small = ms.EisensteinEvaluator(2.0, 8)
        z = UHPoint(0.23, math.sqrt(3) / 2 + 0.01)
        diff = abs(big.value(z, reduce=False) - small.value(z, reduce=False))
        assert diff <= small.truncation_bound(z.y) + 1e-15


class TestTruncatedEisenstein:
    def test_below_height_identical(self):
        ev = ms.EisensteinEvaluator(2.0, 30)
        z = UHPoint(0.1, 2.0)
        assert ev.value_truncated(z, 5.0) == ev.value(z)

    def test_zeroth_mode_vanishes(self):
        # integral of the truncation over a period at height 8 < 1e-10
        ev = ms.EisensteinEvaluator(2.0, 30)
        y = 8.0
        val, _ = quad_err(lambda x: (ev.value_truncated(UHPoint(x, y), 5.0)).real, 0.0, 1.0, tol=1e-12)
        vali, _ = quad_err(lambda x: (ev.value_truncated(UHPoint(x, y), 5.0)).imag, 0.0, 1.0, tol=1e-12)
        assert abs(complex(val, vali)) < 1e-10

    def test_dominant_mode_ratio(self):
        # at z = 0.2 + 10i the truncation is the first Fourier mode up to
        # a factor 2
        ev = ms.EisensteinEvaluator(2.0, 30)
        z = UHPoint(0.2, 10.0)
        got = abs(ev.value_truncated(z, 5.0))
        first = abs(ev.mode_amplitudes(z.y)[0] * math.cos(2 * math.pi * z.x))
        assert 0.5 < got / first < 2.0

    def test_exponential_decay(self):
        ev = ms.EisensteinEvaluator(1.0, 30)
        vals = [abs(ev.value_truncated(UHPoint(0.2, y), 3.0)) for y in (4.0, 5.0, 6.0)]
        assert vals[1] < vals[0] * math.exp(-2 * math.pi * 0.9)
        assert vals[2] < vals[1] * math.exp(-2 * math.pi * 0.9)


class TestMaassSelberg:
    @pytest.mark.parametrize("r", [1.0, 2.0, 5.0])
    @pytest.mark.parametrize("Y", [3.0, 5.0])
    def test_residual(self, r, Y):
        rep = ms.maass_selberg_check(r, Y)
        assert abs(rep.residual) < 1e-3

    def test_mode_refinement_stability(self):
        a = ms.maass_selberg_check(2.0, 3.0, n_modes=20)
        b = ms.maass_selberg_check(2.0, 3.0, n_modes=40)
        assert abs(b.residual - a.residual) <= 0.1 * max(abs(a.residual), 1e-9)

    def test_logY_derivative_sanity(self):
        # d(lhs)/d(log Y) = 2k + d/dlogY[sin(2r log Y - w)/r]; the
        # oscillatory derivative has amplitude 2k, the term itself is
        # bounded by k/|r|
        r, k = 2.0, 1
        ys = [3.0, 3.6, 4.3, 5.2, 6.0]
        reps = [ms.maass_selberg_check(r, Y) for Y in ys]
        for rep in reps:
            assert abs(rep.rhs_terms["oscillatory"]) <= k / abs(r) + 1e-9
        vals = [rep.lhs for rep in reps]
        for (y1, v1), (y2, v2) in zip(zip(ys, vals), zip(ys[1:], vals[1:])):
            slope = (v2 - v1) / (math.log(y2) - math.log(y1))
            assert abs(slope - 2.0 * k) <= 2.0 * k + 0.7

    def test_rejects_low_Y(self):
        with pytest.raises(ValueError):
            ms.maass_selberg_check(1.0, 0.5)


class TestCounting:
    def test_below_first_eigenvalue(self):
        t = ms.load_eigenvalue_table()
        assert ms.count_discrete(SpectralInterval(0.5, 1.0), t) == 0

    def test_first_eigenvalue_interval(self):
        t = ms.load_eigenvalue_table()
        assert ms.count_discrete(SpectralInterval(0.25 + 81.0, 0.25 + 100.0), t) == 1

    def test_additivity(self):
        t = ms.load_eigenvalue_table()
        a = ms.count_discrete(SpectralInterval(80.0, 150.0), t)
        b = ms.count_discrete(SpectralInterval(150.0 + 1e-9, 400.0), t)
        c = ms.count_discrete(SpectralInterval(80.0, 400.0), t)
        assert a + b == c

    def test_continuous_mass_degenerate(self):
        m, err = ms.continuous_mass(SpectralInterval(0.7, 0.7))
        assert m == pytest.approx(0.0, abs=1e-12)

    def test_continuous_mass_additive(self):
        m1, _ = ms.continuous_mass(SpectralInterval(0.5, 0.8))
        m2, _ = ms.continuous_mass(SpectralInterval(0.8, 1.1))
        m3, _ = ms.continuous_mass(SpectralInterval(0.5, 1.1))
        assert m1 + m2 == pytest.approx(m3, abs=1e-9)

    def test_continuous_mass_refinement(self):
        a, _ = ms.continuous_mass(SpectralInterval(0.5, 1.0), tol=1e-8)
        b, _ = ms.continuous_mass(SpectralInterval(0.5, 1.0), tol=1e-12)
        assert a == pytest.approx(b, abs=1e-6)

    def test_interval_touching_bottom_rejected(self):
        with pytest.raises(ValueError):
            ms.continuous_mass(SpectralInterval(0.2500001, 1.0))

    def test_mass_matches_phase_variation(self):
        # M = -(1/2pi) [arg phi]_alpha^beta with a continuously tracked branch
        iv = SpectralInterval(0.5, 1.0)
        m, _ = ms.continuous_mass(iv)
        rs = np.linspace(iv.alpha, iv.beta, 4001)
        phases = np.unwrap([cmath.phase(ms.scattering_det(float(r))) for r in rs])
        assert m == pytest.approx(-(phases[-1] - phases[0]) / (2 * math.pi), abs=1e-6)
