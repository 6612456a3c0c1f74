"""The modular surface as a fully computable spectral testbed.

Closed-form scattering determinant, Eisenstein series through the
divisor-sum Fourier expansion, cusp truncation, the Maass-Selberg
identity check, and the two spectral counting functions: the discrete
count N(X, I) and the continuous mass

    M(X, I) = (1/4pi) int_{tau^{-1}(I)} -phi'/phi(1/2 + ir) dr,

with tau(r) = 1/4 + r^2 and tau^{-1}(I) the two-sided preimage
[-beta, -alpha] u [alpha, beta]; evenness of the density reduces it to
(1/2pi) times the one-sided integral.

Everything is specialized to the single-cusp case (scalar scattering
matrix); formulas keep the cusp count k as a parameter where it enters.
"""
from __future__ import annotations

import math
import cmath
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ._backend import njit, NUMBA_ENABLED
from ._quadrature import quad_err, panel_points
from .hgeom import UHPoint
from .fuchsian import modular_group, reduce_modular_arrays
from .specfun import (log_gamma, digamma, zeta, zeta_log_deriv, PoleError,
                      ConditioningWarning, bessel_series_setup, bessel_k_im_order,
                      _k_ir_scalar)
from .transforms import SpectralInterval

R_MIN_DEFAULT = 0.05  # exclusion zone around r = 0 (Gamma(ir) pole)


# ---------------------------------------------------------------------
# eigenvalue reference data
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class EigenvalueTable:
    """Sorted positive spectral parameters r_j of the discrete spectrum."""

    r_values: tuple
    source: str

    def __len__(self):
        return len(self.r_values)

    def eigenvalues(self) -> np.ndarray:
        r = np.asarray(self.r_values)
        return 0.25 + r * r

    def head(self, n: int) -> "EigenvalueTable":
        return EigenvalueTable(self.r_values[:n], f"{self.source}[:{n}]")


class TableParseError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def load_eigenvalue_table(source=None) -> EigenvalueTable:
    """Read an eigenvalue table file: one r per line, ``#`` comments.

    ``source`` may be a path or None for the shipped modular-surface
    table.
    """
    if source is None:
        text = resources.files("specsurf.data").joinpath("maass_eigenvalues.txt").read_text()
        label = "shipped modular table"
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
        label = str(source)
    values = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            r = float(line)
        except ValueError:
            raise TableParseError(f"not a number: {line!r}", ln) from None
        if r <= 0.0:
            raise TableParseError(f"spectral parameter must be positive, got {r}", ln)
        if values and r < values[-1]:
            raise TableParseError(f"entries must be sorted ascending, {r} < {values[-1]}", ln)
        values.append(r)
    if not values:
        raise TableParseError("empty table", 0)
    return EigenvalueTable(tuple(values), label)


# ---------------------------------------------------------------------
# scattering determinant  phi(s) = sqrt(pi) Gamma(s-1/2) zeta(2s-1)
#                                   / (Gamma(s) zeta(2s))
# ---------------------------------------------------------------------

def scattering_det(r: float) -> complex:
    """phi(1/2 + ir) on the critical line; unit modulus.

    r = 0 hits the Gamma(ir) pole and is rejected; the limit value is -1.
    """
    if r == 0.0:
        raise PoleError("scattering determinant evaluation at r = 0 (Gamma(ir) pole)")
    s = complex(0.5, r)
    z1 = zeta(2.0j * r) if abs(r) > 0 else None
    z2 = zeta(complex(1.0, 2.0 * r))
    if abs(z2) < 1e-6:
        warnings.warn(f"|zeta(1+2ir)| = {abs(z2):.2e} at r={r}", ConditioningWarning)
    lg = log_gamma(s - 0.5) - log_gamma(s)
    return math.sqrt(math.pi) * cmath.exp(lg) * z1 / z2


def _neg_phi_log_deriv(r: float) -> float:
    """-phi'/phi(1/2+ir) as a real number (no r_min guard; internal)."""
    s = complex(0.5, r)
    val = (digamma(s - 0.5) - digamma(s)
           + 2.0 * zeta_log_deriv(2.0 * s - 1.0) - 2.0 * zeta_log_deriv(2.0 * s))
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"scattering log-derivative not real at r={r}: {val}")
    return -val.real


def scattering_log_deriv(r: float, *, r_min: float = R_MIN_DEFAULT) -> float:
    """-phi'/phi(1/2 + ir), the continuous spectral density (times 2pi)."""
    if abs(r) < r_min:
        raise PoleError(f"|r| = {abs(r)} below the r_min = {r_min} exclusion zone")
    return _neg_phi_log_deriv(abs(r))


@dataclass
class ScatteringFunction:
    """Bundled evaluators for phi and -phi'/phi on the critical line.

    ``b1`` is optional metadata (the smallest Dirichlet-series length in
    the scattering expansion); nothing here computes it.
    """

    det = staticmethod(scattering_det)
    log_deriv = staticmethod(scattering_log_deriv)
    b1: float | None = None


# ---------------------------------------------------------------------
# Eisenstein series (single cusp, divisor-sum Fourier expansion)
# ---------------------------------------------------------------------

if NUMBA_ENABLED:
    @njit(cache=True)
    def _eis_kernel(xs, ys, r, phi, coef, lam, c0, nmax, out):  # pragma: no cover - jitted
        n_modes = lam.shape[0]
        for i in range(xs.shape[0]):
            x = xs[i]
            y = ys[i]
            sy = math.sqrt(y)
            w = cmath.exp(complex(0.0, r * math.log(y)))
            acc = sy * (w + phi / w)
            for n in range(1, n_modes + 1):
                xk = 2.0 * math.pi * n * y
                kv = _k_ir_scalar(r, xk, c0, nmax)
                if kv == 0.0:
                    break
                term = coef * (sy * lam[n - 1] * kv * math.cos(2.0 * math.pi * n * x))
                acc += term
                if abs(term.real) + abs(term.imag) < 1e-18 * (abs(acc.real) + abs(acc.imag)) and xk > 2.0:
                    break
            out[i] = acc

    def _eis_eval(xs, ys, r, phi, coef, lam, c0, nmax):
        out = np.empty(xs.shape[0], dtype=np.complex128)
        _eis_kernel(xs, ys, r, phi, coef, lam, c0, nmax, out)
        return out
else:
    def _eis_eval(xs, ys, r, phi, coef, lam, c0, nmax):
        sy = np.sqrt(ys)
        w = np.exp(1j * r * np.log(ys))
        acc = sy * (w + phi / w)
        n_modes = lam.shape[0]
        ns = np.arange(1, n_modes + 1)
        xk = 2.0 * math.pi * np.outer(ys, ns)
        kv = bessel_k_im_order(r, xk.ravel()).reshape(xk.shape)
        modes = coef * sy[:, None] * lam[None, :] * kv * np.cos(2.0 * math.pi * np.outer(xs, ns))
        return acc + modes.sum(axis=1)


class EisensteinEvaluator:
    """E(z, 1/2 + ir) for the modular surface via the Fourier expansion.

    Immutable after construction: the divisor sums lambda_r(n), the
    scattering value and the Bessel series coefficients are cached once.
    The expansion converges on all of H but the mode cutoff is tuned for
    y >= sqrt(3)/2; points below are folded into the fundamental domain
    first (the series is Gamma-invariant).
    """

    def __init__(self, r: float, n_modes: int = 40, *, r_min: float = R_MIN_DEFAULT):
        if abs(r) < r_min:
            raise PoleError(f"|r| below r_min = {r_min}")
        if n_modes < 1:
            raise ValueError("need n_modes >= 1")
        self.r = float(abs(r))
        self.n_modes = int(n_modes)
        self.phi = scattering_det(self.r)
        s = complex(0.5, self.r)
        self.coef = 4.0 * cmath.exp(s * math.log(math.pi) - log_gamma(s)) / zeta(2.0 * s)
        ns = np.arange(1, n_modes + 1)
        lam = np.zeros(n_modes)
        for n in ns:
            total = 0.0
            for a in range(1, int(math.isqrt(n)) + 1):
                if n % a == 0:
                    d = n // a
                    if a == d:
                        total += 1.0
                    else:
                        total += 2.0 * math.cos(self.r * math.log(a / d))
            lam[n - 1] = total
        self.lam = lam
        self._c0, self._nmax = bessel_series_setup(self.r)
        self._group = modular_group()

    # -- evaluation ----------------------------------------------------
    def value_many(self, xs: np.ndarray, ys: np.ndarray, *, reduce: bool = True) -> np.ndarray:
        xs = np.array(xs, dtype=np.float64, copy=True)
        ys = np.array(ys, dtype=np.float64, copy=True)
        if reduce:
            reduce_modular_arrays(xs, ys)
        return _eis_eval(xs, ys, self.r, self.phi, self.coef, self.lam, self._c0, self._nmax)

    def value(self, z: UHPoint, *, reduce: bool = True) -> complex:
        return complex(self.value_many(np.array([z.x]), np.array([z.y]), reduce=reduce)[0])

    def constant_term(self, y: float) -> complex:
        w = cmath.exp(1j * self.r * math.log(y))
        return math.sqrt(y) * (w + self.phi / w)

    def mode_amplitudes(self, y: float | np.ndarray) -> np.ndarray:
        """a_n(y) for n = 1..n_modes (complex, cos(2 pi n x) coefficients)."""
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        ns = np.arange(1, self.n_modes + 1)
        xk = 2.0 * math.pi * np.outer(ys, ns)
        kv = bessel_k_im_order(self.r, xk.ravel()).reshape(xk.shape)
        amps = self.coef * np.sqrt(ys)[:, None] * self.lam[None, :] * kv
        return amps[0] if np.isscalar(y) else amps

    def truncation_bound(self, y_min: float) -> float:
        """Rigorous-ish bound on the dropped modes n > n_modes at height >= y_min.

        Uses |lambda_r(n)| <= n and K_{ir}(x) <= e^{-x}(sqrt(2pi/x) + 1).
        """
        q = math.exp(-2.0 * math.pi * y_min)
        N = self.n_modes
        geom = q ** (N + 1) * ((N + 1) - N * q) / (1.0 - q) ** 2
        kbound = math.sqrt(2.0 * math.pi / (2.0 * math.pi * (N + 1) * y_min)) + 1.0
        return abs(self.coef) * math.sqrt(y_min) * kbound * geom

    def value_modes(self, z: UHPoint) -> complex:
        """The nonconstant Fourier modes at z (no folding, no early stop)."""
        amps = self.mode_amplitudes(z.y)
        ns = np.arange(1, self.n_modes + 1)
        return complex(np.sum(amps * np.cos(2.0 * math.pi * ns * z.x)))

    def value_truncated(self, z: UHPoint, Y: float) -> complex:
        """Pi_Y^* E: the constant term is removed above cusp height Y.

        The input is interpreted on the surface through its fundamental
        domain representative.  Above the truncation height the value is
        assembled from the modes directly, dodging the cancellation of
        the O(sqrt(y)) constant term against e^{-2 pi y} remainders.
        """
        xs = np.array([z.x])
        ys = np.array([z.y])
        reduce_modular_arrays(xs, ys)
        zr = UHPoint(float(xs[0]), float(ys[0]))
        if zr.y > Y:
            return self.value_modes(zr)
        return complex(self.value_many(xs, ys, reduce=False)[0])


def eisenstein(z: UHPoint, r: float, n_modes: int = 40) -> complex:
    """Convenience wrapper: E(z, 1/2 + ir) with a fresh evaluator."""
    return EisensteinEvaluator(r, n_modes).value(z)


def truncated_eisenstein(z: UHPoint, r: float, Y: float, n_modes: int = 40) -> complex:
    return EisensteinEvaluator(r, n_modes).value_truncated(z, Y)


# ---------------------------------------------------------------------
# Maass-Selberg
# ---------------------------------------------------------------------

@dataclass
class MaassSelbergReport:
    lhs: float
    rhs: float
    residual: float
    rhs_terms: dict
    quad_error: float


def maass_selberg_check(r: float, Y: float, *, n_modes: int = 40,
                        n_panels: int = 24, n_nodes: int = 24) -> MaassSelbergReport:
    """Both sides of the truncated-Eisenstein L2 identity on the modular surface.

    lhs = int_{X(Y)} |E(1/2+ir, z)|^2 dmu  by quadrature over the
    truncated fundamental domain; rhs = 2k log Y - phi'/phi + the
    oscillatory trace term + the cuspidal remainder integral (k = 1).
    """
    if Y < 1.0:
        raise ValueError("need Y >= 1 (cusp zone above the fundamental domain floor)")
    ev = EisensteinEvaluator(r, n_modes)
    quad_err_total = 0.0

    # corner region sqrt(3)/2 <= y < 1 with |x| in [sqrt(1-y^2), 1/2];
    # the substitution y = sin(tau) removes the square-root cusp of the
    # row width at y = 1
    tnod, twts = panel_points(math.pi / 3.0, math.pi / 2.0, max(4, n_panels // 3), n_nodes)
    corner = 0.0
    for tau, wt in zip(tnod, twts):
        y = math.sin(tau)
        wy = wt * math.cos(tau)
        xc = math.sqrt(max(1.0 - y * y, 0.0))
        if xc >= 0.5:
            continue
        xnod, xwts = panel_points(xc, 0.5, 2, n_nodes)
        vals = ev.value_many(xnod, np.full_like(xnod, y), reduce=False)
        corner += wy / (y * y) * 2.0 * float(np.sum(xwts * np.abs(vals) ** 2))

    # bulk 1 <= y <= Y by mode orthogonality:
    # int_0^1 |E|^2 dx = |c0(y)|^2 + (1/2) sum |a_n(y)|^2
    n_bulk = max(6, int(2.0 * math.log(max(Y, 1.01))) + 2, n_panels // 2)
    ynod, ywts = panel_points(1.0, Y, n_bulk, n_nodes)
    amps = ev.mode_amplitudes(ynod)  # (ny, n_modes)
    c0 = np.sqrt(ynod) * (np.exp(1j * r * np.log(ynod)) + ev.phi * np.exp(-1j * r * np.log(ynod)))
    density = np.abs(c0) ** 2 + 0.5 * np.sum(np.abs(amps) ** 2, axis=1)
    bulk = float(np.sum(ywts * density / ynod ** 2))
    lhs = corner + bulk

    # rhs closed form + cuspidal remainder
    neg_logderiv = _neg_phi_log_deriv(r)
    phi = ev.phi
    osc = (Y ** (2j * r) * np.conj(phi) - Y ** (-2j * r) * phi) / (2j * r)
    if abs(osc.imag) > 1e-9 * max(1.0, abs(osc.real)):
        raise ArithmeticError("oscillatory trace term not real")
    # remainder: int_Y^inf (1/2) sum |a_n|^2 dy/y^2 (decays like e^{-4 pi Y})
    yr, wr = panel_points(Y, Y + 4.0, 6, n_nodes)
    ampr = ev.mode_amplitudes(yr)
    rem = float(np.sum(wr * 0.5 * np.sum(np.abs(ampr) ** 2, axis=1) / yr ** 2))
    rhs_terms = {
        "2k_logY": 2.0 * math.log(Y),
        "neg_phi_log_deriv": neg_logderiv,
        "oscillatory": float(osc.real),
        "cusp_remainder": rem,
    }
    rhs = sum(rhs_terms.values())
    trunc = ev.truncation_bound(math.sqrt(3.0) / 2.0) * (abs(ev.constant_term(1.0)) + 1.0) * Y
    quad_err_total += trunc
    return MaassSelbergReport(lhs=lhs, rhs=rhs, residual=lhs - rhs,
                              rhs_terms=rhs_terms, quad_error=quad_err_total)


# ---------------------------------------------------------------------
# spectral counting
# ---------------------------------------------------------------------

def count_discrete(interval: SpectralInterval, table: EigenvalueTable) -> int:
    """N(X, I): tabulated discrete eigenvalues inside [a, b], with multiplicity."""
    lam = table.eigenvalues()
    return int(np.count_nonzero((lam >= interval.a - 1e-12) & (lam <= interval.b + 1e-12)))


def continuous_mass(interval: SpectralInterval, *, tol: float = 1e-10,
                    r_min: float = R_MIN_DEFAULT) -> tuple[float, float]:
    """M(X, I) = (1/4pi) int_{tau^{-1}(I)} -phi'/phi dr, with error estimate.

    The interval must stay away from the continuous-spectrum bottom:
    alpha >= r_min.
    """
    if interval.alpha < r_min:
        raise ValueError(f"interval touches the spectrum bottom (alpha < {r_min})")
    val, err = quad_err(_neg_phi_log_deriv, interval.alpha, interval.beta, tol=tol)
    return val / (2.0 * math.pi), err / (2.0 * math.pi)
