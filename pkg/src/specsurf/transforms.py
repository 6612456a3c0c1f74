"""Selberg/Harish-Chandra transform machinery and shipped test functions.

The transform triple (h, g, k) follows the conventions

    g(u) = (1/2pi) int e^{isu} h(s) ds          (Fourier partner)
    k(rho) = -(1/(sqrt(2) pi)) int_rho^inf g'(u) / sqrt(cosh u - cosh rho) du
    h(r) = int e^{-iru} g(u) du,   g(u) = sqrt(2) int_{|u|}^inf k(rho) sinh(rho)
                                              / sqrt(cosh rho - cosh u) drho

The square-root endpoint singularities of both Abel-type integrals are
removed by the substitution cosh u = cosh rho + v^2, which restores smooth
integrands for standard quadrature.

Shipped families: the ball multiplier of the wave operator, the heat
triple, and the two-sided smoothed window triple used for spectral
counting.  Numeric transform outputs are evaluable closures backed by an
internal adaptive-density interpolant; every constructor records an error
estimate in ``err_estimate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf

from ._quadrature import quad_err, panel_points, fourier_cos_integral, decay_cutoff

SQRT2 = math.sqrt(2.0)


class AdmissibilityError(ValueError):
    """Test function fails the decay/evenness requirements."""


@dataclass(frozen=True)
class SpectralInterval:
    """Eigenvalue interval [a, b] with 1/4 < a <= b and its r-endpoints.

    The eigenvalue parametrization is tau(r) = 1/4 + r^2, so
    a = 1/4 + alpha^2 and b = 1/4 + beta^2 with 0 <= alpha <= beta.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0.25 < self.a <= self.b):
            raise ValueError(f"need 1/4 < a <= b, got [{self.a}, {self.b}]")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.a - 0.25)

    @property
    def beta(self) -> float:
        return math.sqrt(self.b - 0.25)

    @classmethod
    def from_r(cls, alpha: float, beta: float) -> "SpectralInterval":
        if not 0.0 <= alpha <= beta:
            raise ValueError("need 0 <= alpha <= beta")
        return cls(0.25 + alpha * alpha, 0.25 + beta * beta)

    def width_r(self) -> float:
        return self.beta - self.alpha


@dataclass
class TestFunctionTriple:
    """A Selberg-transform triple (h, g, k) with admissibility metadata.

    ``h`` is an even function of the spectral parameter (complex-callable
    for the closed-form families), ``g`` its Fourier partner (see module
    docstring for the one shipped exception), ``k`` the radial kernel.
    ``g_prime`` is the derivative of ``g`` when available in closed form.
    """

    h: callable
    g: callable
    k: callable
    g_prime: callable | None = None
    admissible: bool = False
    provenance: str = "numeric"
    label: str = ""
    err_estimate: float = 0.0
    meta: dict = field(default_factory=dict)


class DenseFunction:
    """Evaluable closure backed by an adaptive-density cubic interpolant.

    Looks like a plain function of one variable (vectorized), carries the
    construction error estimate, and exposes an analytic-ish derivative.
    Outside the sampled support the function is zero by construction
    (all shipped uses decay below the construction tolerance there).
    """

    def __init__(self, grid: np.ndarray, values: np.ndarray, err_estimate: float, label: str = ""):
        # all shipped uses are even functions of the variable: clamp the
        # derivative to zero at the origin, free end on the right
        self._spline = CubicSpline(grid, values, bc_type=((1, 0.0), "not-a-knot"))
        self._deriv = self._spline.derivative()
        self.support = (float(grid[0]), float(grid[-1]))
        self.err_estimate = float(err_estimate)
        self.label = label

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uu = np.atleast_1d(np.abs(u))  # all shipped uses are even functions
        out = np.where(uu <= self.support[1], self._spline(np.clip(uu, *self.support)), 0.0)
        return float(out[0]) if scalar else out

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uu = np.atleast_1d(u)
        sign = np.sign(uu)
        a = np.abs(uu)
        out = np.where(a <= self.support[1], sign * self._deriv(np.clip(a, *self.support)), 0.0)
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------------
# h -> g
# ---------------------------------------------------------------------

def fourier_to_g_point(h, u: float, *, r_cutoff: float | None = None, tol: float = 1e-10) -> tuple[float, float]:
    """Pointwise g(u) = (1/pi) int_0^inf cos(su) h(s) ds with error."""
    if r_cutoff is None:
        r_cutoff = decay_cutoff(h, 30.0, tol=tol * 1e-3)
    val, err = fourier_cos_integral(h, r_cutoff, u, tol=tol)
    return val / math.pi, err / math.pi


def fourier_to_g(h, *, tol: float = 1e-10, grid_n: int = 3072) -> DenseFunction:
    """Fourier partner g of an even, decaying h, as an evaluable closure.

    Raises :class:`AdmissibilityError` when h does not decay enough to be
    integrable on the real axis.
    """
    r_cutoff = decay_cutoff(h, 30.0, tol=tol * 1e-3)
    if abs(h(r_cutoff)) > 1e-4 * max(abs(h(0.0)), 1e-30):
        raise AdmissibilityError("h does not decay; Fourier partner undefined")
    # locate the u-support of g by decay of the transform
    u_max = 4.0
    while u_max < 240.0:
        vals = [abs(fourier_to_g_point(h, u, r_cutoff=r_cutoff, tol=tol)[0]) for u in (u_max, 0.87 * u_max)]
        if max(vals) < tol * 1e-2:
            break
        u_max *= 1.5
    grid = np.linspace(0.0, u_max, grid_n)
    vals = np.empty(grid_n)
    errs = 0.0
    for i, u in enumerate(grid):
        vals[i], e = fourier_to_g_point(h, u, r_cutoff=r_cutoff, tol=tol)
        errs = max(errs, e)
    interp_err = (u_max / grid_n) ** 4 * float(np.max(np.abs(np.gradient(np.gradient(vals))))) * 2.0
    return DenseFunction(grid, vals, errs + interp_err, label="fourier partner")


# ---------------------------------------------------------------------
# g -> k
# ---------------------------------------------------------------------

def g_to_kernel_point(g_prime, rho: float, *, u_cutoff: float, tol: float = 1e-10) -> tuple[float, float]:
    """Pointwise inverse Abel step with the cosh u = cosh rho + v^2 substitution.

    k(rho) = -(sqrt2/pi) int_0^vmax g'(u(v)) / sinh(u(v)) dv.
    """
    ch = math.cosh(rho)
    if u_cutoff <= rho:
        return 0.0, 0.0
    vmax = math.sqrt(math.cosh(u_cutoff) - ch)

    def integrand(v):
        cu = ch + v * v
        u = math.acosh(cu)
        sh = math.sqrt(cu * cu - 1.0)
        if sh < 1e-14:  # rho = 0, v -> 0: g'(u)/sinh u -> g''(0)
            sh = max(sh, 1e-14)
        return g_prime(u) / sh

    val, err = quad_err(integrand, 0.0, vmax, tol=tol)
    return -SQRT2 / math.pi * val, err


def g_to_kernel(g, g_prime=None, *, tol: float = 1e-10, grid_n: int = 2048) -> DenseFunction:
    """Radial kernel k of a differentiable, decaying g."""
    if g_prime is None:
        if hasattr(g, "deriv"):
            g_prime = g.deriv
        else:
            raise ValueError("g_to_kernel needs g_prime or a g with .deriv")
    if hasattr(g, "support"):
        u_cut = g.support[1]
    else:
        u_cut = decay_cutoff(g, 10.0, tol=tol * 1e-3)
    grid = np.linspace(0.0, u_cut, grid_n)
    vals = np.empty(grid_n)
    errs = 0.0
    for i, rho in enumerate(grid):
        vals[i], e = g_to_kernel_point(g_prime, rho, u_cutoff=u_cut, tol=tol)
        errs = max(errs, e)
    interp_err = (u_cut / grid_n) ** 4 * float(np.max(np.abs(np.gradient(np.gradient(vals))))) * 2.0
    return DenseFunction(grid, vals, errs + interp_err, label="radial kernel")


# ---------------------------------------------------------------------
# k -> h  (forward transform)
# ---------------------------------------------------------------------

def kernel_to_g_point(k, u: float, *, rho_cutoff: float, tol: float = 1e-10) -> tuple[float, float]:
    """g(u) = 2*sqrt2 int_0^wmax k(arccosh(cosh u + w^2)) dw."""
    cu = math.cosh(u)
    chmax = math.cosh(rho_cutoff)
    if cu >= chmax:
        return 0.0, 0.0
    wmax = math.sqrt(chmax - cu)
    val, err = quad_err(lambda w: k(math.acosh(cu + w * w)), 0.0, wmax, tol=tol)
    return 2.0 * SQRT2 * val, err


class SpectralMultiplier:
    """h = S(k): evaluable closure with error estimate, even in r.

    Built from a radial kernel by the two smooth substituted integrals;
    the intermediate Fourier partner is cached as a dense interpolant.
    """

    def __init__(self, k, *, rho_cutoff: float | None = None, tol: float = 1e-10, grid_n: int = 2048):
        if rho_cutoff is None:
            if hasattr(k, "support"):
                rho_cutoff = k.support[1]
            else:
                rho_cutoff = decay_cutoff(k, 5.0, tol=tol * 1e-3)
        grid = np.linspace(0.0, rho_cutoff, grid_n)
        vals = np.empty(grid_n)
        errs = 0.0
        for i, u in enumerate(grid):
            vals[i], e = kernel_to_g_point(k, u, rho_cutoff=rho_cutoff, tol=tol)
            errs = max(errs, e)
        self.g = DenseFunction(grid, vals, errs, label="forward fourier partner")
        self._umax = rho_cutoff
        self._tol = tol
        self.err_estimate = errs + self.g.err_estimate

    def __call__(self, r: float) -> float:
        val, _ = fourier_cos_integral(self.g, self._umax, abs(r), tol=self._tol)
        return 2.0 * val

    def with_error(self, r: float) -> tuple[float, float]:
        val, err = fourier_cos_integral(self.g, self._umax, abs(r), tol=self._tol)
        return 2.0 * val, 2.0 * err + self.err_estimate


def selberg_forward(k, *, rho_cutoff: float | None = None, tol: float = 1e-10) -> SpectralMultiplier:
    """Forward Selberg transform of a bounded decaying radial kernel."""
    return SpectralMultiplier(k, rho_cutoff=rho_cutoff, tol=tol)


# ---------------------------------------------------------------------
# ball multiplier  S(k_t),  k_t(rho) = e^{-t/2} 1_{rho <= t}
# ---------------------------------------------------------------------

def ball_multiplier(t: float, r: float, *, tol: float = 1e-10) -> float:
    """S(k_t)(r) for the wave-operator ball kernel.

    The forward pair collapses in closed form to
    S(k_t)(r) = 4*sqrt2*e^{-t/2} int_0^t cos(ru) sqrt(cosh t - cosh u) du.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    cht = math.cosh(t)
    val, _ = fourier_cos_integral(lambda u: math.sqrt(max(cht - math.cosh(u), 0.0)), t, r, tol=tol)
    return 4.0 * SQRT2 * math.exp(-0.5 * t) * val


def ball_multiplier_grid(ts: np.ndarray, rs: np.ndarray, *, n_nodes: int = 64) -> np.ndarray:
    """S(k_t)(r) on a (t, r) tensor grid, vectorized over both axes.

    Uses the substitution u = t - v^2 which makes the integrand smooth:
    S = 8*sqrt2*e^{-t/2} int_0^sqrt(t) v^2 cos(r(t - v^2))
        * sqrt((cosh t - cosh(t - v^2))/v^2) dv.
    """
    ts = np.asarray(ts, dtype=float)
    rs = np.asarray(rs, dtype=float)
    out = np.empty((ts.size, rs.size))
    for i, t in enumerate(ts):
        if t <= 0.0:
            out[i] = 0.0
            continue
        # panels scale with the phase derivative 2 r sqrt(t)
        n_panels = max(2, int(0.4 * np.max(np.abs(rs)) * math.sqrt(t)) + 2)
        v, w = panel_points(0.0, math.sqrt(t), n_panels, n_nodes)
        u = t - v * v
        amp = np.sqrt(np.maximum(math.cosh(t) - np.cosh(u), 0.0))
        base = 2.0 * w * v * amp
        phases = np.cos(np.outer(rs, u))
        out[i] = 4.0 * SQRT2 * math.exp(-0.5 * t) * (phases @ base)
    return out


def spectral_action_average(T: float, r, *, n_t: int | None = None, with_error: bool = False):
    """(1/T) int_0^T |S(k_t)(r)|^2 dt, vectorized over r.

    The integrand is smooth and oscillates at frequency ~2r in t; composite
    Gauss-Legendre with panel count scaled accordingly.  The reported error
    is a refinement estimate (panel count doubled).
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    scalar = np.isscalar(r)

    def compute(n_panels: int) -> np.ndarray:
        t_nodes, t_w = panel_points(0.0, T, n_panels, 24)
        vals = ball_multiplier_grid(t_nodes, rs)  # (t, r)
        return (t_w[:, None] * vals * vals).sum(axis=0) / T

    if n_t is None:
        n_t = max(8, int(T * (1.0 + float(np.max(np.abs(rs))))))
    coarse = compute(n_t)
    fine = compute(2 * n_t)
    err = np.max(np.abs(fine - coarse))
    res = fine
    if scalar:
        res = float(res[0])
    if with_error:
        return res, float(err)
    return res


# ---------------------------------------------------------------------
# shipped closed-form families
# ---------------------------------------------------------------------

def _exp_any(z):
    """exp for scalars (real or complex) and arrays alike."""
    if isinstance(z, complex):
        import cmath

        return cmath.exp(z)
    if isinstance(z, np.ndarray):
        return np.exp(z)
    return math.exp(z)


def heat_triple(t: float, *, build_kernel: bool = True, tol: float = 1e-10) -> TestFunctionTriple:
    """Heat-flow triple: h(r) = e^{-t(1/4 + r^2)} with Gaussian partner."""
    if t <= 0.0:
        raise ValueError("t must be positive")

    def h(r):
        return _exp_any(-t * (0.25 + r * r) if not isinstance(r, np.ndarray)
                        else -t * (0.25 + r ** 2))

    norm = math.exp(-0.25 * t) / math.sqrt(4.0 * math.pi * t)

    def g(u):
        return norm * np.exp(-np.asarray(u) ** 2 / (4.0 * t))

    def g_prime(u):
        return -u / (2.0 * t) * norm * np.exp(-(u * u) / (4.0 * t))

    k = g_to_kernel(g, g_prime, tol=tol) if build_kernel else None
    triple = TestFunctionTriple(h=h, g=g, k=k, g_prime=g_prime, admissible=True,
                                provenance="closed-form", label=f"heat(t={t})",
                                err_estimate=(k.err_estimate if k is not None else 0.0))
    triple.meta["t"] = t
    return triple


def gaussian_h_triple(*, build_kernel: bool = True, tol: float = 1e-10) -> TestFunctionTriple:
    """Reference Gaussian multiplier h(r) = e^{-r^2}, g(u) = e^{-u^2/4}/(2 sqrt(pi))."""

    def h(r):
        return _exp_any(-(r * r) if not isinstance(r, np.ndarray) else -(r ** 2))

    norm = 1.0 / (2.0 * math.sqrt(math.pi))

    def g(u):
        return norm * np.exp(-np.asarray(u) ** 2 / 4.0)

    def g_prime(u):
        return -0.5 * u * norm * np.exp(-(u * u) / 4.0)

    k = g_to_kernel(g, g_prime, tol=tol) if build_kernel else None
    return TestFunctionTriple(h=h, g=g, k=k, g_prime=g_prime, admissible=True,
                              provenance="closed-form", label="gaussian",
                              err_estimate=(k.err_estimate if k is not None else 0.0))


def monk_window(interval: SpectralInterval, t: float, *, build_kernel: bool = False,
                tol: float = 1e-10) -> TestFunctionTriple:
    """Two-sided smoothed window triple (H_t, G_t, K_t) over the interval.

    H_t(r) = h_t(r) + h_t(-r) with h_t the Gaussian-mollified indicator of
    [alpha, beta] at sharpness t (erf closed form).  The stored G_t is
    normalized so that G_t(0) = 2(beta - alpha)/pi, i.e. twice the Fourier
    partner of H_t; the plain partner is what :func:`fourier_to_g`
    reproduces.  Requires t >= 1/10.
    """
    if t < 0.1:
        raise ValueError("window sharpness must satisfy t >= 1/10")
    alpha, beta = interval.alpha, interval.beta
    if beta - alpha < 1e-15:
        zero = lambda x: 0.0 * np.asarray(x, dtype=float)
        return TestFunctionTriple(h=zero, g=zero, k=zero, g_prime=zero, admissible=True,
                                  provenance="closed-form", label="window(degenerate)")

    def h_one(r):
        return 0.5 * (erf(t * (beta - r)) - erf(t * (alpha - r)))

    def H(r):
        if isinstance(r, np.ndarray):
            return h_one(r) + h_one(-r)
        return complex(h_one(complex(r)) + h_one(-complex(r))) if isinstance(r, complex) \
            else float(h_one(r) + h_one(-r))

    def G(u):
        u = np.asarray(u, dtype=float)
        core = np.where(np.abs(u) < 1e-8,
                        (beta - alpha) + (alpha ** 3 - beta ** 3) * u * u / 6.0,
                        (np.sin(beta * u) - np.sin(alpha * u)) / np.where(u == 0.0, 1.0, u))
        res = (2.0 / math.pi) * core * np.exp(-u * u / (4.0 * t * t))
        return float(res) if res.ndim == 0 else res

    def G_prime(u):
        uu = np.asarray(u, dtype=float)
        if np.any(np.abs(uu) < 1e-7):
            # odd function, ~ (alpha^3-beta^3)/3 * u near 0
            small = (2.0 / math.pi) * (alpha ** 3 - beta ** 3) / 3.0 * uu
            big = _g_prime_core(np.where(np.abs(uu) < 1e-7, 1.0, uu), alpha, beta, t)
            res = np.where(np.abs(uu) < 1e-7, small, big)
        else:
            res = _g_prime_core(uu, alpha, beta, t)
        return float(res) if res.ndim == 0 else res

    def _g_prime_core(u, a_, b_, t_):
        s = (np.sin(b_ * u) - np.sin(a_ * u)) / u
        sp = (b_ * np.cos(b_ * u) - a_ * np.cos(a_ * u)) / u - s / u
        return (2.0 / math.pi) * np.exp(-u * u / (4 * t_ * t_)) * (sp - u / (2 * t_ * t_) * s)

    k = g_to_kernel(G, G_prime, tol=tol) if build_kernel else None
    triple = TestFunctionTriple(h=H, g=G, k=k, g_prime=G_prime, admissible=True,
                                provenance="closed-form",
                                label=f"window([{interval.a},{interval.b}], t={t})")
    triple.meta.update(alpha=alpha, beta=beta, t=t, interval=interval)
    return triple


# ---------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------

def admissibility_check(triple: TestFunctionTriple, *, eps: float = 0.05) -> tuple[bool, dict]:
    """Evenness, polynomial decay on the real axis, finiteness at Im r = 1/2.

    Closed-form triples are probed at complex arguments; numeric-only
    triples come back inconclusive (flagged in the diagnostics).
    """
    h = triple.h
    diag: dict = {}
    try:
        probe = h(complex(0.3, 0.5))
    except Exception:
        diag["conclusive"] = False
        diag["reason"] = "h not evaluable at complex r"
        return False, diag
    diag["conclusive"] = True

    rs = np.array([0.5, 1.7, 3.3, 7.1, 13.0])
    even_err = max(abs(complex(h(float(r))) - complex(h(float(-r)))) for r in rs)
    diag["evenness_error"] = even_err

    # decay exponent fit: |h| ~ (1+r^2)^{-p} needs p >= 1 + eps
    r1, r2 = 25.0, 85.0
    h1, h2 = abs(complex(h(r1))), abs(complex(h(r2)))
    if h2 == 0.0:
        p = math.inf
    else:
        p = math.log(h1 / h2) / math.log((1 + r2 * r2) / (1 + r1 * r1))
    diag["decay_exponent"] = p

    strip_vals = [abs(complex(h(complex(x, 0.5 + eps)))) for x in (0.0, 2.0, 10.0, 40.0)]
    diag["strip_max"] = max(strip_vals)
    finite = all(math.isfinite(v) for v in strip_vals)
    strip_decays = strip_vals[-1] <= strip_vals[0] + 1e-12 or strip_vals[-1] < 1.0

    ok = even_err < 1e-9 and p >= 1.0 + eps and finite and strip_decays
    return ok, diag
