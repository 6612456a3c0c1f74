"""Wave-propagation dynamics and the quantum mean absolute deviation.

The ball-averaging operator P_t u(z) = e^{-t/2} int_{B(z,t)} u dmu, the
time-averaged pair kernel

    K_T(z, w) = (1/T) int_0^T e^{-t} int_{B(z,t) cap B(w,t)} a dmu dt,

its Hilbert-Schmidt norm estimate over the fundamental domain, the
mean-zero reduction of observables, the Eisenstein-only quantum mean
absolute deviation, an empirical ergodic-decay measurement, and the
pair-to-frame change-of-variable identity check.

Observables are parametrized (indicator of the compact core X(Y), a
smooth hyperbolic-disc bump, a constant, or a mean-zero reduction of
those); all surface integrals unfold to the modular fundamental domain
with orbit enumeration where group sums enter.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from ._backend import njit, NUMBA_ENABLED
from ._quadrature import gl_points, panel_points, quad_err
from .hgeom import (UHPoint, TangentPoint, dist, midpoint_frame,
                    ball_intersection_radius, geodesic_flow)
from .fuchsian import (FuchsianGroup, modular_group, FundamentalDomainSampler,
                       _orbit_search, reduce_modular_arrays, UnsupportedModelError)
from .modsurf import (EisensteinEvaluator, _neg_phi_log_deriv, count_discrete,
                      load_eigenvalue_table, continuous_mass)
from .transforms import SpectralInterval

# observable kinds
_KIND_CORE = 0      # height * indicator of X(Y):  params (Y, height)
_KIND_BUMP = 1      # smooth bump: params (cx, cy, radius, height)
_KIND_CONST = 2     # constant: params (c,)
_KIND_REDUCED = 3   # base observable minus c * indicator of X(Y)


@dataclass
class Observable:
    """Parametrized observable on the modular surface.

    ``params`` is the flat kernel parameter vector [kind, p1..p6]; the
    evaluator folds inputs into the fundamental domain (observables are
    Gamma-invariant by construction).
    """

    params: np.ndarray
    support_height: float
    sup_norm: float
    group: FuchsianGroup = field(default_factory=modular_group)

    # -- constructors ---------------------------------------------------
    @classmethod
    def core_indicator(cls, Y: float, height: float = 1.0, group=None) -> "Observable":
        """height * 1_{X(Y)} (compact core up to cusp height Y)."""
        if Y < 1.0:
            raise ValueError("core indicator needs Y >= 1")
        p = np.array([_KIND_CORE, Y, height, 0, 0, 0, 0, 0], dtype=np.float64)
        return cls(p, support_height=Y, sup_norm=abs(height), group=group or modular_group())

    @classmethod
    def bump(cls, center: UHPoint, radius: float, height: float = 1.0, group=None) -> "Observable":
        """Smooth compactly supported bump of hyperbolic radius about a center.

        The support ball must embed in the surface (radius at most the
        injectivity radius at the center), otherwise the folded profile
        would self-overlap and the closed-form integral would lie.
        """
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        g = group or modular_group()
        from .fuchsian import injectivity_radius_at

        inj = injectivity_radius_at(g, center)
        if radius > inj.value + 1e-12:
            raise ValueError(
                f"bump radius {radius} exceeds the injectivity radius "
                f"{inj.value:.6f} at the center; the bump would overlap itself")
        p = np.array([_KIND_BUMP, center.x, center.y, radius, height, 0, 0, 0], dtype=np.float64)
        y_top = center.y * math.exp(radius)
        return cls(p, support_height=max(1.0, y_top), sup_norm=abs(height), group=g)

    @classmethod
    def constant(cls, c: float, group=None) -> "Observable":
        p = np.array([_KIND_CONST, c, 0, 0, 0, 0, 0, 0], dtype=np.float64)
        return cls(p, support_height=math.inf, sup_norm=abs(c), group=group or modular_group())

    # -- evaluation -----------------------------------------------------
    def values(self, xs, ys, *, reduce: bool = True) -> np.ndarray:
        xs = np.array(xs, dtype=np.float64, copy=True)
        ys = np.array(ys, dtype=np.float64, copy=True)
        if reduce:
            reduce_modular_arrays(xs, ys)
        out = np.empty_like(xs)
        _obs_many(self.params, xs, ys, out)
        return out

    def __call__(self, z: UHPoint) -> float:
        return float(self.values(np.array([z.x]), np.array([z.y]))[0])

    # -- integrals ------------------------------------------------------
    def integral(self) -> float:
        """int_X a dmu (exact for core/constant, radial quadrature for bumps)."""
        kind = int(self.params[0])
        vol = self.group.volume
        k = self.group.cusp_count
        if kind == _KIND_CORE:
            Y, height = self.params[1], self.params[2]
            return height * (vol - k / Y)
        if kind == _KIND_CONST:
            return self.params[1] * vol
        if kind == _KIND_BUMP:
            radius, height = self.params[3], self.params[4]
            val, _ = quad_err(lambda rr: _bump_profile(rr / radius) * math.sinh(rr), 0.0, radius)
            return 2.0 * math.pi * height * val
        if kind == _KIND_REDUCED:
            base = Observable(np.concatenate([self.params[1:6], [0, 0, 0]]),
                              self.support_height, self.sup_norm, self.group)
            Y, c = self.params[6], self.params[7]
            return base.integral() - c * (vol - k / Y)
        raise ValueError(f"unknown observable kind {kind}")

    def mean_value(self) -> float:
        return self.integral() / self.group.volume


def _bump_profile(s: float) -> float:
    if s >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - s * s))


@njit(cache=True)
def _obs_scalar(params, x, y):  # pragma: no cover - jitted
    kind = int(params[0])
    if kind == 0:
        return params[2] if y <= params[1] else 0.0
    if kind == 1:
        cx = params[1]
        cy = params[2]
        radius = params[3]
        dx = x - cx
        dy = y - cy
        q = (dx * dx + dy * dy) / (2.0 * y * cy)
        d = math.log(1.0 + q + math.sqrt(q * (q + 2.0)))
        s = d / radius
        if s >= 1.0:
            return 0.0
        return params[4] * math.exp(1.0 - 1.0 / (1.0 - s * s))
    if kind == 2:
        return params[1]
    # reduced: base observable in params[1:6], then (Y, c) in [6], [7]
    base = params[1:6]
    v = _obs_scalar(base, x, y)
    if y <= params[6]:
        v -= params[7]
    return v


@njit(cache=True)
def _obs_many(params, xs, ys, out):  # pragma: no cover - jitted
    for i in range(xs.shape[0]):
        out[i] = _obs_scalar(params, xs[i], ys[i])


@njit(cache=True)
def _hdist(ax, ay, bx, by):  # pragma: no cover - jitted
    dx = ax - bx
    dy = ay - by
    q = (dx * dx + dy * dy) / (2.0 * ay * by)
    return math.log(1.0 + q + math.sqrt(q * (q + 2.0)))


@njit(cache=True)
def _from_polar_scalar(mx, my, r, th):  # pragma: no cover - jitted
    # frame map T_x A_y R_phi applied to e^r i, phi = (th - pi/2)/2
    phi = 0.5 * (th - 0.5 * math.pi)
    e = math.exp(r)
    c = math.cos(phi)
    s = math.sin(phi)
    # (c * e i + s) / (-s e i + c)
    den = s * s * e * e + c * c
    qx = (s * c - c * e * e * s) / den
    qy = (c * e * c + s * e * s) / den
    return mx + my * qx, my * qy


@njit(cache=True)
def _reduce_scalar(x, y):  # pragma: no cover - jitted
    for _ in range(200):
        x -= round(x)
        n = x * x + y * y
        if n >= 1.0 - 1e-15:
            break
        x = -x / n
        y = y / n
    return x, y


@njit(cache=True)
def _ball_integral_kernel(zx, zy, t, params, rnodes, rweights, nth):  # pragma: no cover
    total = 0.0
    dth = 2.0 * math.pi / nth
    for i in range(rnodes.shape[0]):
        r = rnodes[i]
        wr = rweights[i] * math.sinh(r) * dth
        for j in range(nth):
            th = dth * j
            px, py = _from_polar_scalar(zx, zy, r, th)
            ax, ay = _reduce_scalar(px, py)
            total += wr * _obs_scalar(params, ax, ay)
    return total


@njit(cache=True)
def _lens_kernel(mx, my, zx, zy, wx, wy, T, params, rnodes, rweights, nth, weighted):  # pragma: no cover
    # integral over B(z,T) cap B(w,T) (polar about the midpoint) of
    #   a(x) * (e^{-max(dz,dw)} - e^{-T})/T     (weighted = 1, pair kernel)
    #   a(x)  and the raw area                  (weighted = 0)
    total = 0.0
    area = 0.0
    eT = math.exp(-T)
    dth = 2.0 * math.pi / nth
    for i in range(rnodes.shape[0]):
        r = rnodes[i]
        wr = rweights[i] * math.sinh(r) * dth
        for j in range(nth):
            th = dth * j
            px, py = _from_polar_scalar(mx, my, r, th)
            dz = _hdist(px, py, zx, zy)
            dw = _hdist(px, py, wx, wy)
            dmax = dz if dz > dw else dw
            if dmax > T:
                continue
            area += wr
            ax, ay = _reduce_scalar(px, py)
            v = _obs_scalar(params, ax, ay)
            if v != 0.0:
                if weighted == 1:
                    total += wr * v * (math.exp(-dmax) - eT)
                else:
                    total += wr * v
    return total, area


if not NUMBA_ENABLED:
    # the jitted helpers above run fine as plain python; only the grid
    # sizes make them slow.  numpy fallbacks for the two hot kernels:
    def _ball_integral_kernel(zx, zy, t, params, rnodes, rweights, nth):  # noqa: F811
        dth = 2.0 * math.pi / nth
        th = dth * np.arange(nth)
        R, TH = np.meshgrid(rnodes, th, indexing="ij")
        px, py = _from_polar_arrays(zx, zy, R.ravel(), TH.ravel())
        reduce_modular_arrays(px, py)
        vals = np.empty_like(px)
        _obs_many_np(params, px, py, vals)
        w = (rweights * np.sinh(rnodes))[:, None] * dth
        return float(np.sum(w * vals.reshape(R.shape)))

    def _lens_kernel(mx, my, zx, zy, wx, wy, T, params, rnodes, rweights, nth, weighted):  # noqa: F811
        dth = 2.0 * math.pi / nth
        th = dth * np.arange(nth)
        R, TH = np.meshgrid(rnodes, th, indexing="ij")
        px, py = _from_polar_arrays(mx, my, R.ravel(), TH.ravel())
        dz = _hdist_arrays(px, py, zx, zy)
        dw = _hdist_arrays(px, py, wx, wy)
        dmax = np.maximum(dz, dw)
        inside = dmax <= T
        w = ((rweights * np.sinh(rnodes))[:, None] * dth * np.ones(nth)).ravel()
        area = float(np.sum(w[inside]))
        rx, ry = px[inside].copy(), py[inside].copy()
        reduce_modular_arrays(rx, ry)
        vals = np.empty_like(rx)
        _obs_many_np(params, rx, ry, vals)
        if weighted == 1:
            total = float(np.sum(w[inside] * vals * (np.exp(-dmax[inside]) - math.exp(-T))))
        else:
            total = float(np.sum(w[inside] * vals))
        return total, area

    def _obs_many_np(params, xs, ys, out):
        for i in range(xs.shape[0]):
            out[i] = _obs_scalar(params, xs[i], ys[i])


def _from_polar_arrays(mx, my, r, th):
    phi = 0.5 * (th - 0.5 * math.pi)
    e = np.exp(r)
    c = np.cos(phi)
    s = np.sin(phi)
    den = s * s * e * e + c * c
    qx = (s * c - c * e * e * s) / den
    qy = (c * e * c + s * e * s) / den
    return mx + my * qx, my * qy


def _hdist_arrays(ax, ay, bx, by):
    q = ((ax - bx) ** 2 + (ay - by) ** 2) / (2.0 * ay * by)
    return np.log1p(q + np.sqrt(q * (q + 2.0)))


def _ball_grid(t: float):
    n_r = max(24, int(10 * t) + 8)
    nth = max(48, int(8.0 * math.sinh(min(t, 7.0))) + 16)
    rnodes, rweights = panel_points(0.0, t, max(2, n_r // 12), 12)
    return rnodes, rweights, nth


# ---------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------

def pt_apply(u: Observable, t: float, z: UHPoint) -> float:
    """P_t u(z) = e^{-t/2} int_{B(z,t)} u dmu (unfolded over the orbit)."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    rnodes, rweights, nth = _ball_grid(t)
    val = _ball_integral_kernel(z.x, z.y, t, u.params, rnodes, rweights, nth)
    return math.exp(-0.5 * t) * val


def pt_apply_function(f, t: float, z: UHPoint, *, pad_theta: int = 1) -> complex:
    """P_t applied to a generic Gamma-invariant callable f(xs, ys) -> values.

    Used by the spectral-action transfer tests (e.g. Eisenstein inputs).
    """
    rnodes, rweights, nth = _ball_grid(t)
    nth *= pad_theta
    dth = 2.0 * math.pi / nth
    th = dth * np.arange(nth)
    R, TH = np.meshgrid(rnodes, th, indexing="ij")
    px, py = _from_polar_arrays(z.x, z.y, R.ravel(), TH.ravel())
    reduce_modular_arrays(px, py)
    vals = np.asarray(f(px, py)).reshape(R.shape)
    w = (rweights * np.sinh(rnodes))[:, None] * dth
    return complex(np.exp(-0.5 * t) * np.sum(w * vals))


def kernel_kt(z: UHPoint, w: UHPoint, T: float, a: Observable) -> float:
    """K_T(z, w); identically zero when d(z, w) >= 2T, symmetric in (z, w)."""
    if T <= 0.0:
        raise ValueError("T must be positive")
    d = dist(z, w)
    if d >= 2.0 * T:
        return 0.0
    rho = ball_intersection_radius(T, d)
    if rho is None or rho == 0.0:
        return 0.0
    if d == 0.0:
        m, rmax = z, rho
    else:
        mz, _, _ = midpoint_frame(z, w)
        m, rmax = mz, rho
    rnodes, rweights, nth = _ball_grid(rmax)
    val, _ = _lens_kernel(m.x, m.y, z.x, z.y, w.x, w.y, T, a.params,
                          rnodes, rweights, nth, 1)
    return val / T


def kernel_kt_diag_constant(T: float) -> float:
    """Closed form of K_T(z, z) for a == 1: (1/T) int_0^T e^{-t} 4 pi sinh^2(t/2) dt."""
    return (2.0 * math.pi / T) * (0.5 * T + 0.25 * (1.0 - math.exp(-2.0 * T))
                                  - 1.0 + math.exp(-T))


@dataclass
class HSNormReport:
    estimate: float
    std_error: float
    n_pairs: int
    gamma_terms_mean: float

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def hs_norm_estimate(a: Observable, T: float, n_pairs: int = 200, *, seed=0,
                     cap: int = 2_000_000) -> HSNormReport:
    """Monte Carlo ||(1/T) int P_t a P_t dt||_HS^2 over F x F.

    Samples pairs from the normalized area measure and sums the invariant
    kernel over the finitely many orbit translates allowed by the 2T
    support cutoff.
    """
    group = a.group
    sampler = FundamentalDomainSampler(group, seed=seed)
    xs1, ys1 = sampler.sample(n_pairs)
    xs2, ys2 = sampler.sample(n_pairs)
    vol = group.volume
    vals = np.empty(n_pairs)
    nterms = 0
    for i in range(n_pairs):
        z = UHPoint(float(xs1[i]), float(ys1[i]))
        w = UHPoint(float(xs2[i]), float(ys2[i]))
        mats, disps, _, _ = _orbit_search(group, z, w, 2.0 * T, cap=cap)
        total = 0.0
        for j in range(mats.shape[0]):
            if disps[j] < 2.0 * T:
                gw = _apply_mat(mats[j], w)
                total += kernel_kt(z, gw, T, a)
                nterms += 1
        vals[i] = total * total
    est = vol * vol * float(np.mean(vals))
    se = vol * vol * float(np.std(vals, ddof=1) / math.sqrt(n_pairs))
    return HSNormReport(estimate=est, std_error=se, n_pairs=n_pairs,
                        gamma_terms_mean=nterms / n_pairs)


def _apply_mat(mat, z: UHPoint) -> UHPoint:
    a, b, c, d = mat
    den = complex(c * z.x + d, c * z.y)
    num = complex(a * z.x + b, a * z.y)
    w = num / den
    return UHPoint(w.real, w.imag)


def hs_bound_rhs(a: Observable, T: float, *, thin_fraction: float | None = None) -> float:
    """Geometric upper-bound shape ||a||_2^2/T + e^{4T} Vol((X)_{<2T}) ||a||_inf^2 / min(1, inj^2).

    The spectral-gap factor is not computable from first principles here;
    callers compare the MC estimate against this shape with a fitted
    constant.
    """
    group = a.group
    vol = group.volume
    norm2sq = abs(a.integral()) * a.sup_norm  # |int a| * sup <= crude ||a||_2^2 proxy
    thin = vol if thin_fraction is None else thin_fraction * vol
    inj_floor = 0.1
    return norm2sq / T + math.exp(4.0 * T) * thin * a.sup_norm ** 2 / min(1.0, inj_floor ** 2)


# ---------------------------------------------------------------------
# mean-zero reduction
# ---------------------------------------------------------------------

def mean_zero_reduce(a: Observable, Y: float) -> Observable:
    """b = a - mean(a) * chi with chi = Vol(X)/Vol(X(Y)) on the core X(Y).

    Requires Y at least the support height of a; then int b dmu = 0 and
    ||b||_inf <= 2 ||a||_inf.
    """
    if Y < a.support_height:
        raise ValueError(f"Y = {Y} below the observable support height {a.support_height}")
    if int(a.params[0]) == _KIND_REDUCED:
        raise ValueError("observable is already reduced")
    group = a.group
    vol = group.volume
    vol_core = vol - group.cusp_count / Y
    abar = a.integral() / vol
    c = abar * vol / vol_core
    params = np.concatenate([[_KIND_REDUCED], a.params[:5], [Y, c]])
    return Observable(params, support_height=Y, sup_norm=a.sup_norm + abs(c), group=group)


# ---------------------------------------------------------------------
# quantum mean absolute deviation
# ---------------------------------------------------------------------

@dataclass
class VarReport:
    total: float
    continuous: float
    discrete: list
    normalization: float
    n_discrete: int
    m_continuous: float
    integrand_samples: list
    budget: dict
    budget_total: float

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def _corner_rows(n_panels: int, n_nodes: int):
    """Rows covering F below height 1, via y = sin(tau).

    The row width 1/2 - sqrt(1 - y^2) has a square-root cusp at y = 1;
    the sine substitution makes the row-mass function smooth.
    """
    tnod, twts = panel_points(math.pi / 3.0, math.pi / 2.0, n_panels, n_nodes)
    return np.sin(tnod), twts * np.cos(tnod)


def _core_grids(Y: float, n_nodes: int = 20, n_bulk: int = 14):
    """Quadrature grid over F cap {y <= Y}: nodes, weights (dmu = dx dy/y^2)."""
    xs_all, ys_all, ws_all = [], [], []
    ynod, ywts = _corner_rows(6, n_nodes)
    for y, wy in zip(ynod, ywts):
        xc = math.sqrt(max(1.0 - y * y, 0.0))
        if xc >= 0.5:
            continue
        xnod, xwts = panel_points(xc, 0.5, 2, n_nodes)
        for sgn in (-1.0, 1.0):
            xs_all.append(sgn * xnod)
            ys_all.append(np.full_like(xnod, y))
            ws_all.append(xwts * wy / (y * y))
    ynod, ywts = panel_points(1.0, Y, n_bulk, n_nodes)
    for y, wy in zip(ynod, ywts):
        xnod, xwts = panel_points(-0.5, 0.5, 2, n_nodes)
        xs_all.append(xnod)
        ys_all.append(np.full_like(xnod, y))
        ws_all.append(xwts * wy / (y * y))
    return (np.concatenate(xs_all), np.concatenate(ys_all), np.concatenate(ws_all))


def eisenstein_matrix_element(a: Observable, r: float, *, n_modes: int = 40,
                              grids=None) -> float:
    """<E_r, a E_r> = int_F a |E(1/2+ir, .)|^2 dmu (2-D quadrature over supp a)."""
    Y = a.support_height
    if not math.isfinite(Y):
        raise ValueError("matrix elements need compactly supported observables")
    if grids is None:
        grids = _core_grids(Y)
    xs, ys, ws = grids
    ev = EisensteinEvaluator(r, n_modes)
    E = ev.value_many(xs, ys, reduce=False)
    avals = a.values(xs, ys, reduce=False)
    return float(np.sum(ws * avals * np.abs(E) ** 2))


def quantum_mean_abs_dev(a: Observable, interval: SpectralInterval, *,
                         mode: str = "eisenstein-only", eigenfunctions=None,
                         n_r: int = 12, n_modes: int = 40,
                         table=None) -> VarReport:
    """The normalized absolute-deviation functional over the interval.

    Continuous part: (1/4pi) int_{tau^{-1}(I)} |<E, aE> + (phi'/phi) abar| dr,
    normalized by N + M.  Discrete terms need user-supplied eigenfunction
    data (mode="full"); the default mode uses the Eisenstein part only.
    """
    if mode not in ("eisenstein-only", "full"):
        raise ValueError("mode must be 'eisenstein-only' or 'full'")
    if mode == "full" and eigenfunctions is None:
        raise ValueError(
            "full mode needs eigenfunction data: pass eigenfunctions=[(r_j, psi_j), ...] "
            "with psi_j a vectorized (xs, ys) -> values callable normalized in L2(X); "
            "this artifact does not compute Maass forms")
    group = a.group
    if group.name != "modular":
        raise UnsupportedModelError("variance pipeline ships for the modular surface")
    abar = a.mean_value()
    grids = _core_grids(a.support_height)

    def integrand(r: float) -> float:
        me = eisenstein_matrix_element(a, r, n_modes=n_modes, grids=grids)
        return abs(me - _neg_phi_log_deriv(r) * abar)

    # (1/4pi) over the two-sided tau^{-1}(I) = (1/2pi) one-sided (even integrand)
    alpha, beta = interval.alpha, interval.beta
    rnod, rwts = panel_points(alpha, beta, n_r, 8)
    fvals = np.array([integrand(float(r)) for r in rnod])
    continuous_raw = float(np.sum(rwts * fvals)) / (2.0 * math.pi)
    rnod2, rwts2 = panel_points(alpha, beta, max(2, n_r // 2), 8)
    f2 = np.array([integrand(float(r)) for r in rnod2])
    coarse = float(np.sum(rwts2 * f2)) / (2.0 * math.pi)
    quad_refine_err = abs(continuous_raw - coarse)

    discrete_terms = []
    if mode == "full":
        for rj, psi in eigenfunctions:
            if interval.a - 1e-12 <= 0.25 + rj * rj <= interval.b + 1e-12:
                xs, ys, ws = grids
                vals = np.asarray(psi(xs, ys))
                me = float(np.sum(ws * a.values(xs, ys, reduce=False) * np.abs(vals) ** 2))
                discrete_terms.append(abs(me - abar))

    if table is None:
        table = load_eigenvalue_table()
    n_disc = count_discrete(interval, table)
    m_cont, m_err = continuous_mass(interval)
    norm = n_disc + m_cont
    # the normalization can be negative on intervals where the scattering
    # density is (its sign is not guaranteed pointwise); budgets are
    # reported in absolute value
    total = (sum(discrete_terms) + continuous_raw) / norm
    ev = EisensteinEvaluator(max(alpha, 0.1), n_modes)
    r_mid = float(0.5 * (alpha + beta))
    coarse_grids = _core_grids(a.support_height, n_nodes=12, n_bulk=8)
    grid_delta = abs(eisenstein_matrix_element(a, r_mid, n_modes=n_modes, grids=coarse_grids)
                     - eisenstein_matrix_element(a, r_mid, n_modes=n_modes, grids=grids))
    budget = {
        "r_quadrature_refinement": quad_refine_err / abs(norm),
        "eisenstein_truncation": ev.truncation_bound(math.sqrt(3.0) / 2.0)
        * 10.0 * a.sup_norm / abs(norm),
        "normalization_quadrature": m_err * abs(total) / abs(norm),
        "core_grid_refinement": grid_delta * (beta - alpha) / math.pi / abs(norm),
    }
    return VarReport(
        total=total,
        continuous=continuous_raw,
        discrete=discrete_terms,
        normalization=norm,
        n_discrete=n_disc,
        m_continuous=m_cont,
        integrand_samples=[(float(r), float(v)) for r, v in zip(rnod[::4], fvals[::4])],
        budget=budget,
        budget_total=float(sum(budget.values())),
    )


def variance_integrand_ms_form(a: Observable, r: float, *, n_modes: int = 40) -> float:
    """The |<E,aE> + (phi'/phi) abar| integrand rebuilt from the
    Maass-Selberg closed form, for a = height * 1_{X(Y)} only."""
    if int(a.params[0]) != _KIND_CORE:
        raise ValueError("closed-form integrand only for core indicators")
    from .modsurf import maass_selberg_check

    Y, height = float(a.params[1]), float(a.params[2])
    rep = maass_selberg_check(r, Y, n_modes=n_modes)
    abar = a.mean_value()
    return abs(height * rep.rhs - _neg_phi_log_deriv(r) * abar)


# ---------------------------------------------------------------------
# ergodic decay measurement
# ---------------------------------------------------------------------

@dataclass
class ErgodicDecayReport:
    t_values: list
    set_measures: list
    deviations: list
    fitted_exponent: float
    fit_residual: float
    n_samples: int
    separation: float

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def ergodic_decay(a: Observable, t_list, n_samples: int = 300, *, separation: float = 1.0,
                  seed=0) -> ErgodicDecayReport:
    """L2 decay of ball-intersection averages of a mean-zero observable.

    For each t, averages a over B(z1,t) cap B(z2,t) where z1, z2 are the
    +-separation/2 geodesic-flow endpoints of a Liouville-random tangent
    vector; reports the L2 norm of the averages against the set measure
    and the fitted power-law exponent.
    """
    if abs(a.integral()) > 1e-6 * (1.0 + a.sup_norm):
        raise ValueError("ergodic decay expects a mean-zero observable (apply mean_zero_reduce)")
    group = a.group
    sampler = FundamentalDomainSampler(group, seed=seed)
    xs, ys = sampler.sample(n_samples)
    rng = np.random.default_rng(seed if seed is None else seed + 1)
    thetas = rng.random(n_samples) * 2.0 * math.pi
    t_values = [float(t) for t in t_list]
    deviations = []
    measures = []
    for t in t_values:
        acc = 0.0
        meas = 0.0
        rho = ball_intersection_radius(t, separation)
        if rho is None:
            deviations.append(0.0)
            measures.append(0.0)
            continue
        rnodes, rweights, nth = _ball_grid(rho)
        for i in range(n_samples):
            p = TangentPoint(UHPoint(float(xs[i]), float(ys[i])), float(thetas[i]))
            z1 = geodesic_flow(p, -0.5 * separation).base
            z2 = geodesic_flow(p, +0.5 * separation).base
            m, _, _ = midpoint_frame(z1, z2) if separation > 0 else (p.base, 0.0, 0.0)
            val, area = _lens_kernel(m.x, m.y, z1.x, z1.y, z2.x, z2.y, t, a.params,
                                     rnodes, rweights, nth, 0)
            if area > 0:
                acc += (val / area) ** 2
                meas += area
        deviations.append(math.sqrt(acc / n_samples))
        measures.append(meas / n_samples)
    # power-law fit dev ~ C |A_t|^{-theta}
    lm = np.log(np.asarray(measures))
    ld = np.log(np.maximum(np.asarray(deviations), 1e-300))
    A = np.vstack([np.ones_like(lm), lm]).T
    coef, res, *_ = np.linalg.lstsq(A, ld, rcond=None)
    fitted = -float(coef[1])
    fit_res = float(np.sqrt(res[0] / len(lm))) if len(res) else 0.0
    return ErgodicDecayReport(t_values=t_values, set_measures=measures,
                              deviations=deviations, fitted_exponent=fitted,
                              fit_residual=fit_res, n_samples=n_samples,
                              separation=separation)


# ---------------------------------------------------------------------
# change of variable identity
# ---------------------------------------------------------------------

@njit(cache=True)
def _cov_lhs_kernel(zxs, zys, zws, rnodes, rweights, wvals, nth, params):  # pragma: no cover
    # sum over (r, psi, z1) of w(r) sinh(r) q(flow(z1, psi, r/2))
    total = 0.0
    dth = 2.0 * math.pi / nth
    for i in range(rnodes.shape[0]):
        wfac0 = rweights[i] * math.sinh(rnodes[i]) * wvals[i] * dth
        half = 0.5 * rnodes[i]
        for j in range(nth):
            th = dth * j
            acc = 0.0
            for kz in range(zxs.shape[0]):
                px, py = _from_polar_scalar(zxs[kz], zys[kz], half, th)
                ax, ay = _reduce_scalar(px, py)
                v = _obs_scalar(params, ax, ay)
                if v != 0.0:
                    acc += zws[kz] * v
            total += wfac0 * acc
    return total


if not NUMBA_ENABLED:
    def _cov_lhs_kernel(zxs, zys, zws, rnodes, rweights, wvals, nth, params):  # noqa: F811
        total = 0.0
        dth = 2.0 * math.pi / nth
        for i in range(rnodes.shape[0]):
            wfac0 = rweights[i] * math.sinh(rnodes[i]) * wvals[i] * dth
            half = 0.5 * rnodes[i]
            for j in range(nth):
                px, py = _from_polar_arrays(zxs, zys, np.full_like(zxs, half),
                                            np.full_like(zxs, dth * j))
                reduce_modular_arrays(px, py)
                vals = np.empty_like(px)
                _obs_many_np(params, px, py, vals)
                total += wfac0 * float(np.sum(zws * vals))
        return total


def _strip_grid(y_max: float, *, n_x_panels: int = 4, n_x_nodes: int = 8,
                log_panel: float = 0.1):
    """Fundamental-domain grid with log-spaced y panels (resolves O(0.1 y)
    features uniformly in the cusp direction)."""
    xs_all, ys_all, ws_all = [], [], []
    n_corner = max(4, int(0.55 / log_panel))
    cy, cw = _corner_rows(n_corner, 6)
    for y, wy in zip(cy, cw):
        xc = math.sqrt(max(1.0 - y * y, 0.0))
        if xc >= 0.5:
            continue
        xnod, xwts = panel_points(xc, 0.5, max(2, n_x_panels // 2), n_x_nodes)
        for sgn in (-1.0, 1.0):
            xs_all.append(sgn * xnod)
            ys_all.append(np.full_like(xnod, y))
            ws_all.append(xwts * wy / (y * y))
    n_ypanels = max(6, int(math.log(y_max) / log_panel) + 1)
    edges = np.exp(np.linspace(0.0, math.log(y_max), n_ypanels + 1))
    for a_, b_ in zip(edges[:-1], edges[1:]):
        ynod, ywts = gl_points(a_, b_, 6)
        for y, wy in zip(ynod, ywts):
            xnod, xwts = panel_points(-0.5, 0.5, n_x_panels, n_x_nodes)
            xs_all.append(xnod)
            ys_all.append(np.full_like(xnod, y))
            ws_all.append(xwts * wy / (y * y))
    return np.concatenate(xs_all), np.concatenate(ys_all), np.concatenate(ws_all)


def change_of_variable_check(q: Observable, w, T: float, *, n_th: int = 192,
                             n_r_panels: int = 8, grid_kw: dict | None = None) -> float:
    """Residual of the pair-integral vs midpoint-frame-coordinate identity.

    Tests, for f(z1, z2) = q(m(z1,z2)) w(d(z1,z2)) with q Gamma-invariant:
      int_F int_{d<2T} f dmu dmu  =  int_0^{2T} sinh(r) w(r) dr
                                     * 2 pi int_F q dmu.
    """
    group = q.group
    if group.domain != "modular":
        raise UnsupportedModelError("change-of-variable check ships for the modular model")
    if not math.isfinite(q.support_height):
        raise ValueError("check needs a compactly supported q")
    radial, _ = quad_err(lambda rr: math.sinh(rr) * w(rr), 0.0, 2.0 * T)
    rhs = radial * 2.0 * math.pi * q.integral()

    y_max = max(4.0, q.support_height * math.exp(T) * 1.1)
    zxs, zys, zws = _strip_grid(y_max, **(grid_kw or {}))
    rnod, rwts = panel_points(0.0, 2.0 * T, n_r_panels, 8)
    wvals = np.array([w(float(r)) for r in rnod])
    lhs = _cov_lhs_kernel(zxs, zys, zws, rnod, rwts, wvals, n_th, q.params)
    return abs(lhs - rhs)
