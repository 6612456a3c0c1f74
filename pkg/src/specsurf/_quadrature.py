"""Shared quadrature helpers.

Thin wrappers over scipy's adaptive integrator that always propagate an
error estimate, plus cached Gauss-Legendre panel rules for the vectorized
grid evaluations in the hot paths.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import quad


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(message)
        self.value = value
        self.error = error


def quad_err(f, a: float, b: float, *, tol: float = 1e-10, limit: int = 200,
             weight=None, wvar=None, strict: bool = False) -> tuple[float, float]:
    """Adaptive quadrature returning (value, error-estimate)."""
    kwargs = dict(epsabs=tol, epsrel=tol, limit=limit)
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
    with np.errstate(all="ignore"):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val, err = quad(f, a, b, **kwargs)
    if strict and err > max(tol * 100.0, 1e-8 * abs(val)):
        raise QuadratureBudgetError(
            f"quadrature error {err:.2e} above budget on [{a}, {b}]", val, err)
    return val, err


@lru_cache(maxsize=32)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_points(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = _gl_nodes(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * x, half * w


def panel_points(a: float, b: float, n_panels: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre grid over equal panels of [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    xs = []
    ws = []
    for i in range(n_panels):
        x, w = gl_points(edges[i], edges[i + 1], n_nodes)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def fourier_cos_integral(f, upper: float, omega: float, *, tol: float = 1e-10) -> tuple[float, float]:
    """integral_0^upper f(u) cos(omega u) du with error estimate."""
    if abs(omega) < 1e-14:
        return quad_err(f, 0.0, upper, tol=tol)
    return quad_err(f, 0.0, upper, tol=tol, weight="cos", wvar=omega)


def decay_cutoff(f, start: float, *, tol: float, step: float = 2.0, max_u: float = 400.0) -> float:
    """Smallest u >= start (scanned in steps) with |f| below tol past it."""
    u = start
    while u < max_u:
        if max(abs(f(u)), abs(f(u + 0.37 * step)), abs(f(u + 0.71 * step))) < tol:
            return u + step
        u += step
    return max_u
