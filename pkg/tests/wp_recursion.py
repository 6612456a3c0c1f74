"""Independent small-case Weil-Petersson volume recursion (exact, sympy).

Validation oracle for the shipped volume table: computes the volume
polynomials V_{g,n}(L_1..L_n) for small (g, n) by the boundary-length
recursion, in exact arithmetic.  The convention is pinned by the base
cases V_{0,3} = 1 and V_{1,1}(L) = (L^2 + 4 pi^2)/48 (the torus-with-
boundary case carries the half factor from its elliptic involution; the
consistency of this choice with the recursion is itself asserted by
test_wpbound.py through the (1,2) closed form).

Recursion, with H(x, t) = 1/(1+e^{(x+t)/2}) + 1/(1+e^{(x-t)/2}):

d/dL1 [L1 V_{g,n}(L)] =
    1/2 II x y H(x+y, L1) [ V_{g-1,n+1}(x, y, Lhat)
        + sum_{stable ordered splits} V_{g1,|I|+1}(x, L_I) V_{g2,|J|+1}(y, L_J) ] dx dy
  + sum_{j>=2} 1/2 I x [H(x, L1+L_j) + H(x, L1-L_j)] V_{g,n-1}(x, Lhat\j) dx

using the moment integrals
  F_{2k+1}(t) = I_0^inf x^{2k+1} H(x,t) dx
             = (2k+1)! sum_{i=0}^{k+1} zeta(2i) (2^{2i+1} - 4) t^{2k+2-2i}/(2k+2-2i)!
and  II x^{2a+1} y^{2b+1} f(x+y) = (2a+1)!(2b+1)!/(2a+2b+3)! * I s^{2a+2b+3} f(s) ds.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import sympy as sp

_PI = sp.pi


@lru_cache(maxsize=None)
def _zeta_even(i: int):
    return sp.zeta(2 * i) if i > 0 else sp.Rational(-1, 2)


@lru_cache(maxsize=None)
def F_poly(k: int):
    """F_{2k+1}(t) as a sympy polynomial in t."""
    t = sp.Symbol("t")
    total = 0
    for i in range(0, k + 2):
        total += (_zeta_even(i) * (2 ** (2 * i + 1) - 4)
                  * t ** (2 * k + 2 - 2 * i) / sp.factorial(2 * k + 2 - 2 * i))
    return sp.expand(sp.factorial(2 * k + 1) * total)


def _subs_F(expr_poly, x, t_value):
    """Integrate a polynomial in x (odd powers only) against H(x, t)."""
    poly = sp.Poly(sp.expand(expr_poly), x)
    total = 0
    for (deg,), coeff in poly.terms():
        assert deg % 2 == 1, "only odd x-powers may meet the H kernel"
        k = (deg - 1) // 2
        tt = sp.Symbol("t")
        total += coeff * F_poly(k).subs(tt, t_value)
    return sp.expand(total)


def _double_moment(expr_poly, x, y, t_sym):
    """II expr(x,y) H(x+y, t) dx dy for a polynomial with odd-odd powers."""
    poly = sp.Poly(sp.expand(expr_poly), x, y)
    total = 0
    tt = sp.Symbol("t")
    for (dx, dy), coeff in poly.terms():
        assert dx % 2 == 1 and dy % 2 == 1
        a = (dx - 1) // 2
        b = (dy - 1) // 2
        k = a + b + 1  # s-power 2a+2b+3 = 2k+1
        beta = sp.factorial(dx) * sp.factorial(dy) / sp.factorial(dx + dy + 1)
        total += coeff * beta * F_poly(k).subs(tt, t_sym)
    return sp.expand(total)


def _boundary_symbols(n: int):
    return sp.symbols(f"L1:{n + 1}")


@lru_cache(maxsize=None)
def volume_polynomial(g: int, n: int):
    """V_{g,n}(L_1..L_n) as a sympy expression (exact)."""
    if 2 * g - 2 + n <= 0:
        raise ValueError(f"({g},{n}) is not a stable surface type")
    L = _boundary_symbols(n)
    if (g, n) == (0, 3):
        return sp.Integer(1)
    if (g, n) == (1, 1):
        return sp.expand((L[0] ** 2 + 4 * _PI ** 2) / 48)
    x, y = sp.symbols("x y", positive=True)
    L1 = L[0]
    rest = L[1:]

    rhs = 0
    # connected A-term
    if (g >= 1 and 2 * (g - 1) - 2 + (n + 1) > 0) and not (g - 1 == 0 and n + 1 < 3):
        inner = volume_polynomial(g - 1, n + 1)
        Li = _boundary_symbols(n + 1)
        sub = {Li[0]: x, Li[1]: y}
        for out_idx, sym in enumerate(rest):
            sub[Li[out_idx + 2]] = sym
        integrand = x * y * inner.subs(sub, simultaneous=True)
        rhs += sp.Rational(1, 2) * _double_moment(integrand, x, y, L1)
    # disconnected A-terms: ordered stable splittings
    idxs = list(range(len(rest)))
    for g1 in range(0, g + 1):
        g2 = g - g1
        for rI in range(0, len(rest) + 1):
            for I in itertools.combinations(idxs, rI):
                J = tuple(i for i in idxs if i not in I)
                n1, n2 = len(I) + 1, len(J) + 1
                if 2 * g1 - 2 + n1 <= 0 or 2 * g2 - 2 + n2 <= 0:
                    continue
                V1 = volume_polynomial(g1, n1)
                V2 = volume_polynomial(g2, n2)
                s1 = _boundary_symbols(n1)
                s2 = _boundary_symbols(n2)
                e1 = V1.subs({s1[0]: x, **{s1[m + 1]: rest[I[m]] for m in range(len(I))}},
                             simultaneous=True)
                e2 = V2.subs({s2[0]: y, **{s2[m + 1]: rest[J[m]] for m in range(len(J))}},
                             simultaneous=True)
                rhs += sp.Rational(1, 2) * _double_moment(x * y * e1 * e2, x, y, L1)
    # B-terms
    for j, Lj in enumerate(rest):
        others = tuple(sym for m, sym in enumerate(rest) if m != j)
        V = volume_polynomial(g, n - 1)
        s = _boundary_symbols(n - 1)
        e = V.subs({s[0]: x, **{s[m + 1]: others[m] for m in range(len(others))}},
                   simultaneous=True)
        rhs += sp.Rational(1, 2) * (_subs_F(x * e, x, L1 + Lj) + _subs_F(x * e, x, L1 - Lj))

    LV = sp.integrate(rhs, (L1, 0, L1))
    return sp.expand(LV / L1)


def volume_value(g: int, n: int):
    """Exact V_{g,n}(0,..,0)."""
    V = volume_polynomial(g, n)
    L = _boundary_symbols(n)
    return sp.simplify(V.subs({s: 0 for s in L}))


if __name__ == "__main__":
    for g, n in [(0, 3), (1, 1), (0, 4), (1, 2), (0, 5), (1, 3), (2, 1)]:
        V0 = volume_value(g, n)
        print(f"V_{{{g},{n}}} = {V0} = {float(V0):.12g}")
    print("V_{1,1}(L) =", volume_polynomial(1, 1))
    print("V_{0,4}(L) =", volume_polynomial(0, 4))
    print("V_{1,2}(L) =", sp.factor(volume_polynomial(1, 2)))
