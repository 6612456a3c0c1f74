"""Weil-Petersson volume bookkeeping and the small-systole bound.

Volume data is ingested from a versioned text file (see
``data/wp_volumes.txt`` for the format and the normalization convention);
the shipped entries are validated against an exact independent recursion
in the test suite.  On top of the table sit the exponential boundary-
length inequality check, the systole-probability bound

    P(sys <= eps) <= int_0^eps t e^{2t} [ V_{g-1,k+2}
        + sum_{i,j} V_{i,j+1} V_{g-i,k-j+1} ] dt / V_{g,k},

and its epsilon-scaling diagnostics (the bound is O(eps^2)).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from importlib import resources

import numpy as np

from ._quadrature import quad_err


class MissingVolumeError(KeyError):
    def __init__(self, pairs):
        super().__init__(f"volume table misses entries for {sorted(pairs)}")
        self.pairs = sorted(pairs)


@dataclass
class VolumeTable:
    """Map (g, n) -> scalar V_{g,n} plus optional polynomial coefficients.

    Polynomial entries are coefficients in s = sum of squared boundary
    lengths (adequate for the shipped low cases); the constant term must
    agree with the scalar entry.
    """

    values: dict
    polys: dict = field(default_factory=dict)
    convention: str = ""

    def __post_init__(self):
        for key, v in self.values.items():
            if v <= 0.0:
                raise ValueError(f"volume V_{key} must be positive, got {v}")
        for key, coeffs in self.polys.items():
            if key in self.values and abs(coeffs[0] - self.values[key]) > 1e-9 * self.values[key]:
                raise ValueError(f"polynomial constant term of V_{key} disagrees with scalar")

    def value(self, g: int, n: int) -> float:
        try:
            return self.values[(g, n)]
        except KeyError:
            raise MissingVolumeError([(g, n)]) from None

    def poly_at(self, g: int, n: int, lengths) -> float:
        coeffs = self.polys.get((g, n))
        if coeffs is None:
            raise MissingVolumeError([(g, n)])
        s = float(sum(L * L for L in lengths))
        return float(sum(c * s ** k for k, c in enumerate(coeffs)))

    def require(self, pairs) -> None:
        missing = [p for p in pairs if p not in self.values]
        if missing:
            raise MissingVolumeError(missing)


def load_volume_table(source=None) -> VolumeTable:
    """Read a volume table file; None loads the shipped table."""
    if source is None:
        text = resources.files("specsurf.data").joinpath("wp_volumes.txt").read_text()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    values: dict = {}
    polys: dict = {}
    header = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("#"):
            header.append(raw.lstrip("# "))
            continue
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            g, n, kind = int(parts[0]), int(parts[1]), parts[2]
            nums = [float(p) for p in parts[3:]]
        except (ValueError, IndexError):
            raise ValueError(f"line {ln}: malformed volume record {raw!r}") from None
        if kind == "value":
            values[(g, n)] = nums[0]
        elif kind == "poly":
            polys[(g, n)] = nums
        else:
            raise ValueError(f"line {ln}: unknown record kind {kind!r}")
    return VolumeTable(values=values, polys=polys, convention="\n".join(header))


# ---------------------------------------------------------------------
# checks and bounds
# ---------------------------------------------------------------------

@dataclass
class ExpBoundVerdict:
    holds: bool
    worst_margin: float
    worst_point: tuple
    samples: list


def volume_exp_bound_check(table: VolumeTable, g: int, n: int, L_grid) -> ExpBoundVerdict:
    """Check V_{g,n}(L) <= e^{L_1+..+L_n} V_{g,n} on a grid of boundary lengths.

    ``L_grid`` is an iterable of length-n tuples.
    """
    v0 = table.value(g, n)
    worst = math.inf
    worst_pt = None
    samples = []
    for L in L_grid:
        L = tuple(float(x) for x in L)
        if len(L) != n:
            raise ValueError(f"boundary tuple {L} has wrong length for n={n}")
        lhs = table.poly_at(g, n, L)
        rhs = math.exp(sum(L)) * v0
        margin = rhs - lhs
        samples.append({"L": L, "lhs": lhs, "rhs": rhs, "margin": margin})
        if margin < worst:
            worst = margin
            worst_pt = L
    return ExpBoundVerdict(holds=worst >= 0.0, worst_margin=worst, worst_point=worst_pt,
                           samples=samples)


EPS_MAX = 2.0 * math.asinh(1.0)  # collar-theorem validity limit


@dataclass
class SystoleBoundReport:
    eps: float
    g: int
    k: int
    bound: float
    numerator_volumes: dict
    integrand_samples: list
    quad_error: float

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def _splitting_sum(table: VolumeTable, g: int, k: int) -> tuple[float, dict]:
    pairs = [(g - 1, k + 2)]
    terms = {}
    for i in range(1, g // 2 + (g % 2) + 1):  # ceil(g/2)
        for j in range(0, k // 2 + (k % 2) + 1):  # ceil(k/2)
            pairs.extend([(i, j + 1), (g - i, k - j + 1)])
    table.require([p for p in pairs if p[0] >= 0])
    total = table.value(g - 1, k + 2)
    terms[f"V_{g-1},{k+2}"] = total
    for i in range(1, g // 2 + (g % 2) + 1):
        for j in range(0, k // 2 + (k % 2) + 1):
            v = table.value(i, j + 1) * table.value(g - i, k - j + 1)
            terms[f"V_{i},{j+1}*V_{g-i},{k-j+1}"] = v
            total += v
    return total, terms


def systole_prob_bound(g: int, k: int, eps: float, table: VolumeTable | None = None) -> SystoleBoundReport:
    """Upper bound for the probability of systole <= eps at genus g, k cusps.

    Valid for eps below the collar limit 2*arcsinh(1); the boundary-length
    volumes are majorized by e^{2t} times the cusped volumes.
    """
    if not 0.0 <= eps < EPS_MAX:
        raise ValueError(f"eps must lie in [0, {EPS_MAX:.6f})")
    if table is None:
        table = load_volume_table()
    numerator, terms = _splitting_sum(table, g, k)
    denom = table.value(g, k)
    if eps == 0.0:
        return SystoleBoundReport(eps=0.0, g=g, k=k, bound=0.0, numerator_volumes=terms,
                                  integrand_samples=[], quad_error=0.0)
    val, err = quad_err(lambda t: t * math.exp(2.0 * t), 0.0, eps, tol=1e-13)
    ts = np.linspace(0.0, eps, 5)
    samples = [(float(t), float(t * math.exp(2 * t) * numerator / denom)) for t in ts]
    return SystoleBoundReport(eps=eps, g=g, k=k, bound=val * numerator / denom,
                              numerator_volumes=terms, integrand_samples=samples,
                              quad_error=err * numerator / denom)


def epsilon_scaling_curve(g: int, k: int, eps_list, table: VolumeTable | None = None):
    """(eps, bound) samples plus the fitted power-law exponent.

    Returns (curve, fitted_exponent); the exponent is None for a single
    sample.
    """
    eps_list = [float(e) for e in eps_list]
    curve = [(e, systole_prob_bound(g, k, e, table).bound) for e in eps_list]
    if len(curve) < 2:
        return curve, None
    le = np.log([c[0] for c in curve])
    lb = np.log([c[1] for c in curve])
    A = np.vstack([np.ones_like(le), le]).T
    coef, *_ = np.linalg.lstsq(A, lb, rcond=None)
    return curve, float(coef[1])


def mz_ratio_check(table: VolumeTable, g: int, k: int) -> float:
    """The documented table ratio V_{g-1,k+2} / V_{g,k}.

    The Mirzakhani-Zograf estimate bounds this by 1 - C (k-2)/(2g-4+k)
    for large g with an inexplicit constant; this helper only exposes the
    ratio so ingested tables can be eyeballed against it.
    """
    return table.value(g - 1, k + 2) / table.value(g, k)
