"""Fuchsian groups given by generators.

Word/orbit enumeration with displacement pruning, lattice counting,
injectivity radius, systole, geodesic length spectrum, thin-part
measurement, cusp bookkeeping and fundamental-domain samplers for the two
shipped models (modular surface and a once-punctured torus).

Enumeration strategy: breadth-first search over the orbit of a base point
under left multiplication by the generators, pruning orbit points whose
displacement exceeds the target radius plus a margin.  Results are exact
for the shipped integer-matrix groups (deduplication uses exact integer
keys); for generic real-entry groups keys are quantized and a tolerance
post-pass removes straddle duplicates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import njit, NUMBA_ENABLED
from .hgeom import MoebiusMap, UHPoint, dist

_PRUNE_MARGIN = 0.5  # see module design notes: extensions may detour this far


class SearchBudgetError(RuntimeError):
    """Enumeration budget exceeded; carries the depth that was reached."""

    def __init__(self, message: str, reached: float):
        super().__init__(message)
        self.reached = reached


class UnsupportedModelError(ValueError):
    """Operation needs model features (sampler, reduction) not shipped."""


# ---------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class CuspData:
    """Cusp bookkeeping: scaling map conjugating the stabilizer to z+1."""

    scaling_map: MoebiusMap
    width: float


@dataclass
class ConjClassEntry:
    """One primitive conjugacy-class length with its multiplicity."""

    length: float
    primitive: bool
    multiplicity: int
    representative_word: str
    trace: float


@dataclass
class FuchsianGroup:
    name: str
    generators: list  # MoebiusMap; inverses are adjoined automatically
    genus: int
    cusp_count: int
    volume: float
    cusps: list = field(default_factory=list)
    orbifold: bool = False
    integral: bool = False
    domain: str | None = None  # "modular" | "torus-quad" | None
    extra_search_gens: list = field(default_factory=list)
    spectrum_base_points: list = field(default_factory=list)

    def __post_init__(self):
        if self.volume <= 0.0:
            raise ValueError("volume must be positive")
        if not self.orbifold:
            gb = 2.0 * math.pi * (2 * self.genus - 2 + self.cusp_count)
            if abs(self.volume - gb) > 1e-9:
                raise ValueError(f"volume {self.volume} inconsistent with Gauss-Bonnet {gb}")
        for g in self.generators:
            if abs(g.det() - 1.0) > 1e-12:
                raise ValueError("generators must have determinant 1")

    def search_generators(self) -> list:
        """Generators plus formal inverses (plus model-specific extras)."""
        gens = []
        for g in list(self.generators) + list(self.extra_search_gens):
            gens.append(g)
            gens.append(g.inverse())
        return gens

    def gen_array(self) -> np.ndarray:
        return np.array([g.entries() for g in self.search_generators()], dtype=np.float64)


# ---------------------------------------------------------------------
# shipped models
# ---------------------------------------------------------------------

def modular_group() -> FuchsianGroup:
    """PSL(2, Z) with generators S = inversion, T = unit translation.

    Orbifold quotient: genus 0, one cusp, volume pi/3 shipped as model
    data (Gauss-Bonnet for smooth surfaces does not apply).
    """
    S = MoebiusMap(0.0, -1.0, 1.0, 0.0)
    T = MoebiusMap.translation(1.0)
    cusp = CuspData(scaling_map=MoebiusMap.identity(), width=1.0)
    return FuchsianGroup(
        name="modular",
        generators=[S, T],
        genus=0,
        cusp_count=1,
        volume=math.pi / 3.0,
        cusps=[cusp],
        orbifold=True,
        integral=True,
        domain="modular",
        spectrum_base_points=[UHPoint(0.0, 1.0), UHPoint(0.0, 0.75)],
    )


def punctured_torus_group() -> FuchsianGroup:
    """Once-punctured torus: free group on a, b with parabolic commutator.

    a = (2 1; 1 1), b = (1 1; 1 2); [a, b] has trace -2.  Fundamental
    domain is the ideal quadrilateral |x| <= 1, |z -+ 1/2| >= 1/2, volume
    2*pi.  The commutator is adjoined to the search generators so that
    displacement pruning stays exact near the cusp.
    """
    a = MoebiusMap(2.0, 1.0, 1.0, 1.0)
    b = MoebiusMap(1.0, 1.0, 1.0, 2.0)
    comm = a @ b @ a.inverse() @ b.inverse()
    sigma = _cusp_scaling_from_parabolic(comm)
    cusp = CuspData(scaling_map=sigma, width=1.0)
    return FuchsianGroup(
        name="punctured-torus",
        generators=[a, b],
        genus=1,
        cusp_count=1,
        volume=2.0 * math.pi,
        cusps=[cusp],
        orbifold=False,
        integral=True,
        domain="torus-quad",
        extra_search_gens=[comm],
        spectrum_base_points=[UHPoint(0.0, 1.0), UHPoint(0.0, 0.6)],
    )


def _cusp_scaling_from_parabolic(p: MoebiusMap) -> MoebiusMap:
    """Scaling map sigma with sigma^-1 p^(+-1) sigma = unit translation.

    The stabilizer is generated equally by p or p^-1, so the sign of the
    conjugated translation is normalized away.
    """
    a, b, c, d = p.entries()
    if abs(abs(a + d) - 2.0) > 1e-9:
        raise ValueError("not parabolic")
    if a + d < 0.0:
        a, b, c, d = -a, -b, -c, -d
    if abs(c) < 1e-14:  # fixes infinity: z -> z + b
        return MoebiusMap.scaling(abs(b))
    x0 = (a - d) / (2.0 * c)  # boundary fixed point
    m0 = MoebiusMap(x0, -1.0, 1.0, 0.0)  # sends infinity -> x0
    q = m0.inverse() @ p @ m0
    qa, qw, _, _ = q.entries()
    w = qw / qa  # q = (1 w; 0 1) up to sign
    sigma = m0 @ MoebiusMap.scaling(abs(w))
    check = sigma.inverse() @ (p if w > 0 else p.inverse()) @ sigma
    assert abs(check.entries()[1] / check.entries()[0] - 1.0) < 1e-9
    return sigma


def load_model(path) -> FuchsianGroup:
    """Read a model definition file (JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    gens = [MoebiusMap(*map(float, g)) for g in doc["generators"]]
    integral = all(all(abs(e - round(e)) < 1e-12 for e in g.entries()) for g in gens)
    return FuchsianGroup(
        name=doc.get("name", "custom"),
        generators=gens,
        genus=int(doc["genus"]),
        cusp_count=int(doc["cuspCount"]),
        volume=float(doc["volume"]),
        orbifold=bool(doc.get("orbifold", False)),
        integral=integral,
        domain=doc.get("domain"),
        spectrum_base_points=[UHPoint(0.0, 1.0)],
    )


def dump_model(group: FuchsianGroup, path) -> None:
    doc = {
        "name": group.name,
        "generators": [list(g.entries()) for g in group.generators],
        "genus": group.genus,
        "cuspCount": group.cusp_count,
        "volume": group.volume,
        "orbifold": group.orbifold,
        "domain": group.domain,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------
# orbit BFS kernel
# ---------------------------------------------------------------------
#
# Left-multiplication BFS over orbit points gamma*w, pruned at
# max(R, d(z,w)) + margin.  Keys are sign-normalized matrices scaled and
# rounded to int64 quadruples -- exact for integer groups.

def _bfs_python(gens, zx, zy, wx, wy, R, margin, scale, cap):
    thresh = R + margin
    mats = np.empty((cap, 4), dtype=np.float64)
    disps = np.empty(cap, dtype=np.float64)
    parents = np.full(cap, -1, dtype=np.int64)
    genlab = np.full(cap, -1, dtype=np.int64)
    mats[0] = (1.0, 0.0, 0.0, 1.0)
    d0 = _disp_py(1.0, 0.0, 0.0, 1.0, zx, zy, wx, wy)
    disps[0] = d0
    thresh = max(thresh, d0 + margin)
    visited = {(int(round(scale)), 0, 0, int(round(scale)))}
    head, tail = 0, 1
    maxreach = 0.0
    while head < tail:
        a, b, c, d = mats[head]
        for gi in range(gens.shape[0]):
            ga, gb, gc, gd = gens[gi]
            na = ga * a + gb * c
            nb = ga * b + gb * d
            nc = gc * a + gd * c
            nd = gc * b + gd * d
            if na < -1e-9 or (abs(na) <= 1e-9 and (nb < -1e-9 or (abs(nb) <= 1e-9 and nc < -1e-9))):
                na, nb, nc, nd = -na, -nb, -nc, -nd
            key = (int(round(na * scale)), int(round(nb * scale)),
                   int(round(nc * scale)), int(round(nd * scale)))
            if key in visited:
                continue
            disp = _disp_py(na, nb, nc, nd, zx, zy, wx, wy)
            if disp > thresh:
                maxreach = max(maxreach, min(disp, thresh))
                continue
            visited.add(key)
            if tail >= cap:
                return mats[:tail], disps[:tail], parents[:tail], genlab[:tail], -1.0
            mats[tail] = (na, nb, nc, nd)
            disps[tail] = disp
            parents[tail] = head
            genlab[tail] = gi
            tail += 1
        head += 1
    return mats[:tail], disps[:tail], parents[:tail], genlab[:tail], 1.0


def _disp_py(a, b, c, d, zx, zy, wx, wy):
    den = c * wx + d
    num_r = a * wx + b
    px = (num_r * den + a * c * wy * wy) / (den * den + c * c * wy * wy)
    py = wy / (den * den + c * c * wy * wy)
    dx = px - zx
    dy = py - zy
    q = (dx * dx + dy * dy) / (2.0 * py * zy)
    return math.log1p(q + math.sqrt(q * (q + 2.0)))


if NUMBA_ENABLED:
    from numba import types
    from numba.typed import Dict as _NumbaDict

    _KEY_TYPE = types.UniTuple(types.int64, 4)
    _VAL_TYPE = types.int64

    @njit(cache=True)
    def _bfs_numba(gens, zx, zy, wx, wy, R, margin, scale, cap):  # pragma: no cover - jitted
        thresh = R + margin
        mats = np.empty((cap, 4), dtype=np.float64)
        disps = np.empty(cap, dtype=np.float64)
        parents = np.full(cap, -1, dtype=np.int64)
        genlab = np.full(cap, -1, dtype=np.int64)
        mats[0, 0] = 1.0
        mats[0, 1] = 0.0
        mats[0, 2] = 0.0
        mats[0, 3] = 1.0
        den = wx
        q0x = wx - zx
        q0y = wy - zy
        qq = (q0x * q0x + q0y * q0y) / (2.0 * wy * zy)
        d0 = math.log(1.0 + qq + math.sqrt(qq * (qq + 2.0)))
        disps[0] = d0
        if d0 + margin > thresh:
            thresh = d0 + margin
        visited = _NumbaDict.empty(_KEY_TYPE, _VAL_TYPE)
        visited[(int(round(scale)), 0, 0, int(round(scale)))] = 0
        head = 0
        tail = 1
        ok = 1.0
        while head < tail:
            a = mats[head, 0]
            b = mats[head, 1]
            c = mats[head, 2]
            d = mats[head, 3]
            for gi in range(gens.shape[0]):
                na = gens[gi, 0] * a + gens[gi, 1] * c
                nb = gens[gi, 0] * b + gens[gi, 1] * d
                nc = gens[gi, 2] * a + gens[gi, 3] * c
                nd = gens[gi, 2] * b + gens[gi, 3] * d
                if na < -1e-9 or (abs(na) <= 1e-9 and (nb < -1e-9 or (abs(nb) <= 1e-9 and nc < -1e-9))):
                    na = -na
                    nb = -nb
                    nc = -nc
                    nd = -nd
                key = (int(round(na * scale)), int(round(nb * scale)),
                       int(round(nc * scale)), int(round(nd * scale)))
                if key in visited:
                    continue
                den = nc * wx + nd
                numr = na * wx + nb
                db = den * den + nc * nc * wy * wy
                px = (numr * den + na * nc * wy * wy) / db
                py = wy / db
                dx = px - zx
                dy = py - zy
                q = (dx * dx + dy * dy) / (2.0 * py * zy)
                disp = math.log(1.0 + q + math.sqrt(q * (q + 2.0)))
                if disp > thresh:
                    continue
                visited[key] = tail
                if tail >= cap:
                    ok = -1.0
                    head = tail
                    break
                mats[tail, 0] = na
                mats[tail, 1] = nb
                mats[tail, 2] = nc
                mats[tail, 3] = nd
                disps[tail] = disp
                parents[tail] = head
                genlab[tail] = gi
                tail += 1
            head += 1
        return mats[:tail], disps[:tail], parents[:tail], genlab[:tail], ok

    _bfs = _bfs_numba
else:
    _bfs = _bfs_python


def reduce_with_map(group: FuchsianGroup, z: UHPoint) -> tuple[UHPoint, MoebiusMap]:
    """(w, u) with u in Gamma, u(z) = w, and w in the fundamental domain.

    Shipped for the modular model; other models return (z, id).
    """
    if group.domain != "modular":
        return z, MoebiusMap.identity()
    x, y = z.x, z.y
    ua, ub, uc, ud = 1.0, 0.0, 0.0, 1.0
    for _ in range(200):
        n = round(x)
        if n != 0.0:  # T^{-n} on the left
            x -= n
            ua, ub, uc, ud = ua - n * uc, ub - n * ud, uc, ud
        q = x * x + y * y
        if q >= 1.0 - 1e-15:
            break
        x, y = -x / q, y / q
        ua, ub, uc, ud = -uc, -ud, ua, ub  # S on the left
    return UHPoint(x, y), MoebiusMap(ua, ub, uc, ud, _skip_check=True)


def _orbit_search(group: FuchsianGroup, z: UHPoint, w: UHPoint, R: float,
                  *, margin: float = _PRUNE_MARGIN, cap: int = 4_000_000):
    # Fold the base points into the fundamental domain first: the pruned
    # search is exact from there (verified against unpruned enumeration),
    # and equivariance of the results is then automatic.  Found elements
    # are conjugated back to displacers at the original points.
    z_red, uz = reduce_with_map(group, z)
    w_red, uw = (z_red, uz) if (w.x == z.x and w.y == z.y) else reduce_with_map(group, w)
    gens = group.gen_array()
    scale = 1.0 if group.integral else float(1 << 26)
    mats, disps, parents, genlab, ok = _bfs(
        gens, z_red.x, z_red.y, w_red.x, w_red.y, float(R), float(margin), scale, cap)
    if ok < 0:
        raise SearchBudgetError(
            f"orbit enumeration exceeded {cap} elements at radius {R}",
            reached=float(np.max(disps)))
    if not group.integral:
        mats, disps, parents, genlab = _tolerance_dedup(mats, disps, parents, genlab)
    if not (uz.is_identity() and uw.is_identity()):
        # gamma = uz^{-1} delta uw so that d(z, gamma w) = d(z_red, delta w_red)
        zi = uz.inverse()
        A = np.array(zi.entries()).reshape(2, 2)
        B = np.array(uw.entries()).reshape(2, 2)
        M = mats.reshape(-1, 2, 2)
        mats = np.ascontiguousarray((A @ M @ B).reshape(-1, 4))
    return mats, disps, parents, genlab


def _tolerance_dedup(mats, disps, parents, genlab, tol=1e-9):
    order = np.lexsort((mats[:, 3], mats[:, 2], mats[:, 1], mats[:, 0]))
    keep = np.ones(len(order), dtype=bool)
    for i in range(1, len(order)):
        if np.max(np.abs(mats[order[i]] - mats[order[i - 1]])) < tol:
            keep[order[i]] = False
    sel = np.sort(order[keep])
    return mats[sel], disps[sel], parents[sel], genlab[sel]


def _word_from_parents(idx: int, parents, genlab, group: FuchsianGroup) -> str:
    n_base = len(group.generators) + len(group.extra_search_gens)
    if group.name == "modular":
        base_names = ["S", "T"]
    else:
        base_names = [chr(ord("a") + i) for i in range(n_base)]
    labels = []
    for nm in base_names:
        labels.extend([nm, nm + "'"])
    names = []
    while idx > 0 and genlab[idx] >= 0:
        names.append(labels[int(genlab[idx])])
        idx = int(parents[idx])
    return ".".join(reversed(names))


# ---------------------------------------------------------------------
# public enumeration operations
# ---------------------------------------------------------------------

def enumerate_displacers(group: FuchsianGroup, z: UHPoint, R: float,
                         *, margin: float = _PRUNE_MARGIN, cap: int = 4_000_000,
                         with_words: bool = False):
    """All gamma != id (up to sign) with d(z, gamma z) <= R, sorted by displacement.

    Returns a list of (MoebiusMap, displacement) or, with ``with_words``,
    (MoebiusMap, displacement, word).
    """
    if R < 0.0:
        raise ValueError("R must be >= 0")
    mats, disps, parents, genlab = _orbit_search(group, z, z, R, margin=margin, cap=cap)
    sel = np.where((disps <= R + 1e-12) & (np.arange(len(disps)) > 0))[0]
    sel = sel[np.argsort(disps[sel], kind="stable")]
    out = []
    for i in sel:
        m = MoebiusMap(*mats[i], _skip_check=True)
        if with_words:
            out.append((m, float(disps[i]), _word_from_parents(int(i), parents, genlab, group)))
        else:
            out.append((m, float(disps[i])))
    return out


def lattice_count(group: FuchsianGroup, z: UHPoint, w: UHPoint, R: float,
                  *, margin: float = _PRUNE_MARGIN, cap: int = 4_000_000) -> int:
    """N_Gamma(R; z, w) = #{gamma (up to sign) : d(z, gamma w) <= R}."""
    if R < 0.0:
        raise ValueError("R must be >= 0")
    mats, disps, _, _ = _orbit_search(group, z, w, R, margin=margin, cap=cap)
    return int(np.count_nonzero(disps <= R + 1e-12))


def lattice_count_bound(R: float, inj: float) -> float:
    """Packing bound (cosh(R + inj) - 1)/(cosh(inj) - 1) on the orbit count."""
    return (math.cosh(R + inj) - 1.0) / (math.cosh(inj) - 1.0)


@dataclass(frozen=True)
class InjectivityResult:
    value: float
    exact: bool  # False: lower bound only (budget-limited)


def injectivity_radius_at(group: FuchsianGroup, z: UHPoint, *, r_start: float = 1.0,
                          r_max: float = 24.0, cap: int = 4_000_000) -> InjectivityResult:
    """Half the minimal nonzero displacement of z."""
    R = r_start
    while True:
        try:
            found = enumerate_displacers(group, z, R, cap=cap)
        except SearchBudgetError:
            return InjectivityResult(value=0.5 * R, exact=False)
        if found:
            return InjectivityResult(value=0.5 * found[0][1], exact=True)
        if R >= r_max:
            return InjectivityResult(value=0.5 * R, exact=False)
        R = min(2.0 * R, r_max)


# ---------------------------------------------------------------------
# systole by plain word search
# ---------------------------------------------------------------------

def systole(group: FuchsianGroup, depth: int, *, cap: int = 2_000_000) -> float:
    """Shortest hyperbolic translation length found by word search to ``depth``.

    Scans all reduced generator words up to the given length (breadth
    first, deduplicated) and minimizes 2*arccosh(|tr|/2) over |tr| > 2.
    Raises :class:`SearchBudgetError` when no hyperbolic word exists in
    the budget.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    gens = [MoebiusMap(*g) for g in group.gen_array()]
    scale = 1.0 if group.integral else float(1 << 26)

    def key(m: MoebiusMap):
        a, b, c, d = m.entries()
        if a < -1e-9 or (abs(a) <= 1e-9 and (b < -1e-9 or (abs(b) <= 1e-9 and c < -1e-9))):
            a, b, c, d = -a, -b, -c, -d
        return (round(a * scale), round(b * scale), round(c * scale), round(d * scale))

    frontier = [MoebiusMap.identity()]
    seen = {key(frontier[0])}
    best = math.inf
    for _ in range(depth):
        nxt = []
        for m in frontier:
            for g in gens:
                w = g @ m
                k = key(w)
                if k in seen:
                    continue
                seen.add(k)
                if len(seen) > cap:
                    raise SearchBudgetError("word search budget exceeded", reached=best)
                tr = abs(w.trace())
                if tr > 2.0 + 1e-12:
                    best = min(best, 2.0 * math.acosh(0.5 * tr))
                nxt.append(w)
        frontier = nxt
    if not math.isfinite(best):
        raise SearchBudgetError("no hyperbolic element found within depth budget", reached=float(depth))
    return best


# ---------------------------------------------------------------------
# conjugacy classes / length spectrum
# ---------------------------------------------------------------------

def _form_of(mat: np.ndarray) -> tuple[int, int, int]:
    """Integer binary quadratic form (c, d-a, -b) attached to gamma."""
    a, b, c, d = (int(round(v)) for v in mat)
    if a + d < 0:
        a, b, c, d = -a, -b, -c, -d
    return (c, d - a, -b)


def _form_reduce_cycle(form: tuple[int, int, int]) -> tuple:
    """Canonical key: lexicographic minimum over the rho-reduction cycle.

    Standard reduction theory of indefinite integer forms; the cycle of
    reduced forms is a complete conjugacy invariant for the attached
    matrices, and distinguishes gamma from gamma^{-1}.
    """
    a, b, c = form
    D = b * b - 4 * a * c
    s = math.isqrt(D)
    if s * s == D:
        raise ValueError("form discriminant is a perfect square (not hyperbolic)")

    def reduced(a, b, c):
        # 0 < b <= s,  b + 2|a| > s,  2|a| - b <= s  (integer form of
        # |sqrt(D) - 2|a|| < b < sqrt(D) for non-square D)
        return 0 < b <= s and b + 2 * abs(a) > s and 2 * abs(a) - b <= s

    def rho(a, b, c):
        if c == 0:
            raise ValueError("degenerate form")
        m = 2 * abs(c)
        r0 = (-b) % m
        bp = r0 + m * ((s - r0) // m)  # unique b' = -b mod 2|c| in (s-2|c|, s]
        cp = (bp * bp - D) // (4 * c)
        return (c, bp, cp)

    # drive into the reduced cycle, then walk it
    f = (a, b, c)
    for _ in range(400):
        if reduced(*f):
            break
        f = rho(*f)
    start = f
    cycle = [f]
    for _ in range(100000):
        f = rho(*f)
        if f == start:
            break
        cycle.append(f)
    return tuple(min(cycle[i:] + cycle[:i] for i in range(len(cycle))))


def _integer_primitive_root(mat: np.ndarray) -> tuple[np.ndarray, int]:
    """(primitive matrix delta, n) with delta^n = mat, exact for integer mats."""
    a, b, c, d = (int(round(v)) for v in mat)
    if a + d < 0:
        a, b, c, d = -a, -b, -c, -d
    t = a + d
    ell = 2.0 * math.acosh(0.5 * t)
    best = (np.array([a, b, c, d], dtype=float), 1)
    n = 2
    while ell / n >= 2.0 * math.acosh(1.5) - 1e-9:
        s = 2.0 * math.cosh(0.5 * ell / n)
        s_int = round(s)
        if abs(s - s_int) < 1e-7 and s_int >= 3:
            # delta = (s/2) I + y (gamma - (t/2) I),  y = sqrt((s^2-4)/(t^2-4))
            y = math.sqrt((s_int * s_int - 4.0) / (t * t - 4.0))
            da = 0.5 * s_int + y * (a - 0.5 * t)
            db = y * b
            dc = y * c
            dd = 0.5 * s_int + y * (d - 0.5 * t)
            cand = np.array([da, db, dc, dd])
            if np.max(np.abs(cand - np.round(cand))) < 1e-6:
                cand = np.round(cand)
                if abs(cand[0] * cand[3] - cand[1] * cand[2] - 1.0) < 1e-9:
                    root, m = _integer_primitive_root(cand)
                    return root, n * m
        n += 1
    return best


def length_spectrum(group: FuchsianGroup, l_max: float, *, cap: int = 6_000_000,
                    margin: float = _PRUNE_MARGIN):
    """Primitive conjugacy classes with length <= l_max.

    Returns (entries, complete_flag).  Classes are collected from
    displacement enumeration around the model's spectrum base points with
    search radius l_max + 1.9 (every class has a conjugate whose axis
    passes within 0.9 of one base point; see the model notes), then
    deduplicated by the exact form-cycle invariant for integer groups or
    by trace bucketing plus conjugator search otherwise.
    """
    if l_max <= 0.0:
        raise ValueError("l_max must be positive")
    bases = group.spectrum_base_points or [UHPoint(0.0, 1.0)]
    R = l_max + 1.9
    complete = group.name == "modular"
    tr_max = 2.0 * math.cosh(0.5 * l_max)
    found: dict = {}
    words: dict = {}
    for z in bases:
        try:
            mats, disps, parents, genlab = _orbit_search(group, z, z, R, margin=margin, cap=cap)
        except SearchBudgetError:
            complete = False
            continue
        traces = np.abs(mats[:, 0] + mats[:, 3])
        sel = np.where((traces > 2.0 + 1e-9) & (traces <= tr_max + 1e-9))[0]
        for i in sel:
            mat = mats[i].copy()
            if mat[0] + mat[3] < 0:
                mat = -mat
            if group.integral:
                key = ("form",) + _form_reduce_cycle(_form_of(mat))
            else:
                key = ("trace", round(float(traces[i]) / 1e-9))
            if key not in found:
                found[key] = mat
                words[key] = _word_from_parents(int(i), parents, genlab, group)
    if not group.integral:
        # conjugator search over short elements to split equal-trace classes
        # is not attempted for generic models here; classes merge by trace
        # and the result is flagged incomplete-dedup.
        complete = False
    entries: dict = {}
    for key, mat in found.items():
        root, n = (_integer_primitive_root(mat) if group.integral else (mat, 1))
        if n != 1:
            continue  # powers of shorter classes; the primitive root is found separately
        tr = abs(float(mat[0] + mat[3]))
        ell = 2.0 * math.acosh(0.5 * tr)
        bucket = round(ell / 1e-9)
        if bucket in entries:
            entries[bucket].multiplicity += 1
        else:
            entries[bucket] = ConjClassEntry(length=ell, primitive=True, multiplicity=1,
                                             representative_word=words[key], trace=tr)
    out = sorted(entries.values(), key=lambda e: e.length)
    return out, complete


# ---------------------------------------------------------------------
# fundamental domain samplers and membership
# ---------------------------------------------------------------------

class FundamentalDomainSampler:
    """Exact (inverse-CDF) sampler of the normalized hyperbolic area
    measure on a shipped fundamental domain."""

    def __init__(self, group: FuchsianGroup, seed=None):
        if group.domain not in ("modular", "torus-quad"):
            raise UnsupportedModelError(f"no sampler for model {group.name!r}")
        self.group = group
        self.domain = group.domain
        self.rng = np.random.default_rng(seed)

    def description(self) -> str:
        if self.domain == "modular":
            return "|x| <= 1/2, |z| >= 1"
        return "|x| <= 1, |z - 1/2| >= 1/2, |z + 1/2| >= 1/2"

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        if self.domain == "modular":
            return (np.abs(x) <= 0.5 + 1e-12) & (x * x + y * y >= 1.0 - 1e-12)
        return ((np.abs(x) <= 1.0 + 1e-12)
                & ((x - 0.5) ** 2 + y * y >= 0.25 - 1e-12)
                & ((x + 0.5) ** 2 + y * y >= 0.25 - 1e-12))

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        u = self.rng.random(n)
        v = self.rng.random(n)
        if self.domain == "modular":
            # x-marginal density 1/sqrt(1-x^2), then y ~ 1/y^2 above the circle
            x = np.sin((math.pi / 6.0) * (2.0 * u - 1.0))
            ymin = np.sqrt(1.0 - x * x)
            y = ymin / (1.0 - v)
            return x, y
        # torus quadrilateral: sign * x in [0,1] with density 1/sqrt(x - x^2)
        sign = np.where(self.rng.random(n) < 0.5, -1.0, 1.0)
        xx = np.clip(np.sin(0.5 * math.pi * u) ** 2, 1e-12, 1.0 - 1e-12)
        ymin = np.sqrt(xx - xx * xx)
        y = ymin / (1.0 - v)
        return sign * xx, y


@njit(cache=True)
def _reduce_modular_loop(xs, ys):  # pragma: no cover - jitted
    for i in range(xs.shape[0]):
        x = xs[i]
        y = ys[i]
        for _ in range(200):
            x -= round(x)
            n = x * x + y * y
            if n >= 1.0 - 1e-15:
                break
            x = -x / n
            y = y / n
        xs[i] = x
        ys[i] = y


def _reduce_modular_numpy(xs, ys):
    for _ in range(200):
        xs -= np.round(xs)
        n = xs * xs + ys * ys
        inside = n < 1.0 - 1e-15
        if not np.any(inside):
            break
        xs[inside] = -xs[inside] / n[inside]
        ys[inside] = ys[inside] / n[inside]


reduce_modular_arrays = _reduce_modular_loop if NUMBA_ENABLED else _reduce_modular_numpy


def reduce_to_domain(group: FuchsianGroup, z: UHPoint) -> UHPoint:
    """Fold a point of H into the shipped fundamental domain."""
    if group.domain != "modular":
        raise UnsupportedModelError(f"point reduction shipped only for the modular model")
    xs = np.array([z.x])
    ys = np.array([z.y])
    reduce_modular_arrays(xs, ys)
    return UHPoint(float(xs[0]), float(ys[0]))


# ---------------------------------------------------------------------
# thin part
# ---------------------------------------------------------------------

def thin_part_fraction(group: FuchsianGroup, R: float, n_samples: int, *,
                       seed=0, cap: int = 400_000) -> tuple[float, float]:
    """Monte Carlo estimate of Vol((X)_{<=R}) / Vol(X) with standard error."""
    if R < 0.0:
        raise ValueError("R must be >= 0")
    if R == 0.0:
        return 0.0, 0.0
    sampler = FundamentalDomainSampler(group, seed=seed)
    xs, ys = sampler.sample(n_samples)
    hits = 0
    for x, y in zip(xs, ys):
        try:
            found = enumerate_displacers(group, UHPoint(float(x), float(y)), 2.0 * R, cap=cap)
        except SearchBudgetError:
            found = [None]  # crowded orbit ball: certainly thin
        if found:
            hits += 1
    p = hits / n_samples
    se = math.sqrt(max(p * (1.0 - p), 1.0 / n_samples) / n_samples)
    return p, se
