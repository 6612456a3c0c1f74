"""Exact upper-half-plane primitives.

Points, isometries, hyperbolic distance, ball volumes, polar coordinates,
geodesic midpoint frames and the ball-intersection geometry used by the
wave-kernel estimates.  Everything here is pure and stateless.

Conventions
-----------
The model is H = {x + iy : y > 0} with metric (dx^2 + dy^2)/y^2 and volume
dmu = dx dy / y^2.  Isometries are real 2x2 matrices of determinant one,
identified up to a global sign, acting by fractional linear maps.  Angles
live in [0, 2*pi); the direction "straight up" is pi/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

#: determinant tolerance for isometries
DET_TOL = 1e-12


def _norm_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:  # fmod rounding at the branch cut resolves toward 0
        t = 0.0
    return t


@dataclass(frozen=True)
class UHPoint:
    """Point x + iy of the upper half-plane (y > 0)."""

    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0.0:
            raise ValueError(f"upper half-plane point needs y > 0, got y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "UHPoint":
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class TangentPoint:
    """Unit tangent vector: base point plus direction angle in [0, 2*pi)."""

    base: UHPoint
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _norm_angle(self.theta))


@dataclass(frozen=True)
class PolarCoords:
    """Geodesic polar coordinates (r, theta) about an origin point."""

    r: float
    theta: float
    origin: UHPoint

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError("polar radius must be >= 0")
        object.__setattr__(self, "theta", _norm_angle(self.theta))


class MoebiusMap:
    """Orientation-preserving isometry of H, a determinant-one 2x2 matrix.

    Maps are identified up to global sign; composition renormalizes the
    determinant to fight drift in long products.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: float, b: float, c: float, d: float, *, _skip_check: bool = False):
        if not _skip_check:
            det = a * d - b * c
            if abs(det - 1.0) > 1e-9:
                if det <= 0.0:
                    raise ValueError(f"matrix must have positive determinant, got {det}")
                s = 1.0 / math.sqrt(det)
                a, b, c, d = a * s, b * s, c * s, d * s
        self.a = a
        self.b = b
        self.c = c
        self.d = d

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0, _skip_check=True)

    @classmethod
    def translation(cls, x: float) -> "MoebiusMap":
        """z -> z + x."""
        return cls(1.0, float(x), 0.0, 1.0, _skip_check=True)

    @classmethod
    def scaling(cls, y: float) -> "MoebiusMap":
        """z -> y*z for y > 0."""
        if y <= 0.0:
            raise ValueError("scaling factor must be positive")
        s = math.sqrt(y)
        return cls(s, 0.0, 0.0, 1.0 / s, _skip_check=True)

    @classmethod
    def rotation_about_i(cls, phi: float) -> "MoebiusMap":
        """Elliptic map fixing i; rotates the tangent plane at i by 2*phi."""
        return cls(math.cos(phi), math.sin(phi), -math.sin(phi), math.cos(phi), _skip_check=True)

    # -- algebra -------------------------------------------------------
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def normalized(self) -> "MoebiusMap":
        s = 1.0 / math.sqrt(self.det())
        return MoebiusMap(self.a * s, self.b * s, self.c * s, self.d * s, _skip_check=True)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        m = MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            _skip_check=True,
        )
        return m.normalized()

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a, _skip_check=True)

    def trace(self) -> float:
        return self.a + self.d

    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def is_identity(self, tol: float = 1e-9) -> bool:
        a, b, c, d = self.a, self.b, self.c, self.d
        if a < 0 or (a == 0 and b < 0):
            a, b, c, d = -a, -b, -c, -d
        return abs(a - 1) < tol and abs(b) < tol and abs(c) < tol and abs(d - 1) < tol

    def same_as(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Equality in PSL(2,R) (up to global sign)."""
        return (self.inverse() @ other).is_identity(tol)

    # -- action --------------------------------------------------------
    def apply_complex(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def __call__(self, z: UHPoint) -> UHPoint:
        return UHPoint.from_complex(self.apply_complex(z.z))

    def derivative_arg(self, z: complex) -> float:
        """arg of the complex derivative 1/(cz+d)^2 at z."""
        return -2.0 * _phase(self.c * z + self.d)

    def apply_tangent(self, p: TangentPoint) -> TangentPoint:
        w = self.apply_complex(p.base.z)
        return TangentPoint(UHPoint.from_complex(w), p.theta + self.derivative_arg(p.base.z))

    def __repr__(self):
        return f"MoebiusMap({self.a:.12g}, {self.b:.12g}, {self.c:.12g}, {self.d:.12g})"


def _phase(w: complex) -> float:
    return math.atan2(w.imag, w.real)


# ---------------------------------------------------------------------
# distance, ball volumes, ball intersections
# ---------------------------------------------------------------------

def dist(z: UHPoint, w: UHPoint) -> float:
    """Hyperbolic distance: cosh d = 1 + |z-w|^2 / (2 Im z Im w)."""
    dx = z.x - w.x
    dy = z.y - w.y
    q = (dx * dx + dy * dy) / (2.0 * z.y * w.y)
    # acosh(1+q) written via log1p for small q to keep full relative accuracy
    return math.log1p(q + math.sqrt(q * (q + 2.0)))


def ball_volume(r: float) -> float:
    """Area of a hyperbolic disc of radius r: 4*pi*sinh(r/2)^2."""
    if r < 0.0:
        raise ValueError("radius must be >= 0")
    s = math.sinh(0.5 * r)
    return 4.0 * math.pi * s * s


def ball_intersection_radius(t: float, r: float) -> float | None:
    """Radius of a ball containing B(z1,t) ∩ B(z2,t) with d(z1,z2) = r.

    Hyperbolic Pythagoras gives cosh(rho) = cosh(t)/cosh(r/2) for the
    circumscribed ball centered at the midpoint.  Returns ``None`` when the
    intersection is empty (r > 2t), which callers must treat as "skip",
    distinct from the tangency value 0.0 at r = 2t.
    """
    if r < 0.0 or t < 0.0:
        raise ValueError("radii must be >= 0")
    if r > 2.0 * t:
        return None
    ratio = math.cosh(t) / math.cosh(0.5 * r)
    if ratio <= 1.0:
        return 0.0
    return math.acosh(ratio)


# ---------------------------------------------------------------------
# frames, polar coordinates, geodesic flow
# ---------------------------------------------------------------------

def frame_to_isometry(p: TangentPoint) -> MoebiusMap:
    """Isometry g with g(i, up) = p, where "up" is direction pi/2 at i."""
    g = MoebiusMap.translation(p.base.x) @ MoebiusMap.scaling(p.base.y)
    return g @ MoebiusMap.rotation_about_i(0.5 * (p.theta - 0.5 * math.pi))


def geodesic_flow(p: TangentPoint, t: float) -> TangentPoint:
    """Unit-speed geodesic flow for time t (negative t flows backwards)."""
    g = frame_to_isometry(p)
    # flowing (i, up) for time t lands at (e^t i, up)
    base = UHPoint(0.0, math.exp(t))
    return g.apply_tangent(TangentPoint(base, 0.5 * math.pi))


def direction(origin: UHPoint, z: UHPoint) -> float:
    """Initial direction at ``origin`` of the geodesic towards ``z``."""
    if origin.x == z.x and origin.y == z.y:
        raise ValueError("direction undefined for coincident points")
    # normalize so the origin sits at i: strip translation and scaling,
    # which have real positive derivative and hence do not turn angles
    w = complex((z.x - origin.x) / origin.y, z.y / origin.y)
    if abs(w.real) < 1e-300:
        return 0.5 * math.pi if w.imag > 1.0 else 1.5 * math.pi
    # geodesic through i and w is a semicircle centered at xi on the real axis
    xi = (abs(w) ** 2 - 1.0) / (2.0 * w.real)
    # tangent at i, perpendicular to the Euclidean radius i - xi
    tang = complex(0.0, 1.0) * (complex(0.0, 1.0) - xi)
    theta = _phase(tang)
    if (w.real > 0.0) != (math.cos(theta) > 0.0):
        theta += math.pi
    return _norm_angle(theta)


def to_polar(origin: UHPoint, z: UHPoint) -> PolarCoords:
    """Geodesic polar coordinates of z about origin; z != origin."""
    return PolarCoords(dist(origin, z), direction(origin, z), origin)


def from_polar(p: PolarCoords) -> UHPoint:
    if p.r == 0.0:
        return p.origin
    return geodesic_flow(TangentPoint(p.origin, p.theta), p.r).base


def midpoint_frame(z1: UHPoint, z2: UHPoint) -> tuple[UHPoint, float, float]:
    """Midpoint frame (m, theta, d) of the geodesic segment from z1 to z2.

    m is the geodesic midpoint, theta the tangent direction at m pointing
    from z1 towards z2, and d the full distance.
    """
    d = dist(z1, z2)
    if d == 0.0:
        raise ValueError("midpoint frame undefined for coincident points")
    th1 = direction(z1, z2)
    mid = geodesic_flow(TangentPoint(z1, th1), 0.5 * d)
    return mid.base, mid.theta, d
