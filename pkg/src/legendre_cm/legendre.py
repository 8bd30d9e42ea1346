"""The Legendre curve ``y^2 = x (x - 1) (x - lambda)``.

Points are numeric (mpmath) except in :func:`torsion_certificate`, which works
exactly in a quadratic field.  The analytic parametrisation sends
``z`` in ``C / (Z + tau Z)`` to

    x = (P(z) - e1) / (e3 - e1),    y = P'(z) / (2 s^3),

with ``s = i pi theta3(tau)^2``, a square root of ``e3 - e1`` that varies
holomorphically with ``tau`` (so no branch cut is ever crossed).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import flint
import mpmath as mp

from .errors import (
    BadInput,
    ConsistencyError,
    NearSingularSlope,
    NotOnCurve,
    PoleOfSection,
    PrecisionLoss,
)
from .modular import TauPoint, _tau_value, half_period_values, lambda_of_tau, theta_nulls, weierstrass_p
from .numerics import DEFAULT_PRECISION, Precision, as_precision, workprec

# ---------------------------------------------------------------------------
# points


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


@dataclass(frozen=True)
class AffinePoint:
    x: object
    y: object


LegendrePoint = Union[AffinePoint, _Infinity]


def is_infinity(P) -> bool:
    return P is INFINITY


def curve_residual(P: LegendrePoint, lam):
    """``|y^2 - x (x - 1) (x - lambda)|``; zero for the point at infinity."""
    if is_infinity(P):
        return mp.mpf(0)
    x, y = P.x, P.y
    return abs(y * y - x * (x - 1) * (x - lam))


def _scale(*vals):
    return max([mp.mpf(1)] + [abs(v) for v in vals])


def negate(P: LegendrePoint) -> LegendrePoint:
    if is_infinity(P):
        return P
    return AffinePoint(P.x, -P.y)


def add(P: LegendrePoint, Q: LegendrePoint, lam, prec: Precision = DEFAULT_PRECISION) -> LegendrePoint:
    """Chord-tangent addition on ``y^2 = x^3 + a2 x^2 + a4 x``, ``a2 = -(1 + lambda)``, ``a4 = lambda``.

    Coordinates agreeing to ``2^(-bits+32)`` count as equal.  If the
    x-coordinates agree only to ``2^(-bits/2)`` the slope is unreliable and
    NearSingularSlope is raised.
    """
    if is_infinity(P):
        return Q
    if is_infinity(Q):
        return P
    prec = as_precision(prec)
    with workprec(prec):
        lam = mp.mpmathify(lam)
        x1, y1, x2, y2 = (mp.mpmathify(v) for v in (P.x, P.y, Q.x, Q.y))
        a2 = -(1 + lam)
        scale = _scale(x1, x2, y1, y2)
        eq = prec.tol(32) * scale
        dx = abs(x1 - x2)
        if dx <= eq:
            if abs(y1 + y2) <= eq:
                return INFINITY
            if abs(y1 - y2) > eq:
                raise NearSingularSlope("equal x-coordinates but unrelated y-coordinates")
            m = (3 * x1 * x1 + 2 * a2 * x1 + lam) / (2 * y1)
        elif dx <= prec.tol(prec.bits // 2) * scale:
            raise NearSingularSlope(f"x-coordinates differ by only {mp.nstr(dx, 5)}; raise precision")
        else:
            m = (y2 - y1) / (x2 - x1)
        x3 = m * m - a2 - x1 - x2
        y3 = -(y1 + m * (x3 - x1))
        return AffinePoint(x3, y3)


def multiply(P: LegendrePoint, m: int, lam, prec: Precision = DEFAULT_PRECISION) -> LegendrePoint:
    if m < 0:
        return multiply(negate(P), -m, lam, prec)
    result: LegendrePoint = INFINITY
    addend = P
    while m:
        if m & 1:
            result = add(result, addend, lam, prec)
        m >>= 1
        if m:
            addend = add(addend, addend, lam, prec)
    return result


# ---------------------------------------------------------------------------
# lattice coordinates and the analytic parametrisation


def lattice_coordinates(z, tau):
    """Real ``(x, y)`` with ``z = x + y tau``."""
    t = _tau_value(tau)
    z = mp.mpmathify(z)
    y = z.imag / t.imag
    return z.real - y * t.real, y


@dataclass(frozen=True)
class LatticeCoordinate:
    """A point ``z = x + y tau`` of the fundamental parallelogram, ``x, y`` in ``[0, 1)``."""

    z: object
    tau: TauPoint

    @classmethod
    def reduce(cls, z, tau, prec: Precision = DEFAULT_PRECISION) -> "LatticeCoordinate":
        prec = as_precision(prec)
        tau = tau if isinstance(tau, TauPoint) else TauPoint(tau)
        with workprec(prec):
            x, y = lattice_coordinates(z, tau)
            eps = prec.tol(16)
            x, y = _unit_interval(x, eps), _unit_interval(y, eps)
            return cls(x + y * tau.value, tau)

    @property
    def coordinates(self):
        return lattice_coordinates(self.z, self.tau)


def _unit_interval(v, eps):
    v = v - mp.floor(v)
    if v >= 1 - eps:
        v = v - 1
    if abs(v) <= eps:
        v = mp.mpf(0)
    return v


def lattice_distance(z, tau):
    """Distance from ``z`` to the nearest point of ``Z + tau Z``."""
    t = _tau_value(tau)
    x, y = lattice_coordinates(z, t)
    return abs(mp.mpmathify(z) - mp.nint(x) - mp.nint(y) * t)


def lattice_reduce_centered(z, tau):
    """Representative of ``z`` modulo ``Z + tau Z`` with both coordinates in ``[-1/2, 1/2]``."""
    t = _tau_value(tau)
    x, y = lattice_coordinates(z, t)
    return mp.mpmathify(z) - mp.nint(x) - mp.nint(y) * t


def sqrt_e3_minus_e1(tau, prec: Precision = DEFAULT_PRECISION):
    """``s = i pi theta3(tau)^2``, a holomorphic square root of ``e3 - e1``."""
    prec = as_precision(prec)
    _, th3, _ = theta_nulls(tau, prec)
    e1, _, e3 = half_period_values(tau, prec)
    with workprec(prec):
        s = 1j * mp.pi * th3 * th3
        c = e3 - e1
        if abs(s * s - c) > prec.tol(16) * abs(c):
            raise ConsistencyError("theta square root of e3 - e1 disagrees with half-period values")
        return s


def point_of_z(zc, prec: Precision = DEFAULT_PRECISION, tau=None) -> LegendrePoint:
    """The Legendre point attached to ``z`` on the lattice ``Z + tau Z``.

    ``zc`` is a :class:`LatticeCoordinate` (or a raw ``z`` with ``tau`` given).
    Lattice points map to INFINITY; points within ``2^(-bits/2)`` of the
    lattice but not on it raise PrecisionLoss.
    """
    prec = as_precision(prec)
    if isinstance(zc, LatticeCoordinate):
        z, tau = zc.z, zc.tau
    else:
        z = zc
        if tau is None:
            raise TypeError("tau is required when z is not a LatticeCoordinate")
    with workprec(prec):
        dist = lattice_distance(z, tau)
        if dist <= prec.tol(16):
            return INFINITY
        if dist <= prec.tol(prec.bits // 2):
            raise PrecisionLoss("z lies too close to a lattice point")
    e1, e2, e3 = half_period_values(tau, prec)
    s = sqrt_e3_minus_e1(tau, prec)
    p, dp = weierstrass_p(z, tau, prec)
    with workprec(prec):
        c = e3 - e1
        return AffinePoint((p - e1) / c, dp / (2 * s**3))


def elliptic_log(P: LegendrePoint, tau, prec: Precision = DEFAULT_PRECISION) -> LatticeCoordinate:
    """Inverse of :func:`point_of_z`: ``z`` in the fundamental parallelogram.

    ``P(z) = X`` is inverted with Carlson's ``R_F(X - e1, X - e2, X - e3)``;
    the sign of ``z`` is then chosen so that ``P'(z)`` matches the point's
    ``y``.  The result is checked by re-evaluating ``P`` and ``P'``.
    """
    prec = as_precision(prec)
    tau = tau if isinstance(tau, TauPoint) else TauPoint(tau)
    if is_infinity(P):
        with workprec(prec):
            return LatticeCoordinate(mp.mpc(0), tau)
    lam = lambda_of_tau(tau, prec, check=False)
    e1, e2, e3 = half_period_values(tau, prec)
    s = sqrt_e3_minus_e1(tau, prec)
    with workprec(prec):
        x, y = mp.mpmathify(P.x), mp.mpmathify(P.y)
        scale = _scale(x, y) ** 3
        if curve_residual(P, lam) > prec.tol(prec.bits // 2) * scale:
            raise NotOnCurve(f"residual {mp.nstr(curve_residual(P, lam), 5)} at lambda={mp.nstr(lam, 10)}")
        c = e3 - e1
        X = c * x + e1
        Y = 2 * s**3 * y
        w = _invert_p(X, (e1, e2, e3), tau, prec)
    p, dp = weierstrass_p(w, tau, prec)
    with workprec(prec):
        if abs(dp + Y) < abs(dp - Y):
            w = -w
    w = _refine_log(w, X, Y, (e1, e2, e3), tau, prec)
    p, dp = weierstrass_p(w, tau, prec)
    with workprec(prec):
        size = _scale(X, Y)
        if abs(p - X) > prec.tol(prec.bits // 2) * size or abs(dp - Y) > prec.tol(prec.bits // 2) * size:
            raise PrecisionLoss("elliptic logarithm failed to reproduce the point")
    return LatticeCoordinate.reduce(w, tau, prec)


def _refine_log(w, X, Y, es, tau, prec: Precision, steps: int = 8):
    # Newton on P(w) = X, switching to P'(w) = Y near half periods where
    # P' vanishes and the x-equation only pins w down to sqrt(eps).
    e1, e2, e3 = es
    with workprec(prec):
        g2 = 2 * (e1 * e1 + e2 * e2 + e3 * e3)
        tiny = prec.tol(8)
    for _ in range(steps):
        p, dp = weierstrass_p(w, tau, prec)
        with workprec(prec):
            ddp = 6 * p * p - g2 / 2
            if abs(dp) >= abs(ddp) * prec.tol(3 * prec.bits // 4):
                step = (p - X) / dp
                if abs(step) * abs(ddp) > abs(dp):
                    step = (dp - Y) / ddp
            else:
                step = (dp - Y) / ddp
            w = w - step
            if abs(step) <= tiny * max(1, abs(w)):
                break
    return w


def _invert_p(X, es, tau, prec: Precision):
    # R_F is homogeneous of degree -1/2, so rotating all three arguments by a
    # unit k and multiplying by sqrt(k) gives another branch of the inverse;
    # used only if the plain evaluation sits on a cut and misbehaves.
    e1, e2, e3 = es
    tol = prec.tol(prec.bits // 2) * _scale(X)
    for turn in (0, 1, -1, 3, -3):
        k = mp.expjpi(mp.mpf(turn) / 8)
        w = mp.sqrt(k) * mp.elliprf(k * (X - e1), k * (X - e2), k * (X - e3))
        if lattice_distance(w, tau) <= prec.tol(prec.bits // 2):
            continue
        p, _ = weierstrass_p(w, tau, prec)
        if abs(p - X) <= tol:
            return w
    raise PrecisionLoss("could not invert the Weierstrass function at this point")


# ---------------------------------------------------------------------------
# short Weierstrass model


@dataclass(frozen=True)
class WeierstrassCurve:
    """``Y^2 = 4 X^3 - g2 X - g3``."""

    g2: object
    g3: object

    def residual(self, P) -> object:
        if is_infinity(P):
            return mp.mpf(0)
        X, Y = P.x, P.y
        return abs(Y * Y - (4 * X**3 - self.g2 * X - self.g3))

    def add(self, P, Q, prec: Precision = DEFAULT_PRECISION):
        if is_infinity(P):
            return Q
        if is_infinity(Q):
            return P
        prec = as_precision(prec)
        with workprec(prec):
            X1, Y1, X2, Y2 = P.x, P.y, Q.x, Q.y
            eq = prec.tol(32) * _scale(X1, X2, Y1, Y2)
            if abs(X1 - X2) <= eq:
                if abs(Y1 + Y2) <= eq:
                    return INFINITY
                m = (12 * X1 * X1 - self.g2) / (2 * Y1)
            else:
                m = (Y2 - Y1) / (X2 - X1)
            X3 = m * m / 4 - X1 - X2
            return AffinePoint(X3, -(Y1 + m * (X3 - X1)))


def weierstrass_model(lam) -> WeierstrassCurve:
    g2 = mp.mpf(4) / 3 * (lam * lam - lam + 1)
    g3 = mp.mpf(4) / 27 * (lam - 2) * (lam + 1) * (2 * lam - 1)
    return WeierstrassCurve(g2, g3)


def to_weierstrass(P: LegendrePoint, lam, prec: Precision = DEFAULT_PRECISION):
    """``(X', Y') = (x - (lambda + 1)/3, 2y)`` and the target curve."""
    with workprec(as_precision(prec)):
        lam = mp.mpmathify(lam)
        curve = weierstrass_model(lam)
        if is_infinity(P):
            return INFINITY, curve
        return AffinePoint(P.x - (lam + 1) / 3, 2 * P.y), curve


def from_weierstrass(P, lam, prec: Precision = DEFAULT_PRECISION) -> LegendrePoint:
    if is_infinity(P):
        return INFINITY
    with workprec(as_precision(prec)):
        return AffinePoint(P.x + (mp.mpmathify(lam) + 1) / 3, P.y / 2)


# ---------------------------------------------------------------------------
# sections


def _eval_int_poly(coeffs: Sequence[int], x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _trim(cs: Sequence[int]) -> tuple[int, ...]:
    cs = [int(c) for c in cs]
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


BRANCH_TOKENS = {"+": 1, "-": -1, "−": -1}


@dataclass(frozen=True)
class Section:
    """``x(lambda) = x_num(lambda) / x_den(lambda)``, ``y = branch * sqrt(x (x - 1) (x - lambda))``.

    Numerator and denominator are normalised jointly (common content removed,
    denominator with positive leading coefficient), so ``x`` is unchanged.
    """

    x_num: tuple[int, ...]
    x_den: tuple[int, ...] = (1,)
    branch: str = "+"

    def __post_init__(self):
        num, den = _trim(self.x_num), _trim(self.x_den)
        if not any(den):
            raise BadInput("section denominator is identically zero")
        if self.branch not in BRANCH_TOKENS:
            raise BadInput(f"branch must be '+' or '-', got {self.branch!r}")
        g = 0
        for c in num + den:
            g = math.gcd(g, c)
        if den[-1] < 0:
            g = -g
        object.__setattr__(self, "x_num", tuple(c // g for c in num))
        object.__setattr__(self, "x_den", tuple(c // g for c in den))
        object.__setattr__(self, "branch", "-" if BRANCH_TOKENS[self.branch] < 0 else "+")

    @classmethod
    def constant(cls, value, branch: str = "+") -> "Section":
        f = Fraction(value)
        return cls((f.numerator,), (f.denominator,), branch)

    @property
    def sign(self) -> int:
        return BRANCH_TOKENS[self.branch]

    def x_at(self, lam):
        return _eval_int_poly(self.x_num, lam) / _eval_int_poly(self.x_den, lam)

    def is_constant(self) -> bool:
        return len(self.x_num) == 1 and len(self.x_den) == 1

    def identically_two_torsion(self) -> bool:
        """True when ``x`` is identically 0, 1 or ``lambda``."""
        num, den = list(self.x_num), list(self.x_den)
        if not any(num):
            return True
        if _trim(num) == _trim(den):
            return True
        return _trim(num) == _trim([0] + den)

    def to_record(self) -> dict:
        return {"x_num": list(self.x_num), "x_den": list(self.x_den), "branch": self.branch}

    @classmethod
    def from_record(cls, rec: dict) -> "Section":
        for key in ("x_num", "x_den"):
            vals = rec.get(key, [1] if key == "x_den" else None)
            if vals is None or not isinstance(vals, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
                raise BadInput(f"section field {key} must be a list of integers")
        return cls(tuple(rec["x_num"]), tuple(rec.get("x_den", [1])), rec.get("branch", "+"))


def load_sections(path) -> list[Section]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise BadInput("sections file must hold a non-empty JSON array")
    return [Section.from_record(rec) for rec in data]


def dump_sections(sections: Sequence[Section], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([s.to_record() for s in sections], fh, indent=1)
        fh.write("\n")


def specialize(section: Section, lam0, prec: Precision = DEFAULT_PRECISION) -> LegendrePoint:
    """The point ``(x(lambda0), branch * sqrt(x (x - 1) (x - lambda0)))`` (principal root)."""
    prec = as_precision(prec)
    with workprec(prec):
        lam0 = mp.mpmathify(lam0)
        den = _eval_int_poly(section.x_den, lam0)
        den_scale = sum(abs(c) for c in section.x_den) * max(1, abs(lam0)) ** (len(section.x_den) - 1)
        if abs(den) <= prec.tol(16) * den_scale:
            raise PoleOfSection(f"section denominator vanishes at lambda={mp.nstr(lam0, 10)}")
        x = _eval_int_poly(section.x_num, lam0) / den
        y = section.sign * mp.sqrt(x * (x - 1) * (x - lam0))
        return AffinePoint(mp.mpc(x), mp.mpc(y))


# ---------------------------------------------------------------------------
# exact arithmetic in Q(sqrt d)


@dataclass(frozen=True)
class QuadFieldElement:
    """``(p + q sqrt d) / r`` with ``r > 0`` and ``gcd(p, q, r) = 1``; ``d`` squarefree."""

    p: int
    q: int
    r: int
    d: int

    def __post_init__(self):
        p, q, r, d = self.p, self.q, self.r, self.d
        if r == 0:
            raise ZeroDivisionError("zero denominator")
        if d == 1:
            p, q = p + q, 0
        if r < 0:
            p, q, r = -p, -q, -r
        g = math.gcd(math.gcd(p, q), r)
        object.__setattr__(self, "p", p // g)
        object.__setattr__(self, "q", q // g)
        object.__setattr__(self, "r", r // g)

    @classmethod
    def rational(cls, x, d: int) -> "QuadFieldElement":
        f = Fraction(x)
        return cls(f.numerator, 0, f.denominator, d)

    def _check(self, other):
        if self.d != other.d:
            raise ValueError("elements of different quadratic fields")

    def __add__(self, o):
        self._check(o)
        return QuadFieldElement(self.p * o.r + o.p * self.r, self.q * o.r + o.q * self.r, self.r * o.r, self.d)

    def __neg__(self):
        return QuadFieldElement(-self.p, -self.q, self.r, self.d)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        self._check(o)
        p = self.p * o.p + self.d * self.q * o.q
        q = self.p * o.q + self.q * o.p
        return QuadFieldElement(p, q, self.r * o.r, self.d)

    def conjugate(self):
        return QuadFieldElement(self.p, -self.q, self.r, self.d)

    def norm(self) -> Fraction:
        return Fraction(self.p * self.p - self.d * self.q * self.q, self.r * self.r)

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conjugate()
        return QuadFieldElement(c.p * n.denominator, c.q * n.denominator, c.r * n.numerator, self.d)

    def __truediv__(self, o):
        return self * o.inverse()

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def to_complex(self, prec: Precision = DEFAULT_PRECISION):
        with workprec(as_precision(prec)):
            return (self.p + self.q * mp.sqrt(mp.mpf(self.d))) / self.r


def squarefree_decomposition(x: Fraction) -> tuple[Fraction, int]:
    """``x = s^2 d`` with ``s`` rational and ``d`` a squarefree integer."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0), 1
    n = x.numerator * x.denominator
    sign = -1 if n < 0 else 1
    square, core = 1, 1
    for p, e in flint.fmpz(abs(n)).factor():
        p = int(p)
        square *= p ** (e // 2)
        if e % 2:
            core *= p
    return Fraction(square, x.denominator), sign * core


@dataclass(frozen=True)
class Finite:
    order: int


@dataclass(frozen=True)
class InfiniteOrder:
    checked_up_to: int = 24


def _exact_add(P, Q, lam: QuadFieldElement):
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    x1, y1 = P
    x2, y2 = Q
    a2 = -(QuadFieldElement.rational(1, lam.d) + lam)
    if x1 == x2:
        if (y1 + y2).is_zero():
            return INFINITY
        three = QuadFieldElement.rational(3, lam.d)
        two = QuadFieldElement.rational(2, lam.d)
        m = (three * x1 * x1 + two * a2 * x1 + lam) / (two * y1)
    else:
        m = (y2 - y1) / (x2 - x1)
    x3 = m * m - a2 - x1 - x2
    return (x3, -(y1 + m * (x3 - x1)))


def torsion_certificate(section: Section, lam0, max_order: int = 24):
    """Exact order of the specialised point over ``Q(sqrt d)``.

    ``lam0`` must be rational and the section's ``x(lam0)`` rational; then
    ``y^2`` is rational and the point is defined over ``Q(sqrt d)`` with ``d``
    the squarefree part of ``y^2``.  Returns ``Finite(m)`` for the first
    ``m <= max_order`` with ``[m]P = O``, else ``InfiniteOrder``.
    """
    lam = Fraction(lam0)
    if lam in (0, 1):
        raise BadInput("lambda must differ from 0 and 1")
    num = _eval_int_poly(section.x_num, lam)
    den = _eval_int_poly(section.x_den, lam)
    if den == 0:
        raise PoleOfSection(f"section has a pole at lambda={lam}")
    x = Fraction(num) / Fraction(den)
    ysq = x * (x - 1) * (x - lam)
    if ysq == 0:
        return Finite(2)
    s, d = squarefree_decomposition(ysq)
    s *= section.sign
    P = (QuadFieldElement.rational(x, d), QuadFieldElement(s.numerator, 0, s.denominator, d) if d == 1
         else QuadFieldElement(0, s.numerator, s.denominator, d))
    L = QuadFieldElement.rational(lam, d)
    Q = P
    for m in range(2, max_order + 1):
        Q = _exact_add(Q, P, L)
        if Q is INFINITY:
            return Finite(m)
    return InfiniteOrder(max_order)


def exact_point(section: Section, lam0):
    """The specialised point as a pair of QuadFieldElements (for display and tests)."""
    lam = Fraction(lam0)
    x = Fraction(_eval_int_poly(section.x_num, lam)) / Fraction(_eval_int_poly(section.x_den, lam))
    s, d = squarefree_decomposition(x * (x - 1) * (x - lam))
    s *= section.sign
    y = QuadFieldElement(0, s.numerator, s.denominator, d) if d != 1 else QuadFieldElement.rational(s, d)
    return QuadFieldElement.rational(x, d), y
