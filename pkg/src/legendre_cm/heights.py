"""Heights of algebraic numbers and exact minimal polynomials of CM lambda-values.

Polynomials are integer coefficient lists in ascending degree.  Root
isolation and factorisation over the integers go through python-flint;
everything that is reported back is converted to mpmath.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import flint
import mpmath as mp

from .errors import (
    ConsistencyError,
    NoRelationFound,
    NotImaginaryQuadratic,
    RootIsolationFailure,
    UnsupportedDegree,
)
from .lattice import integer_relation
from .numerics import DEFAULT_PRECISION, Precision, as_precision, is_recompute, workprec
from .quadforms import CMFiber, QuadraticForm, class_number, hilbert_class_polynomial, validate_discriminant

INFINITY = math.inf


@dataclass(frozen=True)
class IntPolynomial:
    """Primitive integer polynomial with positive leading coefficient."""

    coeffs: tuple[int, ...]

    def __init__(self, coeffs: Sequence[int]):
        cs = [int(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if not cs:
            raise ValueError("the zero polynomial is not allowed")
        g = 0
        for c in cs:
            g = math.gcd(g, c)
        if cs[-1] < 0:
            g = -g
        object.__setattr__(self, "coeffs", tuple(c // g for c in cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def max_coefficient(self) -> int:
        return max(abs(c) for c in self.coeffs)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def to_flint(self) -> flint.fmpz_poly:
        return flint.fmpz_poly(list(self.coeffs))

    @classmethod
    def from_flint(cls, p: flint.fmpz_poly) -> "IntPolynomial":
        return cls([int(c) for c in p.coeffs()])

    def is_irreducible(self) -> bool:
        if self.degree <= 0:
            return False
        _, factors = self.to_flint().factor()
        return len(factors) == 1 and factors[0][1] == 1 and factors[0][0].degree() == self.degree

    def roots(self, prec: Precision = DEFAULT_PRECISION) -> list:
        """Complex roots as mpc, in a deterministic order (by real, then imaginary part)."""
        return _isolated_roots(self.coeffs, as_precision(prec).working)

    def to_list(self) -> list[int]:
        return list(self.coeffs)

    def __str__(self):
        return str(self.to_flint())


def _acb_to_mpc(z) -> mp.mpc:
    rm, re_ = z.real.mid().man_exp()
    im_, ie = z.imag.mid().man_exp()
    re = mp.ldexp(int(rm), int(re_))
    im = mp.ldexp(int(im_), int(ie))
    return mp.mpc(re, im)


@lru_cache(maxsize=512)
def _isolated_roots(coeffs: tuple[int, ...], bits: int) -> list:
    poly = flint.fmpz_poly(list(coeffs))
    old = flint.ctx.prec
    flint.ctx.prec = bits + 16
    try:
        found = poly.complex_roots()
    except (ValueError, ArithmeticError) as exc:
        raise RootIsolationFailure(str(exc)) from exc
    finally:
        flint.ctx.prec = old
    roots = []
    with mp.workprec(bits):
        for z, mult in found:
            if mult != 1:
                raise RootIsolationFailure("repeated root; input is not squarefree")
            roots.append(+_acb_to_mpc(z))
        roots.sort(key=lambda r: (mp.nint(r.real * 2**40), r.imag))
    if len(roots) != len(coeffs) - 1:
        raise RootIsolationFailure(f"isolated {len(roots)} of {len(coeffs) - 1} roots")
    return roots


@dataclass(frozen=True)
class AlgebraicNumber:
    """A root of an irreducible :class:`IntPolynomial` with an approximation.

    ``root_index`` refers to the ordering of :meth:`IntPolynomial.roots`.
    """

    minpoly: IntPolynomial
    approx: object
    root_index: int = 0

    @property
    def degree(self) -> int:
        return self.minpoly.degree

    @classmethod
    def rational(cls, p: int, q: int = 1) -> "AlgebraicNumber":
        f = Fraction(p, q)
        return cls(IntPolynomial([-f.numerator, f.denominator]), mp.mpf(f.numerator) / f.denominator, 0)

    @classmethod
    def from_minpoly(cls, coeffs, root_index: int = 0, prec: Precision = DEFAULT_PRECISION, check: bool = True):
        poly = coeffs if isinstance(coeffs, IntPolynomial) else IntPolynomial(coeffs)
        if check and poly.degree <= 2 and not _low_degree_irreducible(poly):
            raise ValueError(f"{poly} is reducible over the rationals")
        roots = poly.roots(prec)
        return cls(poly, roots[root_index], root_index)

    @classmethod
    def nearest_root(cls, coeffs, x, prec: Precision = DEFAULT_PRECISION):
        """The root of ``coeffs`` closest to ``x``."""
        poly = coeffs if isinstance(coeffs, IntPolynomial) else IntPolynomial(coeffs)
        roots = poly.roots(prec)
        idx = min(range(len(roots)), key=lambda k: abs(roots[k] - x))
        return cls(poly, roots[idx], idx)

    def residual(self, prec: Precision = DEFAULT_PRECISION):
        with workprec(as_precision(prec)):
            return abs(self.minpoly(mp.mpmathify(self.approx)))

    def is_rational(self) -> bool:
        return self.degree == 1

    def as_fraction(self) -> Fraction:
        if self.degree != 1:
            raise ValueError("not rational")
        c0, c1 = self.minpoly.coeffs
        return Fraction(-c0, c1)


def _low_degree_irreducible(poly: IntPolynomial) -> bool:
    if poly.degree == 1:
        return True
    c, b, a = poly.coeffs
    disc = b * b - 4 * a * c
    return disc < 0 or math.isqrt(disc) ** 2 != disc


def mahler_measure(poly: IntPolynomial, prec: Precision = DEFAULT_PRECISION):
    prec = as_precision(prec)
    with workprec(prec):
        m = mp.mpf(abs(poly.leading))
        for r in poly.roots(prec):
            m *= max(mp.mpf(1), abs(r))
        return m


def weil_height(alpha: AlgebraicNumber, prec: Precision = DEFAULT_PRECISION):
    """Logarithmic Weil height ``(log|lead| + sum log+|root|) / deg``.

    The root sum is evaluated twice, the second time at doubled precision;
    disagreement beyond the working tolerance raises RootIsolationFailure.
    """
    prec = as_precision(prec)
    poly = alpha.minpoly
    if poly.degree == 1:
        p, q = -poly.coeffs[0], poly.coeffs[1]
        with workprec(prec):
            return mp.log(max(abs(p), abs(q)))
    values = []
    for work in (prec, prec.doubled()):
        with workprec(work):
            total = mp.log(abs(poly.leading))
            for r in poly.roots(work):
                a = abs(r)
                if a > 1:
                    total += mp.log(a)
            values.append(total / poly.degree)
    with workprec(prec):
        if abs(values[0] - values[1]) > prec.tol(16) * max(1, abs(values[1])):
            raise RootIsolationFailure("height unstable under precision doubling")
        return +values[1]


def d_height(alpha: AlgebraicNumber, d: int):
    """``H_d`` for ``d`` in {1, 2}: infinite above the degree, else max coefficient."""
    if d not in (1, 2):
        raise UnsupportedDegree(f"d-height only implemented for d in (1, 2), got {d}")
    if alpha.degree > d:
        return INFINITY
    if alpha.degree == 1:
        c0, c1 = alpha.minpoly.coeffs
        return max(abs(c0), abs(c1))
    return alpha.minpoly.max_coefficient()


def rational_h2(x: Fraction) -> int:
    return max(abs(x.numerator), abs(x.denominator))


class HeightInequalityReport(NamedTuple):
    """Measured ``lhs / rhs`` for each inequality; all must be <= 1."""

    abs_value: float
    real_part: float
    imag_part: float
    height_equivalence: float

    def holds(self) -> bool:
        return all(r <= 1 for r in self)


GOLDEN = (1 + math.sqrt(5)) / 2


def check_height_inequalities(alpha: AlgebraicNumber, prec: Precision = DEFAULT_PRECISION) -> HeightInequalityReport:
    """Measure the four size/height comparisons for an imaginary quadratic ``alpha``.

    With minimal polynomial ``a X^2 + b X + c``:

    * ``|alpha| <= C1 H_2(alpha)``, ``C1 = (1 + sqrt 5) / 2``;
    * ``H_2(Re alpha) <= max(|b|, |2a|) <= 2 H_2(alpha)``;
    * ``H_2(Im alpha) <= max(|D|, 4 a^2) <= 4 H_2(alpha)^2``;
    * ``H_2(alpha) <= 4 H(alpha)^2``.

    Each intermediate bound is checked too; a failure there is reported as a
    ratio above 1 in the corresponding slot.
    """
    if alpha.degree != 2:
        raise NotImaginaryQuadratic("expected a quadratic algebraic number")
    c, b, a = alpha.minpoly.coeffs
    D = b * b - 4 * a * c
    if D >= 0:
        raise NotImaginaryQuadratic(f"discriminant {D} is not negative")
    h2 = d_height(alpha, 2)
    prec = as_precision(prec)
    with workprec(prec):
        x = mp.mpmathify(alpha.approx)
        r_abs = abs(x) / (GOLDEN * h2)

        re = Fraction(-b, 2 * a)
        re_mid = max(abs(b), abs(2 * a))
        r_re = max(Fraction(rational_h2(re), re_mid), Fraction(re_mid, 2 * h2))

        # (Im alpha)^2 = |D| / (4 a^2)
        sq = Fraction(-D, 4 * a * a)
        num, den = sq.numerator, sq.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            h_im = max(rn, rd)
        else:
            h_im = max(num, den)
        im_mid = max(-D, 4 * a * a)
        r_im = max(Fraction(h_im, im_mid), Fraction(im_mid, 4 * h2 * h2))

        big_h_sq = mp.exp(2 * weil_height(alpha, prec))
        r_eq = h2 / (4 * big_h_sq)
        return HeightInequalityReport(float(r_abs), float(r_re), float(r_im), float(r_eq))


# ---------------------------------------------------------------------------
# minimal polynomials from approximations


def minpoly_from_approx(
    x,
    max_degree: int,
    prec: Precision = DEFAULT_PRECISION,
    coeff_bound: Optional[int] = None,
) -> IntPolynomial:
    """Integer polynomial of least degree vanishing at ``x`` to ``2^(-bits/2)``.

    ``x`` may be a number or a callable ``prec -> number``; the callable form
    lets the doubled-precision recheck use a genuinely recomputed value.
    A detected annihilator is factored and the irreducible factor vanishing
    at ``x`` is returned.
    """
    prec = as_precision(prec)
    tol = prec.tol(prec.bits // 2)
    value = x(prec) if is_recompute(x) else x
    for d in range(1, max_degree + 1):
        bound = coeff_bound if coeff_bound is not None else 2 ** max(8, prec.bits // (2 * (d + 1)))

        def powers(p, d=d):
            with workprec(p):
                v = mp.mpmathify(x(p) if is_recompute(x) else value)
                return [v**k for k in range(d + 1)]

        rel = integer_relation(powers, bound, tol, prec)
        if rel is None:
            continue
        poly = _vanishing_factor(IntPolynomial(rel), value, prec)
        if poly is not None:
            return poly
    raise NoRelationFound(f"no annihilator of degree <= {max_degree} found at {prec.bits} bits")


def _vanishing_factor(poly: IntPolynomial, x, prec: Precision) -> Optional[IntPolynomial]:
    _, factors = poly.to_flint().factor()
    best = None
    with workprec(prec):
        x = mp.mpmathify(x)
        for f, _ in factors:
            g = IntPolynomial.from_flint(f)
            scale = sum(abs(c) for c in g.coeffs) * max(1, abs(x)) ** g.degree
            r = abs(g(x)) / scale
            if best is None or r < best[0]:
                best = (r, g)
        if best is None or best[0] > prec.tol(prec.bits // 2):
            return None
    return best[1]


def _poly_pow(p: flint.fmpz_poly, k: int) -> flint.fmpz_poly:
    out = flint.fmpz_poly([1])
    for _ in range(k):
        out *= p
    return out


@lru_cache(maxsize=256)
def lambda_polynomial_factors(D: int) -> tuple[tuple[int, ...], ...]:
    """Irreducible factors of ``sum H_k A^k B^(h-k)``, the lambda-lift of the Hilbert class polynomial.

    ``A = 256 (X^2 - X + 1)^3`` and ``B = X^2 (X - 1)^2`` come from
    ``j = A(lambda) / B(lambda)``; the result vanishes at every lambda-value
    of every CM point of discriminant ``D``.
    """
    hcoeffs = hilbert_class_polynomial(D)
    h = len(hcoeffs) - 1
    A = 256 * _poly_pow(flint.fmpz_poly([1, -1, 1]), 3)
    B = flint.fmpz_poly([0, 0, 1, -2, 1])
    total = flint.fmpz_poly([0])
    apow = [flint.fmpz_poly([1])]
    bpow = [flint.fmpz_poly([1])]
    for _ in range(h):
        apow.append(apow[-1] * A)
        bpow.append(bpow[-1] * B)
    for k, c in enumerate(hcoeffs):
        total += c * apow[k] * bpow[h - k]
    _, factors = total.factor()
    out = sorted({tuple(IntPolynomial.from_flint(f).coeffs) for f, _ in factors}, key=lambda c: (len(c), c))
    return tuple(out)


def lambda_minimal_polynomial(fiber: CMFiber, prec: Optional[Precision] = None) -> IntPolynomial:
    """Exact minimal polynomial of the fiber's ``lambda0``.

    Chosen among the factors of :func:`lambda_polynomial_factors` as the one
    with a root nearest ``lambda0``.  That root must agree with ``lambda0`` to
    ``2^(-bits/2)`` and every other factor's roots must stay visibly farther.
    """
    prec = as_precision(prec or fiber.precision)
    lam = fiber.lambda0 if prec == fiber.precision else fiber.lambda_at(prec)
    scored = []
    with workprec(prec):
        lam = mp.mpmathify(lam)
        for coeffs in lambda_polynomial_factors(int(fiber.disc)):
            g = IntPolynomial(coeffs)
            dist = min(abs(r - lam) for r in g.roots(prec))
            scored.append((dist, g))
        scored.sort(key=lambda t: t[0])
        size = max(1, abs(lam))
        if scored[0][0] > prec.tol(prec.bits // 2) * size:
            raise ConsistencyError(f"no factor vanishes at lambda0 for D={int(fiber.disc)}")
        if len(scored) > 1 and scored[1][0] < prec.tol(prec.bits // 4) * size:
            raise ConsistencyError("two factors vanish at lambda0; increase precision")
    return scored[0][1]


def induced_j_polynomial(lambda_poly: IntPolynomial, prec: Precision = DEFAULT_PRECISION) -> IntPolynomial:
    """Minimal polynomial of ``j(lambda)`` over the roots of ``lambda_poly``.

    Evaluates ``j = 256 (l^2 - l + 1)^3 / (l^2 (l - 1)^2)`` at every root,
    rounds the product polynomial to integers, and returns its irreducible
    factor (the product is a power of it when ``lambda_poly`` is irreducible).
    """
    prec = as_precision(prec)

    def rounded(work: Precision) -> list[int]:
        with workprec(work):
            poly = [mp.mpc(1)]
            for r in lambda_poly.roots(work):
                j = 256 * (r * r - r + 1) ** 3 / (r * r * (r - 1) ** 2)
                new = [mp.mpc(0)] * (len(poly) + 1)
                for k, c in enumerate(poly):
                    new[k + 1] += c
                    new[k] -= j * c
                poly = new
            out = []
            for c in poly:
                n = mp.nint(c.real)
                if abs(c - n) > mp.mpf("0.25"):
                    raise ConsistencyError("j-polynomial coefficient not near an integer")
                out.append(int(n))
            return out

    first = rounded(prec)
    if first != rounded(prec.doubled()):
        raise ConsistencyError("j-polynomial rounding unstable; increase precision")
    _, factors = flint.fmpz_poly(first).factor()
    if len(factors) != 1:
        raise ConsistencyError("lambda polynomial induces more than one j-class")
    return IntPolynomial.from_flint(factors[0][0])


# ---------------------------------------------------------------------------
# per-fiber reports


class FiberHeights(NamedTuple):
    h_lambda: object
    H_tau: object
    deg_lambda: int


def tau_height(form: QuadraticForm):
    """Multiplicative Weil height of the root of a primitive positive definite form."""
    return mp.sqrt(max(form.a, form.c))


def fiber_height_report(fiber: CMFiber, prec: Optional[Precision] = None) -> FiberHeights:
    """``(h(lambda0), H(tau0), deg lambda0)``; fills ``fiber.lambda_minpoly`` if unset.

    Raises ConsistencyError unless ``deg / h(D)`` is one of 1, 2, 3, 6.
    """
    prec = as_precision(prec or fiber.precision)
    if fiber.lambda_minpoly is None:
        fiber.lambda_minpoly = lambda_minimal_polynomial(fiber, prec)
    poly = fiber.lambda_minpoly
    alpha = AlgebraicNumber.nearest_root(poly, fiber.lambda0, prec)
    h_lambda = weil_height(alpha, prec)
    h = class_number(fiber.disc)
    deg = poly.degree
    if deg % h or deg // h not in (1, 2, 3, 6):
        raise ConsistencyError(f"deg lambda0 = {deg} incompatible with class number {h}")
    with workprec(prec):
        H_tau = tau_height(fiber.tau_form)
    return FiberHeights(h_lambda, H_tau, deg)


def degree_ratio(fiber: CMFiber) -> int:
    """``deg lambda0 / h(D)``, one of 1, 2, 3, 6."""
    if fiber.lambda_minpoly is None:
        fiber.lambda_minpoly = lambda_minimal_polynomial(fiber)
    h = class_number(validate_discriminant(fiber.disc))
    return fiber.lambda_minpoly.degree // h
