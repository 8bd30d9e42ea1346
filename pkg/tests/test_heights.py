import math
import random

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from legendre_cm.errors import NoRelationFound, NotImaginaryQuadratic, UnsupportedDegree
from legendre_cm.heights import (
    INFINITY,
    AlgebraicNumber,
    IntPolynomial,
    check_height_inequalities,
    d_height,
    fiber_height_report,
    induced_j_polynomial,
    lambda_minimal_polynomial,
    mahler_measure,
    minpoly_from_approx,
    weil_height,
)
from legendre_cm.modular import j_from_lambda
from legendre_cm.numerics import Precision
from legendre_cm.quadforms import class_number, cm_fibers, hilbert_class_polynomial, reduced_forms, valid_discriminants

P = Precision(256)


def test_int_polynomial_normalisation():
    p = IntPolynomial([4, -6, -2])
    assert p.coeffs == (-2, 3, 1)
    with pytest.raises(ValueError):
        IntPolynomial([0, 0])


def test_weil_height_examples():
    with mp.workprec(P.working):
        assert weil_height(AlgebraicNumber.rational(1), P) == 0
        assert abs(weil_height(AlgebraicNumber.rational(3, 2), P) - mp.log(3)) <= P.tol()
        assert abs(weil_height(AlgebraicNumber.from_minpoly([-2, 0, 1]), P) - mp.log(2) / 2) <= P.tol()
        # golden ratio: h = log(phi) / 2
        phi = (1 + mp.sqrt(5)) / 2
        assert abs(weil_height(AlgebraicNumber.from_minpoly([-1, -1, 1]), P) - mp.log(phi) / 2) <= P.tol(2)


def test_weil_height_is_galois_invariant():
    poly = IntPolynomial([3, -7, 0, 2, 5])
    heights = [weil_height(AlgebraicNumber.from_minpoly(poly, k, P, check=False), P) for k in range(4)]
    assert len(set(heights)) == 1


def test_mahler_measure_against_mpmath_roots():
    poly = IntPolynomial([7, -3, 0, 11, 2])
    with mp.workprec(P.working):
        roots = mp.polyroots(list(reversed(poly.coeffs)), maxsteps=200, extraprec=200)
        expected = 2 * mp.fprod(max(1, abs(r)) for r in roots)
        assert abs(mahler_measure(poly, P) - expected) < mp.mpf(10) ** -50 * expected


def test_d_height_examples():
    i = AlgebraicNumber.from_minpoly([1, 0, 1])
    assert d_height(i, 2) == 1
    assert d_height(i, 1) == INFINITY
    assert d_height(AlgebraicNumber.from_minpoly([1, -1, 1]), 2) == 1
    ten = AlgebraicNumber.rational(10)
    assert d_height(ten, 2) == d_height(ten, 1) == 10
    with pytest.raises(UnsupportedDegree):
        d_height(ten, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rational_height_identity(p, q):
    a = AlgebraicNumber.rational(p, q)
    with mp.workprec(P.working):
        assert d_height(a, 1) == d_height(a, 2) == int(mp.nint(mp.exp(weil_height(a, P))))


def test_height_inequality_examples():
    assert check_height_inequalities(AlgebraicNumber.from_minpoly([1, 0, 1])).holds()
    alpha = AlgebraicNumber.nearest_root([3, 1, 2], mp.mpc(-0.25, 1.2))
    assert d_height(alpha, 2) == 3
    assert check_height_inequalities(alpha).holds()
    with pytest.raises(NotImaginaryQuadratic):
        check_height_inequalities(AlgebraicNumber.from_minpoly([-2, 0, 1]))


def test_height_inequalities_on_random_reduced_forms():
    rng = random.Random(7)
    discs = [int(d) for d in valid_discriminants(10_000)]
    violations = 0
    for _ in range(200):
        f = rng.choice(reduced_forms(rng.choice(discs)))
        alpha = AlgebraicNumber.nearest_root([f.c, f.b, f.a], mp.mpc(-f.b, 1) / (2 * f.a))
        violations += not check_height_inequalities(alpha).holds()
    assert violations == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10**6), st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_minpoly_recovers_random_quadratics(a, b, c):
    disc = b * b - 4 * a * c
    if c == 0 or (disc >= 0 and math.isqrt(disc) ** 2 == disc) or math.gcd(math.gcd(a, b), c) != 1:
        return
    poly = IntPolynomial([c, b, a])
    x = AlgebraicNumber.from_minpoly(poly, 0, P).approx
    assert minpoly_from_approx(x, 2, P) == poly


def test_minpoly_examples():
    with mp.workprec(P.working):
        assert minpoly_from_approx(mp.mpf(1) / 2, 3, P) == IntPolynomial([-1, 2])
        assert minpoly_from_approx((1 + mp.sqrt(5)) / 2, 4, P) == IntPolynomial([-1, -1, 1])
        with pytest.raises(NoRelationFound):
            minpoly_from_approx(mp.pi, 3, P)


def test_lambda_minpoly_for_small_discriminants():
    lam3 = lambda_minimal_polynomial(cm_fibers(-3, P)[0])
    assert lam3 == IntPolynomial([1, -1, 1])
    lam4 = lambda_minimal_polynomial(cm_fibers(-4, P)[0])
    assert lam4.degree in (1, 2, 3) and 6 % lam4.degree == 0
    # the lambda-orbit of j = 1728 is {1/2, -1, 2}
    assert lam4 == IntPolynomial([-1, 2])


def test_lattice_and_exact_routes_agree_for_D_minus_15():
    fiber = cm_fibers(-15, P)[0]
    via_lattice = minpoly_from_approx(lambda p: fiber.lambda_at(p), 12, P)
    assert 12 % via_lattice.degree == 0
    assert via_lattice == lambda_minimal_polynomial(fiber)
    assert induced_j_polynomial(via_lattice, P).coeffs == (-121287375, 191025, 1)


def test_fiber_height_report_degrees():
    for D in (-3, -4, -7, -15, -20, -23, -39, -56):
        for fib in cm_fibers(D, P):
            h_lambda, H_tau, deg = fiber_height_report(fib, P)
            h = class_number(D)
            assert deg % h == 0 and deg // h in (1, 2, 3, 6)
            with mp.workprec(P.working):
                # every root of the lambda polynomial has j among the CM j-invariants
                hil = hilbert_class_polynomial(D)
                for r in fib.lambda_minpoly.roots(P):
                    j = j_from_lambda(r)
                    val = sum(c * j**k for k, c in enumerate(hil))
                    assert abs(val) < mp.mpf(10) ** -30 * max(1, abs(j)) ** len(hil) * max(map(abs, hil))
                assert h_lambda >= 0 and H_tau >= 1
