import math

import flint
import mpmath as mp
import pytest
from sympy import jacobi_symbol

from legendre_cm.errors import InvalidDiscriminant
from legendre_cm.modular import COSET_REPRESENTATIVES, lambda_of_tau
from legendre_cm.numerics import Precision
from legendre_cm.quadforms import (
    Discriminant,
    QuadraticForm,
    class_number,
    class_number_growth_exponent,
    cm_fibers,
    hilbert_class_polynomial,
    is_fundamental,
    reduced_forms,
    valid_discriminants,
    validate_discriminant,
)

P = Precision(256)


def brute_force_forms(D):
    """Reduced primitive forms by scanning the box |b| <= a <= c <= |D|."""
    n = -D
    found = []
    for a in range(1, n + 1):
        for b in range(-a, a + 1):
            for c in range(a, n + 1):
                if b * b - 4 * a * c != D:
                    continue
                if math.gcd(math.gcd(a, b), c) != 1:
                    continue
                if (abs(b) == a or a == c) and b < 0:
                    continue
                found.append((a, b, c))
    return sorted(found)


def analytic_class_number(D):
    """Dirichlet's formula for fundamental D = 1 mod 4, D < -4."""
    n = -D
    return -sum(k * jacobi_symbol(k, n) for k in range(1, n)) // n


def test_validate_discriminant():
    assert int(validate_discriminant(-4)) == -4
    assert int(validate_discriminant(-7)) == -7
    for bad in (-5, -6, 0, 4, 1):
        with pytest.raises(InvalidDiscriminant):
            validate_discriminant(bad)


def test_small_examples():
    assert reduced_forms(-4) == [QuadraticForm(1, 0, 1)]
    assert reduced_forms(-3) == [QuadraticForm(1, 1, 1)]
    assert [f.as_tuple() for f in reduced_forms(-23)] == [(1, 1, 6), (2, -1, 3), (2, 1, 3)]
    assert class_number(-12) == 1  # (2, 2, 2) is not primitive


def test_class_numbers_match_brute_force():
    for disc in valid_discriminants(120):
        D = int(disc)
        assert [f.as_tuple() for f in reduced_forms(D)] == brute_force_forms(D)


def test_class_numbers_match_analytic_formula():
    for disc in valid_discriminants(1500, 5):
        D = int(disc)
        if D % 4 == 1 and is_fundamental(D):
            assert class_number(D) == analytic_class_number(D)


def test_every_form_is_reduced_primitive_with_right_discriminant():
    for disc in valid_discriminants(400):
        for f in reduced_forms(disc):
            assert f.discriminant == int(disc) and f.is_reduced() and f.is_primitive()


def test_growth_exponent_window():
    assert 0.3 <= class_number_growth_exponent(3000) <= 0.7


def test_hilbert_class_polynomials_match_flint():
    for D in (-3, -4, -7, -15, -23, -71, -84, -199, -260):
        assert hilbert_class_polynomial(D) == [int(c) for c in flint.fmpz_poly.hilbert_class_poly(D).coeffs()]
    assert hilbert_class_polynomial(-15) == [-121287375, 191025, 1]


def test_form_transform_tracks_root():
    f = QuadraticForm(2, 1, 3)
    with mp.workprec(P.working):
        root = mp.mpc(-1, mp.sqrt(23)) / 4
        for g in COSET_REPRESENTATIVES:
            h = f.transform(g)
            assert h.discriminant == f.discriminant
            t = g.act(root)
            assert abs(h.a * t * t + h.b * t + h.c) < P.tol(16)


def test_cm_fibers_invariants():
    for D in (-3, -4, -15, -20, -23, -56):
        fibers = cm_fibers(D, P)
        assert len(fibers) == class_number(D)
        for fib in fibers:
            a, b, c = fib.tau_form.as_tuple()
            with mp.workprec(P.working):
                t = fib.tau.value
                assert t.imag > 0
                assert abs(a * t * t + b * t + c) < P.tol(16) * max(1, abs(t)) ** 2
                assert abs(fib.lambda0 - lambda_of_tau(fib.tau, P)) < P.tol(16)
            assert fib.rho_trace_norm == (D, (D * D - D) // 4)


def test_all_orbit_gives_six_distinct_lambdas():
    fibers = cm_fibers(-23, P, all_orbit=True)
    assert len(fibers) == 18
    with mp.workprec(P.working):
        first = [f.lambda0 for f in fibers if f.form == QuadraticForm(1, 1, 6)]
        assert min(abs(x - y) for i, x in enumerate(first) for y in first[i + 1 :]) > 1e-6


def test_discriminant_type():
    d = Discriminant(-20)
    assert abs(d) == 20
    with pytest.raises(InvalidDiscriminant):
        Discriminant(-21)
