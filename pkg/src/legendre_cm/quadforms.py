"""Imaginary quadratic discriminants, reduced forms, class numbers and CM fibers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath as mp

from .errors import InvalidDiscriminant
from .modular import (
    COSET_REPRESENTATIVES,
    IDENTITY,
    TauPoint,
    UnimodularMatrix,
    j_of_tau,
    lambda_of_tau,
    reduce_to_B,
)
from .numerics import DEFAULT_PRECISION, Precision, as_precision, workprec


@dataclass(frozen=True, order=True)
class Discriminant:
    value: int

    def __post_init__(self):
        v = self.value
        if not isinstance(v, int) or v >= 0 or v % 4 not in (0, 1):
            raise InvalidDiscriminant(f"{v!r} is not a negative integer congruent to 0 or 1 mod 4")

    def __int__(self):
        return self.value

    def __abs__(self):
        return -self.value

    @property
    def rho_trace_norm(self) -> tuple[int, int]:
        """Trace and norm of ``rho = (D + sqrt(D))/2``."""
        d = self.value
        return d, (d * d - d) // 4

    def rho(self, prec: Precision = DEFAULT_PRECISION):
        with workprec(as_precision(prec)):
            return (self.value + mp.sqrt(mp.mpf(self.value))) / 2


def validate_discriminant(d) -> Discriminant:
    if isinstance(d, Discriminant):
        return d
    if isinstance(d, bool) or int(d) != d:
        raise InvalidDiscriminant(f"{d!r} is not an integer")
    return Discriminant(int(d))


@dataclass(frozen=True, order=True)
class QuadraticForm:
    """Binary quadratic form ``a x^2 + b x y + c y^2``."""

    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (a > 0 and abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def transform(self, g: UnimodularMatrix) -> "QuadraticForm":
        """Form whose root in the upper half-plane is ``g`` applied to this form's root."""
        # tau = g^-1 tau' = (s tau' - q) / (-r tau' + p); substitute and clear denominators
        p, q, r, s = g.entries
        a, b, c = self.a, self.b, self.c
        A = a * s * s - b * s * r + c * r * r
        B = -2 * a * s * q + b * (s * p + q * r) - 2 * c * p * r
        C = a * q * q - b * q * p + c * p * p
        return QuadraticForm(A, B, C)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


def reduced_forms(D) -> list[QuadraticForm]:
    """Primitive reduced forms of discriminant ``D``, sorted by ``(a, b, c)``."""
    d = validate_discriminant(D).value
    out = []
    a = 1
    while 3 * a * a <= -d:
        for b in range(-a + 1, a + 1):
            if (b - d) % 2:
                continue
            num = b * b - d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            form = QuadraticForm(a, b, c)
            if form.is_reduced() and form.is_primitive():
                out.append(form)
        a += 1
    return sorted(out)


def class_number(D) -> int:
    return len(reduced_forms(D))


def valid_discriminants(d_max: int, d_min: int = 3) -> list[Discriminant]:
    """All discriminants with ``d_min <= |D| <= d_max``, ordered by ``|D|``."""
    return [Discriminant(-n) for n in range(max(3, d_min), d_max + 1) if (-n) % 4 in (0, 1)]


def _squarefree(n: int) -> bool:
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def is_fundamental(D) -> bool:
    d = validate_discriminant(D).value
    if d % 4 == 1:
        return _squarefree(-d)
    m = d // 4
    return m % 4 in (2, 3) and _squarefree(-m)


def class_number_growth_exponent(d_max: int = 10_000, d_min: int = 3) -> float:
    """Least-squares slope of ``log h(D)`` against ``log |D|`` over fundamental discriminants."""
    xs, ys = [], []
    for disc in valid_discriminants(d_max, d_min):
        if is_fundamental(disc):
            xs.append(math.log(abs(disc)))
            ys.append(math.log(class_number(disc)))
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    return sxy / sxx


def cm_tau(form: QuadraticForm, prec: Precision = DEFAULT_PRECISION) -> TauPoint:
    """Root ``(-b + i sqrt|D|) / (2a)`` of ``a X^2 + b X + c`` in the upper half-plane."""
    d = form.discriminant
    if d >= 0 or form.a <= 0:
        raise InvalidDiscriminant(f"{form} is not positive definite")
    with workprec(as_precision(prec)):
        return TauPoint(mp.mpc(-form.b, mp.sqrt(-d)) / (2 * form.a))


@dataclass
class CMFiber:
    """A CM fiber ``E_lambda0`` attached to a reduced form.

    ``orbit_matrix`` is the coset representative taking the form's root to
    ``tau``; it is the identity for the default choice of ``B``-representative.
    """

    disc: Discriminant
    form: QuadraticForm
    tau: TauPoint
    lambda0: mp.mpc
    coset_index: int = 0
    orbit_matrix: UnimodularMatrix = IDENTITY
    lambda_minpoly: Optional[object] = None
    precision: Precision = DEFAULT_PRECISION
    meta: dict = field(default_factory=dict)

    @property
    def rho_trace_norm(self) -> tuple[int, int]:
        return self.disc.rho_trace_norm

    @property
    def tau_form(self) -> QuadraticForm:
        """Primitive form whose upper-half-plane root is ``tau``."""
        return self.form.transform(self.orbit_matrix)

    def tau_at(self, prec: Precision) -> TauPoint:
        with workprec(prec):
            return TauPoint(self.orbit_matrix.act(cm_tau(self.form, prec).value))

    def rho_at(self, prec: Precision):
        return self.disc.rho(prec)

    def lambda_at(self, prec: Precision):
        return lambda_of_tau(self.tau_at(prec), prec)

    def at_precision(self, prec: Precision) -> "CMFiber":
        return CMFiber(
            self.disc,
            self.form,
            self.tau_at(prec),
            self.lambda_at(prec),
            self.coset_index,
            self.orbit_matrix,
            self.lambda_minpoly,
            prec,
            dict(self.meta),
        )


def cm_fibers(D, prec: Precision = DEFAULT_PRECISION, all_orbit: bool = False) -> list[CMFiber]:
    """One fiber per reduced form (six per form with ``all_orbit``).

    The default ``tau`` is the ``B``-representative of the form's root.  The
    root of a reduced form lies in ``D``, so this is normally the root itself
    with coset 0; corner points on the boundary of ``D`` can come back as a
    different coset image of the same point.
    """
    prec = as_precision(prec)
    disc = validate_discriminant(D)
    fibers = []
    for form in reduced_forms(disc):
        base = cm_tau(form, prec)
        if all_orbit:
            reps = list(enumerate(COSET_REPRESENTATIVES))
        else:
            _, gamma, tag = reduce_to_B(base, prec)
            reps = [(tag.coset_index, gamma)]
        for idx, g in reps:
            with workprec(prec):
                tau = TauPoint(g.act(base.value))
            fibers.append(CMFiber(disc, form, tau, lambda_of_tau(tau, prec), idx, g, None, prec))
    return fibers


def hilbert_class_polynomial(D, prec: Optional[Precision] = None) -> list[int]:
    """Integer coefficients (ascending) of ``prod (X - j(tau_Q))`` over reduced forms.

    Working precision is sized from the magnitudes of the ``j(tau_Q)`` and the
    rounding is confirmed by a second evaluation at doubled precision.
    """
    forms = reduced_forms(D)
    est = Precision(64)
    with workprec(est):
        size = sum(max(0, mp.log(abs(j_of_tau(cm_tau(f, est), est, check=False)) + 1, 2)) for f in forms)
    bits = int(size) + 2 * len(forms) + 64
    if prec is not None:
        bits = max(bits, prec.bits)
    coeffs = _rounded_product(forms, Precision(bits))
    again = _rounded_product(forms, Precision(2 * bits))
    if coeffs != again:
        raise ArithmeticError(f"Hilbert class polynomial for D={int(validate_discriminant(D))} unstable")
    return coeffs


def _rounded_product(forms, prec: Precision) -> list[int]:
    with workprec(prec):
        poly = [mp.mpc(1)]
        for f in forms:
            j = j_of_tau(cm_tau(f, prec), prec)
            new = [mp.mpc(0)] * (len(poly) + 1)
            for k, c in enumerate(poly):
                new[k + 1] += c
                new[k] -= j * c
            poly = new
        out = []
        for c in poly:
            if abs(c.imag) > mp.mpf("0.25") or abs(c.real - mp.nint(c.real)) > mp.mpf("0.25"):
                raise ArithmeticError("Hilbert class polynomial coefficient not near an integer")
            out.append(int(mp.nint(c.real)))
    return out
