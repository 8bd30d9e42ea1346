"""Arbitrary-precision substrate: precision policy, q-series summation, AGM.

All complex quantities are ``mpmath.mpc`` values.  Functions take a
:class:`Precision` and evaluate inside ``mpmath.workprec`` so the caller's
global mpmath context is left untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import mpmath as mp

from .errors import DivergentInput, NonConvergence, ZeroInput

Number = Union[int, float, complex, "mp.mpf", "mp.mpc"]


@dataclass(frozen=True)
class Precision:
    """Working precision in bits, plus internal guard bits."""

    bits: int = 256
    guard_bits: int = 32

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise ValueError(f"precision must be an integer >= 64 bits, got {self.bits}")
        if int(self.guard_bits) != self.guard_bits or self.guard_bits < 16:
            raise ValueError(f"guard_bits must be an integer >= 16, got {self.guard_bits}")

    @property
    def working(self) -> int:
        return self.bits + self.guard_bits

    def scaled(self, factor: int) -> "Precision":
        return Precision(self.bits * factor, self.guard_bits)

    def doubled(self) -> "Precision":
        return self.scaled(2)

    def tol(self, slack_bits: int = 0) -> mp.mpf:
        """The tolerance ``2**(-bits + slack_bits)`` as an mpf."""
        return mp.ldexp(mp.mpf(1), -self.bits + slack_bits)

    def digits(self) -> int:
        """Decimal digits that are meaningful at this precision."""
        return max(15, int(self.bits * 0.30103) - 2)


DEFAULT_PRECISION = Precision()


def as_precision(prec: Union[Precision, int, None]) -> Precision:
    if prec is None:
        return DEFAULT_PRECISION
    if isinstance(prec, Precision):
        return prec
    return Precision(int(prec))


def workprec(prec: Precision, extra: int = 0):
    """Context manager running mpmath at ``prec.working + extra`` bits."""
    return mp.workprec(prec.working + extra)


def is_recompute(x) -> bool:
    """True for a ``prec -> value`` callable; mpmath constants such as ``mp.pi`` are callable but are plain numbers."""
    return callable(x) and not isinstance(x, mp.ctx_mp_python.mpnumeric)


def to_mpc(x: Number) -> mp.mpc:
    """Convert to mpc without rounding to the ambient mpmath precision."""
    if isinstance(x, mp.mpc):
        return x
    if isinstance(x, str):
        x = mp.mpmathify(x)
    # mpc() rounds to the context precision, so build it in a wide context
    with mp.workprec(max(mp.prec, 8192)):
        return mp.mpc(x)


def _agm_branch(mean, root):
    # Pick the sign of the geometric mean keeping |a - b| minimal; on a tie
    # prefer non-negative real part, then positive imaginary part.
    d_plus = abs(mean - root)
    d_minus = abs(mean + root)
    if d_minus < d_plus:
        return -root
    if d_minus == d_plus:
        if mp.re(root) < 0 or (mp.re(root) == 0 and mp.im(root) < 0):
            return -root
    return root


def agm(a: Number, b: Number, prec: Precision = DEFAULT_PRECISION):
    """Arithmetic-geometric mean M(a, b) with the optimal branch choice.

    For positive reals the result is real; for complex input the square root
    at each step is the one closest to the arithmetic mean.
    """
    prec = as_precision(prec)
    with workprec(prec):
        a = mp.mpmathify(a)
        b = mp.mpmathify(b)
        if a == 0 or b == 0:
            raise ZeroInput("agm is undefined for a zero argument")
        if mp.im(a) == 0 and mp.im(b) == 0:
            a, b = mp.re(a), mp.re(b)
        real = not isinstance(a, mp.mpc) and not isinstance(b, mp.mpc) and a > 0 and b > 0
        # a few ulps of slack: the last bits of a and b can keep trading places
        eps = mp.ldexp(mp.mpf(1), -prec.working + 4)
        for _ in range(prec.bits):
            if abs(a - b) <= eps * abs(a):
                out = (a + b) / 2
                break
            mean = (a + b) / 2
            if mean == 0:
                raise NonConvergence("agm iterates collapsed to zero")
            root = mp.sqrt(a * b)
            if not real:
                root = _agm_branch(mean, root)
            a, b = mean, root
        else:
            raise NonConvergence(f"agm did not converge within {prec.bits} iterations")
    return out


def sum_q_series(
    terms: Iterable[tuple[int, Number]],
    q: Number,
    prec: Precision = DEFAULT_PRECISION,
    *,
    relative: bool = False,
    with_magnitude: bool = False,
):
    """Sum ``sum c_n q**n`` from an iterable of ``(n, c_n)`` pairs.

    Exponents must be non-decreasing and non-negative.  Summation stops once
    ``|c_n q**n| / (1 - |q|)`` falls below ``2**-(bits + guard)``; with
    ``relative=True`` that threshold is scaled by the first nonzero term.

    With ``with_magnitude=True`` returns ``(sum, sum |c_n q**n|)``; the ratio
    of the two measures cancellation, i.e. bits lost to rounding.
    """
    prec = as_precision(prec)
    with workprec(prec):
        q = mp.mpmathify(q)
        aq = abs(q)
        if aq >= 1:
            raise DivergentInput(f"|q| = {mp.nstr(aq, 8)} >= 1; q-series diverges")
        eps = mp.ldexp(mp.mpf(1), -prec.working) / (1 - aq) if aq else mp.ldexp(mp.mpf(1), -prec.working)
        threshold = None if relative else eps
        total = mp.mpf(0)
        magnitude = mp.mpf(0)
        power = mp.mpf(1)
        last = 0
        for n, c in terms:
            if n < last:
                raise ValueError("q-series exponents must be non-decreasing")
            if n != last:
                power *= q ** (n - last)
                last = n
            if c == 0:
                continue
            term = c * power
            total += term
            size = abs(term)
            magnitude += size
            if threshold is None:
                threshold = eps * size
                continue
            if size <= threshold:
                break
        out = +total
        mag = +magnitude
    if with_magnitude:
        return out, mag
    return out


def geometric_terms(coefficient: Callable[[int], Number] = lambda n: 1):
    n = 0
    while True:
        yield n, coefficient(n)
        n += 1


def lost_bits(value, magnitude) -> int:
    """Bits of cancellation when ``value`` was summed from terms totalling ``magnitude``."""
    if magnitude == 0:
        return 0
    if value == 0:
        return 10**6
    r = magnitude / abs(value)
    return max(0, int(mp.ceil(mp.log(r, 2)))) if r > 1 else 0


def close(x: Number, y: Number, tol, scale: Number = 1) -> bool:
    """``|x - y| <= tol * max(1, |scale|)``."""
    return abs(mp.mpmathify(x) - mp.mpmathify(y)) <= tol * max(1, abs(mp.mpmathify(scale)))


def decimal_string(x: Number, digits: int) -> str:
    # convert inside a context wide enough for the requested digits, so a
    # high-precision value is never rounded through the caller's context
    with mp.workdps(digits + 10):
        return mp.nstr(mp.mpmathify(x), digits)


def complex_to_record(z: Number, digits: int) -> dict:
    with mp.workdps(digits + 10):
        z = mp.mpmathify(z)
        re, im = (z.real, z.imag) if isinstance(z, mp.mpc) else (z, mp.mpf(0))
        return {"re": decimal_string(re, digits), "im": decimal_string(im, digits), "digits": digits}


def dot(xs: Sequence, ys: Sequence):
    return mp.fsum(x * y for x, y in zip(xs, ys))
