"""Integral LLL, integer-relation detection and the End-relation search.

The relation searches embed real (or complex) numbers in an integer lattice:
row ``k`` is the unit vector ``e_k`` followed by ``round(S * Re x_k)`` (and
``round(S * Im x_k)`` for complex input) with ``S = ceil(1/tol)``.  Short
reduced rows with tiny trailing entries are relation candidates; each one is
re-checked at doubled precision before it is returned.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath as mp

from .errors import PrecisionTooLow
from .numerics import DEFAULT_PRECISION, Precision, as_precision, is_recompute, workprec

DEFAULT_DELTA = Fraction(99, 100)


# ---------------------------------------------------------------------------
# LLL


def lll_reduce(basis: Sequence[Sequence[int]], delta=DEFAULT_DELTA, return_transform: bool = False):
    """Delta-LLL reduce the rows of an integer matrix.

    Exact integral version (Cohen, Alg. 2.6.7); rows must be linearly
    independent.  With ``return_transform`` also returns the unimodular ``U``
    with ``U * basis == reduced``.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    dn, dd = delta.numerator, delta.denominator
    b = [[int(x) for x in row] for row in basis]
    n = len(b)
    if n == 0:
        return ([], []) if return_transform else []
    H = [[int(i == j) for j in range(n)] for i in range(n)]

    def ip(u, v):
        return sum(x * y for x, y in zip(u, v))

    # 1-based bookkeeping as in the reference algorithm
    d = [0] * (n + 1)
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    d[0] = 1
    d[1] = ip(b[0], b[0])
    if d[1] == 0:
        raise ValueError("basis rows are linearly dependent")

    def red(k, l):
        if 2 * abs(lam[k][l]) > d[l]:
            q = (2 * lam[k][l] + d[l]) // (2 * d[l])
            bk, bl = b[k - 1], b[l - 1]
            for i in range(len(bk)):
                bk[i] -= q * bl[i]
            hk, hl = H[k - 1], H[l - 1]
            for i in range(n):
                hk[i] -= q * hl[i]
            lam[k][l] -= q * d[l]
            for i in range(1, l):
                lam[k][i] -= q * lam[l][i]

    def swap(k, kmax):
        b[k - 1], b[k - 2] = b[k - 2], b[k - 1]
        H[k - 1], H[k - 2] = H[k - 2], H[k - 1]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 2] * d[k] + lm * lm) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lm * t) // d[k - 1]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k]
        d[k - 1] = B

    k, kmax = 2, 1
    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = ip(b[k - 1], b[j - 1])
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k] = u
            if d[k] == 0:
                raise ValueError("basis rows are linearly dependent")
        red(k, k - 1)
        if dd * (d[k] * d[k - 2] + lam[k][k - 1] ** 2) < dn * d[k - 1] ** 2:
            swap(k, kmax)
            k = max(2, k - 1)
            continue
        for l in range(k - 2, 0, -1):
            red(k, l)
        k += 1
    return (b, H) if return_transform else b


def gram_schmidt(basis: Sequence[Sequence[int]]):
    """Exact Gram-Schmidt: ``(mu, |b*_i|^2)`` as Fractions."""
    n = len(basis)
    bstar: list[list[Fraction]] = []
    norms: list[Fraction] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i, row in enumerate(basis):
        v = [Fraction(x) for x in row]
        for j in range(i):
            mu[i][j] = sum(Fraction(x) * y for x, y in zip(row, bstar[j])) / norms[j]
            v = [a - mu[i][j] * c for a, c in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(sum(x * x for x in v))
    return mu, norms


def is_lll_reduced(basis: Sequence[Sequence[int]], delta=DEFAULT_DELTA) -> bool:
    delta = Fraction(delta)
    mu, norms = gram_schmidt(basis)
    for i in range(len(basis)):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    for k in range(1, len(basis)):
        if norms[k] < (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            return False
    return True


# ---------------------------------------------------------------------------
# integer relations

XsLike = Union[Sequence, Callable[[Precision], Sequence]]


def _values(xs: XsLike, prec: Precision):
    return list(xs(prec)) if is_recompute(xs) else list(xs)


def _scale_for(tol) -> int:
    return int(mp.ceil(1 / mp.mpf(tol)))


def _embedding(values, scale: int, identity_weight: int = 1):
    complex_input = any(isinstance(v, mp.mpc) and v.imag != 0 for v in values)
    rows = []
    for k, v in enumerate(values):
        v = mp.mpmathify(v)
        row = [identity_weight * int(i == k) for i in range(len(values))]
        row.append(int(mp.nint(scale * mp.re(v))))
        if complex_input:
            row.append(int(mp.nint(scale * mp.im(v))))
        rows.append(row)
    return rows


def _check_tol(tol, prec: Precision):
    if mp.mpf(tol) < mp.ldexp(1, -prec.bits + 32):
        raise PrecisionTooLow(f"tol {mp.nstr(mp.mpf(tol), 5)} < 2^(-bits+32) at {prec.bits} bits")


def integer_relation(
    xs: XsLike,
    coeff_bound: int,
    tol,
    prec: Precision = DEFAULT_PRECISION,
) -> Optional[list[int]]:
    """Small integer vector ``c`` with ``|sum c_i x_i| < tol``, or ``None``.

    ``xs`` is a sequence of real or complex numbers, or a callable returning
    them at a requested precision (used for the doubled-precision recheck).
    Among reduced-basis rows meeting the bound, the one of least max-norm is
    returned.  ``None`` means nothing was found, not that no relation exists.
    """
    prec = as_precision(prec)
    _check_tol(tol, prec)
    with workprec(prec):
        tol = mp.mpf(tol)
        values = [mp.mpmathify(v) for v in _values(xs, prec)]
        m = len(values)
        reduced = lll_reduce(_embedding(values, _scale_for(tol)))
        best = None
        for row in reduced:
            c = row[:m]
            if not any(c) or max(abs(x) for x in c) > coeff_bound:
                continue
            if abs(mp.fsum(ci * v for ci, v in zip(c, values))) >= tol:
                continue
            key = (max(abs(x) for x in c), [abs(x) for x in c])
            if best is None or key < best[0]:
                best = (key, c)
    if best is None:
        return None
    c = _normalise_sign(best[1])
    hi = prec.doubled()
    with workprec(hi):
        again = [mp.mpmathify(v) for v in _values(xs, hi)]
        if abs(mp.fsum(ci * v for ci, v in zip(c, again))) >= tol:
            return None
    return c


def _normalise_sign(c: Sequence[int]) -> list[int]:
    for x in c:
        if x:
            return [-y for y in c] if x < 0 else list(c)
    return list(c)


# ---------------------------------------------------------------------------
# End(E)-relations among elliptic logarithms


def order_element_h2(u: int, v: int, D: int) -> int:
    """``H_2(u + v rho)`` for ``rho = (D + sqrt D)/2``.

    For ``v != 0`` the element is an imaginary quadratic integer with minimal
    polynomial ``X^2 - (2u + vD) X + N``; for ``v == 0`` it is the integer ``u``.
    """
    if v == 0:
        return max(1, abs(u))
    tr = 2 * u + v * D
    norm = u * u + u * v * D + v * v * (D * D - D) // 4
    return max(1, abs(tr), abs(norm))


@dataclass
class RelationCertificate:
    """Witness that ``sum (u_i + v_i rho) z_i = m1 + m2 tau`` within ``residual``."""

    u: list[int]
    v: list[int]
    m1: int
    m2: int
    residual: float
    precision_bits: int
    h2_bound: int
    disc: int
    scale: int = 0
    verified_bits: list[int] = field(default_factory=list)

    @property
    def coefficients(self) -> list[tuple[int, int]]:
        return list(zip(self.u, self.v))

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["residual"] = mp.nstr(self.residual, 6)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "RelationCertificate":
        rec = dict(rec)
        rec["residual"] = mp.mpf(rec["residual"])
        return cls(**rec)


def relation_residual(u, v, m1, m2, zs, tau, rho):
    return abs(mp.fsum((ui + vi * rho) * z for ui, vi, z in zip(u, v, zs)) - m1 - m2 * tau)


def _z_values(zs):
    return [z.z if hasattr(z, "z") else mp.mpmathify(z) for z in zs]


def find_endomorphism_relation(
    zs,
    fiber,
    budget: int,
    tol,
    prec: Precision = DEFAULT_PRECISION,
    recompute: Optional[Callable[[Precision], Sequence]] = None,
) -> Optional[RelationCertificate]:
    """Search ``(u, v, m1, m2)`` with ``|sum (u_i + v_i rho) z_i - m1 - m2 tau| < tol``.

    ``zs`` are elliptic logarithms on the fiber's lattice ``Z + tau Z`` and
    ``rho = (D + sqrt D)/2``.  Candidates must satisfy
    ``max H_2(u_i + v_i rho) <= budget``; among those, small integer
    combinations of the reduced relation rows are scanned and the minimal one
    (by ``H_2``, then preferring rational coefficients) is kept.  It is
    re-verified at doubled precision, through ``recompute(prec)`` when given
    (which must return the ``zs`` at that precision), before being returned.
    """
    prec = as_precision(prec)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    _check_tol(tol, prec)
    D = int(fiber.disc)
    with workprec(prec):
        tol = mp.mpf(tol)
        z = _z_values(zs)
        n = len(z)
        tau = fiber.tau_at(prec).value
        rho = fiber.rho_at(prec)
        basis_vals = z + [rho * x for x in z] + [mp.mpc(-1), -tau]
        scale = _scale_for(tol)
        reduced = lll_reduce(_embedding(basis_vals, scale))
        dim = 2 * n + 2
        rel_rows = []
        for row in reduced:
            c = row[:dim]
            if not any(c[: 2 * n]):
                continue
            if relation_residual(c[:n], c[n : 2 * n], c[2 * n], c[2 * n + 1], z, tau, rho) < tol:
                rel_rows.append(c)
        if not rel_rows:
            return None
        best = None
        rel_rows = rel_rows[:4]
        for combo in itertools.product(range(-2, 3), repeat=len(rel_rows)):
            if not any(combo):
                continue
            c = [sum(k * r[i] for k, r in zip(combo, rel_rows)) for i in range(dim)]
            u, v = c[:n], c[n : 2 * n]
            if not any(u) and not any(v):
                continue
            h2 = max(order_element_h2(ui, vi, D) for ui, vi in zip(u, v))
            if h2 > budget:
                continue
            m1, m2 = c[2 * n], c[2 * n + 1]
            res = relation_residual(u, v, m1, m2, z, tau, rho)
            if res >= tol:
                continue
            inter = [x for pair in zip(u, v) for x in pair]
            sign = -1 if _normalise_sign(inter) != inter else 1
            key = (h2, sum(map(abs, v)), sum(map(abs, u)), abs(m1) + abs(m2), [sign * x for x in inter])
            if best is None or key < best[0]:
                best = (key, [sign * x for x in u], [sign * x for x in v], sign * m1, sign * m2, res, h2)
    if best is None:
        return None
    _, u, v, m1, m2, res, h2 = best
    cert = RelationCertificate(u, v, m1, m2, res, prec.bits, h2, D, scale)
    hi = prec.doubled()
    if verify_certificate(cert, fiber, zs if recompute is None else recompute, hi, tol):
        cert.verified_bits.append(hi.bits)
        return cert
    return None


def verify_certificate(cert: RelationCertificate, fiber, zs, prec: Precision, tol) -> bool:
    """Recompute the membership residual from the certificate's fields at ``prec``."""
    prec = as_precision(prec)
    with workprec(prec):
        values = _z_values(zs(prec) if is_recompute(zs) else zs)
        tau = fiber.tau_at(prec).value
        rho = fiber.rho_at(prec)
        res = relation_residual(cert.u, cert.v, cert.m1, cert.m2, values, tau, rho)
        return res < mp.mpf(tol)


# ---------------------------------------------------------------------------
# coefficient budgets from the height bounds


@dataclass(frozen=True)
class BudgetConstants:
    """Implied constants and exponents of the coefficient bound.

    Defaults: every multiplicative constant 1, ``q ~ |D|^(5/2)``,
    ``t ~ |D|^(1/2)``, ``w ~ h(lambda0) + 1`` and both exponents of the
    lower bound for non-torsion heights equal to 1.
    """

    c_omega: float = 1.0
    c_q: float = 1.0
    c_eta: float = 1.0
    c_t: float = 1.0
    c_w: float = 1.0
    q_exponent: float = 2.5
    t_exponent: float = 0.5
    gamma3: float = 1.0
    gamma4: float = 1.0


def coefficient_bound(D: int, n: int, h_lambda, kappa: int, constants: BudgetConstants = BudgetConstants()):
    """Pre-rounding bound ``(2n)^(2n-1) omega (q/eta)^((2n-1)/2)`` on the integer coefficients."""
    c = constants
    absd = abs(int(D))
    kappa = max(1, int(kappa))
    with mp.workprec(128):
        t_hat = max(mp.mpf(1), c.c_t * mp.mpf(absd) ** c.t_exponent)
        omega = c.c_omega * (kappa * t_hat + kappa * mp.log(kappa))
        q_hat = c.c_q * mp.mpf(absd) ** c.q_exponent
        w_hat = c.c_w * (mp.mpf(h_lambda) + 1)
        eta = c.c_eta * mp.mpf(kappa) ** (-c.gamma3) * w_hat ** (-c.gamma4)
        return mp.mpf(2 * n) ** (2 * n - 1) * omega * (q_hat / eta) ** (mp.mpf(2 * n - 1) / 2)


def relation_search_budget(
    D: int, n: int, h_lambda, kappa: int, constants: BudgetConstants = BudgetConstants()
) -> int:
    """``H_2`` budget for coefficients ``b + rho b'`` with ``|b|, |b'|`` under :func:`coefficient_bound`.

    Uses ``H(b + rho b') <= |b| + |b'| |rho|`` and ``H_2 <= 4 H^2``.
    """
    absd = abs(int(D))
    with mp.workprec(128):
        b = mp.ceil(coefficient_bound(D, n, h_lambda, kappa, constants))
        rho_abs = mp.sqrt(mp.mpf(absd * absd + absd) / 4)
        h = max(mp.mpf(1), b * (1 + rho_abs))
        return int(mp.ceil(4 * h * h))
