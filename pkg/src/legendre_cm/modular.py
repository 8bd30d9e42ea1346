"""Functions of the lattice modulus tau.

Conventions
-----------
* Nome ``q = exp(i pi tau)`` for theta functions, ``exp(2 pi i tau)`` for j.
* Half periods of ``Z + tau Z``: ``e1 = P(1/2)``, ``e2 = P((1 + tau)/2)``,
  ``e3 = P(tau/2)`` where ``P`` is the Weierstrass function.
* ``lambda(tau) = (e2 - e1) / (e3 - e1)``.  With those labels this equals
  ``theta4**4 / theta3**4``, so ``lambda(i) = 1/2``, ``lambda(-1/tau) = 1 - lambda``
  and ``lambda(tau + 1) = 1 / lambda``.
* ``B`` is the union of ``g D`` over the six coset representatives
  ``I, T, S, ST, TS, STS`` of ``Gamma(2)`` in ``SL2(Z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import count
from typing import Optional

import mpmath as mp

from .errors import ConsistencyError, NonConvergence, PrecisionLoss, SingularFiber
from .numerics import (
    DEFAULT_PRECISION,
    Precision,
    agm,
    as_precision,
    lost_bits,
    sum_q_series,
    to_mpc,
    workprec,
)

MIN_IMAG = mp.ldexp(1, -10)


@dataclass(frozen=True)
class TauPoint:
    value: mp.mpc

    def __post_init__(self):
        v = to_mpc(self.value)
        object.__setattr__(self, "value", v)
        if not v.imag > 0:
            raise ValueError(f"tau must lie in the upper half-plane, got {v}")

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag


def _tau_value(tau) -> mp.mpc:
    v = tau.value if isinstance(tau, TauPoint) else to_mpc(tau)
    if not v.imag > 0:
        raise ValueError(f"tau must lie in the upper half-plane, got {v}")
    return v


@dataclass(frozen=True)
class UnimodularMatrix:
    """Integer matrix ``[[p, q], [r, s]]`` of determinant one acting by Moebius maps."""

    p: int
    q: int
    r: int
    s: int

    def __post_init__(self):
        if self.p * self.s - self.q * self.r != 1:
            raise ValueError(f"determinant of {self.entries} is not 1")

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.p, self.q, self.r, self.s)

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return UnimodularMatrix(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.s, -self.q, -self.r, self.p)

    def act(self, tau):
        t = tau.value if isinstance(tau, TauPoint) else tau
        return (self.p * t + self.q) / (self.r * t + self.s)

    def automorphy(self, tau):
        """The factor ``r tau + s``."""
        t = tau.value if isinstance(tau, TauPoint) else tau
        return self.r * t + self.s

    def mod2(self) -> tuple[int, int, int, int]:
        return tuple(x % 2 for x in self.entries)

    def in_gamma2(self) -> bool:
        return self.mod2() == (1, 0, 0, 1)


IDENTITY = UnimodularMatrix(1, 0, 0, 1)
T = UnimodularMatrix(1, 1, 0, 1)
S = UnimodularMatrix(0, -1, 1, 0)

COSET_NAMES = ("I", "T", "S", "ST", "TS", "STS")
COSET_REPRESENTATIVES = (IDENTITY, T, S, S @ T, T @ S, S @ T @ S)
_COSET_BY_MOD2 = {g.mod2(): i for i, g in enumerate(COSET_REPRESENTATIVES)}

# lambda(g tau) = ANHARMONIC[i](lambda(tau)) for g = COSET_REPRESENTATIVES[i]
ANHARMONIC = (
    lambda x: x,
    lambda x: 1 / x,
    lambda x: 1 - x,
    lambda x: (x - 1) / x,
    lambda x: 1 / (1 - x),
    lambda x: x / (x - 1),
)
# inverse maps, by the same index
ANHARMONIC_INVERSE = (
    ANHARMONIC[0],
    ANHARMONIC[1],
    ANHARMONIC[2],
    ANHARMONIC[4],
    ANHARMONIC[3],
    ANHARMONIC[5],
)


@dataclass(frozen=True)
class DomainTag:
    kind: str = "StandardSL2"
    coset_index: int = 0

    def __post_init__(self):
        if self.kind not in ("StandardSL2", "GammaTwoB"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not 0 <= self.coset_index <= 5:
            raise ValueError("coset_index must be in 0..5")


# ---------------------------------------------------------------------------
# theta series


def _check_imag(t: mp.mpc):
    if t.imag < MIN_IMAG:
        raise PrecisionLoss(f"Im(tau) = {mp.nstr(t.imag, 5)} < 2^-10; reduce tau first")


def _theta_null_once(t: mp.mpc, prec: Precision):
    with workprec(prec):
        q = mp.expjpi(t)
        s2, m2 = sum_q_series(((n * (n + 1), 1) for n in count()), q, prec, with_magnitude=True)
        s3, m3 = sum_q_series(((n * n, 2 if n else 1) for n in count()), q, prec, with_magnitude=True)
        s4, m4 = sum_q_series(
            ((n * n, (-2 if n % 2 else 2) if n else 1) for n in count()), q, prec, with_magnitude=True
        )
        t2 = 2 * mp.expjpi(t / 4) * s2
    loss = max(lost_bits(s2, m2), lost_bits(s3, m3), lost_bits(s4, m4))
    return (t2, s3, s4), loss


def theta_nulls(tau, prec: Precision = DEFAULT_PRECISION):
    """``(theta2, theta3, theta4)`` at ``z = 0``, nome ``exp(i pi tau)``.

    Summed directly at ``tau``; precision is raised automatically when the
    series suffers cancellation.
    """
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    return _theta_nulls_cached(t, prec.bits, prec.guard_bits)


@lru_cache(maxsize=2048)
def _theta_nulls_cached(t, bits, guard):
    prec = Precision(bits, guard)
    work = prec
    for _ in range(6):
        vals, loss = _theta_null_once(t, work)
        if work.working - loss >= prec.bits + prec.guard_bits // 2:
            return vals
        work = Precision(prec.bits + loss + prec.guard_bits, prec.guard_bits)
        if work.bits > 16 * prec.bits:
            break
    raise PrecisionLoss(f"theta series at tau={mp.nstr(t, 10)} loses {loss} bits")


def theta_constants(tau, prec: Precision = DEFAULT_PRECISION):
    """Fourth powers ``(theta2**4, theta3**4, theta4**4)`` of the theta constants."""
    prec = as_precision(prec)
    t2, t3, t4 = theta_nulls(tau, prec)
    with workprec(prec):
        return t2**4, t3**4, t4**4


def theta_functions(z, tau, prec: Precision = DEFAULT_PRECISION):
    """Jacobi ``theta_k(pi z | tau)`` for k = 1..4, summed directly.

    Intended for ``tau`` already in the standard domain and ``z`` centred in
    the period parallelogram; callers in this package guarantee both.
    """
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    with workprec(prec):
        z = mp.mpmathify(z)
        q = mp.expjpi(t)
        w = mp.pi * z
        q4 = mp.expjpi(t / 4)
        s1 = sum_q_series(
            ((n * (n + 1), (-1) ** n * mp.sin((2 * n + 1) * w)) for n in count()), q, prec, relative=True
        )
        s2 = sum_q_series(((n * (n + 1), mp.cos((2 * n + 1) * w)) for n in count()), q, prec)
        th3 = sum_q_series(((n * n, 2 * mp.cos(2 * n * w) if n else 1) for n in count()), q, prec)
        th4 = sum_q_series(
            ((n * n, (-1) ** n * 2 * mp.cos(2 * n * w) if n else 1) for n in count()), q, prec
        )
        return 2 * q4 * s1, 2 * q4 * s2, th3, th4


# ---------------------------------------------------------------------------
# fundamental domains


def reduce_to_standard(tau, prec: Optional[Precision] = None):
    """Move ``tau`` into the standard domain ``D``.

    Returns ``(tau', g)`` with ``g tau = tau'``, ``|Re tau'| <= 1/2`` and
    ``|tau'| >= 1``.  Boundary convention: ``Re tau' in [-1/2, 1/2)`` and, on
    the unit circle, ``Re tau' <= 0``.
    """
    prec = as_precision(prec)
    t0 = _tau_value(tau)
    with workprec(prec):
        eps = mp.ldexp(1, -prec.bits + 16)
        g = IDENTITY
        t = t0
        for _ in range(100000):
            n = int(mp.nint(t.real))
            if n:
                g = UnimodularMatrix(1, -n, 0, 1) @ g
                t = t - n
            if abs(t) < 1 - eps:
                g = S @ g
                t = -1 / t
            else:
                break
        else:  # pragma: no cover - Im(tau) > 0 guarantees termination
            raise NonConvergence("standard-domain reduction did not terminate")
        t = g.act(t0)
        if abs(t.real - mp.mpf(1) / 2) <= eps:
            g = UnimodularMatrix(1, -1, 0, 1) @ g
            t = g.act(t0)
        if abs(abs(t) - 1) <= eps and t.real > eps:
            g = S @ g
            t = g.act(t0)
        return TauPoint(t), g


def reduce_to_B(tau, prec: Optional[Precision] = None):
    """Move ``tau`` into ``B`` by an element of ``Gamma(2)``.

    Returns ``(tau_B, gamma, tag)`` with ``gamma tau = tau_B``, ``gamma`` congruent
    to the identity mod 2, and ``tag.coset_index`` naming the representative
    ``r`` with ``tau_B in r D``.  Gamma(2)-equivalent inputs give identical output.
    """
    prec = as_precision(prec)
    t0 = _tau_value(tau)
    tau_d, g = reduce_to_standard(t0, prec)
    idx = _COSET_BY_MOD2[g.inverse().mod2()]
    r = COSET_REPRESENTATIVES[idx]
    gamma = r @ g
    with workprec(prec):
        out = TauPoint(gamma.act(t0)) if idx else tau_d
    return out, gamma, DomainTag("GammaTwoB", idx)


# ---------------------------------------------------------------------------
# half periods, Weierstrass P, invariants


@lru_cache(maxsize=4096)
def _reduced_data(t, bits, guard):
    prec = Precision(bits, guard)
    tau_d, g = reduce_to_standard(t, prec)
    td = tau_d.value
    th2, th3, th4 = theta_nulls(td, prec)
    with workprec(prec):
        a2, a3, a4 = th2**4, th3**4, th4**4
        c = mp.pi**2 / 3
        e = (c * (a3 + a4), c * (a2 - a4), -c * (a2 + a3))
        mu = g.automorphy(t)
    return td, g, mu, (th2, th3, th4), e


_HALF_BY_PARITY = {(1, 0): 0, (1, 1): 1, (0, 1): 2}


def half_period_values(tau, prec: Precision = DEFAULT_PRECISION):
    """``(e1, e2, e3) = (P(1/2), P((1+tau)/2), P(tau/2))`` for the lattice ``Z + tau Z``."""
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    td, g, mu, _, ed = _reduced_data(t, prec.bits, prec.guard_bits)
    a, b, c, d = g.entries
    # 1/2 -> (a - c tau')/2 and tau/2 -> (d tau' - b)/2 under z -> z / mu
    i1 = _HALF_BY_PARITY[(a % 2, c % 2)]
    i3 = _HALF_BY_PARITY[(b % 2, d % 2)]
    i2 = _HALF_BY_PARITY[((a + b) % 2, (c + d) % 2)]
    with workprec(prec):
        m2 = mu**-2
        return m2 * ed[i1], m2 * ed[i2], m2 * ed[i3]


def weierstrass_p(z, tau, prec: Precision = DEFAULT_PRECISION):
    """``(P(z), P'(z))`` for the lattice ``Z + tau Z`` via theta quotients.

    ``tau`` is moved to the standard domain and ``z`` to the centred period
    parallelogram before the theta series are summed.  Raises
    ``PrecisionLoss`` when ``z`` is a lattice point to working precision.
    """
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    td, g, mu, (th2, th3, th4), ed = _reduced_data(t, prec.bits, prec.guard_bits)
    with workprec(prec):
        w = mp.mpmathify(z) / mu
        n = mp.nint(w.imag / td.imag)
        w = w - n * td
        w = w - mp.nint(w.real)
        if abs(w) < mp.ldexp(1, -prec.bits + 8):
            raise PrecisionLoss("z is a lattice point to working precision")
        f1, f2, f3, f4 = theta_functions(w, td, prec)
        ratio = mp.pi * th3 * th4 * f2 / f1
        p = ed[0] + ratio**2
        dp = -2 * mp.pi**3 * (th2 * th3 * th4) ** 2 * f2 * f3 * f4 / f1**3
        return p * mu**-2, dp * mu**-3


def _eisenstein(q, prec: Precision, power: int):
    def coeffs():
        yield 0, 1
        for n in count(1):
            yield n, sum(d**power for d in _divisors(n))

    return sum_q_series(coeffs(), q, prec)


def _divisors(n: int):
    small = [d for d in range(1, int(n**0.5) + 1) if n % d == 0]
    return small + [n // d for d in reversed(small) if d * d != n]


def eisenstein_e4_e6(tau, prec: Precision = DEFAULT_PRECISION):
    prec = as_precision(prec)
    t = _tau_value(tau)
    with workprec(prec):
        q = mp.expjpi(2 * t)
        s3 = _eisenstein(q, prec, 3)
        s5 = _eisenstein(q, prec, 5)
        return 1 + 240 * (s3 - 1), 1 - 504 * (s5 - 1)


def weierstrass_invariants(tau, prec: Precision = DEFAULT_PRECISION):
    """``(g2, g3)`` of ``Z + tau Z`` from Eisenstein series (independent of the theta route)."""
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    tau_d, g = reduce_to_standard(t, prec)
    e4, e6 = eisenstein_e4_e6(tau_d, prec)
    with workprec(prec):
        mu = g.automorphy(t)
        return 4 * mp.pi**4 / 3 * e4 * mu**-4, 8 * mp.pi**6 / 27 * e6 * mu**-6


# ---------------------------------------------------------------------------
# lambda and j


def lambda_of_tau(tau, prec: Precision = DEFAULT_PRECISION, check: bool = True):
    """The Legendre modulus ``lambda(tau) = (e2 - e1)/(e3 - e1) = theta4^4/theta3^4``.

    The theta quotient is summed directly at ``tau``; with ``check`` it is
    compared to the half-period quotient obtained through standard-domain
    reduction and a ``ConsistencyError`` is raised on disagreement.
    """
    prec = as_precision(prec)
    _, t3, t4 = theta_nulls(tau, prec)
    with workprec(prec):
        lam = (t4 / t3) ** 4
        if check:
            e1, e2, e3 = half_period_values(tau, prec)
            other = (e2 - e1) / (e3 - e1)
            if abs(lam - other) > prec.tol(16) * max(1, abs(lam)):
                raise ConsistencyError(
                    f"lambda mismatch at tau={mp.nstr(_tau_value(tau), 10)}: {mp.nstr(lam, 10)} vs {mp.nstr(other, 10)}"
                )
    return lam


def j_from_lambda(lam):
    return 256 * (1 - lam + lam**2) ** 3 / (lam**2 * (1 - lam) ** 2)


def _pentagonal_terms():
    yield 0, 1
    for m in count(1):
        sign = -1 if m % 2 else 1
        yield m * (3 * m - 1) // 2, sign
        yield m * (3 * m + 1) // 2, sign


def j_of_tau(tau, prec: Precision = DEFAULT_PRECISION, check: bool = True):
    """Klein's ``j(tau)`` from its q-expansion ``E4^3 / Delta``.

    ``Delta = q prod(1 - q^n)^24`` is summed through Euler's pentagonal series.
    With ``check`` the value is compared against the rational expression in
    ``lambda(tau)``; disagreement beyond ``2^(-bits+16)`` (relative) raises.
    """
    prec = as_precision(prec)
    t = _tau_value(tau)
    _check_imag(t)
    tau_d, _ = reduce_to_standard(t, prec)
    e4, _ = eisenstein_e4_e6(tau_d, prec)
    with workprec(prec):
        q = mp.expjpi(2 * tau_d.value)
        eta24 = sum_q_series(_pentagonal_terms(), q, prec) ** 24
        j = e4**3 / (q * eta24)
        if check:
            lam = lambda_of_tau(tau_d, prec, check=False)
            other = j_from_lambda(lam)
            # the rational expression loses bits as lambda approaches 0 or 1
            amplify = 1 + 1 / abs(lam) + 1 / abs(1 - lam)
            if abs(j - other) > prec.tol(16) * amplify * max(1, abs(j)):
                raise ConsistencyError(
                    f"j mismatch at tau={mp.nstr(t, 10)}: {mp.nstr(j, 15)} vs {mp.nstr(other, 15)}"
                )
    return j


def _period_ratio(mu, prec: Precision, flip: bool):
    with workprec(prec):
        r1 = mp.sqrt(mu)
        r2 = mp.sqrt(1 - mu)
        if flip:
            r1 = -r1
        return 1j * agm(1, r1, prec) / agm(1, r2, prec)


def tau_of_lambda(lam0, prec: Precision = DEFAULT_PRECISION) -> TauPoint:
    """Invert ``lambda``: the unique ``tau_0`` in ``B`` with ``lambda(tau_0) = lam0``.

    Uses the period ratio ``i M(1, sqrt(mu)) / M(1, sqrt(1 - mu))`` for the
    anharmonic image ``mu`` of ``lam0`` closest to 1/2, maps back by the
    matching coset representative and reduces into ``B``.  Every candidate is
    checked by evaluating ``lambda``.
    """
    prec = as_precision(prec)
    with workprec(prec):
        lam0 = mp.mpc(lam0)
        if abs(lam0) <= prec.tol(16) or abs(lam0 - 1) <= prec.tol(16):
            raise SingularFiber(f"lambda = {mp.nstr(lam0, 10)} is a singular fiber")
        images = []
        for idx in range(6):
            mu = ANHARMONIC_INVERSE[idx](lam0)
            images.append((max(abs(mu), abs(1 - mu)), idx, mu))
        images.sort(key=lambda item: (item[0], item[1]))
        tol = prec.tol(24) * max(1, abs(lam0))
        for _, idx, mu in images:
            for flip in (False, True):
                try:
                    t_mu = _period_ratio(mu, prec, flip)
                except (NonConvergence, ZeroDivisionError):
                    continue
                if not t_mu.imag > 0:
                    continue
                cand = COSET_REPRESENTATIVES[idx].act(t_mu)
                try:
                    tau_b, _, _ = reduce_to_B(cand, prec)
                    val = lambda_of_tau(tau_b, prec, check=False)
                except PrecisionLoss:
                    continue
                if abs(val - lam0) <= tol:
                    return tau_b
    raise NonConvergence(f"could not invert lambda at {mp.nstr(lam0, 10)}")
