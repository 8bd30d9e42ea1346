import random

import flint
import mpmath as mp
import pytest

from legendre_cm.numerics import Precision

ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"ACCEPTANCE {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def prec():
    return Precision(256)


@pytest.fixture
def rng():
    return random.Random(20240611)


def flint_wp(z, tau, bits=320):
    """Weierstrass P from Arb, used as an independent oracle."""
    old = flint.ctx.prec
    flint.ctx.prec = bits
    try:
        with mp.workprec(bits):
            zz = flint.acb(mp.nstr(mp.mpc(z).real, bits // 3), mp.nstr(mp.mpc(z).imag, bits // 3))
            tt = flint.acb(mp.nstr(mp.mpc(tau).real, bits // 3), mp.nstr(mp.mpc(tau).imag, bits // 3))
            w = zz.elliptic_p(tt)
            return mp.mpc(mp.mpf(w.real.mid().str(bits // 3, radius=False)), mp.mpf(w.imag.mid().str(bits // 3, radius=False)))
    finally:
        flint.ctx.prec = old


def planted_logs(fiber, n, kind, rng):
    """A ``prec -> zs`` callable with a planted relation of the given kind.

    ``kind`` is ``"Z"`` (rational coefficients) or ``"rho"`` (the last
    coefficient involves rho).  Free logs are fixed dyadic rationals so every
    precision sees the same numbers.  Returns the callable and the planted
    ``(u, v, m1, m2)``.
    """
    free = [(rng.getrandbits(900), rng.getrandbits(900)) for _ in range(n - 1)]
    a = [rng.randint(-3, 3) for _ in range(n - 1)]
    m1, m2 = rng.randint(-3, 3), rng.randint(-3, 3)
    k = rng.randint(2, 5)

    def zs(p):
        with mp.workprec(p.working):
            tau = fiber.tau_at(p).value
            rho = fiber.rho_at(p)
            base = [mp.ldexp(x, -900) + mp.ldexp(y, -900) * tau for x, y in free]
            lattice = m1 + m2 * tau
            if n == 1:
                lead = k if kind == "Z" else rho + k
                return [lattice / lead]
            last = sum((ai * z for ai, z in zip(a, base)), lattice)
            if kind == "rho":
                last += rho * base[0]
            return base + [last]

    if n == 1:
        u, v = ([k], [0]) if kind == "Z" else ([k], [1])
    else:
        u = [-ai for ai in a] + [1]
        v = [-1 if (kind == "rho" and i == 0) else 0 for i in range(n - 1)] + [0]
    return zs, (u, v, m1, m2)
