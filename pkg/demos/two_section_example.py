"""
Two constant sections
=====================

x = 2 and x = 3 on y^2 = x(x-1)(x-lambda): exact torsion check at lambda = 6,
then a relation search over the CM fibers with |D| <= 40.
"""
import random
from fractions import Fraction

import mpmath as mp

from legendre_cm import Precision
from legendre_cm.lattice import find_endomorphism_relation
from legendre_cm.legendre import Section, exact_point, torsion_certificate
from legendre_cm.quadforms import cm_fibers
from legendre_cm.scan import EXAMPLE_SECTIONS, ScanConfig, run_scan

for s in EXAMPLE_SECTIONS:
    x, y = exact_point(s, Fraction(6))
    print(s.x_num, "->", x, y, torsion_certificate(s, Fraction(6)))

# 2-torsion for comparison
print("x = 0:", torsion_certificate(Section.constant(0), Fraction(6)))

cfg = ScanConfig(d_max=40, sections=list(EXAMPLE_SECTIONS))
for rec in run_scan(cfg):
    hit = rec.result and (rec.result["u"], rec.result["v"])
    print(rec.disc, rec.form, rec.status, "deg", rec.deg_lambda, "budget", rec.budget_used, "relation", hit)

# a planted relation the engine should find: z2 = rho * z1 + 1
P = Precision(256)
fib = cm_fibers(-23, P)[0]
rng = random.Random(0)
with mp.workprec(P.working):
    z1 = mp.mpf(rng.random()) + mp.mpf(rng.random()) * fib.tau.value
    z2 = fib.rho_at(P) * z1 + 1
cert = find_endomorphism_relation([z1, z2], fib, 10**4, P.tol(128), P)
print("planted:", cert.u, cert.v, cert.m1, cert.m2, "verified at", cert.verified_bits)
