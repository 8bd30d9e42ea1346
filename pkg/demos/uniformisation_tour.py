"""
The Legendre family from the analytic side
==========================================

lambda(tau), the map z -> (x, y) onto y^2 = x(x-1)(x-lambda), and its inverse.
Run with ``python3 demos/uniformisation_tour.py``.
"""
import mpmath as mp

from legendre_cm import Precision
from legendre_cm.legendre import add, elliptic_log, lattice_distance, point_of_z
from legendre_cm.modular import TauPoint, j_of_tau, lambda_of_tau, reduce_to_B

P = Precision(256)

# anchors: the square lattice sits over lambda = 1/2, j = 1728
i = TauPoint(mp.mpc(0, 1))
print("lambda(i) =", mp.nstr(lambda_of_tau(i, P), 30))
print("j(i)      =", mp.nstr(j_of_tau(i, P), 30))

# a point far from the domain B gets pulled back, lambda is unchanged
tau = TauPoint(mp.mpc("0.31", "0.007"))
reduced, gamma, tag = reduce_to_B(tau, P)
print("reduced tau:", mp.nstr(reduced.value, 12), "coset", tag.coset_index)
print("lambda before/after:", mp.nstr(lambda_of_tau(tau, P), 12), mp.nstr(lambda_of_tau(reduced, P), 12))

# the point attached to z, and back again
tau = TauPoint(mp.mpc("0.2", "1.1"))
lam = lambda_of_tau(tau, P)
with mp.workprec(P.working):
    z1 = mp.mpf("0.3") + mp.mpf("0.2") * tau.value
    z2 = mp.mpf("0.55") + mp.mpf("0.71") * tau.value
pt = point_of_z(z1, P, tau=tau)
print("P(z1) =", mp.nstr(pt.x, 15), mp.nstr(pt.y, 15))
print("log P(z1) =", mp.nstr(elliptic_log(pt, tau, P).z, 15))

# the group law is addition of logarithms
s = add(point_of_z(z1, P, tau=tau), point_of_z(z2, P, tau=tau), lam, P)
w = elliptic_log(s, tau, P)
with mp.workprec(P.working):
    print("log(P+Q) - z1 - z2 mod lattice:", mp.nstr(lattice_distance(w.z - z1 - z2, tau.value), 3))
