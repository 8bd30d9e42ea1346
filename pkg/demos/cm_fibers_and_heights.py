"""
CM fibers and their heights
===========================

Reduced forms of a discriminant, the lambda-values over them, and how big those
algebraic numbers are.
"""
import mpmath as mp

from legendre_cm import Precision
from legendre_cm.heights import fiber_height_report, induced_j_polynomial
from legendre_cm.quadforms import class_number, class_number_growth_exponent, cm_fibers, reduced_forms

P = Precision(256)
D = -15

print("reduced forms of", D, ":", [f.as_tuple() for f in reduced_forms(D)])

for fib in cm_fibers(D, P):
    rep = fiber_height_report(fib, P)
    print(fib.form.as_tuple(), "lambda0 =", mp.nstr(fib.lambda0, 15))
    print("  minimal polynomial:", fib.lambda_minpoly.coeffs)
    print("  h(lambda0) = %.6f  H(tau0) = %.4f  degree %d" % (rep.h_lambda, rep.H_tau, rep.deg_lambda))

# pushing the lambda polynomial through j(lambda) recovers the Hilbert class polynomial
print("j-polynomial:", induced_j_polynomial(fib.lambda_minpoly, P).coeffs)

# class numbers grow roughly like |D|^(1/2)
for bound in (1000, 5000):
    print("growth exponent up to", bound, "= %.3f" % class_number_growth_exponent(bound))
print("h(-4004) =", class_number(-4004))
