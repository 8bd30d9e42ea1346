"""CM fibers of the Legendre family and End-linear relations among specialised sections."""

from .errors import LegendreCMError
from .heights import AlgebraicNumber, IntPolynomial, d_height, minpoly_from_approx, weil_height
from .lattice import find_endomorphism_relation, integer_relation, lll_reduce, relation_search_budget
from .legendre import INFINITY, AffinePoint, LatticeCoordinate, Section, add, elliptic_log, point_of_z, specialize
from .legendre import torsion_certificate
from .modular import TauPoint, j_of_tau, lambda_of_tau, reduce_to_B, tau_of_lambda, weierstrass_p
from .numerics import Precision
from .quadforms import CMFiber, Discriminant, QuadraticForm, class_number, cm_fibers, reduced_forms
from .scan import ScanConfig, run_example, run_scan, verify_claims

__version__ = "0.1.0"
