"""Fiber scans, claim tables and the two-section example.

Records are plain dicts serialised as JSON lines with sorted keys.  Reals are
decimal strings tagged with their digit count; integers stay exact.  Output
order depends only on the configuration, never on the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

import mpmath as mp

from .errors import ConfigError, LegendreCMError, NearSingularSlope, NotOnCurve, PoleOfSection, PrecisionLoss
from .heights import fiber_height_report
from .lattice import BudgetConstants, RelationCertificate, find_endomorphism_relation, relation_search_budget, verify_certificate
from .legendre import (
    Section,
    elliptic_log,
    exact_point,
    lattice_reduce_centered,
    specialize,
    torsion_certificate,
    Finite,
    QuadFieldElement,
)
from .numerics import Precision, complex_to_record, decimal_string, workprec
from .quadforms import CMFiber, QuadraticForm, class_number, cm_fibers, reduced_forms, valid_discriminants
from .quadforms import class_number_growth_exponent

DEFAULT_BUDGET_CAP = 10**6
SKIP_ERRORS = (PoleOfSection, PrecisionLoss, NearSingularSlope, NotOnCurve)


@dataclass
class ScanConfig:
    d_max: int
    sections: list = field(default_factory=list)
    precision_bits: int = 256
    tol_exp: Optional[int] = None
    budget_constants: BudgetConstants = field(default_factory=BudgetConstants)
    budget_cap: int = DEFAULT_BUDGET_CAP
    jobs: int = 1
    out: Optional[str] = None
    all_orbit: bool = False
    d_min: int = 3
    timings: bool = False

    def __post_init__(self):
        if not isinstance(self.d_max, int) or self.d_max < 3:
            raise ConfigError("d_max must be an integer >= 3")
        if not self.sections:
            raise ConfigError("at least one section is required")
        if self.budget_cap < 1:
            raise ConfigError("budget cap must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")
        try:
            Precision(self.precision_bits)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.tol_exp is None:
            self.tol_exp = self.precision_bits // 2
        if self.tol_exp > self.precision_bits - 32 or self.tol_exp < 8:
            raise ConfigError("tol exponent must lie in [8, bits - 32]")

    @property
    def precision(self) -> Precision:
        return Precision(self.precision_bits)

    def describe(self) -> dict:
        return {
            "d_max": self.d_max,
            "d_min": self.d_min,
            "sections": [s.to_record() for s in self.sections],
            "precision_bits": self.precision_bits,
            "tol_exp": self.tol_exp,
            "budget_cap": self.budget_cap,
            "budget_constants": vars(self.budget_constants),
            "all_orbit": self.all_orbit,
        }


@dataclass
class ScanRecord:
    """One (discriminant, form[, coset]) row of a scan."""

    disc: int
    form: list
    coset_index: int
    tau: dict
    lambda0: dict
    class_number: int
    status: str = "ok"
    lambda_minpoly: Optional[list] = None
    deg_lambda: Optional[int] = None
    h_lambda: Optional[str] = None
    H_tau: Optional[str] = None
    budget_formula: Optional[int] = None
    budget_used: Optional[int] = None
    tol_exp: Optional[int] = None
    precision_bits: Optional[int] = None
    result: Optional[dict] = None
    withdrawn: list = field(default_factory=list)
    reason: Optional[str] = None
    timings: Optional[dict] = None

    def to_dict(self) -> dict:
        return dict(vars(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ScanRecord":
        return cls(**json.loads(line))

    @property
    def hard_error(self) -> bool:
        return self.status == "error"


def _fiber_base(fiber: CMFiber, prec: Precision) -> dict:
    digits = prec.digits()
    return {
        "disc": int(fiber.disc),
        "form": list(fiber.form.as_tuple()),
        "coset_index": fiber.coset_index,
        "tau": complex_to_record(fiber.tau.value, digits),
        "lambda0": complex_to_record(fiber.lambda0, digits),
        "class_number": class_number(fiber.disc),
    }


def fiber_record(fiber: CMFiber, prec: Precision) -> dict:
    """Serialisable description of a fiber including its exact lambda0 data."""
    rec = _fiber_base(fiber, prec)
    hl = fiber_height_report(fiber, prec)
    digits = prec.digits()
    rec.update(
        {
            "lambda_minpoly": list(fiber.lambda_minpoly.coeffs),
            "deg_lambda": hl.deg_lambda,
            "h_lambda": decimal_string(hl.h_lambda, digits),
            "H_tau": decimal_string(hl.H_tau, digits),
            "tau_form": list(fiber.tau_form.as_tuple()),
            "orbit_matrix": list(fiber.orbit_matrix.entries),
            "precision_bits": prec.bits,
        }
    )
    return rec


def _logs(fiber: CMFiber, sections: Sequence[Section], prec: Precision):
    lam = fiber.lambda0 if prec == fiber.precision else fiber.lambda_at(prec)
    tau = fiber.tau if prec == fiber.precision else fiber.tau_at(prec)
    return [elliptic_log(specialize(s, lam, prec), tau, prec).z for s in sections]


def _aligned_logs(fiber: CMFiber, sections, reference):
    # Recomputed logarithms can land on a different lattice translate near the
    # edges of the fundamental parallelogram; move each onto the translate
    # nearest the reference value so integer parts of certificates still apply.
    def compute(prec: Precision):
        zs = _logs(fiber, sections, prec)
        with workprec(prec):
            tau = fiber.tau_at(prec).value
            return [z - (z - r - lattice_reduce_centered(z - r, tau)) for z, r in zip(zs, reference)]

    return compute


def scan_fiber(fiber: CMFiber, cfg: ScanConfig) -> ScanRecord:
    prec = cfg.precision
    rec = _fiber_base(fiber, prec)
    rec.update({"tol_exp": cfg.tol_exp, "precision_bits": prec.bits})
    clock = {}
    t0 = time.perf_counter()
    try:
        hl = fiber_height_report(fiber, prec)
        rec["lambda_minpoly"] = list(fiber.lambda_minpoly.coeffs)
        rec["deg_lambda"] = hl.deg_lambda
        rec["h_lambda"] = decimal_string(hl.h_lambda, prec.digits())
        rec["H_tau"] = decimal_string(hl.H_tau, prec.digits())
        clock["heights"] = time.perf_counter() - t0
        n = len(cfg.sections)
        formula = relation_search_budget(int(fiber.disc), n, hl.h_lambda, 2 * hl.deg_lambda, cfg.budget_constants)
        budget = min(formula, cfg.budget_cap)
        rec["budget_formula"] = formula
        rec["budget_used"] = budget
        try:
            zs = _logs(fiber, cfg.sections, prec)
        except SKIP_ERRORS as exc:
            rec["status"] = "skipped"
            rec["reason"] = f"{type(exc).__name__}: {exc}"
            return _finish(rec, clock, t0, cfg)
        clock["logs"] = time.perf_counter() - t0
        tol = mp.ldexp(1, -cfg.tol_exp)
        recompute = _aligned_logs(fiber, cfg.sections, zs)
        cert = find_endomorphism_relation(zs, fiber, budget, tol, prec, recompute=recompute)
        clock["search"] = time.perf_counter() - t0
        if cert is not None:
            hi = prec.scaled(4)
            if verify_certificate(cert, fiber, recompute, hi, tol):
                cert.verified_bits.append(hi.bits)
                rec["result"] = cert.to_record()
            else:
                rec["withdrawn"].append({"certificate": cert.to_record(), "reason": f"failed at {hi.bits} bits"})
    except SKIP_ERRORS as exc:
        rec["status"] = "skipped"
        rec["reason"] = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # recorded, never fatal for the scan
        rec["status"] = "error"
        rec["reason"] = f"{type(exc).__name__}: {exc}"
    return _finish(rec, clock, t0, cfg)


def _finish(rec, clock, t0, cfg) -> ScanRecord:
    if cfg.timings:
        clock["total"] = time.perf_counter() - t0
        rec["timings"] = {k: round(v, 4) for k, v in clock.items()}
    return ScanRecord(**rec)


def scan_discriminant(D: int, cfg: ScanConfig) -> list[ScanRecord]:
    prec = cfg.precision
    try:
        fibers = cm_fibers(D, prec, all_orbit=cfg.all_orbit)
    except Exception as exc:
        return [
            ScanRecord(
                disc=D, form=list(f.as_tuple()), coset_index=0, tau={}, lambda0={},
                class_number=class_number(D), status="error", reason=f"{type(exc).__name__}: {exc}",
            )
            for f in reduced_forms(D)
        ]
    records = [scan_fiber(f, cfg) for f in fibers]
    records.sort(key=lambda r: (tuple(r.form), r.coset_index))
    return records


def _scan_worker(args):
    D, cfg = args
    return [r.to_dict() for r in scan_discriminant(D, cfg)]


def run_scan(cfg: ScanConfig) -> Iterator[ScanRecord]:
    """Records for every reduced form with ``d_min <= |D| <= d_max``, ordered by ``|D|`` then form."""
    discs = [int(d) for d in valid_discriminants(cfg.d_max, cfg.d_min)]
    if cfg.jobs == 1:
        for D in discs:
            yield from scan_discriminant(D, cfg)
        return
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        for batch in pool.map(_scan_worker, [(D, cfg) for D in discs], chunksize=1):
            for rec in batch:
                yield ScanRecord(**rec)


def write_scan(cfg: ScanConfig, stream: io.TextIOBase) -> int:
    """Write one JSON line per record; returns the number of hard errors."""
    errors = 0
    for rec in run_scan(cfg):
        stream.write(rec.to_json() + "\n")
        errors += rec.hard_error
    stream.flush()
    return errors


# ---------------------------------------------------------------------------
# claim table


@dataclass
class ClaimsTable:
    rows: list
    class_number_exponent: float
    max_h_lambda_ratio: float
    max_log_H_tau_ratio: float
    degree_failures: int
    growth_range: tuple

    def summary(self) -> dict:
        return {
            "class_number_exponent": self.class_number_exponent,
            "max_h_lambda_over_sqrt_D": self.max_h_lambda_ratio,
            "max_log_H_tau_over_log_D": self.max_log_H_tau_ratio,
            "degree_failures": self.degree_failures,
            "growth_range": list(self.growth_range),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["disc", "class_number", "h_lambda", "H_tau", "deg_lambda"])
        for r in self.rows:
            w.writerow([r["disc"], r["class_number"], r["h_lambda"], r["H_tau"], r["deg_lambda"]])
        for k, v in self.summary().items():
            if isinstance(v, list):
                v = "-".join(map(str, v))
            w.writerow(["summary", k, v, "", ""])
        return buf.getvalue()


def verify_claims(d_max: int, prec: Precision = Precision(256), growth_d_max: int = 10_000) -> ClaimsTable:
    """Per-fiber height data for ``|D| <= d_max`` plus the fitted growth statistics.

    The class-number exponent only needs class numbers, so it is fitted over
    the wider range ``|D| <= max(d_max, growth_d_max)``.
    """
    if d_max < 3:
        raise ConfigError("d_max must be >= 3")
    rows = []
    max_h = 0.0
    max_tau = 0.0
    failures = 0
    for disc in valid_discriminants(d_max):
        D = int(disc)
        for fiber in cm_fibers(D, prec):
            try:
                hl = fiber_height_report(fiber, prec)
            except LegendreCMError:
                failures += 1
                continue
            h = class_number(D)
            rows.append(
                {
                    "disc": D,
                    "class_number": h,
                    "h_lambda": decimal_string(hl.h_lambda, 12),
                    "H_tau": decimal_string(hl.H_tau, 12),
                    "deg_lambda": hl.deg_lambda,
                }
            )
            max_h = max(max_h, float(hl.h_lambda) / math.sqrt(-D))
            max_tau = max(max_tau, math.log(float(hl.H_tau)) / math.log(-D))
    top = max(d_max, growth_d_max)
    slope = class_number_growth_exponent(top)
    return ClaimsTable(rows, slope, max_h, max_tau, failures, (3, top))


# ---------------------------------------------------------------------------
# the two-section example


EXAMPLE_SECTIONS = (Section.constant(2), Section.constant(3))


def run_example(
    lam: Fraction = Fraction(6),
    d_max: int = 100,
    precision_bits: int = 256,
    jobs: int = 1,
) -> dict:
    """Exact torsion check of the constant sections ``x = 2`` and ``x = 3`` at ``lam``,
    then a relation scan over CM fibers with ``|D| <= d_max``."""
    lam = Fraction(lam)
    report = {"lambda": str(lam), "sections": [s.to_record() for s in EXAMPLE_SECTIONS], "points": []}
    for s in EXAMPLE_SECTIONS:
        x, y = exact_point(s, lam)
        x_q = Fraction(x.p, x.r)
        rhs = x_q * (x_q - 1) * (x_q - lam)
        on_curve = y * y == QuadFieldElement.rational(rhs, y.d)
        t0 = time.perf_counter()
        cert = torsion_certificate(s, lam)
        elapsed = time.perf_counter() - t0
        report["points"].append(
            {
                "x": str(x_q),
                "y": {"sqrt_d": y.d, "coefficient": str(Fraction(y.q, y.r)) if y.d != 1 else str(Fraction(y.p, y.r))},
                "on_curve": on_curve,
                "torsion": f"finite order {cert.order}" if isinstance(cert, Finite) else "infinite order",
                "certificate_under_one_second": elapsed < 1.0,
            }
        )
    cfg = ScanConfig(d_max=d_max, sections=list(EXAMPLE_SECTIONS), precision_bits=precision_bits, jobs=jobs)
    records = [r.to_dict() for r in run_scan(cfg)]
    report["scan"] = {
        "config": cfg.describe(),
        "records": records,
        "fibers": len(records),
        "certificates": sum(r["result"] is not None for r in records),
        "withdrawn": sum(len(r["withdrawn"]) for r in records),
        "skipped": sum(r["status"] == "skipped" for r in records),
        "errors": sum(r["status"] == "error" for r in records),
    }
    return report
