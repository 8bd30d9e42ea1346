import csv
import io
import json

import mpmath as mp
import pytest

from legendre_cm.cli import main
from legendre_cm.errors import ConfigError
from legendre_cm.lattice import RelationCertificate
from legendre_cm.legendre import Section, dump_sections, elliptic_log, specialize
from legendre_cm.numerics import Precision
from legendre_cm.quadforms import class_number, cm_fibers, valid_discriminants
from legendre_cm.scan import ScanConfig, ScanRecord, run_example, run_scan, verify_claims, write_scan


def _scan(d_max, sections, **kw):
    return list(run_scan(ScanConfig(d_max=d_max, sections=sections, **kw)))


def test_smallest_discriminants():
    recs = _scan(4, [Section.constant(2)])
    assert [(r.disc, r.class_number) for r in recs] == [(-3, 1), (-4, 1)]
    assert all(r.status == "ok" for r in recs)


def test_record_count_is_sum_of_class_numbers():
    recs = _scan(40, [Section.constant(3)])
    assert len(recs) == sum(class_number(d) for d in valid_discriminants(40))


def test_two_torsion_section_gives_integer_relation():
    for rec in _scan(20, [Section.constant(0)]):
        assert rec.status == "ok"
        assert rec.result["u"] == [2] and rec.result["v"] == [0]


def test_certificates_reverify_from_serialised_fields():
    recs = _scan(20, [Section.constant(0), Section((0, 1))])
    checked = 0
    for rec in recs:
        line = ScanRecord.from_json(rec.to_json())
        cert = RelationCertificate.from_record(line.result)
        fiber = next(f for f in cm_fibers(line.disc) if list(f.form.as_tuple()) == line.form)
        hi = Precision(2 * line.precision_bits)
        sections = [Section.constant(0), Section((0, 1))]

        def zs(p, fiber=fiber):
            tau = fiber.tau_at(p)
            lam = fiber.lambda_at(p)
            return [elliptic_log(specialize(s, lam, p), tau, p) for s in sections]

        # logs are only defined modulo the lattice, so check membership rather than m1, m2
        with mp.workprec(hi.working):
            vals = [w.z for w in zs(hi)]
            tau, rho = fiber.tau_at(hi).value, fiber.rho_at(hi)
            s = mp.fsum((a + b * rho) * z for a, b, z in zip(cert.u, cert.v, vals))
            x = s.imag / tau.imag
            assert abs(x - mp.nint(x)) < hi.tol(hi.bits // 2)
            y = s.real - x * tau.real
            assert abs(y - mp.nint(y)) < hi.tol(hi.bits // 2)
        checked += 1
    assert checked == len(recs)


def test_scan_is_deterministic_across_jobs():
    secs = [Section.constant(2), Section.constant(3)]
    one = io.StringIO()
    write_scan(ScanConfig(d_max=30, sections=secs, jobs=1), one)
    three = io.StringIO()
    write_scan(ScanConfig(d_max=30, sections=secs, jobs=3), three)
    assert one.getvalue() == three.getvalue()
    assert '"timings":null' in one.getvalue()


def test_config_validation():
    with pytest.raises(ConfigError):
        ScanConfig(d_max=2, sections=[Section.constant(2)])
    with pytest.raises(ConfigError):
        ScanConfig(d_max=20, sections=[])
    with pytest.raises(ConfigError):
        ScanConfig(d_max=20, sections=[Section.constant(2)], tol_exp=250)


def test_all_orbit_multiplies_records():
    recs = _scan(8, [Section.constant(2)], all_orbit=True)
    assert len(recs) == 6 * sum(class_number(d) for d in valid_discriminants(8))


def test_cli_exit_codes(tmp_path, capsys):
    secs = tmp_path / "s.json"
    dump_sections([Section.constant(2)], secs)
    out = tmp_path / "scan.jsonl"
    assert main(["scan", "--dmax", "12", "--sections", str(secs), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == sum(class_number(d) for d in valid_discriminants(12))
    assert json.loads(lines[0])["disc"] == -3
    assert main(["scan", "--dmax", "1", "--sections", str(secs)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('[{"x_num": "two"}]')
    assert main(["scan", "--dmax", "12", "--sections", str(bad)]) == 2
    assert main(["scan", "--dmax", "12", "--sections", str(secs), "--constant", "nonsense=1"]) == 2
    assert main(["fiber", "--disc", "-5"]) == 2
    assert main(["fiber", "--disc", "-23"]) == 0
    assert "lambda" in capsys.readouterr().out


def test_verify_claims_table():
    table = verify_claims(60, growth_d_max=2000)
    rows = list(csv.reader(io.StringIO(table.to_csv())))
    assert rows[0] == ["disc", "class_number", "h_lambda", "H_tau", "deg_lambda"]
    body = [r for r in rows[1:] if r[0] != "summary"]
    assert len(body) == sum(class_number(d) for d in valid_discriminants(60))
    summary = {r[1]: r[2] for r in rows if r[0] == "summary"}
    assert 0.3 <= float(summary["class_number_exponent"]) <= 0.7
    assert summary["degree_failures"] == "0"


def test_example_report_small():
    rep = run_example(d_max=12)
    assert [p["torsion"] for p in rep["points"]] == ["infinite order", "infinite order"]
    assert all(p["on_curve"] for p in rep["points"])
    assert rep["scan"]["errors"] == 0 and rep["scan"]["withdrawn"] == 0
