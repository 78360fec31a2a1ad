import json
import math

import pytest

from pwstab.cli import main
from pwstab.errors import NotBracketed
from pwstab.sweep import (SWEEP_FIELDS, SweepConfig, cnoidal_critical, cnoidal_modulus, parse_range, read_config, region_of_row,
                          rows_to_csv, run_sweep)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_parse_range():
    assert parse_range("-1:1:5") == (-1.0, 1.0, 5)
    assert parse_range("0.3") == (0.3, 0.3, 1)
    with pytest.raises(ValueError):
        parse_range("0:1:0")


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(method="xx")
    with pytest.raises(ValueError):
        SweepConfig(tol_sign=0.0)


def test_read_config(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# fig 1\nmodel = mkdv-focusing\na-range = -1:1:3\nk = 2\n")
    assert read_config(f) == {"nonlinearity": "mkdv-focusing", "a_range": (-1.0, 1.0, 3), "k": 2}
    f.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        read_config(f)


def test_csv_schema_and_round_trip():
    cfg = SweepConfig("kdv", 1.0, (0.0, 0.0, 1), (-0.1, -0.1, 1))
    text = rows_to_csv(run_sweep(cfg), cfg)
    lines = text.splitlines()
    header = [l for l in lines if not l.startswith("#")]
    assert header[0].split(",") == list(SWEEP_FIELDS)
    row = dict(zip(SWEEP_FIELDS, header[1].split(",")))
    assert float(row["T"]) == 6.736478871550035
    assert row["index_total"] == "0" and row["status"] == "ok"
    assert any(l.startswith("# nonlinearity = kdv") for l in lines)


def test_parallel_sweep_is_byte_identical():
    cfg = SweepConfig("mkdv-focusing", 1.0, (-1, 1, 4), (-0.3, 0.6, 3))
    serial = rows_to_csv(run_sweep(cfg), cfg)
    parallel = rows_to_csv(run_sweep(SweepConfig(**{**cfg.__dict__, "jobs": 2})), cfg)
    assert serial == parallel


def test_kdv_sweep_totals_zero():
    rows = run_sweep(SweepConfig("kdv", 1.0, (-0.1, 0.1, 5), (-0.06, -0.01, 5), k=1))
    ok = [r for r in rows if r.status == "ok"]
    assert len(ok) == 25 and all(r.index_total == 0 for r in ok)


def test_non_ok_rows_have_empty_stability_fields():
    rows = run_sweep(SweepConfig("kdv", 1.0, (0.0, 0.0, 1), (0.5, 0.5, 1)))
    assert rows[0].status == "no-orbit"
    line = rows_to_csv(rows).splitlines()[1].split(",")
    assert all(v == "" for k, v in zip(SWEEP_FIELDS, line) if k in ("n_L", "index_total", "mi_class"))


def test_mkdv_region_map():
    a_n, e_n = 21, 19
    rows = run_sweep(SweepConfig("mkdv-focusing", 1.0, (-1, 1, a_n), (-0.3, 0.6, e_n)))
    labels = {}
    for r in rows:
        if r.orbit_index in (0, None):
            labels[(round(r.a, 6), round(r.E, 6))] = (region_of_row("mkdv-focusing", r), r)
    assert {"a", "b", "c", "d", "e"} <= {lab for lab, _ in labels.values()}
    # neighbours with equal sign triple and family count carry the same letter
    a_vals = sorted({k[0] for k in labels})
    e_vals = sorted({k[1] for k in labels})
    for i, a in enumerate(a_vals[:-1]):
        for j, E in enumerate(e_vals[:-1]):
            l0, r0 = labels[(a, E)]
            for nb in ((a_vals[i + 1], E), (a, e_vals[j + 1])):
                l1, r1 = labels[nb]
                if r0.status == r1.status == "ok" and (r0.signs(), r0.n_orbits) == (r1.signs(), r1.n_orbits):
                    assert l0 == l1


def test_cnoidal_critical_modulus():
    res = cnoidal_critical()
    assert 0.904 <= res.kappa_star <= 0.914
    assert res.totals == (1, 0)
    assert cnoidal_critical().kappa_star == res.kappa_star


@pytest.mark.parametrize("E", [0.05, 0.2, 0.6])
def test_cnoidal_modulus_reproduces_period(E):
    # u = u_+ cn(beta x, kappa) has period 4 K(kappa^2) / beta
    from scipy.special import ellipk
    from pwstab.integrals import compute_moments
    from pwstab.potential import Nonlinearity, WaveParameters, enumerate_orbits
    p = WaveParameters(Nonlinearity.from_model("mkdv-focusing"), 0.0, E, 1.0)
    T = compute_moments(p, enumerate_orbits(p)[0]).T
    s = math.sqrt(1 + 4 * E)
    beta = math.sqrt(s)
    assert T == pytest.approx(4 * ellipk(cnoidal_modulus(E) ** 2) / beta, rel=1e-12)


def test_cnoidal_not_bracketed():
    with pytest.raises(NotBracketed):
        cnoidal_critical(lo=0.05, hi=0.2)


# ---------------------------------------------------------------- command line

def test_cli_integrals_kdv(capsys):
    code, out = run(capsys, "integrals", "--model", "kdv", "--a", "0", "--E", "-0.1", "--c", "1")
    assert code == 0
    orb = json.loads(out)["orbits"][0]
    assert orb["T"] > 0 and orb["M"] > 0 and orb["P"] > 0


def test_cli_integrals_mkdv_two_rows(capsys):
    code, out = run(capsys, "integrals", "--model", "mkdv-focusing", "--a", "0", "--E", "-0.1")
    left, right = json.loads(out)["orbits"]
    assert left["M"] == pytest.approx(-right["M"], rel=1e-14)


def test_cli_no_orbit(capsys):
    code, out = run(capsys, "integrals", "--model", "kdv", "--E", "1")
    assert code == 2 and json.loads(out)["error"] == "NoOrbit"
    code, out = run(capsys, "integrals", "--model", "kdv", "--orbit", "3")
    assert code == 2


def test_cli_index_both(capsys):
    code, out = run(capsys, "index", "--model", "kdv", "--method", "both")
    d = json.loads(out)["orbits"][0]
    assert code == 0 and d["pf"]["index"]["total"] == 0 and d["max_rel_deviation"] < 1e-6
    assert d["pf"]["index"]["orbital_stability_sufficient"]


def test_cli_index_region_b(capsys):
    code, out = run(capsys, "index", "--model", "mkdv-focusing", "--E", "0.2")
    assert json.loads(out)["orbits"][0]["pf"]["index"]["total"] == 1


def test_cli_hypothesis_violated(capsys):
    code, out = run(capsys, "index", "--model", "mkdv-focusing", "--E", "0.337677536456")
    assert code == 5 and json.loads(out)["error"] == "HypothesisViolated"


def test_cli_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["index", "--bogus"])
    assert e.value.code == 64


def test_cli_sweep_negative_ranges(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _ = run(capsys, "sweep", "--model", "kdv", "--a-range", "-0.05:0.05:2", "--E-range", "-0.06:-0.02:2",
                  "--out", str(out))
    assert code == 0
    body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(body) == 5


def test_cli_sweep_jobs_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PWSTAB_JOBS", "2")
    out = tmp_path / "s.csv"
    run(capsys, "sweep", "--model", "mkdv-focusing", "--a-range", "-1:1:3", "--E-range", "0:0.5:2", "--out", str(out))
    monkeypatch.setenv("PWSTAB_JOBS", "1")
    out1 = tmp_path / "s1.csv"
    run(capsys, "sweep", "--model", "mkdv-focusing", "--a-range", "-1:1:3", "--E-range", "0:0.5:2", "--out", str(out1))
    assert out.read_bytes() == out1.read_bytes()


def test_cli_region(capsys):
    code, out = run(capsys, "region", "--model", "mkdv-focusing", "--a", "-0.4", "--E", "0.1")
    assert json.loads(out)["region"] == "c"


def test_cli_cnoidal(capsys):
    code, out = run(capsys, "cnoidal-critical")
    d = json.loads(out)
    assert code == 0 and abs(d["kappa_star"] - 0.909) < 0.005
    assert "u_inner" in d["convention"]


def test_cli_spectrum_mkdv_b(capsys):
    code, out = run(capsys, "spectrum", "--model", "mkdv-focusing", "--E", "0.2", "--no-krein")
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["k_R"] == 1 and rep["symmetric"]


def test_cli_evans_grid_csv(capsys):
    code, out = run(capsys, "evans-grid", "--model", "kdv", "--n", "3", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "mu_re,mu_im,D_re,D_im" and len(lines) == 10
    centre = [float(v) for v in lines[5].split(",")]
    assert centre[0] == 0 and centre[1] == 0 and math.hypot(centre[2], centre[3]) < 1e-8
