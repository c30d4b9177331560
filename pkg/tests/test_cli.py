import subprocess
import sys


from decoyrate import io
from decoyrate.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_ZERO_KEY, main

CFG = "fixtures/s1-87km-4int.toml"
COUNTS = "fixtures/s2-87km-4int.csv"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def cli(*argv, stdin=None):
    return subprocess.run([sys.executable, "-m", "decoyrate", *argv], input=stdin,
                          capture_output=True, text=True)


def test_rate_table(capsys):
    code, out, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS)
    assert code == EXIT_OK
    assert out.startswith("variant") and "R_per_pulse" in out and "bps" in out


def test_rate_kv_matches_library(capsys):
    from decoyrate import worst_case_rate
    code, out, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS, "--format", "kv")
    rec = io.parse_records(out)
    cfg, system = io.parse_config(CFG)
    rep = worst_case_rate(io.parse_counts(COUNTS), cfg, system)
    assert float(rec["R_per_pulse"]) == rep.R
    assert float(rec["bps"]) == rep.R * 625e6


def test_rate_csv(capsys):
    code, out, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS, "--format", "csv")
    header, row = out.strip().split("\n")
    assert header.split(",")[:2] == ["variant", "R_per_pulse"]
    assert row.startswith("4int,")


def test_rate_settings_flags(capsys):
    _, a, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS, "--format", "kv")
    _, b, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS, "--format", "kv",
                  "--chernoff-arg", "paper-literal", "--theta-log-base", "2")
    ra, rb = io.parse_records(a), io.parse_records(b)
    assert rb["chernoff_arg"] == "paper-literal" and rb["theta_log_base"] == "2"
    assert ra["R_per_pulse"] != rb["R_per_pulse"]


def test_efficiency_override(capsys):
    _, a, _ = run(capsys, "simulate", "--config", CFG, "--distance", "87")
    _, b, _ = run(capsys, "simulate", "--config", CFG, "--distance", "87", "--eta-x", "0.01")
    assert a != b and "# eta_x: 0.01" in b


def test_strict_zero_key(capsys):
    code, out, _ = run(capsys, "rate", "--config", "fixtures/s1-126km-3int-sym.toml",
                       "--counts", "fixtures/s2-126km-3int-sym.csv", "--strict", "--format", "kv")
    rec = io.parse_records(out)
    if float(rec["R_per_pulse"]) == 0.0:
        assert code == EXIT_ZERO_KEY
    else:
        assert code == EXIT_OK


def test_strict_zero_key_forced(capsys, tmp_path):
    # a 150 km 4int measurement scored at one hundredth of its pulses has no key
    cfg = tmp_path / "c.toml"
    cfg.write_text(io.resolve("fixtures/s1-150km-4int.toml").read_text().replace("nt = 1e10", "nt = 1e8", 1))
    code, _, _ = run(capsys, "rate", "--config", str(cfg), "--counts", "fixtures/s2-150km-4int.csv", "--strict")
    assert code == EXIT_ZERO_KEY
    code, _, _ = run(capsys, "rate", "--config", str(cfg), "--counts", "fixtures/s2-150km-4int.csv")
    assert code == EXIT_OK


def test_usage_errors(capsys):
    assert run(capsys, "rate", "--config", CFG)[0] == EXIT_USAGE
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "optimize", "--distance", "87", "--variant", "5int")[0] == EXIT_USAGE
    assert run(capsys, "rate", "--config", "fixtures/t1-system.toml", "--counts", COUNTS)[0] == EXIT_USAGE
    assert run(capsys, "sweep", "--from", "100", "--to", "50")[0] == EXIT_USAGE
    assert run(capsys, "compare", "x.kv")[0] == EXIT_USAGE


def test_data_errors(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text(io.resolve(COUNTS).read_text().replace("X2,X,5709.1,143.9", "X2,X,100,200"))
    code, _, err = run(capsys, "rate", "--config", CFG, "--counts", str(bad))
    assert code == EXIT_DATA and "error 200 > total 100" in err
    code, _, err = run(capsys, "rate", "--config", "fixtures/s1-87km-3int-sym.toml", "--counts", COUNTS)
    assert code == EXIT_DATA and "VAC" in err
    code, _, _ = run(capsys, "rate", "--config", str(tmp_path / "missing.toml"), "--counts", COUNTS)
    assert code == EXIT_DATA


def test_simulate_expected_and_sampled(capsys):
    code, out, _ = run(capsys, "simulate", "--config", CFG, "--distance", "87")
    assert code == EXIT_OK and "# label: expected" in out
    t = io.parse_counts_text(out)
    assert len(t.cells) == 8
    _, s1, _ = run(capsys, "simulate", "--config", CFG, "--distance", "87", "--seed", "7")
    _, s2, _ = run(capsys, "simulate", "--config", CFG, "--distance", "87", "--seed", "7")
    assert s1 == s2 and "seed=7" in s1


def test_out_flag(capsys, tmp_path):
    dest = tmp_path / "r.kv"
    code, out, _ = run(capsys, "rate", "--config", CFG, "--counts", COUNTS, "--format", "kv", "--out", str(dest))
    assert code == EXIT_OK and out == ""
    assert "R_per_pulse=" in dest.read_text()


def test_pipe_simulate_into_rate():
    results = []
    for _ in range(2):
        sim = cli("simulate", "--config", CFG, "--distance", "87", "--seed", "7")
        assert sim.returncode == 0
        rate = cli("rate", "--config", CFG, "--counts", "-", "--format", "kv", stdin=sim.stdout)
        assert rate.returncode == 0, rate.stderr
        results.append(io.parse_records(rate.stdout)["R_per_pulse"])
    assert results[0] == results[1] and float(results[0]) > 0


def test_optimize_deterministic():
    args = ("optimize", "--config", CFG, "--distance", "87", "--seed", "3", "--starts", "1")
    a, b = cli(*args), cli(*args)
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout
    rec = io.parse_records(a.stdout)
    assert rec["variant"] == "4int" and float(rec["R_per_pulse"]) > 0


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--from", "100", "--to", "100", "--step", "10", "--starts", "1")
    assert code == EXIT_OK
    lines = out.strip().split("\n")
    assert lines[0] == "distance_km,variant,R_per_pulse,bps"
    assert [l.split(",")[1] for l in lines[1:]] == ["4int", "3int-asym", "3int-sym"]
    assert all(l.startswith("100,") for l in lines[1:])


def test_compare_reports(capsys, tmp_path):
    paths = []
    for v in ("4int", "3int-asym", "3int-sym"):
        p = tmp_path / f"{v}.kv"
        run(capsys, "rate", "--config", f"fixtures/s1-87km-{v}-10-1.toml",
            "--counts", f"fixtures/s3-87km-{v}.csv", "--format", "kv", "--out", str(p))
        paths.append(str(p))
    code, out, _ = run(capsys, "compare", *paths)
    assert code == EXIT_OK
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("report,variant,R_per_pulse,R_per_pulse_ratio")
    assert float(lines[1].split(",")[3]) == 1.0
    assert len(lines) == 4


def test_compare_pairs(capsys):
    code, out, _ = run(capsys, "compare", "--pair", CFG, COUNTS,
                       "--pair", "fixtures/s1-87km-3int-sym.toml", "fixtures/s2-87km-3int-sym.csv")
    assert code == EXIT_OK
    row = [l for l in out.splitlines() if "3int-sym" in l and not l.startswith("#")][0]
    assert float(row.split(",")[3]) > 1


def test_module_entry_point():
    res = cli("--help")
    assert res.returncode == 0 and "simulate" in res.stdout
