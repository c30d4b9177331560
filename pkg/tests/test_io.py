import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from decoyrate import io
from decoyrate.counts import Cell, CountsError, CountsTable
from decoyrate.io import ParseError, counts_csv, parse_config, parse_config_full, parse_counts, parse_counts_text
from decoyrate.model import Basis, SourceId, Variant
from helpers import columns

FIXTURES = sorted(p.name for p in io.fixtures_dir().iterdir() if p.suffix in (".csv", ".toml"))
HEADER = "source,basis,total,error\n"
ROWS_4INT = [("Z1", "Z", 100, 10), ("Z1", "X", 10, None), ("Z2", "Z", 1000, 20), ("Z2", "X", 90, None),
             ("X1", "Z", 50, None), ("X1", "X", 12, 1), ("X2", "Z", 30, None), ("X2", "X", 9, 0)]


def csv_text(rows, header=HEADER):
    return header + "".join(f"{s},{b},{t},{'' if e is None else e}\n" for s, b, t, e in rows)


@pytest.mark.parametrize("name", FIXTURES)
def test_every_fixture_parses(name):
    if name.endswith(".csv"):
        table = parse_counts(name)
        assert table.metadata["variant"] in {v.value for v in Variant}
        assert "reported_R" in table.metadata
    else:
        cfg, system = parse_config(name)
        assert system.eps == 1e-10
        assert cfg is not None or name == "t1-system.toml"


def test_every_counts_fixture_has_a_config():
    cols = columns()
    assert len(cols) == 18
    names = {Path(c.counts_path).name for c in cols} | {Path(c.config_path).name for c in cols}
    assert {n for n in FIXTURES if n != "t1-system.toml"} <= names


def test_table_one_system():
    cfg, system = parse_config("fixtures/t1-system.toml")
    assert cfg is None
    assert system.dark_rate == 2.5e-7 and system.f == 1.14 and system.eps == 1e-10 and system.nt == 1e10
    assert system.e_mis == 0.015 and system.clock_rate == 625e6


def test_s2_signal_cell():
    t = parse_counts("fixtures/s2-87km-4int.csv")
    assert t.cells[SourceId.X2, Basis.X] == Cell(5709.1, 143.9)
    assert t.cells[SourceId.Z1, Basis.X].error is None
    with pytest.raises(CountsError, match="Z1,X"):
        t.error(SourceId.Z1, Basis.X)


def test_fixture_dir_override(tmp_path, monkeypatch):
    (tmp_path / "mine.csv").write_text(csv_text(ROWS_4INT))
    monkeypatch.setenv("DECOYRATE_FIXTURES", str(tmp_path))
    assert io.fixtures_dir() == tmp_path
    assert parse_counts("fixtures/mine.csv").total(SourceId.Z2, Basis.Z) == 1000


class TestCountsRejections:
    def test_error_above_total(self):
        rows = [r if r[:2] != ("X2", "X") else ("X2", "X", 100, 200) for r in ROWS_4INT]
        with pytest.raises(ParseError, match=r"X2,X: error 200 > total 100") as exc:
            parse_counts_text(csv_text(rows), "t.csv")
        assert exc.value.line == 9

    def test_missing_cell(self):
        with pytest.raises(ParseError, match="X2,X"):
            parse_counts_text(csv_text(ROWS_4INT[:-1]), "t.csv")

    def test_duplicate_cell(self):
        with pytest.raises(ParseError, match="duplicate cell Z1,Z") as exc:
            parse_counts_text(csv_text(ROWS_4INT + [ROWS_4INT[0]]), "t.csv")
        assert exc.value.line == 10

    def test_missing_matched_error(self):
        rows = [r if r[:2] != ("Z2", "Z") else ("Z2", "Z", 1000, None) for r in ROWS_4INT]
        with pytest.raises(ParseError, match="Z2"):
            parse_counts_text(csv_text(rows))

    def test_bad_header(self):
        with pytest.raises(ParseError, match="header"):
            parse_counts_text(csv_text(ROWS_4INT, header="src,basis,total,error\n"))

    @pytest.mark.parametrize("row,msg", [
        (("Y1", "Z", 1, 0), "unknown source"),
        (("Z1", "Q", 1, 0), "unknown basis"),
        (("Z1", "Z", "abc", 0), "not a number"),
        (("Z1", "Z", -3, 0), "negative total"),
        (("Z1", "Z", "nan", 0), "not finite"),
    ])
    def test_bad_rows(self, row, msg):
        with pytest.raises(ParseError, match=msg):
            parse_counts_text(csv_text([row] + ROWS_4INT[1:]))

    def test_3int_needs_vacuum(self):
        with pytest.raises(ParseError, match="VAC"):
            parse_counts_text(csv_text(ROWS_4INT), variant="3int-sym")


def test_fractional_counts_accepted():
    rows = [("Z1", "Z", 100.5, 10.25)] + ROWS_4INT[1:]
    assert parse_counts_text(csv_text(rows)).cells[SourceId.Z1, Basis.Z] == Cell(100.5, 10.25)


def test_variant_inferred_from_vacuum_rows():
    rows = ROWS_4INT + [("VAC", "Z", 3, 1.5), ("VAC", "X", 2, 1)]
    t = parse_counts_text(csv_text(rows))
    assert t.total(SourceId.VAC, Basis.X) == 2


@pytest.mark.parametrize("name", [n for n in FIXTURES if n.endswith(".csv")])
def test_round_trip_fixture(name):
    t = parse_counts(name)
    text = counts_csv(t)
    again = parse_counts_text(text)
    assert again.cells == t.cells
    assert again.metadata == t.metadata
    assert counts_csv(again) == text


cell_values = st.floats(0, 1e9, allow_nan=False)


@given(st.lists(st.tuples(cell_values, st.floats(0, 1)), min_size=8, max_size=8))
def test_round_trip_property(vals):
    rows = []
    for (s, b, _, e), (tot, frac) in zip(ROWS_4INT, vals):
        rows.append((SourceId(s), b, tot, None if e is None else tot * frac))
    t = CountsTable.from_rows(rows)
    again = parse_counts_text(counts_csv(t))
    assert again.cells == t.cells


def test_csv_is_lf_and_dot_decimal():
    text = counts_csv(parse_counts("s2-87km-4int.csv"))
    assert "\r" not in text
    assert "5709.1" in text


def write(tmp_path, body, name="c.toml"):
    p = tmp_path / name
    p.write_text(body)
    return p


PROTO = """[protocol]
variant = "4int"
mu_z1 = 0.1
mu_z2 = 0.5
mu_x1 = 0.1
mu_x2 = 0.5
p_z1 = {pz1}
p_z2 = 0.25
p_x1 = 0.25
p_x2 = 0.25
q_x = 0.5
"""


class TestConfig:
    def test_simplex_violation(self, tmp_path):
        with pytest.raises(ParseError, match="simplex") as exc:
            parse_config(write(tmp_path, PROTO.format(pz1=0.15)))
        assert exc.value.line == 1

    def test_valid(self, tmp_path):
        cfg, system = parse_config(write(tmp_path, PROTO.format(pz1=0.25)))
        assert cfg.p[SourceId.Z1] == 0.25 and system.eta_z == 0.10

    def test_3int_without_p0(self, tmp_path):
        body = PROTO.format(pz1=0.25).replace('"4int"', '"3int-sym"')
        with pytest.raises(ParseError, match="vacuum"):
            parse_config(write(tmp_path, body))

    def test_p0_with_4int(self, tmp_path):
        with pytest.raises(ParseError, match="p0") as exc:
            parse_config(write(tmp_path, PROTO.format(pz1=0.25) + "p0 = 0.0\n"))
        assert exc.value.line == 12

    def test_unknown_key(self, tmp_path):
        body = PROTO.format(pz1=0.25) + "[system]\neta_z = 0.1\nbogus = 3\n"
        with pytest.raises(ParseError, match="unknown key 'bogus'") as exc:
            parse_config(write(tmp_path, body))
        assert exc.value.line == 14

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ParseError, match="unknown section"):
            parse_config(write(tmp_path, "[extra]\na = 1\n"))

    def test_syntax_error_line(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            parse_config(write(tmp_path, "[system]\neta_z = 0.1\neta_x = = 2\n"))
        assert exc.value.line == 3

    def test_out_of_range_system_value(self, tmp_path):
        with pytest.raises(ParseError, match="eta_x") as exc:
            parse_config(write(tmp_path, "[system]\neta_z = 0.1\neta_x = 1.5\n"))
        assert exc.value.line == 3

    def test_intensity_order(self, tmp_path):
        body = PROTO.format(pz1=0.25).replace("mu_z1 = 0.1", "mu_z1 = 0.6")
        with pytest.raises(ParseError, match="intensity ordering"):
            parse_config(write(tmp_path, body))

    def test_dashed_keys_and_settings(self, tmp_path):
        body = "[system]\neta-z = 0.2\n[settings]\nchernoff-arg = \"paper-literal\"\ntheta_log_base = \"2\"\n"
        _, system, settings = parse_config_full(write(tmp_path, body))
        assert system.eta_z == 0.2
        assert settings.chernoff_arg.value == "paper-literal" and settings.theta_log_base.value == "2"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            parse_config(tmp_path / "nope.toml")


def test_fmt_round_trips():
    for x in (0.1, 1e-10, 6.3e-5, 5709.1, 3.0, -0.0, math.inf):
        assert float(io.fmt(x)) == x
    assert io.fmt(True) == "true" and io.fmt(Variant.FOUR) == "4int"


def test_records_round_trip():
    rec = {"a": 1.5, "variant": Variant.THREE_SYM, "n": 3}
    assert io.parse_records(io.records_text(rec)) == {"a": "1.5", "variant": "3int-sym", "n": "3"}
