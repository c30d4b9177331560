"""Reading and writing of config files and count tables.

Configs are TOML with ``[protocol]`` and ``[system]`` sections; a
``[settings]`` section may pick the bound-formula switches. Count tables are
CSV with header ``source,basis,total,error`` and optional leading
``# key: value`` metadata comments. Reports are flat ``key=value`` lines.
"""
from __future__ import annotations

import csv
import io
import math
import os
import re
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .counts import CountsError, CountsTable
from .decoy import Settings
from .model import ConfigError, ProtocolConfig, SourceId, SystemModel, Variant

COUNTS_HEADER = ("source", "basis", "total", "error")

_PROTOCOL_KEYS = {
    "variant", "mu_z1", "mu_z2", "mu_x1", "mu_x2", "p_z1", "p_z2", "p_x1", "p_x2", "p0",
    "q_x", "nt", "normalize",
}
_SYSTEM_KEYS = {
    "eta_z", "eta_x", "dark_rate", "after_pulse", "dead_time", "e_mis", "e_mis_z", "e_mis_x",
    "loss_coeff", "extra_bob_loss", "f", "eps", "clock_rate", "nt", "afterpulse_model",
}
_SETTINGS_KEYS = {"chernoff_arg", "theta_log_base"}
_SECTIONS = {"protocol": _PROTOCOL_KEYS, "system": _SYSTEM_KEYS, "settings": _SETTINGS_KEYS}


class ParseError(ConfigError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, msg: str, path=None, line: int | None = None):
        where = f"{path}" if path else "<input>"
        if line:
            where += f":{line}"
        super().__init__(f"{where}: {msg}")
        self.path, self.line = path, line


def fixtures_dir() -> Path:
    """Directory of shipped fixtures, overridable with ``DECOYRATE_FIXTURES``."""
    env = os.environ.get("DECOYRATE_FIXTURES")
    return Path(env) if env else Path(__file__).resolve().parent / "fixtures"


def resolve(path) -> Path:
    """Return ``path`` if it exists, else try it relative to the fixture directory.

    Both ``fixtures/name.csv`` and bare ``name.csv`` resolve against the
    fixture directory when the literal path is missing.
    """
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts[1:] if p.parts[:1] == ("fixtures",) else p.parts
    cand = fixtures_dir().joinpath(*parts) if parts else p
    return cand if cand.exists() else p


def _norm_key(k: str) -> str:
    return k.strip().lower().replace("-", "_")


def _line_of(text: str, section: str | None, key: str | None = None) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]``."""
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section:
            m = re.match(r'^"?([A-Za-z0-9_\-]+)"?\s*=', line)
            if m and _norm_key(m.group(1)) == key:
                return n
    return None


def _read_toml(path) -> tuple[dict, str]:
    path = resolve(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path) from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"syntax error: {exc}", path, int(m.group(1)) if m else None) from None
    return data, text


def _sections(data: dict, text: str, path) -> dict:
    out = {}
    for name, body in data.items():
        sec = _norm_key(name)
        if sec not in _SECTIONS or not isinstance(body, dict):
            raise ParseError(f"unknown section [{name}]", path, _line_of(text, name.lower()))
        vals = {}
        for k, v in body.items():
            nk = _norm_key(k)
            if nk not in _SECTIONS[sec]:
                raise ParseError(f"unknown key '{k}' in [{name}]", path, _line_of(text, sec, nk))
            vals[nk] = v
        out[sec] = vals
    return out


def _num(sec: dict, key: str, path, text, section: str) -> float:
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{key} must be a number, got {v!r}", path, _line_of(text, section, key))
    return float(v)


def _system(sec: dict, path, text) -> SystemModel:
    kw = {}
    for k, v in sec.items():
        if k == "afterpulse_model":
            kw[k] = str(v)
        elif v is not None:
            kw[k] = _num(sec, k, path, text, "system")
    try:
        return SystemModel(**kw)
    except ConfigError as exc:
        bad = next((k for k in sec if k in str(exc)), None)
        raise ParseError(str(exc), path, _line_of(text, "system", bad) if bad else _line_of(text, "system")) from None


def _protocol(sec: dict, path, text, default_nt: float) -> ProtocolConfig:
    line = _line_of(text, "protocol")
    try:
        variant = Variant(str(sec.get("variant", "4int")))
    except ValueError:
        raise ParseError(f"unknown variant {sec.get('variant')!r}; expected one of "
                         f"{[v.value for v in Variant]}", path, _line_of(text, "protocol", "variant")) from None
    srcs = {"z1": SourceId.Z1, "z2": SourceId.Z2, "x1": SourceId.X1, "x2": SourceId.X2}
    mu, p = {}, {}
    for tag, src in srcs.items():
        for prefix, dest in (("mu_", mu), ("p_", p)):
            if prefix + tag not in sec:
                raise ParseError(f"[protocol] is missing {prefix + tag}", path, line)
            dest[src] = _num(sec, prefix + tag, path, text, "protocol")
    if "p0" in sec:
        mu[SourceId.VAC] = 0.0
        p[SourceId.VAC] = _num(sec, "p0", path, text, "protocol")
        if not variant.has_vacuum:
            raise ParseError("p0 given but variant 4int has no vacuum source", path, _line_of(text, "protocol", "p0"))
    if "q_x" not in sec:
        raise ParseError("[protocol] is missing q_x", path, line)
    nt = _num(sec, "nt", path, text, "protocol") if "nt" in sec else default_nt
    try:
        return ProtocolConfig.build(mu, p, _num(sec, "q_x", path, text, "protocol"), nt=nt,
                                    variant=variant, normalize=bool(sec.get("normalize", False)))
    except ConfigError as exc:
        raise ParseError(str(exc), path, line) from None


def parse_config(path) -> tuple[ProtocolConfig | None, SystemModel]:
    """Parse a config file into ``(protocol, system)``.

    The protocol is None when the file has no ``[protocol]`` section (a
    system-only file). Missing ``[system]`` keys take their defaults.
    """
    config, system, _ = parse_config_full(path)
    return config, system


def parse_config_full(path) -> tuple[ProtocolConfig | None, SystemModel, Settings]:
    """Like :func:`parse_config`, also returning the ``[settings]`` switches."""
    data, text = _read_toml(path)
    secs = _sections(data, text, path)
    system = _system(secs.get("system", {}), path, text)
    proto = _protocol(secs["protocol"], path, text, system.nt) if "protocol" in secs else None
    st = secs.get("settings", {})
    try:
        settings = Settings(**{k: str(v) for k, v in st.items()})
    except ValueError as exc:
        raise ParseError(str(exc), path, _line_of(text, "settings")) from None
    return proto, system, settings


def _cell_number(raw: str, what: str, path, line: int) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"{what} {raw!r} is not a number", path, line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} {raw!r} is not finite", path, line)
    return v


def parse_counts_text(text: str, path=None, variant: Variant | str | None = None) -> CountsTable:
    """Parse CSV text; see :func:`parse_counts`."""
    meta: dict = {}
    body: list[tuple[int, str]] = []
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = re.match(r"^#\s*([A-Za-z_][\w\-]*)\s*:\s*(.*)$", s)
            if m:
                meta[m.group(1)] = m.group(2).strip()
            continue
        body.append((n, line))
    if not body:
        raise ParseError("no header row", path)
    hline, header = body[0]
    cols = tuple(c.strip().lower() for c in next(csv.reader([header])))
    if cols != COUNTS_HEADER:
        raise ParseError(f"header must be {','.join(COUNTS_HEADER)}, got {header.strip()}", path, hline)
    rows, where = [], {}
    for n, line in body[1:]:
        fields = [f.strip() for f in next(csv.reader([line]))]
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", path, n)
        src, basis, total, error = fields
        try:
            src_id = SourceId(src.upper())
        except ValueError:
            raise ParseError(f"unknown source {src!r}", path, n) from None
        if basis.upper() not in ("Z", "X"):
            raise ParseError(f"unknown basis {basis!r}", path, n)
        t = _cell_number(total, "total", path, n)
        e = None if error == "" else _cell_number(error, "error", path, n)
        key = (src_id.value, basis.upper())
        if key in where:
            raise ParseError(f"duplicate cell {key[0]},{key[1]} (first on line {where[key]})", path, n)
        if t < 0:
            raise ParseError(f"cell {key[0]},{key[1]}: negative total {total}", path, n)
        if e is not None and e > t:
            raise ParseError(f"cell {key[0]},{key[1]}: error {error} > total {total}", path, n)
        if e is not None and e < 0:
            raise ParseError(f"cell {key[0]},{key[1]}: negative error {error}", path, n)
        where[key] = n
        rows.append((src_id, basis.upper(), t, e))
    table = CountsTable.from_rows(rows, metadata=meta)
    if variant is None:
        variant = meta.get("variant") or (Variant.THREE_ASYM if ("VAC", "Z") in where or ("VAC", "X") in where
                                          else Variant.FOUR)
    try:
        table.validate(Variant(variant))
    except CountsError as exc:
        raise ParseError(str(exc), path) from None
    return table


def parse_counts(path, variant: Variant | str | None = None) -> CountsTable:
    """Read and validate a counts CSV.

    Cells are checked for the variant named in ``variant``, else in the
    ``# variant:`` metadata, else inferred from the presence of vacuum rows.
    Raises :class:`ParseError` naming the offending cell or line.
    """
    path = resolve(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read counts: {exc.strerror}", path) from None
    return parse_counts_text(text, path, variant)


def fmt(x) -> str:
    """Locale-independent number formatting that round-trips exactly."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return repr(x)
    if hasattr(x, "value"):
        return str(x.value)
    return str(x)


def counts_csv(table: CountsTable) -> str:
    """Serialize a table: metadata comments, header, one row per cell, LF endings."""
    buf = io.StringIO()
    for k in sorted(table.metadata):
        buf.write(f"# {k}: {fmt(table.metadata[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for src, basis, cell in table:
        w.writerow([src.value, basis.value, fmt(cell.total), "" if cell.error is None else fmt(cell.error)])
    return buf.getvalue()


def records_text(rec: dict) -> str:
    """One ``key=value`` line per field, in insertion order."""
    return "".join(f"{k}={fmt(v)}\n" for k, v in rec.items())


def records_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def parse_records(text: str) -> dict:
    """Inverse of :func:`records_text` (values stay strings)."""
    out = {}
    for line in text.splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
