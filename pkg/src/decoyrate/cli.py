"""Command-line entry point: ``decoyrate {rate,simulate,optimize,sweep,compare}``.

Exit codes: 0 success, 1 usage error, 2 data or invariant error,
3 zero key under ``rate --strict``.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import io
from .counts import CountsError
from .decoy import Settings
from .keyrate import worst_case_rate
from .model import ConfigError, SystemModel, Variant
from .optimizer import optimize, sweep
from .simulator import expected_counts, sample_counts

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ZERO_KEY = 0, 1, 2, 3
DEFAULT_SYSTEM = "fixtures/t1-system.toml"
SWEEP_COLUMNS = ("distance_km", "variant", "R_per_pulse", "bps")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser, *, config_required=False):
    p.add_argument("--config", required=config_required, help="TOML config ([protocol], [system], [settings])")
    p.add_argument("--eta-z", type=float, help="override the Z-basis detector efficiency")
    p.add_argument("--eta-x", type=float, help="override the X-basis detector efficiency")
    p.add_argument("--chernoff-arg", choices=["paper-literal", "counts"], help="argument of the Chernoff delta")
    p.add_argument("--theta-log-base", choices=["e", "2", "10"], help="log base in the sampling correction")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="decoyrate", description="Finite-key decoy-state key rates with per-basis intensities.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="worst-case key rate from measured counts")
    _common(p, config_required=True)
    p.add_argument("--counts", required=True, help="counts CSV ('-' for stdin)")
    p.add_argument("--strict", action="store_true", help="exit 3 when the key rate is zero")
    p.add_argument("--format", choices=["table", "kv", "csv"], default="table")

    p = sub.add_parser("simulate", help="expected or Poisson-sampled counts for a configuration")
    _common(p, config_required=True)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--seed", type=int, help="sample counts with this seed (omit for expected counts)")

    p = sub.add_parser("optimize", help="optimize protocol parameters at one distance")
    _common(p)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="4int")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=32, help="Latin-hypercube start points")

    p = sub.add_parser("sweep", help="optimized rate of all variants over a distance range")
    _common(p)
    p.add_argument("--from", dest="start", type=float, default=50.0)
    p.add_argument("--to", dest="stop", type=float, default=160.0)
    p.add_argument("--step", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=4, help="Latin-hypercube start points per optimization")

    p = sub.add_parser("compare", help="ratio table between key-rate reports")
    _common(p)
    p.add_argument("reports", nargs="*", help="key=value report files (from 'rate --format kv')")
    p.add_argument("--counts", action="append", default=[], help="counts CSV, paired with the n-th --config")
    p.add_argument("--pair", nargs=2, action="append", default=[], metavar=("CONFIG", "COUNTS"),
                   help="config and counts of one report")
    return ap


def _settings(args, base: Settings) -> Settings:
    kw = {}
    if getattr(args, "chernoff_arg", None):
        kw["chernoff_arg"] = args.chernoff_arg
    if getattr(args, "theta_log_base", None):
        kw["theta_log_base"] = args.theta_log_base
    return dataclasses.replace(base, **kw) if kw else base


def _system(args, sys_model: SystemModel) -> SystemModel:
    kw = {}
    if args.eta_z is not None:
        kw["eta_z"] = args.eta_z
    if args.eta_x is not None:
        kw["eta_x"] = args.eta_x
    return dataclasses.replace(sys_model, **kw) if kw else sys_model


def _load(args, path=None):
    cfg, sys_model, settings = io.parse_config_full(path or args.config or DEFAULT_SYSTEM)
    return cfg, _system(args, sys_model), _settings(args, settings)


def _counts(path):
    if path == "-":
        return io.parse_counts_text(sys.stdin.read(), "<stdin>")
    return io.parse_counts(path)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(rec: dict) -> str:
    width = max(len(k) for k in rec)
    lines = []
    for k, v in rec.items():
        s = f"{v:.6g}" if isinstance(v, float) else io.fmt(v)
        lines.append(f"{k.ljust(width)}  {s}")
    return "\n".join(lines) + "\n"


def cmd_rate(args) -> int:
    cfg, sys_model, settings = _load(args)
    if cfg is None:
        raise UsageError(f"{args.config} has no [protocol] section")
    counts = _counts(args.counts)
    counts.validate(cfg.variant)
    rep = worst_case_rate(counts, cfg, sys_model, settings)
    rec = rep.record()
    if args.format == "kv":
        _emit(args, io.records_text(rec))
    elif args.format == "csv":
        _emit(args, io.records_csv([rec], list(rec)))
    else:
        _emit(args, _table(rec))
    if args.strict and rep.R <= 0:
        return EXIT_ZERO_KEY
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, sys_model, _ = _load(args)
    if cfg is None:
        raise UsageError(f"{args.config} has no [protocol] section")
    exp = expected_counts(sys_model, cfg, args.distance)
    table = exp.table() if args.seed is None else sample_counts(exp, args.seed)
    _emit(args, io.counts_csv(table))
    return EXIT_OK


def cmd_optimize(args) -> int:
    _, sys_model, settings = _load(args)
    res = optimize(sys_model, args.distance, args.variant, args.seed, n_starts=args.starts, settings=settings)
    rec = {"distance_km": args.distance, **res.record(), "bps": res.best_r * sys_model.clock_rate}
    _emit(args, io.records_text(rec))
    return EXIT_OK


def cmd_sweep(args) -> int:
    _, sys_model, settings = _load(args)
    if args.step <= 0 or args.stop < args.start:
        raise UsageError("sweep needs --step > 0 and --to >= --from")
    n = int(np.floor((args.stop - args.start) / args.step + 1e-9)) + 1
    distances = [round(args.start + i * args.step, 10) for i in range(n)]
    rows = sweep(sys_model, distances, args.seed, n_starts=args.starts, settings=settings)
    out = [{"distance_km": r.distance_km, "variant": r.variant.value, "R_per_pulse": r.result.best_r,
            "bps": r.bps} for r in rows]
    _emit(args, io.records_csv(out, SWEEP_COLUMNS))
    return EXIT_OK


_COMPARE_KEYS = ("R_per_pulse", "bps", "Rz", "Rx")


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return float("inf") if a > 0 else float("nan")
    return a / b


def cmd_compare(args) -> int:
    if len(args.reports) + len(args.pair) + len(args.counts) < 2:
        raise UsageError("compare needs at least two reports")
    reports = []
    for path in args.reports:
        with open(io.resolve(path), encoding="utf-8") as fh:
            reports.append((path, io.parse_records(fh.read())))
    pairs = list(args.pair)
    if args.counts:
        configs = [args.config] if args.config else []
        if len(configs) != len(args.counts) and len(args.counts) != 1:
            raise UsageError("--counts needs a matching --config; use --pair CONFIG COUNTS")
        pairs += list(zip(configs, args.counts))
    for cfg_path, counts_path in pairs:
        cfg, sys_model, settings = _load(args, cfg_path)
        if cfg is None:
            raise UsageError(f"{cfg_path} has no [protocol] section")
        rep = worst_case_rate(_counts(counts_path), cfg, sys_model, settings)
        reports.append((f"{cfg_path}|{counts_path}", {k: io.fmt(v) for k, v in rep.record().items()}))
    if len(reports) < 2:
        raise UsageError("compare needs at least two reports")
    base_name, base = reports[0]
    rows = []
    for name, rec in reports:
        row = {"report": name, "variant": rec.get("variant", "")}
        for k in _COMPARE_KEYS:
            row[k] = float(rec.get(k, "nan"))
            row[f"{k}_ratio"] = _ratio(float(base.get(k, "nan")), row[k])
        rows.append(row)
    cols = ["report", "variant", "R_per_pulse", "R_per_pulse_ratio", "bps", "bps_ratio", "Rz", "Rx"]
    text = f"# ratios are {base_name} divided by each row\n" + io.records_csv(rows, cols)
    _emit(args, text)
    return EXIT_OK


COMMANDS = {"rate": cmd_rate, "simulate": cmd_simulate, "optimize": cmd_optimize,
            "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as exc:
        sys.stderr.write(f"decoyrate {args.cmd}: {exc}\n")
        return EXIT_USAGE
    except (ConfigError, CountsError, ValueError, OSError) as exc:
        sys.stderr.write(f"decoyrate {args.cmd}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
