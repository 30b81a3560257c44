"""Command-line entry point: ``rankme estimate|simulate|table|asym|diag``.

Every run prints the resolved seed and a hash of the resolved configuration
to stderr; rerunning with the same pair reproduces the output bytes.

Exit codes: 0 success, 2 configuration or input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .asymptotics import fisher_information
from .config import DIAG_KINDS, FORMATS, RunConfig, parse_config
from .distributions import parse_law
from .errors import ConfigError, MalformedCsv, RankMEError
from .estimators import ESTIMATOR_NAMES, ROptions, estimate
from .io import read_csv, write_report
from .simulation import run_experiment, theoretical_for
from .tables import TABLE_IDS, reproduce_table, scenarios

log = logging.getLogger("rankme")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, sim: bool = True) -> None:
    p.add_argument("--config", type=Path, help="TOML run configuration")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=FORMATS, help="json or csv (default from --out suffix, else json)")
    p.add_argument("--score", help="wilcoxon, vdw or median")
    p.add_argument("--scores", choices=("approx", "expected"), help="score construction")
    if sim:
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--reps", type=int, help="Monte Carlo replications")
        p.add_argument("--jobs", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rankme", description="Rank-based regression under measurement errors.")
    ap.add_argument("--version", action="version", version=f"rankme {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="fit one dataset from CSV")
    _common(p, sim=False)
    p.add_argument("--input", help="CSV with columns y, w1..wp")
    p.add_argument("--estimator", choices=ESTIMATOR_NAMES)

    p = sub.add_parser("simulate", help="Monte Carlo run of the [scenario] in --config")
    _common(p)
    p.add_argument("--estimators", help="comma-separated subset of r,ls,l1")

    p = sub.add_parser("table", help="reproduce a simulation table")
    _common(p)
    p.add_argument("--id", dest="table", choices=TABLE_IDS, help="which simulation table")
    p.add_argument("--ns", help="comma-separated sample sizes (t1/t2 only)")

    p = sub.add_parser("asym", help="asymptotic bias, attenuation and variance")
    _common(p, sim=False)
    p.add_argument("--table", choices=TABLE_IDS, help="theoretical column for every row of a table")

    p = sub.add_parser("diag", help="asymptotic diagnostics")
    p.add_argument("kind", choices=DIAG_KINDS)
    _common(p)
    return ap


def _resolve(args) -> RunConfig:
    cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    over = {
        "command": args.command,
        "out": args.out,
        "format": args.format,
        "score": args.score,
        "scores": args.scores,
        "seed": getattr(args, "seed", None),
        "reps": getattr(args, "reps", None),
        "jobs": getattr(args, "jobs", None),
        "input": getattr(args, "input", None),
        "estimator": getattr(args, "estimator", None),
    }
    tid = getattr(args, "table", None)
    if tid:
        over["table"] = tid
    ests = getattr(args, "estimators", None)
    if ests:
        over["estimators"] = tuple(e.strip() for e in ests.split(",") if e.strip())
    if args.command == "diag":
        from dataclasses import replace

        cfg = replace(cfg, diag=replace(cfg.diag, kind=args.kind))
    return cfg.with_overrides(**over)


def _fmt(cfg: RunConfig) -> str:
    if cfg.format:
        return cfg.format
    if cfg.out and cfg.out.lower().endswith(".csv"):
        return "csv"
    return "json"


def _emit(cfg: RunConfig, report) -> None:
    data = write_report(report, _fmt(cfg))
    if cfg.out:
        Path(cfg.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _ns(text):
    if not text:
        return None
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--ns: expected comma-separated integers, got {text!r}") from exc


def _run(args, cfg: RunConfig):
    cmd = args.command
    if cmd == "estimate":
        if not cfg.input:
            raise ConfigError("input: a CSV path is required (--input)")
        try:
            sample = read_csv(cfg.input)
        except OSError as exc:
            raise ConfigError(f"input: cannot read {cfg.input}: {exc.strerror or exc}") from exc
        return estimate(sample, cfg.estimator, cfg.score, None, ROptions(construction=cfg.scores))
    if cmd == "simulate":
        spec = cfg.scenario.to_spec()
        return run_experiment(spec, cfg.estimators, cfg.score, cfg.reps, cfg.seed, cfg.scores, cfg.jobs)
    if cmd == "table":
        return reproduce_table(cfg.table, cfg.reps, cfg.seed, cfg.score, cfg.scores, cfg.jobs, _ns(args.ns))
    if cmd == "asym":
        if args.table:
            return _table_theory(args.table, cfg.score)
        theo = theoretical_for(cfg.scenario.to_spec(), cfg.score)
        if isinstance(theo, str):
            raise RankMEError(theo)
        return theo
    if cmd == "diag":
        return _diag(cfg)
    raise ConfigError(f"unknown command {cmd!r}")


def _table_theory(table: str, score) -> dict:
    rows, seen = [], set()
    for sc in scenarios(table):
        row = sc.labels["v"]
        if row in seen:
            continue
        seen.add(row)
        theo = theoretical_for(sc.spec, score)
        entry = {"v": row, "e": sc.spec.e_law.literal}
        entry.update(theo.as_dict() if not isinstance(theo, str) else {"unsupported": theo})
        rows.append(entry)
    return {"table": table, "rows": rows}


def _diag(cfg: RunConfig):
    from . import diagnostics

    dg = cfg.diag
    spec = cfg.scenario.to_spec()
    reps = dg.reps if cfg.reps == RunConfig.reps else cfg.reps
    if dg.kind == "linearity":
        return diagnostics.check_linearity(spec, cfg.score, dg.pairs, reps, cfg.seed, dg.ns)
    if dg.kind == "representation":
        return diagnostics.representation_gap(spec, cfg.score, reps, cfg.seed, dg.ns)
    if dg.kind == "hellinger":
        rows = diagnostics.hellinger_ceiling(spec.e_law, parse_law(dg.shift), dg.ns)
        return {"rows": [{"n": n, "n_h2": h, "ceiling": c} for n, h, c in rows]}
    return {"law": spec.e_law.literal, "fisher_information": fisher_information(spec.e_law)}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _resolve(args)
    except (RankMEError, OSError) as exc:
        print(f"rankme: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"seed={cfg.seed} config_hash={cfg.hash()}", file=sys.stderr)
    t0 = time.perf_counter()
    try:
        report = _run(args, cfg)
        _emit(cfg, report)
    except (ConfigError, MalformedCsv) as exc:
        print(f"rankme: input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RankMEError, OSError, ArithmeticError) as exc:
        print(f"rankme: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wall time %.3fs", time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
