"""CSV input and deterministic JSON/CSV report serialization.

JSON reports hold two copies of every number: ``cells`` rounded to six
significant digits for reading and diffing, and ``raw`` at full precision
for round-tripping. Keys are sorted and wall-clock times are left out, so
the same computation always serializes to the same bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from typing import Union

import numpy as np

from .asymptotics import AsymptoticSummary
from .errors import ConfigError, MalformedCsv
from .estimators import EstimateResult
from .rankcore import Sample
from .simulation import MonteCarloReport

FORMAT_TAG = "rankme-report"
FORMAT_VERSION = 1
CELL_DIGITS = 6


def read_csv(path) -> Sample:
    """Read columns ``y`` and ``w1..wp`` (any order, extra columns rejected)."""
    with open(path, newline="") as fh:
        return read_csv_text(fh.read(), str(path))


def read_csv_text(text: str, name: str = "<csv>") -> Sample:
    rows = list(csv.reader(_io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise MalformedCsv(f"{name}: empty file")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise MalformedCsv(f"{name}: header lacks a 'y' column")
    wcols = sorted((h for h in header if h != "y"), key=lambda h: _w_index(h, name))
    p = len(wcols)
    if p == 0:
        raise MalformedCsv(f"{name}: no regressor columns w1..wp")
    if [_w_index(h, name) for h in wcols] != list(range(1, p + 1)):
        raise MalformedCsv(f"{name}: regressor columns must be w1..w{p}")
    if len(set(header)) != len(header):
        raise MalformedCsv(f"{name}: duplicate column names")
    yi = header.index("y")
    wi = [header.index(h) for h in wcols]
    y, W = [], []
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedCsv(f"{name}: row {k} has {len(row)} fields, expected {len(header)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise MalformedCsv(f"{name}: row {k}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise MalformedCsv(f"{name}: row {k} has a non-finite value")
        y.append(vals[yi])
        W.append([vals[i] for i in wi])
    if len(y) < p + 2:
        raise MalformedCsv(f"{name}: need at least {p + 2} data rows, got {len(y)}")
    return Sample(np.array(W), np.array(y))


def _w_index(h: str, name: str) -> int:
    if len(h) < 2 or h[0] != "w" or not h[1:].isdigit():
        raise MalformedCsv(f"{name}: unexpected column {h!r}")
    return int(h[1:])


# -- reports ----------------------------------------------------------------

Report = Union[MonteCarloReport, AsymptoticSummary, EstimateResult, list, dict]


def _kind_and_payload(report):
    if isinstance(report, MonteCarloReport):
        return "montecarlo", report.as_dict()
    if isinstance(report, list) and all(isinstance(r, MonteCarloReport) for r in report):
        return "table", [r.as_dict() for r in report]
    if isinstance(report, AsymptoticSummary):
        return "asymptotic", report.as_dict()
    if isinstance(report, EstimateResult):
        return "estimate", report.as_dict()
    if hasattr(report, "as_dict"):
        return type(report).__name__.lower(), report.as_dict()
    if isinstance(report, dict):
        return "generic", report
    raise TypeError(f"cannot serialize {type(report).__name__}")


def round_sig(x, digits: int = CELL_DIGITS):
    """Round floats to ``digits`` significant digits, recursively."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        if not math.isfinite(x) or x == 0.0:
            return x
        return float(f"{x:.{digits}g}")
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    if isinstance(x, np.generic):
        return round_sig(x.item(), digits)
    return x


def write_report(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        kind, payload = _kind_and_payload(report)
        doc = {
            "format": FORMAT_TAG,
            "version": FORMAT_VERSION,
            "kind": kind,
            "cells": round_sig(payload),
            "raw": payload,
        }
        return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n").encode()
    if fmt == "csv":
        return _write_csv(report)
    raise ValueError(f"unknown format {fmt!r}")


def read_report(data: Union[bytes, str]):
    """Rebuild the object written by ``write_report(..., "json")``."""
    if isinstance(data, bytes):
        data = data.decode()
    doc = json.loads(data)
    if doc.get("format") != FORMAT_TAG:
        raise ValueError("not a rankme report")
    kind, raw = doc["kind"], doc["raw"]
    if kind == "montecarlo":
        return MonteCarloReport.from_dict(raw)
    if kind == "table":
        return [MonteCarloReport.from_dict(r) for r in raw]
    if kind == "asymptotic":
        return AsymptoticSummary.from_dict(raw)
    if kind == "estimate":
        return EstimateResult.from_dict(raw)
    return raw


_MC_COLUMNS = (
    "table", "scenario_id", "v", "e", "n", "estimator", "coef",
    "bias", "variance", "mc_se", "replications", "failures", "theoretical_bias",
)


def _fmt_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{CELL_DIGITS}g}"
    return str(x)


def _write_csv(report) -> bytes:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(report, MonteCarloReport):
        report = [report]
    if isinstance(report, list):
        writer.writerow(_MC_COLUMNS)
        for rep in report:
            theo = rep.theoretical
            tb = list(theo.bias) if isinstance(theo, AsymptoticSummary) else None
            for name, st in rep.estimators.items():
                for j in range(len(st.bias)):
                    writer.writerow([_fmt_cell(v) for v in (
                        rep.labels.get("table", ""),
                        rep.scenario_id,
                        rep.labels.get("v", rep.scenario.get("v")),
                        rep.labels.get("e", rep.scenario.get("e")),
                        rep.scenario.get("n"),
                        name,
                        j + 1,
                        float(st.bias[j]),
                        float(st.variance[j]),
                        float(st.mc_se[j]),
                        st.replications,
                        st.failures,
                        float(tb[j]) if tb is not None else (theo if isinstance(theo, str) else None),
                    )])
        return buf.getvalue().encode()
    if isinstance(report, AsymptoticSummary):
        writer.writerow(("coef", "bias", "attenuation_diag", "asym_var"))
        for j in range(len(report.bias)):
            av = None if report.asym_cov is None else float(report.asym_cov[j, j])
            writer.writerow([_fmt_cell(v) for v in (j + 1, float(report.bias[j]), float(report.attenuation[j, j]), av)])
        return buf.getvalue().encode()
    if isinstance(report, EstimateResult):
        writer.writerow(("term", "estimate"))
        writer.writerow(("intercept", _fmt_cell(report.intercept_hat)))
        for j, b in enumerate(report.beta_hat, start=1):
            writer.writerow((f"w{j}", _fmt_cell(float(b))))
        return buf.getvalue().encode()
    raise ConfigError(f"format: no CSV layout for {type(report).__name__} reports; use json")
