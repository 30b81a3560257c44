"""Scenario grids for the four simulation tables and a driver that runs them.

t1: slope-only model, fixed design drawn once from U(-3,9), R-estimator,
    seven measurement-error laws by seven sample sizes.
t2: as t1 with the design redrawn in every replication.
t3: n = 50, random U(-3,9) design, R/LS/L1 across v and e laws.
t4: n = 50, two regressors from N2((0,1), S1), R/LS/L1 across v and e laws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import Distribution, MvNormal
from .errors import InvalidParameters
from .simulation import ModelSpec, MonteCarloReport, Random, execute_plans, plan_experiment

TABLE_IDS = ("t1", "t2", "t3", "t4")
MIN_TABLE_REPS = 100

S1 = np.array([[4.0, 0.5], [0.5, 2.0]])
S2 = np.array([[2.0, 0.2], [0.2, 2.0]])
S3 = np.array([[1.0, 0.9], [0.9, 1.0]])

LOGISTIC = Distribution("logistic", (0.0, 1.0))
X_LINE = Distribution("uniform", (-3.0, 9.0))

LINE_V_LAWS = (
    ("0", None),
    ("U(-5,0)", Distribution("uniform", (-5.0, 0.0))),
    ("U(0,9)", Distribution("uniform", (0.0, 9.0))),
    ("U(-3,9)", Distribution("uniform", (-3.0, 9.0))),
    ("N(0,1)", Distribution("normal", (0.0, 1.0))),
    ("N(0,2)", Distribution("normal", (0.0, 2.0))),
    ("N(0,3)", Distribution("normal", (0.0, 3.0))),
)
LINE_NS = (10, 20, 50, 100, 200, 500, 1000)

E_LAWS = (
    ("Normal", Distribution("normal", (0.0, 1.0))),
    ("Logistic", LOGISTIC),
    ("Laplace", Distribution("laplace", (0.0, 1.0))),
    ("Pareto", Distribution("pareto", (0.9,))),
    ("Cauchy", Distribution("cauchy", (0.0, 1.0))),
)
T3_V_LAWS = (
    ("0", None),
    ("U(-3,3)", Distribution("uniform", (-3.0, 3.0))),
    ("U(-6,6)", Distribution("uniform", (-6.0, 6.0))),
    ("N(0,1)", Distribution("normal", (0.0, 1.0))),
)
T4_V_LAWS = (
    ("0", None),
    ("N2(0,S3)", MvNormal(np.zeros(2), S3)),
    ("N2(0,S2)", MvNormal(np.zeros(2), S2)),
    ("N2(0,S1)", MvNormal(np.zeros(2), S1)),
)


@dataclass(frozen=True, eq=False)
class Scenario:
    table: str
    scenario_id: str
    spec: ModelSpec
    estimators: tuple
    labels: dict


def line_spec(n: int, v_law, design_mode: str, e_law=LOGISTIC, u_law=None) -> ModelSpec:
    return ModelSpec(
        n=n,
        beta=(2.0,),
        beta0=1.0,
        e_law=e_law,
        x_law=Random(X_LINE),
        v_law=v_law,
        u_law=u_law,
        design_mode=design_mode,
    )


def plane_spec(v_law, e_law, n: int = 50) -> ModelSpec:
    return ModelSpec(
        n=n,
        beta=(2.0, 1.0),
        beta0=1.0,
        e_law=e_law,
        x_law=Random(MvNormal(np.array([0.0, 1.0]), S1)),
        v_law=v_law,
        design_mode="random",
    )


def scenarios(table: str, ns: Optional[Sequence[int]] = None) -> list:
    """The scenario grid of ``table``; ``ns`` restricts the t1/t2 sample sizes."""
    table = table.lower()
    if table not in TABLE_IDS:
        raise InvalidParameters(f"unknown table {table!r}; expected one of {TABLE_IDS}")
    out = []
    if table in ("t1", "t2"):
        mode = "deterministic" if table == "t1" else "random"
        for row, v in LINE_V_LAWS:
            for n in ns or LINE_NS:
                sid = f"{table}/v={row}/n={n}"
                out.append(Scenario(table, sid, line_spec(n, v, mode), ("r",), {"v": row, "n": str(n)}))
        return out
    v_laws = T3_V_LAWS if table == "t3" else T4_V_LAWS
    for row, v in v_laws:
        for col, e in E_LAWS:
            sid = f"{table}/v={row}/e={col}"
            spec = line_spec(50, v, "random", e_law=e) if table == "t3" else plane_spec(v, e)
            out.append(Scenario(table, sid, spec, ("r", "ls", "l1"), {"v": row, "e": col}))
    return out


def reproduce_table(
    table: str,
    reps: int = 2000,
    seed: int = 15,
    sf="wilcoxon",
    scores: str = "approx",
    jobs: int = 1,
    ns: Optional[Sequence[int]] = None,
) -> list[MonteCarloReport]:
    """Run every cell group of ``table``; one report per scenario."""
    if reps < MIN_TABLE_REPS:
        raise InvalidParameters(f"table runs need reps >= {MIN_TABLE_REPS}, got {reps}")
    plans = [
        plan_experiment(
            sc.spec,
            sc.estimators,
            sf=sf,
            reps=reps,
            seed=seed,
            scores=scores,
            jobs=jobs,
            scenario_id=sc.scenario_id,
            labels=dict(sc.labels, table=sc.table),
        )
        for sc in scenarios(table, ns)
    ]
    return execute_plans(plans, jobs)


def theoretical_rows(table: str) -> list:
    """(row label, bias vector) for each measurement-error law of ``table``."""
    from .asymptotics import asymptotic_bias

    seen = {}
    for sc in scenarios(table):
        row = sc.labels["v"]
        if row not in seen:
            seen[row] = asymptotic_bias(sc.spec.q_matrix(), sc.spec.v_matrix(), sc.spec.beta)
    return list(seen.items())
