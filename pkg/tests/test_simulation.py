import numpy as np
import pytest

from rankme.distributions import Distribution, MvNormal, substream
from rankme.errors import InvalidParameters, MonteCarloFailure
from rankme.estimators import ROptions
from rankme.linalg import centered_covariance
from rankme.simulation import (
    Fixed,
    ModelSpec,
    MonteCarloReport,
    Random,
    _replicate,
    execute_plans,
    frozen_design,
    generate,
    plan_experiment,
    run_experiment,
    spec_from_literals,
    summarize_experiment,
)
from rankme.tables import LINE_V_LAWS, S1, reproduce_table, scenarios, theoretical_rows

U39 = Distribution("uniform", (-3.0, 9.0))
LOGIS = Distribution("logistic", (0.0, 1.0))
ZERO = Distribution("degenerate", (0.0,))


def line(n=100, v=None, u=None, e=LOGIS, mode="random"):
    return ModelSpec(n=n, beta=(2.0,), e_law=e, x_law=Random(U39), v_law=v, u_law=u, design_mode=mode)


def test_generate_noiseless_identity():
    spec = ModelSpec(n=40, beta=(2.0, -1.0), e_law=ZERO, x_law=Random(MvNormal(np.array([0.0, 1.0]), S1)), beta0=1.5)
    s = generate(spec, np.random.default_rng(0))
    np.testing.assert_allclose(s.ystar, 1.5 + s.W @ [2.0, -1.0], atol=1e-12)
    np.testing.assert_array_equal(s.latent.V, 0.0)


def test_generate_latent_record_consistent():
    spec = line(50, v=U39, u=Distribution("normal", (0.0, 1.0)))
    s = generate(spec, np.random.default_rng(1))
    lat = s.latent
    np.testing.assert_allclose(s.W, lat.X + lat.V)
    np.testing.assert_allclose(s.ystar, 1.0 + lat.X @ [2.0] + lat.e + lat.u)


def test_generated_measurement_error_covariance():
    s = generate(line(100_000, v=U39), np.random.default_rng(2))
    assert centered_covariance(s.latent.V)[0, 0] == pytest.approx(12.0, abs=0.3)


def test_fixed_design_shared_across_replications():
    spec = line(30, v=U39, mode="deterministic")
    d = frozen_design(spec, 15)
    a = generate(spec, substream(15, "x", 0), d)
    b = generate(spec, substream(15, "x", 1), d)
    np.testing.assert_array_equal(a.latent.X, b.latent.X)
    assert not np.array_equal(a.W, b.W)


def test_frozen_design_prefix_consistent():
    small = frozen_design(line(20, mode="deterministic"), 15)
    big = frozen_design(line(200, mode="deterministic"), 15)
    np.testing.assert_array_equal(small, big[:20])


def test_explicit_fixed_matrix():
    X = np.linspace(-1, 1, 12).reshape(-1, 1)
    spec = ModelSpec(n=12, beta=(1.0,), e_law=LOGIS, x_law=Fixed(X), design_mode="deterministic")
    s = generate(spec, np.random.default_rng(0))
    np.testing.assert_array_equal(s.latent.X, X)
    np.testing.assert_allclose(spec.q_matrix(), centered_covariance(X))


def test_spec_validation():
    with pytest.raises(InvalidParameters):
        line(2)
    with pytest.raises(InvalidParameters):
        line(mode="sometimes")
    with pytest.raises(InvalidParameters):
        ModelSpec(n=10, beta=(1.0,), e_law=LOGIS, x_law=Random(MvNormal(np.zeros(2), np.eye(2))))


def test_spec_from_literals():
    spec = spec_from_literals(100, 2.0, "logistic(0,1)", "uniform(-3,9)", v="normal(0,2)")
    assert spec.v_matrix()[0, 0] == pytest.approx(4.0)
    assert spec.q_matrix()[0, 0] == pytest.approx(12.0)


def test_smoke_two_replications():
    rep = run_experiment(line(20, v=U39), ("r", "ls", "l1"), reps=2, seed=1)
    for st in rep.estimators.values():
        assert st.replications == 2
        assert np.all(np.isfinite(st.variance)) and np.all(st.variance >= 0)


def test_reps_validation():
    with pytest.raises(InvalidParameters):
        run_experiment(line(), reps=1)
    with pytest.raises(InvalidParameters):
        run_experiment(line(), ("r", "ols"), reps=5)


def test_failures_counted_below_threshold():
    plan = plan_experiment(line(20), ("ls",), reps=200, seed=3)
    results = execute_plans([plan])[0]
    assert results.estimators["ls"].failures == 0
    # knock out one replication by hand and re-reduce
    raw = [_replicate(a) for a in plan.jobs_args]
    raw[0][1]["ls"][0] = np.nan
    rep = summarize_experiment(plan, raw)
    assert rep.estimators["ls"].failures == 1
    assert rep.estimators["ls"].replications == 199


def test_failures_above_threshold_abort():
    with pytest.raises(MonteCarloFailure):
        run_experiment(line(30), ("r",), reps=10, seed=1, opts=ROptions(max_evals=3))


def test_deterministic_across_jobs():
    spec = line(40, v=U39)
    a = run_experiment(spec, ("r", "l1"), reps=40, seed=9, jobs=1)
    b = run_experiment(spec, ("r", "l1"), reps=40, seed=9, jobs=3)
    assert a.as_dict() == b.as_dict()


def test_seed_changes_output():
    spec = line(30)
    a = run_experiment(spec, ("ls",), reps=10, seed=1)
    b = run_experiment(spec, ("ls",), reps=10, seed=2)
    assert a.estimators["ls"].bias[0] != b.estimators["ls"].bias[0]


def test_report_round_trip():
    rep = run_experiment(line(20, v=U39), ("r",), reps=5, seed=4)
    back = MonteCarloReport.from_dict(rep.as_dict())
    assert back.as_dict() == rep.as_dict()
    assert "wall_time" not in rep.as_dict()


def test_unsupported_law_marker():
    rep = run_experiment(line(20, v=Distribution("cauchy", (0.0, 1.0))), ("ls",), reps=3, seed=4)
    assert isinstance(rep.theoretical, str) and rep.theoretical.startswith("UnsupportedLaw")


def test_no_measurement_error_unbiased():
    rep = run_experiment(line(100), ("r",), reps=2000, seed=15)
    assert abs(rep.estimators["r"].bias[0]) <= 0.02


def test_logistic_all_estimators_unbiased():
    rep = run_experiment(line(500), ("r", "ls", "l1"), reps=1000, seed=15)
    for st in rep.estimators.values():
        assert abs(st.bias[0]) <= 0.02


def test_table_grids():
    t1 = scenarios("t1")
    assert len(t1) == 49 and all(s.spec.design_mode == "deterministic" for s in t1)
    assert all(s.spec.design_mode == "random" for s in scenarios("t2"))
    t3, t4 = scenarios("t3"), scenarios("t4")
    assert len(t3) == len(t4) == 20
    assert all(s.spec.n == 50 and s.estimators == ("r", "ls", "l1") for s in t3 + t4)
    assert all(s.spec.p == 2 for s in t4)
    with pytest.raises(InvalidParameters):
        scenarios("t5")


def test_theoretical_rows_line():
    rows = dict(theoretical_rows("t1"))
    assert [r for r, _ in LINE_V_LAWS] == list(rows)
    assert rows["U(-3,9)"][0] == pytest.approx(-1.0)


def test_reproduce_table_min_reps():
    with pytest.raises(InvalidParameters):
        reproduce_table("t3", reps=50)


def test_reproduce_table_subset():
    reps = reproduce_table("t2", reps=100, seed=2, ns=(20,))
    assert len(reps) == len(LINE_V_LAWS)
    assert {r.labels["table"] for r in reps} == {"t2"}
