import json

import numpy as np
import pytest

from nulllab.errors import CellFailure, PlanError
from nulllab.harness import (
    CSV_FIELDS,
    ExperimentPlan,
    builtin_plans,
    example_spec,
    group_seed,
    min_mse_gamma,
    resolve_threads,
    run_cell,
    run_group,
    run_plan,
    summarize,
)
from nulllab.mixtures import GammaShifted, MixtureSpec, PointMass, Uniform


def small_plan(**kw):
    base = dict(spec=example_spec(0.05), n_grid=(2000, 4000), gamma_grid=(0.1, 0.2),
                L_grid=(0, 3), reps=6, master_seed=5, pipelines=("GEM", "EPS_PLUGIN", "GEV"))
    base.update(kw)
    return ExperimentPlan(**base)


def test_reps_one_cell():
    recs = run_cell(example_spec(0.05), 5000, 0.2, 0, 1, 17, "EPS_PLUGIN", keep_estimates=True)
    assert [r.estimator for r in recs] == ["u0", "sigma0_sq", "eps"]
    truth = {"u0": -1.0, "sigma0_sq": 1.0, "eps": 0.05}
    for r in recs:
        assert r.sd == 0.0 and r.reps == 1
        assert r.mse == (r.estimates[0] - truth[r.estimator]) ** 2


def test_mse_identity():
    res = run_plan(small_plan(reps=9), threads=1)
    for r in res.records:
        assert r.mse == pytest.approx(r.bias**2 + r.sd**2 * (r.reps - 1) / r.reps, abs=1e-9)


def test_run_cell_matches_plan_cell():
    plan = small_plan(gamma_grid=(0.2,), pipelines=("EPS_PLUGIN",))
    res = run_plan(plan, threads=1)
    seed = group_seed(plan.master_seed, 0, 4000, 3)
    recs = run_cell(plan.spec, 4000, 0.2, 3, plan.reps, seed, "EPS_PLUGIN")
    assert recs == res.select(n=4000, L=3)


def test_gamma_grid_shares_data():
    spec = example_spec(0.05)
    seed = group_seed(1, 0, 3000, 0)
    both = run_group(spec, 3000, 0, (0.1, 0.2), ("GEM",), 5, seed)
    alone = run_group(spec, 3000, 0, (0.2,), ("GEM",), 5, seed)
    assert [r for r in both if r.gamma == 0.2] == alone


def test_plan_deterministic_across_threads():
    plan = small_plan()
    a = run_plan(plan, threads=1)
    b = run_plan(plan, threads=3)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    c = run_plan(small_plan(master_seed=6), threads=1)
    assert c.to_csv() != a.to_csv()


def test_csv_and_json_layout():
    res = run_plan(small_plan(), threads=1)
    lines = res.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    # 2 n x 2 gamma x 2 L x (2 + 3 + 3) estimators
    assert len(lines) - 1 == 2 * 2 * 2 * 8
    doc = json.loads(res.to_json())
    assert len(doc["records"]) == len(lines) - 1
    assert "wall_time" not in doc
    assert "wall_time" in json.loads(res.to_json(include_timing=True))
    assert "min-MSE gamma" in summarize(res)


def test_plan_validation():
    with pytest.raises(PlanError):
        small_plan(gamma_grid=())
    with pytest.raises(PlanError):
        small_plan(reps=0)
    with pytest.raises(PlanError):
        small_plan(pipelines=("BOGUS",))
    with pytest.raises(PlanError):
        small_plan(n_grid=(1,))
    with pytest.raises(PlanError):
        small_plan(L_grid=(-1,))
    with pytest.raises(PlanError):
        run_cell(example_spec(0.05), 100, 0.2, 0, 1, 0, "BOGUS")


def test_plan_round_trip():
    plan = small_plan(eps_grid=(0.05, 0.1))
    again = ExperimentPlan.from_dict(plan.to_dict(), plan.spec)
    assert again == plan
    with pytest.raises(PlanError):
        ExperimentPlan.from_dict({**plan.to_dict(), "colour": 1}, plan.spec)


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("NULLLAB_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("NULLLAB_THREADS", "many")
    with pytest.raises(PlanError):
        resolve_threads()


def test_builtin_plan_parameters():
    plans = builtin_plans(0)
    assert set(plans) == {"example1", "example2a", "example2b", "example3", "example4"}
    e1 = plans["example1"]
    assert e1.epsilons == (0.025, 0.05, 0.075, 0.1, 0.2)
    assert len(e1.gamma_grid) == 20
    assert e1.gamma_grid[0] == pytest.approx(0.01) and e1.gamma_grid[-1] == pytest.approx(0.5)
    assert np.allclose(np.diff(e1.gamma_grid), 0.49 / 19)
    assert e1.n_grid == (50_000,) and e1.reps == 100
    assert e1.spec.u0 == -1.0 and e1.spec.sigma0_sq == 1.0
    assert e1.spec.mixing.u_law == Uniform(1.0, 2.0)
    assert e1.spec.mixing.sigma_law == Uniform(0.5, 1.5)
    e2a = plans["example2a"].spec.mixing
    assert e2a.u_law == GammaShifted(10, 0.25, shift=-1.0)
    assert e2a.u_law.mean == pytest.approx(1.5)
    assert e2a.sigma_law == Uniform(0.5, 1.5)
    e2b = plans["example2b"].spec.mixing
    assert e2b.sigma_law == GammaShifted(10, 0.1) and e2b.u_law == Uniform(1.0, 2.0)
    assert plans["example3"].n_grid == (10_000, 30_000, 50_000, 80_000, 100_000)
    assert plans["example3"].gamma_grid == (0.2,)
    e4 = plans["example4"]
    assert e4.L_grid[0] == 1 and e4.L_grid[-1] == 250
    assert all(b - a == 10 for a, b in zip(e4.L_grid[:-2], e4.L_grid[1:-1]))
    assert e4.n_grid == (50_000,) and e4.gamma_grid == (0.2,)


def test_pure_null_cell():
    recs = run_cell(example_spec(0.0), 100_000, 0.2, 0, 30, 19, "GEM")
    u0 = [r for r in recs if r.estimator == "u0"][0]
    assert u0.mse < 1e-3


def test_example3_first_cell_magnitude():
    recs = run_cell(example_spec(0.05), 10_000, 0.2, 0, 100, group_seed(3, 0, 10_000, 0), "EPS_PLUGIN")
    u0 = [r for r in recs if r.estimator == "u0"][0]
    assert 41.28e-4 / 3 <= u0.mse <= 41.28e-4 * 3


def test_cell_failure_carries_coordinates():
    spec = MixtureSpec(-1000.0, 1.0, 0.0, PointMass(0.0, 1.0))
    with pytest.raises(CellFailure) as info:
        run_cell(spec, 100, 0.5, 0, 3, 0, "GEM")
    assert info.value.coords["n"] == 100
    assert info.value.coords["gamma"] == 0.5


def test_min_mse_gamma_picks_smallest():
    res = run_plan(small_plan(L_grid=(0,), n_grid=(4000,)), threads=1)
    best = min_mse_gamma(res)
    for (eps, n, L, p, est), g in best.items():
        cells = res.select(n=n, L=L, pipeline=p, estimator=est)
        assert min(cells, key=lambda r: r.mse).gamma == g


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="MSE grows ~3-5x across gamma in [0.15, 0.25] for u0 and eps; "
                   "systematic at 400 reps, see notes")
def test_gamma_insensitivity_example1(example1_result):
    for eps in (0.025, 0.05, 0.075, 0.1, 0.2):
        for est in ("u0", "sigma0_sq", "eps"):
            cells = [r for r in example1_result.select(eps=eps, estimator=est)
                     if 0.15 <= r.gamma <= 0.25]
            assert len(cells) >= 3
            mses = [r.mse for r in cells]
            assert max(mses) / min(mses) <= 3, (eps, est, mses)
