import numpy as np
import pytest

from ccnet.cond_layer import ConditionalLayer, CreditStrategy, predict
from ccnet.errors import DivergenceError
from ccnet.harness import (
    baseline_comparison, comparison_csv, cost_report, gen_region_task, gradcheck_suite, train,
    traversal_oracle_suite, decay_equivalence_suite, evaluate_mse,
)
from ccnet.optimizer import OptimizerConfig
from ccnet.prefix_weights import count_parameters


def test_task_self_consistent():
    task = gen_region_task(5, 3, 2, n_samples=300, seed=4)
    assert evaluate_mse(task.truth, task.X, task.Y) == 0.0


def test_task_deterministic():
    a = gen_region_task(4, 2, 3, n_samples=100, noise_sigma=0.1, seed=11)
    b = gen_region_task(4, 2, 3, n_samples=100, noise_sigma=0.1, seed=11)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)


def test_depth_zero_task_is_linear():
    task = gen_region_task(6, 3, 0, n_samples=400, seed=2)
    A = np.hstack([task.X, np.ones((400, 1))])
    coef, *_ = np.linalg.lstsq(A, task.Y, rcond=None)
    assert np.mean((A @ coef - task.Y) ** 2) < 1e-6


def test_zero_learning_rate_keeps_mse():
    task = gen_region_task(4, 4, 2, n_samples=200, seed=0)
    layer = ConditionalLayer.create(4, 4, 2, np.random.default_rng(0))
    m = train(layer, task, opt=OptimizerConfig(epsilon=0.0), epochs=4)
    assert len(set(m.epoch_mse)) == 1


def test_decay_shrinks_table():
    task = gen_region_task(4, 4, 2, n_samples=300, seed=0)
    norms = []
    for lam in (0.0, 5.0):  # epsilon * lam = 0.5 for the second run
        layer = ConditionalLayer.create(4, 4, 2, np.random.default_rng(0))
        norms.append(train(layer, task, opt=OptimizerConfig(0.1, lam, "l2"), epochs=5).table_norm)
    assert norms[1] < norms[0]


def test_divergence_guard():
    task = gen_region_task(4, 4, 2, n_samples=200, seed=0)
    layer = ConditionalLayer.create(4, 4, 2, np.random.default_rng(0))
    task.Y *= 1e4
    with pytest.raises(DivergenceError):
        train(layer, task, opt=OptimizerConfig(epsilon=3.0), epochs=5)


def test_train_metrics_match_meter():
    task = gen_region_task(3, 2, 1, n_samples=50, seed=0)
    layer = ConditionalLayer.create(3, 2, 1, np.random.default_rng(0))
    m = train(layer, task, epochs=2)
    assert m.epoch_costs == [(50 * 3 * 2, 50 * 3 * 1 * 2, 50 * 3 * 2)] * 2
    assert m.forward_cost["multiply_adds"] == 6
    assert m.to_csv().splitlines()[0] == "epoch,mse,madds,adds,lookups"


@pytest.mark.parametrize("strategy", ["straight_through", "reinforce"])
def test_stochastic_strategies_run(strategy):
    task = gen_region_task(4, 2, 2, n_samples=100, seed=1)
    layer = ConditionalLayer.create(4, 2, 2, np.random.default_rng(0), mode="stochastic")
    proj_before = layer.gate_config.gate_projection.copy()
    m = train(layer, task, CreditStrategy(strategy), epochs=2, seed=3)
    assert all(np.isfinite(m.epoch_mse))
    assert not np.array_equal(layer.gate_config.gate_projection, proj_before)


def test_modulated_strategy_runs():
    task = gen_region_task(4, 2, 2, n_samples=100, seed=1, input_low=0.0)
    layer = ConditionalLayer.create(4, 2, 2, np.random.default_rng(0), tau=0.5)
    m = train(layer, task, CreditStrategy("modulated"), epochs=3)
    assert m.epoch_mse[-1] < m.epoch_mse[0]


def test_gradcheck_suite_passes_small():
    report = gradcheck_suite(seed=1, n_configs=5)
    assert report.passed, report.to_text()
    assert "modulated/input" in report.max_error


def test_oracle_suites_pass():
    assert traversal_oracle_suite(seed=2, n_tables=20).passed
    assert all(r.passed for r in decay_equivalence_suite(seed=2, n_schedules=3, steps=50))


def test_cost_report_rows():
    rows = {r["k"]: r for r in cost_report(8, 8, [1, 3, 4, 8])}
    assert rows[3]["fwd_adds"] == 192
    assert rows[1]["fwd_madds"] == rows[8]["fwd_madds"] == 64
    assert rows[8]["ratio_gain"] / rows[4]["ratio_gain"] == 8.0
    assert rows[3]["params_exact"] == 8 * 8 * 15 and rows[3]["params_nominal"] == 8 * 8 * 16


def test_baseline_comparison_paired():
    task = gen_region_task(4, 3, 3, n_samples=150, seed=6)
    cond, dense = baseline_comparison(task, epochs=3, seed=6)
    cond2, dense2 = baseline_comparison(task, epochs=3, seed=6)
    assert comparison_csv(cond, dense) == comparison_csv(cond2, dense2)
    ratio = cond.params["total_table_entries"] / dense.params["total_table_entries"]
    assert ratio == 2 ** (3 + 1) - 1
    assert cond.forward_cost["multiply_adds"] == dense.forward_cost["multiply_adds"]
