"""Exit criteria for the package, one test per criterion.

Each test prints a PASS/FAIL line; the lines are collected into a summary
section at the end of the pytest run.
"""
import time

import numpy as np

from ccnet import cli
from ccnet.cond_layer import ConditionalLayer, CreditStrategy, forward
from ccnet.cost import CostMeter
from ccnet.gating import stochastic_gates, sigmoid
from ccnet.harness import (
    bandit_gradient_samples, decay_equivalence_suite, exact_bandit_gradient, gate_bandit,
    gen_region_task, gradcheck_suite, train, traversal_oracle_suite,
)
from ccnet.model_io import load_model, save_model
from ccnet.prefix_weights import PrefixTreeTable, count_parameters, node_index


def test_c1_gradient_correctness(report_criterion):
    start = time.perf_counter()
    report = gradcheck_suite(seed=0, n_configs=50, tol=1e-5, step=1e-5)
    elapsed = time.perf_counter() - start
    worst = max(report.max_error.values())
    ok = report.passed and elapsed < 30
    report_criterion(1, "gradient correctness", ok, f"max_rel_err={worst:.2e} time={elapsed:.1f}s")
    assert report.passed, report.to_text()
    assert elapsed < 30


def test_c2_prefix_tree_oracle(report_criterion):
    start = time.perf_counter()
    result = traversal_oracle_suite(seed=0, n_tables=100, max_k=6, tol=1e-12)
    elapsed = time.perf_counter() - start
    ok = result.passed and elapsed < 10
    report_criterion(2, "prefix-tree oracle equivalence", ok,
                     f"max_abs_err={result.max_error:.2e} time={elapsed:.1f}s")
    assert ok


def test_c3_lazy_eager_decay(report_criterion):
    start = time.perf_counter()
    l2, l1 = decay_equivalence_suite(seed=0, n_schedules=20, steps=200, tol=1e-10)
    elapsed = time.perf_counter() - start
    ok = l2.passed and l1.passed and l1.max_error == 0.0 and elapsed < 10
    report_criterion(3, "lazy/eager decay equivalence", ok,
                     f"l2_rel_err={l2.max_error:.2e} l1_abs_err={l1.max_error:.1e} "
                     f"time={elapsed:.1f}s")
    assert ok


def test_c4_counting_claims(report_criterion):
    ok = True
    for k in range(11):
        table = PrefixTreeTable(2, 3, k)
        enumerated = {node_index(level, tuple((v >> (level - 1 - i)) & 1 for i in range(level)))
                      for level in range(k + 1) for v in range(2 ** level)}
        report = count_parameters(2, 3, k)
        ok &= len(enumerated) == report.nodes_per_unit == 2 ** (k + 1) - 1 == table.n_nodes
        ok &= table.entries.size == report.total_table_entries
        ok &= report.paper_nominal_nodes_per_unit - report.nodes_per_unit == 1
    gain4 = count_parameters(1, 1, 4).capacity_ratio_gain
    ok &= gain4 == 4.0
    ok &= all(count_parameters(1, 1, k).capacity_ratio_gain == 2 ** k / k for k in range(1, 25))
    report_criterion(4, "counting claims", ok, f"gain(k=4)={gain4}")
    assert ok


def test_c5_cost_claims(report_criterion):
    rng = np.random.default_rng(5)
    ok = True
    for _ in range(20):
        p, q = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        k = int(rng.integers(0, p + 1))
        meter = CostMeter()
        forward(ConditionalLayer.create(p, q, k, rng), rng.uniform(-1, 1, size=p), meter=meter)
        ok &= meter.multiply_adds == p * q and meter.additions == p * k * q
    madds = set()
    for k in range(0, 9):
        meter = CostMeter()
        forward(ConditionalLayer.create(8, 8, k, rng), rng.uniform(-1, 1, size=8), meter=meter)
        madds.add(meter.multiply_adds)
    ok &= madds == {64}
    report_criterion(5, "cost claims", ok, "20 shapes, madds invariant in k")
    assert ok


def test_c6_stochastic_gate_statistics(report_criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        p, m = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        x, U = rng.normal(size=p), rng.normal(size=(p, m))
        mu = sigmoid(x @ U)
        draws = np.array([stochastic_gates(x, U, rng)[0] for _ in range(10_000)])
        sd = np.sqrt(mu * (1 - mu) / 10_000)
        z = np.abs(draws.mean(axis=0) - mu) / np.where(sd > 0, sd, np.inf)
        worst = max(worst, float(z.max()))
    ok = worst <= 3.0
    report_criterion(6, "stochastic gating statistics", ok, f"max_z={worst:.2f}")
    assert ok


def test_c7_realizable_task_learning(report_criterion):
    task = gen_region_task(4, 4, 2, n_samples=2000, noise_sigma=0.0, seed=0)
    layer = ConditionalLayer.create(4, 4, 2, np.random.default_rng(1))
    start = time.perf_counter()
    metrics = train(layer, task, CreditStrategy("detached"), epochs=50, seed=0)
    elapsed = time.perf_counter() - start
    ok = metrics.final_mse < 1e-3 and elapsed < 60
    report_criterion(7, "realizable-task learning", ok,
                     f"final_mse={metrics.final_mse:.2e} time={elapsed:.1f}s")
    assert ok


def test_c8_reinforce_variance_and_bias(report_criterion):
    bandit = gate_bandit()
    variance_ok = True
    for seed in range(10):
        with_b = bandit_gradient_samples(bandit, 2000, seed, use_baseline=True)
        without = bandit_gradient_samples(bandit, 2000, seed, use_baseline=False)
        variance_ok &= with_b.var(axis=0).sum() <= without.var(axis=0).sum()
    samples = bandit_gradient_samples(bandit, 100_000, seed=123, use_baseline=True)
    exact = exact_bandit_gradient(bandit)
    se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    z = float(np.max(np.abs(samples.mean(axis=0) - exact) / se))
    ok = variance_ok and z <= 3.0
    report_criterion(8, "REINFORCE variance reduction and unbiasedness", ok,
                     f"variance_ok={variance_ok} max_z={z:.2f}")
    assert ok


def test_c9_determinism_and_serialization(report_criterion, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"epochs": 5, "n_samples": 300, "seed": 17}')
    csvs = []
    for run in range(2):
        out = tmp_path / f"metrics{run}.csv"
        assert cli.run_command(["train", "--config", str(cfg), "--out", str(out),
                                "--model-out", str(tmp_path / f"model{run}.json")]) == 0
        csvs.append(out.read_bytes())
    metrics_ok = csvs[0] == csvs[1]

    model_a = tmp_path / "model0.json"
    loaded = load_model(model_a)
    model_b = tmp_path / "resaved.json"
    save_model(loaded, model_b)
    bytes_ok = model_a.read_bytes() == model_b.read_bytes()

    again = load_model(model_b)
    X = np.random.default_rng(0).uniform(-1, 1, size=(50, loaded.p))
    forward_ok = all(np.array_equal(forward(loaded, x)[0], forward(again, x)[0]) for x in X)
    ok = metrics_ok and bytes_ok and forward_ok
    report_criterion(9, "determinism and serialization", ok,
                     f"metrics={metrics_ok} model_bytes={bytes_ok} forward={forward_ok}")
    assert ok
