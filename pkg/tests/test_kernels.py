import os
import subprocess
import sys

import numpy as np
import pytest

from ccnet import kernels
from ccnet.cond_layer import ConditionalLayer, CreditStrategy, TANH
from ccnet.harness import gen_region_task, train
from ccnet.kernels import get_backend
from ccnet.optimizer import OptimizerConfig

BACKENDS = [get_backend("numpy"), get_backend("numba")]


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("cuda")


def test_path_nodes_agree(rng):
    bits = rng.integers(0, 2, size=(7, 5))
    a, b = (kern.path_nodes(bits) for kern in BACKENDS)
    assert np.array_equal(a, b)
    assert a[0, 0] == 0 and np.all(a[:, 5] >= 31)


def test_gather_agree(rng):
    entries = rng.normal(size=(4, 15, 3))
    nodes = BACKENDS[0].path_nodes(rng.integers(0, 2, size=(4, 3)))
    coeffs = rng.uniform(size=(4, 4))
    np.testing.assert_allclose(BACKENDS[0].gather_weights(entries, nodes, coeffs),
                               BACKENDS[1].gather_weights(entries, nodes, coeffs),
                               rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("reg", [kernels.REG_NONE, kernels.REG_L2, kernels.REG_L1])
def test_lazy_step_agree(rng, reg):
    base = rng.normal(size=(3, 7, 2))
    units = np.array([0, 1, 2, 2], dtype=np.int64)
    nodes = np.array([0, 4, 1, 6], dtype=np.int64)
    grads = rng.normal(size=(4, 2))
    out = []
    for kern in BACKENDS:
        entries = base.copy()
        last = np.zeros((3, 7), dtype=np.int64)
        last[2, 6] = 3
        kern.lazy_step(entries, last, units, nodes, grads, 5, 0.1, 0.3, reg)
        out.append((entries, last))
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-14, atol=1e-15)
    assert np.array_equal(out[0][1], out[1][1])


@pytest.mark.parametrize("act", [kernels.ACT_IDENTITY, kernels.ACT_TANH, kernels.ACT_RELU])
@pytest.mark.parametrize("reg", [kernels.REG_NONE, kernels.REG_L2, kernels.REG_L1])
def test_train_epoch_agree(rng, act, reg):
    p, q, k = 4, 3, 2
    X = rng.uniform(-1, 1, size=(50, p))
    Y = rng.normal(size=(50, q))
    order = rng.permutation(50)
    sel = np.tile(np.arange(k), (p, 1))
    base = rng.normal(0, 0.3, size=(p, 7, q))
    out = []
    for kern in BACKENDS:
        entries, bias, last = base.copy(), np.zeros(q), np.zeros((p, 7), dtype=np.int64)
        counters = np.zeros(3, dtype=np.int64)
        t = kern.train_epoch(X, Y, order, entries, bias, last, 0, sel, 0.0, act,
                             0.05, 0.2, reg, counters)
        out.append((entries, bias, last, t, counters))
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-10, atol=1e-12)
    assert np.array_equal(out[0][2], out[1][2])
    assert out[0][3] == out[1][3] == 50
    assert np.array_equal(out[0][4], out[1][4])
    assert out[0][4].tolist() == [50 * p * q, 50 * p * k * q, 50 * p * (k + 1)]


@pytest.mark.parametrize("reg", ["none", "l2", "l1"])
def test_fused_epoch_matches_general_path(reg):
    task = gen_region_task(4, 3, 2, n_samples=200, seed=3)
    opt = OptimizerConfig(0.05, 0.1, reg)
    results = []
    for fused in (True, False):
        layer = ConditionalLayer.create(4, 3, 2, np.random.default_rng(1), activation=TANH)
        metrics = train(layer, task, CreditStrategy(), opt, epochs=3, seed=5, fused=fused)
        results.append((layer, metrics))
    (a, ma), (b, mb) = results
    np.testing.assert_allclose(a.table.entries, b.table.entries, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.bias, b.bias, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(ma.epoch_mse, mb.epoch_mse, rtol=1e-9)
    assert ma.epoch_costs == mb.epoch_costs


def test_env_flag_selects_numpy():
    env = dict(os.environ, CCNET_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", "from ccnet import kernels; print(kernels.backend)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_default_backend_is_numba():
    if os.environ.get("CCNET_DISABLE_JIT", "0") not in ("", "0"):
        pytest.skip("JIT disabled by environment")
    assert kernels.backend == "numba"
