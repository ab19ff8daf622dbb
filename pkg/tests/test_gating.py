import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccnet.errors import ConfigError, DimensionError
from ccnet.gating import (
    FIRST_K, SLIDING_WINDOW, STOCHASTIC, GateConfig, SelectorStrategy,
    deterministic_gates, select_bits, sigmoid, stochastic_gates,
)


def test_deterministic_gates_basic():
    assert deterministic_gates([0.5, -0.2, 1.0], 0.0, 3).tolist() == [1, 0, 1]


def test_deterministic_gates_tie_is_zero():
    assert deterministic_gates([0.0, 0.0], 0.0, 2).tolist() == [0, 0]


def test_deterministic_gates_fraction():
    x = np.random.default_rng(0).uniform(-1, 1, size=100)
    frac = deterministic_gates(x, 0.0, 100).mean()
    # 3 sigma binomial band for n=100, p=0.5: 0.5 +- 0.15
    assert 0.35 <= frac <= 0.65


@pytest.mark.parametrize("m", [0, 4])
def test_deterministic_gates_bad_m(m):
    with pytest.raises(DimensionError):
        deterministic_gates([1.0, 2.0, 3.0], 0.0, m)


def test_deterministic_gates_pure():
    x = np.array([0.3, -1.0, 2.0, 0.1])
    assert np.array_equal(deterministic_gates(x, 0.2, 4), deterministic_gates(x, 0.2, 4))


def test_stochastic_zero_projection_gives_half(rng):
    _, mu = stochastic_gates(rng.normal(size=5), np.zeros((5, 3)), rng)
    assert np.array_equal(mu, np.full(3, 0.5))


def test_stochastic_saturation():
    x = np.array([1.0])
    U = np.array([[30.0]])
    _, mu = stochastic_gates(x, U, np.random.default_rng(0))
    assert mu[0] >= 1 - 1e-12


def test_stochastic_replay():
    x = np.array([0.2, -0.4, 1.0])
    U = np.random.default_rng(1).normal(size=(3, 6))
    a, _ = stochastic_gates(x, U, np.random.default_rng(9))
    b, _ = stochastic_gates(x, U, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_stochastic_dimension_mismatch(rng):
    with pytest.raises(DimensionError):
        stochastic_gates(np.ones(3), np.ones((4, 2)), rng)


def test_stochastic_empirical_mean():
    rng = np.random.default_rng(3)
    x = rng.normal(size=4)
    U = rng.normal(size=(4, 3))
    mu = sigmoid(x @ U)
    draws = np.array([stochastic_gates(x, U, rng)[0] for _ in range(10_000)])
    se = np.sqrt(mu * (1 - mu) / 10_000)
    assert np.all(np.abs(draws.mean(axis=0) - mu) <= 3 * se)


def test_select_first_k():
    g = np.array([1, 0, 1, 1])
    for j in range(5):
        assert select_bits(g, j, SelectorStrategy(FIRST_K, 2)).tolist() == [1, 0]


def test_select_sliding_window():
    g = np.array([1, 0, 1, 1])
    assert select_bits(g, 2, SelectorStrategy(SLIDING_WINDOW, 2)).tolist() == [0, 1]


def test_select_sliding_window_wraps():
    g = np.array([1, 0, 1, 1])
    # unit 7 starts at 7 // 2 = 3: indices (3, 0)
    assert select_bits(g, 7, SelectorStrategy(SLIDING_WINDOW, 2)).tolist() == [1, 1]


def test_select_full_vector_is_identity():
    g = np.array([0, 1, 1, 0, 1])
    assert np.array_equal(select_bits(g, 3, SelectorStrategy(FIRST_K, 5)), g)


def test_selector_k_above_m():
    with pytest.raises(ConfigError):
        SelectorStrategy(FIRST_K, 5).validate(4)


@settings(max_examples=60, deadline=None)
@given(m=st.integers(1, 12), data=st.data())
def test_index_map_audit(m, data):
    k = data.draw(st.integers(0, m))
    p = data.draw(st.integers(1, 20))
    kind = data.draw(st.sampled_from([FIRST_K, SLIDING_WINDOW]))
    strat = SelectorStrategy(kind, k)
    idx = strat.index_map(p, m)
    assert idx.shape == (p, k)
    assert np.all((idx >= 0) & (idx < m))
    g = np.arange(m) % 2
    for j in range(p):
        assert np.array_equal(select_bits(g, j, strat), g[idx[j]])


def test_gate_config_validation():
    with pytest.raises(ConfigError):
        GateConfig(mode=STOCHASTIC, m=2).validate(3)
    with pytest.raises(ConfigError):
        GateConfig(m=4).validate(3)
    GateConfig(mode=STOCHASTIC, m=5, gate_projection=np.zeros((3, 5))).validate(3)
