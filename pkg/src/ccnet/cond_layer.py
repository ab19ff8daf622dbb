"""Conditionally parametrized layer: forward, dense baseline, and backward.

The layer computes h = act(sum_j x_j * w_j(x) + b) where w_j is read from
unit j's prefix tree along the path chosen by its selected gate bits.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, DomainError
from .gating import (
    DETERMINISTIC, FIRST_K, SAMPLE_AT_EVAL, STOCHASTIC, GateConfig,
    SelectorStrategy, gate_means, sigmoid,
)
from .prefix_weights import PrefixTreeTable, modulation_coefficients

IDENTITY = "identity"
TANH = "tanh"
RELU = "relu"
ACTIVATIONS = {IDENTITY: kernels.ACT_IDENTITY, TANH: kernels.ACT_TANH, RELU: kernels.ACT_RELU}

DETACHED = "detached"
STRAIGHT_THROUGH = "straight_through"
MODULATED = "modulated"
REINFORCE = "reinforce"
STRATEGIES = (DETACHED, STRAIGHT_THROUGH, MODULATED, REINFORCE)


def activate(pre, activation):
    """Return (h, dh/dpre). The rectifier's derivative at 0 is 0."""
    if activation == TANH:
        h = np.tanh(pre)
        return h, 1.0 - h * h
    if activation == RELU:
        return np.maximum(pre, 0.0), (pre > 0.0).astype(np.float64)
    if activation == IDENTITY:
        return np.array(pre, dtype=np.float64), np.ones_like(pre, dtype=np.float64)
    raise ConfigError(f"unknown activation {activation!r}")


@dataclass(frozen=True)
class CreditStrategy:
    kind: str = DETACHED
    st_temperature: float = 1.0

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ConfigError(f"unknown credit strategy {self.kind!r}")
        if not self.st_temperature > 0:
            raise ConfigError("st_temperature must be positive")


@dataclass
class ConditionalLayer:
    gate_config: GateConfig
    selector: SelectorStrategy
    table: PrefixTreeTable
    bias: np.ndarray
    activation: str = IDENTITY

    def __post_init__(self):
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.bias.shape != (self.table.q,):
            raise DimensionError(f"bias shape {self.bias.shape} != ({self.table.q},)")
        if self.selector.k != self.table.k:
            raise ConfigError(f"selector k={self.selector.k} != table depth {self.table.k}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        self.gate_config.validate(self.table.p)
        self.index_map = self.selector.index_map(self.table.p, self.gate_config.m)

    @classmethod
    def create(cls, p, q, k, rng, m=None, mode=DETERMINISTIC, tau=0.0,
               selector=FIRST_K, activation=IDENTITY, eval_policy="threshold_mean"):
        """Fresh layer: roots uniform(+-1/sqrt(p)), deeper nodes 0, bias 0.

        Stochastic gate projections are drawn N(0, 1/p).
        """
        m = p if m is None else m
        table = PrefixTreeTable.initialized(p, q, k, rng)
        projection = None
        if mode == STOCHASTIC:
            projection = rng.normal(0.0, 1.0 / np.sqrt(p), size=(p, m))
        gates = GateConfig(mode=mode, m=m, tau=tau, gate_projection=projection,
                           eval_policy=eval_policy)
        return cls(gates, SelectorStrategy(selector, k), table, np.zeros(q), activation)

    @property
    def p(self):
        return self.table.p

    @property
    def q(self):
        return self.table.q

    @property
    def k(self):
        return self.table.k

    @property
    def m(self):
        return self.gate_config.m

    def copy(self):
        gc = self.gate_config
        proj = None if gc.gate_projection is None else np.array(gc.gate_projection, dtype=np.float64)
        gates = GateConfig(gc.mode, gc.m, gc.tau, proj, gc.eval_policy)
        return ConditionalLayer(gates, self.selector, self.table.copy(), self.bias.copy(),
                                self.activation)

    def gates(self, x, rng=None, training=True, meter=None):
        """Gate bits for one input, plus sigmoid means in stochastic mode."""
        gc = self.gate_config
        if gc.mode == DETERMINISTIC:
            return (x[:gc.m] > gc.tau).astype(np.int8), None
        mu = gate_means(x, gc.gate_projection)
        if training or gc.eval_policy == SAMPLE_AT_EVAL:
            if rng is None:
                raise ConfigError("sampling stochastic gates requires an rng")
            if meter is not None:
                meter.rng_draws += gc.m
            return (rng.random(gc.m) < mu).astype(np.int8), mu
        return (mu >= 0.5).astype(np.int8), mu


@dataclass
class ForwardTrace:
    x: np.ndarray
    gates: np.ndarray
    bits: np.ndarray  # (p, k)
    nodes: np.ndarray  # (p, k + 1)
    coeffs: np.ndarray  # (p, k + 1); all ones unless modulated
    weights: np.ndarray  # (p, q) effective weights
    pre: np.ndarray
    h: np.ndarray
    strategy: str
    mean_probs: Optional[np.ndarray] = None


@dataclass
class LayerGrads:
    nodes: np.ndarray  # (p, k + 1) node ids touched, one path per unit
    d_table: np.ndarray  # (p, k + 1, q) gradient for each touched node
    d_bias: np.ndarray
    d_input: np.ndarray
    d_gate_projection: Optional[np.ndarray] = None

    def sparse(self):
        """{(unit, node): gradient vector} view of the table gradient."""
        out = {}
        for j in range(self.nodes.shape[0]):
            for level in range(self.nodes.shape[1]):
                out[(j, int(self.nodes[j, level]))] = self.d_table[j, level]
        return out

    def dense_table(self, n_nodes):
        """Scatter into a full (p, n_nodes, q) array; mainly for tests."""
        p, _, q = self.d_table.shape
        full = np.zeros((p, n_nodes, q))
        np.add.at(full, (np.arange(p)[:, None], self.nodes), self.d_table)
        return full


def _check_input(layer, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.p,):
        raise DimensionError(f"input shape {x.shape} != ({layer.p},)")
    if not np.all(np.isfinite(x)):
        raise DomainError("input must be finite")
    return x


def _modulating_inputs(layer, x):
    if layer.m > layer.p:
        raise ConfigError("modulated strategy needs m <= p to map gates onto inputs")
    gated = x[layer.index_map]
    if np.any(gated < 0):
        raise DomainError("modulated strategy needs non-negative inputs at gated indices")
    return gated


def forward(layer, x, strategy=None, rng=None, meter=None, training=True, gates=None):
    """One example through the layer; returns (h, trace).

    Passing ``gates`` replays a recorded gate pattern instead of drawing one.
    """
    strategy = strategy or CreditStrategy()
    x = _check_input(layer, x)
    if strategy.kind == REINFORCE and layer.gate_config.mode != STOCHASTIC:
        raise ConfigError("REINFORCE needs stochastic gates")
    if gates is None:
        g, mu = layer.gates(x, rng=rng, training=training, meter=meter)
    else:
        g = np.asarray(gates, dtype=np.int8)
        if g.shape != (layer.m,):
            raise DimensionError(f"gate vector shape {g.shape} != ({layer.m},)")
        mu = None
        if layer.gate_config.mode == STOCHASTIC:
            mu = gate_means(x, layer.gate_config.gate_projection)
    bits = g[layer.index_map]
    nodes = kernels.path_nodes(bits)
    if strategy.kind == MODULATED:
        coeffs = modulation_coefficients(_modulating_inputs(layer, x))
    else:
        coeffs = np.ones((layer.p, layer.k + 1))
    w = kernels.gather_weights(layer.table.entries, nodes, coeffs)
    pre = x @ w + layer.bias
    h, _ = activate(pre, layer.activation)
    if meter is not None:
        p, q, k = layer.p, layer.q, layer.k
        meter.multiply_adds += p * q
        meter.additions += p * k * q
        meter.lookups += p * (k + 1)
        if strategy.kind == MODULATED:
            meter.modulation_mults += p * k * q
    trace = ForwardTrace(x, g, bits, nodes, coeffs, w, pre, h, strategy.kind, mu)
    return h, trace


def dense_forward(W, bias, activation, x, meter=None):
    """Conventional layer act(W.T @ x + b) with W of shape (p, q)."""
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if W.ndim != 2 or x.shape != (W.shape[0],) or bias.shape != (W.shape[1],):
        raise DimensionError(f"incompatible shapes W{W.shape}, x{x.shape}, b{bias.shape}")
    h, _ = activate(x @ W + bias, activation)
    if meter is not None:
        meter.multiply_adds += W.shape[0] * W.shape[1]
    return h


def _gate_sensitivity(layer, trace, delta):
    """d(loss)/d(gate bit) for the multilinear relaxation of the tree, at hard gates.

    For bit i of unit j this is x_j * delta . (F_j(b, b_i=1) - F_j(b, b_i=0)).
    """
    entries = layer.table.entries
    p, k = layer.p, layer.k
    units = np.arange(p)
    d_gate = np.zeros(layer.m)
    for i in range(k):
        diff = np.zeros((p, layer.q))
        for level in range(i + 1, k + 1):
            on_path = trace.nodes[:, level]
            offset = (1 << level) - 1
            flipped = offset + ((on_path - offset) ^ (1 << (level - 1 - i)))
            diff += entries[units, on_path] - entries[units, flipped]
        sign = 2.0 * trace.bits[:, i] - 1.0
        contrib = trace.x * sign * (diff @ delta)
        np.add.at(d_gate, layer.index_map[:, i], contrib)
    return d_gate


def backward(layer, trace, dL_dh, strategy=None):
    """Gradients of a scalar loss given dL/dh for the traced example."""
    strategy = strategy or CreditStrategy()
    if trace.strategy != strategy.kind:
        raise ConfigError(f"trace recorded with {trace.strategy!r}, backward asked for {strategy.kind!r}")
    dL_dh = np.asarray(dL_dh, dtype=np.float64)
    if dL_dh.shape != (layer.q,):
        raise DimensionError(f"dL_dh shape {dL_dh.shape} != ({layer.q},)")
    x = trace.x
    _, dphi = activate(trace.pre, layer.activation)
    delta = dL_dh * dphi
    d_table = (x[:, None] * trace.coeffs)[:, :, None] * delta[None, None, :]
    d_input = trace.weights @ delta
    d_proj = None

    if strategy.kind == MODULATED and layer.k > 0:
        entries = layer.table.entries
        picked = entries[np.arange(layer.p)[:, None], trace.nodes]  # (p, k+1, q)
        s = x[:, None] * (picked @ delta)  # (p, k+1)
        levels = np.arange(1, layer.k + 1, dtype=np.float64)
        a = s[:, 1:] * trace.coeffs[:, 1:] / levels
        tail = np.cumsum(a[:, ::-1], axis=1)[:, ::-1]  # tail[:, i] = sum_{l > i} a
        gated = x[layer.index_map]
        dlog = -(1.0 + np.tanh(gated))
        np.add.at(d_input, layer.index_map, dlog * tail)

    elif strategy.kind == STRAIGHT_THROUGH and layer.k > 0:
        d_gate = _gate_sensitivity(layer, trace, delta)
        gc = layer.gate_config
        if gc.mode == DETERMINISTIC:
            t = strategy.st_temperature
            soft = sigmoid((x[:gc.m] - gc.tau) / t)
            d_input[:gc.m] += d_gate * soft * (1.0 - soft) / t
        else:
            mu = trace.mean_probs
            d_z = d_gate * mu * (1.0 - mu)
            d_proj = np.outer(x, d_z)
            d_input += gc.gate_projection @ d_z

    return LayerGrads(trace.nodes.copy(), d_table, delta.copy(), d_input, d_proj)


def predict(layer, X, strategy=None, rng=None, training=False):
    """Vectorized forward over rows of X (no trace, no metering)."""
    strategy = strategy or CreditStrategy()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    gc = layer.gate_config
    if gc.mode == DETERMINISTIC:
        G = (X[:, :gc.m] > gc.tau).astype(np.int64)
    else:
        mu = sigmoid(X @ gc.gate_projection)
        if training or gc.eval_policy == SAMPLE_AT_EVAL:
            G = (rng.random(mu.shape) < mu).astype(np.int64)
        else:
            G = (mu >= 0.5).astype(np.int64)
    bits = G[:, layer.index_map]  # (n, p, k)
    k = layer.k
    nodes = np.zeros((n, layer.p, k + 1), dtype=np.int64)
    value = np.zeros((n, layer.p), dtype=np.int64)
    for level in range(1, k + 1):
        value = 2 * value + bits[:, :, level - 1]
        nodes[:, :, level] = (1 << level) - 1 + value
    picked = layer.table.entries[np.arange(layer.p)[None, :, None], nodes]  # (n, p, k+1, q)
    if strategy.kind == MODULATED:
        coeffs = modulation_coefficients(np.stack([_modulating_inputs(layer, row) for row in X]))
        W = np.einsum("npl,nplq->npq", coeffs, picked)
    else:
        W = picked.sum(axis=2)
    pre = np.einsum("np,npq->nq", X, W) + layer.bias
    h, _ = activate(pre, layer.activation)
    return h

