"""Plain SGD with lazily applied L1/L2 decay, and the REINFORCE gate estimator.

Only the table nodes an example touches are updated. Each node remembers the
step at which its decay was last settled; the next time it is selected the
missed decay is applied in one go before the gradient step. ``finalize``
settles every node, after which the table equals one decayed eagerly at every
step.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import CapacityError, ConfigError, DomainError

REG_KINDS = {"none": kernels.REG_NONE, "l2": kernels.REG_L2, "l1": kernels.REG_L1}
EAGER_ORACLE_MAX_ENTRIES = 100_000
PROB_CLAMP = 1e-12


def lazy_l2_catchup(w, epsilon, lam, delta_t):
    """w * (1 - epsilon*lam) ** delta_t."""
    if epsilon * lam >= 1.0:
        raise ConfigError(f"epsilon*lambda = {epsilon * lam} >= 1 flips signs under L2 decay")
    if delta_t < 0:
        raise DomainError("delta_t must be >= 0")
    return np.asarray(w, dtype=np.float64) * (1.0 - epsilon * lam) ** delta_t


def lazy_l1_catchup(w, epsilon, lam, delta_t):
    """Move w toward 0 by epsilon*lam*delta_t without crossing 0."""
    if epsilon < 0 or lam < 0 or delta_t < 0:
        raise DomainError("epsilon, lambda and delta_t must be >= 0")
    w = np.asarray(w, dtype=np.float64)
    return np.sign(w) * np.maximum(0.0, np.abs(w) - epsilon * lam * delta_t)


@dataclass
class OptimizerConfig:
    epsilon: float = 0.05
    lam: float = 0.0
    reg_kind: str = "none"
    baseline_decay: float = 0.9

    def validate(self):
        if self.reg_kind not in REG_KINDS:
            raise ConfigError(f"unknown regularizer {self.reg_kind!r}")
        if self.epsilon < 0 or self.lam < 0:
            raise ConfigError("epsilon and lambda must be >= 0")
        if self.reg_kind == "l2" and self.epsilon * self.lam >= 1.0:
            raise ConfigError(f"epsilon*lambda = {self.epsilon * self.lam} must be < 1 for L2")
        if not 0.0 < self.baseline_decay < 1.0:
            raise ConfigError("baseline_decay must lie in (0, 1)")


class LazyRegState:
    """Per-node last-settled step counters for one (p, n_nodes, q) table."""

    def __init__(self, p, n_nodes, epsilon, lam, reg_kind="none"):
        if reg_kind not in REG_KINDS:
            raise ConfigError(f"unknown regularizer {reg_kind!r}")
        if reg_kind == "l2" and epsilon * lam >= 1.0:
            raise ConfigError(f"epsilon*lambda = {epsilon * lam} must be < 1 for L2")
        self.last_touched = np.zeros((p, n_nodes), dtype=np.int64)
        self.t = 0
        self.epsilon = float(epsilon)
        self.lam = float(lam)
        self.reg_kind = reg_kind
        self._reg = REG_KINDS[reg_kind]

    @classmethod
    def for_table(cls, table, config):
        return cls(table.p, table.n_nodes, config.epsilon, config.lam, config.reg_kind)

    def catch_up(self, entries, units, nodes):
        """Settle decay on the listed nodes through the last completed step."""
        kernels.lazy_catch_up(entries, self.last_touched, _idx(units), _idx(nodes),
                              self.t, self.epsilon, self.lam, self._reg)

    def step(self, entries, units, nodes, grads):
        """Advance one step: settle decay on the listed nodes, then w -= epsilon * grad."""
        self.t += 1
        grads = np.ascontiguousarray(grads, dtype=np.float64).reshape(len(units), entries.shape[2])
        kernels.lazy_step(entries, self.last_touched, _idx(units), _idx(nodes), grads,
                          self.t, self.epsilon, self.lam, self._reg)

    def finalize(self, entries):
        """Settle every node so the table reflects all decay through step t."""
        p, n_nodes = self.last_touched.shape
        units = np.repeat(np.arange(p, dtype=np.int64), n_nodes)
        nodes = np.tile(np.arange(n_nodes, dtype=np.int64), p)
        self.catch_up(entries, units, nodes)


def _idx(a):
    return np.ascontiguousarray(a, dtype=np.int64).ravel()


def sgd_apply(layer, grads, state):
    """One SGD step on the traversed nodes, the bias, and the gate projection.

    Decay touches only table nodes; bias and gate projection are updated
    without it.
    """
    p, depth, q = grads.d_table.shape
    units = np.repeat(np.arange(p, dtype=np.int64), depth)
    state.step(layer.table.entries, units, grads.nodes.ravel(), grads.d_table.reshape(-1, q))
    layer.bias -= state.epsilon * grads.d_bias
    if grads.d_gate_projection is not None:
        layer.gate_config.gate_projection -= state.epsilon * grads.d_gate_projection
    return layer, state


def eager_decay_oracle(initial, schedule, epsilon, lam, reg_kind):
    """Reference that decays every node at every step.

    ``initial`` is a (p, n_nodes, q) array; ``schedule`` is a list of steps,
    each a list of (unit, node, grad) triples. At each step every node is
    decayed once, then the listed gradients are applied.
    """
    w = np.array(initial, dtype=np.float64)
    if w.size > EAGER_ORACLE_MAX_ENTRIES:
        raise CapacityError(f"eager oracle refuses {w.size} entries")
    step_decay = epsilon * lam
    for touched in schedule:
        if reg_kind == "l2":
            w = w * (1.0 - step_decay)
        elif reg_kind == "l1":
            w = np.sign(w) * np.maximum(0.0, np.abs(w) - step_decay)
        for unit, node, grad in touched:
            w[unit, node] = w[unit, node] - epsilon * np.asarray(grad)
    return w


@dataclass
class ReinforceState:
    """Moving-average loss baseline; starts at the first observed loss."""

    decay: float = 0.9
    baseline: Optional[float] = None
    use_baseline: bool = True


def gate_log_likelihood(gate_projection, x, g):
    """log P(g | x) under independent Bernoulli(sigmoid(U.T x)) gates."""
    z = np.asarray(x, dtype=np.float64) @ np.asarray(gate_projection, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    # log sigmoid(z) = -log(1 + e^-z); log(1 - sigmoid(z)) = -log(1 + e^z)
    return float(np.sum(-g * np.logaddexp(0.0, -z) - (1.0 - g) * np.logaddexp(0.0, z)))


def score_function(g, mean_probs, x):
    """Gradient of log P(g | x) with respect to the gate projection, shape (p, m)."""
    mu = np.clip(np.asarray(mean_probs, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.outer(np.asarray(x, dtype=np.float64), np.asarray(g, dtype=np.float64) - mu)


def reinforce_gate_grad(loss, state, g, mean_probs, x):
    """(loss - baseline) * d log P(g|x) / dU, then update the baseline."""
    loss = float(loss)
    if state.use_baseline:
        if state.baseline is None:
            state.baseline = loss
        b = state.baseline
    else:
        b = 0.0
    grad = (loss - b) * score_function(g, mean_probs, x)
    if state.use_baseline:
        state.baseline = state.decay * b + (1.0 - state.decay) * loss
    return grad
