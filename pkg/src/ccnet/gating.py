"""Hard binary gates and per-unit bit selection."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError

DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"
SAMPLE_AT_EVAL = "sample"
THRESHOLD_MEAN_AT_EVAL = "threshold_mean"

FIRST_K = "first_k"
SLIDING_WINDOW = "sliding_window"


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, -z))


@dataclass
class GateConfig:
    """How a layer turns its input into m hard bits.

    Deterministic mode reads ``x[:m] > tau``. Stochastic mode samples each bit
    from Bernoulli(sigmoid(gate_projection.T @ x)), with ``gate_projection``
    of shape (p, m).
    """

    mode: str = DETERMINISTIC
    m: int = 1
    tau: float = 0.0
    gate_projection: Optional[np.ndarray] = None
    eval_policy: str = THRESHOLD_MEAN_AT_EVAL

    def validate(self, p):
        if self.m < 1:
            raise ConfigError(f"gate length m must be >= 1, got {self.m}")
        if self.mode == DETERMINISTIC:
            if self.gate_projection is not None:
                raise ConfigError("gate_projection is only used in stochastic mode")
            if self.m > p:
                raise ConfigError(f"deterministic gates need m <= p ({self.m} > {p})")
        elif self.mode == STOCHASTIC:
            if self.gate_projection is None:
                raise ConfigError("stochastic mode requires gate_projection")
            if np.shape(self.gate_projection) != (p, self.m):
                raise ConfigError(
                    f"gate_projection shape {np.shape(self.gate_projection)} != {(p, self.m)}")
        else:
            raise ConfigError(f"unknown gating mode {self.mode!r}")
        if self.eval_policy not in (SAMPLE_AT_EVAL, THRESHOLD_MEAN_AT_EVAL):
            raise ConfigError(f"unknown eval policy {self.eval_policy!r}")


@dataclass(frozen=True)
class SelectorStrategy:
    """Which k gate bits index unit j's weight tree.

    ``first_k`` gives every unit bits 0..k-1. ``sliding_window`` gives unit j
    bits (j // k + i) mod m for i in 0..k-1. k = 0 selects nothing.
    """

    kind: str = FIRST_K
    k: int = 1

    def validate(self, m):
        if self.kind not in (FIRST_K, SLIDING_WINDOW):
            raise ConfigError(f"unknown selector kind {self.kind!r}")
        if not 0 <= self.k <= m:
            raise ConfigError(f"selector needs 0 <= k <= m, got k={self.k}, m={m}")

    def unit_indices(self, j, m):
        if self.kind == FIRST_K or self.k == 0:
            return np.arange(self.k, dtype=np.int64)
        start = j // self.k
        return (start + np.arange(self.k, dtype=np.int64)) % m

    def index_map(self, p, m):
        """Gate indices for every unit, shape (p, k)."""
        self.validate(m)
        if self.kind == FIRST_K or self.k == 0:
            return np.tile(np.arange(self.k, dtype=np.int64), (p, 1))
        starts = np.arange(p, dtype=np.int64) // self.k
        return (starts[:, None] + np.arange(self.k, dtype=np.int64)[None, :]) % m


def deterministic_gates(x, tau, m):
    """Bits ``x[i] > tau`` for i < m; ties give 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("x must be a vector")
    if m < 1 or m > x.shape[0]:
        raise DimensionError(f"need 1 <= m <= p, got m={m}, p={x.shape[0]}")
    return (x[:m] > tau).astype(np.int8)


def gate_means(x, gate_projection):
    x = np.asarray(x, dtype=np.float64)
    U = np.asarray(gate_projection, dtype=np.float64)
    if U.ndim != 2 or x.ndim != 1 or U.shape[0] != x.shape[0]:
        raise DimensionError(f"gate_projection {U.shape} incompatible with x {x.shape}")
    return sigmoid(x @ U)


def stochastic_gates(x, gate_projection, rng):
    """Sample Bernoulli gates; returns (bits, mean_probs).

    Consumes exactly m uniforms from ``rng``.
    """
    mu = gate_means(x, gate_projection)
    bits = (rng.random(mu.shape[0]) < mu).astype(np.int8)
    return bits, mu


def select_bits(g, j, strategy):
    """The k bits of ``g`` assigned to unit ``j``."""
    g = np.asarray(g)
    strategy.validate(g.shape[0])
    if j < 0:
        raise DimensionError(f"unit index must be >= 0, got {j}")
    return g[strategy.unit_indices(j, g.shape[0])]
