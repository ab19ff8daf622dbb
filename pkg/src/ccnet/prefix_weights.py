"""Tree-structured prefix-sum weight tables.

Each input unit j owns a complete binary tree of depth k whose nodes hold
vectors in R^q. Node (level l, prefix v) lives at flat index 2**l - 1 + v,
with the first selected bit as the most significant bit of v. The effective
weight for a bit string b is the sum of the k + 1 node vectors on the path
from the root to the leaf spelled by b.
"""
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import CapacityError, DimensionError, DomainError

MAX_DEPTH = 24
ORACLE_MAX_DEPTH = 12


def n_nodes(k):
    return (1 << (k + 1)) - 1


def node_index(level, prefix, k=None):
    """Flat index of the node addressed by ``prefix`` (length ``level``)."""
    prefix = tuple(int(b) for b in prefix)
    if level < 0 or len(prefix) != level:
        raise DimensionError(f"prefix length {len(prefix)} != level {level}")
    if k is not None and level > k:
        raise DomainError(f"level {level} exceeds depth {k}")
    value = 0
    for b in prefix:
        if b not in (0, 1):
            raise DomainError(f"prefix bits must be 0/1, got {b}")
        value = 2 * value + b
    return (1 << level) - 1 + value


def node_from_index(index):
    """Inverse of ``node_index``: (level, prefix tuple)."""
    level = (int(index) + 1).bit_length() - 1
    value = index - ((1 << level) - 1)
    prefix = tuple((value >> (level - 1 - i)) & 1 for i in range(level))
    return level, prefix


class PrefixTreeTable:
    """Weight trees for p input units, stored as one (p, 2**(k+1) - 1, q) array.

    The array order (unit, node, component) is also the serialization order.
    """

    def __init__(self, p, q, k, entries=None):
        if p < 1 or q < 1:
            raise DimensionError(f"p and q must be >= 1, got p={p}, q={q}")
        if not 0 <= k <= MAX_DEPTH:
            raise CapacityError(f"depth k must be in [0, {MAX_DEPTH}], got {k}")
        self.p, self.q, self.k = int(p), int(q), int(k)
        shape = (self.p, n_nodes(self.k), self.q)
        if entries is None:
            self.entries = np.zeros(shape)
        else:
            entries = np.array(entries, dtype=np.float64)
            if entries.shape != shape:
                raise DimensionError(f"entries shape {entries.shape} != {shape}")
            if not np.all(np.isfinite(entries)):
                raise DomainError("table entries must be finite")
            self.entries = entries

    @classmethod
    def initialized(cls, p, q, k, rng):
        """Roots uniform in +-1/sqrt(p), deeper nodes zero."""
        table = cls(p, q, k)
        bound = 1.0 / np.sqrt(p)
        table.entries[:, 0, :] = rng.uniform(-bound, bound, size=(p, q))
        return table

    @property
    def n_nodes(self):
        return self.entries.shape[1]

    def copy(self):
        return PrefixTreeTable(self.p, self.q, self.k, self.entries.copy())

    def root_matrix(self):
        """The default (p, q) weight matrix held at the roots."""
        return self.entries[:, 0, :].copy()

    def path(self, b):
        """Node ids on the root-to-leaf path of bit string ``b``."""
        b = np.asarray(b, dtype=np.int64).reshape(1, -1)
        if b.shape[1] != self.k:
            raise DimensionError(f"bit string length {b.shape[1]} != k={self.k}")
        return kernels.path_nodes(b)[0]


def effective_weight(table, j, b, meter=None):
    """Sum of the node vectors on unit j's path for bits ``b``."""
    if not 0 <= j < table.p:
        raise DimensionError(f"unit {j} out of range for p={table.p}")
    nodes = table.path(b)
    w = table.entries[j, nodes[0]].copy()
    for node in nodes[1:]:
        w += table.entries[j, node]
    if meter is not None:
        meter.additions += table.k * table.q
        meter.lookups += table.k + 1
    return w


def naive_leaf_oracle(table, j, b):
    """Materialize all 2**k leaf sums by enumerating every path, then index by b.

    Test oracle only: shares no code with the traversal path.
    """
    k = table.k
    if k > ORACLE_MAX_DEPTH:
        raise CapacityError(f"oracle refuses k={k} > {ORACLE_MAX_DEPTH}")
    b = [int(v) for v in b]
    if len(b) != k:
        raise DimensionError(f"bit string length {len(b)} != k={k}")
    leaves = {}
    for leaf in range(1 << k):
        bits = [(leaf >> (k - 1 - i)) & 1 for i in range(k)]
        total = np.zeros(table.q)
        for level in range(k + 1):
            total = total + table.entries[j, node_index(level, bits[:level])]
        leaves[tuple(bits)] = total
    return leaves[tuple(b)]


def log_one_minus_tanh(x):
    """log(1 - tanh(x)), stable for large x."""
    x = np.asarray(x, dtype=np.float64)
    return np.log(2.0) - np.logaddexp(0.0, 2.0 * x)


def modulation_coefficients(x_gated):
    """Per-level coefficients for the modulated path.

    ``x_gated`` holds x at the gating indices, shape (..., k). Returns shape
    (..., k + 1) with column 0 fixed at 1 (the root) and column l equal to the
    geometric mean of (1 - tanh) over the first l gating inputs.
    """
    x_gated = np.asarray(x_gated, dtype=np.float64)
    if np.any(x_gated < 0):
        raise DomainError("modulating inputs must be non-negative")
    k = x_gated.shape[-1]
    logs = np.cumsum(log_one_minus_tanh(x_gated), axis=-1)
    levels = np.arange(1, k + 1, dtype=np.float64)
    out = np.ones(x_gated.shape[:-1] + (k + 1,))
    out[..., 1:] = np.exp(logs / levels)
    return out


def modulated_effective_weight(table, j, b, x, pi, meter=None):
    """Root vector plus each deeper path node scaled by its modulation coefficient.

    ``pi[i]`` is the input coordinate whose value modulates bit i of ``b``.
    """
    if not 0 <= j < table.p:
        raise DimensionError(f"unit {j} out of range for p={table.p}")
    x = np.asarray(x, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (table.k,):
        raise DimensionError(f"index map length {pi.shape} != k={table.k}")
    coeffs = modulation_coefficients(x[pi])
    nodes = table.path(b)
    w = table.entries[j, nodes].T @ coeffs
    if meter is not None:
        meter.additions += table.k * table.q
        meter.lookups += table.k + 1
        meter.modulation_mults += table.k * table.q
    return w


@dataclass(frozen=True)
class ParamReport:
    p: int
    q: int
    k: int
    nodes_per_unit: int
    paper_nominal_nodes_per_unit: int
    leaves_per_unit: int
    total_table_entries: int
    dense_equivalent_entries: int
    paper_nominal_entries: int
    leaf_entries: int
    capacity_ratio_gain: float

    def as_dict(self):
        return asdict(self)


def capacity_ratio_gain(k):
    """2**k / k; a depth-0 layer is dense and gains nothing (1.0)."""
    if k == 0:
        return 1.0
    return (2.0 ** k) / k


def count_parameters(p, q, k):
    if p < 1 or q < 1:
        raise DimensionError(f"p and q must be >= 1, got p={p}, q={q}")
    if k < 0:
        raise DomainError(f"depth must be >= 0, got {k}")
    if k > MAX_DEPTH:
        raise CapacityError(f"depth k={k} exceeds guard {MAX_DEPTH}")
    nodes = n_nodes(k)
    return ParamReport(
        p=p, q=q, k=k,
        nodes_per_unit=nodes,
        paper_nominal_nodes_per_unit=1 << (k + 1),
        leaves_per_unit=1 << k,
        total_table_entries=p * q * nodes,
        dense_equivalent_entries=p * q,
        paper_nominal_entries=p * q * (1 << (k + 1)),
        leaf_entries=p * q * (1 << k),
        capacity_ratio_gain=capacity_ratio_gain(k),
    )
