"""Pure-numpy reference kernels.

Every function here has a twin in ``_numba`` with an identical signature.
Arrays are mutated in place where noted; no function allocates the table.
"""
import numpy as np

REG_NONE, REG_L2, REG_L1 = 0, 1, 2
ACT_IDENTITY, ACT_TANH, ACT_RELU = 0, 1, 2


def path_nodes(bits):
    """Flat node ids along each unit's root-to-leaf path.

    ``bits`` has shape (p, k) with the first selected bit most significant.
    Returns an int64 array of shape (p, k + 1); column ``l`` is the node at
    depth ``l``.
    """
    bits = np.asarray(bits, dtype=np.int64)
    p, k = bits.shape
    nodes = np.zeros((p, k + 1), dtype=np.int64)
    value = np.zeros(p, dtype=np.int64)
    for level in range(1, k + 1):
        value = 2 * value + bits[:, level - 1]
        nodes[:, level] = (1 << level) - 1 + value
    return nodes


def gather_weights(entries, nodes, coeffs):
    """Per-unit effective weights, sum_l coeffs[j, l] * entries[j, nodes[j, l]]."""
    p = entries.shape[0]
    picked = entries[np.arange(p)[:, None], nodes]  # (p, k+1, q)
    return np.einsum("jl,jlq->jq", coeffs, picked)


def _decay(w, dt, step_decay, reg):
    if reg == REG_L2:
        return w * (1.0 - step_decay) ** dt[:, None]
    if reg == REG_L1:
        return np.sign(w) * np.maximum(0.0, np.abs(w) - step_decay * dt[:, None])
    return w


def lazy_catch_up(entries, last, units, nodes, t, eps, lam, reg):
    """Bring the listed nodes' decay up to step ``t`` in place."""
    if reg == REG_NONE or units.size == 0:
        last[units, nodes] = t
        return
    dt = (t - last[units, nodes]).astype(np.float64)
    entries[units, nodes] = _decay(entries[units, nodes], dt, eps * lam, reg)
    last[units, nodes] = t


def lazy_step(entries, last, units, nodes, grads, t, eps, lam, reg):
    """Catch up the listed nodes to step ``t`` then apply ``-eps * grads``.

    (unit, node) pairs must be distinct.
    """
    lazy_catch_up(entries, last, units, nodes, t, eps, lam, reg)
    entries[units, nodes] -= eps * grads


def _activate(pre, act):
    if act == ACT_TANH:
        h = np.tanh(pre)
        return h, 1.0 - h * h
    if act == ACT_RELU:
        return np.maximum(pre, 0.0), (pre > 0.0).astype(np.float64)
    return pre.copy(), np.ones_like(pre)


def train_epoch(X, Y, order, entries, bias, last, t, sel_idx, tau, act,
                eps, lam, reg, counters):
    """One pass of per-example SGD with hard threshold gates and detached gates.

    Loss per example is 0.5 * ||h - y||^2. Path nodes are caught up to the
    previous step before the lookup so the forward pass sees settled weights.
    ``counters`` (int64[3]) accumulates multiply-adds, additions, lookups.
    Returns the step counter after the epoch.
    """
    p, n_nodes, q = entries.shape
    k = sel_idx.shape[1]
    units = np.repeat(np.arange(p), k + 1)
    for n in order:
        x = X[n]
        bits = (x[sel_idx] > tau).astype(np.int64)
        nodes = path_nodes(bits)
        flat_nodes = nodes.ravel()
        lazy_catch_up(entries, last, units, flat_nodes, t, eps, lam, reg)
        w = entries[units, flat_nodes].reshape(p, k + 1, q).sum(axis=1)
        pre = x @ w + bias
        h, dphi = _activate(pre, act)
        delta = (h - Y[n]) * dphi
        t += 1
        grads = np.repeat(x, k + 1)[:, None] * delta[None, :]
        lazy_step(entries, last, units, flat_nodes, grads, t, eps, lam, reg)
        bias -= eps * delta
        counters[0] += p * q
        counters[1] += p * k * q
        counters[2] += p * (k + 1)
    return t
