"""Numba-compiled kernels mirroring ``_numpy`` one for one."""
import numpy as np
from numba import njit

from ._numpy import ACT_RELU, ACT_TANH, REG_L1, REG_L2, REG_NONE  # noqa: F401


@njit(cache=True)
def path_nodes(bits):
    p, k = bits.shape
    nodes = np.zeros((p, k + 1), dtype=np.int64)
    for j in range(p):
        value = 0
        for level in range(1, k + 1):
            value = 2 * value + np.int64(bits[j, level - 1])
            nodes[j, level] = (1 << level) - 1 + value
    return nodes


@njit(cache=True)
def gather_weights(entries, nodes, coeffs):
    p, _, q = entries.shape
    depth = nodes.shape[1]
    w = np.zeros((p, q))
    for j in range(p):
        for level in range(depth):
            c = coeffs[j, level]
            node = nodes[j, level]
            for r in range(q):
                w[j, r] += c * entries[j, node, r]
    return w


@njit(cache=True)
def _decay_row(entries, u, node, dt, step_decay, reg):
    q = entries.shape[2]
    if reg == REG_L2:
        f = (1.0 - step_decay) ** dt
        for r in range(q):
            entries[u, node, r] *= f
    elif reg == REG_L1:
        shrink = step_decay * dt
        for r in range(q):
            v = entries[u, node, r]
            mag = abs(v) - shrink
            if mag <= 0.0:
                entries[u, node, r] = 0.0
            elif v > 0.0:
                entries[u, node, r] = mag
            else:
                entries[u, node, r] = -mag


@njit(cache=True)
def lazy_catch_up(entries, last, units, nodes, t, eps, lam, reg):
    step_decay = eps * lam
    for i in range(units.shape[0]):
        u = units[i]
        node = nodes[i]
        dt = t - last[u, node]
        if dt > 0 and reg != REG_NONE:
            _decay_row(entries, u, node, np.float64(dt), step_decay, reg)
        last[u, node] = t


@njit(cache=True)
def lazy_step(entries, last, units, nodes, grads, t, eps, lam, reg):
    lazy_catch_up(entries, last, units, nodes, t, eps, lam, reg)
    q = entries.shape[2]
    for i in range(units.shape[0]):
        for r in range(q):
            entries[units[i], nodes[i], r] -= eps * grads[i, r]


@njit(cache=True)
def train_epoch(X, Y, order, entries, bias, last, t, sel_idx, tau, act,
                eps, lam, reg, counters):
    p, _, q = entries.shape
    k = sel_idx.shape[1]
    step_decay = eps * lam
    nodes = np.zeros((p, k + 1), dtype=np.int64)
    w = np.zeros((p, q))
    pre = np.zeros(q)
    delta = np.zeros(q)
    for n in order:
        for j in range(p):
            value = 0
            for level in range(1, k + 1):
                bit = 1 if X[n, sel_idx[j, level - 1]] > tau else 0
                value = 2 * value + bit
                nodes[j, level] = (1 << level) - 1 + value
        # settle decay, then read the path
        for j in range(p):
            for r in range(q):
                w[j, r] = 0.0
            for level in range(k + 1):
                node = nodes[j, level]
                dt = t - last[j, node]
                if dt > 0 and reg != REG_NONE:
                    _decay_row(entries, j, node, np.float64(dt), step_decay, reg)
                last[j, node] = t
                for r in range(q):
                    w[j, r] += entries[j, node, r]
        for r in range(q):
            acc = bias[r]
            for j in range(p):
                acc += X[n, j] * w[j, r]
            pre[r] = acc
        for r in range(q):
            if act == ACT_TANH:
                h = np.tanh(pre[r])
                dphi = 1.0 - h * h
            elif act == ACT_RELU:
                h = pre[r] if pre[r] > 0.0 else 0.0
                dphi = 1.0 if pre[r] > 0.0 else 0.0
            else:
                h = pre[r]
                dphi = 1.0
            delta[r] = (h - Y[n, r]) * dphi
        t += 1
        for j in range(p):
            xj = X[n, j]
            for level in range(k + 1):
                node = nodes[j, level]
                if reg != REG_NONE:
                    _decay_row(entries, j, node, np.float64(t - last[j, node]),
                               step_decay, reg)
                last[j, node] = t
                for r in range(q):
                    entries[j, node, r] -= eps * xj * delta[r]
        for r in range(q):
            bias[r] -= eps * delta[r]
        counters[0] += p * q
        counters[1] += p * k * q
        counters[2] += p * (k + 1)
    return t
