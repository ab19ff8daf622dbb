"""Versioned JSON model files.

Numbers are written with 17 significant digits so a save -> load -> save
round trip is byte-identical. The table is one flat list in (unit, node,
component) order, nodes in flat-index order.
"""
import json

import numpy as np

from .cond_layer import ConditionalLayer
from .errors import ModelFormatError
from .gating import STOCHASTIC, GateConfig, SelectorStrategy
from .prefix_weights import PrefixTreeTable, n_nodes

FORMAT_VERSION = 1


def _num(v):
    v = float(v)
    if not np.isfinite(v):
        raise ModelFormatError(f"cannot serialize non-finite value {v}")
    return format(v, ".17g")


def _array(values):
    return "[" + ", ".join(_num(v) for v in np.asarray(values, dtype=np.float64).ravel()) + "]"


def dumps_model(layer):
    gc = layer.gate_config
    proj = "null" if gc.gate_projection is None else _array(gc.gate_projection)
    return (
        "{\n"
        f'  "format_version": {FORMAT_VERSION},\n'
        f'  "p": {layer.p},\n'
        f'  "q": {layer.q},\n'
        f'  "k": {layer.k},\n'
        f'  "m": {layer.m},\n'
        f'  "gating": {{"mode": {json.dumps(gc.mode)}, "tau": {_num(gc.tau)}, '
        f'"eval_policy": {json.dumps(gc.eval_policy)}, "gate_projection": {proj}}},\n'
        f'  "selector": {json.dumps(layer.selector.kind)},\n'
        f'  "activation": {json.dumps(layer.activation)},\n'
        f'  "bias": {_array(layer.bias)},\n'
        f'  "table": {_array(layer.table.entries)}\n'
        "}\n"
    )


def _floats(name, values, expected):
    if not isinstance(values, list):
        raise ModelFormatError(f"{name} must be a list")
    if len(values) != expected:
        raise ModelFormatError(f"{name} payload has {len(values)} values, header implies {expected}")
    try:
        return np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{name} contains non-numeric values") from exc


def loads_model(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is truncated or malformed: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    try:
        p, q, k, m = (int(data[key]) for key in ("p", "q", "k", "m"))
        gating = data["gating"]
        mode = gating["mode"]
        proj = None
        if mode == STOCHASTIC:
            proj = _floats("gate_projection", gating["gate_projection"], p * m).reshape(p, m)
        gates = GateConfig(mode, m, float(gating["tau"]), proj, gating["eval_policy"])
        bias = _floats("bias", data["bias"], q)
        entries = _floats("table", data["table"], p * n_nodes(k) * q)
        table = PrefixTreeTable(p, q, k, entries.reshape(p, n_nodes(k), q))
        return ConditionalLayer(gates, SelectorStrategy(data["selector"], k), table, bias,
                                data["activation"])
    except KeyError as exc:
        raise ModelFormatError(f"model file is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"inconsistent model file: {exc}") from exc


def save_model(layer, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(layer))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
