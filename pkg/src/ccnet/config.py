"""Run configuration: JSON schema, defaults and validation.

Every key is optional; unknown keys are rejected so that typos fail loudly.

==================  =================  ==========================================
key                 default            meaning
==================  =================  ==========================================
p, q                4, 4               input / output width
k                   2                  tree depth (bits per unit), 0..24
m                   null (= p)         gate-vector length
gating              "deterministic"    or "stochastic"
tau                 0.0                threshold for deterministic gates
eval_policy         "threshold_mean"   or "sample" (stochastic gates at eval)
selector            "first_k"          or "sliding_window"
activation          "identity"         "tanh" or "relu"
strategy            "detached"         "straight_through", "modulated", "reinforce"
st_temperature      1.0                straight-through sigmoid temperature
epsilon             0.05               learning rate
lam                 0.0                decay coefficient
reg_kind            "none"             "l2" or "l1"
baseline_decay      0.9                REINFORCE moving-average decay
epochs              50
n_samples           2000
noise_sigma         0.0
input_low           -1.0               inputs are uniform(input_low, 1)
seed                0
metrics_out         "metrics.csv"
model_out           "model.json"
==================  =================  ==========================================
"""
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .cond_layer import ACTIVATIONS, MODULATED, REINFORCE, STRATEGIES
from .errors import ConfigError, ValidationError
from .gating import (
    DETERMINISTIC, FIRST_K, SAMPLE_AT_EVAL, SLIDING_WINDOW, STOCHASTIC,
    THRESHOLD_MEAN_AT_EVAL,
)
from .optimizer import REG_KINDS
from .prefix_weights import MAX_DEPTH


@dataclass
class RunConfig:
    p: int = 4
    q: int = 4
    k: int = 2
    m: Optional[int] = None
    gating: str = DETERMINISTIC
    tau: float = 0.0
    eval_policy: str = THRESHOLD_MEAN_AT_EVAL
    selector: str = FIRST_K
    activation: str = "identity"
    strategy: str = "detached"
    st_temperature: float = 1.0
    epsilon: float = 0.05
    lam: float = 0.0
    reg_kind: str = "none"
    baseline_decay: float = 0.9
    epochs: int = 50
    n_samples: int = 2000
    noise_sigma: float = 0.0
    input_low: float = -1.0
    seed: int = 0
    metrics_out: str = "metrics.csv"
    model_out: str = "model.json"

    @property
    def gate_length(self):
        return self.p if self.m is None else self.m

    def as_dict(self):
        return asdict(self)


_CHOICES = {
    "gating": (DETERMINISTIC, STOCHASTIC),
    "eval_policy": (THRESHOLD_MEAN_AT_EVAL, SAMPLE_AT_EVAL),
    "selector": (FIRST_K, SLIDING_WINDOW),
    "activation": tuple(ACTIVATIONS),
    "strategy": STRATEGIES,
    "reg_kind": tuple(REG_KINDS),
}


def _check_type(name, value, annotation):
    if annotation in (int, Optional[int]):
        if value is None and annotation is Optional[int]:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        if name in _CHOICES and value not in _CHOICES[name]:
            raise ConfigError(f"{name}: {value!r} is not one of {', '.join(_CHOICES[name])}")
        return value
    raise AssertionError(annotation)


def config_from_dict(data):
    """Build and validate a RunConfig from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name: f for f in fields(RunConfig)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = {name: _check_type(name, value, known[name].type) for name, value in data.items()}
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg):
    """Cross-field checks; raises ValidationError."""
    if cfg.p < 1 or cfg.q < 1:
        raise ValidationError("p and q must be >= 1")
    if not 0 <= cfg.k <= MAX_DEPTH:
        raise ValidationError(f"k={cfg.k} outside [0, {MAX_DEPTH}] (table capacity guard)")
    m = cfg.gate_length
    if m < 1:
        raise ValidationError("m must be >= 1")
    if cfg.k > m:
        raise ValidationError(f"k={cfg.k} exceeds gate length m={m}")
    if cfg.gating == DETERMINISTIC and m > cfg.p:
        raise ValidationError(f"deterministic gates need m <= p ({m} > {cfg.p})")
    if cfg.strategy == REINFORCE and cfg.gating != STOCHASTIC:
        raise ValidationError("reinforce strategy needs stochastic gating")
    if cfg.strategy == MODULATED:
        if m > cfg.p:
            raise ValidationError("modulated strategy needs m <= p")
        if cfg.input_low < 0:
            raise ValidationError("modulated strategy needs non-negative inputs (input_low >= 0)")
    if not cfg.st_temperature > 0:
        raise ValidationError("st_temperature must be > 0")
    if cfg.epsilon < 0 or cfg.lam < 0:
        raise ValidationError("epsilon and lam must be >= 0")
    if cfg.reg_kind == "l2" and cfg.epsilon * cfg.lam >= 1.0:
        raise ValidationError(f"epsilon*lam = {cfg.epsilon * cfg.lam} must be < 1 for l2 decay")
    if not 0.0 < cfg.baseline_decay < 1.0:
        raise ValidationError("baseline_decay must lie in (0, 1)")
    if cfg.epochs < 0 or cfg.n_samples < 1:
        raise ValidationError("epochs must be >= 0 and n_samples >= 1")
    if cfg.noise_sigma < 0:
        raise ValidationError("noise_sigma must be >= 0")
    if cfg.input_low >= 1.0:
        raise ValidationError("input_low must be < 1")
    return cfg


def parse_config(path):
    """Read a JSON config file. Missing files raise OSError."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(data)
