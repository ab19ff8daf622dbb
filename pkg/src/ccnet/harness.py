"""Synthetic tasks, training loop, gradient checks and cost/capacity reports."""
import io
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .cond_layer import (
    ACTIVATIONS, DETACHED, IDENTITY, MODULATED, RELU, REINFORCE, STRAIGHT_THROUGH, TANH,
    ConditionalLayer, CreditStrategy, activate, backward, forward, predict,
)
from .cost import CostMeter
from .errors import DivergenceError
from .gating import (
    DETERMINISTIC, FIRST_K, SLIDING_WINDOW, STOCHASTIC, GateConfig, SelectorStrategy,
    sigmoid,
)
from .optimizer import (
    LazyRegState, OptimizerConfig, ReinforceState, eager_decay_oracle, gate_log_likelihood,
    reinforce_gate_grad, score_function, sgd_apply,
)
from .prefix_weights import (
    PrefixTreeTable, count_parameters, effective_weight, naive_leaf_oracle, node_index,
)

log = logging.getLogger(__name__)

DIVERGENCE_MSE = 1e6


@dataclass
class RegionTask:
    X: np.ndarray
    Y: np.ndarray
    truth: ConditionalLayer
    noise_sigma: float
    seed: int

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Y.shape[1]

    @property
    def k(self):
        return self.truth.k

    @property
    def m(self):
        return self.truth.m


def gen_region_task(p, q, k, m=None, n_samples=2000, noise_sigma=0.0, seed=0, input_low=-1.0):
    """Regression data labelled by a hidden conditional layer.

    The hidden layer uses threshold gates at 0, first-k selection and an
    identity output, with every tree node drawn uniform(+-1/sqrt(p)); inputs
    are uniform(input_low, 1). With ``noise_sigma = 0`` the task is exactly
    realizable by a layer of the same shape.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    m = p if m is None else m
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(p)
    table = PrefixTreeTable(p, q, k, rng.uniform(-bound, bound, size=(p, (1 << (k + 1)) - 1, q)))
    truth = ConditionalLayer(GateConfig(DETERMINISTIC, m, 0.0), SelectorStrategy(FIRST_K, k),
                             table, rng.uniform(-bound, bound, size=q), IDENTITY)
    X = rng.uniform(input_low, 1.0, size=(n_samples, p))
    Y = predict(truth, X)
    if noise_sigma > 0:
        Y = Y + rng.normal(0.0, noise_sigma, size=Y.shape)
    return RegionTask(X, Y, truth, float(noise_sigma), seed)


@dataclass
class RunMetrics:
    strategy: str
    seed: int
    epoch_mse: list = field(default_factory=list)
    epoch_costs: list = field(default_factory=list)  # (multiply_adds, additions, lookups)
    params: dict = field(default_factory=dict)
    forward_cost: dict = field(default_factory=dict)
    table_norm: float = 0.0
    wall_time: float = 0.0

    @property
    def final_mse(self):
        return self.epoch_mse[-1] if self.epoch_mse else float("nan")

    def to_csv(self):
        buf = io.StringIO()
        buf.write("epoch,mse,madds,adds,lookups\n")
        for epoch, (mse, cost) in enumerate(zip(self.epoch_mse, self.epoch_costs), start=1):
            buf.write(f"{epoch},{mse:.17g},{cost[0]},{cost[1]},{cost[2]}\n")
        return buf.getvalue()


def evaluate_mse(layer, X, Y, strategy=None, rng=None):
    return float(np.mean((predict(layer, X, strategy, rng=rng) - Y) ** 2))


def _can_fuse(layer, strategy):
    # with threshold gates and one layer, straight-through changes only d_input
    return (layer.gate_config.mode == DETERMINISTIC
            and strategy.kind in (DETACHED, STRAIGHT_THROUGH))


def train(layer, task, strategy=None, opt=None, epochs=10, seed=0, fused=None):
    """Per-example SGD on 0.5 * ||h - y||^2; mutates ``layer``.

    Each epoch visits the examples in a seeded random order. The table's lazy
    decay is settled at the end of every epoch, before evaluation. ``fused``
    forces (True) or forbids (False) the single-kernel epoch; by default it is
    used whenever the strategy allows.
    """
    strategy = strategy or CreditStrategy()
    opt = opt or OptimizerConfig()
    opt.validate()
    rng = np.random.default_rng(seed)
    state = LazyRegState.for_table(layer.table, opt)
    rstate = ReinforceState(decay=opt.baseline_decay)
    if fused is None:
        fused = _can_fuse(layer, strategy)
    elif fused and not _can_fuse(layer, strategy):
        raise ValueError(f"fused epochs need threshold gates and detached/straight-through credit")

    metrics = RunMetrics(strategy=strategy.kind, seed=seed,
                         params=count_parameters(layer.p, layer.q, layer.k).as_dict())
    per_example = CostMeter()
    forward(layer, task.X[0], strategy, rng=np.random.default_rng(0), meter=per_example,
            training=False)
    metrics.forward_cost = per_example.as_dict()

    X = np.ascontiguousarray(task.X)
    Y = np.ascontiguousarray(task.Y)
    start = time.perf_counter()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(X.shape[0])
        meter = CostMeter()
        with np.errstate(over="ignore", invalid="ignore"):
            if fused:
                counters = np.zeros(3, dtype=np.int64)
                state.t = kernels.train_epoch(
                    X, Y, order, layer.table.entries, layer.bias, state.last_touched, state.t,
                    np.ascontiguousarray(layer.index_map), float(layer.gate_config.tau),
                    ACTIVATIONS[layer.activation], state.epsilon, state.lam, state._reg,
                    counters)
                meter.multiply_adds, meter.additions, meter.lookups = (int(c) for c in counters)
            else:
                _train_epoch_general(layer, X, Y, order, strategy, state, rstate, rng, meter)
            state.finalize(layer.table.entries)
            mse = evaluate_mse(layer, X, Y, strategy, rng=rng)
        metrics.epoch_mse.append(mse)
        metrics.epoch_costs.append((meter.multiply_adds, meter.additions, meter.lookups))
        log.debug("epoch %d mse %.6g", epoch, mse)
        if not np.isfinite(mse) or mse > DIVERGENCE_MSE:
            raise DivergenceError(
                f"training diverged at epoch {epoch}: mse={mse:.6g}, "
                f"max |table|={np.nanmax(np.abs(layer.table.entries)):.6g}, "
                f"epsilon={opt.epsilon}, k={layer.k}")
    metrics.wall_time = time.perf_counter() - start
    metrics.table_norm = float(np.linalg.norm(layer.table.entries))
    return metrics


def _train_epoch_general(layer, X, Y, order, strategy, state, rstate, rng, meter):
    entries = layer.table.entries
    units = np.repeat(np.arange(layer.p, dtype=np.int64), layer.k + 1)
    for n in order:
        x = X[n]
        g, _ = layer.gates(x, rng=rng, training=True, meter=meter)
        nodes = kernels.path_nodes(g[layer.index_map])
        state.catch_up(entries, units, nodes.ravel())
        h, trace = forward(layer, x, strategy, meter=meter, gates=g)
        resid = h - Y[n]
        grads = backward(layer, trace, resid, strategy)
        if strategy.kind == REINFORCE:
            loss = 0.5 * float(resid @ resid)
            grads.d_gate_projection = reinforce_gate_grad(loss, rstate, g, trace.mean_probs, x)
        sgd_apply(layer, grads, state)


# ---------------------------------------------------------------- gradient checks

def central_difference(f, theta, step=1e-5):
    """Central-difference gradient of scalar f at theta (any shape)."""
    theta = np.array(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    flat = theta.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f(theta)
        flat[i] = orig - step
        down = f(theta)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def relative_error(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def relaxed_unit_weight(entries_j, gate_values):
    """Multilinear relaxation of one unit's tree, by enumerating every node.

    A node at prefix (b_1..b_l) carries prod_i (g_i if b_i else 1 - g_i). At
    0/1 gate values this is exactly the hard path sum.
    """
    k = len(gate_values)
    total = np.zeros(entries_j.shape[1])
    for level in range(k + 1):
        for v in range(1 << level):
            prefix = [(v >> (level - 1 - i)) & 1 for i in range(level)]
            coeff = 1.0
            for i, b in enumerate(prefix):
                coeff *= gate_values[i] if b else 1.0 - gate_values[i]
            total = total + coeff * entries_j[node_index(level, prefix)]
    return total


@dataclass
class GradcheckReport:
    tol: float
    max_error: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    n_configs: int = 0

    @property
    def passed(self):
        return not self.failures

    def record(self, group, err, config_id):
        self.max_error[group] = max(self.max_error.get(group, 0.0), err)
        if not err <= self.tol:
            self.failures.append((group, config_id, err))

    def to_text(self):
        lines = ["group,max_relative_error,status"]
        for group in sorted(self.max_error):
            err = self.max_error[group]
            status = "ok" if err <= self.tol else "FAIL"
            lines.append(f"{group},{err:.3e},{status}")
        lines.append(f"configs={self.n_configs} tol={self.tol:g} "
                     f"result={'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def random_layer(rng, p, q, k, m=None, mode=DETERMINISTIC, activation=IDENTITY,
                 selector=FIRST_K, tau=0.0):
    """Layer with every tree node random, for checks (training init leaves depth > 0 at 0)."""
    m = max(k, 1) if m is None else m
    table = PrefixTreeTable(p, q, k, rng.normal(0.0, 1.0, size=(p, (1 << (k + 1)) - 1, q)))
    proj = rng.normal(0.0, 1.0, size=(p, m)) if mode == STOCHASTIC else None
    return ConditionalLayer(GateConfig(mode, m, tau, proj), SelectorStrategy(selector, k),
                            table, rng.normal(0.0, 1.0, size=q), activation)


def _sample_config(rng, strategy_kind):
    while True:
        p = int(rng.integers(1, 9))
        q = int(rng.integers(1, 9))
        k = int(rng.integers(0, min(4, p) + 1))
        m = int(rng.integers(max(k, 1), p + 1))
        mode = DETERMINISTIC
        if strategy_kind in (STRAIGHT_THROUGH,) and rng.random() < 0.5:
            mode = STOCHASTIC
        activation = (IDENTITY, TANH, RELU)[int(rng.integers(0, 3))]
        selector = (FIRST_K, SLIDING_WINDOW)[int(rng.integers(0, 2))]
        layer = random_layer(rng, p, q, k, m, mode, activation, selector)
        if strategy_kind == MODULATED:
            x = rng.uniform(0.05, 2.0, size=p)
            layer.gate_config.tau = 0.6
        else:
            x = rng.uniform(-1.0, 1.0, size=p)
        # keep clear of gate thresholds and the rectifier kink so differences are smooth
        if mode == DETERMINISTIC and np.any(np.abs(x[:m] - layer.gate_config.tau) < 1e-3):
            continue
        _, trace = forward(layer, x, CreditStrategy(strategy_kind), rng=rng)
        if activation == RELU and np.any(np.abs(trace.pre) < 1e-3):
            continue
        return layer, x, trace


def _check_fixed_gate_grads(report, cid, layer, x, trace, strategy, prefix, step):
    rng = np.random.default_rng(cid)
    c = rng.normal(size=layer.q)
    grads = backward(layer, trace, c, strategy)
    g = trace.gates

    def loss_with_entries(vals):
        saved = layer.table.entries[units, nodes].copy()
        layer.table.entries[units, nodes] = vals
        h, _ = forward(layer, x, strategy, gates=g)
        layer.table.entries[units, nodes] = saved
        return float(c @ h)

    units = np.arange(layer.p)[:, None]
    nodes = trace.nodes
    num_table = central_difference(loss_with_entries, layer.table.entries[units, nodes], step)
    report.record(f"{prefix}/table", relative_error(grads.d_table, num_table), cid)

    def loss_with_bias(b):
        saved = layer.bias
        layer.bias = b
        h, _ = forward(layer, x, strategy, gates=g)
        layer.bias = saved
        return float(c @ h)

    report.record(f"{prefix}/bias",
                  relative_error(grads.d_bias, central_difference(loss_with_bias, layer.bias, step)),
                  cid)
    return grads, c


def gradcheck_suite(seed=0, n_configs=50, tol=1e-5, step=1e-5):
    """Finite-difference checks of every analytic gradient group.

    Fixed-gate groups (table, bias, input) are exact gradients and are checked
    against central differences with the gate pattern frozen. Straight-through
    input and gate-projection gradients are checked against differences of the
    multilinear tree relaxation, whose derivative they are by construction.
    """
    rng = np.random.default_rng(seed)
    report = GradcheckReport(tol=tol, n_configs=n_configs)
    for cid in range(n_configs):
        # detached gates
        layer, x, trace = _sample_config(rng, DETACHED)
        strat = CreditStrategy(DETACHED)
        grads, c = _check_fixed_gate_grads(report, cid, layer, x, trace, strat, "detached", step)

        def loss_x(xx, layer=layer, strat=strat, c=c, g=trace.gates):
            return float(c @ forward(layer, xx, strat, gates=g)[0])

        report.record("detached/input",
                      relative_error(grads.d_input, central_difference(loss_x, x, step)), cid)

        # straight-through: table and bias must coincide with detached
        st = CreditStrategy(STRAIGHT_THROUGH, st_temperature=float(rng.uniform(0.5, 2.0)))
        _, st_trace = forward(layer, x, st, gates=trace.gates)
        st_grads = backward(layer, st_trace, c, st)
        same = (np.array_equal(st_grads.d_table, grads.d_table)
                and np.array_equal(st_grads.d_bias, grads.d_bias))
        report.record("straight_through/equals_detached", 0.0 if same else np.inf, cid)

        layer_st, x_st, tr_st = _sample_config(rng, STRAIGHT_THROUGH)
        _check_fixed_gate_grads(report, cid, layer_st, x_st, tr_st, st, "straight_through", step)
        _check_straight_through_relaxation(report, cid, layer_st, x_st, tr_st, st, step)

        # modulated
        layer_m, x_m, tr_m = _sample_config(rng, MODULATED)
        mod = CreditStrategy(MODULATED)
        grads_m, c_m = _check_fixed_gate_grads(report, cid, layer_m, x_m, tr_m, mod,
                                               "modulated", step)

        def loss_xm(xx, layer=layer_m, c=c_m, g=tr_m.gates):
            return float(c @ forward(layer, xx, mod, gates=g)[0])

        report.record("modulated/input",
                      relative_error(grads_m.d_input, central_difference(loss_xm, x_m, step)), cid)

        # REINFORCE score function
        p = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        U = rng.normal(size=(p, m))
        xr = rng.normal(size=p)
        g = (rng.random(m) < sigmoid(xr @ U)).astype(np.int8)
        analytic = score_function(g, sigmoid(xr @ U), xr)
        numeric = central_difference(lambda UU: gate_log_likelihood(UU, xr, g), U, step)
        report.record("reinforce/log_likelihood", relative_error(analytic, numeric), cid)
    return report


def _check_straight_through_relaxation(report, cid, layer, x0, trace, strategy, step):
    if layer.k == 0:
        return
    rng = np.random.default_rng(10_000 + cid)
    c = rng.normal(size=layer.q)
    grads = backward(layer, trace, c, strategy)
    gc = layer.gate_config
    hard = trace.gates.astype(np.float64)
    entries = layer.table.entries
    temp = strategy.st_temperature

    def soft_gates(x, U):
        if gc.mode == DETERMINISTIC:
            return sigmoid((x[:gc.m] - gc.tau) / temp)
        return sigmoid(x @ U)

    U0 = None if gc.gate_projection is None else gc.gate_projection.copy()
    soft0 = soft_gates(x0, U0)

    def surrogate(x, U):
        gv = hard + soft_gates(x, U) - soft0
        w = np.stack([relaxed_unit_weight(entries[j], gv[layer.index_map[j]])
                      for j in range(layer.p)])
        h, _ = activate(x @ w + layer.bias, layer.activation)
        return float(c @ h)

    num_x = central_difference(lambda xx: surrogate(xx, U0), x0, step)
    report.record("straight_through/input_relaxed", relative_error(grads.d_input, num_x), cid)
    if gc.mode == STOCHASTIC:
        num_u = central_difference(lambda UU: surrogate(x0, UU), U0, step)
        report.record("straight_through/gate_projection_relaxed",
                      relative_error(grads.d_gate_projection, num_u), cid)


# ---------------------------------------------------------------- oracle suites

@dataclass
class SuiteResult:
    name: str
    max_error: float
    tol: float
    cases: int

    @property
    def passed(self):
        return self.max_error <= self.tol


def traversal_oracle_suite(seed=0, n_tables=100, max_k=6, tol=1e-12):
    """Path traversal against full leaf enumeration on random tables."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tables):
        p = int(rng.integers(1, 5))
        q = int(rng.integers(1, 5))
        k = int(rng.integers(0, max_k + 1))
        table = PrefixTreeTable(p, q, k, rng.normal(size=(p, (1 << (k + 1)) - 1, q)))
        for _ in range(4):
            j = int(rng.integers(0, p))
            b = rng.integers(0, 2, size=k)
            diff = np.abs(effective_weight(table, j, b) - naive_leaf_oracle(table, j, b))
            worst = max(worst, float(diff.max(initial=0.0)))
    return SuiteResult("traversal_vs_enumeration", worst, tol, n_tables)


def random_schedule(rng, p, n_nodes, q, steps, touch_prob=0.2, grad_prob=1.0):
    """Per-step lists of (unit, node, grad) with distinct (unit, node) pairs."""
    schedule = []
    for _ in range(steps):
        mask = rng.random((p, n_nodes)) < touch_prob
        touched = []
        for unit, node in zip(*np.nonzero(mask)):
            grad = rng.normal(size=q) if rng.random() < grad_prob else np.zeros(q)
            touched.append((int(unit), int(node), grad))
        schedule.append(touched)
    return schedule


def run_lazy_schedule(initial, schedule, epsilon, lam, reg_kind):
    """Replay a schedule through LazyRegState and settle all nodes at the end."""
    entries = np.array(initial, dtype=np.float64)
    p, n_nodes, q = entries.shape
    state = LazyRegState(p, n_nodes, epsilon, lam, reg_kind)
    for touched in schedule:
        units = np.array([u for u, _, _ in touched], dtype=np.int64)
        nodes = np.array([n for _, n, _ in touched], dtype=np.int64)
        grads = np.array([g for _, _, g in touched], dtype=np.float64).reshape(len(touched), q)
        state.step(entries, units, nodes, grads)
    state.finalize(entries)
    return entries


def decay_equivalence_suite(seed=0, n_schedules=20, steps=200, tol=1e-10):
    """Lazy catch-up against the eager per-step oracle.

    L2 runs with gradients at every touch and compares at ``tol`` relative.
    L1 runs with gradient-free touches and dyadic epsilon*lambda, where the
    stepwise shrink and the one-shot catch-up are both exact, so equality is
    required bit for bit.
    """
    rng = np.random.default_rng(seed)
    worst_l2 = 0.0
    worst_l1 = 0.0
    for _ in range(n_schedules):
        p = int(rng.integers(1, 4))
        q = int(rng.integers(1, 4))
        k = int(rng.integers(0, 4))
        n_nodes = (1 << (k + 1)) - 1
        initial = rng.normal(size=(p, n_nodes, q))

        eps, lam = float(rng.uniform(0.01, 0.1)), float(rng.uniform(0.01, 0.5))
        sched = random_schedule(rng, p, n_nodes, q, steps)
        lazy = run_lazy_schedule(initial, sched, eps, lam, "l2")
        eager = eager_decay_oracle(initial, sched, eps, lam, "l2")
        scale = max(np.abs(eager).max(), 1e-300)
        worst_l2 = max(worst_l2, float(np.abs(lazy - eager).max() / scale))

        eps1, lam1 = 0.0625, 0.0625  # epsilon * lambda = 2**-8
        sched = random_schedule(rng, p, n_nodes, q, steps, grad_prob=0.0)
        lazy = run_lazy_schedule(initial, sched, eps1, lam1, "l1")
        eager = eager_decay_oracle(initial, sched, eps1, lam1, "l1")
        worst_l1 = max(worst_l1, float(np.abs(lazy - eager).max()))
    return [SuiteResult("lazy_l2_vs_eager", worst_l2, tol, n_schedules),
            SuiteResult("lazy_l1_vs_stepwise", worst_l1, 0.0, n_schedules)]


# ---------------------------------------------------------------- cost and comparison

def cost_report(p, q, k_values, seed=0):
    """Measured forward cost and parameter counts for each depth in ``k_values``."""
    rng = np.random.default_rng(seed)
    rows = []
    for k in k_values:
        layer = ConditionalLayer.create(p, q, k, rng)
        meter = CostMeter()
        forward(layer, rng.uniform(-1.0, 1.0, size=p), meter=meter)
        report = count_parameters(p, q, k)
        rows.append({
            "k": k,
            "params_exact": report.total_table_entries,
            "params_nominal": report.paper_nominal_entries,
            "fwd_madds": meter.multiply_adds,
            "fwd_adds": meter.additions,
            "fwd_lookups": meter.lookups,
            "ratio_gain": report.capacity_ratio_gain,
        })
    return rows


def baseline_comparison(task, strategy=None, opt=None, epochs=10, seed=0, compute_budget=None):
    """Train the conditional layer and an equal-cost dense layer on the same task.

    The dense baseline is a depth-0 layer of the same output width, so its
    per-example multiply-adds equal the conditional layer's p*q. Returns the
    pair (conditional, dense); no winner is declared.
    """
    strategy = strategy or CreditStrategy()
    budget = task.p * task.q if compute_budget is None else compute_budget
    if budget != task.p * task.q:
        raise ValueError(f"dense baseline must match the task width; budget {budget} != p*q")
    cond = ConditionalLayer.create(task.p, task.q, task.k, np.random.default_rng(seed),
                                   m=task.m)
    dense = ConditionalLayer.create(task.p, task.q, 0, np.random.default_rng(seed), m=task.m)
    dense_strategy = CreditStrategy(DETACHED)
    return (train(cond, task, strategy, opt, epochs, seed),
            train(dense, task, dense_strategy, opt, epochs, seed))


def comparison_csv(cond, dense):
    lines = ["model,strategy,final_mse,table_entries,fwd_madds,fwd_adds,fwd_lookups"]
    for name, m in (("conditional", cond), ("dense", dense)):
        fc = m.forward_cost
        lines.append(f"{name},{m.strategy},{m.final_mse:.17g},{m.params['total_table_entries']},"
                     f"{fc['multiply_adds']},{fc['additions']},{fc['lookups']}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- REINFORCE smoke task

@dataclass(frozen=True)
class GateBandit:
    """Two stochastic gates on a fixed input, with a loss for each gate pattern."""

    x: np.ndarray
    gate_projection: np.ndarray
    losses: dict  # (g0, g1) -> loss

    def expected_loss(self, gate_projection=None):
        U = self.gate_projection if gate_projection is None else gate_projection
        mu = sigmoid(self.x @ U)
        total = 0.0
        for pattern, loss in self.losses.items():
            g = np.array(pattern, dtype=np.float64)
            total += loss * float(np.prod(np.where(g == 1, mu, 1.0 - mu)))
        return total


def gate_bandit():
    return GateBandit(
        x=np.array([1.0, -0.5, 0.25]),
        gate_projection=np.array([[0.3, -0.2], [0.1, 0.4], [-0.5, 0.2]]),
        losses={(0, 0): 3.0, (0, 1): 3.5, (1, 0): 2.0, (1, 1): 4.0},
    )


def exact_bandit_gradient(bandit):
    """Gradient of the expected loss by enumerating all four gate patterns."""
    mu = sigmoid(bandit.x @ bandit.gate_projection)
    grad = np.zeros_like(bandit.gate_projection)
    for pattern, loss in bandit.losses.items():
        g = np.array(pattern, dtype=np.float64)
        prob = float(np.prod(np.where(g == 1, mu, 1.0 - mu)))
        grad += loss * prob * score_function(g, mu, bandit.x)
    return grad


def bandit_gradient_samples(bandit, n, seed, use_baseline=True, decay=0.9):
    """n REINFORCE estimates, shape (n, p, 2); gate draws depend only on seed."""
    rng = np.random.default_rng(seed)
    state = ReinforceState(decay=decay, use_baseline=use_baseline)
    mu = sigmoid(bandit.x @ bandit.gate_projection)
    out = np.empty((n,) + bandit.gate_projection.shape)
    for i in range(n):
        g = (rng.random(mu.shape[0]) < mu).astype(np.int8)
        loss = bandit.losses[tuple(int(v) for v in g)]
        out[i] = reinforce_gate_grad(loss, state, g, mu, bandit.x)
    return out
