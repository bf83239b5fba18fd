"""Five full-batch trainers over the sum-of-squared-errors loss, plus the
sequential and partitioned-ensemble training entry points.

Conventions shared by every trainer:

* residual e = (targets - outputs) stacked row-major, shape (2 * batch,)
* E_D = eT e
* J = d(outputs)/d(params), shape (2 * batch) x n_params, so grad E_D = -2 JT e

The Levenberg-Marquardt step solves (JT J + mu I) dx = JT e and applies
params + dx; with this Jacobian convention that is exactly the classic
damped Gauss-Newton update written with an error Jacobian and a minus sign,
and an accepted step always lowers the objective.  When the batch is small
the damped system is solved in residual space through the push-through
identity (JT J + mu I)^-1 JT = JT (J JT + mu I)^-1, which turns an
n_params-sized solve into a (2 * batch)-sized one; the achieved residual of
the original system is verified every step and a direct solve is the
fallback.  Bayesian regularization minimizes F = gamma E_D + (1-gamma) E_w
(E_w = squared weights, biases excluded) with the same LM machinery on an
augmented residual, so gamma = 1 reproduces plain LM bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    DimensionMismatch,
    Diverged,
    PartitionTooSmall,
    SingleClassDataset,
    SolveFailure,
)
from .network import (
    Network,
    GlobalModel,
    flatten_params,
    forward_pass,
    init_network,
    weight_entry_mask,
    with_params,
)
from .samples import Dataset, FORGED, GENUINE, canonical_order

#: Target rows per label.
TARGET_GENUINE = (1.0, 0.0)
TARGET_FORGED = (0.0, 1.0)

ALGORITHMS = ("lm", "gd", "cg", "rprop", "bayes")

LM_MU_MIN = 1e-12
LM_SOLVE_TOL = 1e-8


def encode_targets(labels) -> np.ndarray:
    """(B, 2) target matrix: genuine -> (1, 0), forged -> (0, 1)."""
    labels = np.asarray(labels)
    t = np.empty((labels.shape[0], 2))
    genuine = labels == GENUINE
    t[genuine] = TARGET_GENUINE
    t[~genuine] = TARGET_FORGED
    return t


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters for all five algorithms (unused ones are ignored)."""

    algorithm: str = "lm"
    max_epochs: int = 100
    goal: float = 0.0            # stop once the training objective reaches this
    seed: int = 0
    hidden: tuple[int, ...] = (10,)
    # Levenberg-Marquardt damping schedule
    mu0: float = 1e-3
    mu_up: float = 10.0
    mu_down: float = 10.0
    mu_max: float = 1e12
    # gradient descent
    learning_rate: float = 0.01
    # resilient backpropagation
    rprop_grow: float = 1.2
    rprop_shrink: float = 0.5
    rprop_step0: float = 0.1
    rprop_step_min: float = 1e-6
    rprop_step_max: float = 50.0
    # Bayesian regularization weight
    gamma: float = 0.9
    # conjugate gradient line search
    cg_shrink: float = 0.5
    cg_decrease: float = 1e-4

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.max_epochs < 0 or self.goal < 0:
            raise ValueError("max_epochs and goal must be non-negative")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        positive = (
            self.mu0, self.mu_up, self.mu_down, self.mu_max, self.learning_rate,
            self.rprop_grow, self.rprop_shrink, self.rprop_step0,
            self.rprop_step_min, self.rprop_step_max, self.cg_shrink, self.cg_decrease,
        )
        if any(v <= 0 for v in positive):
            raise ValueError("trainer constants must be positive")
        if any(int(h) < 1 for h in self.hidden):
            raise ValueError(f"hidden sizes must be >= 1, got {self.hidden}")


@dataclass
class TrainResult:
    network: Network
    trace: np.ndarray        # E_D before training, then after each epoch
    stop_reason: str         # goal | max_epochs | mu_max | gradient | line_search
    epochs: int


# --- derivatives ------------------------------------------------------------

def _param_offsets(net: Network) -> list[tuple[int, int, int]]:
    """(weight start, bias start, bias end) of each layer in the flat vector."""
    offsets, pos = [], 0
    for w, b in zip(net.weights, net.biases):
        offsets.append((pos, pos + w.size, pos + w.size + b.size))
        pos += w.size + b.size
    return offsets


def _jacobian_from_acts(net: Network, acts: list[np.ndarray]) -> np.ndarray:
    """d(outputs)/d(params) given cached activations, shape (2B, n_params)."""
    batch = acts[0].shape[0]
    out = acts[-1]
    jac = np.zeros((batch, 2, net.n_params))
    offsets = _param_offsets(net)
    for j in (0, 1):
        delta = np.zeros_like(out)
        delta[:, j] = out[:, j] * (1.0 - out[:, j])
        for l in reversed(range(len(net.weights))):
            w_start, b_start, b_end = offsets[l]
            grads_w = np.einsum("bo,bi->boi", delta, acts[l])
            jac[:, j, w_start:b_start] = grads_w.reshape(batch, -1)
            jac[:, j, b_start:b_end] = delta
            if l > 0:
                delta = (delta @ net.weights[l]) * (1.0 - acts[l] ** 2)
    return jac.reshape(2 * batch, net.n_params)


def jacobian(net: Network, x: np.ndarray) -> np.ndarray:
    """J = d(outputs)/d(params) over a batch, shape (2*|batch|, n_params)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise DimensionMismatch("batch is empty")
    return _jacobian_from_acts(net, forward_pass(net, x))


def residual(net: Network, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """e = (targets - outputs) stacked, shape (2*|batch|,)."""
    targets = np.asarray(targets, dtype=float)
    out = forward_pass(net, x)[-1]
    if targets.shape != out.shape:
        raise DimensionMismatch(
            f"targets shape {targets.shape} does not match outputs {out.shape}"
        )
    return (targets - out).ravel()


def gradient(net: Network, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """grad E_D = -2 JT e."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise DimensionMismatch("batch is empty")
    acts = forward_pass(net, x)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != acts[-1].shape:
        raise DimensionMismatch(
            f"targets shape {targets.shape} does not match outputs {acts[-1].shape}"
        )
    e = (targets - acts[-1]).ravel()
    return -2.0 * (_jacobian_from_acts(net, acts).T @ e)


# --- Levenberg-Marquardt -------------------------------------------------------

@dataclass
class LmState:
    """One LM iteration's fixed quantities: params, residual, Jacobian, damping."""

    params: np.ndarray
    residual: np.ndarray
    jac: np.ndarray
    mu: float


@dataclass
class LmStepResult:
    delta: np.ndarray
    mu: float                # damping after the accept/reject update
    accepted: bool
    params: np.ndarray       # new params if accepted, otherwise the originals
    error: float             # objective at the returned params
    solve_residual: float    # relative residual of the damped linear solve


def _damped_solve(
    jac: np.ndarray, e: np.ndarray, g: np.ndarray, mu: float
) -> tuple[np.ndarray, float]:
    """Solve (JT J + mu I) d = g (g = JT e), returning (d, relative residual).

    Tries the residual-space form first when it is smaller, then the direct
    normal equations, then least squares; keeps the best-conditioned answer.
    """
    m, w = jac.shape
    g_norm = float(np.linalg.norm(g))

    def rel_residual(d: np.ndarray) -> float:
        r = jac.T @ (jac @ d) + mu * d - g
        return float(np.linalg.norm(r)) / g_norm

    candidates = []
    if m < w:
        try:
            dual = jac @ jac.T
            dual[np.diag_indices_from(dual)] += mu
            delta = jac.T @ cho_solve(cho_factor(dual), e)
            if np.all(np.isfinite(delta)):
                res = rel_residual(delta)
                if res <= LM_SOLVE_TOL:
                    return delta, res
                candidates.append((res, delta))
        except LinAlgError:
            pass
    normal = jac.T @ jac
    normal[np.diag_indices_from(normal)] += mu
    try:
        delta = cho_solve(cho_factor(normal), g)
        if np.all(np.isfinite(delta)):
            res = rel_residual(delta)
            if res <= LM_SOLVE_TOL:
                return delta, res
            candidates.append((res, delta))
    except LinAlgError:
        pass
    delta = np.linalg.lstsq(normal, g, rcond=None)[0]
    if np.all(np.isfinite(delta)):
        candidates.append((rel_residual(delta), delta))
    if not candidates:
        raise SolveFailure("damped linear solve produced no finite solution")
    res, delta = min(candidates, key=lambda c: c[0])
    return delta, res


def lm_step(
    state: LmState,
    objective,
    mu_up: float = 10.0,
    mu_down: float = 10.0,
    mu_max: float = 1e12,
) -> LmStepResult:
    """One damped Gauss-Newton trial step.

    `objective(params) -> error` evaluates the training objective at a
    candidate point (for plain LM that is E_D).  The step is accepted only
    if the objective strictly decreased; otherwise the parameters are kept
    and the damping grows.
    """
    if state.mu > mu_max:
        raise Diverged(f"damping {state.mu} exceeds mu_max {mu_max}")
    e, jac = state.residual, state.jac
    error_now = float(e @ e)
    g = jac.T @ e
    if not np.any(g):
        delta, solve_res = np.zeros_like(state.params), 0.0
    else:
        delta, solve_res = _damped_solve(jac, e, g, state.mu)
        if not np.all(np.isfinite(delta)):
            raise SolveFailure("non-finite step")
    tentative = state.params + delta
    error_try = float(objective(tentative))
    if math.isfinite(error_try) and error_try < error_now:
        return LmStepResult(
            delta=delta,
            mu=max(state.mu / mu_down, LM_MU_MIN),
            accepted=True,
            params=tentative,
            error=error_try,
            solve_residual=solve_res,
        )
    return LmStepResult(
        delta=delta,
        mu=state.mu * mu_up,
        accepted=False,
        params=state.params,
        error=error_now,
        solve_residual=solve_res,
    )


def _train_lm(net, x, targets, cfg, gamma, monitor=None) -> TrainResult:
    params = flatten_params(net)
    augmented = gamma < 1.0
    sqrt_fit = math.sqrt(gamma)
    sqrt_reg = math.sqrt(1.0 - gamma)
    wsel = weight_entry_mask(net)
    if augmented:
        selector = np.zeros((int(wsel.sum()), params.size))
        selector[np.arange(int(wsel.sum())), np.flatnonzero(wsel)] = sqrt_reg

    def evaluate(p: np.ndarray) -> tuple[float, float]:
        """(objective, E_D) at p."""
        out = forward_pass(with_params(net, p), x)[-1]
        e = (targets - out).ravel()
        e_d = float(e @ e)
        if not augmented:
            return e_d, e_d
        w = p[wsel]
        return float(gamma * e_d + (1.0 - gamma) * (w @ w)), e_d

    objective = lambda p: evaluate(p)[0]
    error_obj, error_d = evaluate(params)
    if not math.isfinite(error_obj):
        raise Diverged("initial error is not finite")
    trace = [error_d]
    mu = cfg.mu0
    stop, epochs = "max_epochs", 0
    for epoch in range(cfg.max_epochs):
        if error_obj <= cfg.goal:
            stop = "goal"
            break
        current = with_params(net, params)
        acts = forward_pass(current, x)
        e = (targets - acts[-1]).ravel()
        jac = _jacobian_from_acts(current, acts)
        if augmented:
            e_use = np.concatenate([sqrt_fit * e, -params[wsel] * sqrt_reg])
            jac_use = np.vstack([sqrt_fit * jac, selector])
        else:
            e_use, jac_use = e, jac
        accepted = False
        while True:
            result = lm_step(
                LmState(params=params, residual=e_use, jac=jac_use, mu=mu),
                objective,
                mu_up=cfg.mu_up,
                mu_down=cfg.mu_down,
                mu_max=cfg.mu_max,
            )
            if monitor is not None:
                monitor(
                    {
                        "epoch": epoch,
                        "mu": mu,
                        "mu_new": result.mu,
                        "accepted": result.accepted,
                        "solve_residual": result.solve_residual,
                        "error": result.error,
                    }
                )
            mu = result.mu
            if result.accepted:
                params = result.params
                error_obj = result.error
                accepted = True
                break
            if mu > cfg.mu_max:
                break
        epochs = epoch + 1
        if augmented:
            error_obj, error_d = evaluate(params)
        else:
            error_d = error_obj
        trace.append(error_d)
        if not accepted:
            stop = "mu_max"
            break
    else:
        if error_obj <= cfg.goal:
            stop = "goal"
    return TrainResult(with_params(net, params), np.asarray(trace), stop, epochs)


# --- first-order trainers ---------------------------------------------------------

def _sse_at(net, x, targets, params) -> float:
    out = forward_pass(with_params(net, params), x)[-1]
    e = (targets - out).ravel()
    return float(e @ e)


def _grad_at(net, x, targets, params) -> np.ndarray:
    current = with_params(net, params)
    acts = forward_pass(current, x)
    e = (targets - acts[-1]).ravel()
    return -2.0 * (_jacobian_from_acts(current, acts).T @ e)


def _train_gd(net, x, targets, cfg) -> TrainResult:
    params = flatten_params(net)
    error = _sse_at(net, x, targets, params)
    trace = [error]
    stop, epochs = "max_epochs", 0
    for epoch in range(cfg.max_epochs):
        if error <= cfg.goal:
            stop = "goal"
            break
        params = params - cfg.learning_rate * _grad_at(net, x, targets, params)
        error = _sse_at(net, x, targets, params)
        if not math.isfinite(error):
            raise Diverged(f"gradient descent diverged at epoch {epoch}")
        trace.append(error)
        epochs = epoch + 1
    else:
        if error <= cfg.goal:
            stop = "goal"
    return TrainResult(with_params(net, params), np.asarray(trace), stop, epochs)


def rprop_update(
    grad: np.ndarray,
    prev_grad: np.ndarray,
    steps: np.ndarray,
    grow: float = 1.2,
    shrink: float = 0.5,
    step_min: float = 1e-6,
    step_max: float = 50.0,
) -> tuple[np.ndarray, np.ndarray]:
    """One resilient-backprop update: returns (param delta, new step sizes).

    Step sizes grow where the gradient kept its sign, shrink where it
    flipped, and always stay inside [step_min, step_max].
    """
    sign_product = grad * prev_grad
    steps = np.where(
        sign_product > 0, steps * grow, np.where(sign_product < 0, steps * shrink, steps)
    )
    steps = np.clip(steps, step_min, step_max)
    return -np.sign(grad) * steps, steps


def _train_rprop(net, x, targets, cfg) -> TrainResult:
    params = flatten_params(net)
    error = _sse_at(net, x, targets, params)
    trace = [error]
    steps = np.full(params.size, cfg.rprop_step0)
    prev_grad = np.zeros(params.size)
    stop, epochs = "max_epochs", 0
    for epoch in range(cfg.max_epochs):
        if error <= cfg.goal:
            stop = "goal"
            break
        grad_now = _grad_at(net, x, targets, params)
        delta, steps = rprop_update(
            grad_now,
            prev_grad,
            steps,
            grow=cfg.rprop_grow,
            shrink=cfg.rprop_shrink,
            step_min=cfg.rprop_step_min,
            step_max=cfg.rprop_step_max,
        )
        params = params + delta
        prev_grad = grad_now
        error = _sse_at(net, x, targets, params)
        if not math.isfinite(error):
            raise Diverged(f"rprop diverged at epoch {epoch}")
        trace.append(error)
        epochs = epoch + 1
    else:
        if error <= cfg.goal:
            stop = "goal"
    return TrainResult(with_params(net, params), np.asarray(trace), stop, epochs)


def _train_cg(net, x, targets, cfg) -> TrainResult:
    """Fletcher-Reeves nonlinear CG with a backtracking Armijo line search.

    The direction restarts to steepest descent every n_params iterations and
    whenever it stops being a descent direction.
    """
    params = flatten_params(net)
    error = _sse_at(net, x, targets, params)
    trace = [error]
    grad_now = _grad_at(net, x, targets, params)
    direction = -grad_now
    since_restart = 0
    stop, epochs = "max_epochs", 0
    for epoch in range(cfg.max_epochs):
        if error <= cfg.goal:
            stop = "goal"
            break
        if not np.any(grad_now):
            stop = "gradient"
            break
        if since_restart >= params.size:
            direction = -grad_now
            since_restart = 0
        moved = False
        candidate, error_try = params, error
        for attempt in (0, 1):
            slope = float(grad_now @ direction)
            if slope >= 0:
                if attempt == 0:
                    direction = -grad_now
                    since_restart = 0
                    continue
                break
            alpha = 1.0
            for _ in range(60):
                candidate = params + alpha * direction
                error_try = _sse_at(net, x, targets, candidate)
                if math.isfinite(error_try) and error_try <= error + cfg.cg_decrease * alpha * slope:
                    moved = True
                    break
                alpha *= cfg.cg_shrink
            if moved or attempt == 1:
                break
            direction = -grad_now
            since_restart = 0
        if not moved:
            stop = "line_search"
            break
        params, error = candidate, error_try
        grad_new = _grad_at(net, x, targets, params)
        beta = float(grad_new @ grad_new) / float(grad_now @ grad_now)
        direction = -grad_new + beta * direction
        grad_now = grad_new
        since_restart += 1
        trace.append(error)
        epochs = epoch + 1
    else:
        if error <= cfg.goal:
            stop = "goal"
    return TrainResult(with_params(net, params), np.asarray(trace), stop, epochs)


# --- entry points ---------------------------------------------------------------------

def train(
    net: Network,
    x: np.ndarray,
    targets: np.ndarray,
    cfg: TrainerConfig,
    monitor=None,
) -> TrainResult:
    """Train `net` on a full batch with the configured algorithm.

    Deterministic given (x, targets, cfg); `monitor`, if given, receives a
    dict per LM trial step (used by diagnostics and tests).
    """
    cfg.validate()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    targets = np.asarray(targets, dtype=float)
    if x.shape[0] == 0:
        raise DimensionMismatch("training batch is empty")
    if x.shape[1] != net.input_dim:
        raise DimensionMismatch(
            f"input dim {x.shape[1]} does not match network input {net.input_dim}"
        )
    if targets.shape != (x.shape[0], 2):
        raise DimensionMismatch(
            f"targets must have shape ({x.shape[0]}, 2), got {targets.shape}"
        )
    if cfg.algorithm == "lm":
        return _train_lm(net, x, targets, cfg, gamma=1.0, monitor=monitor)
    if cfg.algorithm == "bayes":
        return _train_lm(net, x, targets, cfg, gamma=cfg.gamma, monitor=monitor)
    if cfg.algorithm == "gd":
        return _train_gd(net, x, targets, cfg)
    if cfg.algorithm == "rprop":
        return _train_rprop(net, x, targets, cfg)
    return _train_cg(net, x, targets, cfg)


def _train_rows(ds: Dataset, rows: np.ndarray, cfg: TrainerConfig, seed: int) -> Network:
    x = ds.vectors[rows]
    targets = encode_targets(ds.labels[rows])
    net = init_network((ds.dim, *cfg.hidden, 2), seed)
    return train(net, x, targets, cfg).network


def train_sample(ds: Dataset, cfg: TrainerConfig | None = None) -> Network:
    """Train one network on a dataset (canonical row order, both labels required)."""
    cfg = cfg or TrainerConfig()
    order = canonical_order(ds)
    labels = set(ds.labels.tolist())
    if not {GENUINE, FORGED} <= labels:
        raise SingleClassDataset(f"need both labels, found {sorted(labels)}")
    return _train_rows(ds, order, cfg, cfg.seed)


def dist_train_sample(
    ds: Dataset, cfg: TrainerConfig | None = None, partitions: int = 4
) -> GlobalModel:
    """Round-robin the samples of every (user, label) group into `partitions`
    stratified partitions, train one local network per partition concurrently
    (seed + partition index), and combine them as a score-averaging ensemble.
    """
    cfg = cfg or TrainerConfig()
    if partitions < 1:
        raise ValueError(f"partitions must be >= 1, got {partitions}")
    order = canonical_order(ds)
    users, labels = ds.user_ids[order], ds.labels[order]
    assignment = np.empty(len(order), dtype=int)
    group_start = 0
    for i in range(1, len(order) + 1):
        boundary = i == len(order) or (users[i], labels[i]) != (
            users[group_start],
            labels[group_start],
        )
        if not boundary:
            continue
        assignment[group_start:i] = np.arange(i - group_start) % partitions
        group_start = i
    part_rows = [order[assignment == p] for p in range(partitions)]
    for p, rows in enumerate(part_rows):
        present = set(ds.labels[rows].tolist())
        if not {GENUINE, FORGED} <= present:
            raise PartitionTooSmall(
                f"partition {p} holds labels {sorted(present)}; lower `partitions`"
            )
    if partitions == 1:
        return GlobalModel([_train_rows(ds, part_rows[0], cfg, cfg.seed)])
    with ThreadPoolExecutor(max_workers=partitions) as pool:
        nets = list(
            pool.map(
                lambda p: _train_rows(ds, part_rows[p], cfg, cfg.seed + p),
                range(partitions),
            )
        )
    return GlobalModel(nets)
