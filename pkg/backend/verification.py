"""Numeric oracles for the theory behind PENEX.

Each check compares an implementation against an independent computation:
closed forms against iterative solvers, the margin bound against measured
margin frequencies, and the implicit weak learner against a brute-force
direction search.
"""

import logging
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from boosting import classifier_weight
from datasets import Dataset, gen_blobs, split
from errors import OracleFailure, ParameterError
from losses import (
    conex_aug_lagrangian_loss,
    conex_sq_penalty_loss,
    confidence_penalty_loss,
    cross_entropy,
    ex_loss,
    focal_loss,
    label_smoothing_loss,
    margin,
    penex_inference_probs,
    penex_loss,
    sum_exp_mean,
)
from models import (
    BoundCheck,
    CheckResult,
    DirectionCheck,
    LossKind,
    LossSpec,
    ModelSpec,
    OptimSpec,
    TrainConfig,
    VerificationReport,
    WeakLearnerReport,
)
from networks import MLPClassifier, init_model
from penalty_controller import PenaltyState, estimate_rho_batch, update
from tensor import Tensor, backward, no_grad
from trainer import TrainState, train

logger = logging.getLogger(__name__)

BOUND_GAMMAS = (0.0, 0.5, 1.0, 2.0)
DIRECTION_ETAS = (1e-1, 1e-2, 1e-3)
REFINE_STARTS = 3


# gradients

def gradient_check(build: Callable[[List[Tensor]], Tensor], inputs: Sequence[np.ndarray], h: float = 1e-6) -> float:
    """Largest |autodiff - central difference| / max(1, |central difference|) over every input entry"""
    inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
    tensors = [Tensor(x.copy(), requires_grad=True) for x in inputs]
    backward(build(tensors))

    def evaluate(arrays: List[np.ndarray]) -> float:
        with no_grad():
            return build([Tensor(a) for a in arrays]).item()

    worst = 0.0
    for position, array in enumerate(inputs):
        analytic = tensors[position].grad if tensors[position].grad is not None else np.zeros_like(array)
        for index in np.ndindex(array.shape):
            shifted = [a.copy() for a in inputs]
            shifted[position][index] += h
            upper = evaluate(shifted)
            shifted[position][index] -= 2 * h
            lower = evaluate(shifted)
            central = (upper - lower) / (2 * h)
            worst = max(worst, abs(analytic[index] - central) / max(1.0, abs(central)))
    return worst


def loss_builders(labels: np.ndarray) -> dict:
    """Scalar functions of a logits tensor covering every loss"""
    return {
        "ex": lambda t: ex_loss(t[0], labels, 0.7),
        "sum_exp": lambda t: sum_exp_mean(t[0]),
        "penex": lambda t: penex_loss(t[0], labels, 0.3, 0.2),
        "cross_entropy": lambda t: cross_entropy(t[0], labels),
        "label_smoothing": lambda t: label_smoothing_loss(t[0], labels, 0.2),
        "confidence_penalty": lambda t: confidence_penalty_loss(t[0], labels, 0.5),
        "focal": lambda t: focal_loss(t[0], labels, 2.0),
        "conex_sq_penalty": lambda t: conex_sq_penalty_loss(t[0], labels, 0.5, 0.5, verbatim=True),
        "conex_sq_penalty_plain": lambda t: conex_sq_penalty_loss(t[0], labels, 0.5, 0.5, verbatim=False),
        "conex_aug_lagrangian": lambda t: conex_aug_lagrangian_loss(t[0], labels, 0.5, 0.5, dual=0.3),
    }


def check_loss_gradients(points: int = 100, seed: int = 0, rows: int = 4, classes: int = 3) -> dict:
    """Worst relative finite-difference error per loss over random logits"""
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(points):
        logits = rng.normal(scale=2.0, size=(rows, classes))
        labels = rng.integers(0, classes, size=rows)
        for name, build in loss_builders(labels).items():
            worst[name] = max(worst.get(name, 0.0), gradient_check(build, [logits]))
    return worst


# Fisher consistency

def _validate_simplex(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
        raise ParameterError(f"expected a probability vector, got {probs.tolist()}")
    return probs


def fisher_closed_form(probs: Sequence[float], alpha: float, rho: float) -> np.ndarray:
    """Conditional PENEX minimizer ln(alpha * P / rho) / (1 + alpha); zero-probability classes give -inf"""
    probs = _validate_simplex(probs)
    if not (alpha > 0 and rho > 0):
        raise ParameterError("alpha and rho must be positive")
    with np.errstate(divide="ignore"):
        return np.log(alpha * probs / rho) / (1 + alpha)


def fisher_numeric(probs: Sequence[float], alpha: float, rho: float, tol: float = 1e-10,
                   max_iter: int = 10_000) -> np.ndarray:
    """Minimize sum_y P(y) exp(-alpha f_y) + rho sum_j exp(f_j) by damped Newton, one coordinate per class.

    A zero-probability class keeps descending until exp(f) underflows and is
    then reported as -inf.
    """
    probs = _validate_simplex(probs)
    f = np.zeros_like(probs)

    def data_term(values: np.ndarray, p: np.ndarray) -> np.ndarray:
        # a zero-probability class contributes nothing, even once exp(-alpha f) overflows
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(p > 0, p * np.exp(-alpha * values), 0.0)

    def objective(values: np.ndarray, p: np.ndarray) -> np.ndarray:
        return data_term(values, p) + rho * np.exp(values)

    for _ in range(max_iter):
        active = np.isfinite(f)
        x, p = f[active], probs[active]
        grad = -alpha * data_term(x, p) + rho * np.exp(x)
        hess = alpha ** 2 * data_term(x, p) + rho * np.exp(x)

        escaped = hess == 0
        if np.any(escaped):
            indices = np.flatnonzero(active)[escaped]
            f[indices] = -np.inf
            continue

        step = -grad / hess
        scale = np.ones_like(step)
        current = objective(x, p)
        # changes below the rounding of the objective count as no change
        noise = 8 * np.finfo(np.float64).eps * np.abs(current)
        rejected = np.zeros_like(step, dtype=bool)
        for _ in range(60):
            rejected = objective(x + scale * step, p) > current + 1e-4 * scale * grad * step + noise
            if not np.any(rejected):
                break
            scale = np.where(rejected, scale / 2, scale)
        moved = np.where(rejected, 0.0, scale * step)
        f[active] = x + moved

        # a coordinate the line search cannot improve sits at the optimum to working precision
        settled = ((np.abs(grad) < tol) & (np.abs(moved) < tol)) | rejected
        if np.all(settled):
            return f
    raise OracleFailure(f"damped Newton did not converge in {max_iter} iterations")


def conf_penalty_minimizer(probs: Sequence[float], lam: float) -> np.ndarray:
    """Minimize the cross-entropy H(P, Q) minus lam * H(Q) over the simplex.

    Q is parametrized as softmax(z) and BFGS starts from z = log P.
    """
    probs = _validate_simplex(probs)
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")

    def softmax(z: np.ndarray) -> np.ndarray:
        e = np.exp(z - z.max())
        return e / e.sum()

    def objective(z: np.ndarray) -> Tuple[float, np.ndarray]:
        q = softmax(z)
        log_q = np.log(np.maximum(q, 1e-300))
        value = -np.dot(probs, log_q) + lam * np.dot(q, log_q)
        grad = q - probs + lam * q * (log_q - np.dot(q, log_q))
        return float(value), grad

    start = np.log(np.maximum(probs, 1e-300))
    result = optimize.minimize(objective, start, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 2000})
    return softmax(result.x)


def conf_penalty_stationarity_residual(probs: Sequence[float], probs_hat: Sequence[float], lam: float) -> float:
    """Spread of -P/Q + lam * (log Q + 1) across classes; zero exactly at a stationary point"""
    probs = np.asarray(probs, dtype=np.float64)
    probs_hat = np.asarray(probs_hat, dtype=np.float64)
    terms = -probs / probs_hat + lam * (np.log(probs_hat) + 1)
    return float(terms.max() - terms.min())


# optimal penalty

def margin_bound_rhs(gamma: float, alpha: float, rho: float, ex_mean: float, se_mean: float) -> float:
    exponent = alpha / (alpha + 1)
    return math.exp(gamma * exponent) * rho ** (-exponent) * (ex_mean + rho * se_mean)


def _log_rhs(log_rho: float, gamma: float, alpha: float, ex_mean: float, se_mean: float) -> float:
    exponent = alpha / (alpha + 1)
    return gamma * exponent - exponent * log_rho + math.log(ex_mean + math.exp(log_rho) * se_mean)


def grid_minimize_rho(alpha: float, ex_mean: float, se_mean: float, gamma: float = 0.0,
                      points: int = 10_000, low: float = 1e-8, high: float = 1e8) -> Tuple[float, float]:
    """Grid minimizer of the margin bound over log-spaced rho; returns it with the grid's cell ratio"""
    grid = np.geomspace(low, high, points)
    exponent = alpha / (alpha + 1)
    values = gamma * exponent - exponent * np.log(grid) + np.log(ex_mean + grid * se_mean)
    return float(grid[int(np.argmin(values))]), float(grid[1] / grid[0])


def optimal_rho_numeric(alpha: float, ex_mean: float, se_mean: float, gamma: float = 0.0) -> float:
    """Minimize the margin bound over rho: grid bracket, then bounded scalar refinement in log rho"""
    best, ratio = grid_minimize_rho(alpha, ex_mean, se_mean, gamma)
    bounds = (math.log(best) - 2 * math.log(ratio), math.log(best) + 2 * math.log(ratio))
    result = optimize.minimize_scalar(
        _log_rhs, bounds=bounds, args=(gamma, alpha, ex_mean, se_mean),
        method="bounded", options={"xatol": 1e-13},
    )
    return float(math.exp(result.x))


# margin bound

def margin_bound_from_logits(logits: np.ndarray, labels: np.ndarray, alpha: float, rho: float,
                             gamma_grid: Sequence[float] = BOUND_GAMMAS) -> BoundCheck:
    """Measured P(margin <= gamma) against exp(gamma a) rho^-a PENEX with a = alpha / (alpha + 1)"""
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    with no_grad():
        penex_value = penex_loss(Tensor(logits), labels, alpha, rho).item()
    margins = margin(logits, labels)
    n = labels.shape[0]
    z = stats.norm.ppf(0.995)
    exponent = alpha / (alpha + 1)

    freqs, rhs, slack, holds = [], [], [], []
    for gamma in gamma_grid:
        freq = float(np.mean(margins <= gamma))
        bound = math.exp(gamma * exponent) * rho ** (-exponent) * penex_value
        half_width = float(z * math.sqrt(freq * (1 - freq) / n))
        freqs.append(freq)
        rhs.append(bound)
        slack.append(half_width)
        holds.append(freq <= bound + half_width)
    return BoundCheck(
        gamma_grid=list(gamma_grid), empirical_freq=freqs, bound_rhs=rhs, slack=slack,
        penex_value=penex_value, alpha=alpha, rho=rho, holds=holds, n=n,
    )


def check_margin_bound(model: MLPClassifier, data: Dataset, alpha: float, rho: float,
                       gamma_grid: Sequence[float] = BOUND_GAMMAS) -> BoundCheck:
    return margin_bound_from_logits(model.predict_logits(data.features), data.labels, alpha, rho, gamma_grid)


# implicit weak learner

def _linear_objectives(thetas: np.ndarray, features: np.ndarray, labels: np.ndarray,
                       num_classes: int, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """EX and SumExp means of a batch of flattened linear models [W (K x d), b (K)]"""
    dim = features.shape[1]
    weights = thetas[:, : num_classes * dim].reshape(-1, num_classes, dim)
    biases = thetas[:, num_classes * dim:]
    logits = np.einsum("nd,mkd->mnk", features, weights) + biases[:, None, :]
    true_logits = logits[:, np.arange(labels.shape[0]), labels]
    ex = np.mean(np.exp(-alpha * true_logits), axis=1)
    sumexp = np.mean(np.exp(logits).sum(axis=2), axis=1)
    return ex, sumexp


def _loss_gradient(model: MLPClassifier, loss: Callable[[Tensor], Tensor], features: np.ndarray) -> np.ndarray:
    model.zero_grad()
    loss(model.forward(features)).backward()
    grad = model.get_flat_grad()
    model.zero_grad()
    return grad


def _direction_check(model: MLPClassifier, data: Dataset, alpha: float, eta: float, directions: int,
                     rng: np.random.Generator, grad_ex: np.ndarray, grad_se: np.ndarray,
                     chunk: int = 10_000) -> DirectionCheck:
    theta = model.get_flat()
    args = (data.features, data.labels, data.num_classes, alpha)
    ex0, se0 = (v[0] for v in _linear_objectives(theta[None, :], *args))

    def rescaled(deltas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ex, se = _linear_objectives(theta[None, :] + eta * deltas, *args)
        return (ex - ex0) / eta, (se - se0) / eta

    # best few feasible random directions seed the local refinement
    pool_values, pool_directions = np.empty(0), np.empty((0, theta.size))
    for start in range(0, directions, chunk):
        count = min(chunk, directions - start)
        deltas = rng.standard_normal((count, theta.size))
        deltas /= np.linalg.norm(deltas, axis=1, keepdims=True)
        values, constraint = rescaled(deltas)
        feasible = constraint <= 0
        pool_values = np.concatenate([pool_values, values[feasible]])
        pool_directions = np.vstack([pool_directions, deltas[feasible]])
        keep = np.argsort(pool_values, kind="stable")[:REFINE_STARTS]
        pool_values, pool_directions = pool_values[keep], pool_directions[keep]

    if pool_values.size == 0:
        return DirectionCheck(eta=eta, status="inconclusive", detail="no feasible direction found")

    best_value, best_direction = float(pool_values[0]), pool_directions[0]
    constraints = [
        {"type": "ineq", "fun": lambda d: -rescaled(d[None, :])[1][0]},
        {"type": "eq", "fun": lambda d: float(d @ d) - 1.0},
    ]
    for start_direction in pool_directions:
        result = optimize.minimize(
            lambda d: rescaled(d[None, :])[0][0],
            start_direction,
            method="SLSQP",
            constraints=constraints,
            options={"ftol": 1e-12, "maxiter": 500},
        )
        candidate = result.x / np.linalg.norm(result.x)
        value, constraint = (float(v[0]) for v in rescaled(candidate[None, :]))
        if constraint <= 1e-12 and value < best_value:
            best_value, best_direction = value, candidate

    basis = np.column_stack([-grad_ex, -grad_se])
    (ex_weight, se_weight), _ = optimize.nnls(basis, best_direction)
    if ex_weight <= 0:
        return DirectionCheck(eta=eta, status="inconclusive", detail="minimizer has no EX descent component")
    rho_fit = se_weight / ex_weight
    target = -(grad_ex + rho_fit * grad_se)
    cosine = float(best_direction @ target / (np.linalg.norm(best_direction) * np.linalg.norm(target)))
    return DirectionCheck(eta=eta, cosine=cosine, rho_fit=float(rho_fit))


def check_weak_learner_direction(model: MLPClassifier, data: Dataset, alpha: float,
                                 eta_list: Sequence[float] = DIRECTION_ETAS,
                                 directions: int = 100_000, seed: int = 0) -> WeakLearnerReport:
    """Compare the best unit parameter step of the incremental EX problem with -grad PENEX.

    For every eta the step minimizes EX(theta + eta d) subject to
    SumExp(theta + eta d) <= SumExp(theta), found by random unit directions
    and SLSQP refinement. The implied penalty is fitted by nonnegative least
    squares onto the two gradients.
    """
    if model.spec.hidden_dims:
        raise ParameterError("the direction search needs a linear model")
    if model.num_parameters() > 50:
        raise ParameterError("the direction search is limited to 50 parameters")

    features = data.features
    grad_ex = _loss_gradient(model, lambda t: ex_loss(t, data.labels, alpha), features)
    grad_se = _loss_gradient(model, sum_exp_mean, features)
    if np.linalg.norm(grad_ex) < 1e-10:
        checks = [DirectionCheck(eta=eta, status="inconclusive", detail="EX gradient vanishes") for eta in eta_list]
        return WeakLearnerReport(checks=checks, seed=seed)

    rng = np.random.default_rng(seed)
    checks = [
        _direction_check(model, data, alpha, eta, directions, rng, grad_ex, grad_se)
        for eta in eta_list
    ]
    return WeakLearnerReport(checks=checks, seed=seed)


def direction_trend_ok(report: WeakLearnerReport, floor: float = 0.95, tolerance: float = 1e-4) -> bool:
    """Cosines non-decreasing as eta shrinks and at least ``floor`` at the smallest eta"""
    ordered = sorted(report.checks, key=lambda c: -c.eta)
    cosines = [c.cosine for c in ordered]
    if any(c is None for c in cosines):
        return False
    monotone = all(later >= earlier - tolerance for earlier, later in zip(cosines, cosines[1:]))
    return monotone and cosines[-1] >= floor


def direction_problem(seed: int, n: int = 200) -> Tuple[MLPClassifier, Dataset]:
    """Two-feature two-class linear model on blobs"""
    data = gen_blobs(n, 2, seed=seed)
    model = init_model(ModelSpec(input_dim=2, hidden_dims=[], num_classes=2), seed)
    return model, data


# oracle suite

def _check(name: str, passed: bool, detail: str = "", inconclusive: bool = False) -> CheckResult:
    level = logging.INFO if passed else logging.WARNING
    logger.log(level, "%s: %s %s", name, "pass" if passed else "FAIL", detail)
    return CheckResult(name=name, passed=bool(passed), detail=detail, inconclusive=inconclusive)


def _gradient_suite(seed: int, points: int) -> CheckResult:
    worst = check_loss_gradients(points=points, seed=seed)
    rng = np.random.default_rng(seed + 1)
    model = init_model(ModelSpec(input_dim=3, hidden_dims=[4], num_classes=3), seed)
    features = rng.normal(size=(5, 3))
    labels = rng.integers(0, 3, size=5)

    def mlp_loss(tensors: List[Tensor]) -> Tensor:
        hidden = (Tensor(features) @ tensors[0].T + tensors[1]).relu()
        return cross_entropy(hidden @ tensors[2].T + tensors[3], labels)

    params = [p.data for p in model.parameters()]
    worst["mlp"] = gradient_check(mlp_loss, params)
    largest = max(worst.values())
    return _check("gradients", largest < 1e-4, f"worst relative error {largest:.2e}")


def _fisher_suite(seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_numeric, worst_roundtrip = 0.0, 0.0
    for _ in range(100):
        num_classes = int(rng.integers(2, 6))
        probs = rng.dirichlet(np.ones(num_classes))
        alpha, rho = rng.uniform(0.05, 2.0), rng.uniform(0.01, 1.0)
        closed = fisher_closed_form(probs, alpha, rho)
        numeric = fisher_numeric(probs, alpha, rho)
        worst_numeric = max(worst_numeric, float(np.max(np.abs(closed - numeric))))
        recovered = penex_inference_probs(closed[None, :], alpha).data[0]
        worst_roundtrip = max(worst_roundtrip, float(np.max(np.abs(recovered - probs))))
    return [
        _check("fisher_numeric", worst_numeric < 1e-8, f"max deviation {worst_numeric:.2e}"),
        _check("fisher_roundtrip", worst_roundtrip < 1e-12, f"max deviation {worst_roundtrip:.2e}"),
    ]


def _confidence_penalty_suite() -> CheckResult:
    probs = np.array([0.8, 0.2])
    gaps = [float(np.max(np.abs(conf_penalty_minimizer(probs, lam) - probs))) for lam in (0.1, 0.5, 1.0)]
    uniform_gap = float(np.max(np.abs(conf_penalty_minimizer([0.5, 0.5], 1.0) - 0.5)))
    passed = all(gap > 0.01 for gap in gaps) and uniform_gap < 1e-8
    return _check("confidence_penalty_inconsistency", passed,
                  f"gaps {[round(g, 4) for g in gaps]}, uniform gap {uniform_gap:.1e}")


def _optimal_rho_suite(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_relative, grid_ok = 0.0, True
    for _ in range(50):
        alpha, ex_mean, se_mean = rng.uniform(0.05, 3.0), rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0)
        gamma = rng.uniform(0.0, 2.0)
        expected = estimate_rho_batch(ex_mean, se_mean, alpha, eps_guard=0.0)
        numeric = optimal_rho_numeric(alpha, ex_mean, se_mean, gamma)
        worst_relative = max(worst_relative, abs(numeric - expected) / expected)
        grid_best, ratio = grid_minimize_rho(alpha, ex_mean, se_mean, gamma)
        grid_ok &= abs(math.log(grid_best / expected)) <= math.log(ratio)
    return _check("optimal_rho", worst_relative < 1e-6 and grid_ok,
                  f"worst relative deviation {worst_relative:.2e}, grid within one cell: {grid_ok}")


def _controller_suite() -> CheckResult:
    target, first = 0.3, 5.0
    state = update(PenaltyState(), first)
    initial_gap = abs(state.rho - target)
    worst = 0.0
    for t in range(2, 301):
        state = update(state, target)
        expected = (1 - state.beta) ** (t - 1) * initial_gap
        worst = max(worst, abs(abs(state.rho - target) - expected))
    final_gap = abs(state.rho - target)
    return _check("controller_decay", worst < 1e-12 and final_gap < 1e-10,
                  f"final gap {final_gap:.1e}, worst deviation from geometric decay {worst:.1e}")


def _samme_suite() -> CheckResult:
    eta = classifier_weight(0.3, 10)
    return _check("samme_eta", abs(eta - 3.044522) < 1e-6, f"eta={eta:.7f}")


def margin_bound_over_training(seed: int = 0, epochs: int = 200, n: int = 500) -> List[int]:
    """Train adaptive PENEX on blobs and check the margin bound on the held-out split after every epoch.

    Returns the epochs at which some gamma exceeds the bound by more than its slack.
    """
    train_data, val_data = split(gen_blobs(n, 2, seed=seed), 0.8, seed=seed)
    config = TrainConfig(
        loss=LossSpec(kind=LossKind.PENEX, alpha=0.1),
        optim=OptimSpec(learning_rate=1e-2),
        epochs=epochs,
        batch_size=64,
        seed=seed,
    )
    failures = []

    def inspect(epoch: int, state: TrainState) -> None:
        rho = state.rho if state.rho is not None else 1.0
        bound = check_margin_bound(state.model, val_data, config.loss.alpha, rho)
        if not bound.all_hold:
            failures.append(epoch)

    train(config, train_data, name="margin_bound", on_epoch_end=inspect)
    return failures


def _margin_bound_suite(seed: int, epochs: int) -> CheckResult:
    failures = margin_bound_over_training(seed, epochs)
    return _check("margin_bound", not failures,
                  f"{epochs + 1} held-out checkpoints, failing epochs {failures}")


def _weak_learner_suite(seed: int, directions: int, retries: int = 2) -> CheckResult:
    detail = ""
    for attempt in range(retries + 1):
        attempt_seed = seed + attempt
        model, data = direction_problem(attempt_seed)
        report = check_weak_learner_direction(model, data, alpha=0.1, directions=directions, seed=attempt_seed)
        cosines = [None if c is None else round(c, 6) for c in report.cosines]
        detail = f"attempt {attempt + 1}: cosines {cosines}, rho fits {[c.rho_fit for c in report.checks]}"
        if report.conclusive and direction_trend_ok(report):
            return _check("weak_learner_direction", True, detail)
        logger.warning("Weak learner direction check %s, retrying with a fresh seed",
                       "inconclusive" if not report.conclusive else "failed")
    return _check("weak_learner_direction", False, detail, inconclusive=not report.conclusive)


def run_oracle_suite(seed: int = 0, directions: int = 100_000, gradient_points: int = 100,
                     bound_epochs: int = 200) -> VerificationReport:
    """Run every hard check and report pass/fail per check"""
    logger.info("Running oracle suite with seed %d", seed)
    checks = [_gradient_suite(seed, gradient_points)]
    checks.extend(_fisher_suite(seed))
    checks.append(_confidence_penalty_suite())
    checks.append(_optimal_rho_suite(seed))
    checks.append(_controller_suite())
    checks.append(_samme_suite())
    checks.append(_margin_bound_suite(seed, bound_epochs))
    checks.append(_weak_learner_suite(seed, directions))
    passed = all(c.passed for c in checks if c.hard)
    logger.info("Oracle suite %s", "passed" if passed else "FAILED")
    return VerificationReport(checks=checks, passed=passed, seed=seed)
