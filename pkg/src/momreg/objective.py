"""Minimax median-of-means objectives and regularization.

The population objective max over g of the median block increment is not
exactly computable, so phi_hat / phi_lambda_hat return a certified LOWER
bound together with an explicit witness g: the best value found by
adversary ascent runs started from f, the least-squares fit, and random
perturbations.  Diagnostics downstream are phrased so a lower bound with a
witness suffices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .blocks import block_increment, median
from .errors import ConfigError, DimensionError, EmptyLambdaWindow
from .model import BlockPartition, Dataset, LinearPredictor, _frozen_array


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------

def default_slope_weights(d: int) -> np.ndarray:
    """Nonincreasing sorted-l1 weights w_i = sqrt(log(2d / i)), i = 1..d."""
    i = np.arange(1, d + 1, dtype=np.float64)
    return np.sqrt(np.log(2.0 * d / i))


@dataclass(frozen=True)
class Regularizer:
    """A norm used as the price tag: none, l1, or slope (sorted l1)."""

    kind: str = "none"
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "l1", "slope"):
            raise ConfigError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "slope":
            if self.weights is None:
                raise ConfigError("slope regularizer needs weights")
            w = _frozen_array(self.weights)
            if w.ndim != 1 or w.shape[0] < 1:
                raise ConfigError("slope weights must be a nonempty vector")
            if not np.all(w > 0.0):
                raise ConfigError("slope weights must be strictly positive")
            if np.any(np.diff(w) > 0.0):
                raise ConfigError("slope weights must be nonincreasing")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ConfigError(f"{self.kind} regularizer takes no weights")

    @classmethod
    def none(cls) -> "Regularizer":
        return cls("none")

    @classmethod
    def l1(cls) -> "Regularizer":
        return cls("l1")

    @classmethod
    def slope(cls, weights=None, d: int | None = None) -> "Regularizer":
        if weights is None:
            if d is None:
                raise ConfigError("slope needs explicit weights or a dimension")
            weights = default_slope_weights(d)
        return cls("slope", np.asarray(weights, dtype=np.float64))


def _theta_of(f) -> np.ndarray:
    if isinstance(f, LinearPredictor):
        return f.theta
    return np.asarray(f, dtype=np.float64)


def psi(reg: Regularizer, f) -> float:
    """Evaluate the regularization norm on a predictor or coefficient vector."""
    theta = _theta_of(f)
    if reg.kind == "none":
        return 0.0
    if reg.kind == "l1":
        return float(np.sum(np.abs(theta)))
    if theta.shape[0] != reg.weights.shape[0]:
        raise DimensionError(
            f"theta has {theta.shape[0]} entries, slope weights {reg.weights.shape[0]}"
        )
    a = np.sort(np.abs(theta))[::-1]
    return float(a @ reg.weights)


def psi_batch(reg: Regularizer, thetas: np.ndarray) -> np.ndarray:
    """psi evaluated row-wise on a (k, d) matrix of coefficient vectors."""
    thetas = np.asarray(thetas, dtype=np.float64)
    if reg.kind == "none":
        return np.zeros(thetas.shape[0])
    if reg.kind == "l1":
        return np.abs(thetas).sum(axis=1)
    if thetas.shape[1] != reg.weights.shape[0]:
        raise DimensionError("slope weights do not match coefficient dimension")
    a = -np.sort(-np.abs(thetas), axis=1)
    return a @ reg.weights


def _pava_nonincreasing(z: np.ndarray) -> np.ndarray:
    # Pool-adjacent-violators projection onto nonincreasing sequences.
    size = z.shape[0]
    means = np.empty(size)
    counts = np.empty(size, dtype=np.int64)
    k = 0
    for val in z:
        means[k] = val
        counts[k] = 1
        k += 1
        while k > 1 and means[k - 2] < means[k - 1]:
            merged = counts[k - 2] + counts[k - 1]
            means[k - 2] = (
                means[k - 2] * counts[k - 2] + means[k - 1] * counts[k - 1]
            ) / merged
            counts[k - 2] = merged
            k -= 1
    out = np.empty(size)
    pos = 0
    for i in range(k):
        out[pos : pos + counts[i]] = means[i]
        pos += counts[i]
    return out


def prox_psi(reg: Regularizer, theta: np.ndarray, t: float) -> np.ndarray:
    """Proximal map of t * psi: soft-thresholding for l1, sorted prox for slope."""
    if reg.kind == "none" or t == 0.0:
        return np.asarray(theta, dtype=np.float64).copy()
    theta = np.asarray(theta, dtype=np.float64)
    if reg.kind == "l1":
        return np.sign(theta) * np.maximum(np.abs(theta) - t, 0.0)
    a = np.abs(theta)
    order = np.argsort(-a, kind="stable")
    x = np.maximum(_pava_nonincreasing(a[order] - t * reg.weights), 0.0)
    mag = np.empty_like(a)
    mag[order] = x
    return np.sign(theta) * mag


# ---------------------------------------------------------------------------
# objective configuration and tuning constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveConfig:
    """Regularization strength and norm; lam == 0 iff kind is 'none'."""

    lam: float = 0.0
    regularizer: Regularizer = field(default_factory=Regularizer.none)

    def __post_init__(self):
        if self.lam < 0.0:
            raise ConfigError("lambda must be nonnegative")
        if (self.lam == 0.0) != (self.regularizer.kind == "none"):
            raise ConfigError("lambda must be 0 exactly when the regularizer is none")


@dataclass(frozen=True)
class ConditionParams:
    """Tuning constants (gamma1, gamma2, r, rho) of the block conditions."""

    gamma1: float
    gamma2: float
    r: float
    rho: float = 1.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "r", "rho"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")


def lambda_window(params: ConditionParams) -> tuple[float, float]:
    """Admissible regularization interval [3 g2 r^2 / rho, (g1/2) r^2 / rho].

    Nonempty exactly when 6 * gamma2 <= gamma1.
    """
    if 6.0 * params.gamma2 > params.gamma1:
        raise EmptyLambdaWindow(
            f"6*gamma2 = {6.0 * params.gamma2} exceeds gamma1 = {params.gamma1}"
        )
    lo = 3.0 * params.gamma2 * params.r * params.r / params.rho
    hi = params.gamma1 / 2.0 * params.r * params.r / params.rho
    return lo, hi


# ---------------------------------------------------------------------------
# median increments and the estimated minimax value
# ---------------------------------------------------------------------------

def med_increment(
    f: LinearPredictor, g: LinearPredictor, data: Dataset, p: BlockPartition
) -> float:
    """Median over blocks of the loss increment of f against g."""
    return median(block_increment(f, g, data, p))


@dataclass(frozen=True)
class AdversaryBudget:
    """Ascent budget: restart count, iterations per restart, optional step."""

    restarts: int = 4
    iterations: int = 120
    step: float | None = None
    l2_cap: float | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigError("restarts must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.step is not None and self.step <= 0.0:
            raise ConfigError("step must be positive")
        if self.l2_cap is not None and self.l2_cap <= 0.0:
            raise ConfigError("l2 cap must be positive")


@dataclass(frozen=True)
class PhiResult:
    """A certified lower bound of the minimax value plus the witness g."""

    value: float
    witness: LinearPredictor
    explored: tuple[np.ndarray, ...] | None = None


def median_block_index(b: np.ndarray) -> tuple[int, float]:
    """Index of the block attaining the median (lowest index on ties)."""
    mid = b.shape[0] // 2
    med = np.partition(b, mid)[mid]
    return int(np.flatnonzero(b == med)[0]), float(med)


def block_loss_gradient(X, y, theta, j: int, m: int) -> np.ndarray:
    """Gradient of the mean squared loss restricted to block j."""
    sl = slice(j * m, (j + 1) * m)
    Xj = X[sl]
    return (2.0 / m) * (Xj.T @ (Xj @ theta - y[sl]))


def gram_step_size(X: np.ndarray, m: int) -> float:
    """Safe gradient step for blockwise squared losses (0.7 / Lipschitz bound)."""
    N, d = X.shape
    lam_max = float(np.linalg.eigvalsh((X.T @ X) / N)[-1])
    lip = 2.0 * lam_max * (1.0 + math.sqrt(d / m)) ** 2
    return 0.7 / max(lip, 1e-12)


def _ascend_adversary(
    X,
    y,
    n,
    m,
    theta_f,
    g_start,
    lam,
    reg,
    psi_f,
    step,
    iterations,
    l2_cap,
    collect,
):
    g = g_start.copy()
    best_value = -math.inf
    best_g = g_start.copy()
    explored = [] if collect else None
    for t in range(iterations + 1):
        b = _kernels.block_increment(X, y, theta_f, g, n, m)
        if not np.all(np.isfinite(b)):
            break
        j_star, med = median_block_index(b)
        value = med + (lam * (psi_f - psi(reg, g)) if lam else 0.0)
        if value > best_value:
            best_value = value
            best_g = g.copy()
        if collect:
            explored.append(g.copy())
        if t == iterations:
            break
        s = step / math.sqrt(t + 1.0)
        g = g - s * block_loss_gradient(X, y, g, j_star, m)
        if lam:
            g = prox_psi(reg, g, s * lam)
        if l2_cap is not None:
            norm = float(np.linalg.norm(g))
            if norm > l2_cap:
                g = g * (l2_cap / norm)
        if not np.all(np.isfinite(g)):
            break
    return best_value, best_g, explored


def phi_lambda_hat(
    f: LinearPredictor,
    data: Dataset,
    p: BlockPartition,
    cfg: ObjectiveConfig,
    budget: AdversaryBudget = AdversaryBudget(),
    seed: int = 0,
    collect_explored: bool = False,
) -> PhiResult:
    """Lower-bound the regularized minimax value at f by adversary ascent.

    Ascent restarts begin at f itself, the least-squares fit, and seeded
    random perturbations of the least-squares fit; every iterate of every
    restart is evaluated and the best value (with its witness g) returned.
    """
    from .solver import erm_fit  # local import to avoid a cycle

    if p.total > data.n_samples:
        raise DimensionError("partition larger than dataset")
    X = data.features[: p.total]
    y = data.responses[: p.total]
    theta_f = f.theta
    lam = cfg.lam
    reg = cfg.regularizer
    psi_f = psi(reg, theta_f) if lam else 0.0
    step = budget.step if budget.step is not None else gram_step_size(X, p.m)
    ols = erm_fit(data).theta
    rng = np.random.default_rng(seed)
    scale = float(np.linalg.norm(y - X @ ols)) / math.sqrt(X.shape[0])

    starts = [theta_f]
    if budget.restarts >= 2:
        starts.append(ols)
    for _ in range(budget.restarts - 2):
        starts.append(ols + scale * rng.standard_normal(theta_f.shape[0]))

    best_value = -math.inf
    best_g = theta_f
    explored_all: list[np.ndarray] = []
    for g0 in starts:
        value, g_best, explored = _ascend_adversary(
            X, y, p.n, p.m, theta_f, np.asarray(g0, dtype=np.float64),
            lam, reg, psi_f, step, budget.iterations, budget.l2_cap,
            collect_explored,
        )
        if value > best_value:
            best_value = value
            best_g = g_best
        if collect_explored:
            explored_all.extend(explored)
    return PhiResult(
        value=float(best_value),
        witness=LinearPredictor(best_g),
        explored=tuple(explored_all) if collect_explored else None,
    )


def phi_hat(
    f: LinearPredictor,
    data: Dataset,
    p: BlockPartition,
    budget: AdversaryBudget = AdversaryBudget(),
    seed: int = 0,
    collect_explored: bool = False,
) -> PhiResult:
    """Unregularized minimax lower bound: phi_lambda_hat with lambda = 0."""
    return phi_lambda_hat(
        f, data, p, ObjectiveConfig(), budget, seed, collect_explored
    )
