"""Fitting procedures: median-block descent-ascent, grid oracle, baselines.

The descent-ascent scheme has no monotonicity guarantee, so the returned
coefficient vector is not the last iterate: every iterate of every restart
is audited with a witness-pool surrogate of the regularized minimax value
and the minimizer of the audited value is returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _kernels
from .errors import ConfigError, DimensionError, DivergenceError, GridCapExceeded
from .model import BlockPartition, Dataset, LinearPredictor
from .objective import (
    ObjectiveConfig,
    block_loss_gradient,
    gram_step_size,
    median_block_index,
    prox_psi,
    psi,
    psi_batch,
)

_AUDIT_EXTRA_WITNESSES = 3
_AUDIT_TOURNAMENT_SIZE = 64
_REFINE_SCALES = (0.05, 0.02, 0.01, 0.005, 0.002)
_REFINE_EVAL_CAP = 60


@dataclass(frozen=True)
class SolverConfig:
    """Descent-ascent configuration.

    step_f / step_g default to an automatic fraction of the inverse
    blockwise Lipschitz estimate when None.  With decay=True both steps
    stay constant for the first third of the iterations (so a bad start,
    e.g. the least-squares fit on corrupted data, can be walked back) and
    then shrink like 1/sqrt(t).
    """

    step_f: float | None = None
    step_g: float | None = None
    iterations: int = 300
    restarts: int = 2
    tolerance: float = 1e-6
    seed: int = 0
    decay: bool = True

    def __post_init__(self):
        if self.step_f is not None and self.step_f <= 0.0:
            raise ConfigError("step_f must be positive")
        if self.step_g is not None and self.step_g <= 0.0:
            raise ConfigError("step_g must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if self.restarts < 1:
            raise ConfigError("restarts must be positive")
        if self.tolerance <= 0.0:
            raise ConfigError("tolerance must be positive")


@dataclass(frozen=True)
class TraceRecord:
    restart: int
    iteration: int
    median_block: int
    med_increment: float
    step_norm_f: float
    step_norm_g: float


@dataclass(frozen=True)
class SolverResult:
    theta_hat: np.ndarray
    trace: tuple[TraceRecord, ...]
    converged: bool
    best_surrogate: float

    @property
    def predictor(self) -> LinearPredictor:
        return LinearPredictor(self.theta_hat)


def erm_fit(data: Dataset) -> LinearPredictor:
    """Least-squares baseline via the normal equations.

    Singular Gram matrices get a ridge jitter of 1e-10 instead of failing.
    """
    X = data.features
    gram = X.T @ X
    rhs = X.T @ data.responses
    try:
        theta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        theta = np.linalg.solve(gram + 1e-10 * np.eye(gram.shape[0]), rhs)
    if not np.all(np.isfinite(theta)):
        theta = np.linalg.solve(gram + 1e-10 * np.eye(gram.shape[0]), rhs)
    return LinearPredictor(theta)


def lasso_fit(
    data: Dataset, lam: float, iterations: int = 1000, tol: float = 1e-10
) -> LinearPredictor:
    """Plain l1-penalized least squares (ISTA on the mean squared loss)."""
    X = data.features
    y = data.responses
    N = X.shape[0]
    gram = (X.T @ X) / N
    rhs = (X.T @ y) / N
    lip = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    step = 1.0 / max(lip, 1e-12)
    theta = np.zeros(X.shape[1])
    for _ in range(iterations):
        grad = 2.0 * (gram @ theta - rhs)
        theta_new = np.sign(theta - step * grad) * np.maximum(
            np.abs(theta - step * grad) - step * lam, 0.0
        )
        if float(np.max(np.abs(theta_new - theta))) < tol:
            theta = theta_new
            break
        theta = theta_new
    return LinearPredictor(theta)


# ---------------------------------------------------------------------------
# witness-pool audit
# ---------------------------------------------------------------------------

class _WitnessPoolAudit:
    """phi_lambda_hat under a fixed-witness budget: max over a pool of g's
    of the median block increment plus the regularization gap.

    Pool members share the same blocks, so comparing two nearby candidates
    against the pool cancels the common block noise; extending the pool
    with the best candidates themselves (a round-robin of MOM matches)
    sharpens the selection further.
    """

    def __init__(self, X, y, n, m, pool_thetas, lam, reg):
        self.X = X
        self.y = y
        self.n = n
        self.m = m
        self.lam = lam
        self.reg = reg
        self.pool = [np.asarray(t, dtype=np.float64) for t in pool_thetas]
        self.pool_losses = np.stack(
            [_kernels.block_losses(X, y, t, n, m) for t in self.pool]
        )
        self.pool_psi = (
            np.array([psi(reg, t) for t in self.pool]) if lam else None
        )
        self.mid = n // 2

    def extend(self, thetas, losses, psis) -> None:
        self.pool.extend(np.asarray(t, dtype=np.float64) for t in thetas)
        self.pool_losses = np.concatenate([self.pool_losses, losses], axis=0)
        if self.lam:
            self.pool_psi = np.concatenate([self.pool_psi, psis])

    def value_from_losses(self, lf, psi_theta=0.0) -> float:
        diffs = lf[None, :] - self.pool_losses
        meds = np.partition(diffs, self.mid, axis=1)[:, self.mid]
        if self.lam:
            meds = meds + self.lam * (psi_theta - self.pool_psi)
        return float(np.max(meds))

    def __call__(self, theta) -> float:
        lf = _kernels.block_losses(self.X, self.y, theta, self.n, self.m)
        return self.value_from_losses(
            lf, psi(self.reg, theta) if self.lam else 0.0
        )


def _pattern_refine(audit, theta0, value0, scales, eval_cap):
    theta = theta0.copy()
    value = value0
    d = theta.shape[0]
    for scale in scales:
        evals = 0
        improved = True
        while improved and evals < eval_cap * d:
            improved = False
            for i in range(d):
                for sign in (1.0, -1.0):
                    cand = theta.copy()
                    cand[i] += sign * scale
                    v = audit(cand)
                    evals += 1
                    if v < value:
                        value = v
                        theta = cand
                        improved = True
                        break
    return theta, value


# ---------------------------------------------------------------------------
# median-block descent-ascent
# ---------------------------------------------------------------------------

def mom_minimax_fit(
    data: Dataset,
    p: BlockPartition,
    obj: ObjectiveConfig = ObjectiveConfig(),
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Fit the (regularized) median-of-means minimax estimator.

    Each iteration: find the median block of the current increment vector,
    take an adversary gradient step for g on that block's squared loss,
    re-locate the median block, take a learner step for f, and apply the
    proximal shrinkage of the regularizer to both when lambda > 0.
    Restarts begin at the least-squares fit plus seeded perturbations
    scaled by the root-mean-square least-squares residual.
    """
    if p.total > data.n_samples:
        raise DimensionError("partition larger than dataset")
    X = data.features[: p.total]
    y = data.responses[: p.total]
    n, m = p.n, p.m
    d = data.dim
    lam = obj.lam
    reg = obj.regularizer

    ols = erm_fit(data).theta
    step_f = cfg.step_f if cfg.step_f is not None else gram_step_size(X, m)
    step_g = cfg.step_g if cfg.step_g is not None else gram_step_size(X, m)
    rng = np.random.default_rng(cfg.seed)
    # Robust perturbation scale: corrupted responses can make the plain RMS
    # residual astronomically large, so take the smaller of the two medians.
    resid2 = np.square(y - X @ ols)
    scale = math.sqrt(min(float(np.median(resid2)), float(np.median(np.square(y)))))
    warm = cfg.iterations // 3 if cfg.decay else cfg.iterations

    candidates: list[tuple[int, int, np.ndarray]] = []
    trace: list[TraceRecord] = []
    finals_f: list[np.ndarray] = []
    finals_g: list[np.ndarray] = []
    final_moves: list[float] = []

    for k in range(cfg.restarts):
        if k == 0:
            f = ols.copy()
        elif k == 1:
            f = np.zeros(d)
        else:
            base = ols if k % 2 else np.zeros(d)
            f = base + scale * rng.standard_normal(d) / math.sqrt(d)
        g = f.copy()
        candidates.append((k, 0, f.copy()))
        tail: list[np.ndarray] = []
        move = math.inf
        for t in range(1, cfg.iterations + 1):
            damp = 1.0 if t <= warm else math.sqrt(t - warm)
            b = _kernels.block_increment(X, y, f, g, n, m)
            if not np.all(np.isfinite(b)):
                raise DivergenceError(
                    "block increments became non-finite; reduce step_f/step_g"
                )
            j_adv, med = median_block_index(b)
            sg = step_g / damp
            g_new = g - sg * block_loss_gradient(X, y, g, j_adv, m)
            if lam:
                g_new = prox_psi(reg, g_new, sg * lam)

            b2 = _kernels.block_increment(X, y, f, g_new, n, m)
            j_lrn, _ = median_block_index(b2)
            sf = step_f / damp
            f_new = f - sf * block_loss_gradient(X, y, f, j_lrn, m)
            if lam:
                f_new = prox_psi(reg, f_new, sf * lam)

            if not (np.all(np.isfinite(f_new)) and np.all(np.isfinite(g_new))):
                raise DivergenceError(
                    "iterate became non-finite; reduce step_f/step_g"
                )
            move = float(np.linalg.norm(f_new - f))
            trace.append(
                TraceRecord(k, t, j_adv, med, move, float(np.linalg.norm(g_new - g)))
            )
            candidates.append((k, t, f_new.copy()))
            if t > cfg.iterations // 2:
                tail.append(f_new)
            f, g = f_new, g_new
        finals_f.append(f.copy())
        finals_g.append(g.copy())
        final_moves.append(move)
        if tail:
            candidates.append((k, cfg.iterations + 1, np.mean(tail, axis=0)))

    pool = [ols] + finals_f + finals_g
    for _ in range(_AUDIT_EXTRA_WITNESSES):
        pool.append(ols + scale * rng.standard_normal(d) / math.sqrt(d))
    audit = _WitnessPoolAudit(X, y, n, m, pool, lam, reg)

    cand_thetas = np.stack([theta for _, _, theta in candidates])
    cand_losses = np.stack(
        [_kernels.block_losses(X, y, theta, n, m) for theta in cand_thetas]
    )
    cand_psi = (
        np.array([psi(reg, theta) for theta in cand_thetas])
        if lam
        else np.zeros(len(candidates))
    )
    prelim = np.array(
        [
            audit.value_from_losses(cand_losses[i], cand_psi[i])
            for i in range(len(candidates))
        ]
    )
    # Round-robin stage: admit the most promising candidates as witnesses,
    # then re-audit; pairwise matches cancel shared block noise.
    top = np.argsort(prelim, kind="stable")[:_AUDIT_TOURNAMENT_SIZE]
    audit.extend(cand_thetas[top], cand_losses[top], cand_psi[top])
    best_idx = int(
        top[
            np.argmin(
                [
                    audit.value_from_losses(cand_losses[i], cand_psi[i])
                    for i in top
                ]
            )
        ]
    )
    best_restart, _, best_theta = candidates[best_idx]
    best_theta = best_theta.copy()
    best_value = audit.value_from_losses(cand_losses[best_idx], cand_psi[best_idx])

    scale = max(1.0, float(np.max(np.abs(best_theta))))
    best_theta, best_value = _pattern_refine(
        audit,
        best_theta,
        best_value,
        tuple(s * scale for s in _REFINE_SCALES),
        _REFINE_EVAL_CAP,
    )

    return SolverResult(
        theta_hat=best_theta,
        trace=tuple(trace),
        converged=final_moves[best_restart] < cfg.tolerance,
        best_surrogate=best_value,
    )


# ---------------------------------------------------------------------------
# brute-force grid oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Per-dimension (lo, hi, step) axes of a rectangular coefficient grid."""

    axes: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        for lo, hi, step in self.axes:
            if step <= 0.0:
                raise ConfigError("grid step must be positive")
            if lo > hi:
                raise ConfigError("grid lo must not exceed hi")

    def points(self) -> np.ndarray:
        """Grid points in lexicographic (row-major) order, shape (G, d)."""
        axes_pts = [
            np.arange(lo, hi + 0.5 * step, step) for lo, hi, step in self.axes
        ]
        grids = np.meshgrid(*axes_pts, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class OracleFit:
    theta_hat: np.ndarray
    objective: np.ndarray
    grid_f: np.ndarray

    @property
    def predictor(self) -> LinearPredictor:
        return LinearPredictor(self.theta_hat)


def _grid_block_losses(X, y, thetas, n, m, chunk=4096):
    out = np.empty((thetas.shape[0], n))
    for lo in range(0, thetas.shape[0], chunk):
        hi = min(lo + chunk, thetas.shape[0])
        resid = X @ thetas[lo:hi].T - y[:, None]
        out[lo:hi] = np.square(resid).T.reshape(hi - lo, n, m).mean(axis=2)
    return out


def oracle_grid_fit(
    data: Dataset,
    p: BlockPartition,
    obj: ObjectiveConfig,
    grid_f: GridSpec,
    grid_g: GridSpec,
    cap: int = 10**8,
) -> OracleFit:
    """Exact minimax argmin over finite grids; ties go to the smallest theta.

    The cap bounds |grid_f| * |grid_g| * n, the number of median-increment
    entries evaluated; the default 1e8 is practical for d <= 2.
    """
    pts_f = grid_f.points()
    pts_g = grid_g.points()
    if pts_f.shape[1] != data.dim or pts_g.shape[1] != data.dim:
        raise DimensionError("grid dimension does not match data")
    if pts_f.shape[0] * pts_g.shape[0] * p.n > cap:
        raise GridCapExceeded(
            f"{pts_f.shape[0]} x {pts_g.shape[0]} grid over {p.n} blocks "
            f"exceeds cap {cap}"
        )
    X = data.features[: p.total]
    y = data.responses[: p.total]
    n, m = p.n, p.m
    mid = n // 2

    losses_f = _grid_block_losses(X, y, pts_f, n, m)
    same = pts_f.shape == pts_g.shape and np.array_equal(pts_f, pts_g)
    losses_g = losses_f if same else _grid_block_losses(X, y, pts_g, n, m)

    lam = obj.lam
    psi_f = psi_batch(obj.regularizer, pts_f) if lam else None
    psi_g = psi_batch(obj.regularizer, pts_g) if lam else None

    objective = np.empty(pts_f.shape[0])
    for i in range(pts_f.shape[0]):
        diffs = losses_f[i][None, :] - losses_g
        meds = np.partition(diffs, mid, axis=1)[:, mid]
        if lam:
            meds = meds + lam * (psi_f[i] - psi_g)
        objective[i] = np.max(meds)

    best = int(np.argmin(objective))  # row-major order = lexicographic tie-break
    return OracleFit(theta_hat=pts_f[best].copy(), objective=objective, grid_f=pts_f)
