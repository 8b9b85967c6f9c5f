"""Epoch-level training: gradient aggregation, updates, and the main loop.

Per-step gradient contributions are mapped to one update per epoch by an
aggregation rule. Summation is the true gradient of the total cost; mean
differs only by a count factor that a rescaled learning rate absorbs;
median and min_abs are robust alternatives that are deliberately *not*
gradients of the cost (a near-zero mean can hide large per-step changes).

Parameters are frozen within an epoch: forward and backward passes of
epoch i see only params_i, and the update produces params_{i+1}.
"""

from dataclasses import dataclass, field

import numpy as np

from .adjoint import GradSeq, backward_costates, per_step_gradients
from .errors import ConfigurationError, DivergenceError, NumericalError
from .loss import CostBreakdown, LossWeights, total_cost
from .model import BrnnParams, Dims, NONLINEARITIES, Sequence, forward

AGGREGATIONS = ("sum", "mean", "median", "min_abs")


@dataclass
class GradSet:
    """One epoch-level gradient per parameter group."""

    dU: np.ndarray
    dW: np.ndarray
    db: np.ndarray
    dV: np.ndarray
    dD: np.ndarray
    dc: np.ndarray


@dataclass
class TrainConfig:
    eta: float = 0.01
    epochs: int = 100
    aggregation: str = "sum"
    stop_tol: float = 0.0      # stop once total cost drops below this
    seed: int = 0
    init_scale: float = 0.1    # uniform init half-width for U, W, V, Dft
    alpha_A: float = 0.5       # A = alpha_A * I

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ConfigurationError("eta must be > 0")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigurationError(f"unknown aggregation {self.aggregation!r}")
        if not 0.0 < self.alpha_A <= 1.0:
            raise ConfigurationError("alpha_A must be in (0, 1]")
        if self.init_scale <= 0.0:
            raise ConfigurationError("init_scale must be > 0")


@dataclass
class EpochMetrics:
    epoch: int                     # 1-based
    cost: CostBreakdown
    grad_norm: float               # max per-step gradient block norm
    lambda_max: float              # max ||lambda_k||_2 over k = 1..N
    param_norms: dict = field(default_factory=dict)


def _reduce(a: np.ndarray, mode: str) -> np.ndarray:
    if mode == "sum":
        return a.sum(axis=0)
    if mode == "mean":
        # same summation path as "sum", then one division by the count
        return a.sum(axis=0) / a.shape[0]
    if mode == "median":
        return np.median(a, axis=0)
    if mode == "min_abs":
        idx = np.expand_dims(np.abs(a).argmin(axis=0), axis=0)
        return np.take_along_axis(a, idx, axis=0)[0]
    raise ConfigurationError(f"unknown aggregation {mode!r}")


def aggregate(grads: GradSeq, mode: str) -> GradSet:
    """Collapse per-step contributions over k. Counts differ by group:
    N for the state-equation parameters, N+1 for the output-equation ones."""
    return GradSet(
        dU=_reduce(grads.dU, mode), dW=_reduce(grads.dW, mode),
        db=_reduce(grads.db, mode), dV=_reduce(grads.dV, mode),
        dD=_reduce(grads.dD, mode), dc=_reduce(grads.dc, mode))


def apply_update(params: BrnnParams, g: GradSet, eta: float) -> BrnnParams:
    """Gradient step p <- p - eta*dp for every trainable group; A unchanged."""
    if eta <= 0.0:
        raise ConfigurationError("eta must be > 0")
    out = BrnnParams(
        A=params.A, U=params.U - eta * g.dU, W=params.W - eta * g.dW,
        b=params.b - eta * g.db, V=params.V - eta * g.dV,
        Dft=params.Dft - eta * g.dD, c=params.c - eta * g.dc,
        sigma=params.sigma)
    for name in ("U", "W", "b", "V", "Dft", "c"):
        if not np.isfinite(getattr(out, name)).all():
            raise DivergenceError(f"non-finite {name} after update")
    return out


def init_params(dims: Dims, sigma: str = "tanh", init_scale: float = 0.1,
                alpha_A: float = 0.5, seed: int = 0) -> BrnnParams:
    """Randomly small init: U, W, V, Dft uniform in [-init_scale, init_scale],
    zero biases, A = alpha_A * I."""
    if sigma not in NONLINEARITIES:
        raise ConfigurationError(f"unknown nonlinearity {sigma!r}")
    if not 0.0 < alpha_A <= 1.0:
        raise ConfigurationError("alpha_A must be in (0, 1]")
    rng = np.random.default_rng(seed)
    n, m, r = dims.n, dims.m, dims.r
    u = lambda *shape: rng.uniform(-init_scale, init_scale, shape)
    return BrnnParams(
        A=alpha_A * np.eye(n), U=u(n, n), W=u(n, m), b=np.zeros(n),
        V=u(r, n), Dft=u(r, m), c=np.zeros(r), sigma=sigma)


def _max_step_norm(grads: GradSeq) -> float:
    worst = 0.0
    for a in (grads.dU, grads.dW, grads.db, grads.dV, grads.dD, grads.dc):
        flat = a.reshape(a.shape[0], -1)
        worst = max(worst, float(np.sqrt((flat ** 2).sum(axis=1)).max()))
    return worst


def train(config: TrainConfig, seq: Sequence, params0: BrnnParams, x0,
          w: LossWeights) -> tuple[BrnnParams, list[EpochMetrics]]:
    """Run forward -> backward -> aggregate -> update for up to
    config.epochs epochs, stopping early once total cost < stop_tol.

    Metrics are recorded with the cost of the parameters *entering* each
    epoch. Numerical failures re-raise with the epoch index attached.
    """
    params = params0
    history: list[EpochMetrics] = []
    for i in range(1, config.epochs + 1):
        try:
            traj = forward(params, seq, x0)
            cost = total_cost(traj, seq, params, w)
            costates = backward_costates(params, traj, w)
            grads = per_step_gradients(params, traj, costates, seq, w)
            gset = aggregate(grads, config.aggregation)
            history.append(EpochMetrics(
                epoch=i, cost=cost,
                grad_norm=_max_step_norm(grads),
                lambda_max=float(np.linalg.norm(costates.lam[1:], axis=1).max()),
                param_norms={name: float(np.linalg.norm(getattr(params, name)))
                             for name in ("U", "W", "b", "V", "Dft", "c")}))
            if cost.total < config.stop_tol:
                break
            params = apply_update(params, gset, config.eta)
        except NumericalError as exc:
            exc.epoch = i
            raise
    return params, history
