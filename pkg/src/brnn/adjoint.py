"""Backward multiplier recursion and per-step parameter gradients.

The Lagrange multipliers lambda_k carry the sensitivity of the total cost
to the state x_k and propagate backward in time:

    lambda_N = sigma'_N (.) (V^T e_N)
    lambda_k = (A + U diag(sigma'_k))^T lambda_{k+1}
             + sigma'_k (.) (V^T e_k) + state_loss_grad(...)     N-1 >= k >= 1

lambda_0 is evaluated by the same formula for diagnostics but never enters
a parameter update. Growth or decay of ||lambda_k|| is governed by powers
of (A + U diag sigma'_k): this recursion is the exact quantification of
vanishing/exploding gradients, and a non-finite lambda raises
CostateExplosionError naming the step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CostateExplosionError
from .loss import LossWeights, state_loss_grad
from .model import BrnnParams, Sequence, Trajectory, nonlinearity_derivative


@dataclass
class CostateSeq:
    """Multipliers lambda_k, k = 0..N. Entries 1..N feed parameter updates;
    lam[0] is diagnostic only."""

    lam: np.ndarray        # (N+1, n)
    has_lambda0: bool = True

    @property
    def N(self) -> int:
        return self.lam.shape[0] - 1


@dataclass
class GradSeq:
    """Per-step gradient contributions before aggregation.

    State-equation entries run k = 0..N-1, output-equation entries k = 0..N.
    """

    dU: np.ndarray   # (N, n, n)
    dW: np.ndarray   # (N, n, m)
    db: np.ndarray   # (N, n)
    dV: np.ndarray   # (N+1, r, n)
    dD: np.ndarray   # (N+1, r, m)
    dc: np.ndarray   # (N+1, r)


def final_costate(params: BrnnParams, x_N, e_N) -> np.ndarray:
    """Boundary condition lambda_N = sigma'(x_N) (.) (V^T e_N)."""
    sp = nonlinearity_derivative(params.sigma, x_N)
    return sp * (params.V.T @ np.asarray(e_N, dtype=float))


def backward_costates(params: BrnnParams, traj: Trajectory,
                      w: LossWeights) -> CostateSeq:
    """Run the multiplier recursion from k = N down to k = 0."""
    N, n = traj.N, params.n
    lam = np.empty((N + 1, n))
    lam[N] = final_costate(params, traj.x[N], traj.e[N])
    if not np.isfinite(lam[N]).all():
        raise CostateExplosionError(f"non-finite multiplier at k={N}", k=N)

    At, Ut, Vt, kind = params.A.T, params.U.T, params.V.T, params.sigma
    # explosion is detected explicitly, so silence the intermediate warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N - 1, -1, -1):
            sp = nonlinearity_derivative(kind, traj.x[k])
            v = (At @ lam[k + 1] + sp * (Ut @ lam[k + 1])
                 + sp * (Vt @ traj.e[k])
                 + state_loss_grad(w, traj.x[k], traj.h[k], sp))
            if not np.isfinite(v).all():
                raise CostateExplosionError(f"non-finite multiplier at k={k}", k=k)
            lam[k] = v
    return CostateSeq(lam=lam, has_lambda0=True)


def per_step_gradients(params: BrnnParams, traj: Trajectory,
                       costates: CostateSeq, seq: Sequence,
                       w: LossWeights) -> GradSeq:
    """Unscaled gradient contributions at each step:

        dU_k = gamma1 U + lambda_{k+1} h_k^T          k = 0..N-1
        dW_k = gamma1 W + lambda_{k+1} s_k^T
        db_k = gamma1 b + lambda_{k+1}
        dV_k = gamma2 V + e_k h_k^T                   k = 0..N
        dD_k = gamma2 Dft + e_k s_k^T
        dc_k = gamma2 c + e_k
    """
    N = traj.N
    if costates.N != N or seq.N != N:
        raise ConfigurationError("costates/sequence length mismatch")
    lam_next = costates.lam[1:]       # lambda_1..lambda_N
    h, e, s = traj.h, traj.e, seq.s

    dU = np.einsum("ki,kj->kij", lam_next, h[:N]) + w.gamma1 * params.U
    dW = np.einsum("ki,kj->kij", lam_next, s[:N]) + w.gamma1 * params.W
    db = lam_next + w.gamma1 * params.b
    dV = np.einsum("ki,kj->kij", e, h) + w.gamma2 * params.V
    dD = np.einsum("ki,kj->kij", e, s) + w.gamma2 * params.Dft
    dc = e + w.gamma2 * params.c
    return GradSeq(dU=dU, dW=dW, db=db, dV=dV, dD=dD, dc=dc)
