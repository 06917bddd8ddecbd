"""Extended Kalman filter with L-banded inverse-covariance approximation.

Each step linearizes at the pre-update estimate, propagates the covariance
through two banded inversions (predict covariance, then information-form
update) and applies the merged predict/update state recursion. The exact
EKF is the special case L = d*|V| - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banded import BandedSymMatrix, add, add_scaled_identity, l_banded_inverse
from .errors import FilterDivergenceError, SingularSubmatrixError
from .model import (
    MeasurementBatch,
    WsnModel,
    gain_apply,
    h_eval,
    information_matrix,
    jacobian,
)


@dataclass(frozen=True)
class FilterState:
    """Estimate vector, banded covariance estimate, band parameter, timestep."""

    xhat: np.ndarray
    M: BandedSymMatrix
    L: int
    k: int = 0

    def __post_init__(self):
        xhat = np.asarray(self.xhat, dtype=float)
        n = xhat.shape[0]
        if self.M.n != n:
            raise ValueError("covariance dimension does not match the estimate")
        if not 0 <= self.L <= n - 1:
            raise ValueError(f"L must be in [0, {n - 1}]")
        if self.M.bw > self.L:
            raise ValueError("covariance bandwidth exceeds L")
        xhat.setflags(write=False)
        object.__setattr__(self, "xhat", xhat)


def init_filter(xhat0, var0, L) -> FilterState:
    """Start the filter with M_0 = var0 * I (uncorrelated initial errors)."""
    if not var0 > 0:
        raise ValueError("initial variance must be positive")
    xhat0 = np.asarray(xhat0, dtype=float)
    return FilterState(
        xhat=xhat0,
        M=BandedSymMatrix.scaled_identity(xhat0.shape[0], var0),
        L=int(L),
        k=0,
    )


def lb_ekf_step(state: FilterState, model: WsnModel, v,
                y: MeasurementBatch) -> FilterState:
    """One banded-filter step: linearize, banded covariance update, state
    update. Raises FilterDivergenceError when the banded approximation
    breaks down (singular window or nonpositive covariance diagonal)."""
    xhat = state.xhat
    if xhat.shape != (model.n_states,):
        raise ValueError("state length does not match the model")
    v = np.asarray(v, dtype=float)
    h = jacobian(xhat, model)
    p = add_scaled_identity(state.M, model.sigma_p)
    try:
        p_inv = l_banded_inverse(p, state.L)
        s = information_matrix(h, model)
        m_new = l_banded_inverse(add(p_inv, s), state.L)
    except SingularSubmatrixError as exc:
        raise FilterDivergenceError(state.k, str(exc)) from None
    diag = m_new.main_diagonal()
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0.0):
        raise FilterDivergenceError(
            state.k, "covariance diagonal is no longer positive"
        )
    innovation = y.y - h_eval(xhat, model)
    xhat_new = xhat + v + gain_apply(m_new, h, model, innovation)
    return FilterState(xhat=xhat_new, M=m_new, L=state.L, k=state.k + 1)


def ekf_step(state: FilterState, model: WsnModel, v,
             y: MeasurementBatch) -> FilterState:
    """Exact EKF step: the banded step at full band L = d|V| - 1."""
    full = model.n_states - 1
    wide = FilterState(xhat=state.xhat, M=state.M, L=full, k=state.k)
    return lb_ekf_step(wide, model, v, y)


def covariance_block(state: FilterState, i, d):
    """The d x d diagonal covariance block of agent i."""
    n_agents, rem = divmod(state.M.n, d)
    if rem:
        raise ValueError("covariance dimension is not a multiple of d")
    if not 0 <= i < n_agents:
        raise IndexError(f"agent index {i} out of range")
    dense = state.M.to_dense()
    return dense[i * d : (i + 1) * d, i * d : (i + 1) * d].copy()
