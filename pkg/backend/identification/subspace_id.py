"""Unifying subspace identification (N4SID, MOESP and CVA weightings).

Pipeline: oblique projection of the future outputs onto the past data along
the future inputs, weighting, truncated SVD, state sequences, then a least
squares fit of (A, B, C, D). Zero initial state and noise-free data are assumed.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from backend.exceptions import DimensionError, ExcitationError, RealizationError
from backend.identification.order_select import binary_search_order
from backend.identification.result import IdentifiedModel, finalize
from backend.lti_model import StateSpaceModel
from backend.numerics import (
    condition_number,
    numerical_rank,
    oblique_projection,
    pinv_solve,
    project_out_rows,
    singular_values,
    sqrt_psd,
    svd_truncate,
)
from backend.settings import app_settings
from backend.signals import SignalSequence, build_hankel

SimVariant = Literal["n4sid", "moesp", "cva"]
SIM_VARIANTS = ("n4sid", "moesp", "cva")


@dataclass(frozen=True)
class SimWeights:
    """Left (W_1) and right (W_2) weights as actions; None on the left means identity."""
    variant: str
    left: Optional[np.ndarray] = None
    left_pinv: Optional[np.ndarray] = None
    project_right: bool = False
    pseudo_root: bool = False

    def apply(self, O_k: np.ndarray, U_f: np.ndarray) -> np.ndarray:
        weighted = O_k
        if self.project_right:
            weighted = project_out_rows(weighted, U_f)
        if self.left is not None:
            weighted = self.left @ weighted
        return weighted

    def unweight_observability(self, Gamma: np.ndarray) -> np.ndarray:
        if self.left_pinv is None:
            return Gamma
        return self.left_pinv @ Gamma


@dataclass(frozen=True)
class StateRecovery:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    residual: float
    underdetermined: bool

    def as_model(self, dt: float) -> StateSpaceModel:
        return StateSpaceModel(self.A, self.B, self.C, self.D, dt)


def sim_weights(variant: SimVariant, Y_f: np.ndarray, U_f: np.ndarray) -> SimWeights:
    if variant == "n4sid":
        return SimWeights(variant)
    if variant == "moesp":
        return SimWeights(variant, project_right=True)
    if variant != "cva":
        raise ValueError(f"unknown subspace variant {variant!r}; expected one of {SIM_VARIANTS}")

    Y_pi = project_out_rows(Y_f, U_f)
    root = sqrt_psd(Y_pi @ Y_f.T / Y_f.shape[1])
    if root.pseudo:
        logging.warning(
            f"cva: future-output covariance is singular (rank {root.rank} of {Y_f.shape[0]}); "
            "using the pseudo inverse square root"
        )
    return SimWeights(
        variant,
        left=root.inverse_sqrt,
        left_pinv=root.sqrt,
        project_right=True,
        pseudo_root=root.pseudo,
    )


def recover_state_matrices(X_k: np.ndarray, X_k1: np.ndarray, U_k: np.ndarray,
                           Y_k: np.ndarray) -> StateRecovery:
    """Least squares [X_k1; Y_k] = [A B; C D] [X_k; U_k]."""
    columns = {X_k.shape[1], X_k1.shape[1], U_k.shape[1], Y_k.shape[1]}
    if len(columns) != 1:
        raise DimensionError(f"column counts differ across state and data blocks: {sorted(columns)}")
    if X_k.shape[0] != X_k1.shape[0]:
        raise DimensionError(f"X_k rows ({X_k.shape[0]}) != X_k+1 rows ({X_k1.shape[0]})")

    n_x, n_u = X_k.shape[0], U_k.shape[0]
    regressor = np.vstack([X_k, U_k])
    target = np.vstack([X_k1, Y_k])
    theta = pinv_solve(regressor.T, target.T).T

    residual = float(np.linalg.norm(target - theta @ regressor))
    return StateRecovery(
        A=theta[:n_x, :n_x],
        B=theta[:n_x, n_x:],
        C=theta[n_x:, :n_x],
        D=theta[n_x:, n_x:n_x + n_u],
        residual=residual,
        underdetermined=numerical_rank(regressor) < regressor.shape[0],
    )


def default_block_rows(n_r: int, n_y: int) -> int:
    return max(2, math.ceil(2 * n_r / n_y))


def identify_sim(u: SignalSequence, y: SignalSequence, k: Optional[int] = None,
                 n_r: Optional[int] = None, variant: SimVariant = "n4sid",
                 energy_goal: Optional[float] = None,
                 m: Optional[int] = None) -> IdentifiedModel:
    if (n_r is None) == (energy_goal is None):
        raise ValueError("give exactly one of n_r or energy_goal")
    if u.length != y.length:
        raise DimensionError(f"input length ({u.length}) != output length ({y.length})")
    if k is None:
        k = default_block_rows(n_r, y.n_channels) if n_r is not None \
            else app_settings.identification.sim_block_rows
    if k < 2:
        raise ValueError(f"subspace identification needs at least 2 block rows, got {k}")

    data = build_hankel(u, y, k, m)
    n_u, n_y = data.n_u, data.n_y

    input_rank = numerical_rank(data.U_f[:n_u])
    if input_rank < n_u:
        raise ExcitationError(
            "input is not persistently exciting: the first future input block has rank "
            f"{input_rank} < {n_u}",
            diagnostics={"first_block_rank": input_rank, "n_u": n_u},
        )
    future_rank = numerical_rank(data.U_f)
    if future_rank < k * n_u:
        logging.info(f"{variant}: future input Hankel rank {future_rank} < {k * n_u}")

    past = data.past
    O_k = oblique_projection(data.Y_k, data.U_f, past)
    weights = sim_weights(variant, data.Y_k, data.U_f)
    weighted = weights.apply(O_k, data.U_f)

    sv = singular_values(weighted)
    if sv.size == 0 or sv[0] == 0.0:
        raise RealizationError("oblique projection vanishes; the outputs carry no response")

    limit = min((k - 1) * n_y, sv.size)
    if n_r is None:
        n_r = binary_search_order(sv, energy_goal)
        if n_r > limit:
            logging.warning(f"{variant}: energy goal asks for order {n_r}, capped at {limit}")
            n_r = limit
    if n_r > limit:
        raise ValueError(f"order {n_r} exceeds {limit}, the most {k} block rows can identify")

    tsvd = svd_truncate(weighted, n_r)
    Gamma = weights.unweight_observability(tsvd.U_r * np.sqrt(tsvd.Sigma_r))
    X_k = pinv_solve(Gamma, O_k)

    shifted = data.shifted()
    O_k1 = oblique_projection(shifted.Y_k, shifted.U_f, shifted.past)
    X_k1 = pinv_solve(Gamma[:-n_y], O_k1)

    recovery = recover_state_matrices(X_k, X_k1, data.U_f[:n_u], data.Y_k[:n_y])
    if recovery.underdetermined:
        logging.warning(f"{variant}: state-matrix regression is under-determined")

    diagnostics = {
        "block_rows": k,
        "columns": data.columns,
        "future_input_rank": future_rank,
        "past_condition": condition_number(project_out_rows(past, data.U_f)),
        "truncation_residual": tsvd.discarded_energy(),
        "regression_residual": recovery.residual,
        "underdetermined": recovery.underdetermined,
        "pseudo_root": weights.pseudo_root,
    }
    return finalize(recovery.as_model(u.dt), sv, variant, diagnostics)
