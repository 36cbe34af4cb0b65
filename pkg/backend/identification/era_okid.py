"""Eigensystem realization from Markov parameters, and OKID to estimate them
from general input/output records."""
import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from backend.exceptions import DimensionError, ExcitationError, InsufficientDataError, RealizationError
from backend.identification.order_select import binary_search_order
from backend.identification.result import IdentifiedModel, finalize
from backend.lti_model import StateSpaceModel
from backend.numerics import pinv_solve, rank_cutoff, singular_values, svd_truncate
from backend.settings import app_settings
from backend.signals import MarkovSequence, SignalSequence, build_okid_input_matrix

OKID_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class EraConfig:
    m_o: int
    m_c: int
    n_r: Optional[int] = None

    def __post_init__(self):
        if self.m_o < 1 or self.m_c < 1:
            raise ValueError(f"ERA needs m_o >= 1 and m_c >= 1, got ({self.m_o}, {self.m_c})")
        if self.n_r is not None and self.n_r < 1:
            raise ValueError(f"ERA order must be positive, got {self.n_r}")

    @property
    def required_parameters(self) -> int:
        return self.m_o + self.m_c + 3


def default_era_config(n_params: int, n_r: Optional[int] = None) -> EraConfig:
    """Near-square Hankel using every available Markov parameter."""
    usable = n_params - 3
    if usable < 2:
        raise InsufficientDataError("Markov parameters for ERA", 5, n_params)
    m_o = usable // 2
    return EraConfig(m_o=m_o, m_c=usable - m_o, n_r=n_r)


def markov_hankel(h: MarkovSequence, m_o: int, m_c: int, shift: int = 0) -> np.ndarray:
    """Block (i, j) = h(i + j + 1 + shift) for i <= m_o, j <= m_c."""
    needed = m_o + m_c + 2 + shift
    if needed > len(h):
        raise InsufficientDataError("Markov parameters for Hankel matrix", needed, len(h))
    index = np.arange(m_o + 1)[:, np.newaxis] + np.arange(m_c + 1)[np.newaxis, :] + 1 + shift
    blocks = h.params[index]
    return blocks.transpose(0, 2, 1, 3).reshape((m_o + 1) * h.n_y, (m_c + 1) * h.n_u)


def era(h: MarkovSequence, cfg: EraConfig, energy_goal: Optional[float] = None,
        dt: float = 1.0) -> IdentifiedModel:
    if (cfg.n_r is None) == (energy_goal is None):
        raise ValueError("give exactly one of cfg.n_r or energy_goal")
    if len(h) < cfg.required_parameters:
        raise InsufficientDataError("Markov parameters for ERA", cfg.required_parameters, len(h))

    H = markov_hankel(h, cfg.m_o, cfg.m_c)
    H_shift = markov_hankel(h, cfg.m_o, cfg.m_c, shift=1)
    limit = min(H.shape)
    if cfg.n_r is not None and cfg.n_r > limit:
        raise ValueError(f"ERA order {cfg.n_r} exceeds the Hankel limit {limit}")

    full = svd_truncate(H, limit)
    sv = full.full_singular_values
    if sv[0] == 0.0:
        raise RealizationError("Hankel matrix of Markov parameters is zero; nothing to realize")
    n_r = cfg.n_r if cfg.n_r is not None else binary_search_order(sv, energy_goal)
    rank = int(np.sum(sv > rank_cutoff(sv, H.shape)))
    if n_r > rank:
        raise RealizationError(f"ERA order {n_r} exceeds the Hankel numerical rank {rank}")

    U_r, V_r = full.U_r[:, :n_r], full.V_r[:, :n_r]
    root = np.sqrt(sv[:n_r])
    A = (U_r / root).T @ H_shift @ (V_r / root)
    B = (root[:, np.newaxis] * V_r.T)[:, :h.n_u]
    C = (U_r * root)[:h.n_y, :]
    D = h[0]

    diagnostics = {
        "m_o": cfg.m_o,
        "m_c": cfg.m_c,
        "hankel_shape": list(H.shape),
        "hankel_rank": rank,
        "markov_parameters": len(h),
    }
    return finalize(StateSpaceModel(A, B, C, D, dt), sv, "era", diagnostics, markov=h)


def markov_from_impulse(responses: Sequence[SignalSequence], amplitude: float = 1.0) -> MarkovSequence:
    """Markov parameters from one impulse experiment per input channel."""
    if not responses:
        raise ValueError("need one impulse response per input channel")
    if amplitude == 0.0:
        raise ValueError("impulse amplitude must be nonzero")
    lengths = {r.length for r in responses}
    channels = {r.n_channels for r in responses}
    if len(lengths) != 1 or len(channels) != 1:
        raise DimensionError(f"impulse responses disagree: lengths {sorted(lengths)}, channels {sorted(channels)}")

    stacked = np.stack([r.data for r in responses], axis=-1) / amplitude
    return MarkovSequence(stacked.transpose(1, 0, 2))


def okid_markov(u: SignalSequence, y: SignalSequence, m: Optional[int] = None) -> MarkovSequence:
    """Solve y_m = Y_m U_m for the Markov parameters Y_m, with zero initial state.

    An explicit ``m`` (or the configured horizon) is used as given. Otherwise the
    horizon starts at the largest one the record supports, n_samples // n_u - 1,
    and is halved while the input matrix is rank deficient or conditioned worse
    than OKID_CONDITION_LIMIT.
    """
    if u.length != y.length:
        raise DimensionError(f"input length ({u.length}) != output length ({y.length})")
    if m is None:
        m = app_settings.identification.markov_horizon
    if m is not None:
        return _okid_solve(u, y, m)

    m = u.length // u.n_channels - 1
    if m < 1:
        raise InsufficientDataError("samples for OKID horizon", 2 * u.n_channels, u.length)
    first_error = None
    while m >= 1:
        try:
            return _okid_solve(u, y, m, OKID_CONDITION_LIMIT)
        except ExcitationError as e:
            first_error = first_error or e
            logging.info(f"OKID horizon {m} rejected: {e}")
            m //= 2
    raise first_error


def _okid_solve(u: SignalSequence, y: SignalSequence, m: int,
                condition_limit: Optional[float] = None) -> MarkovSequence:
    n_samples = u.length
    if m + 1 > n_samples:
        raise InsufficientDataError("samples for OKID horizon", m + 1, n_samples)

    U = build_okid_input_matrix(u, m, n_samples)
    required = (m + 1) * u.n_channels
    s = singular_values(U)
    rank = int(np.sum(s > rank_cutoff(s, U.shape)))
    if rank < required:
        raise ExcitationError(
            f"OKID input matrix has rank {rank} < {required}; use a richer or longer input",
            diagnostics={"rank": rank, "required": required, "horizon": m},
        )
    condition = float(s[0] / s[required - 1])
    if condition_limit is not None and condition > condition_limit:
        raise ExcitationError(
            f"OKID input matrix has condition {condition:.3g} > {condition_limit:g}",
            diagnostics={"rank": rank, "required": required, "horizon": m, "condition": condition},
        )

    Y_m = pinv_solve(U.T, y.data.T).T
    params = Y_m.reshape(y.n_channels, m + 1, u.n_channels).transpose(1, 0, 2)
    logging.debug(f"OKID: {m + 1} Markov parameters from {n_samples} samples, condition {condition:.3g}")
    return MarkovSequence(params)


def okid_era(u: SignalSequence, y: SignalSequence, cfg: Optional[EraConfig] = None,
             m: Optional[int] = None, n_r: Optional[int] = None,
             energy_goal: Optional[float] = None) -> IdentifiedModel:
    markov = okid_markov(u, y, m)
    if cfg is None:
        cfg = default_era_config(len(markov), n_r)
    realized = era(markov, cfg, energy_goal, dt=u.dt)

    diagnostics = dict(realized.diagnostics, okid_horizon=markov.horizon, okid_samples=u.length)
    return dataclasses.replace(realized, method="okid-era", diagnostics=diagnostics)


def write_markov_csv(h: MarkovSequence, path: str) -> None:
    columns = [f"h{i}_{j}" for i in range(h.n_y) for j in range(h.n_u)]
    frame = pd.DataFrame(h.params.reshape(len(h), -1), columns=columns)
    frame.index.name = "k"
    frame.to_csv(path)


def read_markov_csv(path: str) -> MarkovSequence:
    frame = pd.read_csv(path, float_precision="round_trip").sort_values("k")
    columns = [c for c in frame.columns if c.startswith("h")]
    if not columns:
        raise ValueError(f"{path} has no Markov parameter columns")
    pairs = [tuple(int(v) for v in c[1:].split("_")) for c in columns]
    n_y = max(i for i, _ in pairs) + 1
    n_u = max(j for _, j in pairs) + 1
    ordered = [f"h{i}_{j}" for i in range(n_y) for j in range(n_u)]
    values = frame[ordered].to_numpy(dtype=float)
    return MarkovSequence(values.reshape(len(frame), n_y, n_u))
