"""Test signals and the data organization step of identification.

Signals are channel-major: ``data[c, k]`` is channel ``c`` at step ``k``.
"""
import logging
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import pandas as pd

from backend.exceptions import DimensionError, InsufficientDataError

SignalKind = Literal["input", "output", "state"]


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SignalSequence:
    data: np.ndarray
    dt: float = 1.0
    kind: SignalKind = "input"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        object.__setattr__(self, "data", _frozen_array(data, 2, "signal data"))
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise InsufficientDataError("signal samples", 1, self.data.shape[1])
        if self.dt <= 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.kind not in ("input", "output", "state"):
            raise ValueError(f"unknown signal kind {self.kind!r}")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    def head(self, m: int) -> "SignalSequence":
        return SignalSequence(self.data[:, :m], self.dt, self.kind)


@dataclass(frozen=True)
class MarkovSequence:
    """Markov parameters h(0)=D, h(k)=C A^(k-1) B stacked as (m+1, n_y, n_u)."""
    params: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "params", _frozen_array(self.params, 3, "Markov parameters"))
        if self.params.shape[0] < 1:
            raise InsufficientDataError("Markov parameters", 1, 0)

    @property
    def n_y(self) -> int:
        return self.params.shape[1]

    @property
    def n_u(self) -> int:
        return self.params.shape[2]

    @property
    def horizon(self) -> int:
        """Index of the last parameter (m)."""
        return self.params.shape[0] - 1

    def __len__(self) -> int:
        return self.params.shape[0]

    def __getitem__(self, k):
        return self.params[k]


@dataclass(frozen=True)
class HankelData:
    U_p: np.ndarray
    U_f: np.ndarray
    Y_0: np.ndarray
    Y_k: np.ndarray
    block_rows: int
    columns: int
    n_u: int
    n_y: int

    def shifted(self) -> "HankelData":
        """Move the first future block row into the past (k+1 past, k-1 future)."""
        return HankelData(
            U_p=np.vstack([self.U_p, self.U_f[:self.n_u]]),
            U_f=self.U_f[self.n_u:],
            Y_0=np.vstack([self.Y_0, self.Y_k[:self.n_y]]),
            Y_k=self.Y_k[self.n_y:],
            block_rows=self.block_rows,
            columns=self.columns,
            n_u=self.n_u,
            n_y=self.n_y,
        )

    @property
    def past(self) -> np.ndarray:
        """W_p = [U_p; Y_0]."""
        return np.vstack([self.U_p, self.Y_0])


def _check_channel(n_u: int, channel: int):
    if n_u < 1:
        raise ValueError(f"need at least one input channel, got {n_u}")
    if not 0 <= channel < n_u:
        raise IndexError(f"channel {channel} out of range for {n_u} input channels")


def gen_impulse(n_u: int, m: int, channel: int = 0, amplitude: float = 1.0,
                dt: float = 1.0) -> SignalSequence:
    _check_channel(n_u, channel)
    if m < 1:
        raise InsufficientDataError("impulse length", 1, m)
    data = np.zeros((n_u, m))
    data[channel, 0] = amplitude
    return SignalSequence(data, dt, "input")


def gen_rectangular(n_u: int, m: int, channel: int, amplitude: float, start: int,
                    width: int, dt: float = 1.0) -> SignalSequence:
    _check_channel(n_u, channel)
    if start < 0 or width < 0 or start + width > m:
        raise IndexError(f"window [{start}, {start + width}) does not fit in {m} steps")
    data = np.zeros((n_u, m))
    data[channel, start:start + width] = amplitude
    return SignalSequence(data, dt, "input")


def gen_random(n_u: int, m: int, amplitude_range: Tuple[float, float] = (0.0, 1.0),
               seed: Optional[int] = None, dt: float = 1.0) -> SignalSequence:
    low, high = amplitude_range
    if low > high:
        raise ValueError(f"empty amplitude range [{low}, {high}]")
    rng = np.random.default_rng(seed)
    data = rng.uniform(low, high, size=(n_u, m))
    return SignalSequence(data, dt, "input")


def block_hankel(data: np.ndarray, rows: int, cols: int, start: int = 0) -> np.ndarray:
    """Block Hankel matrix whose column j stacks data[:, start+j], ..., data[:, start+j+rows-1]."""
    n, length = data.shape
    needed = start + rows + cols - 1
    if needed > length:
        raise InsufficientDataError("samples for block Hankel matrix", needed, length)
    H = np.empty((rows * n, cols))
    for i in range(rows):
        H[i * n:(i + 1) * n, :] = data[:, start + i:start + i + cols]
    return H


def max_hankel_columns(length: int, k: int) -> int:
    return length - 2 * k + 1


def build_hankel(u: SignalSequence, y: SignalSequence, k: int,
                 m: Optional[int] = None) -> HankelData:
    if k < 1:
        raise ValueError(f"block rows must be at least 1, got {k}")
    if m is None:
        m = max_hankel_columns(min(u.length, y.length), k)
    if m < 1:
        raise InsufficientDataError("samples for Hankel columns", 2 * k, min(u.length, y.length))

    required = 2 * k + m - 1
    if u.length < required:
        raise InsufficientDataError("input samples", required, u.length)
    if y.length < required:
        raise InsufficientDataError("output samples", required, y.length)

    U = block_hankel(u.data, 2 * k, m)
    Y = block_hankel(y.data, 2 * k, m)
    n_u, n_y = u.n_channels, y.n_channels
    return HankelData(
        U_p=U[:k * n_u],
        U_f=U[k * n_u:],
        Y_0=Y[:k * n_y],
        Y_k=Y[k * n_y:],
        block_rows=k,
        columns=m,
        n_u=n_u,
        n_y=n_y,
    )


def build_okid_input_matrix(u: SignalSequence, m: int,
                            n_samples: Optional[int] = None) -> np.ndarray:
    """Block upper-triangular Toeplitz input matrix, block (i, j) = u(j - i) for j >= i.

    With ``n_samples = m + 1`` (the default) this is the square form; more
    samples give an overdetermined least-squares problem.
    """
    if n_samples is None:
        n_samples = m + 1
    if n_samples < m + 1:
        raise InsufficientDataError("OKID columns", m + 1, n_samples)
    if u.length < n_samples:
        raise InsufficientDataError("input samples", n_samples, u.length)

    n_u = u.n_channels
    U = np.zeros(((m + 1) * n_u, n_samples))
    for i in range(m + 1):
        U[i * n_u:(i + 1) * n_u, i:] = u.data[:, :n_samples - i]
    return U


def write_signal_csv(signal: SignalSequence, path: str) -> None:
    frame = pd.DataFrame(
        signal.data.T,
        columns=[f"ch{c}" for c in range(signal.n_channels)],
    )
    frame.index.name = "step"
    frame.to_csv(path)
    logging.debug(f"Wrote {signal.n_channels}x{signal.length} {signal.kind} signal to {path}")


def read_signal_csv(path: str, dt: float = 1.0, kind: SignalKind = "input") -> SignalSequence:
    frame = pd.read_csv(path, float_precision="round_trip")
    if "step" not in frame.columns:
        raise ValueError(f"{path} has no 'step' column")
    frame = frame.sort_values("step")
    channels = [c for c in frame.columns if c.startswith("ch")]
    if not channels:
        raise ValueError(f"{path} has no channel columns")
    channels.sort(key=lambda c: int(c[2:]))
    return SignalSequence(frame[channels].to_numpy(dtype=float).T, dt, kind)
