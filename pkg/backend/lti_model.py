"""Discrete-time LTI state-space models.

    x(k+1) = A x(k) + B u(k)
    y(k)   = C x(k) + D u(k)
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field, model_validator
from scipy import sparse
from scipy.sparse import csgraph
from typing_extensions import Self

from backend.exceptions import ConvergenceError, DimensionError
from backend.signals import MarkovSequence, SignalSequence
from backend.utils import dump_json, load_json

SPARSE_DENSITY = 0.05
NEAR_ORIGIN = 0.05


def _frozen_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, _frozen_matrix(getattr(self, name), name))

        n_x = self.A.shape[0]
        if self.A.shape != (n_x, n_x):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if n_x < 1 or self.B.shape[1] < 1 or self.C.shape[0] < 1:
            raise DimensionError(
                f"n_x, n_u and n_y must be at least 1, got "
                f"({n_x}, {self.B.shape[1]}, {self.C.shape[0]})"
            )
        if self.B.shape[0] != n_x:
            raise DimensionError(f"B rows ({self.B.shape[0]}) != n_x ({n_x})")
        if self.C.shape[1] != n_x:
            raise DimensionError(f"C columns ({self.C.shape[1]}) != n_x ({n_x})")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionError(
                f"D shape {self.D.shape} != (n_y, n_u) = ({self.C.shape[0]}, {self.B.shape[1]})"
            )
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def transition_operator(self):
        """A as CSR when it is sparse enough for the product to pay off."""
        if self.n_x > 1 and np.count_nonzero(self.A) < SPARSE_DENSITY * self.A.size:
            return sparse.csr_matrix(self.A)
        return self.A


@dataclass(frozen=True)
class PoleReport:
    poles: np.ndarray
    spectral_radius: float
    stable: bool
    inside: int
    on_circle: int
    outside: int
    near_origin: int


def simulate(model: StateSpaceModel, u: SignalSequence, x0: Optional[np.ndarray] = None,
             divergence_limit: Optional[float] = None) -> SignalSequence:
    """Run the state recurrence from x0 (zero when omitted).

    With ``divergence_limit`` the output is truncated at the first step whose
    output leaves [-limit, limit] or stops being finite; the returned sequence
    is then shorter than ``u``.
    """
    if u.kind != "input":
        raise ValueError(f"simulate expects an input signal, got kind {u.kind!r}")
    if u.n_channels != model.n_u:
        raise DimensionError(f"input channels ({u.n_channels}) != n_u ({model.n_u})")
    if x0 is None:
        x = np.zeros(model.n_x)
    else:
        x = np.array(x0, dtype=float).ravel()
        if x.shape[0] != model.n_x:
            raise DimensionError(f"x0 length ({x.shape[0]}) != n_x ({model.n_x})")

    A = model.transition_operator()
    Bu = model.B @ u.data
    Du = model.D @ u.data
    y = np.empty((model.n_y, u.length))

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(u.length):
            y[:, k] = model.C @ x + Du[:, k]
            if divergence_limit is not None:
                yk = y[:, k]
                if not np.all(np.isfinite(yk)) or np.any(np.abs(yk) > divergence_limit):
                    return _truncate_diverged(y, k, divergence_limit, u.dt)
            x = A @ x + Bu[:, k]

    return SignalSequence(y, u.dt, "output")


def _truncate_diverged(y: np.ndarray, k: int, limit: float, dt: float) -> SignalSequence:
    logging.warning(f"Simulation diverged at step {k} (|y| > {limit:g}); output truncated")
    if k == 0:
        first = np.nan_to_num(y[:, :1], nan=limit, posinf=limit, neginf=-limit)
        return SignalSequence(np.clip(first, -limit, limit), dt, "output")
    return SignalSequence(y[:, :k], dt, "output")


def impulse_response(model: StateSpaceModel, m: int) -> MarkovSequence:
    if m < 1:
        raise ValueError(f"impulse response length must be at least 1, got {m}")
    A = model.transition_operator()
    params = np.empty((m + 1, model.n_y, model.n_u))
    params[0] = model.D
    AkB = model.B
    for k in range(1, m + 1):
        params[k] = model.C @ AkB
        AkB = A @ AkB
    return MarkovSequence(params)


def _block_eigvals(A: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.eigvals(A, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigenvalues of a {A.shape[0]}x{A.shape[0]} block of A did not converge") from e


def poles(model: StateSpaceModel) -> np.ndarray:
    """Eigenvalues of A by modulus descending, ties by phase ascending.

    A is split into the strongly connected components of its sparsity graph;
    a symmetric permutation makes it block triangular, so the spectrum is the
    union of the diagonal blocks' spectra. Shared eigenvalues of different
    blocks then stay as accurate as each block alone.
    """
    n_blocks, labels = csgraph.connected_components(
        sparse.csr_matrix(model.A != 0), directed=True, connection="strong"
    )
    eig = np.empty(model.n_x, dtype=complex)
    position = 0
    for block in range(n_blocks):
        index = np.flatnonzero(labels == block)
        if index.size == 1:
            eig[position] = model.A[index[0], index[0]]
        else:
            eig[position:position + index.size] = _block_eigvals(model.A[np.ix_(index, index)])
        position += index.size
    order = np.lexsort((np.angle(eig), -np.round(np.abs(eig), 12)))
    return eig[order]


def spectral_radius(model: StateSpaceModel) -> float:
    return float(np.max(np.abs(poles(model))))


def is_stable(model: StateSpaceModel) -> bool:
    return spectral_radius(model) < 1.0


def pole_zero_report(model: StateSpaceModel) -> PoleReport:
    p = poles(model)
    modulus = np.abs(p)
    on_circle = np.isclose(modulus, 1.0, rtol=0.0, atol=1e-12)
    radius = float(modulus.max())
    return PoleReport(
        poles=p,
        spectral_radius=radius,
        stable=radius < 1.0,
        inside=int(np.sum((modulus < 1.0) & ~on_circle)),
        on_circle=int(np.sum(on_circle)),
        outside=int(np.sum((modulus > 1.0) & ~on_circle)),
        near_origin=int(np.sum(modulus < NEAR_ORIGIN)),
    )


def cascade(first: StateSpaceModel, second: StateSpaceModel) -> StateSpaceModel:
    """Series connection: the outputs of ``first`` drive the inputs of ``second``."""
    if first.n_y != second.n_u:
        raise DimensionError(f"first.n_y ({first.n_y}) != second.n_u ({second.n_u})")
    if not math.isclose(first.dt, second.dt, rel_tol=1e-12):
        raise ValueError(f"time steps differ: {first.dt} vs {second.dt}")

    A = np.block([
        [first.A, np.zeros((first.n_x, second.n_x))],
        [second.B @ first.C, second.A],
    ])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpaceModel(A, B, C, D, first.dt)


def rmse(y_true: SignalSequence, y_hat: SignalSequence) -> float:
    if y_true.data.shape != y_hat.data.shape:
        raise DimensionError(f"output shapes differ: {y_true.data.shape} vs {y_hat.data.shape}")
    err = y_true.data - y_hat.data
    return float(np.sqrt(np.sum(err * err) / y_true.length))


def rmse_per_channel(y_true: SignalSequence, y_hat: SignalSequence) -> np.ndarray:
    if y_true.data.shape != y_hat.data.shape:
        raise DimensionError(f"output shapes differ: {y_true.data.shape} vs {y_hat.data.shape}")
    err = y_true.data - y_hat.data
    return np.sqrt(np.mean(err * err, axis=1))


def _reachable(adjacency: sparse.csr_matrix, seeds: np.ndarray) -> np.ndarray:
    """States reachable along ``adjacency`` from any seed (via a virtual root)."""
    n = adjacency.shape[0]
    root = sparse.csr_matrix(
        (np.ones(len(seeds)), (np.zeros(len(seeds), dtype=int), seeds)), shape=(1, n)
    )
    graph = sparse.bmat([[adjacency, None], [root, sparse.csr_matrix((1, 1))]], format="csr")
    order = csgraph.breadth_first_order(graph, n, directed=True, return_predecessors=False)
    mask = np.zeros(n + 1, dtype=bool)
    mask[order] = True
    return mask[:n]


def structural_region(model: StateSpaceModel) -> np.ndarray:
    """Mask of states reachable from some input and reaching some output through nonzero entries."""
    # edge j -> i whenever x_i(k+1) depends on x_j(k)
    forward = sparse.csr_matrix((model.A != 0).T.astype(float))
    from_inputs = _reachable(forward, np.flatnonzero(np.any(model.B != 0, axis=1)))
    to_outputs = _reachable(forward.T.tocsr(), np.flatnonzero(np.any(model.C != 0, axis=0)))
    return from_inputs & to_outputs


class ModelDocument(BaseModel):
    n_x: int = Field(ge=1)
    n_u: int = Field(ge=1)
    n_y: int = Field(ge=1)
    dt: float = Field(gt=0.0)
    A: List[List[float]]
    B: List[List[float]]
    C: List[List[float]]
    D: List[List[float]]

    @model_validator(mode="after")
    def check_shapes(self) -> Self:
        expected = {
            "A": (self.n_x, self.n_x),
            "B": (self.n_x, self.n_u),
            "C": (self.n_y, self.n_x),
            "D": (self.n_y, self.n_u),
        }
        for name, (rows, cols) in expected.items():
            matrix = getattr(self, name)
            if len(matrix) != rows or any(len(row) != cols for row in matrix):
                raise ValueError(f"{name} must be {rows}x{cols}")
        return self


def model_to_document(model: StateSpaceModel) -> dict:
    return {
        "n_x": model.n_x,
        "n_u": model.n_u,
        "n_y": model.n_y,
        "dt": model.dt,
        "A": model.A.tolist(),
        "B": model.B.tolist(),
        "C": model.C.tolist(),
        "D": model.D.tolist(),
    }


def model_from_document(document: dict) -> StateSpaceModel:
    doc = ModelDocument.model_validate(document)
    return StateSpaceModel(
        np.array(doc.A, dtype=float).reshape(doc.n_x, doc.n_x),
        np.array(doc.B, dtype=float).reshape(doc.n_x, doc.n_u),
        np.array(doc.C, dtype=float).reshape(doc.n_y, doc.n_x),
        np.array(doc.D, dtype=float).reshape(doc.n_y, doc.n_u),
        doc.dt,
    )


def save_model(model: StateSpaceModel, path: str) -> None:
    dump_json(model_to_document(model), path)


def load_model(path: str) -> StateSpaceModel:
    return model_from_document(load_json(path))
