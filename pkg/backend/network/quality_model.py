"""Chlorine transport plant for a network with fixed flows.

State layout: node concentrations in declaration order, then the segments of
every link in declaration order (upstream segment first).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from backend.lti_model import StateSpaceModel
from backend.network.network_spec import NetworkSpec


@dataclass(frozen=True)
class StateLayout:
    node_index: Dict[str, int]
    link_slices: Dict[str, Tuple[int, int]]
    n_x: int

    def link_outlet(self, link_id: str) -> int:
        start, count = self.link_slices[link_id]
        return start + count - 1


def state_layout(spec: NetworkSpec) -> StateLayout:
    node_index = {n.id: i for i, n in enumerate(spec.nodes)}
    offset = len(spec.nodes)
    link_slices = {}
    for link in spec.links:
        link_slices[link.id] = (offset, link.n_segments)
        offset += link.n_segments
    return StateLayout(node_index, link_slices, offset)


def _transition_entries(spec: NetworkSpec, layout: StateLayout):
    phi = spec.decay_factor
    lam = spec.courant
    inflow = spec.inflows()
    rows, cols, vals = [], [], []

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    for link in spec.links:
        start, count = layout.link_slices[link.id]
        upstream = layout.node_index[link.from_node]
        for s in range(count):
            state = start + s
            source = upstream if s == 0 else state - 1
            if link.kind != "pipe":
                add(state, source, 1.0)
            elif lam == 1.0:
                add(state, source, phi)
            else:
                add(state, state, phi * (1.0 - lam))
                add(state, source, phi * lam)

    incoming: Dict[str, list] = {n.id: [] for n in spec.nodes}
    for link in spec.links:
        incoming[link.to_node].append(link)

    for node in spec.nodes:
        i = layout.node_index[node.id]
        q_in = inflow[node.id]
        if node.kind == "reservoir":
            if spec.hold_reservoirs:
                add(i, i, 1.0)
            continue
        if node.kind == "junction":
            for link in incoming[node.id]:
                add(i, layout.link_outlet(link.id), phi * link.flow / q_in)
            continue
        alpha = q_in * spec.dt / node.tank_volume
        add(i, i, phi * (1.0 - alpha))
        for link in incoming[node.id]:
            add(i, layout.link_outlet(link.id), phi * alpha * link.flow / q_in)

    return rows, cols, vals


def transition_matrix(spec: NetworkSpec) -> sparse.csr_matrix:
    layout = state_layout(spec)
    rows, cols, vals = _transition_entries(spec, layout)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(layout.n_x, layout.n_x))


def build_quality_model(spec: NetworkSpec) -> StateSpaceModel:
    layout = state_layout(spec)
    A = transition_matrix(spec).toarray()

    B = np.zeros((layout.n_x, len(spec.boosters)))
    for j, node_id in enumerate(spec.boosters):
        B[layout.node_index[node_id], j] = 1.0
    C = np.zeros((len(spec.sensors), layout.n_x))
    for i, node_id in enumerate(spec.sensors):
        C[i, layout.node_index[node_id]] = 1.0
    D = np.zeros((len(spec.sensors), len(spec.boosters)))

    arrivals = arrival_steps(spec)
    for i, sensor in enumerate(spec.sensors):
        for j, booster in enumerate(spec.boosters):
            if np.isinf(arrivals[i, j]):
                logging.warning(f"{spec.name}: no flow path from booster {booster} to sensor {sensor}; "
                                "that channel pair will show zero response")

    logging.debug(f"Built {spec.name}: n_x={layout.n_x}, n_u={B.shape[1]}, n_y={C.shape[0]}")
    return StateSpaceModel(A, B, C, D, spec.dt)


def arrival_steps(spec: NetworkSpec) -> np.ndarray:
    """First step (sensors x boosters) at which a booster impulse can reach each sensor; inf if never."""
    layout = state_layout(spec)
    n = len(spec.nodes)
    weights = np.full((n, n), np.inf)
    for link in spec.links:
        i, j = layout.node_index[link.from_node], layout.node_index[link.to_node]
        weights[i, j] = min(weights[i, j], link.n_segments + 1)
    graph = csgraph.csgraph_from_dense(weights, null_value=np.inf)

    sources = [layout.node_index[b] for b in spec.boosters]
    distance = csgraph.dijkstra(graph, directed=True, indices=sources)
    targets = [layout.node_index[s] for s in spec.sensors]
    return 1.0 + distance[:, targets].T


def mass_weights(spec: NetworkSpec) -> np.ndarray:
    """Water volume behind each state, so that weights @ x is the tracked chlorine mass."""
    layout = state_layout(spec)
    w = np.zeros(layout.n_x)
    inflow = spec.inflows()
    for node in spec.nodes:
        i = layout.node_index[node.id]
        if node.kind == "tank":
            w[i] = node.tank_volume
        elif node.kind == "junction":
            w[i] = inflow[node.id] * spec.dt
    for link in spec.links:
        start, count = layout.link_slices[link.id]
        volume = link.flow * spec.dt
        if link.kind == "pipe":
            volume /= spec.courant
        w[start:start + count] = volume
    return w


def tracked_mass(spec: NetworkSpec, x: np.ndarray) -> float:
    return float(mass_weights(spec) @ np.asarray(x, dtype=float))


def check_data_completeness(spec: NetworkSpec, horizon: int, input_width: int = 1) -> bool:
    """Warn when a reachable sensor's response cannot fit inside ``horizon`` steps."""
    arrivals = arrival_steps(spec)
    complete = True
    for i, sensor in enumerate(spec.sensors):
        for j, booster in enumerate(spec.boosters):
            arrival = arrivals[i, j]
            if np.isfinite(arrival) and arrival + input_width > horizon:
                logging.warning(
                    f"{spec.name}: response of {sensor} to {booster} starts at step {int(arrival)}, "
                    f"too late for a {horizon}-step record with a {input_width}-step input"
                )
                complete = False
    return complete
