import os
from typing import Callable, Dict, Optional

from backend.network.network_spec import LinkSpec, NetworkSpec, NodeSpec, distribute_segments
from backend.settings import app_settings
from backend.utils import load_json

NET1_LAYOUT = os.path.join(os.path.dirname(__file__), "net1.json")


def three_node_preset(dt: Optional[float] = None, decay_rate: Optional[float] = None) -> NetworkSpec:
    """Reservoir -> pump -> junction J1 -> 150-segment pipe -> tank TK3 (154 states)."""
    return NetworkSpec(
        name="three-node",
        nodes=[
            NodeSpec(id="J1", kind="junction", demand=0.03),
            NodeSpec(id="R2", kind="reservoir", reservoir_concentration=0.0),
            NodeSpec(id="TK3", kind="tank", tank_volume=2250.0),
        ],
        links=[
            LinkSpec(id="PM21", kind="pump", from_node="R2", to_node="J1", flow=0.08),
            LinkSpec(id="P13", kind="pipe", from_node="J1", to_node="TK3", flow=0.05, n_segments=150),
        ],
        decay_rate=app_settings.network.decay_rate if decay_rate is None else decay_rate,
        dt=app_settings.network.dt if dt is None else dt,
        boosters=["J1"],
        sensors=["J1", "TK3"],
    )


def net1_preset(dt: Optional[float] = None, decay_rate: Optional[float] = None) -> NetworkSpec:
    """Looped nine-junction network with one reservoir and one tank (1293 states)."""
    layout = load_json(NET1_LAYOUT)
    segments = distribute_segments(
        layout["total_pipe_segments"],
        {p["id"]: p["travel_weight"] for p in layout["pipes"]},
    )

    nodes = []
    for node in layout["nodes"]:
        if node["kind"] == "tank":
            node = dict(node, tank_volume=layout["tank_volume"])
        nodes.append(NodeSpec(**node))

    links = [LinkSpec(kind="pump", **layout["pump"])]
    for pipe in layout["pipes"]:
        links.append(LinkSpec(
            id=pipe["id"],
            kind="pipe",
            from_node=pipe["from_node"],
            to_node=pipe["to_node"],
            flow=pipe["flow"],
            n_segments=segments[pipe["id"]],
        ))

    return NetworkSpec(
        name=layout["name"],
        nodes=nodes,
        links=links,
        decay_rate=app_settings.network.decay_rate if decay_rate is None else decay_rate,
        dt=app_settings.network.dt if dt is None else dt,
        boosters=layout["boosters"],
        sensors=layout["sensors"],
    )


PRESETS: Dict[str, Callable[..., NetworkSpec]] = {
    "three-node": three_node_preset,
    "net1": net1_preset,
}


def load_preset(name: str, **kwargs) -> NetworkSpec:
    try:
        factory = PRESETS[name]
    except KeyError as e:
        raise ValueError(f"unknown network preset {name!r}; choose from {sorted(PRESETS)}") from e
    return factory(**kwargs)
