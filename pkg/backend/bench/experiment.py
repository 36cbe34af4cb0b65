"""Identification experiments on simulated network plants."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from backend.bench.config import METHODS, ExperimentConfig, default_validation_input, resolve_network
from backend.bench.report import ExperimentReport, Traces, failed_report
from backend.identification.era_okid import default_era_config, era, markov_from_impulse, okid_era
from backend.identification.result import IdentifiedModel
from backend.identification.subspace_id import default_block_rows, identify_sim
from backend.lti_model import (
    StateSpaceModel,
    pole_zero_report,
    rmse,
    rmse_per_channel,
    simulate,
    structural_region,
)
from backend.network.network_spec import NetworkSpec
from backend.network.quality_model import arrival_steps, build_quality_model, check_data_completeness
from backend.settings import app_settings
from backend.signals import gen_impulse

SCENARIOS: Dict[str, dict] = {
    "scenario-1": {"test_input": "rect:0:400:1", "order": 15},
    "scenario-2": {"test_input": "random:0:1", "order": 15},
    "scenario-3": {"test_input": "rect:0:400:1", "order": 40},
}


def sim_block_rows(spec: NetworkSpec, n_r: Optional[int] = None) -> int:
    """Block rows for subspace identification: the longest booster-to-sensor
    delay plus the rows the order itself needs, so every sensor responds
    inside the future window."""
    arrivals = arrival_steps(spec)
    finite = arrivals[np.isfinite(arrivals)]
    delay = int(finite.max()) if finite.size else 0
    if n_r is None:
        return delay + app_settings.identification.sim_block_rows
    return delay + default_block_rows(n_r, len(spec.sensors))


def identify(cfg: ExperimentConfig, plant: StateSpaceModel,
             block_rows: Optional[int] = None) -> Tuple[IdentifiedModel, float]:
    """Excite the plant with the test input, then identify; returns the model and
    the wall time of the identification call alone. ``cfg.block_rows`` wins over
    ``block_rows`` for the subspace methods."""
    if cfg.method == "era":
        amplitude = cfg.test_input.amplitude
        responses = [
            simulate(plant, gen_impulse(plant.n_u, cfg.steps, channel, amplitude, plant.dt))
            for channel in range(plant.n_u)
        ]
        started = time.perf_counter()
        markov = markov_from_impulse(responses, amplitude)
        identified = era(markov, default_era_config(len(markov), cfg.order), cfg.energy_goal, dt=plant.dt)
        return identified, time.perf_counter() - started

    u = cfg.test_input.generate(plant.n_u, cfg.steps, cfg.seed, plant.dt)
    y = simulate(plant, u)
    started = time.perf_counter()
    if cfg.method == "okid-era":
        identified = okid_era(u, y, m=cfg.markov_horizon, n_r=cfg.order, energy_goal=cfg.energy_goal)
    else:
        identified = identify_sim(u, y, k=cfg.block_rows or block_rows, n_r=cfg.order,
                                  variant=cfg.method, energy_goal=cfg.energy_goal)
    return identified, time.perf_counter() - started


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    spec = resolve_network(cfg.network)
    plant = build_quality_model(spec)
    check_data_completeness(spec, cfg.steps, cfg.test_input.active_width)

    identified, wall_time = identify(cfg, plant, sim_block_rows(spec, cfg.order))
    logging.info(f"{spec.name}/{cfg.method}: order {identified.order} identified in {wall_time:.2f}s")

    # validation seed differs from the test seed so random records are independent
    u_val = cfg.validation_input.generate(plant.n_u, cfg.steps, cfg.seed + 1, plant.dt)
    y_true = simulate(plant, u_val)
    y_hat = simulate(identified.model, u_val, divergence_limit=cfg.divergence_limit)
    diverged = y_hat.length < y_true.length
    y_true = y_true.head(y_hat.length)

    poles = pole_zero_report(identified.model)
    return ExperimentReport(
        network=spec.name,
        method=cfg.method,
        scenario=cfg.scenario,
        test_input=cfg.test_input.describe(),
        validation_input=cfg.validation_input.describe(),
        seed=cfg.seed,
        n_r=identified.order,
        energy_level=identified.energy_level,
        rmse=rmse(y_true, y_hat),
        rmse_per_channel=rmse_per_channel(y_true, y_hat).tolist(),
        wall_time_s=wall_time,
        stable=poles.stable,
        diverged=diverged,
        spectral_radius=poles.spectral_radius,
        poles=poles.poles,
        singular_values=identified.singular_values,
        identifiable_states=int(np.sum(structural_region(plant))),
        plant_states=plant.n_x,
        diagnostics=identified.diagnostics,
        traces=Traces(true=y_true.data, identified=y_hat.data),
        markov=identified.markov,
    )


def run_cell(cfg: ExperimentConfig) -> ExperimentReport:
    try:
        return run_experiment(cfg)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as e:
        logging.exception(f"{cfg.scenario or 'experiment'}/{cfg.method} failed")
        return failed_report(cfg, e)


def scenario_configs(network: str, methods: Sequence[str] = METHODS,
                     scenarios: Optional[Dict[str, dict]] = None, steps: Optional[int] = None,
                     seed: Optional[int] = None,
                     validation_input: Optional[str] = None) -> List[ExperimentConfig]:
    scenarios = SCENARIOS if scenarios is None else scenarios
    configs = []
    for name, scenario in scenarios.items():
        for method in methods:
            test_input = "impulse" if method == "era" else scenario["test_input"]
            configs.append(ExperimentConfig(
                network=network,
                method=method,
                order=scenario["order"],
                test_input=test_input,
                validation_input=validation_input or default_validation_input(),
                steps=steps or app_settings.bench.steps,
                seed=app_settings.bench.seed if seed is None else seed,
                scenario=name,
            ))
    return configs


def run_configs(configs: List[ExperimentConfig], njobs: int = 1) -> List[ExperimentReport]:
    """Run every config; results keep the order of ``configs``."""
    if njobs > 1:
        with ProcessPoolExecutor(max_workers=njobs) as executor:
            return list(tqdm(executor.map(run_cell, configs), total=len(configs)))
    return [run_cell(cfg) for cfg in tqdm(configs)]


def run_scenarios(network: str, njobs: Optional[int] = None, **kwargs) -> List[ExperimentReport]:
    configs = scenario_configs(network, **kwargs)
    return run_configs(configs, njobs or app_settings.bench.njobs)


def select_common_order(network: str, energy_goal: Optional[float] = None,
                        methods: Sequence[str] = METHODS, test_input: str = "rect:0:400:1",
                        steps: Optional[int] = None, seed: Optional[int] = None) -> Dict[str, int]:
    """Order each method picks for ``energy_goal``; "common" is the largest of them."""
    goal = energy_goal or app_settings.identification.energy_goal
    spec = resolve_network(network)
    plant = build_quality_model(spec)

    block_rows = sim_block_rows(spec)
    orders = {}
    for method in methods:
        cfg = ExperimentConfig(
            network=network,
            method=method,
            energy_goal=goal,
            test_input="impulse" if method == "era" else test_input,
            steps=steps or app_settings.bench.steps,
            seed=app_settings.bench.seed if seed is None else seed,
        )
        try:
            identified, _ = identify(cfg, plant, block_rows)
        except (ValueError, RuntimeError) as e:
            logging.warning(f"{method}: no order for goal {goal}: {e}")
            continue
        orders[method] = identified.order

    if not orders:
        raise ValueError(f"no method produced an order for energy goal {goal}")
    orders["common"] = max(orders.values())
    return orders
