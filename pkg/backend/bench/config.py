import logging
import os
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from typing_extensions import Self

from backend.exceptions import DimensionError, InsufficientDataError
from backend.network.network_spec import NetworkSpec, load_network
from backend.network.presets import PRESETS, load_preset
from backend.settings import app_settings
from backend.signals import SignalSequence, gen_random, gen_rectangular, read_signal_csv

Method = Literal["n4sid", "moesp", "cva", "era", "okid-era"]
METHODS = ("n4sid", "moesp", "cva", "era", "okid-era")


class SignalPlan(BaseModel):
    """One of ``impulse[:amplitude]``, ``rect:start:width:amplitude``,
    ``random:low:high`` or a path to a signal CSV."""
    kind: Literal["impulse", "rect", "random", "csv"]
    amplitude: float = 1.0
    start: int = Field(default=0, ge=0)
    width: int = Field(default=1, ge=1)
    low: float = 0.0
    high: float = 1.0
    path: Optional[str] = None

    @model_validator(mode="after")
    def check_plan(self) -> Self:
        if self.kind == "random" and self.low > self.high:
            raise ValueError(f"empty random range [{self.low}, {self.high}]")
        if self.kind == "csv" and not self.path:
            raise ValueError("csv signal needs a path")
        return self

    @classmethod
    def parse(cls, text: str) -> "SignalPlan":
        parts = text.strip().split(":")
        head = parts[0].lower()
        try:
            if head == "impulse" and len(parts) <= 2:
                return cls(kind="impulse", amplitude=float(parts[1]) if len(parts) == 2 else 1.0)
            if head == "rect" and len(parts) == 4:
                return cls(kind="rect", start=int(parts[1]), width=int(parts[2]), amplitude=float(parts[3]))
            if head == "random" and len(parts) == 3:
                return cls(kind="random", low=float(parts[1]), high=float(parts[2]))
        except ValueError as e:
            raise ValueError(f"cannot parse signal {text!r}: {e}") from e
        if text.lower().endswith(".csv"):
            return cls(kind="csv", path=text)
        raise ValueError(
            f"unknown signal {text!r}; expected impulse[:amp], rect:start:width:amp, random:lo:hi or a .csv path"
        )

    def describe(self) -> str:
        if self.kind == "impulse":
            return f"impulse:{self.amplitude:g}"
        if self.kind == "rect":
            return f"rect:{self.start}:{self.width}:{self.amplitude:g}"
        if self.kind == "random":
            return f"random:{self.low:g}:{self.high:g}"
        return self.path

    @property
    def active_width(self) -> int:
        return self.width if self.kind == "rect" else 1

    def generate(self, n_u: int, steps: int, seed: int, dt: float) -> SignalSequence:
        if self.kind == "random":
            return gen_random(n_u, steps, (self.low, self.high), seed, dt)
        if self.kind == "csv":
            signal = read_signal_csv(self.path, dt, "input")
            if signal.n_channels != n_u:
                raise DimensionError(f"{self.path} has {signal.n_channels} channels, plant has {n_u} inputs")
            if signal.length < steps:
                raise InsufficientDataError(f"samples in {self.path}", steps, signal.length)
            return signal.head(steps)

        # one pulse per channel, staggered so channels stay distinguishable
        start, width = self.start, self.active_width
        if start + n_u * width > steps:
            raise ValueError(f"{self.describe()} on {n_u} channels does not fit in {steps} steps")
        data = np.zeros((n_u, steps))
        for channel in range(n_u):
            pulse = gen_rectangular(n_u, steps, channel, self.amplitude, start + channel * width, width, dt)
            data += pulse.data
        return SignalSequence(data, dt, "input")


def default_validation_input() -> str:
    low, high = app_settings.bench.validation_bounds
    return f"random:{low:g}:{high:g}"


class ExperimentConfig(BaseModel):
    network: str
    method: Method
    order: Optional[int] = Field(default=None, ge=1)
    energy_goal: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    test_input: SignalPlan = Field(default_factory=lambda: SignalPlan.parse("rect:0:400:1"))
    validation_input: SignalPlan = Field(default_factory=lambda: SignalPlan.parse(default_validation_input()))
    steps: int = Field(default_factory=lambda: app_settings.bench.steps, ge=10)
    seed: int = Field(default_factory=lambda: app_settings.bench.seed)
    block_rows: Optional[int] = Field(default=None, ge=2)
    markov_horizon: Optional[int] = Field(default=None, ge=1)
    divergence_limit: float = Field(default_factory=lambda: app_settings.bench.divergence_limit, gt=0.0)
    scenario: Optional[str] = None
    output: Optional[str] = None

    @field_validator("test_input", "validation_input", mode="before")
    @classmethod
    def parse_signal(cls, value):
        if isinstance(value, str):
            return SignalPlan.parse(value)
        return value

    @model_validator(mode="after")
    def check_experiment(self) -> Self:
        if (self.order is None) == (self.energy_goal is None):
            raise ValueError("give exactly one of order or energy_goal")
        if self.method == "era" and self.test_input.kind != "impulse":
            logging.warning(f"era needs impulse test inputs; replacing {self.test_input.describe()}")
            self.test_input = SignalPlan(kind="impulse", amplitude=self.test_input.amplitude)
        return self


def resolve_network(network: str) -> NetworkSpec:
    if network in PRESETS:
        return load_preset(network)
    if os.path.isfile(network):
        return load_network(network)
    raise ValueError(f"{network!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a network file")
