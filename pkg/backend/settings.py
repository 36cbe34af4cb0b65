import os
import logging
from pydantic import (
    BaseModel,
    Field,
    field_validator,
    model_validator,
    ValidationInfo
)
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional, Tuple
from typing_extensions import Self
from backend.utils import parse_multi_columns

DOTENV_PATH = os.environ.get(
    "DOTENV_PATH",
    os.path.join(
        os.path.dirname(
            os.path.dirname(__file__)
        ),
        ".env"
    )
)


class _BaseSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=DOTENV_PATH,
        extra="ignore",
        env_ignore_empty=True
    )
    debug: bool = False


class _IdentificationSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="SYSID_",
        env_file=DOTENV_PATH,
        extra="ignore",
        env_ignore_empty=True
    )

    energy_goal: float = Field(default=0.95, gt=0.0, lt=1.0)
    sim_block_rows: int = Field(default=20, ge=2)
    markov_horizon: Optional[int] = Field(default=None, ge=1)


class _NetworkSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="WDN_",
        env_file=DOTENV_PATH,
        extra="ignore",
        env_ignore_empty=True
    )

    dt: float = Field(default=15.0, gt=0.0)
    decay_rate: float = Field(default=1e-4, ge=0.0)


class _BenchSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="BENCH_",
        env_file=DOTENV_PATH,
        extra="ignore",
        env_ignore_empty=True
    )

    steps: int = Field(default=2000, ge=10)
    seed: int = 42
    njobs: int = Field(default=1, ge=1, le=32)
    divergence_limit: float = Field(default=1e12, gt=0.0)
    validation_range: str = "0,2"
    output_dir: str = "results"

    @field_validator("validation_range")
    @classmethod
    def check_range(cls, comma_separated_string: str, info: ValidationInfo) -> str:
        values = parse_multi_columns(comma_separated_string.strip())
        if len(values) != 2:
            raise ValueError(f"{info.field_name} needs exactly two values: low,high")

        low, high = (float(v) for v in values)
        if low > high:
            raise ValueError(f"{info.field_name} is empty: {low} > {high}")

        return comma_separated_string

    @property
    def validation_bounds(self) -> Tuple[float, float]:
        low, high = parse_multi_columns(self.validation_range.strip())
        return float(low), float(high)


class _AppSettings(BaseModel):
    base_settings: _BaseSettings = _BaseSettings()
    identification: _IdentificationSettings = _IdentificationSettings()
    network: _NetworkSettings = _NetworkSettings()
    bench: _BenchSettings = _BenchSettings()

    @model_validator(mode="after")
    def log_configuration(self) -> Self:
        logging.debug(
            "Settings loaded: energy goal %s, steps %s, njobs %s",
            self.identification.energy_goal,
            self.bench.steps,
            self.bench.njobs,
        )
        return self


app_settings = _AppSettings()
