import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from backend.identification.order_select import EnergyProfile
from backend.lti_model import StateSpaceModel, spectral_radius
from backend.signals import MarkovSequence


@dataclass(frozen=True)
class IdentifiedModel:
    model: StateSpaceModel
    order: int
    singular_values: np.ndarray
    energy_level: float
    method: str
    diagnostics: dict = field(default_factory=dict)
    # Markov parameters the realization was built from (ERA and OKID/ERA only)
    markov: Optional[MarkovSequence] = None

    @property
    def stable(self) -> bool:
        return bool(self.diagnostics.get("stable", False))


def finalize(model: StateSpaceModel, singular_values: np.ndarray, method: str,
             diagnostics: dict, markov: Optional[MarkovSequence] = None) -> IdentifiedModel:
    """Attach energy level and stability; instability is reported, not raised."""
    radius = spectral_radius(model)
    diagnostics = dict(diagnostics, spectral_radius=radius, stable=radius < 1.0)
    if radius >= 1.0:
        logging.warning(f"{method}: identified model of order {model.n_x} is unstable "
                        f"(spectral radius {radius:.6g})")

    profile = EnergyProfile.from_singular_values(singular_values)
    return IdentifiedModel(
        model=model,
        order=model.n_x,
        singular_values=profile.singular_values,
        energy_level=profile.level(model.n_x),
        method=method,
        diagnostics=diagnostics,
        markov=markov,
    )
