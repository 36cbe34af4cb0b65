"""Model order from the singular-value energy level.

The energy level of order n_r is the share of the singular-value sum carried
by the first n_r values; the selected order is the smallest one whose level
strictly exceeds the goal.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnergyProfile:
    singular_values: np.ndarray
    total: float
    levels: np.ndarray

    @classmethod
    def from_singular_values(cls, singular_values) -> "EnergyProfile":
        sv = np.array(singular_values, dtype=float).ravel()
        if sv.size == 0:
            raise ValueError("empty singular-value spectrum")
        if not np.all(np.isfinite(sv)) or np.any(sv < 0):
            raise ValueError("singular values must be finite and nonnegative")
        if np.any(np.diff(sv) > 0):
            raise ValueError("singular values must be sorted in descending order")

        cumulative = np.cumsum(sv)
        total = float(cumulative[-1])
        if total <= 0.0:
            raise ValueError("singular-value spectrum sums to zero")

        levels = cumulative / cumulative[-1]
        sv.setflags(write=False)
        levels.setflags(write=False)
        return cls(singular_values=sv, total=total, levels=levels)

    @property
    def size(self) -> int:
        return self.singular_values.shape[0]

    def level(self, n_r: int) -> float:
        if not 1 <= n_r <= self.size:
            raise ValueError(f"order {n_r} outside [1, {self.size}]")
        return float(self.levels[n_r - 1])


def energy_level(singular_values, n_r: int) -> float:
    return EnergyProfile.from_singular_values(singular_values).level(n_r)


def binary_search_order(singular_values, goal: float) -> int:
    if goal >= 1.0:
        raise ValueError(f"energy goal {goal} is unreachable; it must be below 1")

    profile = EnergyProfile.from_singular_values(singular_values)
    levels = profile.levels
    if goal <= 0.0 or levels[0] > goal:
        return 1

    # levels[left - 1] <= goal < levels[right - 1]
    left, right = 1, profile.size
    while right - left > 1:
        mid = (left + right) // 2
        if levels[mid - 1] > goal:
            right = mid
        else:
            left = mid
    return right
