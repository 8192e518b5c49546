from dataclasses import dataclass
from typing import Tuple
import math

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform square grid on the periodic box [0, L)^2"""
    n: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"Grid needs at least 4 nodes per dimension, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"Domain length must be positive and finite, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    def coordinates(self) -> np.ndarray:
        """1D node coordinates i * dx"""
        return np.arange(self.n) * self.dx

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates as (X, Y) arrays indexed [ix, iy]"""
        x = self.coordinates()
        return np.meshgrid(x, x, indexing='ij')

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.n) + 0.5) * self.dx
        return np.meshgrid(x, x, indexing='ij')

    def node(self, i: int, j: int) -> Tuple[float, float]:
        return (i % self.n) * self.dx, (j % self.n) * self.dx

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return np.mod(x, self.L)

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L}
