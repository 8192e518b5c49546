from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class RKTableau:
    """Explicit Butcher tableau (a strictly lower triangular)"""
    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.size
        if a.shape != (s, s) or c.size != s:
            raise ValueError(f"Tableau {self.name}: inconsistent stage counts")
        if np.any(np.triu(a) != 0):
            raise ValueError(f"Tableau {self.name}: a must be strictly lower triangular")
        if abs(b.sum() - 1.0) > 1e-14:
            raise ValueError(f"Tableau {self.name}: weights b must sum to 1")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-14:
            raise ValueError(f"Tableau {self.name}: c must equal the row sums of a")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'c', c)

    @property
    def stages(self) -> int:
        return self.b.size


def _tableau(name: str, a: Sequence[Sequence[float]], b: Sequence[float], order: int) -> RKTableau:
    a = np.array(a, dtype=float)
    return RKTableau(name=name, a=a, b=np.array(b, dtype=float), c=a.sum(axis=1), order=order)


TABLEAUS: Dict[str, RKTableau] = {
    "euler": _tableau("euler", [[0.0]], [1.0], 1),
    "midpoint": _tableau("midpoint", [[0.0, 0.0], [0.5, 0.0]], [0.0, 1.0], 2),
    "heun": _tableau("heun", [[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5], 2),
    # Kutta's third order method, c = (0, 1/2, 1)
    "rk3": _tableau("rk3",
                    [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]],
                    [1 / 6, 2 / 3, 1 / 6], 3),
    "ssprk3": _tableau("ssprk3",
                       [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.25, 0.25, 0.0]],
                       [1 / 6, 1 / 6, 2 / 3], 3),
    "rk4": _tableau("rk4",
                    [[0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0],
                     [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
                    [1 / 6, 1 / 3, 1 / 3, 1 / 6], 4),
}


def get_tableau(name: str) -> RKTableau:
    if name not in TABLEAUS:
        raise ValueError(f"Unknown Runge-Kutta tableau {name!r}; choose from {sorted(TABLEAUS)}")
    return TABLEAUS[name]
