from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Tuple
import logging

import numpy as np

from ..models.grid import PeriodicGrid

logger = logging.getLogger(__name__)

PLANES = ("f", "fx", "fy", "fxy")
DERIVATIVES = ((0, 0), (1, 0), (0, 1), (1, 1))

Sampler = Callable[[np.ndarray, np.ndarray], Sequence[np.ndarray]]


class NonFiniteFieldError(ValueError):
    """Raised when jet data contains NaN or infinite entries"""
    pass


def _cubic_weights(s: np.ndarray, h: float, order: int) -> Tuple[np.ndarray, ...]:
    """1D Hermite weights (value-left, slope-left, value-right, slope-right)"""
    s2 = s * s
    if order == 0:
        s3 = s2 * s
        return (1.0 - 3.0 * s2 + 2.0 * s3,
                h * (s - 2.0 * s2 + s3),
                3.0 * s2 - 2.0 * s3,
                h * (s3 - s2))
    return ((6.0 * s2 - 6.0 * s) / h,
            1.0 - 4.0 * s + 3.0 * s2,
            (6.0 * s - 6.0 * s2) / h,
            3.0 * s2 - 2.0 * s)


def _locate(coord: np.ndarray, grid: PeriodicGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Cell index and local coordinate s in [0, 1) for wrapped points"""
    t = np.mod(coord, grid.L) / grid.dx
    # snap roundoff so that node coordinates hit the node exactly
    nearest = np.rint(t)
    t = np.where(np.abs(t - nearest) <= 16 * np.finfo(float).eps * grid.n, nearest, t)
    cell = np.floor(t)
    s = t - cell
    return cell.astype(np.int64) % grid.n, s


@dataclass(frozen=True, eq=False)
class HermiteField:
    """Periodic scalar field stored as jets (f, f_x, f_y, f_xy) per node"""
    grid: PeriodicGrid
    jets: np.ndarray

    def __post_init__(self):
        jets = np.ascontiguousarray(self.jets, dtype=np.float64)
        n = self.grid.n
        if jets.shape != (4, n, n):
            raise ValueError(f"Jet array must have shape (4, {n}, {n}), got {jets.shape}")
        if not np.all(np.isfinite(jets)):
            raise NonFiniteFieldError("non-finite jet data")
        jets.setflags(write=False)
        object.__setattr__(self, 'jets', jets)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> 'HermiteField':
        return cls(grid, np.zeros((4, grid.n, grid.n)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> 'HermiteField':
        jets = np.zeros((4, grid.n, grid.n))
        jets[0] = value
        return cls(grid, jets)

    def plane(self, name: str) -> np.ndarray:
        return self.jets[PLANES.index(name)]

    def _prepare(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                   np.asarray(y, dtype=np.float64))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("invalid evaluation point")
        shape = x.shape
        ix, sx = _locate(x.ravel(), self.grid)
        iy, sy = _locate(y.ravel(), self.grid)
        return shape, ix, sx, iy, sy

    def _corners(self, ix, iy):
        n = self.grid.n
        flat = self.jets.reshape(4, n * n)
        for a in (0, 1):
            cx = (ix + a) % n
            for b in (0, 1):
                cy = (iy + b) % n
                yield a, b, flat[:, cx * n + cy]

    def evaluate(self, x, y, deriv: Tuple[int, int] = (0, 0)) -> np.ndarray:
        """Evaluate the (c, d) partial derivative of the interpolant at (x, y)"""
        c, d = deriv
        if c not in (0, 1) or d not in (0, 1):
            raise ValueError(f"Derivative order must be in {{0,1}}^2, got {deriv}")
        shape, ix, sx, iy, sy = self._prepare(x, y)
        return self._cell_values(ix, sx, iy, sy, c, d).reshape(shape)

    def cell_polynomial(self, ix, iy, sx, sy, deriv: Tuple[int, int] = (0, 0)) -> np.ndarray:
        """The bicubic of cell (ix, iy) at local coordinates in [0, 1]^2, edges included"""
        ix, iy, sx, sy = np.broadcast_arrays(np.asarray(ix, dtype=np.int64), np.asarray(iy, dtype=np.int64),
                                             np.asarray(sx, dtype=np.float64), np.asarray(sy, dtype=np.float64))
        if deriv[0] not in (0, 1) or deriv[1] not in (0, 1):
            raise ValueError(f"Derivative order must be in {{0,1}}^2, got {deriv}")
        if np.any((sx < 0) | (sx > 1) | (sy < 0) | (sy > 1)):
            raise ValueError("local cell coordinates must lie in [0, 1]")
        n = self.grid.n
        values = self._cell_values(ix.ravel() % n, sx.ravel(), iy.ravel() % n, sy.ravel(), *deriv)
        return values.reshape(ix.shape)

    def _cell_values(self, ix, sx, iy, sy, c: int, d: int) -> np.ndarray:
        h = self.grid.dx
        wx = _cubic_weights(sx, h, c)
        wy = _cubic_weights(sy, h, d)

        out = np.zeros(ix.shape)
        for a, b, corner in self._corners(ix, iy):
            vx, gx = wx[2 * a], wx[2 * a + 1]
            vy, gy = wy[2 * b], wy[2 * b + 1]
            out += vx * vy * corner[0] + gx * vy * corner[1] + vx * gy * corner[2] + gx * gy * corner[3]
        return out

    def evaluate_jet(self, x, y) -> np.ndarray:
        """All four derivative orders at once, stacked as (f, f_x, f_y, f_xy)"""
        shape, ix, sx, iy, sy = self._prepare(x, y)
        h = self.grid.dx
        wx = (_cubic_weights(sx, h, 0), _cubic_weights(sx, h, 1))
        wy = (_cubic_weights(sy, h, 0), _cubic_weights(sy, h, 1))

        out = np.zeros((4,) + ix.shape)
        for a, b, corner in self._corners(ix, iy):
            for k, (c, d) in enumerate(DERIVATIVES):
                vx, gx = wx[c][2 * a], wx[c][2 * a + 1]
                vy, gy = wy[d][2 * b], wy[d][2 * b + 1]
                out[k] += vx * vy * corner[0] + gx * vy * corner[1] + vx * gy * corner[2] + gx * gy * corner[3]
        return out.reshape((4,) + shape)

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluate(x, y)


def hermite_eval(field: HermiteField, p: Tuple[float, float], deriv: Tuple[int, int] = (0, 0)) -> float:
    """Scalar convenience wrapper around HermiteField.evaluate"""
    return float(field.evaluate(p[0], p[1], deriv))


def hermite_project(sampler: Sampler, grid: PeriodicGrid) -> HermiteField:
    """Project a jet sampler onto the Hermite space of a grid"""
    X, Y = grid.nodes()
    planes = sampler(X, Y)
    jets = np.stack([np.broadcast_to(np.asarray(p, dtype=np.float64), X.shape) for p in planes])
    if jets.shape[0] != 4:
        raise ValueError(f"Sampler must return 4 jet planes, got {jets.shape[0]}")
    return HermiteField(grid, jets)


def field_sampler(field: HermiteField) -> Sampler:
    """Jet sampler reading values and derivatives from an existing field"""
    def sample(x, y):
        return tuple(field.evaluate_jet(x, y))
    return sample


def combine(weights: Iterable[float], fields: Iterable[HermiteField]) -> HermiteField:
    """Linear combination of fields sharing one grid"""
    weights = list(weights)
    fields = list(fields)
    if not fields or len(weights) != len(fields):
        raise ValueError("combine needs one weight per field and at least one field")
    grid = fields[0].grid
    jets = np.zeros_like(fields[0].jets)
    for w, f in zip(weights, fields):
        if f.grid != grid:
            raise ValueError("Fields must share a grid to be combined")
        jets += w * f.jets
    return HermiteField(grid, jets)
