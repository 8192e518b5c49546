from typing import Optional
import logging

import numpy as np

from ..models.grid import PeriodicGrid
from ..models.records import DiagnosticsRecord
from ..solvers.biot_savart import VelocityField
from ..solvers.flowmap import MapStack, jacobian_det_error, vorticity_eval

logger = logging.getLogger(__name__)

# rows per evaluation block on large diagnostic grids
BLOCK_ROWS = 256

ERROR_NORMS = ("integral", "mean")


def lattice_vorticity(stack: MapStack, omega0, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """omega on the tensor lattice xs x ys, indexed [ix, iy], evaluated in row blocks"""
    out = np.empty((xs.size, ys.size))
    for start in range(0, xs.size, BLOCK_ROWS):
        X, Y = np.meshgrid(xs[start:start + BLOCK_ROWS], ys, indexing='ij')
        out[start:start + BLOCK_ROWS] = vorticity_eval(stack, omega0, X, Y)
    return out


def grid_vorticity(stack: MapStack, omega0, grid: PeriodicGrid) -> np.ndarray:
    x = grid.coordinates()
    return lattice_vorticity(stack, omega0, x, x)


def enstrophy(values: np.ndarray, grid: PeriodicGrid) -> float:
    return float(grid.dx ** 2 * np.sum(values * values))


def energy(velocity: VelocityField, grid: PeriodicGrid) -> float:
    total = 0.0
    x = grid.coordinates()
    for start in range(0, grid.n, BLOCK_ROWS):
        X, Y = np.meshgrid(x[start:start + BLOCK_ROWS], x, indexing='ij')
        u1, u2 = velocity.velocity(X, Y)
        total += float(np.sum(u1 * u1 + u2 * u2))
    return grid.dx ** 2 * total


def conservation(stack: MapStack, omega0, velocity: VelocityField, grid: PeriodicGrid,
                 initial: Optional[DiagnosticsRecord] = None, t: Optional[float] = None,
                 error_norm: str = "integral") -> DiagnosticsRecord:
    """
    Enstrophy and energy ledgers on the evaluation grid, relative to the initial record.

    The ledgers are integrals over the torus. With error_norm="mean" the two
    errors are reported per unit area, i.e. as differences of mean-square norms.
    """
    if error_norm not in ERROR_NORMS:
        raise ValueError(f"error_norm must be one of {ERROR_NORMS}, got {error_norm!r}")
    z = enstrophy(grid_vorticity(stack, omega0, grid), grid)
    e = energy(velocity, grid)
    record = DiagnosticsRecord(
        t=velocity.t if t is None else t,
        enstrophy=z,
        energy=e,
        det_error=jacobian_det_error(stack.active),
        remap_count=stack.remap_count,
    )
    if initial is not None:
        area = grid.L ** 2 if error_norm == "mean" else 1.0
        record.enstrophy_error = (z - initial.enstrophy) / area
        record.energy_error = (e - initial.energy) / area
    logger.debug(f"t={record.t:.4f} enstrophy={z:.12e} energy={e:.12e}")
    return record
