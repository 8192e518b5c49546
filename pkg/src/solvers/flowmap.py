from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import logging

import numpy as np

from ..interp.hermite import HermiteField
from ..models.grid import PeriodicGrid
from .biot_savart import VelocityStack
from .tableaus import RKTableau, get_tableau

logger = logging.getLogger(__name__)

# fourth order central difference: offsets and coefficients (divide by 12 eps)
_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FD_COEFFS = np.array([1.0, -8.0, 8.0, -1.0])


@dataclass(frozen=True, eq=False)
class HermiteMap:
    """Backward map chi(x) = x + d(x) on the map grid, valid from time tau"""
    d1: HermiteField
    d2: HermiteField
    tau: float = 0.0

    def __post_init__(self):
        if self.d1.grid != self.d2.grid:
            raise ValueError("Displacement components must share a grid")

    @classmethod
    def identity(cls, grid: PeriodicGrid, tau: float = 0.0) -> 'HermiteMap':
        zero = HermiteField.zeros(grid)
        return cls(zero, zero, tau)

    @property
    def grid(self) -> PeriodicGrid:
        return self.d1.grid

    def evaluate(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        """chi(x, y), unwrapped"""
        return x + self.d1.evaluate(x, y), y + self.d2.evaluate(x, y)

    def jacobian(self, x, y) -> np.ndarray:
        """grad chi = I + grad d as an array of shape (2, 2, ...)"""
        j1 = self.d1.evaluate_jet(x, y)
        j2 = self.d2.evaluate_jet(x, y)
        return np.array([[1.0 + j1[1], j1[2]], [j2[1], 1.0 + j2[2]]])

    def is_identity(self) -> bool:
        return not (np.any(self.d1.jets) or np.any(self.d2.jets))


@dataclass(frozen=True)
class SubMap:
    map: HermiteMap
    start: float
    end: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError(f"Submap interval must have positive length, got [{self.start}, {self.end}]")


@dataclass
class MapStack:
    """Finalized submaps plus the active map; the global map composes them right to left"""
    active: HermiteMap
    finalized: List[SubMap] = field(default_factory=list)
    remap_count: int = 0
    remap_times: List[float] = field(default_factory=list)

    @classmethod
    def identity(cls, grid: PeriodicGrid, t: float = 0.0) -> 'MapStack':
        return cls(active=HermiteMap.identity(grid, t))

    @property
    def grid(self) -> PeriodicGrid:
        return self.active.grid

    def evaluate(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        return global_map_eval(self, x, y)

    def append_submap(self, submap: SubMap) -> None:
        if self.finalized and abs(self.finalized[-1].end - submap.start) > 1e-12 * max(1.0, abs(submap.start)):
            raise ValueError(f"Submap starting at {submap.start} does not abut {self.finalized[-1].end}")
        self.finalized.append(submap)


def one_step_displacement(stack: VelocityStack, x, y, t_next: float, dt: float,
                          tableau: Optional[RKTableau] = None) -> Tuple[np.ndarray, np.ndarray]:
    """-dt * sum_j b_j k_j, accumulated apart from x to keep its rounding small"""
    if dt <= 0:
        raise ValueError(f"Time step must be positive, got {dt}")
    tableau = tableau or get_tableau("rk3")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k1: List[np.ndarray] = []
    k2: List[np.ndarray] = []
    for j in range(tableau.stages):
        sx = np.zeros(np.broadcast(x, y).shape)
        sy = np.zeros_like(sx)
        for m in range(j):
            if tableau.a[j, m] != 0.0:
                sx = sx + tableau.a[j, m] * k1[m]
                sy = sy + tableau.a[j, m] * k2[m]
        u1, u2 = stack.extrapolated(t_next - tableau.c[j] * dt).velocity(x - dt * sx, y - dt * sy)
        k1.append(np.broadcast_to(u1, sx.shape))
        k2.append(np.broadcast_to(u2, sx.shape))
    dx = np.zeros(np.broadcast(x, y).shape)
    dy = np.zeros_like(dx)
    for j in range(tableau.stages):
        if tableau.b[j] != 0.0:
            dx = dx + tableau.b[j] * k1[j]
            dy = dy + tableau.b[j] * k2[j]
    return -dt * dx, -dt * dy


def one_step_foot(stack: VelocityStack, x, y, t_next: float, dt: float,
                  tableau: Optional[RKTableau] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Foot points of the backward one-step map from t_next to t_next - dt"""
    dx, dy = one_step_displacement(stack, x, y, t_next, dt, tableau)
    return x + dx, y + dy


def _stencil(grid: PeriodicGrid, eps: float):
    """Stencil points around every node: (offset_x, offset_y) pairs and node arrays"""
    X, Y = grid.nodes()
    pairs = [(0.0, 0.0)]
    pairs += [(o, 0.0) for o in _FD_OFFSETS]
    pairs += [(0.0, o) for o in _FD_OFFSETS]
    pairs += [(ox, oy) for ox in _FD_OFFSETS for oy in _FD_OFFSETS]
    offsets = np.array(pairs) * eps
    px = X[None, :, :] + offsets[:, 0, None, None]
    py = Y[None, :, :] + offsets[:, 1, None, None]
    return px, py


def _jets_from_stencil(values: np.ndarray, eps: float) -> np.ndarray:
    """Node jets (f, f_x, f_y, f_xy) from values on the 25-point stencil"""
    center = values[0]
    along_x = values[1:5]
    along_y = values[5:9]
    corners = values[9:].reshape(4, 4, *values.shape[1:])
    fx = np.tensordot(_FD_COEFFS, along_x, axes=1) / (12.0 * eps)
    fy = np.tensordot(_FD_COEFFS, along_y, axes=1) / (12.0 * eps)
    fxy = np.einsum('a,b,ab...->...', _FD_COEFFS, _FD_COEFFS, corners) / (144.0 * eps * eps)
    return np.stack([center, fx, fy, fxy])


def advance_map(active: HermiteMap, stack: VelocityStack, t_next: float, dt: float,
                tableau: Optional[RKTableau] = None, eps_fd: Optional[float] = None) -> HermiteMap:
    """Evolve-project update chi^{n+1} = H[chi^n o chi_step]"""
    grid = active.grid
    eps = 1e-4 * grid.L if eps_fd is None else eps_fd
    if eps <= 0:
        raise ValueError(f"Jet difference spacing must be positive, got {eps}")

    px, py = _stencil(grid, eps)
    sx, sy = one_step_displacement(stack, px, py, t_next, dt, tableau)
    # d_new(x) = d_step(x) + d_old(x + d_step(x)); the Hermite evaluation wraps its argument
    fx, fy = px + sx, py + sy
    new1 = sx + active.d1.evaluate(fx, fy)
    new2 = sy + active.d2.evaluate(fx, fy)

    d1 = HermiteField(grid, _jets_from_stencil(new1, eps))
    d2 = HermiteField(grid, _jets_from_stencil(new2, eps))
    return HermiteMap(d1, d2, active.tau)


def jacobian_det_error(chi: HermiteMap, sample_points: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> float:
    """max |det(grad chi) - 1| over the sample points (default: map cell centers)"""
    if sample_points is None:
        sample_points = chi.grid.cell_centers()
    x, y = sample_points
    if np.size(x) == 0:
        raise ValueError("jacobian_det_error needs at least one sample point")
    J = chi.jacobian(x, y)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return float(np.max(np.abs(det - 1.0)))


def maybe_remap(stack: MapStack, delta_det: float, t: float,
                sample_points: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> bool:
    """Finalize the active map once its determinant error exceeds delta_det"""
    if not delta_det > 0:
        raise ValueError(f"Remap threshold must be positive, got {delta_det}")
    error = jacobian_det_error(stack.active, sample_points)
    if not error > delta_det:
        return False

    stack.append_submap(SubMap(stack.active, stack.active.tau, t))
    stack.active = HermiteMap.identity(stack.grid, t)
    stack.remap_count += 1
    stack.remap_times.append(t)
    logger.info(f"Remap {stack.remap_count} at t={t:.6g} (det error {error:.3e} > {delta_det:.1e})")
    return True


def global_map_eval(stack: MapStack, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """X_[t,0](x): active map first, then finalized submaps from latest to earliest"""
    gx, gy = stack.active.evaluate(x, y)
    for submap in reversed(stack.finalized):
        gx, gy = submap.map.evaluate(gx, gy)
    return gx, gy


def vorticity_eval(stack: MapStack, omega0, x, y) -> np.ndarray:
    """Pullback omega_0(X(x, t))"""
    return omega0.evaluate(*global_map_eval(stack, x, y))
