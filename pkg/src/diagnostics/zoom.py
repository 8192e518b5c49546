from typing import Tuple
import logging

import numpy as np

from ..solvers.flowmap import MapStack
from .conservation import lattice_vorticity

logger = logging.getLogger(__name__)

Window = Tuple[float, float, float, float]


def window_lattice(window: Window, n_px: int) -> Tuple[np.ndarray, np.ndarray]:
    """Half-open uniform lattice x0 + i (x1 - x0) / n_px over the window"""
    x0, y0, x1, y1 = window
    if n_px < 2:
        raise ValueError(f"Raster needs at least 2 pixels per side, got {n_px}")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"Degenerate zoom window {window}")
    i = np.arange(n_px)
    return x0 + i * ((x1 - x0) / n_px), y0 + i * ((y1 - y0) / n_px)


def zoom_render(stack: MapStack, omega0, window: Window, n_px: int) -> np.ndarray:
    """Vorticity raster over a window; row 0 is the smallest y"""
    xs, ys = window_lattice(window, n_px)
    logger.debug(f"Rendering window {window} at {n_px}^2")
    return lattice_vorticity(stack, omega0, xs, ys).T


def centered_window(center: Tuple[float, float], width: float) -> Window:
    cx, cy = center
    half = width / 2
    return cx - half, cy - half, cx + half, cy + half
