from typing import Optional, Tuple
import logging

import numpy as np

from ..fields.initial import shell_index
from ..models.grid import PeriodicGrid
from ..models.records import Spectrum
from ..solvers.biot_savart import SpectralWorkspace
from ..solvers.flowmap import MapStack
from .conservation import grid_vorticity

logger = logging.getLogger(__name__)


def shell_spectrum(values: np.ndarray, workspace: SpectralWorkspace) -> Spectrum:
    """Bin 1/2 |w_m|^2 of a sampled field into shells K <= |m| < K+1"""
    n = values.shape[0]
    coeffs = workspace.forward(values)
    m = SpectralWorkspace.modes(n)
    shells = shell_index(m[:, None], m[None, :])
    energy = 0.5 * np.abs(coeffs) ** 2
    E = np.bincount(shells.ravel(), weights=energy.ravel())
    return Spectrum(K=np.arange(E.size), E=E)


def vorticity_spectrum(stack: MapStack, omega0, n_eval: int, workspace: SpectralWorkspace) -> Spectrum:
    grid = PeriodicGrid(n_eval, workspace.L)
    return shell_spectrum(grid_vorticity(stack, omega0, grid), workspace)


def spectral_laplacian(values: np.ndarray, workspace: SpectralWorkspace) -> np.ndarray:
    """Laplacian of a periodic field sampled on its nodes, by Fourier multiplication"""
    n = values.shape[0]
    coeffs = workspace.forward(values)
    k = workspace.wavenumbers(n)
    return workspace.inverse(-(k[:, None] ** 2 + k[None, :] ** 2) * coeffs).real


def laplacian_render(stack: MapStack, omega0, n_eval: int, workspace: SpectralWorkspace) -> np.ndarray:
    """Spectral Laplacian of the vorticity sampled on an n_eval grid"""
    grid = PeriodicGrid(n_eval, workspace.L)
    return spectral_laplacian(grid_vorticity(stack, omega0, grid), workspace)


def default_fit_window(spectrum: Spectrum, floor: float = 1e-25, skip_top: int = 3) -> Tuple[int, int]:
    """Upper half of the shells above the floor, without the last few truncated shells"""
    usable = np.nonzero(spectrum.E > floor)[0]
    usable = usable[usable >= 1]
    if usable.size == 0:
        raise ValueError("insufficient tail")
    top = int(usable.max())
    K_hi = max(1, top - skip_top)
    K_lo = max(1, K_hi // 2)
    return K_lo, K_hi


def fit_radius(spectrum: Spectrum, K_lo: Optional[int] = None, K_hi: Optional[int] = None) -> Tuple[float, float, float]:
    """
    Least-squares fit log E(K) = alpha log K - 2 delta K + c over [K_lo, K_hi].

    Returns (delta, alpha, c).
    """
    if K_lo is None or K_hi is None:
        K_lo, K_hi = default_fit_window(spectrum)
    if not (K_hi > K_lo >= 1):
        raise ValueError(f"Fit window must satisfy K_hi > K_lo >= 1, got [{K_lo}, {K_hi}]")
    K = np.asarray(spectrum.K, dtype=float)
    E = np.asarray(spectrum.E, dtype=float)
    mask = (K >= K_lo) & (K <= K_hi) & (E > 0)
    if np.count_nonzero(mask) < 4:
        raise ValueError("insufficient tail")
    Ks = K[mask]
    A = np.column_stack([np.log(Ks), Ks, np.ones_like(Ks)])
    coef, *_ = np.linalg.lstsq(A, np.log(E[mask]), rcond=None)
    alpha, slope, c = coef
    delta = -slope / 2.0
    logger.debug(f"Fitted delta={delta:.6g}, alpha={alpha:.6g} over K in [{K_lo}, {K_hi}]")
    return float(delta), float(alpha), float(c)
