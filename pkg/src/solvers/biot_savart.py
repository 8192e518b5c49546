from collections import deque
from dataclasses import dataclass
from typing import Deque, List, Optional, Tuple, TYPE_CHECKING
import logging
import math
import os

import numpy as np
import scipy.fft
import scipy.sparse

from ..interp.hermite import HermiteField, combine
from ..models.grid import PeriodicGrid

if TYPE_CHECKING:
    from ..fields.initial import InitialVorticity
    from .flowmap import MapStack

logger = logging.getLogger(__name__)


def default_workers() -> int:
    """Thread count for transforms, taken from CHARMAP_THREADS"""
    try:
        return max(1, int(os.getenv("CHARMAP_THREADS", "1")))
    except ValueError:
        logger.warning(f"Ignoring invalid CHARMAP_THREADS={os.getenv('CHARMAP_THREADS')!r}")
        return 1


class SpectralWorkspace:
    """Transforms and wavenumber tables for the sampling and stream grids"""

    def __init__(self, n_s: int, n_psi: int, L: float = 2 * math.pi, workers: Optional[int] = None):
        if n_psi < n_s:
            raise ValueError(f"Stream grid ({n_psi}) must be at least as fine as the sampling grid ({n_s})")
        self.sample_grid = PeriodicGrid(n_s, L)
        self.psi_grid = PeriodicGrid(n_psi, L)
        self.L = L
        self.workers = workers or default_workers()
        self._wavenumbers = {}

    @property
    def n_s(self) -> int:
        return self.sample_grid.n

    @property
    def n_psi(self) -> int:
        return self.psi_grid.n

    @staticmethod
    def modes(n: int) -> np.ndarray:
        """Integer mode indices in FFT order, m in [-n/2, n/2)"""
        return np.rint(scipy.fft.fftfreq(n, 1.0 / n)).astype(np.int64)

    def wavenumbers(self, n: int) -> np.ndarray:
        if n not in self._wavenumbers:
            self._wavenumbers[n] = 2 * math.pi * self.modes(n) / self.L
        return self._wavenumbers[n]

    def derivative_wavenumbers(self, n: int) -> np.ndarray:
        """Wavenumbers with the Nyquist entry zeroed, for first derivatives"""
        k = self.wavenumbers(n).copy()
        if n % 2 == 0:
            k[n // 2] = 0.0
        return k

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Fourier-series coefficients (1/n^2) sum f e^{-ik.x}"""
        return scipy.fft.fft2(values, norm="forward", workers=self.workers)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.ifft2(coeffs, norm="forward", workers=self.workers)


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Velocity u = (d_y psi, -d_x psi) of a Hermite stream function"""
    psi: HermiteField
    t: float
    epsilon: float = 0.0

    def velocity(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        return self.psi.evaluate(x, y, (0, 1)), -self.psi.evaluate(x, y, (1, 0))

    def divergence(self, x, y) -> np.ndarray:
        # d_x(d_y psi) + d_y(-d_x psi): both terms are the mixed partial of one interpolant
        return self.psi.evaluate(x, y, (1, 1)) - self.psi.evaluate(x, y, (1, 1))


class VelocityStack:
    """The most recent velocities, kept for Lagrange extension in time"""

    def __init__(self, order: int = 3):
        if order < 1:
            raise ValueError(f"Lagrange order must be at least 1, got {order}")
        self.order = order
        self.fields: Deque[VelocityField] = deque(maxlen=order)

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def times(self) -> List[float]:
        return [f.t for f in self.fields]

    @property
    def latest(self) -> VelocityField:
        if not self.fields:
            raise ValueError("velocity stack is empty")
        return self.fields[-1]

    def push(self, field: VelocityField) -> None:
        if self.fields and field.t <= self.fields[-1].t:
            raise ValueError(f"Velocity timestamps must increase: {field.t} after {self.fields[-1].t}")
        self.fields.append(field)

    def lagrange_weights(self, t: float) -> np.ndarray:
        if not self.fields:
            raise ValueError("velocity stack is empty")
        times = self.times
        weights = np.ones(len(times))
        for i, ti in enumerate(times):
            for j, tj in enumerate(times):
                if i != j:
                    weights[i] *= (t - tj) / (ti - tj)
        return weights

    def extrapolated(self, t: float) -> VelocityField:
        """Velocity at time t as one Hermite field (linear in the stored stream functions)"""
        weights = self.lagrange_weights(t)
        if len(self.fields) == 1:
            return VelocityField(self.fields[0].psi, t, self.fields[0].epsilon)
        psi = combine(weights, [f.psi for f in self.fields])
        return VelocityField(psi, t, self.fields[-1].epsilon)


def velocity_at(stack: VelocityStack, x, y, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Lagrange-in-time extension of the stored velocities evaluated at (x, y)"""
    return stack.extrapolated(t).velocity(x, y)


def mollifier_weights(epsilon: float, h_fine: float, subsamples: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Discrete 1D hat filter from fine midpoints to one sampling node.

    Returns fine-lattice offsets q (fine point j = i*m + q, located at
    (q + 1/2) h_fine from node i) and their weights. Weights are normalized per
    residue class q mod m so that every fine sample distributes a total weight
    of 1/m over the sampling lattice; rows then sum to one and the filtered
    mean equals the mean of the fine samples.
    """
    m = subsamples
    reach = int(math.ceil(epsilon / h_fine)) + 1
    offsets = np.arange(-reach - 1, reach + 1)
    distance = (offsets + 0.5) * h_fine
    hat = np.maximum(0.0, 1.0 - np.abs(distance) / epsilon)
    weights = np.zeros_like(hat)
    for r in range(m):
        members = np.mod(offsets, m) == r
        total = hat[members].sum()
        if total <= 0.0:
            raise ValueError(f"mollifier width {epsilon} is below the quadrature spacing; increase subsamples")
        weights[members] = hat[members] / (m * total)
    keep = weights > 0
    return offsets[keep], weights[keep]


def _filter_matrix(n_s: int, subsamples: int, offsets: np.ndarray, weights: np.ndarray):
    n_fine = n_s * subsamples
    rows = np.repeat(np.arange(n_s), offsets.size)
    cols = np.mod(np.arange(n_s)[:, None] * subsamples + offsets[None, :], n_fine).ravel()
    data = np.tile(weights, n_s)
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(n_s, n_fine))


def sample_vorticity(map_stack: 'MapStack', omega0: 'InitialVorticity', grid: PeriodicGrid,
                     epsilon: float = 0.0, subsamples: int = 2) -> np.ndarray:
    """Mollified pullback vorticity omega_0 o chi on the sampling grid"""
    if epsilon < 0:
        raise ValueError(f"Mollifier width must be non-negative, got {epsilon}")
    if epsilon > grid.L / 4:
        raise ValueError("mollifier too wide")

    if epsilon == 0:
        X, Y = grid.nodes()
        return omega0.evaluate(*map_stack.evaluate(X, Y))

    h_fine = grid.dx / subsamples
    fine = (np.arange(grid.n * subsamples) + 0.5) * h_fine
    XF, YF = np.meshgrid(fine, fine, indexing='ij')
    values = omega0.evaluate(*map_stack.evaluate(XF, YF))

    offsets, weights = mollifier_weights(epsilon, h_fine, subsamples)
    W = _filter_matrix(grid.n, subsamples, offsets, weights)
    partial = W @ values
    return np.asarray((W @ partial.T).T)


def solve_stream(omega: np.ndarray, workspace: SpectralWorkspace) -> np.ndarray:
    """Spectral coefficients of psi with -Laplacian(psi) = omega - mean(omega)"""
    n = omega.shape[0]
    omega_hat = workspace.forward(omega)
    k = workspace.wavenumbers(n)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    k2[0, 0] = 1.0
    psi_hat = omega_hat / k2
    psi_hat[0, 0] = 0.0
    return psi_hat


def zero_pad(coeffs: np.ndarray, n_big: int) -> np.ndarray:
    """Embed Fourier coefficients into a larger grid, dropping the Nyquist modes"""
    n = coeffs.shape[0]
    if n_big == n:
        return coeffs.copy()
    if n_big < n:
        raise ValueError(f"Cannot pad {n} modes down to {n_big}")
    m = SpectralWorkspace.modes(n)
    keep = m != -(n // 2) if n % 2 == 0 else np.ones(n, dtype=bool)
    idx = np.mod(m[keep], n_big)
    padded = np.zeros((n_big, n_big), dtype=complex)
    padded[np.ix_(idx, idx)] = coeffs[np.ix_(keep, keep)]
    return padded


def build_velocity(psi_hat: np.ndarray, n_psi: int, t: float, workspace: SpectralWorkspace,
                   epsilon: float = 0.0) -> VelocityField:
    """Assemble the Hermite stream function on the n_psi grid from spectral jets"""
    if n_psi < psi_hat.shape[0]:
        raise ValueError(f"Stream grid ({n_psi}) must be at least the sampling grid ({psi_hat.shape[0]})")
    coeffs = zero_pad(psi_hat, n_psi)
    k = workspace.derivative_wavenumbers(n_psi)
    ikx = 1j * k[:, None]
    iky = 1j * k[None, :]
    planes = [
        workspace.inverse(coeffs).real,
        workspace.inverse(ikx * coeffs).real,
        workspace.inverse(iky * coeffs).real,
        workspace.inverse(ikx * iky * coeffs).real,
    ]
    grid = PeriodicGrid(n_psi, workspace.L)
    return VelocityField(HermiteField(grid, np.stack(planes)), t, epsilon)
