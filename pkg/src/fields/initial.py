from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple
import logging
import math

import numpy as np
import scipy.fft
import scipy.optimize

from ..interp.hermite import HermiteField
from ..models.grid import PeriodicGrid

logger = logging.getLogger(__name__)

JetFunction = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]

PRNG_ALGORITHM = "PCG64"


@dataclass(frozen=True, eq=False)
class InitialVorticity:
    """Closed-form or Hermite-sampled omega_0 on a torus of width L"""
    kind: str
    L: float
    name: str = ""
    jets: Optional[JetFunction] = None
    backing: Optional[HermiteField] = None
    value_range: Optional[Tuple[float, float]] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "closed_form" and self.jets is None:
            raise ValueError("Closed-form vorticity needs a jet function")
        if self.kind == "hermite_sampled" and self.backing is None:
            raise ValueError("Sampled vorticity needs a backing Hermite field")
        if self.kind not in ("closed_form", "hermite_sampled"):
            raise ValueError(f"Unknown vorticity kind {self.kind!r}")

    def evaluate(self, x, y) -> np.ndarray:
        if self.kind == "hermite_sampled":
            return self.backing.evaluate(x, y)
        x = np.mod(np.asarray(x, dtype=float), self.L)
        y = np.mod(np.asarray(y, dtype=float), self.L)
        return np.asarray(self.jets(x, y)[0], dtype=float) + np.zeros(np.broadcast(x, y).shape)

    def evaluate_jet(self, x, y) -> np.ndarray:
        if self.kind == "hermite_sampled":
            return self.backing.evaluate_jet(x, y)
        x, y = np.broadcast_arrays(np.mod(np.asarray(x, dtype=float), self.L),
                                   np.mod(np.asarray(y, dtype=float), self.L))
        return np.stack([np.broadcast_to(p, x.shape) for p in self.jets(x, y)])

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluate(x, y)

    def mean(self, n: int = 512) -> float:
        X, Y = PeriodicGrid(n, self.L).nodes()
        return float(np.mean(self.evaluate(X, Y)))


def closed_form(jets: JetFunction, L: float, name: str = "closed_form",
                value_range: Optional[Tuple[float, float]] = None) -> InitialVorticity:
    return InitialVorticity(kind="closed_form", L=L, name=name, jets=jets, value_range=value_range)


def constant_zero(L: float = 2 * math.pi) -> InitialVorticity:
    """omega_0 = 0, used to check that nothing moves"""
    def jets(x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        return zero, zero, zero, zero
    return closed_form(jets, L, name="zero", value_range=(0.0, 0.0))


def _four_modes_jets(x, y):
    value = np.cos(x) + np.cos(y) + 0.6 * np.cos(2 * x) + 0.2 * np.cos(3 * x)
    dx = -np.sin(x) - 1.2 * np.sin(2 * x) - 0.6 * np.sin(3 * x)
    dy = -np.sin(y) + np.zeros_like(x)
    return value, dx, dy, np.zeros(np.broadcast(x, y).shape)


def _four_modes_minimum() -> float:
    # cos(y) reaches -1 independently; minimise the x-profile numerically
    def profile(x):
        return np.cos(x) + 0.6 * np.cos(2 * x) + 0.2 * np.cos(3 * x)

    xs = np.linspace(0.0, 2 * math.pi, 20001)
    guess = xs[np.argmin(profile(xs))]
    step = xs[1] - xs[0]
    result = scipy.optimize.minimize_scalar(profile, bounds=(guess - step, guess + step),
                                            method='bounded', options={'xatol': 1e-12})
    return float(min(result.fun, profile(guess))) - 1.0


def four_modes() -> InitialVorticity:
    """omega_0 = cos x + cos y + 0.6 cos 2x + 0.2 cos 3x on [0, 2 pi)^2"""
    return closed_form(_four_modes_jets, 2 * math.pi, name="four_modes",
                       value_range=(_four_modes_minimum(), 2.8))


def shell_total(K: int) -> float:
    """Prescribed total modulus 2 K^{7/2} exp(-K^2/4) of shell K"""
    return 2.0 * K ** 3.5 * math.exp(-K * K / 4.0)


def shell_index(mx: np.ndarray, my: np.ndarray) -> np.ndarray:
    """Shell K with K <= |m| < K + 1 for integer mode indices"""
    return np.floor(np.sqrt(mx.astype(float) ** 2 + my.astype(float) ** 2) + 1e-12).astype(np.int64)


def random_shell_coefficients(seed: int, K_max: int = 32, n: int = 512) -> np.ndarray:
    """
    Hermitian Fourier coefficients (FFT layout on an n x n grid) with
    random phases and shell moduli 2 K^{7/2} exp(-K^2/4) / N(K).
    """
    if K_max < 1:
        raise ValueError(f"K_max must be at least 1, got {K_max}")
    if n < 2 * (K_max + 2):
        raise ValueError(f"Sampling grid {n} too coarse for {K_max} shells")
    rng = np.random.Generator(np.random.PCG64(seed))

    span = np.arange(-(K_max + 1), K_max + 2)
    MX, MY = np.meshgrid(span, span, indexing='ij')
    shells = shell_index(MX, MY)
    inside = (shells >= 1) & (shells <= K_max)
    counts = np.bincount(shells[inside], minlength=K_max + 1)

    coeffs = np.zeros((n, n), dtype=complex)
    # one phase per +/- pair, drawn in a fixed lexicographic order
    canonical = inside & ((MX > 0) | ((MX == 0) & (MY > 0)))
    mx = MX[canonical]
    my = MY[canonical]
    order = np.lexsort((my, mx))
    mx, my = mx[order], my[order]
    phases = rng.uniform(0.0, 2 * math.pi, size=mx.size)
    K = shell_index(mx, my)
    moduli = np.array([shell_total(k) / counts[k] for k in K])
    values = moduli * np.exp(1j * phases)
    coeffs[np.mod(mx, n), np.mod(my, n)] = values
    coeffs[np.mod(-mx, n), np.mod(-my, n)] = np.conj(values)
    return coeffs


def spectral_jets(coeffs: np.ndarray, L: float) -> np.ndarray:
    """Values and derivative planes of a Fourier series sampled on its grid"""
    n = coeffs.shape[0]
    k = 2 * math.pi * np.rint(scipy.fft.fftfreq(n, 1.0 / n)) / L
    if n % 2 == 0:
        k[n // 2] = 0.0
    ikx = 1j * k[:, None]
    iky = 1j * k[None, :]
    planes = [scipy.fft.ifft2(c, norm="forward") for c in (coeffs, ikx * coeffs, iky * coeffs, ikx * iky * coeffs)]
    residue = max(float(np.max(np.abs(p.imag))) for p in planes)
    if residue > 1e-10:
        logger.warning(f"Fourier series has imaginary residue {residue:.3e}")
    return np.stack([p.real for p in planes])


def random_shells(seed: int, K_max: int = 32, n_sample: int = 512, L: float = 2 * math.pi) -> InitialVorticity:
    """Random-phase shell spectrum sampled into a Hermite field"""
    logger.info(f"Generating random shell vorticity (seed={seed}, K_max={K_max}, n={n_sample})")
    coeffs = random_shell_coefficients(seed, K_max, n_sample)
    grid = PeriodicGrid(n_sample, L)
    backing = HermiteField(grid, spectral_jets(coeffs, L))
    return InitialVorticity(kind="hermite_sampled", L=L, name="random_shells", backing=backing,
                            metadata={"seed": seed, "K_max": K_max, "n_sample": n_sample,
                                      "prng": PRNG_ALGORITHM})


def _periodized_gaussians(centers, sigma2: float, L: float):
    images = (-L, 0.0, L)

    def jets(x, y):
        value = np.zeros(np.broadcast(x, y).shape)
        dx = np.zeros_like(value)
        dy = np.zeros_like(value)
        dxy = np.zeros_like(value)
        for cx, cy in centers:
            for ox in images:
                for oy in images:
                    rx = x - cx - ox
                    ry = y - cy - oy
                    g = np.exp(-(rx * rx + ry * ry) / (2 * sigma2))
                    value += g
                    dx += -rx / sigma2 * g
                    dy += -ry / sigma2 * g
                    dxy += rx * ry / (sigma2 * sigma2) * g
        return value, dx, dy, dxy
    return jets


def _closed_form_range(jets: JetFunction, L: float, n: int = 256) -> Tuple[float, float]:
    """Extrema of a smooth periodic field: dense sampling polished by local optimisation"""
    X, Y = PeriodicGrid(n, L).nodes()
    values = jets(X, Y)[0]
    found = []
    for sign in (1.0, -1.0):
        idx = np.unravel_index(np.argmin(sign * values), values.shape)
        start = np.array([X[idx], Y[idx]])

        def objective(p):
            v, dx, dy, _ = jets(np.array(p[0]), np.array(p[1]))
            return float(sign * v), np.array([sign * float(dx), sign * float(dy)])

        result = scipy.optimize.minimize(objective, start, jac=True, method='BFGS', options={'gtol': 1e-13})
        found.append(sign * min(result.fun, sign * values[idx]))
    return float(found[0]), float(found[1])


def gaussian_pair(variance: float = 0.07, separation: float = 0.3, L: float = 1.0,
                  n_mean: int = 512) -> InitialVorticity:
    """
    Two unit Gaussians exp(-r^2 / (2 variance)) at (L/2 +- separation/2, L/2),
    periodized over the 3x3 nearest images and shifted to zero mean on an
    n_mean^2 grid.
    """
    half = separation / 2
    centers = [(L / 2 - half, L / 2), (L / 2 + half, L / 2)]
    raw = _periodized_gaussians(centers, variance, L)
    X, Y = PeriodicGrid(n_mean, L).nodes()
    offset = float(np.mean(raw(X, Y)[0]))

    def jets(x, y):
        value, dx, dy, dxy = raw(x, y)
        return value - offset, dx, dy, dxy

    low, high = _closed_form_range(jets, L)
    vorticity = closed_form(jets, L, name="gaussian_pair", value_range=(low, high))
    vorticity.metadata.update({"variance": variance, "separation": separation, "mean_offset": offset})
    return vorticity
