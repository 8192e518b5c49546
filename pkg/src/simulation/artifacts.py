from pathlib import Path
from typing import Optional, Tuple
import csv
import logging
import math

import numpy as np
import scipy.signal

from ..diagnostics.spectrum import fit_radius, shell_spectrum, vorticity_spectrum
from ..diagnostics.zoom import Window, zoom_render
from ..models.config import SimConfig
from ..models.records import Spectrum
from ..solvers.biot_savart import SpectralWorkspace
from ..storage.checkpoint import MANIFEST_NAME, load_stack
from ..storage.field_io import ArtifactError, load_field_dump, save_raster
from ..storage.image import write_pgm
from .driver import build_initial_vorticity

logger = logging.getLogger(__name__)

DEFAULT_PIXELS = 512


def is_stack(artifact) -> bool:
    return (Path(artifact) / MANIFEST_NAME).exists()


def _load_stack_solution(artifact):
    stack, _, manifest = load_stack(artifact)
    if not manifest.get("config"):
        raise ArtifactError(f"Stack {artifact} does not record its configuration")
    config = SimConfig(**manifest["config"])
    return stack, build_initial_vorticity(config), config, float(manifest.get("t", 0.0))


def _resample(raster: np.ndarray, n_px: int) -> np.ndarray:
    """Trigonometric interpolation of a periodic node raster onto n_px x n_px nodes"""
    resampled = scipy.signal.resample(raster, n_px, axis=0)
    return scipy.signal.resample(resampled, n_px, axis=1)


def render_artifact(artifact, output, window: Optional[Window] = None, n_px: Optional[int] = None) -> Path:
    """
    Render a saved stack (any window) or a field dump (full domain) to a 16-bit PGM.

    Stacks default to 512 pixels per side, dumps to their own size; a dump
    rendered at another size is resampled through its Fourier interpolant.
    """
    output = Path(output)
    if n_px is not None and n_px < 2:
        raise ValueError(f"Need at least 2 pixels per side, got {n_px}")
    if is_stack(artifact):
        stack, omega0, config, t = _load_stack_solution(artifact)
        L = config.length
        window = window or (0.0, 0.0, L, L)
        raster = zoom_render(stack, omega0, window, n_px or DEFAULT_PIXELS)
        # the raw raster gets its own stem; <output>.json is the image sidecar
        save_raster(raster, output.with_name(f"{output.stem}_raster"), L, t, "vorticity", window=list(window))
        quantity = "vorticity"
    else:
        raster, meta = load_field_dump(artifact)
        L = float(meta.get("L", 2 * math.pi))
        t = float(meta.get("t", 0.0))
        full = (0.0, 0.0, L, L)
        if window is not None and any(not math.isclose(a, b, abs_tol=1e-12) for a, b in zip(window, full)):
            raise ArtifactError("Windowed rendering needs a saved stack; field dumps render whole")
        window = tuple(meta.get("window", full))
        if n_px is not None and n_px != raster.shape[0]:
            logger.info(f"Resampling {raster.shape[0]}^2 dump to {n_px}^2 pixels")
            raster = _resample(raster, n_px)
        quantity = meta.get("quantity", "vorticity")
    return write_pgm(raster, output, {"source": str(artifact), "window": list(window), "t": t,
                                      "quantity": quantity})


def artifact_spectrum(artifact, n_eval: Optional[int] = None) -> Tuple[Spectrum, float]:
    """Shell spectrum of a saved solution and its time"""
    if is_stack(artifact):
        stack, omega0, config, t = _load_stack_solution(artifact)
        n = n_eval or config.n_eval
        workspace = SpectralWorkspace(n, n, config.length)
        return vorticity_spectrum(stack, omega0, n, workspace), t
    raster, meta = load_field_dump(artifact)
    n = raster.shape[0]
    workspace = SpectralWorkspace(n, n, float(meta.get("L", 2 * math.pi)))
    return shell_spectrum(raster.T, workspace), float(meta.get("t", 0.0))


def write_spectrum(spectrum: Spectrum, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(["K", "E"])
        writer.writerows(spectrum.to_rows())
    try:
        delta, alpha, _ = fit_radius(spectrum)
        logger.info(f"Spectrum written to {path}; fitted delta={delta:.6g}, alpha={alpha:.6g}")
    except ValueError as e:
        logger.info(f"Spectrum written to {path}; no analyticity fit ({str(e)})")
    return path
