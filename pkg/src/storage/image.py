from pathlib import Path
from typing import Any, Dict, Tuple
import json
import logging

import numpy as np
from PIL import Image

from .field_io import PathLike

logger = logging.getLogger(__name__)

MAXVAL = 65535


def to_gray16(raster: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Affine map of [min, max] onto [0, 65535]; a collapsed range maps to 0"""
    raster = np.asarray(raster, dtype=float)
    low, high = float(np.min(raster)), float(np.max(raster))
    if not high > low:
        return np.zeros(raster.shape, dtype=np.int32), low, high
    scaled = np.rint((raster - low) / (high - low) * MAXVAL)
    return np.clip(scaled, 0, MAXVAL).astype(np.int32), low, high


def write_pgm(raster: np.ndarray, path: PathLike, metadata: Dict[str, Any]) -> Path:
    """Binary 16-bit PGM (P5, maxval 65535) plus a JSON sidecar with the value range"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels, low, high = to_gray16(raster)
    # image rows run top to bottom, raster rows bottom to top
    Image.fromarray(np.flipud(pixels), mode='I').save(path, format='PPM')

    sidecar = dict(metadata)
    sidecar.update({"min": low, "max": high, "maxval": MAXVAL, "shape": list(pixels.shape)})
    with open(path.with_suffix('.json'), 'w') as f:
        json.dump(sidecar, f, indent=2)
    logger.info(f"Wrote {path} (range [{low:.6g}, {high:.6g}])")
    return path
