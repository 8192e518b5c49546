from pathlib import Path
from typing import Any, Dict, Tuple, Union
import json
import logging

import numpy as np

from ..interp.hermite import PLANES, HermiteField
from ..models.grid import PeriodicGrid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
DTYPE = np.dtype('<f8')


class ArtifactError(Exception):
    """Raised when a saved artifact is missing or corrupt"""
    pass


def _paths(stem: PathLike) -> Tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix in ('.bin', '.json'):
        stem = stem.with_suffix('')
    return stem.with_suffix('.bin'), stem.with_suffix('.json')


def read_sidecar(stem: PathLike) -> Dict[str, Any]:
    _, meta_path = _paths(stem)
    try:
        with open(meta_path, 'r') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Cannot read sidecar {meta_path}: {str(e)}")
        raise ArtifactError(f"Missing or corrupt sidecar {meta_path}") from e


def _read_array(bin_path: Path, count: int) -> np.ndarray:
    try:
        data = np.fromfile(bin_path, dtype=DTYPE)
    except OSError as e:
        logger.error(f"Cannot read {bin_path}: {str(e)}")
        raise ArtifactError(f"Missing data file {bin_path}") from e
    if data.size != count:
        raise ArtifactError(f"{bin_path} holds {data.size} values, expected {count}")
    return data


def save_hermite_field(field: HermiteField, stem: PathLike) -> Path:
    bin_path, meta_path = _paths(stem)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(field.jets.transpose(0, 2, 1), dtype=DTYPE).tofile(bin_path)
    with open(meta_path, 'w') as f:
        json.dump({"n": field.grid.n, "L": field.grid.L, "planes": list(PLANES)}, f, indent=2)
    return bin_path


def load_hermite_field(stem: PathLike) -> HermiteField:
    bin_path, _ = _paths(stem)
    meta = read_sidecar(stem)
    try:
        n, L = int(meta["n"]), float(meta["L"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Sidecar for {bin_path} lacks n/L") from e
    if meta.get("planes") != list(PLANES):
        raise ArtifactError(f"Unexpected jet planes {meta.get('planes')} in {bin_path}")
    jets = _read_array(bin_path, 4 * n * n).reshape(4, n, n).transpose(0, 2, 1)
    return HermiteField(PeriodicGrid(n, L), jets)


def save_field_dump(values: np.ndarray, stem: PathLike, L: float, t: float, quantity: str,
                    **extra: Any) -> Path:
    """Write an [ix, iy] array as a y-major raw dump with its sidecar"""
    bin_path, meta_path = _paths(stem)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(np.asarray(values).T, dtype=DTYPE).tofile(bin_path)
    meta = {"n": int(values.shape[0]), "L": L, "t": t, "quantity": quantity}
    meta.update(extra)
    with open(meta_path, 'w') as f:
        json.dump(meta, f, indent=2)
    return bin_path


def save_raster(raster: np.ndarray, stem: PathLike, L: float, t: float, quantity: str, **extra: Any) -> Path:
    """Write a raster that is already row-major in y"""
    return save_field_dump(np.asarray(raster).T, stem, L, t, quantity, **extra)


def load_field_dump(stem: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Returns the dump as a raster (row 0 = smallest y) and its sidecar"""
    bin_path, _ = _paths(stem)
    meta = read_sidecar(stem)
    try:
        n = int(meta["n"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Sidecar for {bin_path} lacks n") from e
    return _read_array(bin_path, n * n).reshape(n, n), meta
