from pathlib import Path
from typing import Any, Dict, Optional, Tuple
import json
import logging

from ..solvers.biot_savart import VelocityField, VelocityStack
from ..solvers.flowmap import HermiteMap, MapStack, SubMap
from .field_io import ArtifactError, PathLike, load_hermite_field, save_hermite_field

logger = logging.getLogger(__name__)

MANIFEST_NAME = "stack.json"


def _save_map(chi: HermiteMap, directory: Path, stem: str) -> str:
    save_hermite_field(chi.d1, directory / f"{stem}_d1")
    save_hermite_field(chi.d2, directory / f"{stem}_d2")
    return stem


def _load_map(directory: Path, stem: str, tau: float) -> HermiteMap:
    return HermiteMap(load_hermite_field(directory / f"{stem}_d1"),
                      load_hermite_field(directory / f"{stem}_d2"), tau)


def save_stack(stack: MapStack, directory: PathLike, velocities: Optional[VelocityStack] = None,
               t: float = 0.0, step: int = 0, config: Optional[Dict[str, Any]] = None,
               **extra: Any) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    submaps = []
    for i, submap in enumerate(stack.finalized):
        stem = _save_map(submap.map, directory, f"submap_{i:04d}")
        submaps.append({"start": submap.start, "end": submap.end, "stem": stem})

    stored = []
    if velocities is not None:
        for i, field in enumerate(velocities.fields):
            stem = f"velocity_{i}"
            save_hermite_field(field.psi, directory / stem)
            stored.append({"t": field.t, "epsilon": field.epsilon, "stem": stem})

    manifest = {
        "L": stack.grid.L,
        "n_map": stack.grid.n,
        "t": t,
        "step": step,
        "remap_count": stack.remap_count,
        "remap_times": stack.remap_times,
        "submaps": submaps,
        "active": {"start": stack.active.tau, "stem": _save_map(stack.active, directory, "active")},
        "lagrange_order": velocities.order if velocities is not None else None,
        "velocities": stored,
        "config": config,
    }
    manifest.update(extra)
    path = directory / MANIFEST_NAME
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=2)
    logger.info(f"Saved stack with {len(submaps)} submaps to {directory}")
    return path


def read_stack_manifest(directory: PathLike) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Cannot read stack manifest {path}: {str(e)}")
        raise ArtifactError(f"Missing or corrupt stack manifest {path}") from e


def load_stack(directory: PathLike) -> Tuple[MapStack, Optional[VelocityStack], Dict[str, Any]]:
    directory = Path(directory)
    manifest = read_stack_manifest(directory)
    try:
        active = _load_map(directory, manifest["active"]["stem"], float(manifest["active"]["start"]))
        stack = MapStack(active=active, remap_count=int(manifest["remap_count"]),
                         remap_times=[float(t) for t in manifest.get("remap_times", [])])
        for entry in manifest["submaps"]:
            chi = _load_map(directory, entry["stem"], float(entry["start"]))
            stack.append_submap(SubMap(chi, float(entry["start"]), float(entry["end"])))

        velocities = None
        if manifest.get("lagrange_order"):
            velocities = VelocityStack(int(manifest["lagrange_order"]))
            for entry in manifest["velocities"]:
                psi = load_hermite_field(directory / entry["stem"])
                velocities.push(VelocityField(psi, float(entry["t"]), float(entry["epsilon"])))
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Corrupt stack manifest in {directory}: {str(e)}") from e
    return stack, velocities, manifest
