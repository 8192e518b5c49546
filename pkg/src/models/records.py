from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional
from datetime import datetime

import numpy as np

DIAGNOSTICS_HEADER = ["t", "enstrophy", "energy", "enstrophy_error", "energy_error", "det_error", "remap_count"]


@dataclass
class DiagnosticsRecord:
    t: float
    enstrophy: float
    energy: float
    enstrophy_error: float = 0.0
    energy_error: float = 0.0
    det_error: float = 0.0
    remap_count: int = 0

    def to_row(self) -> List[str]:
        return [repr(float(self.t)), repr(float(self.enstrophy)), repr(float(self.energy)),
                repr(float(self.enstrophy_error)), repr(float(self.energy_error)),
                repr(float(self.det_error)), str(int(self.remap_count))]

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class Spectrum:
    """Shell enstrophy E(K) = 1/2 sum_{K <= |m| < K+1} |w_m|^2"""
    K: np.ndarray
    E: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.E))

    def to_rows(self) -> List[List[str]]:
        return [[str(int(k)), repr(float(e))] for k, e in zip(self.K, self.E)]


@dataclass
class OutputEntry:
    path: str
    kind: str
    step: int
    t: float


@dataclass
class RunManifest:
    """Everything needed to identify and reproduce a run"""
    config: Dict
    version: str
    started_at: str = field(default_factory=lambda: datetime.now().isoformat())
    wall_time: float = 0.0
    steps: int = 0
    final_time: float = 0.0
    remap_times: List[float] = field(default_factory=list)
    outputs: List[OutputEntry] = field(default_factory=list)
    analyticity: List[Dict[str, float]] = field(default_factory=list)
    status: str = "running"
    error: Optional[str] = None

    def add_output(self, path: str, kind: str, step: int, t: float) -> None:
        self.outputs = [o for o in self.outputs if o.path != path]
        self.outputs.append(OutputEntry(path=path, kind=kind, step=step, t=t))

    @classmethod
    def from_dict(cls, data: Dict) -> 'RunManifest':
        """Rebuild a manifest written by to_dict, e.g. to continue a resumed run"""
        return cls(
            config=data.get("config", {}),
            version=data.get("version", ""),
            started_at=data.get("started_at", datetime.now().isoformat()),
            wall_time=float(data.get("wall_time", 0.0)),
            steps=int(data.get("steps", 0)),
            final_time=float(data.get("final_time", 0.0)),
            remap_times=list(data.get("remap_times", [])),
            outputs=[OutputEntry(**o) for o in data.get("outputs", [])],
            analyticity=list(data.get("analyticity", [])),
            status=data.get("status", "running"),
            error=data.get("error"),
        )

    def to_dict(self) -> Dict:
        """Convert manifest to dictionary format for JSON serialization"""
        return {
            "config": self.config,
            "version": self.version,
            "started_at": self.started_at,
            "wall_time": self.wall_time,
            "steps": self.steps,
            "final_time": self.final_time,
            "remap_count": len(self.remap_times),
            "remap_times": self.remap_times,
            "outputs": [asdict(o) for o in self.outputs],
            "analyticity": self.analyticity,
            "status": self.status,
            "error": self.error,
        }
