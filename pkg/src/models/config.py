from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union
import logging
import math
import os

import yaml
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..solvers.tableaus import TABLEAUS

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().parents[2] / "config" / "simulations.yaml"

DEFAULT_LENGTHS = {
    "four_modes": 2 * math.pi,
    "random_shells": 2 * math.pi,
    "gaussian_pair": 1.0,
    "zero": 2 * math.pi,
}


class SimConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', validate_assignment=True)

    ic: Literal["four_modes", "random_shells", "gaussian_pair", "zero"] = "four_modes"
    seed: int = 0
    k_max: int = 32
    ic_samples: int = 512
    variance: float = 0.07
    separation: float = 0.3
    L: Optional[float] = None

    n_map: int = 128
    n_sample: int = 512
    n_psi: int = 512
    n_eval: int = 512

    dt: float = 1 / 32
    t_end: float = 1.0
    delta_det: float = 1e-4
    lagrange_order: int = 3
    rk: str = "rk3"
    epsilon: Optional[float] = None
    subsamples: int = 2
    eps_fd: Optional[float] = None
    startup_substeps: int = 16
    error_norm: Literal["mean", "integral"] = "mean"

    output_interval: Optional[float] = None
    output_dir: str = "runs/latest"
    save_fields: bool = True
    save_stack: bool = False
    spectrum_output: bool = False
    save_laplacian: bool = False

    @field_validator('dt', 't_end', 'delta_det', 'epsilon', 'eps_fd', 'output_interval',
                     'variance', 'separation', 'L', mode='before')
    @classmethod
    def _parse_fraction(cls, value: Any) -> Any:
        if isinstance(value, str) and '/' in value:
            try:
                return float(Fraction(value.strip()))
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"Cannot parse fraction {value!r}") from e
        return value

    @field_validator('n_map', 'n_sample', 'n_psi', 'n_eval', 'ic_samples')
    @classmethod
    def _grid_size(cls, value: int) -> int:
        if value < 4:
            raise ValueError(f"grid sizes must be at least 4, got {value}")
        return value

    @field_validator('rk')
    @classmethod
    def _known_tableau(cls, value: str) -> str:
        if value not in TABLEAUS:
            raise ValueError(f"unknown tableau {value!r}; choose from {sorted(TABLEAUS)}")
        return value

    @model_validator(mode='after')
    def _check_invariants(self) -> 'SimConfig':
        if self.n_psi < self.n_sample:
            raise ValueError(f"n_psi ({self.n_psi}) must be >= n_sample ({self.n_sample})")
        if self.n_eval < self.n_map:
            raise ValueError(f"n_eval ({self.n_eval}) must be >= n_map ({self.n_map})")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if not self.delta_det > 0:
            raise ValueError(f"delta_det must be positive, got {self.delta_det}")
        if self.lagrange_order not in (1, 2, 3, 4):
            raise ValueError(f"lagrange_order must be 1..4, got {self.lagrange_order}")
        if self.subsamples < 1:
            raise ValueError(f"subsamples must be positive, got {self.subsamples}")
        if self.startup_substeps < 1:
            raise ValueError(f"startup_substeps must be positive, got {self.startup_substeps}")
        if self.epsilon is not None and not 0 <= self.epsilon <= self.length / 4:
            raise ValueError(f"epsilon must lie in [0, L/4], got {self.epsilon}")
        if self.eps_fd is not None and not self.eps_fd > 0:
            raise ValueError(f"eps_fd must be positive, got {self.eps_fd}")
        if self.output_interval is not None and not self.output_interval > 0:
            raise ValueError(f"output_interval must be positive, got {self.output_interval}")
        return self

    @property
    def length(self) -> float:
        return self.L if self.L is not None else DEFAULT_LENGTHS[self.ic]

    @property
    def mollifier_width(self) -> float:
        """epsilon, defaulting to the sampling grid spacing"""
        return self.length / self.n_sample if self.epsilon is None else self.epsilon

    @property
    def jet_spacing(self) -> float:
        return 1e-4 * self.length if self.eps_fd is None else self.eps_fd

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def output_every(self) -> int:
        """Snapshot cadence in whole steps, nearest to the requested interval"""
        if self.output_interval is None:
            return max(1, self.n_steps)
        return max(1, int(round(self.output_interval / self.dt)))

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump()
        data["L"] = self.length
        return data


def load_presets(path: Union[str, Path] = PRESETS_PATH) -> Dict[str, Dict[str, Any]]:
    """Load named run presets from YAML"""
    with open(path, 'r') as f:
        data = yaml.safe_load(f) or {}
    return data.get('presets', {})


def build_config(values: Dict[str, Any], presets_path: Union[str, Path] = PRESETS_PATH) -> SimConfig:
    """Merge a preset (if named) with explicit values and validate"""
    values = {k: v for k, v in values.items() if v is not None and v != ''}
    preset_name = values.pop('preset', None)
    merged: Dict[str, Any] = {}
    if preset_name:
        presets = load_presets(presets_path)
        if preset_name not in presets:
            raise ValueError(f"Preset {preset_name} not found in configuration")
        merged.update(presets[preset_name])
    merged.update(values)
    try:
        return SimConfig(**merged)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        raise ValueError(f"Invalid configuration: {e}") from e


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> SimConfig:
    """Read a key=value run configuration file"""
    if not os.path.exists(path):
        raise ValueError(f"Config file {path} does not exist")
    values: Dict[str, Any] = dict(dotenv_values(path, interpolate=False))
    values.update(overrides or {})
    logger.info(f"Loaded {len(values)} config keys from {path}")
    return build_config(values)
