from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional
import logging
import math

import numpy as np

from ..models.config import SimConfig
from ..models.grid import PeriodicGrid
from ..simulation.driver import Simulation, build_initial_vorticity

logger = logging.getLogger(__name__)

MODES = ("dt", "dx")
QUANTITIES = ("map_error", "vorticity_error", "enstrophy_error", "energy_error")


@dataclass
class ConvergenceLevel:
    level: int
    resolution: float
    map_error: float
    vorticity_error: float
    enstrophy_error: float
    energy_error: float


@dataclass
class ConvergenceReport:
    mode: str
    levels: List[ConvergenceLevel] = field(default_factory=list)
    orders: Dict[str, float] = field(default_factory=dict)

    def to_rows(self) -> List[List[str]]:
        return [[str(v) for v in asdict(level).values()] for level in self.levels]


def ladder(config: SimConfig, refinement: str, levels: int) -> List[SimConfig]:
    """The refinement ladder followed by the reference configuration"""
    if refinement not in MODES:
        raise ValueError(f"Refinement must be one of {MODES}, got {refinement!r}")
    if levels < 3:
        raise ValueError(f"A convergence study needs at least 3 levels, got {levels}")
    configs = []
    for k in range(levels + 1):
        if refinement == "dt":
            update = {"dt": config.dt / 2 ** k}
        else:
            n_map = config.n_map * 2 ** k
            update = {"n_map": n_map, "n_eval": max(config.n_eval, n_map)}
        configs.append(SimConfig(**{**config.model_dump(), **update}))
    return configs


def observed_order(resolutions, errors) -> float:
    """Least-squares slope of log(error) against log(resolution)"""
    res = np.asarray(resolutions, dtype=float)
    err = np.abs(np.asarray(errors, dtype=float))
    usable = err > 0
    if np.count_nonzero(usable) < 2:
        return float('nan')
    slope, _ = np.polyfit(np.log(res[usable]), np.log(err[usable]), 1)
    return float(slope)


def _periodic_difference(a: np.ndarray, b: np.ndarray, L: float) -> np.ndarray:
    return np.mod(a - b + L / 2, L) - L / 2


def self_convergence(config: SimConfig, refinement: str = "dt", levels: int = 3,
                     n_eval: Optional[int] = None) -> ConvergenceReport:
    configs = ladder(config, refinement, levels)
    omega0 = build_initial_vorticity(config)
    L = config.length
    grid = PeriodicGrid(n_eval or config.n_eval, L)
    X, Y = grid.nodes()

    results = []
    for k, cfg in enumerate(configs):
        tag = "reference" if k == levels else f"level {k}"
        logger.info(f"Convergence {refinement} {tag}: dt={cfg.dt:.6g}, n_map={cfg.n_map}")
        sim = Simulation(cfg, omega0)
        sim.start()
        sim.advance_to_end()
        record = sim.diagnostics()
        mx, my = sim.stack.evaluate(X, Y)
        results.append((cfg, mx, my, omega0.evaluate(mx, my), record))

    _, ref_x, ref_y, ref_w, _ = results[-1]
    report = ConvergenceReport(mode=refinement)
    for k, (cfg, mx, my, w, record) in enumerate(results[:-1]):
        map_error = max(float(np.max(np.abs(_periodic_difference(mx, ref_x, L)))),
                        float(np.max(np.abs(_periodic_difference(my, ref_y, L)))))
        resolution = cfg.dt if refinement == "dt" else L / cfg.n_map
        report.levels.append(ConvergenceLevel(
            level=k,
            resolution=resolution,
            map_error=map_error,
            vorticity_error=float(np.max(np.abs(w - ref_w))),
            enstrophy_error=abs(record.enstrophy_error),
            energy_error=abs(record.energy_error),
        ))

    resolutions = [lvl.resolution for lvl in report.levels]
    for name in QUANTITIES:
        report.orders[name] = observed_order(resolutions, [getattr(lvl, name) for lvl in report.levels])
    logger.info("Observed orders: " + ", ".join(f"{k}={v:.3f}" for k, v in report.orders.items()
                                                 if not math.isnan(v)))
    return report
