from pathlib import Path
from typing import List, Optional
import logging
import math

import numpy as np

from ..fields.initial import InitialVorticity, constant_zero, four_modes, gaussian_pair, random_shells
from ..interp.hermite import NonFiniteFieldError
from ..models.config import SimConfig
from ..models.grid import PeriodicGrid
from ..models.records import DiagnosticsRecord
from ..solvers.biot_savart import (SpectralWorkspace, VelocityField, VelocityStack, build_velocity,
                                   sample_vorticity, solve_stream)
from ..solvers.flowmap import HermiteMap, MapStack, advance_map, maybe_remap
from ..solvers.tableaus import get_tableau
from ..diagnostics.conservation import conservation
from ..storage.checkpoint import load_stack, save_stack

logger = logging.getLogger(__name__)


class NumericalBlowUpError(RuntimeError):
    """Raised when the solution stops being finite"""
    pass


def build_initial_vorticity(config: SimConfig) -> InitialVorticity:
    """Instantiate the configured initial condition"""
    if config.ic == "four_modes":
        omega0 = four_modes()
    elif config.ic == "random_shells":
        omega0 = random_shells(config.seed, config.k_max, config.ic_samples, config.length)
    elif config.ic == "gaussian_pair":
        omega0 = gaussian_pair(config.variance, config.separation, config.length)
    else:
        omega0 = constant_zero(config.length)
    if not math.isclose(omega0.L, config.length, rel_tol=1e-15):
        raise ValueError(f"Initial condition {config.ic} lives on L={omega0.L}, config asks for L={config.length}")
    return omega0


class Simulation:
    """Mutable state of one run: the map stack, the velocity history and the clock"""

    def __init__(self, config: SimConfig, omega0: Optional[InitialVorticity] = None):
        self.config = config
        self.omega0 = omega0 or build_initial_vorticity(config)
        L = config.length
        self.workspace = SpectralWorkspace(config.n_sample, config.n_psi, L)
        self.map_grid = PeriodicGrid(config.n_map, L)
        self.eval_grid = PeriodicGrid(config.n_eval, L)
        self.tableau = get_tableau(config.rk)
        self.stack = MapStack.identity(self.map_grid)
        self.velocities = VelocityStack(config.lagrange_order)
        self._startup: Optional[VelocityStack] = None
        self.step_index = 0
        self.initial: Optional[DiagnosticsRecord] = None
        logger.info(f"Simulation ready: ic={config.ic}, map {config.n_map}^2, psi {config.n_psi}^2, "
                    f"dt={config.dt:.6g}, delta_det={config.delta_det:.1e}")

    @property
    def t(self) -> float:
        return self.step_index * self.config.dt

    @property
    def finished(self) -> bool:
        return self.step_index >= self.config.n_steps

    def _velocity_now(self, t: float) -> VelocityField:
        """Sample omega_0 o chi, solve for psi and assemble u at time t"""
        eps = self.config.mollifier_width
        try:
            omega = sample_vorticity(self.stack, self.omega0, self.workspace.sample_grid,
                                     eps, self.config.subsamples)
            if not np.all(np.isfinite(omega)):
                raise NonFiniteFieldError("non-finite vorticity samples")
            psi_hat = solve_stream(omega, self.workspace)
            return build_velocity(psi_hat, self.config.n_psi, t, self.workspace, eps)
        except NonFiniteFieldError as e:
            raise NumericalBlowUpError(f"numerical blow-up at t={t}") from e

    def update_velocity(self) -> VelocityField:
        """Steps (1)-(3): sample omega_0 o chi, solve for psi, push u"""
        velocity = self._velocity_now(self.t)
        self.velocities.push(velocity)
        if self._startup is not None:
            if len(self.velocities) < self.velocities.order:
                self._startup.push(velocity)
            else:
                self._startup = None
        return velocity

    def start(self) -> DiagnosticsRecord:
        """Velocity and diagnostics at the initial time"""
        if not len(self.velocities):
            self.update_velocity()
        record = self.diagnostics()
        return record

    @property
    def starting(self) -> bool:
        """True while the velocity history is too short for the configured Lagrange order"""
        return len(self.velocities) < self.velocities.order and self.config.startup_substeps > 1

    def _starting_step(self, t_next: float) -> HermiteMap:
        """
        One dt taken as startup_substeps equal sub-steps with the velocity
        recomputed after each. The fine history carries over between startup
        steps; only whole-step velocities reach self.velocities.
        """
        if self._startup is None:
            self._startup = VelocityStack(self.velocities.order)
            for velocity in self.velocities.fields:
                self._startup.push(velocity)
        n_sub = self.config.startup_substeps
        h = self.config.dt / n_sub
        t_start = t_next - self.config.dt
        for j in range(1, n_sub + 1):
            t_j = t_next if j == n_sub else t_start + j * h
            self.stack.active = advance_map(self.stack.active, self._startup, t_j, h,
                                            self.tableau, self.config.jet_spacing)
            if j < n_sub:
                self._startup.push(self._velocity_now(t_j))
        return self.stack.active

    def step(self) -> bool:
        """Steps (4)-(5): advance the active map one dt and remap if needed"""
        if not len(self.velocities):
            self.update_velocity()
        t_next = (self.step_index + 1) * self.config.dt
        try:
            if self.starting:
                active = self._starting_step(t_next)
            else:
                active = advance_map(self.stack.active, self.velocities, t_next, self.config.dt,
                                     self.tableau, self.config.jet_spacing)
        except NonFiniteFieldError as e:
            raise NumericalBlowUpError(f"numerical blow-up at t={t_next}") from e
        self.stack.active = active
        self.step_index += 1
        remapped = maybe_remap(self.stack, self.config.delta_det, self.t)
        self.update_velocity()
        logger.debug(f"Step {self.step_index}: t={self.t:.6g}, submaps={len(self.stack.finalized)}")
        return remapped

    def diagnostics(self) -> DiagnosticsRecord:
        record = conservation(self.stack, self.omega0, self.velocities.latest, self.eval_grid,
                              self.initial, t=self.t, error_norm=self.config.error_norm)
        if self.initial is None:
            self.initial = record
        return record

    def advance_to_end(self) -> None:
        while not self.finished:
            self.step()

    def checkpoint(self, directory) -> Path:
        extra = {}
        if self.initial is not None:
            extra["initial_record"] = self.initial.to_dict()
        return save_stack(self.stack, directory, self.velocities, t=self.t, step=self.step_index,
                          config=self.config.to_dict(), **extra)

    @classmethod
    def from_checkpoint(cls, directory, config: Optional[SimConfig] = None) -> 'Simulation':
        """Rebuild a run from a saved stack; the saved config is used unless one is given"""
        stack, velocities, manifest = load_stack(directory)
        if config is None:
            saved = dict(manifest.get("config") or {})
            config = SimConfig(**saved)
        sim = cls(config)
        if stack.grid != sim.map_grid:
            raise ValueError(f"Saved map grid {stack.grid} does not match config {sim.map_grid}")
        sim.stack = stack
        if velocities is not None:
            sim.velocities = velocities
        sim.step_index = int(manifest.get("step", 0))
        if manifest.get("initial_record"):
            sim.initial = DiagnosticsRecord(**manifest["initial_record"])
        logger.info(f"Resumed from {directory} at t={sim.t:.6g} with {len(stack.finalized)} submaps")
        return sim


def simulate(config: SimConfig, omega0: Optional[InitialVorticity] = None) -> List[DiagnosticsRecord]:
    """Run to t_end without writing anything, returning the scheduled diagnostics"""
    sim = Simulation(config, omega0)
    records = [sim.start()]
    while not sim.finished:
        sim.step()
        if sim.step_index % config.output_every == 0 or sim.finished:
            records.append(sim.diagnostics())
    return records
