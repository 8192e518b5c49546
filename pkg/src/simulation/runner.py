from pathlib import Path
from typing import Optional
import csv
import json
import logging
import time

from .. import __version__
from ..diagnostics.spectrum import fit_radius, shell_spectrum, spectral_laplacian
from ..diagnostics.conservation import grid_vorticity
from ..models.config import SimConfig
from ..models.records import DIAGNOSTICS_HEADER, DiagnosticsRecord, RunManifest
from ..storage.field_io import save_field_dump
from .driver import NumericalBlowUpError, Simulation

logger = logging.getLogger(__name__)


class RunWriter:
    """Owns the output directory of one run; all file output goes through here"""

    def __init__(self, config: SimConfig, output_dir: Optional[str] = None, append: bool = False):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.output_dir / "manifest.json"
        self.previous_wall_time = 0.0
        if append and self.manifest_path.exists():
            with open(self.manifest_path, 'r') as f:
                self.manifest = RunManifest.from_dict(json.load(f))
            self.manifest.config = config.to_dict()
            self.manifest.version = __version__
            self.previous_wall_time = self.manifest.wall_time
            logger.info(f"Continuing manifest with {len(self.manifest.outputs)} earlier outputs")
        else:
            self.manifest = RunManifest(config=config.to_dict(), version=__version__)
        self.diagnostics_path = self.output_dir / "diagnostics.csv"
        if not (append and self.diagnostics_path.exists()):
            with open(self.diagnostics_path, 'w', newline='') as f:
                csv.writer(f).writerow(DIAGNOSTICS_HEADER)
            self.manifest.add_output(str(self.diagnostics_path.name), "diagnostics", 0, 0.0)

    def record(self, record: DiagnosticsRecord) -> None:
        with open(self.diagnostics_path, 'a', newline='') as f:
            csv.writer(f).writerow(record.to_row())

    def snapshot(self, sim: Simulation) -> None:
        step, t = sim.step_index, sim.t
        if self.config.save_fields or self.config.spectrum_output or self.config.save_laplacian:
            values = grid_vorticity(sim.stack, sim.omega0, sim.eval_grid)
            if self.config.save_fields:
                stem = self.output_dir / f"vorticity_{step:06d}"
                save_field_dump(values, stem, sim.eval_grid.L, t, "vorticity")
                self.manifest.add_output(f"{stem.name}.bin", "field", step, t)
            if self.config.save_laplacian:
                stem = self.output_dir / f"laplacian_{step:06d}"
                save_field_dump(spectral_laplacian(values, sim.workspace), stem, sim.eval_grid.L, t,
                                "laplacian")
                self.manifest.add_output(f"{stem.name}.bin", "laplacian", step, t)
            if self.config.spectrum_output:
                self._spectrum(sim, values, step, t)

    def _spectrum(self, sim: Simulation, values, step: int, t: float) -> None:
        spectrum = shell_spectrum(values, sim.workspace)
        path = self.output_dir / f"spectrum_{step:06d}.csv"
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(["K", "E"])
            writer.writerows(spectrum.to_rows())
        self.manifest.add_output(path.name, "spectrum", step, t)
        try:
            delta, alpha, _ = fit_radius(spectrum)
            self.manifest.analyticity.append({"t": t, "delta": delta, "alpha": alpha})
        except ValueError as e:
            logger.warning(f"Skipping analyticity fit at t={t:.6g}: {str(e)}")

    def save_stack(self, sim: Simulation) -> None:
        directory = self.output_dir / "stack"
        sim.checkpoint(directory)
        self.manifest.add_output(directory.name, "stack", sim.step_index, sim.t)

    def finish(self, sim: Simulation, wall_time: float, status: str, error: Optional[str] = None) -> Path:
        self.manifest.wall_time = self.previous_wall_time + wall_time
        self.manifest.steps = sim.step_index
        self.manifest.final_time = sim.t
        self.manifest.remap_times = list(sim.stack.remap_times)
        self.manifest.status = status
        self.manifest.error = error
        with open(self.manifest_path, 'w') as f:
            json.dump(self.manifest.to_dict(), f, indent=2)
        return self.manifest_path


def run_simulation(config: SimConfig, resume: Optional[str] = None) -> int:
    """Execute a configured run from t = 0 (or a saved stack) to t_end; returns an exit status"""
    start_time = time.time()
    if resume:
        sim = Simulation.from_checkpoint(resume, config)
    else:
        sim = Simulation(config)
    writer = RunWriter(config, append=bool(resume))

    try:
        if not resume:
            writer.record(sim.start())
            writer.snapshot(sim)
        while not sim.finished:
            sim.step()
            if sim.step_index % config.output_every == 0 or sim.finished:
                record = sim.diagnostics()
                writer.record(record)
                writer.snapshot(sim)
                logger.info(f"t={record.t:.4f} enstrophy_error={record.enstrophy_error:.3e} "
                            f"energy_error={record.energy_error:.3e} remaps={record.remap_count}")
        if config.save_stack:
            writer.save_stack(sim)
    except NumericalBlowUpError as e:
        logger.error(str(e))
        writer.finish(sim, time.time() - start_time, "failed", str(e))
        return 1

    path = writer.finish(sim, time.time() - start_time, "completed")
    logger.info(f"Run completed in {time.time() - start_time:.1f}s with {sim.stack.remap_count} remaps; "
                f"manifest at {path}")
    return 0
