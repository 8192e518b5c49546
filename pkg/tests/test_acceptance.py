"""
Full-resolution runs. These take minutes each; enable with --runslow.
"""

import math

import numpy as np
import pytest

from src.diagnostics.convergence import _periodic_difference, self_convergence
from src.diagnostics.spectrum import fit_radius, vorticity_spectrum
from src.diagnostics.zoom import centered_window, zoom_render
from src.models.config import build_config
from src.simulation.driver import Simulation

pytestmark = pytest.mark.slow


def _four_modes(**overrides):
    values = {"preset": "four_modes", "n_eval": 512}
    values.update(overrides)
    return build_config(values)


def _run_with_snapshots(config, times, on_snapshot=None):
    """Advance to each requested time, returning the diagnostics taken there"""
    sim = Simulation(config)
    sim.start()
    records = []
    for t in times:
        while sim.t < t - 1e-12:
            sim.step()
        records.append(sim.diagnostics())
        if on_snapshot is not None:
            on_snapshot(sim)
    return sim, records


def test_four_modes_conservation_to_t2():
    def in_range(sim):
        X, Y = sim.eval_grid.nodes()
        values = sim.omega0.evaluate(*sim.stack.evaluate(X, Y))
        low, high = sim.omega0.value_range
        assert values.min() >= low - 1e-12 and values.max() <= high + 1e-12

    sim, records = _run_with_snapshots(_four_modes(t_end=2.0), [1.0, 2.0], in_range)
    final = records[-1]
    assert abs(final.enstrophy_error) <= 1e-5
    assert abs(final.energy_error) <= 1e-6
    assert 1 <= final.remap_count <= 7


def test_four_modes_enstrophy_error_grows_about_linearly():
    _, records = _run_with_snapshots(_four_modes(t_end=4.0), [1.0, 2.0, 3.0, 4.0])
    errors = np.array([abs(r.enstrophy_error) for r in records])
    assert errors[-1] <= 5e-5
    linear = errors[-1] * np.array([1.0, 2.0, 3.0, 4.0]) / 4.0
    ratio = errors / linear
    assert np.all(ratio <= 3.0) and np.all(ratio >= 1 / 3)


@pytest.mark.parametrize("order, bounds", [(3, (2.5, math.inf)), (2, (1.6, 2.4))])
def test_time_convergence_orders(order, bounds):
    config = build_config({"preset": "four_modes_convergence", "lagrange_order": order})
    report = self_convergence(config, "dt", 4)
    low, high = bounds
    assert low <= report.orders["vorticity_error"] <= high
    assert report.orders["enstrophy_error"] >= 2.5


def test_spatial_convergence_order():
    config = build_config({"preset": "four_modes_convergence", "n_map": 32, "dt": "1/128"})
    report = self_convergence(config, "dx", 4)
    assert 2.0 <= report.orders["map_error"] <= 4.2


def test_submap_decomposition_does_not_change_the_flow(rng):
    x, y = rng.uniform(0.0, 2 * math.pi, size=(2, 10000))
    maps = []
    for delta in (math.inf, 1e-6):
        sim = Simulation(_four_modes(t_end=0.5, delta_det=delta))
        sim.start()
        sim.advance_to_end()
        maps.append(sim.stack.evaluate(x, y))
        if delta < 1:
            assert sim.stack.remap_count > 1
    (ax, ay), (bx, by) = maps
    L = 2 * math.pi
    assert np.max(np.abs(_periodic_difference(ax, bx, L))) <= 1e-3
    assert np.max(np.abs(_periodic_difference(ay, by, L))) <= 1e-3


def test_vortex_merger_subgrid_zoom():
    config = build_config({"preset": "vortex_merger", "dt": "1/64", "t_end": 5.0, "n_eval": 256})
    sim = Simulation(config)
    sim.start()
    sim.advance_to_end()

    low, high = sim.omega0.value_range
    center = (0.5, 0.5)
    centers = []
    for level in range(2, 11):
        raster = zoom_render(sim.stack, sim.omega0, centered_window(center, 2.0 ** -level), 256)
        assert np.all(np.isfinite(raster))
        assert raster.min() >= low - 1e-12 and raster.max() <= high + 1e-12
        centers.append(raster[128, 128])
    assert max(centers) - min(centers) <= 1e-12


def test_radius_of_analyticity_shrinks():
    deltas = []

    def fit(sim):
        spectrum = vorticity_spectrum(sim.stack, sim.omega0, 512, sim.workspace)
        deltas.append(fit_radius(spectrum)[0])

    _run_with_snapshots(_four_modes(t_end=3.0), [1.0, 2.0, 3.0], fit)
    assert all(d > 0 for d in deltas)
    assert deltas[0] > deltas[1] > deltas[2]
