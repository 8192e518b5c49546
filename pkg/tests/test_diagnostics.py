import math

import numpy as np
import pytest

from src.diagnostics.conservation import conservation, enstrophy, grid_vorticity, lattice_vorticity
from src.diagnostics.convergence import ladder, observed_order, self_convergence
from src.diagnostics.spectrum import (default_fit_window, fit_radius, laplacian_render, shell_spectrum,
                                      vorticity_spectrum)
from src.diagnostics.zoom import centered_window, window_lattice, zoom_render
from src.fields.initial import constant_zero, four_modes, random_shell_coefficients, random_shells, shell_index
from src.interp.hermite import HermiteField
from src.models.grid import PeriodicGrid
from src.models.records import DiagnosticsRecord, Spectrum
from src.solvers.biot_savart import SpectralWorkspace, build_velocity, sample_vorticity, solve_stream
from src.solvers.flowmap import HermiteMap, MapStack


def _velocity(stack, omega0, n=32):
    ws = SpectralWorkspace(n, n)
    omega = sample_vorticity(stack, omega0, ws.sample_grid)
    return build_velocity(solve_stream(omega, ws), n, 0.0, ws)


def _twisted_stack():
    grid = PeriodicGrid(32)
    X, Y = grid.nodes()
    d1 = HermiteField(grid, np.stack([0.3 * np.sin(Y), 0 * X, 0.3 * np.cos(Y), 0 * X]))
    d2 = HermiteField(grid, np.stack([0.2 * np.sin(X), 0.2 * np.cos(X), 0 * X, 0 * X]))
    return MapStack(active=HermiteMap(d1, d2))


def test_enstrophy_of_the_four_mode_field():
    stack = MapStack.identity(PeriodicGrid(16))
    grid = PeriodicGrid(64)
    assert enstrophy(grid_vorticity(stack, four_modes(), grid), grid) == pytest.approx(4.8 * math.pi ** 2, rel=1e-12)


def test_conservation_record_against_its_initial_state():
    omega0 = four_modes()
    stack = MapStack.identity(PeriodicGrid(16))
    velocity = _velocity(stack, omega0)
    grid = PeriodicGrid(32)
    first = conservation(stack, omega0, velocity, grid)
    again = conservation(stack, omega0, velocity, grid, initial=first, t=0.5)
    assert again.t == 0.5
    assert again.enstrophy_error == 0.0 and again.energy_error == 0.0
    assert first.det_error == 0.0 and first.remap_count == 0
    # energy of cos x + cos y + 0.6 cos 2x + 0.2 cos 3x: sum of a^2 / k^2 times 2 pi^2
    expected = 2 * math.pi ** 2 * (1 + 1 + 0.36 / 4 + 0.04 / 9)
    assert first.energy == pytest.approx(expected, rel=1e-6)


def test_conservation_errors_per_unit_area():
    omega0 = four_modes()
    stack = MapStack.identity(PeriodicGrid(16))
    velocity = _velocity(stack, omega0)
    grid = PeriodicGrid(32)
    current = conservation(stack, omega0, velocity, grid)
    shifted = DiagnosticsRecord(t=0.0, enstrophy=current.enstrophy - 1.0, energy=current.energy - 2.0)
    integral = conservation(stack, omega0, velocity, grid, initial=shifted)
    mean = conservation(stack, omega0, velocity, grid, initial=shifted, error_norm="mean")
    assert integral.enstrophy_error == pytest.approx(1.0, rel=1e-12)
    assert mean.enstrophy_error == pytest.approx(1.0 / (4 * math.pi ** 2), rel=1e-12)
    assert mean.energy_error == pytest.approx(2.0 / (4 * math.pi ** 2), rel=1e-12)
    assert mean.enstrophy == integral.enstrophy
    with pytest.raises(ValueError):
        conservation(stack, omega0, velocity, grid, error_norm="relative")


def test_zero_field_has_no_energy():
    omega0 = constant_zero()
    stack = MapStack.identity(PeriodicGrid(16))
    record = conservation(stack, omega0, _velocity(stack, omega0), PeriodicGrid(16))
    assert record.enstrophy == 0.0 and record.energy == 0.0


def test_lattice_evaluation_in_blocks_matches_direct(monkeypatch):
    import src.diagnostics.conservation as conservation_module
    stack = _twisted_stack()
    xs = np.linspace(0.0, 6.0, 37)
    ys = np.linspace(0.5, 2.0, 11)
    whole = lattice_vorticity(stack, four_modes(), xs, ys)
    monkeypatch.setattr(conservation_module, "BLOCK_ROWS", 5)
    np.testing.assert_array_equal(lattice_vorticity(stack, four_modes(), xs, ys), whole)


def test_spectrum_of_a_single_mode():
    ws = SpectralWorkspace(32, 32)
    X, _ = ws.sample_grid.nodes()
    spectrum = shell_spectrum(np.cos(X), ws)
    assert spectrum.E[1] == pytest.approx(0.25, abs=1e-12)
    assert np.sum(spectrum.E) - spectrum.E[1] <= 1e-12
    assert np.all(shell_spectrum(np.zeros((32, 32)), ws).E == 0.0)


def test_spectrum_satisfies_parseval(rng):
    ws = SpectralWorkspace(32, 32)
    values = rng.normal(size=(32, 32))
    spectrum = shell_spectrum(values, ws)
    assert spectrum.total == pytest.approx(0.5 * np.mean(values ** 2), rel=1e-12)


def test_random_shell_spectrum_at_the_initial_time():
    n = 128
    omega0 = random_shells(4, K_max=32, n_sample=n)
    ws = SpectralWorkspace(n, n)
    spectrum = vorticity_spectrum(MapStack.identity(PeriodicGrid(16)), omega0, n, ws)

    coeffs = random_shell_coefficients(4, K_max=32, n=n)
    m = SpectralWorkspace.modes(n)
    shells = shell_index(m[:, None], m[None, :])
    for K in range(1, 8):
        expected = 0.5 * np.sum(np.abs(coeffs[shells == K]) ** 2)
        assert spectrum.E[K] == pytest.approx(expected, rel=1e-10)


def test_laplacian_render_of_a_single_mode():
    def jets(x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        return np.cos(2 * x) + zero, -2 * np.sin(2 * x) + zero, zero, zero

    from src.fields.initial import closed_form
    ws = SpectralWorkspace(32, 32)
    lap = laplacian_render(MapStack.identity(PeriodicGrid(16)), closed_form(jets, 2 * math.pi), 32, ws)
    X, _ = ws.sample_grid.nodes()
    np.testing.assert_allclose(lap, -4 * np.cos(2 * X), rtol=0, atol=1e-11)


def _synthetic(E_of_K, K_max=30):
    K = np.arange(K_max + 1)
    E = np.zeros(K.size)
    E[1:] = E_of_K(K[1:].astype(float))
    return Spectrum(K=K, E=E)


def test_fit_recovers_known_decay():
    delta, alpha, _ = fit_radius(_synthetic(lambda K: K ** 2 * np.exp(-K)), 1, 30)
    assert delta == pytest.approx(0.5, abs=1e-10)
    assert alpha == pytest.approx(2.0, abs=1e-10)

    delta, alpha, _ = fit_radius(_synthetic(lambda K: np.exp(-2 * K)), 5, 25)
    assert delta == pytest.approx(1.0, abs=1e-10)
    assert alpha == pytest.approx(0.0, abs=1e-9)

    delta, _, _ = fit_radius(_synthetic(lambda K: np.full(K.shape, 3.0)), 2, 20)
    assert delta == pytest.approx(0.0, abs=1e-10)


def test_fit_needs_enough_shells():
    with pytest.raises(ValueError, match="insufficient tail"):
        fit_radius(_synthetic(lambda K: np.exp(-K), K_max=3), 1, 3)
    with pytest.raises(ValueError):
        fit_radius(_synthetic(lambda K: np.exp(-K)), 5, 5)


def test_default_fit_window_avoids_the_truncated_shells():
    spectrum = _synthetic(lambda K: np.exp(-K))
    assert default_fit_window(spectrum) == (13, 27)
    with pytest.raises(ValueError, match="insufficient tail"):
        default_fit_window(Spectrum(K=np.arange(5), E=np.zeros(5)))


def test_full_domain_zoom_matches_grid_sampling():
    stack = _twisted_stack()
    omega0 = four_modes()
    raster = zoom_render(stack, omega0, (0.0, 0.0, 2 * math.pi, 2 * math.pi), 32)
    direct = grid_vorticity(stack, omega0, PeriodicGrid(32))
    np.testing.assert_array_equal(raster, direct.T)


def test_nested_windows_agree_at_their_center():
    stack = _twisted_stack()
    omega0 = four_modes()
    center = (1.25, 2.5)
    values = []
    for width in (1.0, 0.25, 1e-3):
        raster = zoom_render(stack, omega0, centered_window(center, width), 16)
        values.append(raster[8, 8])
    assert values[0] == pytest.approx(values[1], abs=1e-12)
    assert values[1] == pytest.approx(values[2], abs=1e-12)


def test_deep_zoom_stays_finite_and_in_range():
    stack = _twisted_stack()
    omega0 = four_modes()
    raster = zoom_render(stack, omega0, centered_window((3.0, 3.0), 1e-9), 8)
    low, high = omega0.value_range
    assert np.all(np.isfinite(raster))
    assert raster.min() >= low - 1e-12 and raster.max() <= high + 1e-12


def test_window_validation():
    with pytest.raises(ValueError):
        window_lattice((1.0, 0.0, 1.0, 2.0), 8)
    with pytest.raises(ValueError):
        window_lattice((0.0, 0.0, 1.0, 1.0), 1)
    xs, ys = window_lattice((0.0, 1.0, 1.0, 3.0), 4)
    np.testing.assert_allclose(xs, [0.0, 0.25, 0.5, 0.75])
    np.testing.assert_allclose(ys, [1.0, 1.5, 2.0, 2.5])


def test_observed_order_of_synthetic_errors():
    res = np.array([0.1, 0.05, 0.025])
    assert observed_order(res, 3.0 * res ** 3) == pytest.approx(3.0, abs=1e-12)
    assert math.isnan(observed_order(res, [0.0, 0.0, 0.0]))


def test_ladder_construction(small_config):
    config = small_config()
    configs = ladder(config, "dt", 3)
    assert [c.dt for c in configs] == [0.125, 0.0625, 0.03125, 0.015625]
    configs = ladder(config, "dx", 3)
    assert [c.n_map for c in configs] == [16, 32, 64, 128]
    assert all(c.n_eval >= c.n_map for c in configs)
    with pytest.raises(ValueError):
        ladder(config, "dz", 3)
    with pytest.raises(ValueError):
        ladder(config, "dt", 2)


def test_self_convergence_of_a_motionless_field(small_config):
    config = small_config(ic="zero", n_map=8, n_sample=8, n_psi=8, n_eval=8, dt=0.25, t_end=0.5)
    report = self_convergence(config, "dt", 3)
    assert len(report.levels) == 3
    for level in report.levels:
        assert level.map_error == 0.0 and level.vorticity_error == 0.0
    assert all(math.isnan(order) for order in report.orders.values())
    assert len(report.to_rows()) == 3
