import math

import numpy as np
import pytest

from src.fields.initial import closed_form, four_modes
from src.interp.hermite import HermiteField
from src.models.grid import PeriodicGrid
from src.solvers.biot_savart import (SpectralWorkspace, VelocityField, VelocityStack, build_velocity,
                                     default_workers, mollifier_weights, sample_vorticity, solve_stream,
                                     velocity_at, zero_pad)
from src.solvers.flowmap import MapStack


def _stream(workspace, psi_hat):
    """Stream function values on the n x n sampling grid"""
    return workspace.inverse(psi_hat).real


def test_single_mode_is_inverted_exactly():
    ws = SpectralWorkspace(32, 32)
    X, Y = ws.sample_grid.nodes()
    psi = _stream(ws, solve_stream(np.cos(X), ws))
    np.testing.assert_allclose(psi, np.cos(X), rtol=0, atol=1e-12)

    omega = np.cos(3 * X) * np.cos(4 * Y)
    psi = _stream(ws, solve_stream(omega, ws))
    np.testing.assert_allclose(psi, omega / 25.0, rtol=0, atol=1e-12)


def test_constant_vorticity_gives_zero_stream():
    ws = SpectralWorkspace(16, 16)
    psi_hat = solve_stream(np.full((16, 16), 7.0), ws)
    np.testing.assert_allclose(np.abs(psi_hat), 0.0, rtol=0, atol=1e-14)


def test_negative_laplacian_recovers_mean_free_vorticity(rng):
    ws = SpectralWorkspace(32, 32)
    omega = rng.normal(size=(32, 32))
    psi_hat = solve_stream(omega, ws)
    k = ws.wavenumbers(32)
    lap = ws.inverse((k[:, None] ** 2 + k[None, :] ** 2) * psi_hat).real
    expected = omega - omega.mean()
    assert np.max(np.abs(lap - expected)) <= 1e-10 * np.max(np.abs(expected))


def test_forward_transform_satisfies_parseval(rng):
    ws = SpectralWorkspace(32, 32, L=1.0)
    omega = rng.normal(size=(32, 32))
    coeffs = ws.forward(omega)
    h = ws.sample_grid.dx
    assert math.isclose(np.sum(np.abs(coeffs) ** 2) * ws.L ** 2, h * h * np.sum(omega ** 2), rel_tol=1e-10)
    np.testing.assert_allclose(ws.inverse(coeffs).real, omega, rtol=0, atol=1e-12)


def test_zero_pad_drops_nyquist_and_keeps_the_rest(rng):
    coeffs = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    padded = zero_pad(coeffs, 16)
    assert padded.shape == (16, 16)
    assert padded[3, -2] == coeffs[3, -2]
    assert padded[12, 12] == 0.0
    assert np.all(padded[8, :] == 0) and np.all(padded[:, 8] == 0)
    with pytest.raises(ValueError):
        zero_pad(coeffs, 4)


def test_zero_vorticity_gives_zero_velocity():
    ws = SpectralWorkspace(16, 32)
    u = build_velocity(solve_stream(np.zeros((16, 16)), ws), 32, 0.0, ws)
    X, Y = PeriodicGrid(50).nodes()
    u1, u2 = u.velocity(X, Y)
    assert np.max(np.abs(u1)) == 0.0 and np.max(np.abs(u2)) == 0.0


def test_single_mode_velocity_is_accurate(rng):
    ws = SpectralWorkspace(64, 256)
    X, _ = ws.sample_grid.nodes()
    velocity = build_velocity(solve_stream(np.cos(X), ws), 256, 0.0, ws)
    x, y = rng.uniform(0.0, 2 * math.pi, size=(2, 1000))
    u1, u2 = velocity.velocity(x, y)
    assert np.max(np.abs(u1)) <= 1e-6
    assert np.max(np.abs(u2 - np.sin(x))) <= 1e-6


def test_velocity_is_divergence_free_with_zero_mean(rng):
    ws = SpectralWorkspace(32, 64)
    velocity = build_velocity(solve_stream(rng.normal(size=(32, 32)), ws), 64, 0.0, ws)
    x, y = rng.uniform(0.0, 2 * math.pi, size=(2, 1000))
    assert np.max(np.abs(velocity.divergence(x, y))) <= 1e-12

    X, Y = ws.psi_grid.nodes()
    u1, u2 = velocity.velocity(X, Y)
    assert abs(u1.mean()) <= 1e-10 and abs(u2.mean()) <= 1e-10


def _uniform_flow(grid, c, t):
    """Jets with psi_y = c at every node, so u1 = c exactly at the nodes"""
    jets = np.zeros((4, grid.n, grid.n))
    jets[2] = c
    return VelocityField(HermiteField(grid, jets), t)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_lagrange_extension_reproduces_polynomials_in_time(order):
    grid = PeriodicGrid(8)
    X, Y = grid.nodes()
    stack = VelocityStack(order)
    # velocity c(t) = t^(order - 1) sampled at t = 0, 1, 2
    for t in (0.0, 1.0, 2.0):
        stack.push(_uniform_flow(grid, t ** (order - 1), t))
    u1, u2 = velocity_at(stack, X, Y, 2.5)
    np.testing.assert_allclose(u1, 2.5 ** (order - 1), rtol=1e-12)
    np.testing.assert_allclose(u2, 0.0, atol=1e-12)


def test_lagrange_extension_with_a_single_velocity_is_constant():
    grid = PeriodicGrid(8)
    stack = VelocityStack(3)
    stack.push(_uniform_flow(grid, 1.5, 0.0))
    x0, y0 = grid.node(2, 3)
    u1, _ = velocity_at(stack, x0, y0, 0.7)
    assert float(u1) == pytest.approx(1.5, abs=1e-14)


def test_velocity_stack_rules():
    grid = PeriodicGrid(8)
    stack = VelocityStack(2)
    with pytest.raises(ValueError):
        velocity_at(stack, 0.0, 0.0, 0.0)
    stack.push(_uniform_flow(grid, 1.0, 0.0))
    with pytest.raises(ValueError):
        stack.push(_uniform_flow(grid, 1.0, 0.0))
    stack.push(_uniform_flow(grid, 1.0, 0.5))
    stack.push(_uniform_flow(grid, 1.0, 1.0))
    assert stack.times == [0.5, 1.0]


def test_workers_come_from_the_environment(monkeypatch):
    monkeypatch.setenv("CHARMAP_THREADS", "4")
    assert default_workers() == 4
    monkeypatch.setenv("CHARMAP_THREADS", "lots")
    assert default_workers() == 1


def test_unmollified_samples_follow_the_map():
    grid = PeriodicGrid(16)
    omega0 = four_modes()
    samples = sample_vorticity(MapStack.identity(PeriodicGrid(8)), omega0, grid)
    assert samples[0, 0] == pytest.approx(2.8, abs=1e-14)
    X, Y = grid.nodes()
    np.testing.assert_allclose(samples, omega0.evaluate(X, Y), rtol=0, atol=1e-14)


def test_mollified_constant_stays_constant():
    c = 1.75

    def jets(x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        return zero + c, zero, zero, zero

    grid = PeriodicGrid(16)
    samples = sample_vorticity(MapStack.identity(PeriodicGrid(8)), closed_form(jets, grid.L), grid,
                               epsilon=grid.dx, subsamples=2)
    np.testing.assert_allclose(samples, c, rtol=0, atol=1e-14)


def _cosine_x():
    def jets(x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        return np.cos(x) + zero, -np.sin(x) + zero, zero, zero
    return closed_form(jets, 2 * math.pi)


def test_mollified_cosine_matches_the_discrete_filter_symbol():
    grid = PeriodicGrid(64)
    eps = grid.dx
    samples = sample_vorticity(MapStack.identity(PeriodicGrid(8)), _cosine_x(), grid, eps, 2)
    offsets, weights = mollifier_weights(eps, grid.dx / 2, 2)
    symbol = np.sum(weights * np.cos((offsets + 0.5) * grid.dx / 2))
    X, _ = grid.nodes()
    np.testing.assert_allclose(samples, symbol * np.cos(X), rtol=0, atol=1e-12)

    dense = sample_vorticity(MapStack.identity(PeriodicGrid(8)), _cosine_x(), grid, eps, 10)
    assert np.max(np.abs(samples - dense)) <= 0.02 * eps ** 2


def test_mollification_error_is_second_order_in_width():
    errors = []
    for n in (16, 32, 64):
        grid = PeriodicGrid(n)
        X, _ = grid.nodes()
        samples = sample_vorticity(MapStack.identity(PeriodicGrid(8)), _cosine_x(), grid, grid.dx, 2)
        errors.append(np.max(np.abs(samples - np.cos(X))))
    assert math.log2(errors[0] / errors[1]) >= 1.8
    assert math.log2(errors[1] / errors[2]) >= 1.8


def test_mollification_preserves_the_fine_sample_mean():
    grid = PeriodicGrid(16)
    omega0 = four_modes()
    stack = MapStack.identity(PeriodicGrid(8))
    samples = sample_vorticity(stack, omega0, grid, grid.dx, 2)
    fine = (np.arange(32) + 0.5) * grid.dx / 2
    XF, YF = np.meshgrid(fine, fine, indexing='ij')
    assert samples.mean() == pytest.approx(omega0.evaluate(XF, YF).mean(), abs=1e-14)


def test_mollifier_weights_sum_to_one():
    offsets, weights = mollifier_weights(0.3, 0.05, 3)
    assert weights.sum() == pytest.approx(1.0, abs=1e-15)
    for r in range(3):
        assert weights[np.mod(offsets, 3) == r].sum() == pytest.approx(1 / 3, abs=1e-15)


def test_mollifier_width_limits():
    grid = PeriodicGrid(16)
    stack = MapStack.identity(PeriodicGrid(8))
    with pytest.raises(ValueError, match="mollifier too wide"):
        sample_vorticity(stack, four_modes(), grid, epsilon=grid.L / 2)
    with pytest.raises(ValueError):
        sample_vorticity(stack, four_modes(), grid, epsilon=-1.0)
    with pytest.raises(ValueError):
        mollifier_weights(0.01, 0.1, 4)


def test_stream_grid_must_not_be_coarser():
    with pytest.raises(ValueError):
        SpectralWorkspace(64, 32)
