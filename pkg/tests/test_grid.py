"""Radial grid, derivative, norm, resample, and CSV contracts."""

import numpy as np
import pytest

from expanderlab.grid import (
    LINEAR_LAW,
    LOG_LAW,
    DomainError,
    ExtrapolationError,
    NonFiniteError,
    Profile,
    RadialGrid,
    derivative,
    derivative_values,
    read_profile_csv,
    resample,
    sample_function,
    weighted_sup_norm,
    write_profile_csv,
)


@pytest.fixture(scope="module")
def default_grid():
    return RadialGrid.default()


def test_default_grid_shape(default_grid):
    assert default_grid.n == 1024
    assert default_grid.u_min == 1e-3
    assert default_grid.u_max == 1e4
    assert default_grid.spacing_law == LOG_LAW
    steps = np.diff(np.log(default_grid.nodes))
    assert np.max(np.abs(steps - steps[0])) <= 1e-12 * steps[0]


def test_grid_rejects_too_few_nodes():
    with pytest.raises(DomainError):
        RadialGrid.log_spaced(1e-3, 1e4, 15)


def test_grid_rejects_nonpositive_domain():
    with pytest.raises(DomainError):
        RadialGrid.log_spaced(0.0, 1.0, 32)
    with pytest.raises(DomainError):
        RadialGrid.log_spaced(2.0, 1.0, 32)


def test_grid_rejects_mislabeled_law():
    nodes = np.exp(np.linspace(np.log(1e-2), np.log(1e2), 64))
    with pytest.raises(DomainError):
        RadialGrid(1e-2, 1e2, nodes, LINEAR_LAW)


def test_grid_rejects_unsorted_nodes():
    nodes = np.linspace(1.0, 2.0, 32)
    nodes[10], nodes[11] = nodes[11], nodes[10]
    with pytest.raises(DomainError):
        RadialGrid(1.0, 2.0, nodes, LINEAR_LAW)


def test_derivative_of_u_is_one(default_grid):
    p = sample_function(default_grid, lambda u: u)
    d = derivative(p, 1)
    assert np.max(np.abs(d.values - 1.0)) <= 1e-10


def test_derivative_of_u_is_one_linear_grid():
    grid = RadialGrid.linear(0.5, 50.0, 128)
    d = derivative(sample_function(grid, lambda u: u), 1)
    assert np.max(np.abs(d.values - 1.0)) <= 1e-10


def test_second_derivative_of_u_squared(default_grid):
    p = sample_function(default_grid, lambda u: u**2)
    d2 = derivative(p, 2)
    assert np.max(np.abs(d2.values - 2.0)) <= 1e-8


def test_polynomials_differentiate_exactly(default_grid):
    # Degree five is the exactness limit of the six-point window.
    u = default_grid.nodes
    p = Profile(default_grid, u**5 - 3.0 * u**3 + 2.0 * u)
    d1 = derivative(p, 1)
    expect = 5.0 * u**4 - 9.0 * u**2 + 2.0
    assert np.max(np.abs(d1.values - expect) / np.abs(expect)) <= 1e-10


def test_derivative_log_profile_at_u_four(default_grid):
    p = sample_function(default_grid, np.log)
    d = derivative(p, 1)
    i = int(np.argmin(np.abs(default_grid.nodes - 4.0)))
    assert abs(d.values[i] - 1.0 / default_grid.nodes[i]) <= 1e-8


def test_derivative_linearity(default_grid):
    rng = np.random.default_rng(7)
    p = Profile(default_grid, rng.standard_normal(default_grid.n))
    q = Profile(default_grid, rng.standard_normal(default_grid.n))
    a, b = 1.7, -0.3
    lhs = derivative(a * p + b * q, 1).values
    rhs = a * derivative(p, 1).values + b * derivative(q, 1).values
    scale = np.max(np.abs(rhs)) + 1.0
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_first_derivative_twice_matches_second():
    grid = RadialGrid.log_spaced(1e-3, 1e4, 512)
    p = sample_function(grid, lambda u: np.exp(-u))
    dd = derivative(derivative(p, 1), 1).values
    d2 = derivative(p, 2).values
    rel = np.max(np.abs(dd - d2)) / np.max(np.abs(d2))
    assert rel <= 1e-5


def test_derivative_convergence_order():
    # Fifth-order interior windows: halving h gains well over a factor 10.
    errs = []
    for n in (256, 512):
        grid = RadialGrid.log_spaced(1e-2, 1e2, n)
        p = sample_function(grid, lambda u: np.sin(np.log(u)))
        d = derivative(p, 1)
        exact = np.cos(np.log(grid.nodes)) / grid.nodes
        sl = grid.interior()
        errs.append(np.max(np.abs(d.values[sl] - exact[sl]) * grid.nodes[sl]))
    assert errs[0] / errs[1] > 10.0


def test_higher_derivative_values(default_grid):
    u = default_grid.nodes
    vals = u**4
    d3 = derivative_values(default_grid, vals, 3)
    d4 = derivative_values(default_grid, vals, 4)
    sl = default_grid.interior()
    assert np.max(np.abs(d3[sl] - 24.0 * u[sl]) / (24.0 * u[sl])) <= 1e-7
    assert np.max(np.abs(d4[sl] - 24.0) / 24.0) <= 1e-6


def test_derivative_rejects_bad_order(default_grid):
    p = sample_function(default_grid, lambda u: u)
    with pytest.raises(DomainError):
        derivative(p, 3)
    with pytest.raises(DomainError):
        derivative(p, 0)


def test_derivative_rejects_nonfinite(default_grid):
    values = np.ones(default_grid.n)
    values[17] = np.nan
    p = Profile(default_grid, values)
    with pytest.raises(NonFiniteError, match="node 17"):
        derivative(p, 1)


def test_weighted_sup_norm_matches_direct(default_grid):
    rng = np.random.default_rng(11)
    p = Profile(default_grid, rng.standard_normal(default_grid.n))
    f_ref = sample_function(default_grid, lambda u: 1.0 + u)
    got = weighted_sup_norm(p, 1.5, f_ref)
    sl = default_grid.interior()
    expect = np.max(f_ref.values[sl] ** 1.5 * np.abs(p.values[sl]))
    assert got == expect


def test_weighted_sup_norm_rejects_nonpositive_weight(default_grid):
    p = sample_function(default_grid, lambda u: u)
    w = np.ones(default_grid.n)
    w[5] = -1.0
    with pytest.raises(DomainError, match="node 5"):
        weighted_sup_norm(p, 1.0, Profile(default_grid, w))


def test_resample_cubic_exact():
    coarse = RadialGrid.log_spaced(1e-3, 1e4, 128)
    fine = RadialGrid.log_spaced(1e-3, 1e4, 497)
    p = sample_function(coarse, lambda u: u**3)
    q = resample(p, fine)
    rel = np.abs(q.values - fine.nodes**3) / fine.nodes**3
    assert np.max(rel) <= 1e-10


def test_resample_round_trip():
    coarse = RadialGrid.log_spaced(1e-3, 1e4, 256)
    fine = RadialGrid.log_spaced(1e-3, 1e4, 511)  # shares every other node
    p = sample_function(coarse, lambda u: np.sin(np.log(u)) + 0.1 * u)
    back = resample(resample(p, fine), coarse)
    assert np.max(np.abs(back.values - p.values)) <= 1e-10 * np.max(np.abs(p.values))


def test_resample_identity_is_bitwise():
    grid = RadialGrid.log_spaced(1e-3, 1e4, 64)
    twin = RadialGrid.log_spaced(1e-3, 1e4, 64)
    p = sample_function(grid, lambda u: np.cos(u / (1.0 + u)))
    q = resample(p, twin)
    assert np.array_equal(q.values, p.values)


def test_resample_rejects_extrapolation():
    grid = RadialGrid.log_spaced(1e-2, 1e2, 64)
    wider = RadialGrid.log_spaced(1e-3, 1e2, 64)
    p = sample_function(grid, lambda u: u)
    with pytest.raises(ExtrapolationError):
        resample(p, wider)


def test_csv_round_trip(tmp_path, default_grid):
    rng = np.random.default_rng(3)
    p = Profile(default_grid, rng.standard_normal(default_grid.n) * 1e3)
    path = str(tmp_path / "profile.csv")
    write_profile_csv(p, path)
    with open(path, "rb") as fh:
        raw = fh.read()
    assert raw.startswith(b"u,value\n")
    assert b"\r" not in raw
    q = read_profile_csv(path)
    assert np.array_equal(q.values, p.values)
    assert np.max(np.abs(q.grid.nodes - p.grid.nodes)) == 0.0
    assert q.grid.spacing_law == LOG_LAW


def test_csv_detects_linear_law(tmp_path):
    grid = RadialGrid.linear(1.0, 33.0, 33)
    p = sample_function(grid, lambda u: u)
    path = str(tmp_path / "linear.csv")
    write_profile_csv(p, path)
    assert read_profile_csv(path).grid.spacing_law == LINEAR_LAW


def test_profile_rejects_shape_mismatch(default_grid):
    with pytest.raises(DomainError):
        Profile(default_grid, np.ones(default_grid.n - 1))


def test_profile_arithmetic_requires_same_grid(default_grid):
    other = RadialGrid.log_spaced(1e-3, 1e4, 512)
    p = sample_function(default_grid, lambda u: u)
    q = sample_function(other, lambda u: u)
    with pytest.raises(DomainError):
        _ = p + q
