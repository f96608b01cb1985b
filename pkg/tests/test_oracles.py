"""Validation of the Cartesian finite-difference oracles, then the
end-to-end comparison of the radial implementations against them.

The first block earns trust in the oracle itself on closed-form cases; the
second block runs the package's radial reduction against the coordinate
computation at interior nodes. Every expected fraction is derived in a
comment next to its assertion.
"""

import numpy as np
import pytest

import oracles as oc
from expanderlab.geometry import (
    VectorFieldScale,
    curvature_norm,
    drift_laplacian,
    metric_eigenvalues,
    ricci_profile,
    scalar_curvature,
)
from expanderlab.grid import RadialGrid, sample_function

# Test metrics, given by first and second potential derivatives.
# Quadratic potential: P' = 1 + u, eigenvalues (1 + 2u, 1 + u).
QUAD = (lambda u: 1.0 + u, lambda u: 1.0)
# Logarithmic potential: P = u + log(1 + u).
LOGP = (lambda u: 1.0 + 1.0 / (1.0 + u), lambda u: -1.0 / (1.0 + u) ** 2)
FLAT = (lambda u: 1.0, lambda u: 0.0)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.default()


@pytest.fixture(scope="module")
def points(grid):
    return oc.sample_indices(grid)


# ------------------------------------------------- oracle self-validation

def test_partials_exact_on_polynomials():
    # d/dz1 (z1^2 zbar2) = 2 z1 zbar2 and d/dzbar2 (...) = z1^2; the field
    # has degree <= 2 in each real coordinate, so the fourth-order stencil
    # is exact up to rounding.
    z0 = np.array([0.7 + 0.3j, -0.4 + 1.1j])

    def field(z):
        return z[0] ** 2 * np.conj(z[1])

    d1 = oc.complex_partial(field, z0, 0)
    db2 = oc.complex_partial(field, z0, 1, conjugate=True)
    assert abs(d1 - 2.0 * z0[0] * np.conj(z0[1])) <= 1e-12
    assert abs(db2 - z0[0] ** 2) <= 1e-12


def test_conjugate_partial_annihilates_holomorphic():
    z0 = np.array([0.9 + 0.2j, 0.1 - 0.5j])
    val = oc.complex_partial(lambda z: np.exp(z[0] + 2.0 * z[1]), z0, 0, True)
    assert abs(val) <= 1e-7


def test_hessian_is_hermitian():
    z0 = oc.axis_point(1.0, 2)
    hess = oc.mixed_hessian(oc._log_det(oc.metric_field(*LOGP)), z0)
    assert np.max(np.abs(hess - np.conj(hess.T))) <= 1e-9


def test_flat_metric_is_curvature_free():
    z0 = oc.axis_point(2.0, 2)
    assert np.max(np.abs(oc.ricci_matrix(*FLAT, z0))) <= 1e-12
    assert np.max(np.abs(oc.curvature_tensor(*FLAT, z0))) <= 1e-12


def test_ricci_frozen_fractions():
    # For eigenvalues (xi, lam) = (1 + u, 1 + 2u) the log determinant is
    # log(1+u) + log(1+2u); its u-derivative at u = 1 is 1/2 + 2/3 = 7/6
    # and the radial component -(Q' + u Q'') = -(7/6 - 25/36) = -17/36.
    ric = oc.ricci_matrix(*QUAD, oc.axis_point(1.0, 2))
    assert abs(ric[0, 0] - (-17.0 / 36.0)) <= 2e-6
    assert abs(ric[1, 1] - (-7.0 / 6.0)) <= 2e-6
    assert abs(ric[0, 1]) <= 1e-9


def test_laplacian_frozen_fractions():
    # 2u/(1+u) + 4u/(1+2u) at u = 1 is 1 + 4/3 = 7/3; |z|^4 has degree 4
    # so the stencil error is pure rounding.
    val = oc.laplacian_value(*QUAD, lambda u: u * u, oc.axis_point(1.0, 2))
    assert abs(val - 7.0 / 3.0) <= 1e-10


def test_drift_is_radial_derivative():
    z0 = oc.axis_point(1.0, 2)
    # a u h' = 2 for h = u^2 and a u h' = 3 u^3 = 3 for h = u^3 at u = 1.
    # The cubic pulls back to (1+t)^6 along the orbit, whose fifth
    # derivative leaves ~2e-6 of stencil truncation at step 0.02.
    assert abs(oc.drift_value(lambda u: u * u, 1.0, z0) - 2.0) <= 1e-10
    assert abs(oc.drift_value(lambda u: u**3, 1.0, z0) - 3.0) <= 1e-5


def test_scalar_frozen_fraction():
    # (n-1) ric_perp/xi + ric_rad/lam = -7/12 - 17/108 = -20/27.
    val = oc.scalar_value(*QUAD, oc.axis_point(1.0, 2))
    assert abs(val - (-20.0 / 27.0)) <= 2e-6


def test_curvature_tensor_component_fractions():
    # Unit-frame components at u = 1 for the quadratic potential:
    # radial sectional (-2 + 4/3)/9 = -2/27, mixed (-1 + 1/2)/6 = -1/12,
    # transverse -2 P''/xi^2 = -1/2.
    z0 = oc.axis_point(1.0, 2)
    g0 = oc.metric_field(*QUAD)(z0)
    lam, xi = np.real(g0[0, 0]), np.real(g0[1, 1])
    ten = oc.curvature_tensor(*QUAD, z0)
    assert abs(ten[0, 0, 0, 0] / lam**2 - (-2.0 / 27.0)) <= 1e-8
    assert abs(ten[0, 0, 1, 1] / (lam * xi) - (-1.0 / 12.0)) <= 1e-8
    assert abs(ten[1, 1, 1, 1] / xi**2 - (-0.5)) <= 1e-8


def test_curvature_tensor_symmetries():
    ten = oc.curvature_tensor(*LOGP, oc.axis_point(0.7, 2))
    scale = np.max(np.abs(ten))
    # Exchange of the unbarred pair and Hermitian conjugation symmetry.
    assert np.max(np.abs(ten - np.transpose(ten, (2, 1, 0, 3)))) <= 1e-6 * scale
    flipped = np.conj(np.transpose(ten, (1, 0, 3, 2)))
    assert np.max(np.abs(ten - flipped)) <= 1e-6 * scale


def test_curvature_contracts_to_ricci():
    z0 = oc.axis_point(1.3, 2)
    g0 = oc.metric_field(*LOGP)(z0)
    ten = oc.curvature_tensor(*LOGP, z0)
    ric = oc.ricci_matrix(*LOGP, z0)
    assert np.max(np.abs(oc.ricci_from_tensor(ten, g0) - ric)) <= 5e-6


def test_frame_norm_rejects_off_axis_metric():
    g = np.array([[2.0, 0.5], [0.5, 1.0]], dtype=complex)
    with pytest.raises(ValueError):
        oc.frame_norm(np.zeros((2, 2), dtype=complex), g)


def test_frame_norm_flat_weights():
    ten = np.zeros((2, 2), dtype=complex)
    ten[0, 0] = 3.0
    ten[1, 1] = 4.0
    assert oc.frame_norm(ten, np.eye(2, dtype=complex)) == pytest.approx(5.0)


# --------------------------------------- package against the oracle

@pytest.fixture(scope="module")
def quad_metric(grid):
    return metric_eigenvalues(sample_function(grid, lambda u: u + 0.5 * u * u), 2)


@pytest.fixture(scope="module")
def log_metric(grid):
    return metric_eigenvalues(sample_function(grid, lambda u: u + np.log1p(u)), 2)


def test_ricci_components_match_oracle(grid, points, quad_metric):
    rp, rr = ricci_profile(quad_metric)
    for i in points:
        z0 = oc.axis_point(grid.nodes[i], 2)
        ric = oc.ricci_matrix(*QUAD, z0)
        assert rr.values[i] == pytest.approx(np.real(ric[0, 0]), rel=1e-5)
        assert rp.values[i] == pytest.approx(np.real(ric[1, 1]), rel=1e-5)


def test_laplacian_matches_oracle(grid, points, quad_metric):
    # Isolate the pure Laplacian by linearity in the drift scale:
    # 2 D(a=1) - D(a=2) removes the a u h' term. Measured floor 7e-13.
    h = sample_function(grid, lambda u: u * u)
    d1 = drift_laplacian(h, quad_metric, VectorFieldScale(1.0))
    d2 = drift_laplacian(h, quad_metric, VectorFieldScale(2.0))
    for i in points:
        z0 = oc.axis_point(grid.nodes[i], 2)
        pure = 2.0 * d1.values[i] - d2.values[i]
        assert pure == pytest.approx(
            oc.laplacian_value(*QUAD, lambda u: u * u, z0), rel=1e-9
        )
        full = oc.laplacian_value(*QUAD, lambda u: u * u, z0) + oc.drift_value(
            lambda u: u * u, 1.0, z0
        )
        assert d1.values[i] == pytest.approx(full, rel=1e-9)


def test_scalar_curvature_matches_oracle(grid, points, quad_metric):
    s = scalar_curvature(quad_metric)
    for i in points:
        z0 = oc.axis_point(grid.nodes[i], 2)
        assert s.values[i] == pytest.approx(oc.scalar_value(*QUAD, z0), rel=1e-5)


def test_curvature_norm_matches_oracle_quadratic(grid, points, quad_metric):
    nrm = curvature_norm(quad_metric)
    for i in points:
        z0 = oc.axis_point(grid.nodes[i], 2)
        assert nrm.values[i] == pytest.approx(
            oc.curvature_norm_value(*QUAD, z0), rel=1e-3
        )


def test_curvature_norm_matches_oracle_logarithmic(grid, points, log_metric):
    # Non-polynomial potential exercises the composed third and fourth
    # derivative stencils; measured agreement 3.2e-6 relative.
    nrm = curvature_norm(log_metric)
    for i in points:
        z0 = oc.axis_point(grid.nodes[i], 2)
        assert nrm.values[i] == pytest.approx(
            oc.curvature_norm_value(*LOGP, z0), rel=1e-4
        )
