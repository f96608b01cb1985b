"""Closed-form Kahler geometry of U(n)-invariant metrics on C^n.

A rotation-invariant Kahler metric is encoded by a potential P(u) with
u = |z|^2; its Hermitian form g_ij = P' delta_ij + P'' zbar_i z_j has the
eigenvalue pair

    lam_perp = P'(u)            (multiplicity n - 1, transverse directions)
    lam_rad  = (u P')' = P' + u P''   (the complex radial direction)

and determinant det g = lam_perp^(n-1) * lam_rad. Every geometric quantity
in this module (Ricci eigenvalues, scalar curvature, drift Laplacian,
Hamiltonian potential, curvature norm, Christoffel data) reduces to radial
profiles in these eigenvalues; the reductions were cross-checked against a
Cartesian finite-difference oracle on C^2, see tests/test_oracles.py.

Since every representable function depends on u = |z|^2 alone, the rotation
field J(radial) annihilates all of them identically; that invariance is
structural and carries no runtime check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from expanderlab.grid import (
    DomainError,
    Profile,
    derivative,
    derivative_chain_ld,
    derivative_values,
    operators,
)

NORMALIZATION_RESIDUAL_WARN = 1e-6


class PositivityError(ValueError):
    """A metric eigenvalue fails to be strictly positive somewhere."""


@dataclass(frozen=True)
class VectorFieldScale:
    """Strength of the radial soliton vector field.

    The field acts on invariant functions by X.h = 2 a u h'(u); its rotation
    partner acts by zero. ``a`` must be positive (expanding orientation).
    """

    a: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and self.a > 0.0):
            raise DomainError(f"vector field scale must be positive, got {self.a}")


@dataclass(frozen=True, eq=False)
class InvariantMetric:
    """A U(n)-invariant Kahler metric in radial eigenvalue form.

    Both eigenvalue profiles must be strictly positive at every node; the
    constructor rejects degenerate data naming the first bad node. The
    structural relation lam_rad = lam_perp + u (lam_perp)' holds up to
    finite-difference truncation and is certified in tests on smooth
    metrics (see :func:`consistency_defect`); it is not a constructor gate
    because rough-but-valid perturbations (compactly supported bumps) carry
    large high-order derivatives that inflate the two-route defect.
    """

    n: int
    P: Profile
    lam_perp: Profile
    lam_rad: Profile

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise DomainError(f"complex dimension must be an integer >= 2, got {self.n!r}")
        for name, prof in (("lam_perp", self.lam_perp), ("lam_rad", self.lam_rad)):
            vals = prof.values
            bad = np.flatnonzero(~(vals > 0.0) | ~np.isfinite(vals))
            if bad.size:
                i = int(bad[0])
                raise PositivityError(
                    f"metric degenerate: {name} = {vals[i]!r} at node {i} "
                    f"(u = {prof.grid.nodes[i]:.6g})"
                )

    @property
    def grid(self):
        return self.P.grid


def metric_eigenvalues(potential: Profile, n: int) -> InvariantMetric:
    """Metric eigenvalue pair of the potential: (P', P' + u P'')."""
    xi = derivative(potential, 1)
    u = potential.grid.nodes
    lam = Profile(potential.grid, xi.values + u * derivative(potential, 2).values)
    return InvariantMetric(n, potential, xi, lam)


def consistency_defect(m: InvariantMetric) -> float:
    """sup |lam_rad - lam_perp - u (lam_perp)'| over the grid."""
    u = m.grid.nodes
    dxi = derivative(m.lam_perp, 1).values
    return float(np.max(np.abs(m.lam_rad.values - m.lam_perp.values - u * dxi)))


def perturbed_metric(m: InvariantMetric, psi: Profile) -> InvariantMetric:
    """Metric of the shifted potential P + psi.

    The eigenvalues are perturbed additively — lam_perp + psi',
    lam_rad + psi' + u psi'' — so a background with exactly stored
    eigenvalues keeps its precision and only the perturbation pays the
    finite-difference truncation. Raises :class:`PositivityError` (naming
    the first degenerate node and component) when psi is too large for a
    positive metric.
    """
    if psi.grid is not m.grid:
        raise DomainError("perturbation and metric live on different grids")
    u = m.grid.nodes
    d1 = derivative_values(m.grid, psi.values, 1)
    d2 = derivative_values(m.grid, psi.values, 2)
    return InvariantMetric(
        m.n,
        Profile(m.grid, m.P.values + psi.values),
        Profile(m.grid, m.lam_perp.values + d1),
        Profile(m.grid, m.lam_rad.values + d1 + u * d2),
    )


def _ricci_chain_ld(
    m: InvariantMetric,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(u, lam_perp, lam_rad, ric_perp, ric_rad) in extended precision.

    With Q = log det g = (n-1) log lam_perp + log lam_rad, the Ricci
    eigenvalues are ric_perp = -Q' and ric_rad = -(u Q')' = -(Q' + u Q'').
    The chain starts from the stored eigenvalue profiles (ulp-level noise)
    rather than re-deriving them from P: differentiating Q twice multiplies
    per-node noise by 5.3/(u h^2) ~ 2e7 at the inner edge of the default
    grid, so feeding it the ~1e-12 that two derivatives of a stored
    potential carry there would cost four orders of residual accuracy.
    Everything stays in extended precision until the caller rounds, which
    soliton certification relies on. On log-law grids the differentiation
    runs in s = log u (see :func:`expanderlab.grid.derivative_chain_ld`):
    Q is asymptotically linear in s for conical metrics, which keeps the
    boundary-row truncation out of the certified residuals.
    """
    u = m.grid.nodes.astype(np.longdouble)
    xi = m.lam_perp.values.astype(np.longdouble)
    lam = m.lam_rad.values.astype(np.longdouble)
    q = (m.n - 1) * np.log(xi) + np.log(lam)
    q1, q2 = derivative_chain_ld(m.grid, q)
    return u, xi, lam, -q1, -(q1 + u * q2)


def ricci_profile(m: InvariantMetric) -> tuple[Profile, Profile]:
    """Ricci eigenvalue pair (transverse, radial).

    With Q = log det g = (n-1) log lam_perp + log lam_rad, the Ricci
    eigenvalues are ric_perp = -Q' and ric_rad = -(u Q')' = -(Q' + u Q'').
    """
    _, _, _, rp, rr = _ricci_chain_ld(m)
    return (
        Profile(m.grid, rp.astype(np.float64)),
        Profile(m.grid, rr.astype(np.float64)),
    )


def scalar_curvature(m: InvariantMetric) -> Profile:
    """Trace of the Ricci eigenvalues against the metric eigenvalues."""
    _, xi, lam, rp, rr = _ricci_chain_ld(m)
    vals = (m.n - 1) * rp / xi + rr / lam
    return Profile(m.grid, vals.astype(np.float64))


def drift_laplacian(h: Profile, m: InvariantMetric, scale: VectorFieldScale) -> Profile:
    """Laplacian of h plus the half-field drift a u h'.

    The plain Laplacian of an invariant function is
    (n-1) h' / lam_perp + (h' + u h'') / lam_rad.
    """
    u = m.grid.nodes
    h1 = derivative(h, 1).values
    h2 = derivative(h, 2).values
    lap = (m.n - 1) * h1 / m.lam_perp.values + (h1 + u * h2) / m.lam_rad.values
    return Profile(m.grid, lap + scale.a * u * h1)


def holomorphic_gradient_sq(h: Profile, m: InvariantMetric) -> Profile:
    """|partial h|^2 = u h'^2 / lam_rad (holomorphic-slot gradient square)."""
    u = m.grid.nodes
    h1 = derivative(h, 1).values
    return Profile(m.grid, u * h1 * h1 / m.lam_rad.values)


def gradient_norm_sq(h: Profile, m: InvariantMetric) -> Profile:
    """Real gradient square |grad h|^2 = 2 u h'^2 / lam_rad."""
    p = holomorphic_gradient_sq(h, m)
    return Profile(m.grid, 2.0 * p.values)


def hamiltonian_potential(m: InvariantMetric, scale: VectorFieldScale) -> Profile:
    """The field's Hamiltonian potential f = a u P' + c.

    The additive constant is pinned by the normalization
    f = |partial f|^2 + R + n: c is the Chebyshev center of the defect
    a u P' - |partial f|^2 - R - n over interior nodes, which minimizes the
    sup-norm residual. A residual above 1e-6 triggers a warning (the metric
    is then not an exact soliton) but the potential is still returned.
    """
    grid = m.grid
    u, xi, lam, rp, rr = _ricci_chain_ld(m)
    scal = (m.n - 1) * rp / xi + rr / lam
    xi1, _ = derivative_chain_ld(grid, xi)
    f1 = scale.a * (xi + u * xi1)
    core = scale.a * u * xi
    v = np.asarray(core - u * f1 * f1 / lam - scal - m.n, dtype=np.float64)
    sl = grid.interior()
    c = -0.5 * (np.max(v[sl]) + np.min(v[sl]))
    residual = float(np.max(np.abs(v[sl] + c)))
    if residual > NORMALIZATION_RESIDUAL_WARN:
        warnings.warn(
            f"Hamiltonian normalization residual {residual:.3e} exceeds "
            f"{NORMALIZATION_RESIDUAL_WARN:.0e}; the metric is not an exact soliton",
            RuntimeWarning,
            stacklevel=2,
        )
    return Profile(grid, np.asarray(core, dtype=np.float64) + c)


def curvature_components(m: InvariantMetric) -> tuple[Profile, Profile, Profile]:
    """Unit-frame curvature components (radial, mixed, transverse).

    For a U(n)-invariant metric the curvature tensor has three independent
    components: the holomorphic sectional curvature of the radial direction
    (A), the bisectional curvature between the radial and a transverse
    direction (B), and the transverse holomorphic sectional curvature (C);
    the transverse-transverse bisectional component equals C/2. With
    lam = lam_rad, xi = lam_perp:

        A = (-(u^2 P'''' + 4u P''' + 2 P'') + u (2P'' + uP''')^2 / lam) / lam^2
        B = (-(u P''' + P'') + u P''^2 / xi) / (lam xi)
        C = -2 P'' / xi^2

    The third and fourth derivatives come from composed stencils, so the
    outermost rows lose formal order; consumers weight interior nodes.
    """
    grid = m.grid
    p2 = derivative_values(grid, m.P.values, 2)
    p3 = derivative_values(grid, m.P.values, 3)
    p4 = derivative_values(grid, m.P.values, 4)
    a, b, c = curvature_components_from(
        grid.nodes, m.lam_perp.values, m.lam_rad.values, p2, p3, p4
    )
    return Profile(grid, a), Profile(grid, b), Profile(grid, c)


def curvature_components_from(u, xi, lam, p2, p3, p4):
    """Component triple (A, B, C) from supplied potential derivatives.

    Dtype-preserving algebra shared by :func:`curvature_components` and
    extended-precision consumers that bring their own derivative chain.
    """
    a = (
        -(u * u * p4 + 4.0 * u * p3 + 2.0 * p2)
        + u * (2.0 * p2 + u * p3) ** 2 / lam
    ) / (lam * lam)
    b = (-(u * p3 + p2) + u * p2 * p2 / xi) / (lam * xi)
    c = -2.0 * p2 / (xi * xi)
    return a, b, c


def curvature_norm_sq_from(a, b, c, n: int):
    """|Rm|^2 from the component triple and the dimension's multiplicities."""
    return (
        a * a
        + 4.0 * (n - 1) * b * b
        + (n - 1) * c * c
        + 0.5 * (n - 1) * (n - 2) * c * c
    )


def curvature_norm(m: InvariantMetric, with_trust: bool = False):
    """Pointwise norm |Rm| of the curvature tensor.

    |Rm|^2 = A^2 + 4(n-1) B^2 + (n-1) C^2 + (n-1)(n-2) C^2 / 2 from the
    component multiplicities of the U(n) decomposition. When ``with_trust``
    is set, also returns the slice of nodes where the composed high-order
    stencils keep full resolution (the truncated-domain band is the
    EDGE_GUARD margin on each side).
    """
    a, b, c = curvature_components(m)
    sq = curvature_norm_sq_from(a.values, b.values, c.values, m.n)
    out = Profile(m.grid, np.sqrt(sq))
    if with_trust:
        return out, m.grid.interior()
    return out


def christoffel_coefficients(m: InvariantMetric) -> tuple[Profile, Profile]:
    """Radial coefficient pair (gamma_a, gamma_b) of the Christoffel symbols.

    Gamma^p_{mi} = gamma_a (zbar_m delta_ip + zbar_i delta_mp)
                   + gamma_b zbar_m zbar_i z_p
    with gamma_a = P''/lam_perp and
    gamma_b = (P''' - (P''/lam_rad)(2P'' + uP''')) / lam_perp.
    """
    grid = m.grid
    u = grid.nodes
    p2 = derivative_values(grid, m.P.values, 2)
    p3 = derivative_values(grid, m.P.values, 3)
    xi = m.lam_perp.values
    lam = m.lam_rad.values
    gamma_a = p2 / xi
    gamma_b = (p3 - (p2 / lam) * (2.0 * p2 + u * p3)) / xi
    return Profile(grid, gamma_a), Profile(grid, gamma_b)


def christoffel_gap(reference: InvariantMetric, m: InvariantMetric) -> Profile:
    """Squared norm, in ``m``, of the Christoffel difference to ``reference``.

    The difference of the two connections is a tensor; its radial squared
    norm is u/lam_rad(m) * [ (lam'/lam gap)^2 + 2(n-1) (xi'/xi gap)^2 ].
    """
    if m.n != reference.n:
        raise DomainError("metrics have different complex dimension")
    u = m.grid.nodes

    def log_derivs(metric: InvariantMetric) -> tuple[np.ndarray, np.ndarray]:
        dlam = derivative(metric.lam_rad, 1).values / metric.lam_rad.values
        dxi = derivative(metric.lam_perp, 1).values / metric.lam_perp.values
        return dlam, dxi

    dlam_m, dxi_m = log_derivs(m)
    dlam_r, dxi_r = log_derivs(reference)
    gap = (dlam_m - dlam_r) ** 2 + 2.0 * (m.n - 1) * (dxi_m - dxi_r) ** 2
    return Profile(m.grid, u / m.lam_rad.values * gap)


def trace_ratio(numerator: InvariantMetric, denominator: InvariantMetric) -> Profile:
    """Trace of ``numerator`` measured in ``denominator``.

    tr_{g_den} g_num = (n-1) lam_perp_num / lam_perp_den
                       + lam_rad_num / lam_rad_den.
    """
    if numerator.n != denominator.n:
        raise DomainError("metrics have different complex dimension")
    vals = (numerator.n - 1) * numerator.lam_perp.values / denominator.lam_perp.values
    vals = vals + numerator.lam_rad.values / denominator.lam_rad.values
    return Profile(numerator.grid, vals)
