"""Cartesian finite-difference oracles on C^n.

These helpers recompute geometric quantities of rotation-invariant Kahler
metrics directly in coordinates on C^n ~ R^(2n): the metric is an explicit
Hermitian matrix field g[i, j] = p1(u) delta_ij + p2(u) zbar_i z_j with
u = |z|^2, and every derivative is a Wirtinger combination of fourth-order
real central differences. Nothing here touches the radial eigenvalue
machinery of the package, so agreement between the two paths is an
end-to-end check of the radial reduction, not a tautology.

Evaluation points sit on the first coordinate axis, z0 = (sqrt(u), 0, ...),
where the rotation stabilizer forces the metric to be diagonal with entries
diag(lam_rad, lam_perp, ..., lam_perp); every invariant quantity is
determined by its value there.

Index conventions used throughout:
  - matrices: row = unbarred slot, column = barred slot, g[i, j] = g_{i jbar};
  - the inverse pairing is g^{i jbar} = M[j, i] with M = inv(g), fixed by
    laplacian = trace(M @ hessian);
  - curvature storage R[i, j, k, l] = R_{i jbar k lbar} with
    R_{i jbar k lbar} = -d_k d_lbar g_{i jbar}
                        + g^{p qbar} (d_k g_{i qbar}) (d_lbar g_{p jbar}).
"""

import functools

import numpy as np

DEFAULT_STEP = 0.02

# Fourth-order central first-derivative weights on offsets (-2,-1,1,2)/eps.
_W = (1.0, -8.0, 8.0, -1.0)


def axis_point(u, n):
    """Representative point with |z|^2 = u on the first coordinate axis."""
    z = np.zeros(n, dtype=complex)
    z[0] = np.sqrt(u)
    return z


def line_derivative(func, z0, direction, eps=DEFAULT_STEP):
    """d/dt func(z0 + t*direction) at t = 0, fourth order."""
    return (
        _W[0] * func(z0 - 2.0 * eps * direction)
        + _W[1] * func(z0 - eps * direction)
        + _W[2] * func(z0 + eps * direction)
        + _W[3] * func(z0 + 2.0 * eps * direction)
    ) / (12.0 * eps)


def complex_partial(func, z0, index, conjugate=False, eps=DEFAULT_STEP):
    """Wirtinger derivative d/dz_index (or d/dzbar_index) of a scalar field."""
    e = np.zeros(len(z0), dtype=complex)
    e[index] = 1.0
    dx = line_derivative(func, z0, e, eps)
    dy = line_derivative(func, z0, 1j * e, eps)
    return 0.5 * (dx + 1j * dy) if conjugate else 0.5 * (dx - 1j * dy)


def mixed_hessian(func, z0, eps=DEFAULT_STEP):
    """Matrix of d_i d_jbar func at z0 (row unbarred, column barred)."""
    n = len(z0)
    out = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            inner = functools.partial(
                complex_partial, func, index=j, conjugate=True, eps=eps
            )
            out[i, j] = complex_partial(inner, z0, i, conjugate=False, eps=eps)
    return out


def metric_field(p1, p2):
    """Hermitian matrix field of the metric with radial profile (p1, p2).

    p1 and p2 are scalar callables of u = |z|^2: the first and second
    derivative of the underlying radial potential.
    """

    def field(z):
        u = float(np.real(np.vdot(z, z)))
        return p1(u) * np.eye(len(z), dtype=complex) + p2(u) * np.outer(
            np.conj(z), z
        )

    return field


def _log_det(field):
    def func(z):
        return np.linalg.slogdet(field(z))[1]

    return func


def ricci_matrix(p1, p2, z0, eps=DEFAULT_STEP):
    """Ricci form components -d_i d_jbar log det g at z0."""
    return -mixed_hessian(_log_det(metric_field(p1, p2)), z0, eps)


def laplacian_value(p1, p2, h, z0, eps=DEFAULT_STEP):
    """Complex Laplacian g^{i jbar} d_i d_jbar h(|z|^2) at z0."""
    hess = mixed_hessian(lambda z: h(float(np.real(np.vdot(z, z)))), z0, eps)
    g0 = metric_field(p1, p2)(z0)
    return float(np.real(np.trace(np.linalg.inv(g0) @ hess)))


def drift_value(h, a, z0, eps=DEFAULT_STEP):
    """Half the radial vector field applied to h: a * u * h'(u).

    Computed as (a/2) d/dt h(|(1+t) z0|^2) at t = 0, i.e. a genuine
    directional derivative along the dilation orbit through z0.
    """
    u0 = float(np.real(np.vdot(z0, z0)))

    def along(t):
        return h((1.0 + t) ** 2 * u0)

    slope = (
        _W[0] * along(-2.0 * eps)
        + _W[1] * along(-eps)
        + _W[2] * along(eps)
        + _W[3] * along(2.0 * eps)
    ) / (12.0 * eps)
    return 0.5 * a * slope


def scalar_value(p1, p2, z0, eps=DEFAULT_STEP):
    """Scalar curvature g^{i jbar} Ric_{i jbar} at z0."""
    g0 = metric_field(p1, p2)(z0)
    ric = ricci_matrix(p1, p2, z0, eps)
    return float(np.real(np.trace(np.linalg.inv(g0) @ ric)))


def curvature_tensor(p1, p2, z0, eps=DEFAULT_STEP):
    """Kahler curvature tensor R[i, j, k, l] = R_{i jbar k lbar} at z0."""
    field = metric_field(p1, p2)
    n = len(z0)
    g0 = field(z0)
    inv = np.linalg.inv(g0)

    def entry(i, j):
        return lambda z: field(z)[i, j]

    d_g = np.empty((n, n, n), dtype=complex)  # d_g[k, i, q] = d_k g_{i qbar}
    dbar_g = np.empty((n, n, n), dtype=complex)  # dbar_g[l, p, j] = d_lbar g_{p jbar}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                d_g[k, i, j] = complex_partial(entry(i, j), z0, k, False, eps)
                dbar_g[k, i, j] = complex_partial(entry(i, j), z0, k, True, eps)
    d2_g = np.empty((n, n, n, n), dtype=complex)  # d2_g[k, l, i, j]
    for i in range(n):
        for j in range(n):
            d2_g[:, :, i, j] = mixed_hessian(entry(i, j), z0, eps)

    # g^{p qbar} = inv[q, p]; quadratic connection term of the curvature.
    quad = np.einsum("qp,kiq,lpj->ijkl", inv, d_g, dbar_g)
    first = -np.transpose(d2_g, (2, 3, 0, 1))
    return first + quad


def ricci_from_tensor(tensor, g0):
    """Contract the last index pair: Ric[i, j] = g^{k lbar} R[i, j, k, l]."""
    inv = np.linalg.inv(g0)
    return np.einsum("lk,ijkl->ij", inv, tensor)


def frame_norm(tensor, g0, atol=1e-12):
    """Norm of a tensor with alternating (unbarred, barred) slots.

    Contracts every slot with the inverse metric; at an axis point g0 is
    diagonal, so this is the root-sum-square of unitary-frame components
    weighted by the eigenvalue of each slot.
    """
    off = g0 - np.diag(np.diag(g0))
    if np.max(np.abs(off)) > atol * np.max(np.abs(g0)):
        raise ValueError("frame_norm expects a diagonal metric (axis point)")
    w = 1.0 / np.real(np.diag(g0))
    weight = functools.reduce(np.multiply.outer, [w] * tensor.ndim)
    return float(np.sqrt(np.sum(np.abs(tensor) ** 2 * weight)))


def curvature_norm_value(p1, p2, z0, eps=DEFAULT_STEP):
    """Pointwise curvature tensor norm |Rm| at z0."""
    g0 = metric_field(p1, p2)(z0)
    return frame_norm(curvature_tensor(p1, p2, z0, eps), g0)


def christoffel_matrix(p1, p2, z0, eps=DEFAULT_STEP):
    """Connection coefficients Gamma^p_{m i} = g^{p qbar} d_m g_{i qbar}."""
    field = metric_field(p1, p2)
    n = len(z0)
    inv = np.linalg.inv(field(z0))
    d_g = np.empty((n, n, n), dtype=complex)
    for m in range(n):
        d_g[m] = complex_partial(field, z0, m, conjugate=False, eps=eps)
    return np.einsum("qp,miq->pmi", inv, d_g)


def covariant_extend(field, slot_types, p1, p2, z0, barred=False, eps=DEFAULT_STEP):
    """Covariant derivative of an array-valued tensor field at z0.

    Prepends one slot of the requested type: the partial derivative of the
    field minus one Christoffel contraction per slot of matching chirality
    (unbarred slots for an unbarred derivative, barred for barred; the
    barred coefficients are the conjugates of the unbarred ones).
    """
    n = len(z0)
    chris = christoffel_matrix(p1, p2, z0, eps)
    base = field(z0)
    out = np.empty((n,) + base.shape, dtype=complex)
    for ell in range(n):
        deriv = complex_partial(field, z0, ell, conjugate=barred, eps=eps)
        corr = np.zeros_like(base)
        for s, typ in enumerate(slot_types):
            if typ != ("a" if barred else "h"):
                continue
            gam = chris[:, ell, :]
            if barred:
                gam = np.conj(gam)
            moved = np.moveaxis(base, s, 0)
            corr += np.moveaxis(np.einsum("pi,p...->i...", gam, moved), 0, s)
        out[ell] = deriv - corr
    return out


def tensor_derivative_norms(p1, p2, s, r, z0, eps=DEFAULT_STEP):
    """(|T|, |nabla T|, |nabla^2 T|) for T = s(u) delta + r(u) zbar (x) z.

    All derivative types are computed independently and summed in
    quadrature: two first-derivative families, four second-derivative
    families. Every Christoffel symbol is rebuilt by finite differences at
    whatever point the nesting requests.
    """
    t_field = metric_field(s, r)
    g0 = metric_field(p1, p2)(z0)
    types1 = ("h", "a")

    def first(barred):
        def fld(z):
            return covariant_extend(t_field, types1, p1, p2, z, barred, eps)

        return fld

    grad_h, grad_a = first(False), first(True)
    norm0 = frame_norm(t_field(z0), g0)
    norm1_sq = frame_norm(grad_h(z0), g0) ** 2 + frame_norm(grad_a(z0), g0) ** 2
    norm2_sq = 0.0
    for inner, inner_types in ((grad_h, ("h",) + types1), (grad_a, ("a",) + types1)):
        for outer_barred in (False, True):
            ext = covariant_extend(inner, inner_types, p1, p2, z0, outer_barred, eps)
            norm2_sq += frame_norm(ext, g0) ** 2
    return norm0, float(np.sqrt(norm1_sq)), float(np.sqrt(norm2_sq))


def sample_indices(grid, lo=0.12, hi=9.0, count=5):
    """Indices of ``count`` nodes spread geometrically through [lo, hi].

    The band stays inside the resolution-trusted middle of the default
    domain, away from the storage-noise floors of the boundary decades.
    """
    targets = np.geomspace(lo, hi, count)
    return sorted({int(np.argmin(np.abs(grid.nodes - t))) for t in targets})
