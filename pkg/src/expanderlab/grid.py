"""Radial grids, sampled profiles, and finite-difference calculus.

Every rotation-invariant quantity in the package lives on a one-dimensional
radial grid in u = |z|^2. This module owns the grid and profile containers,
high-order derivative operators, weighted sup norms, cubic resampling, and
CSV round-tripping. Everything downstream (geometry, solitons, the flow)
builds on these primitives, so their error behaviour is pinned by tests.

Derivatives use six-point stencils whose weights are solved per node from
the actual u-coordinates of the window (one-sided at the boundary rows). On
a uniform-in-log-u grid this is the log-u stencil with the geometric spacing
correction made exact: polynomials in u differentiate to machine precision,
smooth profiles see at least fourth-order accuracy, and the operators stay
within bandwidth five of the diagonal, which the implicit flow stepper
relies on.

Floating-point layout: weights are refined and applied in 80-bit extended
precision against locally centered values (v_j - v_i), because the second
derivative at the innermost nodes amplifies white rounding noise by
1/(u h)^2 ~ 4e9 on the default grid; plain double evaluation would put a
~1e-5 noise floor under every curvature-type residual. Public results are
rounded back to float64; chains that must not touch down in float64 midway
(Ricci, soliton certification) use ``apply_ld`` end to end.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

LOG_LAW = "uniform-in-log-u"
LINEAR_LAW = "uniform-in-u"

# Bandwidth of every derivative operator: |i - j| <= BANDWIDTH for all
# nonzero entries, including the one-sided boundary rows.
BANDWIDTH = 5

# Interior nodes exclude this many nodes at each end; sup norms and residual
# certifications are taken there, away from the one-sided stencil rows.
EDGE_GUARD = 3


class DomainError(ValueError):
    """An input violates a domain precondition (sign, range, shape)."""


class ExtrapolationError(ValueError):
    """A resampling target reaches outside the source grid's range."""


class NonFiniteError(ValueError):
    """A profile carries NaN or Inf where finite values are required."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes in u = |z|^2 with a spacing law.

    Parameters
    ----------
    u_min, u_max : float
        Positive domain endpoints, ``0 < u_min < u_max``.
    nodes : numpy.ndarray
        The node coordinates; must match the endpoints and the spacing law.
    spacing_law : str
        Either ``"uniform-in-log-u"`` or ``"uniform-in-u"``. The law must
        hold to a relative tolerance of 1e-12.
    """

    u_min: float
    u_max: float
    nodes: np.ndarray
    spacing_law: str

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if not (0.0 < self.u_min < self.u_max):
            raise DomainError(
                f"need 0 < u_min < u_max, got ({self.u_min}, {self.u_max})"
            )
        if nodes.ndim != 1 or nodes.size < 16:
            raise DomainError(f"need at least 16 nodes, got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise NonFiniteError("grid nodes must be finite")
        if not np.all(np.diff(nodes) > 0.0):
            raise DomainError("grid nodes must be strictly increasing")
        if not (
            np.isclose(nodes[0], self.u_min, rtol=1e-12, atol=0.0)
            and np.isclose(nodes[-1], self.u_max, rtol=1e-12, atol=0.0)
        ):
            raise DomainError("endpoint nodes must equal (u_min, u_max)")
        if self.spacing_law == LOG_LAW:
            steps = np.diff(np.log(nodes))
        elif self.spacing_law == LINEAR_LAW:
            steps = np.diff(nodes)
        else:
            raise DomainError(f"unknown spacing law {self.spacing_law!r}")
        if np.max(np.abs(steps - steps[0])) > 1e-12 * abs(steps[0]) + 1e-15:
            raise DomainError(f"nodes do not follow {self.spacing_law}")
        nodes.flags.writeable = False

    @classmethod
    def log_spaced(cls, u_min: float, u_max: float, n: int) -> "RadialGrid":
        """Build a uniform-in-log-u grid with ``n`` nodes."""
        if not (0.0 < u_min < u_max):
            raise DomainError(f"need 0 < u_min < u_max, got ({u_min}, {u_max})")
        nodes = np.exp(np.linspace(np.log(u_min), np.log(u_max), n))
        # Pin the endpoints exactly; exp/log round-trip can drift 1 ulp.
        nodes[0], nodes[-1] = u_min, u_max
        return cls(u_min, u_max, nodes, LOG_LAW)

    @classmethod
    def linear(cls, u_min: float, u_max: float, n: int) -> "RadialGrid":
        """Build a uniform-in-u grid with ``n`` nodes."""
        nodes = np.linspace(u_min, u_max, n)
        return cls(u_min, u_max, nodes, LINEAR_LAW)

    @classmethod
    def default(cls) -> "RadialGrid":
        """The package-wide default: log-spaced, u in [1e-3, 1e4], N = 1024."""
        return cls.log_spaced(1e-3, 1e4, 1024)

    @property
    def n(self) -> int:
        return self.nodes.size

    def same_nodes(self, other: "RadialGrid") -> bool:
        """True when both grids carry bitwise-identical nodes."""
        return self.nodes.shape == other.nodes.shape and bool(
            np.array_equal(self.nodes, other.nodes)
        )

    def interior(self) -> slice:
        """Index slice excluding EDGE_GUARD nodes at each end."""
        return slice(EDGE_GUARD, self.n - EDGE_GUARD)

    def subgrid(self, start: int, stop: int) -> "RadialGrid":
        """Contiguous node range [start, stop) as a new grid, same law."""
        nodes = self.nodes[start:stop].copy()
        if nodes.size < 16:
            raise DomainError("subgrid would have fewer than 16 nodes")
        return RadialGrid(nodes[0], nodes[-1], nodes, self.spacing_law)


@dataclass(frozen=True, eq=False)
class Profile:
    """A scalar quantity sampled on a :class:`RadialGrid`.

    Values are stored as read-only float64. Non-finite entries are allowed
    at rest (a diverging quantity is still inspectable); the derivative
    operators reject them with a :class:`NonFiniteError`.
    """

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != self.grid.nodes.shape:
            raise DomainError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.nodes.shape})"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "Profile":
        return Profile(self.grid, values)

    # Pointwise arithmetic keeps flow and diagnostics code readable. Grids
    # must be the identical object or bitwise equal.
    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Profile):
            if other.grid is not self.grid and not self.grid.same_nodes(other.grid):
                raise DomainError("profiles live on different grids")
            return other.values
        return np.asarray(other, dtype=np.float64)

    def __add__(self, other):
        return Profile(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Profile(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Profile(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return Profile(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Profile(self.grid, -self.values)


def _first_bad_node(values: np.ndarray, grid: RadialGrid) -> str:
    bad = np.flatnonzero(~np.isfinite(values))
    i = int(bad[0])
    return f"node {i} (u = {grid.nodes[i]:.6g})"


def _require_finite(values: np.ndarray, grid: RadialGrid, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} is non-finite at {_first_bad_node(values, grid)}")


def _solve_weights(x: np.ndarray, x0: np.longdouble, order: int) -> np.ndarray:
    """Stencil weights for the ``order``-th derivative at x0 from nodes x.

    Solves the Taylor-moment system sum_j w_j (x_j - x0)^r / r! = [r == order]
    after rescaling the offsets to unit size for conditioning, then polishes
    the float64 solution with two rounds of extended-precision iterative
    refinement. Exact for polynomials of degree < len(x); the refinement
    keeps the weight error near the 80-bit epsilon instead of the ~1e-13
    left by a plain double solve, which matters because second-derivative
    weights at the inner edge are ~1e9 in magnitude.
    """
    t = x.astype(np.longdouble) - np.longdouble(x0)
    scale = np.max(np.abs(t))
    t = t / scale
    w = len(x)
    a = np.empty((w, w), dtype=np.longdouble)
    a[0] = 1.0
    fact = np.longdouble(1.0)
    for r in range(1, w):
        fact *= r
        a[r] = t ** r / fact
    rhs = np.zeros(w, dtype=np.longdouble)
    rhs[order] = 1.0
    a64 = a.astype(np.float64)
    sol = np.linalg.solve(a64, rhs.astype(np.float64)).astype(np.longdouble)
    for _ in range(2):
        residual = rhs - a @ sol
        sol = sol + np.linalg.solve(a64, residual.astype(np.float64))
    return sol / scale ** order


class StencilOperator:
    """A boundary-aware finite-difference operator in matrix-free form.

    Rows are stored as (start index, weight row) pairs padded to a common
    width; ``apply`` gathers and contracts, ``add_rows_to_banded`` scatters
    ``diag(coeff) @ op`` into a LAPACK diagonal-ordered band array, which is
    exactly what the implicit flow stepper assembles.

    Application subtracts the row's own node value before contracting
    (weights of any derivative sum to zero, so this is an identity) and
    accumulates in extended precision: both are needed to keep the inner
    second-derivative rows, whose weights reach ~1e9, from manufacturing
    ~1e-7 of rounding noise out of O(1) data.
    """

    def __init__(self, starts: np.ndarray, weights_ld: np.ndarray):
        self.starts = starts
        self.weights_ld = weights_ld
        self.weights = weights_ld.astype(np.float64)
        n, w = weights_ld.shape
        self.index = starts[:, None] + np.arange(w)[None, :]

    def apply_ld(self, values_ld: np.ndarray) -> np.ndarray:
        """Extended-precision apply; longdouble in, longdouble out."""
        centered = values_ld[self.index] - values_ld[:, None]
        return np.einsum("ij,ij->i", self.weights_ld, centered)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.apply_ld(values.astype(np.longdouble)).astype(np.float64)

    def add_rows_to_banded(
        self, ab: np.ndarray, coeff: np.ndarray, upper: int = BANDWIDTH
    ) -> None:
        """ab[upper + i - j, j] += coeff[i] * op[i, j] for every stencil entry."""
        rows = np.arange(self.index.shape[0])[:, None]
        band = upper + rows - self.index
        np.add.at(ab, (band, self.index), coeff[:, None] * self.weights)


def _build_operator(nodes: np.ndarray, order: int) -> StencilOperator:
    # Window [i-2, i+3], clamped at the ends; exact through degree five.
    n = nodes.size
    width = 6
    nodes_ld = nodes.astype(np.longdouble)
    starts = np.empty(n, dtype=np.intp)
    weights = np.empty((n, width), dtype=np.longdouble)
    for i in range(n):
        start = min(max(i - 2, 0), n - width)
        starts[i] = start
        weights[i] = _solve_weights(nodes_ld[start : start + width], nodes_ld[i], order)
    return StencilOperator(starts, weights)


@functools.lru_cache(maxsize=64)
def operators(grid: RadialGrid) -> tuple[StencilOperator, StencilOperator]:
    """The (d/du, d2/du2) operator pair for a grid, built once and cached."""
    return _build_operator(grid.nodes, 1), _build_operator(grid.nodes, 2)


@functools.lru_cache(maxsize=64)
def log_operators(grid: RadialGrid) -> tuple[StencilOperator, StencilOperator]:
    """The (d/ds, d2/ds2) pair in s = log u, for log-law grids only.

    Power-law profiles (the conical regime of every quantity in this
    package) are smooth exponentials in s, so differentiating them in s
    keeps stencil truncation at its centered-uniform level even on the
    nearly one-sided boundary rows, where u-space windows on the same data
    lose several orders of magnitude. Logarithmic derivative chains should
    map back through u q' = q_s and u^2 q'' = q_ss - q_s.
    """
    if grid.spacing_law != LOG_LAW:
        raise DomainError("log-space operators require a uniform-in-log-u grid")
    s = np.log(grid.nodes)
    return _build_operator(s, 1), _build_operator(s, 2)


def derivative_chain_ld(grid: RadialGrid, values_ld: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second u-derivatives of an extended-precision profile.

    Routes through the s = log u operators on log-law grids (better
    truncation on power-law data, identical rounding-noise response) and
    through the plain u-space pair otherwise. Input and output are
    longdouble arrays.
    """
    if grid.spacing_law == LOG_LAW:
        ds1, ds2 = log_operators(grid)
        u = grid.nodes.astype(np.longdouble)
        v1 = ds1.apply_ld(values_ld)
        v2 = ds2.apply_ld(values_ld)
        return v1 / u, (v2 - v1) / (u * u)
    d1, d2 = operators(grid)
    return d1.apply_ld(values_ld), d2.apply_ld(values_ld)


def derivative(profile: Profile, order: int) -> Profile:
    """Differentiate a profile with respect to u.

    Parameters
    ----------
    profile : Profile
    order : int
        1 or 2. Higher derivatives are available through
        :func:`derivative_values` for internal consumers.

    Returns
    -------
    Profile on the same grid.
    """
    if order not in (1, 2):
        raise DomainError(f"derivative order must be 1 or 2, got {order}")
    _require_finite(profile.values, profile.grid, "profile")
    d1, d2 = operators(profile.grid)
    op = d1 if order == 1 else d2
    return Profile(profile.grid, op.apply(profile.values))


def derivative_values(grid: RadialGrid, values: np.ndarray, order: int) -> np.ndarray:
    """Raw derivative of sampled values, orders 1 through 4.

    Orders 3 and 4 compose the order-1/2 operators (d1 of d2, d2 of d2), so
    their boundary rows lose formal accuracy; curvature consumers read them
    on interior nodes only.
    """
    _require_finite(values, grid, "profile")
    d1, d2 = operators(grid)
    v = values.astype(np.longdouble)
    if order == 1:
        out = d1.apply_ld(v)
    elif order == 2:
        out = d2.apply_ld(v)
    elif order == 3:
        out = d1.apply_ld(d2.apply_ld(v))
    elif order == 4:
        out = d2.apply_ld(d2.apply_ld(v))
    else:
        raise DomainError(f"derivative order must be in 1..4, got {order}")
    return out.astype(np.float64)


def weighted_sup_norm(profile: Profile, weight_exponent: float, f_ref: Profile) -> float:
    """max over interior nodes of f_ref(u)^weight_exponent * |profile(u)|.

    ``f_ref`` must be strictly positive everywhere; interior excludes the
    outermost EDGE_GUARD nodes on each side, where one-sided stencils live.
    """
    if not profile.grid.same_nodes(f_ref.grid):
        raise DomainError("profile and reference weight live on different grids")
    if np.any(f_ref.values <= 0.0) or not np.all(np.isfinite(f_ref.values)):
        bad = np.flatnonzero(~(f_ref.values > 0.0) | ~np.isfinite(f_ref.values))
        i = int(bad[0])
        raise DomainError(
            f"reference weight must be positive; first violation at node {i} "
            f"(u = {profile.grid.nodes[i]:.6g}, value = {f_ref.values[i]!r})"
        )
    sl = profile.grid.interior()
    return float(
        np.max(f_ref.values[sl] ** weight_exponent * np.abs(profile.values[sl]))
    )


def resample(profile: Profile, target: RadialGrid) -> Profile:
    """Cubic-spline resampling (not-a-knot) onto another grid.

    Exact for cubic polynomials and at shared nodes; bitwise identity when
    the target carries the same nodes. Targets outside the source range
    raise :class:`ExtrapolationError`.
    """
    src = profile.grid
    if src.same_nodes(target):
        return Profile(target, profile.values)
    lo = src.nodes[0] * (1.0 - 1e-12)
    hi = src.nodes[-1] * (1.0 + 1e-12)
    if target.nodes[0] < lo or target.nodes[-1] > hi:
        raise ExtrapolationError(
            f"target range [{target.nodes[0]:.6g}, {target.nodes[-1]:.6g}] "
            f"reaches outside source [{src.nodes[0]:.6g}, {src.nodes[-1]:.6g}]"
        )
    _require_finite(profile.values, src, "profile")
    spline = CubicSpline(src.nodes, profile.values, bc_type="not-a-knot")
    return Profile(target, spline(np.clip(target.nodes, src.nodes[0], src.nodes[-1])))


def sample_function(grid: RadialGrid, fn) -> Profile:
    """Profile from a vectorized callable of u."""
    return Profile(grid, np.asarray(fn(grid.nodes), dtype=np.float64))


def write_profile_csv(profile: Profile, path: str) -> None:
    """Write ``u,value`` rows with 17 significant digits and LF endings."""
    from expanderlab.util import atomic_write_text, fmt17

    lines = ["u,value"]
    lines.extend(
        f"{fmt17(u)},{fmt17(v)}"
        for u, v in zip(profile.grid.nodes, profile.values)
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_profile_csv(path: str) -> Profile:
    """Read a profile written by :func:`write_profile_csv`.

    The spacing law is inferred from the nodes (log-uniform wins when both
    fit, which only happens for degenerate two-point data; grids here have
    at least 16 nodes so the laws are distinguishable).
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError(f"{path} is not a two-column u,value table")
    u, v = data[:, 0], data[:, 1]
    log_steps = np.diff(np.log(u))
    if np.max(np.abs(log_steps - log_steps[0])) <= 1e-9 * abs(log_steps[0]):
        law = LOG_LAW
    else:
        steps = np.diff(u)
        if np.max(np.abs(steps - steps[0])) <= 1e-9 * abs(steps[0]):
            law = LINEAR_LAW
        else:
            raise DomainError(f"{path} nodes follow no supported spacing law")
    grid = RadialGrid(u[0], u[-1], u, law)
    return Profile(grid, v)
