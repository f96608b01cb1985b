"""Initial potentials over a soliton background and admissibility checks.

Builds rotation-invariant initial potentials psi0 on a certified expanding
background, rejects any that break metric positivity, and measures the decay
hypotheses the stability theory needs. Each hypothesis clause is reduced to
a radial quantity whose large-radius power law against the Hamiltonian
potential f is fitted by log-log least squares over the outer decades of the
grid; a clause passes, fails, or comes back *inconclusive* when the grid is
too short to expose the asymptotic regime. Decay exponents are therefore
measured, never proven: a clause requiring q = O(f^-e) passes when the
fitted exponent reaches e - EXPONENT_SLACK, or when q sits below an absolute
floor throughout the fit window (up to isolated rounding spikes within an
order of magnitude of the floor).

Two admissibility tiers exist, tagged "I" (weaker) and "II" (stronger):

* tier I asks for a potential growing no faster than f, a bounded drift gap
  (a u psi0' - psi0) with decaying gradient, bounded curvature of the
  perturbed metric, and an O(f^-1/2) first covariant derivative of the
  metric deformation;
* tier II instead controls the full tensor gaps g_psi - g and the drift-gap
  Hessian together with their first and second covariant derivatives, one
  power of f^(1/2) deeper per derivative and one full power of f deeper for
  the drift family.

Tier II implies tier I; both checks run independently here and the
implication is exercised in tests. Since every representable potential is a
function of u = |z|^2 alone, the rotation field annihilates it identically
and the Killing clause is structurally satisfied; it is still reported so
serialized reports enumerate every hypothesis.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from types import MappingProxyType
from typing import Mapping

import numpy as np

from expanderlab.geometry import (
    InvariantMetric,
    PositivityError,
    curvature_components_from,
    curvature_norm_sq_from,
    perturbed_metric,
    ricci_profile,
)
from expanderlab.grid import (
    LOG_LAW,
    DomainError,
    Profile,
    RadialGrid,
    derivative_chain_ld,
)
from expanderlab.solitons import SolitonData
from expanderlab.tensors import InvariantTensor, covariant_norms

__all__ = [
    "KINDS",
    "EXPONENT_SLACK",
    "ABSOLUTE_FLOOR",
    "FLOOR_SPIKE_FACTOR",
    "MIN_CLEAN_DECADES",
    "FIT_WINDOW_DECADES",
    "InitialData",
    "ClauseResult",
    "ConditionReport",
    "make_linear_in_f",
    "make_compact_bump",
    "custom_initial_data",
    "check_condition",
]

KINDS = ("linear_in_f", "compact_bump", "asymptotically_linear", "custom")

# Pass rule for a clause requiring q = O(f^-e): fitted exponent >= e - slack.
EXPONENT_SLACK = 0.1
# Quantities whose sup over the fit window stays below this are treated as
# identically zero (clause passes at the floor, no fit attempted).
ABSOLUTE_FLOOR = 1e-10
# A quantity is still scored at the floor when the nodes exceeding it are
# too sparse to fit AND no excursion tops this multiple of the floor:
# isolated rounding spikes (value-binade crossings of stored float64
# profiles, amplified by high-order stencils) are measurement artifacts,
# not signal.
FLOOR_SPIKE_FACTOR = 10.0
# Minimum log10(u) span of usable fit nodes; below it a fitted clause is
# inconclusive rather than pass/fail.
MIN_CLEAN_DECADES = 1.5
# The fit window is the outer this-many decades of the grid.
FIT_WINDOW_DECADES = 2.0


@dataclasses.dataclass(frozen=True, eq=False)
class InitialData:
    """An initial potential for the flow, with its construction recipe.

    ``psi0`` holds the radial potential, ``kind`` one of :data:`KINDS`, and
    ``params`` the recipe parameters (stored as an immutable view). The
    factories in this module verify, before constructing an instance, that
    the perturbed metric stays strictly positive on the whole grid; data
    obtained from them therefore encodes a genuine metric deformation.
    """

    psi0: Profile
    kind: str
    params: Mapping[str, float]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown initial-data kind {self.kind!r}")
        if not np.all(np.isfinite(self.psi0.values)):
            raise DomainError("initial potential contains non-finite values")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))


@dataclasses.dataclass(frozen=True)
class ClauseResult:
    """Outcome of one admissibility clause.

    Exponents use the decay convention against the Hamiltonian potential: a
    requirement ``e`` means the quantity must be O(f^-e) at large radius
    (negative values allow growth). ``exponent_measured`` is minus the
    fitted log-log slope; it is None when the quantity sits below the
    absolute floor, when the clause is structural, or when the fit window is
    too short. ``status`` is "pass", "fail", or "inconclusive".
    """

    clause: str
    exponent_required: float | None
    exponent_measured: float | None
    floor_hit: bool
    status: str

    def as_dict(self) -> dict:
        return {
            "clause": self.clause,
            "exponent_required": self.exponent_required,
            "exponent_measured": self.exponent_measured,
            "floor_hit": self.floor_hit,
            "status": self.status,
        }


@dataclasses.dataclass(frozen=True)
class ConditionReport:
    """Aggregate result of an admissibility check.

    ``witnesses`` holds one :class:`ClauseResult` per clause; ``passed`` is
    True exactly when every one passes, and an inconclusive clause blocks
    ``passed`` while remaining distinguishable from a failure.
    ``bilipschitz_constant`` is the measured two-sided eigenvalue ratio
    bound C0 >= 1 between the perturbed and background metrics (finite for
    any data accepted by construction).
    """

    condition: str
    passed: bool
    witnesses: tuple[ClauseResult, ...]
    bilipschitz_constant: float

    def __post_init__(self) -> None:
        if self.condition not in ("I", "II"):
            raise DomainError(f"unknown condition tag {self.condition!r}")
        if self.passed != all(c.status == "pass" for c in self.witnesses):
            raise DomainError("passed flag contradicts the clause statuses")

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "passed": self.passed,
            "bilipschitz_constant": self.bilipschitz_constant,
            "clauses": [c.as_dict() for c in self.witnesses],
        }


def _perturbed_or_reject(soliton: SolitonData, psi: Profile) -> InvariantMetric:
    """Perturbed metric of psi, re-raising with construction context."""
    try:
        return perturbed_metric(soliton.metric, psi)
    except PositivityError as exc:
        raise PositivityError(f"initial potential rejected: {exc}") from None


def make_linear_in_f(soliton: SolitonData, alpha: float) -> InitialData:
    """Initial potential proportional to the Hamiltonian potential.

    psi0 = alpha * f deforms the metric to (1 + alpha) g + alpha Ric(g), so
    admissibility is the positivity of that combination; it is checked
    eigenvalue-wise on the grid and violations are rejected naming the first
    bad node and component. The perturbed metric itself is validated as
    well (the two checks agree up to certification residuals).
    """
    if not np.isfinite(alpha):
        raise DomainError(f"alpha must be finite, got {alpha!r}")
    m = soliton.metric
    ric_perp, ric_rad = ricci_profile(m)
    for name, lam, ric in (
        ("lam_perp", m.lam_perp.values, ric_perp.values),
        ("lam_rad", m.lam_rad.values, ric_rad.values),
    ):
        combo = (1.0 + alpha) * lam + alpha * ric
        bad = np.flatnonzero(~(combo > 0.0))
        if bad.size:
            i = int(bad[0])
            raise PositivityError(
                f"alpha = {alpha:g} rejected: (1+alpha) {name} + alpha Ricci "
                f"= {combo[i]:.6g} <= 0 at node {i} (u = {m.grid.nodes[i]:.6g})"
            )
    psi = Profile(soliton.grid, alpha * soliton.f.values)
    _perturbed_or_reject(soliton, psi)
    return InitialData(psi, "linear_in_f", {"alpha": float(alpha)})


def make_compact_bump(
    soliton: SolitonData,
    center_u: float,
    width_decades: float,
    amplitude: float,
) -> InitialData:
    """Compactly supported smooth bump in log u.

    psi0(u) = amplitude * exp(1 - 1/(1 - y^2)) for |y| < 1 with
    y = (log u - log center_u) / (width_decades * ln 10), exactly zero
    outside, so the support is center_u * 10^(+-width_decades) and the
    profile peaks at ``amplitude``. The support must sit strictly inside
    (u_min * 10, u_max / 10) to keep boundary stencils clean. When the
    amplitude breaks metric positivity the rejection reports the largest
    admissible magnitude at this center and width, found by bisection; it
    is reported only, never applied.
    """
    for label, val in (
        ("center_u", center_u),
        ("width_decades", width_decades),
        ("amplitude", amplitude),
    ):
        if not np.isfinite(val):
            raise DomainError(f"{label} must be finite, got {val!r}")
    if center_u <= 0.0 or width_decades <= 0.0:
        raise DomainError("center_u and width_decades must be positive")
    grid = soliton.grid
    lo = center_u * 10.0 ** (-width_decades)
    hi = center_u * 10.0 ** (+width_decades)
    if not (lo > 10.0 * grid.u_min and hi < grid.u_max / 10.0):
        raise DomainError(
            f"bump support [{lo:.6g}, {hi:.6g}] must lie strictly inside "
            f"({10.0 * grid.u_min:.6g}, {grid.u_max / 10.0:.6g})"
        )

    def bump_values(amp: float) -> np.ndarray:
        y = (np.log(grid.nodes) - math.log(center_u)) / (
            width_decades * math.log(10.0)
        )
        vals = np.zeros(grid.nodes.size, dtype=np.float64)
        inside = np.abs(y) < 1.0
        yi = y[inside]
        vals[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - yi * yi))
        return vals

    psi = Profile(grid, bump_values(amplitude))
    try:
        perturbed_metric(soliton.metric, psi)
    except PositivityError:
        admissible = _max_bump_amplitude(soliton, bump_values, amplitude)
        raise PositivityError(
            f"bump amplitude {amplitude:g} breaks metric positivity; largest "
            f"admissible magnitude at this center/width is {admissible:.6g} "
            "(reported, not applied)"
        ) from None
    return InitialData(
        psi,
        "compact_bump",
        {
            "center_u": float(center_u),
            "width_decades": float(width_decades),
            "amplitude": float(amplitude),
        },
    )


def _max_bump_amplitude(soliton: SolitonData, bump_values, amplitude: float) -> float:
    """Largest admissible bump magnitude (same sign as ``amplitude``)."""
    sign = 1.0 if amplitude >= 0.0 else -1.0

    def admissible(mag: float) -> bool:
        try:
            perturbed_metric(soliton.metric, Profile(soliton.grid, bump_values(sign * mag)))
        except PositivityError:
            return False
        return True

    lo, hi = 0.0, abs(amplitude)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * max(1.0, abs(amplitude)):
            break
    return sign * lo


def custom_initial_data(
    soliton: SolitonData,
    psi0: Profile,
    kind: str = "custom",
    params: Mapping[str, float] | None = None,
) -> InitialData:
    """Wrap a caller-supplied potential after validating positivity.

    Only the kinds without a dedicated factory are accepted here ("custom"
    and "asymptotically_linear"); for the latter the measured outer slope
    d psi0/du at the outermost interior node is recorded in the params
    under "asymptotic_slope".
    """
    if kind not in ("custom", "asymptotically_linear"):
        raise DomainError(
            f"kind {kind!r} has a dedicated factory; custom_initial_data "
            "accepts only 'custom' or 'asymptotically_linear'"
        )
    if psi0.grid is not soliton.grid:
        raise DomainError("potential and background live on different grids")
    _perturbed_or_reject(soliton, psi0)
    record = dict(params or {})
    if kind == "asymptotically_linear":
        d1, _ = derivative_chain_ld(soliton.grid, psi0.values.astype(np.longdouble))
        outer = soliton.grid.interior().stop - 1
        record["asymptotic_slope"] = float(d1[outer])
    return InitialData(psi0, kind, record)


# The clause derivative chain uses nine-point eighth-order windows whose
# weights are generated from the *actual* node coordinates in extended
# precision. Two error sources force this beyond the package's standard
# fourth-order chain: stencil truncation on exponential-in-s data leaves a
# smooth 1e-9 relative ripple, and assuming uniform spacing converts the
# float64 placement jitter of the nodes into 1e-14 relative white noise.
# The cancellation a u psi' - psi amplifies both by f, drowning the
# absolute floor that constant-drift-gap data must reach.
_STENCIL8_GUARD = 4


def _fornberg_columns(x: np.ndarray, x0: np.longdouble, m: int) -> np.ndarray:
    """Derivative weights at ``x0`` from nodes ``x`` for orders 0..m."""
    n = x.size
    c = np.zeros((n, m + 1), dtype=np.longdouble)
    c1 = np.longdouble(1.0)
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = np.longdouble(1.0)
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@functools.lru_cache(maxsize=16)
def _clause_weights(grid: RadialGrid) -> tuple[np.ndarray, ...]:
    """Per-node nine-point weight rows (orders 1..4) for the core."""
    if grid.spacing_law == LOG_LAW:
        coord = np.log(grid.nodes.astype(np.longdouble))
    else:
        coord = grid.nodes.astype(np.longdouble)
    n = coord.size
    rows = n - 2 * _STENCIL8_GUARD
    weights = np.zeros((4, rows, 9), dtype=np.longdouble)
    for r in range(rows):
        i = r + _STENCIL8_GUARD
        cols = _fornberg_columns(coord[i - 4 : i + 5], coord[i], 4)
        for m in range(4):
            weights[m, r] = cols[:, m + 1]
    return tuple(weights)


def _clause_chain(grid: RadialGrid, values_ld: np.ndarray) -> tuple[np.ndarray, ...]:
    """u-derivatives of orders 1..4 for the clause engine.

    Nine-point windows on the actual node coordinates (s = log u on
    log-law grids), in extended precision; the _STENCIL8_GUARD nodes at
    each end fall back to the standard two-order chain with the higher
    orders zeroed (the fit window never reads them). Four orders from a
    single application let every clause quantity sit one stencil away
    from the raw potential — composing two chains would leak the
    lower-order guard values into the outer fit nodes.
    """
    d1, d2 = derivative_chain_ld(grid, values_ld)
    d1 = d1.copy()
    d2 = d2.copy()
    d3 = np.zeros_like(d1)
    d4 = np.zeros_like(d1)
    n = values_ld.size
    if n < 2 * _STENCIL8_GUARD + 1:
        return d1, d2, d3, d4
    core = slice(_STENCIL8_GUARD, n - _STENCIL8_GUARD)
    windows = np.lib.stride_tricks.sliding_window_view(values_ld, 9)
    ds = [np.einsum("rk,rk->r", w, windows) for w in _clause_weights(grid)]
    if grid.spacing_law == LOG_LAW:
        # (d/du)^k = u^-k (D - k + 1)...(D - 1) D in D = d/ds.
        u = grid.nodes.astype(np.longdouble)[core]
        d1[core] = ds[0] / u
        d2[core] = (ds[1] - ds[0]) / u**2
        d3[core] = (ds[2] - 3.0 * ds[1] + 2.0 * ds[0]) / u**3
        d4[core] = (ds[3] - 6.0 * ds[2] + 11.0 * ds[1] - 6.0 * ds[0]) / u**4
    else:
        d1[core], d2[core], d3[core], d4[core] = ds
    return d1, d2, d3, d4


def _fit_window(grid: RadialGrid) -> np.ndarray:
    """Boolean mask of nodes used for decay fits.

    Keeps the outer FIT_WINDOW_DECADES decades of the grid, trimmed to the
    interior slice and the high-order clause-chain core so boundary
    stencil rows never contaminate a fit.
    """
    n = grid.nodes.size
    mask = np.zeros(n, dtype=bool)
    mask[grid.interior()] = True
    # Twice the clause-chain guard: tensor-norm stencils reach three
    # nodes past a clause-chain guard row, so fitted nodes must keep a
    # full stencil width of clean neighbours on each side.
    mask[: 2 * _STENCIL8_GUARD] = False
    mask[n - 2 * _STENCIL8_GUARD :] = False
    mask &= grid.nodes >= grid.u_max * 10.0 ** (-FIT_WINDOW_DECADES)
    return mask


def _structural_clause(name: str) -> ClauseResult:
    return ClauseResult(name, None, None, True, "pass")


def _window_floored(quantity: np.ndarray, window: np.ndarray) -> bool:
    q = np.abs(quantity[window])
    return q.size == 0 or float(np.max(q)) <= ABSOLUTE_FLOOR


def _fit_clause(
    name: str,
    quantity: np.ndarray,
    required: float,
    f_vals: np.ndarray,
    u_vals: np.ndarray,
    window: np.ndarray,
) -> ClauseResult:
    """Measure the decay exponent of ``quantity`` against f over the window.

    Floor short-circuit first; then a log-log least-squares slope on the
    nodes with quantity above the floor. Fewer than eight such nodes, or a
    usable span under MIN_CLEAN_DECADES decades of u, yields an
    inconclusive result.
    """
    q = np.abs(np.asarray(quantity, dtype=np.float64))
    if not np.all(np.isfinite(q[window])):
        raise DomainError(f"clause {name!r}: non-finite quantity in fit window")
    if _window_floored(q, window):
        return ClauseResult(name, required, None, True, "pass")
    usable = window & (q > ABSOLUTE_FLOOR)
    u_used = u_vals[usable]
    span = (
        math.log10(float(np.max(u_used)) / float(np.min(u_used)))
        if u_used.size
        else 0.0
    )
    if u_used.size < 8 or span < MIN_CLEAN_DECADES:
        # Too few above-floor nodes for a fit. When even the excursions
        # stay within FLOOR_SPIKE_FACTOR of the floor, the quantity is
        # zero at measurement resolution and the clause scores at the
        # floor; otherwise the window is genuinely too short to expose
        # the asymptotic regime.
        if float(np.max(q[window])) <= FLOOR_SPIKE_FACTOR * ABSOLUTE_FLOOR:
            return ClauseResult(name, required, None, True, "pass")
        return ClauseResult(name, required, None, False, "inconclusive")
    slope = np.polyfit(np.log(f_vals[usable]), np.log(q[usable]), 1)[0]
    measured = -float(slope)
    status = "pass" if measured >= required - EXPONENT_SLACK else "fail"
    return ClauseResult(name, required, measured, False, status)


def check_condition(
    data: InitialData, soliton: SolitonData, which: str = "II"
) -> ConditionReport:
    """Measure the admissibility clauses of tier ``which`` ("I" or "II").

    Shared clauses: the structural Killing symmetry, potential growth
    |psi0| = O(f), the drift gap v = a u psi0' - psi0 bounded, and its
    gradient |grad v| = O(f^-1/2). Tier I adds bounded curvature of the
    perturbed metric and |grad(g_psi - g)| = O(f^-1/2); tier II instead
    requires |grad^k (g_psi - g)| = O(f^-k/2) and
    |grad^k (Hess v)| = O(f^-1-k/2) for k = 0, 1, 2, the drift-gap Hessian
    being how the half-field Lie gap of the perturbed metric reduces
    radially. Derivative chains for psi0 and v run in extended precision so
    floor detection is not drowned by stencil rounding.
    """
    if which not in ("I", "II"):
        raise DomainError(f"condition tag must be 'I' or 'II', got {which!r}")
    grid = soliton.grid
    if data.psi0.grid is not grid:
        raise DomainError("initial data and background live on different grids")

    m = soliton.metric
    a = soliton.scale.a
    u = grid.nodes
    f_vals = soliton.f.values
    window = _fit_window(grid)

    pert = _perturbed_or_reject(soliton, data.psi0)
    ratios = np.concatenate(
        [
            pert.lam_perp.values / m.lam_perp.values,
            pert.lam_rad.values / m.lam_rad.values,
        ]
    )
    bilipschitz = float(max(np.max(ratios), np.max(1.0 / ratios)))

    u_ld = u.astype(np.longdouble)
    psi_ld = data.psi0.values.astype(np.longdouble)
    p1, p2, p3, _ = _clause_chain(grid, psi_ld)
    # v = a u psi' - psi and its derivatives, written out so each comes
    # from a single stencil application to psi (no chain composition):
    # v' = (a-1) psi' + a u psi'', v'' = (2a-1) psi'' + a u psi'''.
    v_ld = a * u_ld * p1 - psi_ld
    v1 = (a - 1.0) * p1 + a * u_ld * p2
    v2 = (2.0 * a - 1.0) * p2 + a * u_ld * p3
    v64 = np.asarray(v_ld, dtype=np.float64)

    deformation = InvariantTensor(
        Profile(grid, np.asarray(p1, dtype=np.float64)),
        Profile(grid, np.asarray(p2, dtype=np.float64)),
    )
    drift_tensor = InvariantTensor(
        Profile(grid, np.asarray(v1, dtype=np.float64)),
        Profile(grid, np.asarray(v2, dtype=np.float64)),
    )

    grad_v = np.sqrt(
        2.0 * u * np.asarray(v1 * v1, dtype=np.float64) / m.lam_rad.values
    )

    def fit(name: str, quantity: np.ndarray, required: float) -> ClauseResult:
        return _fit_clause(name, quantity, required, f_vals, u, window)

    def family(
        names: tuple[str, ...], norms: list[Profile], reqs: tuple[float, ...]
    ) -> list[ClauseResult]:
        # A derivative clause is scored at the floor when the family's
        # underived norm already sits below the floor across the window:
        # the tensor is numerically zero there and differentiating
        # measurement noise carries no information.
        out = [fit(names[0], norms[0].values, reqs[0])]
        for name, norm, req in zip(names[1:], norms[1:], reqs[1:]):
            if out[0].floor_hit:
                out.append(ClauseResult(name, req, None, True, "pass"))
            else:
                out.append(fit(name, norm.values, req))
        return out

    clauses = [
        _structural_clause("killing_symmetry"),
        fit("potential_growth", data.psi0.values, -1.0),
        fit("drift_gap_value", v64, 0.0),
        fit("drift_gap_gradient", grad_v, 0.5),
    ]
    if which == "I":
        clauses.append(fit("curvature_bounded", _perturbed_curvature(soliton, psi_ld, p1, p2), 0.0))
        norms = covariant_norms(deformation, m, max_order=1)
        if _window_floored(norms[0].values, window):
            clauses.append(
                ClauseResult("metric_derivative_decay", 0.5, None, True, "pass")
            )
        else:
            clauses.append(fit("metric_derivative_decay", norms[1].values, 0.5))
    else:
        clauses.extend(
            family(
                ("metric_gap", "metric_gap_gradient", "metric_gap_hessian"),
                covariant_norms(deformation, m, max_order=2),
                (0.0, 0.5, 1.0),
            )
        )
        clauses.extend(
            family(
                ("drift_tensor", "drift_tensor_gradient", "drift_tensor_hessian"),
                covariant_norms(drift_tensor, m, max_order=2),
                (1.0, 1.5, 2.0),
            )
        )

    passed = all(c.status == "pass" for c in clauses)
    return ConditionReport(which, passed, tuple(clauses), bilipschitz)


def _perturbed_curvature(
    soliton: SolitonData, psi_ld: np.ndarray, p1: np.ndarray, p2: np.ndarray
) -> np.ndarray:
    """Curvature norm of the perturbed metric, extended-precision chain.

    The clause engine needs this because the standard fourth-order chain
    leaves a 2e-10 ripple on an exactly flat perturbed metric, above the
    absolute floor the boundedness clause must be able to reach.
    """
    grid = soliton.grid
    m = soliton.metric
    pot_ld = m.P.values.astype(np.longdouble) + psi_ld
    _, q2, q3, q4 = _clause_chain(grid, pot_ld)
    xi = m.lam_perp.values.astype(np.longdouble) + p1
    lam = m.lam_rad.values.astype(np.longdouble) + p1 + grid.nodes.astype(np.longdouble) * p2
    a, b, c = curvature_components_from(
        grid.nodes.astype(np.longdouble), xi, lam, q2, q3, q4
    )
    return np.sqrt(
        np.asarray(curvature_norm_sq_from(a, b, c, m.n), dtype=np.float64)
    )
