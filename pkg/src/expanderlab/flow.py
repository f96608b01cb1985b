"""Implicit time stepping of the radial normalized expander-flow equation.

The evolving object is a radial potential perturbation psi(tau) over a
certified background; its equation of motion is the scalar reduction

    psi_dot = log[ ((P+psi)')^(n-1) (u (P+psi)')' / ((P')^(n-1) (u P')') ]
              + a u psi' - psi,

whose right-hand side compares the perturbed and background volume forms and
adds the radial drift of the background's expansion field. Backgrounds are
stationary points bitwise: the log-determinant ratio, the drift term, and
-psi all vanish identically at psi = 0.

Stepping is backward Euler solved by a full Newton iteration whose Jacobian
-- the drift Laplacian of the perturbed metric minus one -- is assembled as
a banded matrix from the grid's stencil rows and solved with LAPACK's banded
LU. A step is integrated three times (once at dt, twice at dt/2); the
difference of the two estimates drives a standard square-root step
controller targeting 100x the Newton tolerance, and the accepted value is
the Richardson combination 2*half - full, locally second order. Boundary
closure: the innermost rows keep the one-sided evolution equation (the
origin is outside the domain and the equation is parabolic), while the
outermost row is replaced by the asymptotic-linearity constraint
psi''(u_max) = 0, which preserves the admissible form psi ~ kappa u + O(1)
without pinning the asymptotic slope.

Newton divergence or loss of metric positivity halves dt and retries;
falling below dt_min is a hard failure carrying the last good state. Runs
terminate early once sup|psi_dot| drops below CONVERGENCE_SUP, the scalar
witness that the flow has become stationary.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from expanderlab import kernels
from expanderlab.geometry import InvariantMetric, PositivityError
from expanderlab.grid import (
    BANDWIDTH,
    DomainError,
    Profile,
    RadialGrid,
    operators,
    write_profile_csv,
)
from expanderlab.perturbations import InitialData
from expanderlab.solitons import SolitonData
from expanderlab.util import atomic_write_text, fmt17

__all__ = [
    "CONVERGENCE_SUP",
    "STEP_TOL_FACTOR",
    "FlowError",
    "FlowState",
    "StepControl",
    "StepRecord",
    "RunReport",
    "PullbackResult",
    "initial_state",
    "ncma_rhs",
    "drift_laplacian",
    "step",
    "run",
    "self_similar_pullback",
    "write_checkpoint",
]

# A run is declared converged when sup|psi_dot| falls below this.
CONVERGENCE_SUP = 1e-10
# The step controller targets this multiple of the Newton tolerance as the
# local two-estimate error (the control carries no separate field for it).
# The factor is large because the two tolerances answer different
# questions: newton_tol bounds the algebraic defect of each implicit
# solve, whose spatial gradient pollutes the metric eigenvalues near
# u_min, so it must sit far below the temporal accuracy target.
STEP_TOL_FACTOR = 1e6
# Largest single growth factor of dt between accepted steps.
_MAX_GROWTH = 5.0
# Hard cap on accepted steps per run; dt_min already bounds the count, this
# guards against degenerate controls (dt_min ~ 0) spinning forever.
_MAX_STEPS = 1_000_000


class FlowError(RuntimeError):
    """Time stepping failed; carries the last accepted state.

    ``state`` is the last good :class:`FlowState` (the dump the message
    summarizes), ``dt`` the step size at failure.
    """

    def __init__(self, message: str, state: "FlowState", dt: float):
        super().__init__(message)
        self.state = state
        self.dt = dt


@dataclasses.dataclass(frozen=True)
class StepControl:
    """Step-size and Newton policy for the implicit integrator."""

    dt_init: float
    dt_min: float
    dt_max: float
    newton_tol: float
    newton_max_iter: int
    safety: float

    def __post_init__(self) -> None:
        if not all(
            np.isfinite(v)
            for v in (self.dt_init, self.dt_min, self.dt_max, self.newton_tol, self.safety)
        ):
            raise DomainError("step control fields must be finite")
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise DomainError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if self.newton_tol <= 0.0:
            raise DomainError(f"newton_tol must be positive, got {self.newton_tol}")
        if not (isinstance(self.newton_max_iter, int) and self.newton_max_iter >= 1):
            raise DomainError(
                f"newton_max_iter must be an integer >= 1, got {self.newton_max_iter!r}"
            )
        if not (0.0 < self.safety < 1.0):
            raise DomainError(f"safety must lie in (0, 1), got {self.safety}")

    @classmethod
    def default(cls) -> "StepControl":
        return cls(
            dt_init=1e-3,
            dt_min=1e-9,
            dt_max=0.25,
            newton_tol=1e-12,
            newton_max_iter=12,
            safety=0.8,
        )


@dataclasses.dataclass(frozen=True)
class FlowState:
    """One accepted point of a flow trajectory.

    The constructor revalidates metric positivity of ``psi`` over the
    background, so a state object is always Kähler; ``psi_dot`` is the
    right-hand side at ``psi`` (stored by the factories, revalidated in
    tests rather than recomputed here).
    """

    tau: float
    psi: Profile
    psi_dot: Profile
    soliton: SolitonData
    step_count: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.tau) and self.tau >= 0.0):
            raise DomainError(f"tau must be finite and >= 0, got {self.tau}")
        if not (isinstance(self.step_count, int) and self.step_count >= 0):
            raise DomainError(f"step_count must be an integer >= 0, got {self.step_count!r}")
        grid = self.soliton.grid
        if self.psi.grid is not grid or self.psi_dot.grid is not grid:
            raise DomainError("state profiles and background live on different grids")
        if not np.all(np.isfinite(self.psi.values)):
            raise DomainError("psi contains non-finite values")
        xi_p, lam_p, _, _ = _perturbed_eigs(self.soliton, self.psi.values)
        for name, vals in (("lam_perp", xi_p), ("lam_rad", lam_p)):
            bad = np.flatnonzero(~(vals > 0.0))
            if bad.size:
                i = int(bad[0])
                raise PositivityError(
                    f"state is non-Kähler: perturbed {name} = {float(vals[i]):.6g} "
                    f"at node {i} (u = {grid.nodes[i]:.6g})"
                )

    def sup_psi_dot(self) -> float:
        return float(np.max(np.abs(self.psi_dot.values)))


@dataclasses.dataclass(frozen=True)
class StepRecord:
    """Bookkeeping for one accepted step."""

    step: int
    tau: float
    dt: float
    newton_iters: int
    sup_psi_dot: float

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "tau": self.tau,
            "dt": self.dt,
            "newton_iters": self.newton_iters,
            "sup_psi_dot": self.sup_psi_dot,
        }


@dataclasses.dataclass(frozen=True)
class RunReport:
    """Outcome of a :func:`run`: per-step records and the stop reason.

    ``converged`` is True when the run stopped because sup|psi_dot| fell
    below :data:`CONVERGENCE_SUP`; ``reason`` is "converged", "tau_end", or
    "no-op" (requested end time at or before the start).
    """

    records: tuple[StepRecord, ...]
    converged: bool
    reason: str

    @classmethod
    def empty(cls) -> "RunReport":
        return cls((), False, "no-op")

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "reason": self.reason,
            "steps": len(self.records),
            "records": [r.as_dict() for r in self.records],
        }

    def write_run_log(self, path: str) -> None:
        """One CSV row per accepted step."""
        lines = ["step,tau,dt,newton_iters,sup_psi_dot"]
        lines.extend(
            f"{r.step},{fmt17(r.tau)},{fmt17(r.dt)},{r.newton_iters},{fmt17(r.sup_psi_dot)}"
            for r in self.records
        )
        atomic_write_text(path, "\n".join(lines) + "\n")


def _perturbed_eigs(
    soliton: SolitonData, psi_vals: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Perturbed eigenvalues (xi, lam) and psi', psi'' in extended precision.

    Derivatives come from the u-coordinate stencil pair -- the same
    operators the metric layer uses for positivity -- which is exact on
    data that is polynomial in u, so the linear-potential families the
    stepping tests pin down evolve without truncation error. Everything
    stays longdouble: downstream the Newton residual must resolve defects
    far below the float64 cancellation noise of a u psi' - psi at large u.
    No positivity enforcement here: callers decide whether a violation is
    an error (public RHS) or a retry signal (Newton iterates).
    """
    grid = soliton.grid
    op1, op2 = operators(grid)
    v = psi_vals.astype(np.longdouble)
    d1 = op1.apply_ld(v)
    d2 = op2.apply_ld(v)
    m = soliton.metric
    u = grid.nodes.astype(np.longdouble)
    xi_p = m.lam_perp.values.astype(np.longdouble) + d1
    lam_p = m.lam_rad.values.astype(np.longdouble) + d1 + u * d2
    return xi_p, lam_p, d1, d2


def _rhs_values(
    soliton: SolitonData,
    psi_vals: np.ndarray,
    xi_p: np.ndarray,
    lam_p: np.ndarray,
    d1: np.ndarray,
) -> np.ndarray:
    """RHS in longdouble from longdouble eigenvalue/derivative inputs."""
    m = soliton.metric
    u = soliton.grid.nodes.astype(np.longdouble)
    a = np.longdouble(soliton.scale.a)
    return (
        (m.n - 1) * np.log(xi_p / m.lam_perp.values.astype(np.longdouble))
        + np.log(lam_p / m.lam_rad.values.astype(np.longdouble))
        + a * u * d1
        - psi_vals.astype(np.longdouble)
    )


def ncma_rhs(psi: Profile, soliton: SolitonData) -> Profile:
    """Right-hand side of the normalized scalar flow at ``psi``.

    log-determinant ratio of the perturbed to background metric plus the
    radial drift a u psi' minus psi. Identically zero at psi = 0 by
    construction (the background's own stationarity is certified
    separately). Raises :class:`PositivityError` when psi breaks metric
    positivity.
    """
    grid = soliton.grid
    if psi.grid is not grid and not grid.same_nodes(psi.grid):
        raise DomainError("potential and background live on different grids")
    if not np.all(np.isfinite(psi.values)):
        raise DomainError("potential contains non-finite values")
    xi_p, lam_p, d1, _ = _perturbed_eigs(soliton, psi.values)
    for name, vals in (("lam_perp", xi_p), ("lam_rad", lam_p)):
        bad = np.flatnonzero(~(vals > 0.0))
        if bad.size:
            i = int(bad[0])
            raise PositivityError(
                f"potential is non-Kähler: perturbed {name} = {float(vals[i]):.6g} "
                f"at node {i} (u = {grid.nodes[i]:.6g})"
            )
    return Profile(
        grid, _rhs_values(soliton, psi.values, xi_p, lam_p, d1).astype(np.float64)
    )


def drift_laplacian(
    metric: InvariantMetric, a: float, values: np.ndarray
) -> np.ndarray:
    """Drift Laplacian of a radial function for the given metric.

    (n-1) h'/xi + (h' + u h'')/lam + a u h'. On any certified background
    this annihilates the pair (f, constant shifts of f) up to the
    certification residual, the discrete form of the background's
    stationarity under the drift heat operator.
    """
    grid = metric.grid
    op1, op2 = operators(grid)
    v = np.asarray(values, dtype=np.longdouble)
    d1 = op1.apply_ld(v).astype(np.float64)
    d2 = op2.apply_ld(v).astype(np.float64)
    u = grid.nodes
    return (
        (metric.n - 1) * d1 / metric.lam_perp.values
        + (d1 + u * d2) / metric.lam_rad.values
        + a * u * d1
    )


def initial_state(soliton: SolitonData, data: "InitialData | Profile") -> FlowState:
    """FlowState at tau = 0 from accepted initial data or a raw profile."""
    psi = data.psi0 if isinstance(data, InitialData) else data
    return FlowState(0.0, psi, ncma_rhs(psi, soliton), soliton, 0)


# --------------------------------------------------------------- stepping

class _NewtonDivergence(Exception):
    """Internal retry signal: Newton failed to converge or lost positivity."""


def _constraint_row(grid: RadialGrid) -> tuple[int, np.ndarray]:
    """Banded-row (start, weights) enforcing u_max^2 psi''(u_max) = 0.

    The u_max^2 scaling makes the residual entry dimensionless (it is the
    second s-derivative up to a first-order term), keeping it comparable
    with the O(1) evolution rows in the Newton sup-norm.
    """
    _, d2u = operators(grid)
    start = int(d2u.starts[-1])
    weights = (d2u.weights[-1] * np.longdouble(grid.u_max) ** 2).astype(np.float64)
    return start, weights


def _newton_solve(
    soliton: SolitonData,
    psi_old: np.ndarray,
    seed: np.ndarray,
    dt: float,
    ctl: StepControl,
) -> tuple[np.ndarray, int]:
    """Backward-Euler solve psi - psi_old = dt * RHS(psi) with the outer
    constraint row; returns (solution, iterations) or raises the retry
    signal on divergence/positivity loss."""
    grid = soliton.grid
    m = soliton.metric
    n = grid.n
    u = grid.nodes
    a = soliton.scale.a
    op1, op2 = operators(grid)
    c_start, c_weights = _constraint_row(grid)

    psi = seed.copy()
    psi_old_ld = psi_old.astype(np.longdouble)
    dt_ld = np.longdouble(dt)
    ab = np.empty((2 * BANDWIDTH + 1, n), dtype=np.float64)
    best: "tuple[np.ndarray, float] | None" = None
    polishing = False
    rel = math.inf
    for iteration in range(ctl.newton_max_iter + 1):
        xi_p, lam_p, d1, d2 = _perturbed_eigs(soliton, psi)
        if not (np.all(xi_p > 0.0) and np.all(lam_p > 0.0)):
            raise _NewtonDivergence("positivity lost during Newton iteration")
        # The whole residual stays longdouble: a u psi' - psi cancels to
        # rounding noise far above newton_tol at large u in float64.
        rhs = _rhs_values(soliton, psi, xi_p, lam_p, d1)
        residual = psi.astype(np.longdouble) - psi_old_ld - dt_ld * rhs
        residual[-1] = np.longdouble(grid.u_max) ** 2 * d2[-1]
        # Convergence is judged per row relative to the row's realizability
        # scale |J_row| . |psi|: one ulp of the state moves row i by about
        # eps times this, so an absolute test would chase defects no
        # representable state can express -- the stiff second-derivative
        # rows near u_min and the large linear part near u_max both make
        # that floor vastly exceed newton_tol.
        abs_psi = np.abs(psi)
        xi64 = xi_p.astype(np.float64)
        lam64 = lam_p.astype(np.float64)
        g1 = np.einsum("ij,ij->i", np.abs(op1.weights), abs_psi[op1.index])
        g2 = np.einsum("ij,ij->i", np.abs(op2.weights), abs_psi[op2.index])
        c1 = np.abs((m.n - 1) / xi64 + 1.0 / lam64 + a * u)
        c2 = np.abs(u / lam64)
        scale = 1.0 + abs_psi + dt * (c1 * g1 + c2 * g2)
        scale[-1] = 1.0 + float(
            np.abs(c_weights) @ abs_psi[c_start : c_start + c_weights.size]
        )
        rel = float(np.max(np.abs(residual).astype(np.float64) / scale))
        if not np.isfinite(rel):
            raise _NewtonDivergence("non-finite Newton residual")
        if rel < ctl.newton_tol:
            if polishing:
                if best is not None and best[1] < rel:
                    return best[0], iteration
                return psi, iteration
            # One polish iteration: drive the defect toward its rounding
            # floor so the leftover (whose gradient pollutes eigenvalue
            # profiles near u_min) sits well below the tolerance.
            best = (psi, rel)
            polishing = True
        elif polishing:
            return best[0], iteration
        if iteration == ctl.newton_max_iter:
            if polishing:
                return best[0], iteration
            break

        # Jacobian of the residual: (1 + dt) I - dt * [c1 op1 + c2 op2],
        # the backward-Euler shift of the drift Laplacian of the perturbed
        # metric minus one. Plain float64 suffices here; Jacobian error
        # only slows the iteration, the longdouble residual steers it.
        coeff1 = -dt * ((m.n - 1) / xi64 + 1.0 / lam64 + a * u)
        coeff2 = -dt * (u / lam64)
        coeff1[-1] = 0.0
        coeff2[-1] = 0.0
        ab.fill(0.0)
        ab[BANDWIDTH, :] = 1.0 + dt
        ab[BANDWIDTH, -1] = 0.0
        kernels.accumulate_banded(ab, coeff1, op1.starts, op1.weights, BANDWIDTH)
        kernels.accumulate_banded(ab, coeff2, op2.starts, op2.weights, BANDWIDTH)
        row = n - 1
        for k, w in enumerate(c_weights):
            col = c_start + k
            ab[BANDWIDTH + row - col, col] = w
        try:
            delta = solve_banded(
                (BANDWIDTH, BANDWIDTH), ab, -residual.astype(np.float64)
            )
        except np.linalg.LinAlgError as exc:
            raise _NewtonDivergence(f"banded solve failed: {exc}") from None
        psi = psi + delta
    raise _NewtonDivergence(
        f"no convergence in {ctl.newton_max_iter} iterations "
        f"(relative residual {rel:.3e})"
    )


def _attempt_step(
    state: FlowState, ctl: StepControl, dt: float
) -> tuple[np.ndarray, float, int]:
    """Full step vs two half steps; returns (accepted values, error, iters).

    The accepted value is the locally second-order Richardson combination
    2*half - full; the reported error is the raw two-estimate difference
    that drives the controller.
    """
    psi_old = state.psi.values
    predictor = psi_old + dt * state.psi_dot.values
    psi_full, it_full = _newton_solve(state.soliton, psi_old, predictor, dt, ctl)

    half = 0.5 * dt
    predictor = psi_old + half * state.psi_dot.values
    psi_mid, it_a = _newton_solve(state.soliton, psi_old, predictor, half, ctl)
    rhs_mid = (psi_mid - psi_old) / half
    predictor = psi_mid + half * rhs_mid
    psi_two, it_b = _newton_solve(state.soliton, psi_mid, predictor, half, ctl)

    error = float(np.max(np.abs(psi_full - psi_two)))
    accepted = 2.0 * psi_two - psi_full
    return accepted, error, it_full + it_a + it_b


def _advance(
    state: FlowState, ctl: StepControl, dt_start: float
) -> tuple[FlowState, float, StepRecord]:
    """One accepted adaptive step starting from step size ``dt_start``.

    Returns the new state, the proposed next dt, and the step record.
    Raises :class:`FlowError` when dt cannot be reduced further.
    """
    step_tol = STEP_TOL_FACTOR * ctl.newton_tol
    dt = dt_start

    def shrink(factor: float, why: str) -> float:
        smaller = factor * dt
        if smaller < ctl.dt_min:
            raise FlowError(
                f"step size underflow at tau = {state.tau:.6g} (step "
                f"{state.step_count}): {why}; dt = {dt:.3e} cannot drop "
                f"below dt_min = {ctl.dt_min:.3e}. Last accepted state: "
                f"sup|psi_dot| = {state.sup_psi_dot():.3e}",
                state,
                dt,
            )
        return smaller

    while True:
        try:
            accepted, error, iters = _attempt_step(state, ctl, dt)
        except _NewtonDivergence as exc:
            dt = shrink(0.5, str(exc))
            continue
        if error > step_tol:
            target = ctl.safety * math.sqrt(step_tol / error)
            dt = shrink(min(0.5, target), f"two-estimate error {error:.3e}")
            continue
        try:
            new_state = FlowState(
                state.tau + dt,
                Profile(state.soliton.grid, accepted),
                ncma_rhs(Profile(state.soliton.grid, accepted), state.soliton),
                state.soliton,
                state.step_count + 1,
            )
        except PositivityError as exc:
            dt = shrink(0.5, f"extrapolated state lost positivity ({exc})")
            continue
        if error > 0.0:
            growth = min(_MAX_GROWTH, ctl.safety * math.sqrt(step_tol / error))
        else:
            growth = _MAX_GROWTH
        dt_next = float(np.clip(growth * dt, ctl.dt_min, ctl.dt_max))
        record = StepRecord(
            new_state.step_count, new_state.tau, dt, iters, new_state.sup_psi_dot()
        )
        return new_state, dt_next, record


def step(state: FlowState, ctl: StepControl) -> FlowState:
    """One adaptive implicit step from ``state`` (dt seeded at dt_init)."""
    new_state, _, _ = _advance(state, ctl, ctl.dt_init)
    return new_state


def run(
    state0: FlowState,
    ctl: StepControl,
    tau_end: float,
    hooks: Sequence[Callable[[FlowState, "StepRecord | None"], None]] = (),
    hook_cadence: float | None = None,
) -> tuple[FlowState, RunReport]:
    """Advance ``state0`` to ``tau_end`` (or convergence), invoking hooks.

    Hooks are called as hook(state, record) with read-only snapshots: once
    at the start (record None), then whenever tau crosses a multiple of
    ``hook_cadence`` past the start (every accepted step when None), and at
    the final state. A requested end time at or before the start returns
    ``state0`` unchanged with an empty report. The run stops early with
    converged status when sup|psi_dot| < CONVERGENCE_SUP.
    """
    if not np.isfinite(tau_end):
        raise DomainError(f"tau_end must be finite, got {tau_end}")
    if tau_end <= state0.tau:
        return state0, RunReport.empty()

    def fire(st: FlowState, rec: "StepRecord | None") -> None:
        for hook in hooks:
            hook(st, rec)

    fire(state0, None)
    if state0.sup_psi_dot() < CONVERGENCE_SUP:
        return state0, RunReport((), True, "converged")

    state = state0
    dt = ctl.dt_init
    records: list[StepRecord] = []
    next_mark = state0.tau + hook_cadence if hook_cadence is not None else None
    converged = False
    while state.tau < tau_end:
        if len(records) >= _MAX_STEPS:
            raise FlowError(
                f"exceeded {_MAX_STEPS} accepted steps before tau_end",
                state,
                dt,
            )
        dt_try = min(dt, tau_end - state.tau)
        state, dt, record = _advance(state, ctl, dt_try)
        records.append(record)
        if hook_cadence is None:
            fire(state, record)
        elif state.tau + 1e-12 >= next_mark:
            fire(state, record)
            periods = math.floor((state.tau - state0.tau) / hook_cadence) + 1
            next_mark = state0.tau + periods * hook_cadence
        if record.sup_psi_dot < CONVERGENCE_SUP:
            converged = True
            break
    if hook_cadence is not None:
        fire(state, records[-1] if records else None)
    return state, RunReport(
        tuple(records), converged, "converged" if converged else "tau_end"
    )


# ------------------------------------------------------------- pullback

@dataclasses.dataclass(frozen=True)
class PullbackResult:
    """A rescaled potential on the subgrid where the pullback is defined.

    ``valid`` indexes the source grid's nodes kept in ``profile``;
    ``truncated`` flags that the rescaled argument left the source domain
    at one or both ends. The margins report how far inside the source
    domain the rescaled range sits (ratios >= 1, equal to 1 at a touched
    endpoint).
    """

    profile: Profile
    t: float
    a: float
    valid: slice
    truncated: bool
    inner_margin: float
    outer_margin: float


def self_similar_pullback(potential: Profile, t: float, a: float) -> PullbackResult:
    """The potential u -> t * P(t^-a u) of the rescaled-flow correspondence.

    ``t = 1`` short-circuits to a bitwise copy. Otherwise the scaled
    arguments t^-a u are intersected with the source domain, the potential
    is resampled there (cubic, exact on polynomial data), and the result is
    returned on the corresponding subgrid with validity metadata; running
    out of range is a truncation, not an error.
    """
    if not (np.isfinite(t) and t > 0.0):
        raise DomainError(f"pullback time must be finite and positive, got {t}")
    if not np.isfinite(a):
        raise DomainError(f"vector-field scale must be finite, got {a}")
    grid = potential.grid
    n = grid.n
    if t == 1.0:
        return PullbackResult(
            Profile(grid, potential.values),
            1.0,
            a,
            slice(0, n),
            False,
            1.0,
            float(grid.u_max / grid.u_min),
        )

    scale = t ** (-a)
    scaled = scale * grid.nodes
    inside = (scaled >= grid.u_min * (1.0 - 1e-12)) & (
        scaled <= grid.u_max * (1.0 + 1e-12)
    )
    if not np.any(inside):
        raise DomainError(
            f"rescaled arguments [{scaled[0]:.6g}, {scaled[-1]:.6g}] miss the "
            f"source domain [{grid.u_min:.6g}, {grid.u_max:.6g}] entirely"
        )
    start = int(np.argmax(inside))
    stop = n - int(np.argmax(inside[::-1]))
    if stop - start < 16:
        raise DomainError(
            f"pullback keeps only {stop - start} nodes; need at least 16"
        )
    sub = grid.subgrid(start, stop)
    kept = np.clip(scaled[start:stop], grid.u_min, grid.u_max)
    target = RadialGrid(kept[0], kept[-1], kept, grid.spacing_law)
    from expanderlab.grid import resample

    values = t * resample(potential, target).values
    truncated = start > 0 or stop < n
    return PullbackResult(
        Profile(sub, values),
        float(t),
        float(a),
        slice(start, stop),
        truncated,
        float(kept[0] / grid.u_min),
        float(grid.u_max / kept[-1]),
    )


# ----------------------------------------------------------- checkpoints

def write_checkpoint(
    directory: str, state: FlowState, dt: float, newton_iters: int
) -> tuple[str, str]:
    """Write psi as CSV plus a JSON sidecar; returns (csv_path, json_path).

    Files are named by the state's step count, so a run's checkpoints sort
    chronologically; both writes are atomic.
    """
    base = os.path.join(directory, f"checkpoint_{state.step_count:06d}")
    csv_path = f"{base}.csv"
    json_path = f"{base}.json"
    write_profile_csv(state.psi, csv_path)
    sidecar = {
        "tau": state.tau,
        "dt": dt,
        "newton_iters": newton_iters,
        "sup_psi_dot": state.sup_psi_dot(),
    }
    atomic_write_text(json_path, json.dumps(sidecar, indent=2) + "\n")
    return csv_path, json_path
