"""Invariant Hermitian 2-tensors and their covariant derivative norms.

A rotation-invariant Hermitian (1,1)-tensor on C^n is determined by two
radial coefficients: T = diag_coeff(u) * delta + outer_coeff(u) * zbar (x) z,
the same structure as the metric itself. Its eigenvalues in the adapted
frame are diag_coeff (transverse, multiplicity n-1) and
diag_coeff + u * outer_coeff (radial).

Covariant derivatives stay inside a small closed family: every component
tensor of nabla^k T is a sum of "patterns", each a product over slots of
either a vector factor (zbar on an unbarred slot, z on a barred slot) or a
Kronecker delta pairing an unbarred slot with a barred one, times a radial
coefficient. Differentiation acts on this family by four exact rules
(coefficient derivative, vector-to-delta conversion, and the two
Christoffel contractions), so arbitrarily many covariant derivatives reduce
to bookkeeping over pairings plus radial stencil derivatives of the
coefficients. Norms are assembled in the unitary frame at an axis point,
where the metric is diagonal; this is exact for invariant tensors.

Norm convention: |nabla T|^2 sums the squares of both derivative types
(unbarred and barred), |nabla^2 T|^2 sums all four; for Hermitian invariant
data the barred family mirrors the unbarred one with identical real
coefficients, which the implementation exploits by doubling.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging

import numpy as np

from expanderlab.geometry import InvariantMetric, christoffel_coefficients
from expanderlab.grid import DomainError, Profile, derivative_values

logger = logging.getLogger(__name__)

__all__ = [
    "InvariantTensor",
    "hessian_tensor",
    "tensor_norm",
    "covariant_norms",
]


@dataclasses.dataclass(frozen=True, eq=False)
class InvariantTensor:
    """Rotation-invariant Hermitian 2-tensor T = diag*delta + outer*zbar(x)z."""

    diag_coeff: Profile
    outer_coeff: Profile

    def __post_init__(self) -> None:
        if self.diag_coeff.grid is not self.outer_coeff.grid:
            raise DomainError("tensor coefficients live on different grids")
        for name in ("diag_coeff", "outer_coeff"):
            if not np.all(np.isfinite(getattr(self, name).values)):
                raise DomainError(f"non-finite values in {name}")

    @property
    def grid(self):
        return self.diag_coeff.grid

    @property
    def eigen_perp(self) -> Profile:
        """Transverse eigenvalue (multiplicity n-1)."""
        return Profile(self.grid, self.diag_coeff.values.copy())

    @property
    def eigen_rad(self) -> Profile:
        """Radial eigenvalue diag + u * outer."""
        return Profile(
            self.grid,
            self.diag_coeff.values + self.grid.nodes * self.outer_coeff.values,
        )


def hessian_tensor(h: Profile) -> InvariantTensor:
    """Complex Hessian of a radial function: diag = h', outer = h''.

    The eigenvalues are then (h', (u h')'), the standard pair for data of
    the form i d dbar h.
    """
    d1 = derivative_values(h.grid, h.values, 1)
    d2 = derivative_values(h.grid, h.values, 2)
    return InvariantTensor(Profile(h.grid, d1), Profile(h.grid, d2))


class _Background:
    """Radial data of the metric needed by the derivative rules."""

    def __init__(self, m: InvariantMetric):
        self.grid = m.grid
        self.n = m.n
        self.u = m.grid.nodes
        self.sqrt_u = np.sqrt(self.u)
        self.xi = m.lam_perp.values
        self.lam = m.lam_rad.values
        ga, gb = christoffel_coefficients(m)
        self.gamma_a = ga.values
        self.gamma_b = gb.values
        # Coefficient of the vector-factor Christoffel contraction.
        self.gamma_vec = 2.0 * self.gamma_a + self.u * self.gamma_b

    def dcoeff(self, values: np.ndarray) -> np.ndarray:
        return derivative_values(self.grid, values, 1)


class _PatternTensor:
    """Sum of slot patterns with radial coefficients.

    ``types`` marks each slot 'h' (unbarred) or 'a' (barred). ``terms`` maps
    a frozenset of (unbarred_slot, barred_slot) delta-pairings to its
    coefficient array; slots absent from every pairing carry their vector
    factor (zbar for 'h', z for 'a').
    """

    def __init__(self, types: tuple[str, ...], terms: dict):
        self.types = types
        self.terms = terms

    def grad(self, bg: _Background, barred: bool) -> "_PatternTensor":
        """Covariant derivative, prepending one slot of the given type."""
        new_types = ("a" if barred else "h",) + self.types
        out: dict = {}

        def add(matching: frozenset, arr: np.ndarray) -> None:
            if matching in out:
                out[matching] = out[matching] + arr
            else:
                out[matching] = arr

        own, opposite = ("a", "h") if barred else ("h", "a")
        for matching, coeff in self.terms.items():
            shifted = frozenset((i + 1, j + 1) for i, j in matching)
            paired = {s for ij in shifted for s in ij}
            vec_corr = np.zeros_like(coeff)
            for s in range(1, len(new_types)):
                styp = self.types[s - 1]
                if s in paired:
                    continue
                if styp == opposite:
                    # d of the opposite-chirality vector factor is a delta
                    # pairing it with the new slot.
                    pair = (s, 0) if barred else (0, s)
                    add(shifted | {pair}, coeff)
                else:
                    # Christoffel contraction on a same-chirality vector
                    # factor keeps the pattern: -(2 gamma_a + u gamma_b).
                    vec_corr = vec_corr + bg.gamma_vec
            # Coefficient derivative plus the collected vector corrections
            # share the pattern where the new slot carries its vector.
            add(shifted, bg.dcoeff(coeff) - vec_corr * coeff)
            # Christoffel contraction through each delta pairing.
            for i, j in shifted:
                s, t = (j, i) if barred else (i, j)
                # s is the contracted same-chirality slot, t its partner.
                add(shifted, -bg.gamma_a * coeff)
                repaired = (t, 0) if barred else (0, t)
                add(shifted - {(i, j)} | {repaired}, -bg.gamma_a * coeff)
                add(shifted - {(i, j)}, -bg.gamma_b * coeff)
        return _PatternTensor(new_types, out)

    def frame_norm_sq(self, bg: _Background) -> np.ndarray:
        """Sum of squared unitary-frame components at the axis point."""
        k = len(self.types)
        total = np.zeros(bg.grid.n)
        inv_rad = 1.0 / bg.lam
        inv_perp = 1.0 / bg.xi
        for assignment in itertools.product(range(bg.n), repeat=k):
            comp = None
            for matching, coeff in self.terms.items():
                paired = {s for ij in matching for s in ij}
                if any(assignment[i] != assignment[j] for i, j in matching):
                    continue
                unpaired = [s for s in range(k) if s not in paired]
                if any(assignment[s] != 0 for s in unpaired):
                    continue
                term = coeff * bg.sqrt_u ** len(unpaired)
                comp = term if comp is None else comp + term
            if comp is None:
                continue
            weight = np.ones(bg.grid.n)
            for s in range(k):
                weight = weight * (inv_rad if assignment[s] == 0 else inv_perp)
            total = total + comp * comp * weight
        return total


def _base_pattern(t: InvariantTensor) -> _PatternTensor:
    return _PatternTensor(
        ("h", "a"),
        {
            frozenset({(0, 1)}): t.diag_coeff.values.copy(),
            frozenset(): t.outer_coeff.values.copy(),
        },
    )


def tensor_norm(t: InvariantTensor, m: InvariantMetric) -> Profile:
    """Pointwise norm |T|_g of an invariant tensor."""
    if t.grid is not m.grid:
        raise DomainError("tensor and metric live on different grids")
    bg = _Background(m)
    return Profile(m.grid, np.sqrt(_base_pattern(t).frame_norm_sq(bg)))


def covariant_norms(
    t: InvariantTensor, m: InvariantMetric, max_order: int = 2
) -> list[Profile]:
    """Norms [|T|, |nabla T|, |nabla^2 T|, ...] up to ``max_order``.

    Each derivative level sums every derivative type: level one doubles the
    unbarred family (its barred mirror has identical coefficients for
    Hermitian data), level two doubles the unbarred-unbarred and
    barred-after-unbarred families. Orders above two amplify stencil noise
    of the composed radial derivatives; callers weight interior nodes.
    """
    if t.grid is not m.grid:
        raise DomainError("tensor and metric live on different grids")
    if not 0 <= max_order <= 2:
        raise DomainError(f"supported derivative orders are 0..2, got {max_order}")
    bg = _Background(m)
    base = _base_pattern(t)
    out = [Profile(m.grid, np.sqrt(base.frame_norm_sq(bg)))]
    if max_order >= 1:
        first = base.grad(bg, barred=False)
        out.append(Profile(m.grid, np.sqrt(2.0 * first.frame_norm_sq(bg))))
    if max_order >= 2:
        second_sq = (
            first.grad(bg, barred=False).frame_norm_sq(bg)
            + first.grad(bg, barred=True).frame_norm_sq(bg)
        )
        out.append(Profile(m.grid, np.sqrt(2.0 * second_sq)))
    return out
