"""Optional compiled kernels with pure-Python/NumPy fallbacks.

Two inner loops dominate runtime: the shooting integrations of the radial
soliton ODE (dozens of adaptive integrations per construction) and the
scatter-accumulation of stencil rows into the banded Newton Jacobian
(thousands of assemblies per flow run). Both are compiled with numba when
it is importable; setting ``EXPANDERLAB_NO_NUMBA=1`` forces the fallback
implementations. ``JIT_ENABLED`` reports which path is active. Fallbacks
are required to agree with the compiled versions to solver tolerance (the
banded accumulation agrees bitwise); tests exercise both.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "JIT_ENABLED",
    "accumulate_banded",
    "accumulate_banded_reference",
    "integrate_soliton_ode",
    "integrate_soliton_ode_reference",
]

_DISABLED = os.environ.get("EXPANDERLAB_NO_NUMBA", "") == "1"
if _DISABLED:
    _njit = None
else:
    try:
        from numba import njit as _njit
    except ImportError:
        _njit = None

JIT_ENABLED = _njit is not None


def _integrate_soliton_ode_impl(
    y1: float,
    y2: float,
    y3: float,
    s0: float,
    s1: float,
    n: float,
    a: float,
    rtol: float,
):
    """Adaptive Dormand-Prince 5(4) integration of the soliton profile ODE.

    State in s = log u: y1 = phi (= u P'), y2 = dphi/ds, y3 = P. The system

        y1' = y2
        y2' = y2 * (1 + y1 + (n - 1) * (1 - y2 / y1) - a * y2)
        y3' = y1

    is the radial gradient-expander equation a*(uP')' = P' - (n-1)P''/P'
    - phi''/phi' rewritten in first-order log form, plus the potential
    quadrature. Returns (y1, y2, y3, status) at s1; status 0 on success,
    1 if the profile lost positivity, 2 if the step size underflowed.
    """
    # Dormand-Prince tableau (RK45 embedded pair).
    c2, c3, c4, c5 = 0.2, 0.3, 0.8, 8.0 / 9.0
    a21 = 0.2
    a31, a32 = 3.0 / 40.0, 9.0 / 40.0
    a41, a42, a43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
    a51, a52, a53, a54 = (
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    )
    a61, a62, a63, a64, a65 = (
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    )
    b1, b3, b4, b5, b6 = (
        35.0 / 384.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    )
    e1, e3, e4, e5, e6, e7 = (
        71.0 / 57600.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    )

    s = s0
    h = min(1e-3, s1 - s0)
    atol = 1e-16
    nm1 = n - 1.0
    max_steps = 2_000_000
    for _ in range(max_steps):
        if s >= s1:
            return y1, y2, y3, 0
        if y1 <= 0.0 or y2 <= 0.0:
            return y1, y2, y3, 1
        if h < 1e-14:
            return y1, y2, y3, 2
        if s + h > s1:
            h = s1 - s

        k1_1 = y2
        k1_2 = y2 * (1.0 + y1 + nm1 * (1.0 - y2 / y1) - a * y2)
        k1_3 = y1

        t1 = y1 + h * a21 * k1_1
        t2 = y2 + h * a21 * k1_2
        k2_1 = t2
        k2_2 = t2 * (1.0 + t1 + nm1 * (1.0 - t2 / t1) - a * t2)
        k2_3 = t1

        t1 = y1 + h * (a31 * k1_1 + a32 * k2_1)
        t2 = y2 + h * (a31 * k1_2 + a32 * k2_2)
        k3_1 = t2
        k3_2 = t2 * (1.0 + t1 + nm1 * (1.0 - t2 / t1) - a * t2)
        k3_3 = t1

        t1 = y1 + h * (a41 * k1_1 + a42 * k2_1 + a43 * k3_1)
        t2 = y2 + h * (a41 * k1_2 + a42 * k2_2 + a43 * k3_2)
        k4_1 = t2
        k4_2 = t2 * (1.0 + t1 + nm1 * (1.0 - t2 / t1) - a * t2)
        k4_3 = t1

        t1 = y1 + h * (a51 * k1_1 + a52 * k2_1 + a53 * k3_1 + a54 * k4_1)
        t2 = y2 + h * (a51 * k1_2 + a52 * k2_2 + a53 * k3_2 + a54 * k4_2)
        k5_1 = t2
        k5_2 = t2 * (1.0 + t1 + nm1 * (1.0 - t2 / t1) - a * t2)
        k5_3 = t1

        t1 = y1 + h * (a61 * k1_1 + a62 * k2_1 + a63 * k3_1 + a64 * k4_1 + a65 * k5_1)
        t2 = y2 + h * (a61 * k1_2 + a62 * k2_2 + a63 * k3_2 + a64 * k4_2 + a65 * k5_2)
        k6_1 = t2
        k6_2 = t2 * (1.0 + t1 + nm1 * (1.0 - t2 / t1) - a * t2)
        k6_3 = t1

        y1n = y1 + h * (b1 * k1_1 + b3 * k3_1 + b4 * k4_1 + b5 * k5_1 + b6 * k6_1)
        y2n = y2 + h * (b1 * k1_2 + b3 * k3_2 + b4 * k4_2 + b5 * k5_2 + b6 * k6_2)
        y3n = y3 + h * (b1 * k1_3 + b3 * k3_3 + b4 * k4_3 + b5 * k5_3 + b6 * k6_3)

        if y1n <= 0.0 or y2n <= 0.0:
            h *= 0.5
            continue
        # FSAL stage of the new point feeds the error estimate.
        k7_1 = y2n
        k7_2 = y2n * (1.0 + y1n + nm1 * (1.0 - y2n / y1n) - a * y2n)
        k7_3 = y1n

        err1 = h * (e1 * k1_1 + e3 * k3_1 + e4 * k4_1 + e5 * k5_1 + e6 * k6_1 + e7 * k7_1)
        err2 = h * (e1 * k1_2 + e3 * k3_2 + e4 * k4_2 + e5 * k5_2 + e6 * k6_2 + e7 * k7_2)
        err3 = h * (e1 * k1_3 + e3 * k3_3 + e4 * k4_3 + e5 * k5_3 + e6 * k6_3 + e7 * k7_3)

        sc1 = atol + rtol * max(abs(y1), abs(y1n))
        sc2 = atol + rtol * max(abs(y2), abs(y2n))
        sc3 = atol + rtol * max(abs(y3), abs(y3n))
        err = max(abs(err1) / sc1, abs(err2) / sc2, abs(err3) / sc3)

        if err <= 1.0:
            s += h
            y1, y2, y3 = y1n, y2n, y3n
            grow = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
            h *= min(5.0, grow)
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return y1, y2, y3, 2


def _accumulate_banded_impl(
    ab: np.ndarray,
    coeff: np.ndarray,
    starts: np.ndarray,
    weights: np.ndarray,
    upper: int,
) -> None:
    """ab[upper + i - j, j] += coeff[i] * weights[i, k] with j = starts[i] + k."""
    rows, width = weights.shape
    for i in range(rows):
        ci = coeff[i]
        s0 = starts[i]
        for k in range(width):
            j = s0 + k
            ab[upper + i - j, j] += ci * weights[i, k]


integrate_soliton_ode_reference = _integrate_soliton_ode_impl
accumulate_banded_reference = _accumulate_banded_impl

if JIT_ENABLED:
    integrate_soliton_ode = _njit(cache=True)(_integrate_soliton_ode_impl)
    accumulate_banded = _njit(cache=True)(_accumulate_banded_impl)
else:
    integrate_soliton_ode = _integrate_soliton_ode_impl

    def accumulate_banded(ab, coeff, starts, weights, upper):
        # Vectorized scatter; np.add.at handles repeated (band, col) pairs.
        rows = np.arange(weights.shape[0])[:, None]
        cols = starts[:, None] + np.arange(weights.shape[1])[None, :]
        np.add.at(ab, (upper + rows - cols, cols), coeff[:, None] * weights)
