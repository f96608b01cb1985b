"""Numerical laboratory for rotation-invariant gradient Ricci expanders.

The package builds U(n)-invariant gradient Kahler-Ricci expanding solitons
on C^n, evolves perturbations of them under the normalized Kahler-Ricci flow
through its scalar Monge-Ampere reduction, and measures convergence back to
the soliton with weighted geometric monitors.
"""

from expanderlab.grid import RadialGrid, Profile, derivative, resample, weighted_sup_norm

__all__ = [
    "RadialGrid",
    "Profile",
    "derivative",
    "resample",
    "weighted_sup_norm",
]

__version__ = "0.1.0"
