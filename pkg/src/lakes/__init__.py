"""Toolkit for hemidiabatic state preparation with counterdiabatic driving.

Subpackages cover a single-qutrit toy model, the Rydberg ruby-lattice PXP
model, a deformed toric code on small tori, and a semiclassical two-field
lattice theory evolved with the truncated Wigner approximation.
"""

from lakes.errors import (
    BasisMismatch,
    DegenerateSpectrum,
    DimensionTooLarge,
    LakesError,
    NoConvergence,
    NonHermitian,
    NormDrift,
    ZeroProjection,
)

__all__ = [
    "BasisMismatch",
    "DegenerateSpectrum",
    "DimensionTooLarge",
    "LakesError",
    "NoConvergence",
    "NonHermitian",
    "NormDrift",
    "ZeroProjection",
]

__version__ = "0.1.0"
