"""Time-harmonic scattering by a sphere with generalized impedance boundary conditions."""
from .spectral_core import (
    CurlOnly,
    DivOnly,
    FullSecondOrder,
    Scalar,
    SpectralTangentField,
    ThinCoating,
    hypothesis_check,
)
from .solver_surface import Dipole, PlaneWave, scatter, solve_surface

__all__ = [
    "CurlOnly", "DivOnly", "FullSecondOrder", "Scalar", "SpectralTangentField", "ThinCoating",
    "hypothesis_check", "Dipole", "PlaneWave", "scatter", "solve_surface",
]
__version__ = "0.1.0"
