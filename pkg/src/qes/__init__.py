"""Quasi-exactly solvable radial potentials via a hidden sl(2) algebra.

Four potential families reduce to one second-order equation whose
polynomial solutions of degree ``n`` exist only when one model parameter
is tuned; this package finds those values, builds the closed-form
eigenstates and checks them against an independent numerical oracle.
"""

from .core import (
    AllowedC0,
    BasicEquationCoefficients,
    SpectralMatrix,
    Sl2Decomposition,
    allowed_c0_values,
    expansion_coefficients,
    sl2_action_matrices,
    sl2_decompose,
    spectral_matrix,
    tridiagonal_determinant,
)
from .errors import QesError
from .models import (
    FAMILIES,
    NonPolynomial,
    QesSolution,
    ScreenedCoulomb,
    SingularAnharmonic,
    SingularPower,
    build_solution,
    closed_form_energy,
    coefficient_map,
    lprime,
    solve_tuned_parameter,
    wavefunction,
)
from .oracle import (
    OracleReport,
    RadialGrid,
    cofactor_determinant,
    normalization,
    ode_residual,
    shooting_eigenvalue,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "QesError",
    "AllowedC0",
    "BasicEquationCoefficients",
    "SpectralMatrix",
    "Sl2Decomposition",
    "allowed_c0_values",
    "expansion_coefficients",
    "sl2_action_matrices",
    "sl2_decompose",
    "spectral_matrix",
    "tridiagonal_determinant",
    "FAMILIES",
    "NonPolynomial",
    "QesSolution",
    "ScreenedCoulomb",
    "SingularAnharmonic",
    "SingularPower",
    "build_solution",
    "closed_form_energy",
    "coefficient_map",
    "lprime",
    "solve_tuned_parameter",
    "wavefunction",
    "OracleReport",
    "RadialGrid",
    "cofactor_determinant",
    "normalization",
    "ode_residual",
    "shooting_eigenvalue",
    "verify_solution",
]
