"""sl(2) algebra and the shared second-order equation

    z (z - a) phi'' + (b2 z^2 + b1 z + b0) phi' + (c1 z + c0) phi = 0

All operators act on coefficient vectors ``p`` with ``phi(z) = sum_m p[m] z**m``,
so ``(A @ p)[j]`` is the coefficient of ``z**j`` in ``A phi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConstraintViolated, VanishingDenominator

__all__ = [
    "BasicEquationCoefficients",
    "Sl2Decomposition",
    "OperatorMatrices",
    "SpectralMatrix",
    "AllowedC0",
    "sl2_action_matrices",
    "sl2_decompose",
    "quasi_exactness_residual",
    "spectral_matrix",
    "tridiagonal_determinant",
    "allowed_c0_values",
    "expansion_coefficients",
    "operator_polynomial",
    "operator_residual",
]


@dataclass(frozen=True)
class BasicEquationCoefficients:
    a: float
    b0: float
    b1: float
    b2: float
    c0: float
    c1: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b0, self.b1, self.b2, self.c0, self.c1)

    def with_c0(self, c0: float) -> "BasicEquationCoefficients":
        return BasicEquationCoefficients(self.a, self.b0, self.b1, self.b2, c0, self.c1)

    def check_denominators(self, n: int) -> None:
        """Raise if ``b0 - k*a`` vanishes for some ``k < n``."""
        for k in range(n):
            if self.b0 - k * self.a == 0.0:
                raise VanishingDenominator(
                    f"b0 - k*a = 0 at k={k} (a={self.a!r}, b0={self.b0!r})"
                )


@dataclass(frozen=True)
class OperatorMatrices:
    n: int
    plus: np.ndarray
    zero: np.ndarray
    minus: np.ndarray


@dataclass(frozen=True)
class Sl2Decomposition:
    """Coefficients of H written in the enveloping algebra of sl(2).

    H = pm * J+J- + zm * J0J- + p * J+ + z * J0 + m * J- + scalar
    """

    n: int
    plus_minus: float
    zero_minus: float
    plus: float
    zero: float
    minus: float
    scalar: float

    def operator(self) -> np.ndarray:
        """Matrix of the reconstructed operator on the degree-``n`` polynomial space."""
        J = sl2_action_matrices(self.n)
        eye = np.eye(self.n + 1)
        return (
            self.plus_minus * (J.plus @ J.minus)
            + self.zero_minus * (J.zero @ J.minus)
            + self.plus * J.plus
            + self.zero * J.zero
            + self.minus * J.minus
            + self.scalar * eye
        )


@dataclass(frozen=True)
class SpectralMatrix:
    """Tridiagonal matrix of H restricted to polynomials of degree <= n."""

    n: int
    diag: np.ndarray
    lower: np.ndarray  # lower[k-1] = M[k, k-1]
    upper: np.ndarray  # upper[k] = M[k, k+1]

    def dense(self) -> np.ndarray:
        M = np.diag(self.diag)
        if self.n > 0:
            M += np.diag(self.lower, -1) + np.diag(self.upper, 1)
        return M

    def determinant(self) -> float:
        return float(tridiagonal_determinant(self.diag, self.lower, self.upper))

    def norm(self) -> float:
        """Infinity norm (max absolute row sum)."""
        return float(np.max(np.abs(self.dense()).sum(axis=1)))

    def relative_determinant(self) -> float:
        """``|det| / max(norm, 1)**(n+1)``.

        The floor of 1 keeps the measure meaningful when the matrix itself is
        tiny (at n=0 it is just ``[c0]``, and ``|c0|/|c0|`` would always be 1).
        """
        scale = max(self.norm(), 1.0)
        return abs(self.determinant()) / scale ** (self.n + 1)


def sl2_action_matrices(n: int) -> OperatorMatrices:
    """Matrices of J+ = -z^2 d + n z, J0 = z d - n/2, J- = d on span{1, z, ..., z^n}."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    size = n + 1
    plus = np.zeros((size, size))
    minus = np.zeros((size, size))
    m = np.arange(size)
    zero = np.diag(m - n / 2.0)
    plus[m[:-1] + 1, m[:-1]] = n - m[:-1]
    minus[m[1:] - 1, m[1:]] = m[1:]
    return OperatorMatrices(n, plus, zero, minus)


def quasi_exactness_residual(coeffs: BasicEquationCoefficients, n: int) -> float:
    return coeffs.c1 + n * coeffs.b2


def sl2_decompose(coeffs: BasicEquationCoefficients, n: int) -> Sl2Decomposition:
    """Write the basic operator as a quadratic element of sl(2).

    Only possible when the degree-``n`` polynomial space is invariant,
    i.e. ``c1 = -n*b2``; otherwise :class:`ConstraintViolated` is raised.
    """
    residual = quasi_exactness_residual(coeffs, n)
    tol = 1e-10 * max(abs(coeffs.c1), abs(n * coeffs.b2), 1.0)
    if abs(residual) > tol:
        raise ConstraintViolated(
            f"c1 + n*b2 = {residual!r} for n={n}; the degree-{n} space is not invariant"
        )
    a, b0, b1, b2, c0 = coeffs.a, coeffs.b0, coeffs.b1, coeffs.b2, coeffs.c0
    return Sl2Decomposition(
        n=n,
        plus_minus=-1.0,
        zero_minus=-a,
        plus=-b2,
        zero=n + b1,
        minus=b0 - n * a / 2.0,
        scalar=n * n / 2.0 + n * b1 / 2.0 + c0,
    )


def spectral_matrix(coeffs: BasicEquationCoefficients, n: int) -> SpectralMatrix:
    k = np.arange(n + 1, dtype=float)
    diag = coeffs.c0 + k * (coeffs.b1 + k - 1.0)
    lower = -(n - k[1:] + 1.0) * coeffs.b2
    upper = (k[:-1] + 1.0) * (coeffs.b0 - k[:-1] * coeffs.a)
    return SpectralMatrix(n, diag, lower, upper)


def tridiagonal_determinant(diag, lower, upper):
    """Continuant recurrence ``f_k = d_k f_{k-1} - l_k u_{k-1} f_{k-2}``.

    Works on the last axis, so stacks of matrices are handled in one call.
    """
    diag = np.asarray(diag, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    prev = np.ones(diag.shape[:-1])
    cur = diag[..., 0]
    for k in range(1, diag.shape[-1]):
        prev, cur = cur, diag[..., k] * cur - lower[..., k - 1] * upper[..., k - 1] * prev
    return cur


@dataclass(frozen=True)
class AllowedC0:
    """Real c0 values making the spectral determinant vanish."""

    values: list[float]
    complex_pairs: int


def allowed_c0_values(a: float, b0: float, b1: float, b2: float, n: int) -> AllowedC0:
    """Roots of ``det(T + c0*I) = 0`` in c0, i.e. the negated eigenvalues of T.

    When every off-diagonal product is positive, T is similar to a symmetric
    matrix and a symmetric tridiagonal solver is used; otherwise a balanced
    dense eigensolver, with complex pairs discarded and counted.
    """
    T = spectral_matrix(BasicEquationCoefficients(a, b0, b1, b2, 0.0, 0.0), n)
    if n == 0:
        return AllowedC0([float(-T.diag[0])], 0)
    products = T.lower * T.upper
    if np.all(products > 0.0):
        eig = eigh_tridiagonal(T.diag, np.sqrt(products), eigvals_only=True)
        return AllowedC0(sorted(float(-e) for e in eig), 0)
    eig = np.linalg.eigvals(T.dense())
    scale = max(T.norm(), 1.0)
    real = eig[np.abs(eig.imag) <= 1e-9 * scale].real
    n_complex = (len(eig) - len(real)) // 2
    return AllowedC0(sorted(float(-e) for e in real), n_complex)


def expansion_coefficients(
    coeffs: BasicEquationCoefficients, n: int
) -> tuple[np.ndarray, float]:
    """Polynomial coefficients from the three-term recursion, with ``p[0] = 1``.

    Returns ``(p, terminal_residual)``; the terminal residual is the last row
    of the spectral system and vanishes iff ``c0`` is an allowed value.
    """
    coeffs.check_denominators(n)
    a, b0, b1, b2, c0 = coeffs.a, coeffs.b0, coeffs.b1, coeffs.b2, coeffs.c0
    p = np.zeros(n + 1)
    p[0] = 1.0
    for k in range(n):
        below = p[k - 1] if k > 0 else 0.0
        p[k + 1] = (b2 * (n - k + 1) * below - (c0 + k * (b1 + k - 1)) * p[k]) / (
            (k + 1) * (b0 - k * a)
        )
    below = p[n - 1] if n > 0 else 0.0
    terminal = b2 * below - (c0 + n * (b1 + n - 1)) * p[n]
    return p, float(terminal)


def operator_polynomial(coeffs: BasicEquationCoefficients, p) -> np.ndarray:
    """Coefficients of ``H phi`` for ``phi = sum p[m] z**m`` (length ``len(p) + 1``)."""
    p = np.asarray(p, dtype=float)
    out = np.zeros(len(p) + 1)
    a, b0, b1, b2, c0, c1 = coeffs.as_tuple()
    for m, pm in enumerate(p):
        if pm == 0.0:
            continue
        # z(z-a) m(m-1) z^{m-2}
        out[m] += pm * m * (m - 1)
        if m >= 1:
            out[m - 1] += pm * m * (b0 - a * (m - 1))
        out[m] += pm * (b1 * m + c0)
        out[m + 1] += pm * (b2 * m + c1)
    return out


def operator_residual(coeffs: BasicEquationCoefficients, p) -> float:
    """Max absolute coefficient of ``H phi``; zero iff ``phi`` solves the basic equation."""
    if len(p) == 0:
        return 0.0
    return float(np.max(np.abs(operator_polynomial(coeffs, p))))
