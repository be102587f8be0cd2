"""Independent numerical checks of the algebraic solutions.

Nothing here uses the recursion or the determinant condition: the residual
differentiates the closed-form wavefunction analytically, the shooting solver
integrates the radial equation ``u'' = 2 (V_eff - E) u`` from the potential
alone, and the cofactor determinant is plain Laplace expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .core import SpectralMatrix
from .errors import DegreeTooLarge, InvalidGrid, NoSignChange, NotConverged, StiffFailure
from .models import Model, QesSolution, wavefunction, wavefunction_derivatives

__all__ = [
    "RadialGrid",
    "OracleReport",
    "default_grid",
    "ode_residual",
    "ode_residual_profile",
    "shooting_eigenvalue",
    "normalization",
    "integrate",
    "cofactor_determinant",
    "verify_solution",
]

# Numerov is used where h^2 |G| stays below this; closer to the origin the
# log-derivative is integrated instead.
NUMEROV_MAX_STEP = 0.02
RICCATI_ETA = 0.02
_RESCALE = 1e150


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    count: int = 4096
    spacing: str = "uniform"

    def __post_init__(self):
        if not (self.r_min > 0 and math.isfinite(self.r_min)):
            raise InvalidGrid(f"r_min must be positive and finite, got {self.r_min!r}")
        if not (self.r_max > self.r_min and math.isfinite(self.r_max)):
            raise InvalidGrid(f"r_max must exceed r_min, got {self.r_max!r}")
        if self.count < 64:
            raise InvalidGrid(f"count must be at least 64, got {self.count}")
        if self.spacing not in ("uniform", "log"):
            raise InvalidGrid(f"spacing must be 'uniform' or 'log', got {self.spacing!r}")

    @property
    def points(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.linspace(self.r_min, self.r_max, self.count)
        return np.geomspace(self.r_min, self.r_max, self.count)

    def refined(self) -> "RadialGrid":
        """Same endpoints, every interval halved."""
        return RadialGrid(self.r_min, self.r_max, 2 * self.count - 1, self.spacing)


@dataclass(frozen=True)
class OracleReport:
    residual_rel: float
    e_shoot: float
    e_abs_err: float
    norm: float


def default_grid(solution: QesSolution, count: int = 4096, r_min: float = 1e-3) -> RadialGrid:
    """Uniform grid covering 12 decay lengths, stretched until the tail is negligible."""
    rate = solution.model.decay_rate(solution.energy)
    r_max = 12.0 / rate
    for _ in range(40):
        grid = RadialGrid(r_min, r_max, count)
        u = np.abs(wavefunction(solution, grid.points))
        peak = u.max()
        if peak == 0.0 or u[-1] < 1e-12 * peak:
            return grid
        r_max *= 1.25
    return grid


# ---------------------------------------------------------------------------
# analytic residual
# ---------------------------------------------------------------------------


def ode_residual_profile(model: Model, E: float, solution: QesSolution, grid: RadialGrid) -> np.ndarray:
    """Pointwise ``|-u''/2 + (V_eff - E) u|`` over the grid, relative to the largest term."""
    r = grid.points
    u, _, d2u = wavefunction_derivatives(solution, r)
    vu = model.effective_potential(r) * u
    scale = max(np.max(np.abs(d2u)), np.max(np.abs(vu)))
    if scale == 0.0:
        return np.zeros_like(r)
    return np.abs(-0.5 * d2u + vu - E * u) / scale


def ode_residual(model: Model, E: float, solution: QesSolution, grid: RadialGrid) -> float:
    return float(np.max(ode_residual_profile(model, E, solution, grid)))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = leggauss(8)


def integrate(f: Callable[[np.ndarray], np.ndarray], grid: RadialGrid) -> float:
    """Composite 8-point Gauss-Legendre over every grid interval."""
    r = grid.points
    lo, hi = r[:-1, None], r[1:, None]
    half = (hi - lo) / 2
    x = lo + half * (_GL_NODES + 1)
    return float(np.sum(half * _GL_WEIGHTS * f(x)))


def normalization(solution, grid: RadialGrid, rtol: float = 1e-8) -> float:
    """``int |u|^2 dr`` over the grid; ``solution`` may be a QesSolution or a callable.

    The value is accepted once halving every interval changes it by less than
    ``rtol``. For a QesSolution the grid must also reach far enough out that
    ``|u(r_max)| < 1e-12 max|u|`` and start close enough to the origin that the
    omitted mass, at most ``r_min u(r_min)^2``, stays below ``rtol`` of the total.
    """
    f = solution if callable(solution) else (lambda r: wavefunction(solution, r))

    def density(x):
        with np.errstate(under="ignore"):
            return np.abs(f(x)) ** 2

    coarse = integrate(density, grid)
    fine = integrate(density, grid.refined())
    if fine == 0.0:
        return 0.0
    if abs(fine - coarse) > rtol * abs(fine):
        raise NotConverged(f"normalization moved from {coarse!r} to {fine!r} on refinement")
    if isinstance(solution, QesSolution):
        u = np.abs(f(grid.points))
        if u[-1] >= 1e-12 * u.max():
            raise InvalidGrid(f"|u(r_max)| = {u[-1]:.3g} is not negligible; extend r_max")
        if grid.r_min * u[0] ** 2 > rtol * fine:
            raise InvalidGrid(f"mass below r_min = {grid.r_min!r} is not negligible")
    return fine


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------


def _riccati(F, y0: float, r0: float, targets: list[float]) -> list[tuple[float, float]]:
    """Integrate ``y' = F(r) - y^2`` and ``L' = y`` (``L = ln u``) with RK4.

    Returns ``(y, L)`` at each target radius (ascending, all ``>= r0``).
    The step follows the local scale ``1/(sqrt|F| + 1/r)`` so the stiff
    approach to the origin is resolved.
    """

    def rhs(r, y):
        return F(r) - y * y

    out = []
    r, y, L = r0, y0, 0.0
    for target in targets:
        while r < target:
            h = RICCATI_ETA / (math.sqrt(abs(F(r))) + 1.0 / r)
            h = min(h, target - r)
            k1 = rhs(r, y)
            k2 = rhs(r + h / 2, y + h / 2 * k1)
            k3 = rhs(r + h / 2, y + h / 2 * k2)
            k4 = rhs(r + h, y + h * k3)
            L += h / 6 * (y + 2 * (y + h / 2 * k1) + 2 * (y + h / 2 * k2) + (y + h * k3))
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            r = r + h if target - r > h else target
            if not math.isfinite(y) or abs(y) > 1e12 / r:
                raise StiffFailure(f"log-derivative diverged at r={r!r}: node or overflow")
        out.append((y, L))
    return out


class _Shooter:
    """Matching defect for one model on one grid.

    On a log grid the equation is solved for ``w = u / sqrt(r)`` in ``t = ln r``,
    where ``w'' = (r^2 F + 1/4) w``; on a uniform grid ``t = r`` and ``w = u``.
    """

    def __init__(self, model: Model, grid: RadialGrid):
        self.model = model
        self.grid = grid
        self.r = grid.points
        self.log = grid.spacing == "log"
        t = np.log(self.r) if self.log else self.r
        self.h = float(t[1] - t[0])
        self.veff = model.effective_potential(self.r)

    def G(self, E: float) -> np.ndarray:
        F = 2.0 * (self.veff - E)
        return self.r**2 * F + 0.25 if self.log else F

    def _layout(self, E: float, G: np.ndarray) -> tuple[int, int]:
        N = len(self.r)
        F = 2.0 * (self.veff - E)
        crossings = np.nonzero((F[:-1] < 0) & (F[1:] >= 0))[0]
        match = int(crossings[-1]) if crossings.size else N // 2
        unresolved = np.nonzero(self.h**2 * np.abs(G[: match + 1]) > NUMEROV_MAX_STEP)[0]
        start = int(unresolved[-1]) + 1 if unresolved.size else 0
        if not (start + 2 <= match <= N - 3):
            match = (start + N) // 2
        if not (start + 2 <= match <= N - 3):
            raise StiffFailure("grid too coarse: Numerov cannot be started before the far end")
        return start, match

    def _to_w(self, i: int, j: int, log_ratio: float) -> float:
        # w_j / w_i given ln(u_j / u_i)
        if self.log:
            log_ratio -= 0.5 * math.log(self.r[j] / self.r[i])
        return math.exp(log_ratio)

    def defect(self, E: float) -> float:
        G = self.G(E)
        start, match = self._layout(E, G)
        model, r = self.model, self.r
        F = lambda x: 2.0 * (float(model.effective_potential(x)) - E)  # noqa: E731

        # outward: log-derivative from the small-r asymptotics up to the Numerov start
        r_a, r_b = float(r[start]), float(r[start + 1])
        r0 = min(model.riccati_start(float(r[0])), r_a)
        (_, La), (_, Lb) = _riccati(F, float(model.small_r_log_derivative(r0)), r0, [r_a, r_b])
        out = _numerov(G, self.h, start, 1.0, self._to_w(start, start + 1, Lb - La), match + 1)

        # inward: from the asymptotic decay at r_max
        N = len(r)
        mid = 0.5 * (r[N - 1] + r[N - 2])
        dL = float(model.large_r_log_derivative(mid, E)) * (r[N - 1] - r[N - 2])
        inn = _numerov(G[::-1], self.h, 0, 1.0, self._to_w(N - 1, N - 2, -dL), N - 1 - (match - 1))

        wo = out[match - 1], out[match], out[match + 1]
        wi = inn[N - 1 - (match - 1)], inn[N - 1 - match], inn[N - 1 - (match + 1)]
        h2 = self.h**2
        c_lo, c_hi = 1 - h2 * G[match - 1] / 6, 1 - h2 * G[match + 1] / 6
        dwo = (c_hi * wo[2] - c_lo * wo[0]) / (2 * self.h)
        dwi = (c_hi * wi[2] - c_lo * wi[0]) / (2 * self.h)
        ell = 1.0 / math.sqrt(abs(G[match]) + 1.0)
        num = dwo * wi[1] - dwi * wo[1]
        den = math.hypot(wo[1], ell * dwo) * math.hypot(wi[1], ell * dwi)
        if not (math.isfinite(num) and den > 0):
            raise StiffFailure(f"matching defect is not finite at E={E!r}")
        return ell * num / den


def _numerov(G: np.ndarray, h: float, start: int, w0: float, w1: float, stop: int) -> dict[int, float]:
    """Numerov march of ``w'' = G w`` from indices ``start, start+1`` through ``stop``.

    Only the last three values are returned (keyed by index); the running pair
    is rescaled to stay in range, which leaves the log-derivative unchanged.
    """
    c = (h * h / 12.0) * G
    a, b = w0, w1
    keep = {}
    lo = stop - 2
    if start >= lo:
        keep[start] = a
    if start + 1 >= lo:
        keep[start + 1] = b
    for j in range(start + 1, stop):
        nxt = (2.0 * (1.0 + 5.0 * c[j]) * b - (1.0 - c[j - 1]) * a) / (1.0 - c[j + 1])
        a, b = b, nxt
        if j + 1 >= lo:
            keep[j + 1] = b
        if abs(b) > _RESCALE:
            a /= _RESCALE
            b /= _RESCALE
            for key in keep:
                keep[key] /= _RESCALE
    if not all(math.isfinite(v) for v in keep.values()):
        raise StiffFailure("Numerov march overflowed")
    return keep


def shooting_eigenvalue(
    model: Model, e_bracket: tuple[float, float], grid: RadialGrid, rtol: float = 1e-12
) -> float:
    """Eigenvalue of the radial equation inside ``e_bracket``.

    Integrates outward from the origin asymptotics and inward from the decaying
    tail, and finds the energy where the Wronskian at the matching point
    changes sign. The bracket must hold exactly one eigenvalue.
    """
    lo, hi = sorted(map(float, e_bracket))
    shooter = _Shooter(model, grid)
    d_lo, d_hi = shooter.defect(lo), shooter.defect(hi)
    if d_lo == 0.0:
        return lo
    if d_hi == 0.0:
        return hi
    if d_lo * d_hi > 0:
        raise NoSignChange(f"matching defect has the same sign at E={lo!r} and E={hi!r}")
    return float(
        brentq(shooter.defect, lo, hi, xtol=rtol * max(abs(lo), abs(hi)), rtol=rtol, maxiter=200)
    )


# ---------------------------------------------------------------------------
# brute-force determinant
# ---------------------------------------------------------------------------


def cofactor_determinant(matrix) -> float | np.ndarray:
    """Laplace expansion along the first row; accepts stacks ``(..., m, m)``."""
    if isinstance(matrix, SpectralMatrix):
        matrix = matrix.dense()
    A = np.asarray(matrix, dtype=float)
    if A.shape[-1] != A.shape[-2]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if A.shape[-1] > 9:
        raise DegreeTooLarge(f"cofactor expansion limited to n <= 8, got n = {A.shape[-1] - 1}")
    det = _laplace(A)
    return float(det) if det.ndim == 0 else det


def _laplace(A: np.ndarray) -> np.ndarray:
    m = A.shape[-1]
    if m == 1:
        return A[..., 0, 0]
    total = np.zeros(A.shape[:-2])
    for j in range(m):
        entry = A[..., 0, j]
        if not np.any(entry):
            continue
        minor = np.delete(np.delete(A, 0, axis=-2), j, axis=-1)
        total = total + (-1) ** j * entry * _laplace(minor)
    return total


# ---------------------------------------------------------------------------
# combined check
# ---------------------------------------------------------------------------


def verify_solution(
    solution: QesSolution,
    *,
    model: Model | None = None,
    energy: float | None = None,
    grid: RadialGrid | None = None,
    bracket_width: float = 0.05,
) -> OracleReport:
    """Residual, shooting eigenvalue and norm for one solution.

    ``model`` and ``energy`` default to the solution's own; passing others
    checks the closed-form wavefunction against a different Hamiltonian.
    """
    model = solution.model if model is None else model
    E = solution.energy if energy is None else float(energy)
    grid = default_grid(solution) if grid is None else grid
    residual = ode_residual(model, E, solution, grid)
    width = bracket_width * max(abs(E), 1e-8)
    e_shoot = shooting_eigenvalue(model, (E - width, E + width), grid)
    norm = normalization(solution, grid)
    return OracleReport(residual, e_shoot, abs(E - e_shoot), norm)
