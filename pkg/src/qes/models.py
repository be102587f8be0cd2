"""The four radial potentials and their reduction to the basic equation.

Every model supplies

* ``energy(n)``: the energy fixed by the quasi-exactness constraint,
* ``coefficients(E)``: the basic-equation coefficients,
* ``gauge(E)`` and ``prefactor()``: the closed-form factor multiplying the
  polynomial ``sum p_m z**m``,
* ``potential(r)``: the physical potential, used by the oracle.

Atomic units (m = hbar = 1) throughout; ``u(r) = r R(r)`` is the reduced
radial function.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .core import (
    BasicEquationCoefficients,
    allowed_c0_values,
    expansion_coefficients,
    operator_residual,
    spectral_matrix,
    tridiagonal_determinant,
)
from .errors import (
    BracketExhausted,
    InvalidParameters,
    NegativeDiscriminant,
    NoAdmissibleRoot,
    NonNegativeEnergy,
)

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# Tolerances a returned solution is expected to meet.
DET_TOL = 1e-10
TERMINAL_TOL = 1e-10
OPERATOR_TOL = 1e-12


def lprime(l: int, epsilon: float) -> float:
    """Effective angular momentum with ``l'(l'+1) = l(l+1) + 2*epsilon``."""
    disc = 4 * l * l + 4 * l + 8 * epsilon + 1
    if disc < 0:
        raise NegativeDiscriminant(
            f"4l^2 + 4l + 8*epsilon + 1 = {disc!r} < 0 (l={l}, epsilon={epsilon!r})"
        )
    return (-1.0 + math.sqrt(disc)) / 2.0


def _bound_k(E: float) -> float:
    if E >= 0:
        raise NonNegativeEnergy(f"sqrt(-2E) needs E < 0, got E={E!r}")
    return math.sqrt(-2.0 * E)


@dataclass(frozen=True)
class Gauge:
    """``log g(r) = power*ln r - linear*r - inv/r - quad*r**2 - inv2/r**2``."""

    power: float = 0.0
    linear: float = 0.0
    inv: float = 0.0
    quad: float = 0.0
    inv2: float = 0.0

    def log(self, r):
        return (
            self.power * np.log(r)
            - self.linear * r
            - self.inv / r
            - self.quad * r**2
            - self.inv2 / r**2
        )

    def d1(self, r):
        return (
            self.power / r
            - self.linear
            + self.inv / r**2
            - 2 * self.quad * r
            + 2 * self.inv2 / r**3
        )

    def d2(self, r):
        return -self.power / r**2 - 2 * self.inv / r**3 - 2 * self.quad - 6 * self.inv2 / r**4


class Model:
    """Behaviour shared by the four potential families."""

    family: ClassVar[str]
    tuned: ClassVar[str]
    #: public parameter name -> attribute name
    param_names: ClassVar[dict[str, str]]
    #: r-power of the expansion variable z (z = scale * r**z_power)
    z_power: ClassVar[int] = 1

    l: int

    # -- parameters ---------------------------------------------------------
    def params(self) -> dict[str, float]:
        out = {name: float(getattr(self, attr)) for name, attr in self.param_names.items()}
        out["l"] = self.l
        return out

    def fixed_params(self) -> dict[str, float]:
        out = self.params()
        del out[self.tuned]
        return out

    @property
    def tuned_value(self) -> float:
        return float(getattr(self, self.param_names[self.tuned]))

    def with_tuned(self, value: float) -> "Model":
        return dataclasses.replace(self, **{self.param_names[self.tuned]: float(value)})

    @classmethod
    def from_params(cls, params: Mapping[str, float]) -> "Model":
        known = set(cls.param_names) | {"l"}
        unknown = set(params) - known
        if unknown:
            raise InvalidParameters(f"unknown parameters for {cls.family}: {sorted(unknown)}")
        missing = set(cls.param_names) - set(params)
        if missing:
            raise InvalidParameters(f"missing parameters for {cls.family}: {sorted(missing)}")
        kwargs = {attr: float(params[name]) for name, attr in cls.param_names.items()}
        return cls(l=_as_l(params.get("l", 0)), **kwargs)

    # -- physics ------------------------------------------------------------
    def energy(self, n: int) -> float:
        raise NotImplementedError

    def coefficients(self, E: float) -> BasicEquationCoefficients:
        raise NotImplementedError

    def gauge(self, E: float) -> Gauge:
        raise NotImplementedError

    def prefactor(self) -> Polynomial:
        return Polynomial([1.0])

    def z_scale(self) -> float:
        return 1.0

    def potential(self, r):
        raise NotImplementedError

    def effective_potential(self, r):
        return self.potential(r) + self.l * (self.l + 1) / (2.0 * r**2)

    # -- oracle hooks -------------------------------------------------------
    def small_r_log_derivative(self, r):
        """Leading small-r behaviour of u'/u for the regular solution."""
        raise NotImplementedError

    def large_r_log_derivative(self, r, E: float):
        """Leading large-r behaviour of u'/u for the decaying solution."""
        raise NotImplementedError

    def riccati_start(self, r_min: float) -> float:
        """Radius at which the small-r asymptotics are accurate enough to start."""
        return r_min * 1e-3

    def decay_rate(self, E: float) -> float:
        raise NotImplementedError


def _as_l(value) -> int:
    l = int(value)
    if l != value or l < 0:
        raise InvalidParameters(f"l must be a non-negative integer, got {value!r}")
    return l


@dataclass(frozen=True)
class NonPolynomial(Model):
    """``V = r^2 + alpha r^2 / (1 + beta r^2)`` in the variable ``z = beta r^2``."""

    alpha: float
    beta: float
    l: int = 0

    family: ClassVar[str] = "non-polynomial"
    tuned: ClassVar[str] = "alpha"
    param_names: ClassVar[dict[str, str]] = {"alpha": "alpha", "beta": "beta"}
    z_power: ClassVar[int] = 2

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameters(f"beta must be positive, got {self.beta!r}")
        _as_l(self.l)

    def energy(self, n: int) -> float:
        return self.alpha / self.beta + SQRT2 * (2 * n + self.l + 3.5)

    def coefficients(self, E: float) -> BasicEquationCoefficients:
        l, alpha, beta = self.l, self.alpha, self.beta
        return BasicEquationCoefficients(
            a=-1.0,
            b0=l + 1.5,
            b1=l + 3.5 - SQRT2 / beta,
            b2=-SQRT2 / beta,
            c0=(E - SQRT2 * (l + 1.5)) / (2 * beta) + l + 1.5,
            c1=(E - alpha / beta) / (2 * beta) - (l + 3.5) / (beta * SQRT2),
        )

    c0_slope = property(lambda self: 1.0 / (2 * self.beta**2))

    def gauge(self, E: float) -> Gauge:
        return Gauge(power=self.l + 1, quad=1 / SQRT2)

    def prefactor(self) -> Polynomial:
        return Polynomial([1.0, 0.0, self.beta])

    def z_scale(self) -> float:
        return self.beta

    def potential(self, r):
        return r**2 + self.alpha * r**2 / (1 + self.beta * r**2)

    def small_r_log_derivative(self, r):
        return (self.l + 1) / r

    def large_r_log_derivative(self, r, E):
        c = 1 / SQRT2
        nu = (E - self.alpha / self.beta) / (2 * c) - 0.5
        return nu / r - 2 * c * r

    def decay_rate(self, E: float) -> float:
        return 2.0**0.25


@dataclass(frozen=True)
class ScreenedCoulomb(Model):
    """``V = gamma/r + delta/(r + kappa)`` with ``gamma < -delta``."""

    gamma: float
    delta: float
    kappa: float
    l: int = 0

    family: ClassVar[str] = "screened-coulomb"
    tuned: ClassVar[str] = "kappa"
    param_names: ClassVar[dict[str, str]] = {"gamma": "gamma", "delta": "delta", "kappa": "kappa"}

    def __post_init__(self):
        if not self.gamma < -self.delta:
            raise InvalidParameters(
                f"need gamma < -delta, got gamma={self.gamma!r}, delta={self.delta!r}"
            )
        if not self.kappa > 0:
            raise InvalidParameters(f"kappa must be positive, got {self.kappa!r}")
        _as_l(self.l)

    def energy(self, n: int) -> float:
        return -0.5 * ((self.delta + self.gamma) / (n + self.l + 2)) ** 2

    def coefficients(self, E: float) -> BasicEquationCoefficients:
        k = _bound_k(E)
        return BasicEquationCoefficients(
            *_screened_coulomb_coefficients(self.gamma, self.delta, self.kappa, self.l, k)
        )

    def gauge(self, E: float) -> Gauge:
        return Gauge(power=self.l + 1, linear=_bound_k(E))

    def prefactor(self) -> Polynomial:
        return Polynomial([self.kappa, 1.0])

    def potential(self, r):
        return self.gamma / r + self.delta / (r + self.kappa)

    def small_r_log_derivative(self, r):
        return (self.l + 1) / r + self.gamma / (self.l + 1)

    def large_r_log_derivative(self, r, E):
        k = _bound_k(E)
        return -(self.gamma + self.delta) / (k * r) - k

    def decay_rate(self, E: float) -> float:
        return _bound_k(E)


def _screened_coulomb_coefficients(gamma, delta, kappa, l, k):
    # Elementwise in kappa so the root scan can evaluate many kappas at once.
    return (
        -kappa,
        2 * (l + 1) * kappa,
        2 * (l + 2 - k * kappa),
        -2 * k + 0 * kappa,
        -2 * (kappa * (l + 1) * k + kappa * gamma - l - 1),
        2 * (-delta - gamma - k * (l + 2)) + 0 * kappa,
    )


@dataclass(frozen=True)
class SingularPower(Model):
    """``V = lambda/r + mu/r^2 + xi/r^3 + tau/r^4`` with ``lambda < 0``, ``tau > 0``."""

    lam: float
    mu: float
    xi: float
    tau: float
    l: int = 0

    family: ClassVar[str] = "singular-power"
    tuned: ClassVar[str] = "mu"
    param_names: ClassVar[dict[str, str]] = {"lambda": "lam", "mu": "mu", "xi": "xi", "tau": "tau"}

    def __post_init__(self):
        if not self.lam < 0:
            raise InvalidParameters(f"lambda must be negative, got {self.lam!r}")
        if not self.tau > 0:
            raise InvalidParameters(f"tau must be positive, got {self.tau!r}")
        _as_l(self.l)

    @property
    def s(self) -> float:
        return math.sqrt(2 * self.tau)

    def _shift(self, n: int) -> float:
        return n + 1 + self.xi / self.s

    def energy(self, n: int) -> float:
        return -self.lam**2 / (2 * self._shift(n) ** 2)

    def coefficients(self, E: float) -> BasicEquationCoefficients:
        k = _bound_k(E)
        s, xi, l = self.s, self.xi, self.l
        return BasicEquationCoefficients(
            a=0.0,
            b0=2 * s,
            b1=2 * (1 + xi / s),
            b2=-2 * k,
            c0=-2 * self.mu - l * (l + 1) - 2 * s * k + xi / s + xi**2 / s**2,
            c1=-2 * (k * (1 + xi / s) + self.lam),
        )

    c0_slope = property(lambda self: -2.0)

    def gauge(self, E: float) -> Gauge:
        return Gauge(power=1 + self.xi / self.s, linear=_bound_k(E), inv=self.s)

    def potential(self, r):
        return self.lam / r + self.mu / r**2 + self.xi / r**3 + self.tau / r**4

    def small_r_log_derivative(self, r):
        return (1 + self.xi / self.s) / r + self.s / r**2

    def large_r_log_derivative(self, r, E):
        k = _bound_k(E)
        return -self.lam / (k * r) - k

    def riccati_start(self, r_min: float) -> float:
        return max(r_min, self.s / 60.0)

    def decay_rate(self, E: float) -> float:
        return _bound_k(E)


@dataclass(frozen=True)
class SingularAnharmonic(Model):
    """``V = omega r^2 + epsilon/r^2 + sigma/r^4 + chi/r^6`` in ``z = r^2``."""

    omega: float
    epsilon: float
    sigma: float
    chi: float
    l: int = 0

    family: ClassVar[str] = "singular-anharmonic"
    tuned: ClassVar[str] = "epsilon"
    param_names: ClassVar[dict[str, str]] = {
        "omega": "omega",
        "epsilon": "epsilon",
        "sigma": "sigma",
        "chi": "chi",
    }
    z_power: ClassVar[int] = 2

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidParameters(f"omega must be positive, got {self.omega!r}")
        if not self.chi > 0:
            raise InvalidParameters(f"chi must be positive, got {self.chi!r}")
        _as_l(self.l)

    @property
    def q(self) -> float:
        return math.sqrt(2 * self.chi)

    @property
    def w(self) -> float:
        return math.sqrt(2 * self.omega)

    @property
    def lprime(self) -> float:
        return lprime(self.l, self.epsilon)

    def energy(self, n: int) -> float:
        return self.w * (2 * n + 2 + self.sigma / self.q)

    def coefficients(self, E: float) -> BasicEquationCoefficients:
        q, w, sigma = self.q, self.w, self.sigma
        # l'(l'+1) = l(l+1) + 2 epsilon, defined even where l' itself is complex
        lpl = self.l * (self.l + 1) + 2 * self.epsilon
        return BasicEquationCoefficients(
            a=0.0,
            b0=q,
            b1=2 + sigma / q,
            b2=-w,
            c0=-0.25 * (lpl + 2 * w * q - sigma**2 / q**2 - 2 * sigma / q - 0.75),
            c1=E / 2 - (w / 2) * (2 + sigma / q),
        )

    c0_slope = property(lambda self: -0.5)

    def gauge(self, E: float) -> Gauge:
        return Gauge(power=1.5 + self.sigma / self.q, quad=self.w / 2, inv2=self.q / 2)

    def potential(self, r):
        return self.omega * r**2 + self.epsilon / r**2 + self.sigma / r**4 + self.chi / r**6

    def small_r_log_derivative(self, r):
        return (1.5 + self.sigma / self.q) / r + self.q / r**3

    def large_r_log_derivative(self, r, E):
        c = self.w / 2
        nu = E / (2 * c) - 0.5
        return nu / r - 2 * c * r

    def riccati_start(self, r_min: float) -> float:
        return max(r_min, math.sqrt(self.q / 2 / 60.0))

    def decay_rate(self, E: float) -> float:
        return math.sqrt(self.w)


FAMILIES: dict[str, type[Model]] = {
    cls.family: cls for cls in (NonPolynomial, ScreenedCoulomb, SingularPower, SingularAnharmonic)
}


def family_class(family) -> type[Model]:
    if isinstance(family, type) and issubclass(family, Model):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise InvalidParameters(
            f"unknown model {family!r}; choose from {sorted(FAMILIES)}"
        ) from None


def closed_form_energy(model: Model, n: int) -> float:
    return model.energy(n)


def coefficient_map(model: Model, E: float) -> BasicEquationCoefficients:
    return model.coefficients(E)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QesSolution:
    model: Model
    n: int
    energy: float
    coeffs: BasicEquationCoefficients
    p: np.ndarray
    diagnostics: dict[str, float] = field(default_factory=dict)

    @property
    def family(self) -> str:
        return self.model.family

    @property
    def tuned_name(self) -> str:
        return self.model.tuned

    @property
    def tuned_value(self) -> float:
        return self.model.tuned_value

    def passes(self) -> bool:
        d = self.diagnostics
        scale = float(np.max(np.abs(self.p)))
        return (
            d["det_residual"] <= DET_TOL
            and abs(d["terminal_residual"]) <= TERMINAL_TOL * scale
            and d["operator_residual"] <= OPERATOR_TOL * scale
        )


def build_solution(model: Model, n: int, energy: float | None = None) -> QesSolution:
    """Assemble the degree-``n`` solution for a fully specified model."""
    E = model.energy(n) if energy is None else energy
    coeffs = model.coefficients(E)
    p, terminal = expansion_coefficients(coeffs, n)
    diagnostics = {
        "det_residual": spectral_matrix(coeffs, n).relative_determinant(),
        "terminal_residual": terminal,
        "operator_residual": operator_residual(coeffs, p),
    }
    return QesSolution(model, n, E, coeffs, p, diagnostics)


def solve_tuned_parameter(
    family,
    fixed: Mapping[str, float],
    n: int,
    *,
    kappa_max: float | None = None,
    scan_points: int = 10_000,
) -> list[QesSolution]:
    """All admissible values of the model's tuned parameter at degree ``n``.

    ``fixed`` holds every parameter except the tuned one (plus ``l``).
    Solutions are returned ascending in the tuned parameter.
    """
    cls = family_class(family)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if cls.tuned in fixed:
        raise InvalidParameters(f"{cls.tuned} is solved for and must not be given")
    if cls is ScreenedCoulomb:
        tuned = _screened_coulomb_roots(fixed, n, kappa_max, scan_points)
        models = [ScreenedCoulomb.from_params({**fixed, "kappa": t}) for t in tuned]
    else:
        models = _linear_roots(cls, fixed, n)
    if not models:
        raise NoAdmissibleRoot(f"no admissible {cls.tuned} for {cls.family} at n={n}")
    solutions = [build_solution(m, n) for m in models]
    for sol in solutions:
        if not sol.passes():
            log.warning("solution %s=%r misses tolerances: %s", sol.tuned_name, sol.tuned_value, sol.diagnostics)
    return sorted(solutions, key=lambda s: s.tuned_value)


def _linear_roots(cls, fixed, n) -> list[Model]:
    # The tuned parameter enters c0 alone (linearly); everything else is fixed.
    base = cls.from_params({**fixed, cls.tuned: 0.0})
    E = base.energy(n)
    if cls is SingularPower and base._shift(n) <= 0:
        raise NoAdmissibleRoot(f"n + 1 + xi/sqrt(2 tau) <= 0 at n={n}: no decaying state")
    c = base.coefficients(E)
    roots = allowed_c0_values(c.a, c.b0, c.b1, c.b2, n)
    if roots.complex_pairs:
        log.info("%d complex pair(s) of c0 discarded", roots.complex_pairs)
    models = []
    for c0 in roots.values:
        model = base.with_tuned((c0 - c.c0) / base.c0_slope)
        if cls is SingularAnharmonic and 1 + 4 * (model.l * (model.l + 1) + 2 * model.epsilon) < 0:
            log.info("epsilon=%r discarded: effective angular momentum is complex", model.epsilon)
            continue
        models.append(model)
    return models


def default_kappa_max(gamma: float, delta: float, l: int) -> float:
    return 1e3 * (l + 2) / abs(gamma + delta)


def _screened_coulomb_roots(fixed, n, kappa_max, scan_points) -> list[float]:
    probe = ScreenedCoulomb.from_params({**fixed, "kappa": 1.0})
    gamma, delta, l = probe.gamma, probe.delta, probe.l
    k = _bound_k(probe.energy(n))
    hi = default_kappa_max(gamma, delta, l) if kappa_max is None else float(kappa_max)
    if not hi > 0:
        raise InvalidParameters(f"kappa bracket upper end must be positive, got {hi!r}")

    idx = np.arange(n + 1, dtype=float)

    def det(kappa):
        kappa = np.asarray(kappa, dtype=float)
        a, b0, b1, b2, c0, _ = (
            np.asarray(x, dtype=float)[..., None]
            for x in _screened_coulomb_coefficients(gamma, delta, kappa, l, k)
        )
        diag = c0 + idx * (b1 + idx - 1)
        lower = -(n - idx[1:] + 1) * b2
        upper = (idx[:-1] + 1) * (b0 - idx[:-1] * a)
        return tridiagonal_determinant(diag, lower, upper)

    grid = np.geomspace(hi * 1e-7, hi, scan_points)
    values = det(grid)
    sign = np.sign(values)
    cells = np.nonzero(sign[:-1] * sign[1:] <= 0)[0]
    if cells.size == 0:
        return []
    interior = cells[(cells > 0) & (cells < len(grid) - 2)]
    if interior.size == 0:
        raise BracketExhausted(
            f"determinant changes sign only at the kappa bracket edges (0, {hi!r}]"
        )
    roots = []
    for i in interior:
        lo_k, hi_k = grid[i], grid[i + 1]
        if values[i] == 0.0:
            root = lo_k
        elif values[i + 1] == 0.0:
            continue  # picked up as the left end of the next cell
        else:
            root = brentq(lambda x: float(det(x)), lo_k, hi_k, xtol=1e-15 * lo_k, rtol=1e-15, maxiter=500)
        if root > 0:
            roots.append(float(root))
    return roots


# ---------------------------------------------------------------------------
# wavefunctions
# ---------------------------------------------------------------------------


def radial_polynomial(solution: QesSolution) -> Polynomial:
    """Prefactor times ``sum p_m z**m`` written as a polynomial in r."""
    model = solution.model
    scale = model.z_scale()
    coef = np.zeros(model.z_power * (len(solution.p) - 1) + 1)
    coef[:: model.z_power] = solution.p * scale ** np.arange(len(solution.p))
    return model.prefactor() * Polynomial(coef)


def wavefunction_derivatives(solution: QesSolution, r):
    """``(u, u', u'')`` of the closed-form reduced radial function at ``r > 0``."""
    r = np.asarray(r, dtype=float)
    g = solution.model.gauge(solution.energy)
    P = radial_polynomial(solution)
    dP, d2P = P.deriv(1), P.deriv(2)
    with np.errstate(under="ignore"):
        e = np.exp(g.log(r))
    g1, g2 = g.d1(r), g.d2(r)
    p0, p1, p2 = P(r), dP(r), d2P(r)
    u = e * p0
    du = e * (g1 * p0 + p1)
    d2u = e * ((g2 + g1 * g1) * p0 + 2 * g1 * p1 + p2)
    return u, du, d2u


def wavefunction(solution: QesSolution, r):
    """Closed-form reduced radial function; constant prefactors are absorbed in ``p[0]``."""
    u = wavefunction_derivatives(solution, r)[0]
    return float(u) if np.ndim(u) == 0 else u


# ---------------------------------------------------------------------------
# published non-polynomial values (kept for the errata report)
# ---------------------------------------------------------------------------


def published_nonpolynomial_energy(alpha: float, beta: float, l: int, n: int) -> float:
    """Energy formula as printed, with the opposite sign on the sqrt(2) term."""
    return alpha / beta - SQRT2 * (2 * n + l + 3.5)


def published_nonpolynomial_ground(beta: float, l: int) -> tuple[float, float]:
    """``(alpha, E0)`` from the printed n=0 constraint
    ``alpha/(2 beta^2) - sqrt(2)/beta + l/2 + 1 = 0`` and the printed energy."""
    alpha = 2 * beta**2 * (SQRT2 / beta - l / 2 - 1)
    return alpha, published_nonpolynomial_energy(alpha, beta, l, 0)
