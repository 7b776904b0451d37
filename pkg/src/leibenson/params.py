"""Parameter validation, derived constants and regime classification.

The slow-diffusion profile

    w(t, x) = t^(-d/beta) * [C - kappa * (t^(-1/beta) |x|)^(p/(p-1))]_+^gamma

is governed by three inputs (d, p, q) and four derived constants:

    beta  = p + d*(q*(p-1) - 1)
    gamma = (p-1) / (q*(p-1) - 1)
    kappa = (q*(p-1) - 1) / (p*q) * beta^(-1/(p-1))
    C     = the unique constant making w(t, .) a probability density for every t > 0.

Everything downstream (field evaluators, quadrature certificates, the SDE
engine) reads these values from a single immutable ``LeibensonParams``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq
from scipy.special import betaln, gammaln

from .errors import ConvergenceError, DomainError, RegimeError

__all__ = [
    "LeibensonParams",
    "RegimeReport",
    "derive_constants",
    "normalization_constant",
    "normalization_constant_by_quadrature",
    "classify_regime",
    "unit_sphere_area",
]


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d=1, 2*pi for d=2, 4*pi for d=3)."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0))


@dataclass(frozen=True)
class LeibensonParams:
    """Validated (d, p, q) plus all derived constants. Immutable and thread-safe."""

    d: int
    p: float
    q: float
    beta: float
    gamma: float
    kappa: float
    c_norm: float

    @property
    def s(self) -> float:
        """Radial exponent p/(p-1): the profile depends on |x| through |x|^s."""
        return self.p / (self.p - 1.0)

    @property
    def r_unit(self) -> float:
        """Support radius at t=1: R(t) = r_unit * t^(1/beta)."""
        return (self.c_norm / self.kappa) ** ((self.p - 1.0) / self.p)

    @property
    def omega(self) -> float:
        return unit_sphere_area(self.d)

    @property
    def coeff_prefactor(self) -> float:
        """(gamma*kappa*p/(p-1))^(p-2), the time-independent factor of the
        diffusion coefficient rho."""
        return (self.gamma * self.kappa * self.p / (self.p - 1.0)) ** (self.p - 2.0)

    @property
    def coeff_time_exponent(self) -> float:
        """Exponent a such that rho(t, x) = coeff_prefactor * t^a * f_+(t,x) * |x|^((p-2)/(p-1))."""
        d, p, q, beta = self.d, self.p, self.q, self.beta
        return -(d * (p - 2.0) + p * (p - 2.0) / (p - 1.0) + d * (p - 1.0) * (q - 1.0)) / beta

    def regime(self) -> "RegimeReport":
        return classify_regime(self.d, self.p, self.q)

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "q": self.q,
            "beta": self.beta,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "c_norm": self.c_norm,
        }


@dataclass(frozen=True)
class RegimeReport:
    """Which of the theorem-condition predicates hold for a given (d, p, q).

    All flags are computed by exact strict-inequality evaluation in float64;
    boundary cases are false. When ``barenblatt_ok`` is false every other flag
    is false as well, since the remaining statements presuppose the
    slow-diffusion profile.
    """

    barenblatt_ok: bool
    superposition_ok: bool
    markov_ok: bool
    strong_solution_ok: bool
    uniqueness_i_ok: bool
    uniqueness_ii_ok: bool

    def as_dict(self) -> dict:
        return {
            "barenblatt_ok": self.barenblatt_ok,
            "superposition_ok": self.superposition_ok,
            "markov_ok": self.markov_ok,
            "strong_solution_ok": self.strong_solution_ok,
            "uniqueness_i_ok": self.uniqueness_i_ok,
            "uniqueness_ii_ok": self.uniqueness_ii_ok,
        }


def _validate_domain(d: int, p: float, q: float) -> None:
    if not (isinstance(d, (int,)) and d >= 1):
        raise DomainError(f"dimension d must be a positive integer, got {d!r}")
    if not (p > 1.0):
        raise DomainError(f"p must satisfy p > 1, got p={p}")
    if not (q > 0.0):
        raise DomainError(f"q must satisfy q > 0, got q={q}")


def derive_constants(d: int, p: float, q: float) -> LeibensonParams:
    """Validate (d, p, q), derive beta/gamma/kappa and solve for the mass constant C.

    Raises
    ------
    DomainError
        if p <= 1 or q <= 0 (or d is not a positive integer).
    RegimeError
        if q*(p-1) <= 1: the compact-support profile only exists in the
        slow-diffusion regime q*(p-1) > 1.
    """
    _validate_domain(d, p, q)
    m = q * (p - 1.0)
    if not (m > 1.0):
        raise RegimeError(
            f"slow-diffusion regime requires q*(p-1) > 1; got q*(p-1) = {m} "
            f"for (d={d}, p={p}, q={q})"
        )
    beta = p + d * (m - 1.0)
    gamma = (p - 1.0) / (m - 1.0)
    kappa = (m - 1.0) / (p * q) * beta ** (-1.0 / (p - 1.0))
    c = normalization_constant(d, p, q, beta, gamma, kappa)
    return LeibensonParams(d=d, p=float(p), q=float(q), beta=beta, gamma=gamma,
                           kappa=kappa, c_norm=c)


def normalization_constant(d: int, p: float, q: float,
                           beta: float, gamma: float, kappa: float) -> float:
    """Closed-form mass constant C from the Beta-function reduction.

    Writing s = p/(p-1), the radial reduction of the unit-mass condition at
    t = 1 reads

        omega_{d-1} * C^(gamma + d/s) * kappa^(-d/s) * (1/s) * B(d/s, gamma+1) = 1,

    which is solved for C directly.  ``normalization_constant_by_quadrature``
    is the independent cross-check.
    """
    s = p / (p - 1.0)
    a = d / s
    # log of the C-independent factor: omega * kappa^(-a) / s * B(a, gamma+1)
    logk = (math.log(unit_sphere_area(d)) - a * math.log(kappa) - math.log(s)
            + betaln(a, gamma + 1.0))
    return math.exp(-logk / (gamma + a))


def normalization_constant_by_quadrature(d: int, p: float, q: float,
                                         beta: float, gamma: float, kappa: float,
                                         t: float = 1.0, tol: float = 1e-13) -> float:
    """Oracle for ``normalization_constant``: bracketing root-solve of
    mass(C) - 1 = 0 where mass(C) is the radial quadrature of the profile.

    Uses adaptive Gauss-Kronrod integration of the trial density; independent
    of the Beta-function route. ``t`` only rescales the integrand and must not
    change the root.
    """
    from .quad import integrate_radial  # local import: quad depends on params

    s = p / (p - 1.0)
    omega = unit_sphere_area(d)
    kt = kappa * t ** (-s / beta)
    pref = t ** (-d / beta) * omega

    def mass(c: float) -> float:
        radius = (c / kt) ** (1.0 / s)

        def g(r):
            return pref * (c - kt * r ** s) ** gamma * r ** (d - 1)

        res = integrate_radial(g, 0.0, radius, tol=tol)
        if not res.converged:
            raise ConvergenceError(
                f"mass quadrature failed to converge for trial C={c}")
        return res.value

    # mass(C) is continuous and strictly increasing: expand a bracket around 1
    lo = hi = 1.0
    for _ in range(200):
        if mass(hi) > 1.0:
            break
        hi *= 4.0
    else:
        raise ConvergenceError("failed to bracket the normalization constant from above")
    for _ in range(200):
        if mass(lo) < 1.0:
            break
        lo /= 4.0
    else:
        raise ConvergenceError("failed to bracket the normalization constant from below")
    return brentq(lambda c: mass(c) - 1.0, lo, hi, xtol=1e-300, rtol=8.9e-16)


def classify_regime(d, p: float | None = None, q: float | None = None) -> RegimeReport:
    """Evaluate the theorem-condition predicates for (d, p, q).

    Accepts either raw ``(d, p, q)`` (which need not satisfy q*(p-1) > 1; then
    ``barenblatt_ok`` is simply false) or a ``LeibensonParams``.

    Predicates (all strict, evaluated at full float precision):

    - barenblatt_ok:      q*(p-1) > 1
    - superposition_ok:   barenblatt and p > (1+d)/d
    - markov_ok:          barenblatt and d >= 2 and p > d/(d-1), plus
                          q*(p-1) > (2-p+d)/d when p < 2
    - strong_solution_ok: d >= 2 and p > d/(d-1) and q > (|p-2|+d)/(d*(p-1))
    - uniqueness_i_ok:    barenblatt and d >= 2 and p > 2 and q*(p-1) < 1 + d*(p-1)^2
    - uniqueness_ii_ok:   identical to strong_solution_ok
    """
    if isinstance(d, LeibensonParams):
        params = d
        d, p, q = params.d, params.p, params.q
    _validate_domain(d, p, q)

    m = q * (p - 1.0)
    barenblatt = m > 1.0
    superposition = barenblatt and p > (1.0 + d) / d
    markov = (barenblatt and d >= 2 and p > d / (d - 1.0)
              and (p >= 2.0 or m > (2.0 - p + d) / d))
    strong = (barenblatt and d >= 2 and p > d / (d - 1.0)
              and q > (abs(p - 2.0) + d) / (d * (p - 1.0)))
    uniq_i = barenblatt and d >= 2 and p > 2.0 and m < 1.0 + d * (p - 1.0) ** 2
    return RegimeReport(
        barenblatt_ok=barenblatt,
        superposition_ok=superposition,
        markov_ok=markov,
        strong_solution_ok=strong,
        uniqueness_i_ok=uniq_i,
        uniqueness_ii_ok=strong,
    )
