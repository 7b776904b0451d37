"""Stateless closed-form evaluation of the self-similar density and the
coefficients of the associated degenerate SDE.

Conventions (all realized here, tested in tests/test_field.py):

- ``t`` in ``profile_f``, ``density_w``, ``grad_w``, ``support_radius`` is
  absolute time of the profile; the coefficient evaluators (``rho``,
  ``grad_rho``, ``hessian_rho_classical``, ``drift``, ``diffusion_scalar``)
  and the radial law take the simulation time and evaluate the profile at
  ``t + delta``.
- On the free boundary |x| = R exactly, coefficient evaluators return the
  outside (zero) value; the boundary is a measure-zero set and this keeps the
  diffusion nonnegative and the drift finite.
- ``grad_rho`` returns the zero vector at the origin.
- For p < 2 the coefficients are unbounded at the origin; point evaluation
  raises ``SingularityError`` there and the SDE engine applies its clamp
  policy instead.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import BoundaryError, DomainError, SingularityError
from .params import LeibensonParams
from .quad import integrate_radial

__all__ = ["FieldEvaluator", "RadialLaw"]

_CHEB_NODES = 4096

# Gauss-Kronrod 15-point nodes/weights reused for the vectorized CDF grid build
from .quad import _NODES as _GK_NODES, _WK15 as _GK_WEIGHTS  # noqa: E402


@dataclass(frozen=True)
class RadialLaw:
    """Cumulative radial mass of the shifted profile at fixed simulation time.

    The CDF is tabulated on a Chebyshev-spaced grid on [0, R] (cumulative
    Gauss-Kronrod panels) and interpolated monotonically (PCHIP). The inverse
    is the interpolated inverse with one Newton polish step.
    """

    params: LeibensonParams
    delta: float
    t: float
    radii: np.ndarray
    cdf_values: np.ndarray
    total_mass: float
    _interp: PchipInterpolator = dataclass_field(repr=False, compare=False, default=None)
    _deriv: PchipInterpolator = dataclass_field(repr=False, compare=False, default=None)

    @property
    def radius(self) -> float:
        return float(self.radii[-1])

    def cdf(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0.0):
            raise DomainError("radius must be nonnegative")
        out = np.clip(self._interp(np.minimum(r_arr, self.radius)), 0.0, 1.0)
        return float(out) if np.isscalar(r) or r_arr.ndim == 0 else out

    def inverse(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
            raise DomainError("u must lie strictly inside (0, 1)")
        target = u_arr * self.total_mass
        guess = np.interp(target, self.cdf_values, self.radii)
        slope = self._deriv(guess)
        correction = np.where(slope > 0.0,
                              (self._interp(guess) - target) / np.where(slope > 0.0, slope, 1.0),
                              0.0)
        polished = np.clip(guess - correction, 0.0, self.radius)
        return float(polished) if np.isscalar(u) or u_arr.ndim == 0 else polished


class FieldEvaluator:
    """Closed-form evaluators for one parameter set, time offset and source point.

    Pure and stateless apart from a lazily built, read-only radial-CDF cache;
    safe to share across threads.
    """

    def __init__(self, params: LeibensonParams, delta: float = 0.0, center=None):
        if delta < 0.0:
            raise DomainError("delta must be >= 0")
        self.params = params
        self.delta = float(delta)
        d = params.d
        self.center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        if self.center.shape != (d,):
            raise DomainError(f"center must be a point in R^{d}")
        self._laws: dict[float, RadialLaw] = {}
        self._law_lock = threading.Lock()

    # -- helpers ------------------------------------------------------------

    def _rel(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.params.d,):
            raise DomainError(f"x must be a point in R^{self.params.d}")
        return x - self.center

    def _kt(self, tau: float) -> float:
        p = self.params
        return p.kappa * tau ** (-p.s / p.beta)

    def _cpref(self, tau: float) -> float:
        p = self.params
        return p.coeff_prefactor * tau ** p.coeff_time_exponent

    # -- profile at absolute time t ------------------------------------------

    def profile_f(self, t: float, x) -> float:
        """f(t, x) = C - kappa (t^(-1/beta)|x - y|)^(p/(p-1)); may be negative."""
        if not t > 0.0:
            raise DomainError("t must be positive")
        r = float(np.linalg.norm(self._rel(x)))
        return self.params.c_norm - self._kt(t) * r ** self.params.s

    def support_radius(self, t: float) -> float:
        """R(t) = (C/kappa)^((p-1)/p) * t^(1/beta)."""
        if not t > 0.0:
            raise DomainError("t must be positive")
        return self.params.r_unit * t ** (1.0 / self.params.beta)

    def support_radius_delta(self, t: float) -> float:
        """R at shifted time, R(t + delta)."""
        return self.support_radius(t + self.delta)

    def density_w(self, t: float, x) -> float:
        """w(t, x) = t^(-d/beta) [f(t, x)]_+^gamma; zero outside the closed support ball."""
        if not t > 0.0:
            raise DomainError("t must be positive")
        p = self.params
        fplus = max(self.profile_f(t, x), 0.0)
        return t ** (-p.d / p.beta) * fplus ** p.gamma

    def density_w_radial(self, t: float, r) -> np.ndarray:
        """Vectorized w(t, .) as a function of radius."""
        p = self.params
        r = np.asarray(r, dtype=float)
        fplus = np.maximum(p.c_norm - self._kt(t) * r ** p.s, 0.0)
        return t ** (-p.d / p.beta) * fplus ** p.gamma

    def grad_w(self, t: float, x) -> np.ndarray:
        """Spatial gradient of w; zero outside the support.

        For gamma < 1 the gradient is unbounded at the free boundary, so
        evaluation exactly there raises ``BoundaryError``.
        """
        if not t > 0.0:
            raise DomainError("t must be positive")
        p = self.params
        rel = self._rel(x)
        r = float(np.linalg.norm(rel))
        radius = self.support_radius(t)
        if r > radius:
            return np.zeros(p.d)
        if r == radius and p.gamma < 1.0:
            raise BoundaryError("gradient of the density is unbounded on the free boundary")
        if r == 0.0:
            return np.zeros(p.d)
        f = p.c_norm - self._kt(t) * r ** p.s
        grad_f = -self._kt(t) * p.s * r ** ((2.0 - p.p) / (p.p - 1.0)) * rel
        return p.gamma * t ** (-p.d / p.beta) * f ** (p.gamma - 1.0) * grad_f

    # -- shifted coefficients (simulation time t >= 0, profile time t + delta) --

    def _require_delta(self):
        if not self.delta > 0.0:
            raise DomainError("coefficient evaluation requires delta > 0")

    def rho(self, t: float, x) -> float:
        """Diffusion-coefficient profile rho(t, x) = C_rho(t+delta) f_+ |x|^((p-2)/(p-1))."""
        self._require_delta()
        if t < 0.0:
            raise DomainError("t must be >= 0")
        p = self.params
        tau = t + self.delta
        rel = self._rel(x)
        r = float(np.linalg.norm(rel))
        if r == 0.0 and p.p < 2.0:
            raise SingularityError("rho is unbounded at the source point for p < 2")
        # boundary convention: exactly on the support sphere, take the outside value
        if r >= self.support_radius_delta(t):
            return 0.0
        fplus = max(p.c_norm - self._kt(tau) * r ** p.s, 0.0)
        if fplus == 0.0:
            return 0.0
        return self._cpref(tau) * fplus * r ** ((p.p - 2.0) / (p.p - 1.0))

    def grad_rho(self, t: float, x) -> np.ndarray:
        """Gradient of rho; zero vector at the origin (convention) and on/outside
        the boundary sphere (outside value)."""
        self._require_delta()
        if t < 0.0:
            raise DomainError("t must be >= 0")
        p = self.params
        tau = t + self.delta
        rel = self._rel(x)
        r = float(np.linalg.norm(rel))
        radius = self.support_radius_delta(t)
        if r == 0.0 or r >= radius:
            return np.zeros(p.d)
        kt = self._kt(tau)
        fplus = max(p.c_norm - kt * r ** p.s, 0.0)
        factor = ((p.p - 2.0) / (p.p - 1.0)) * fplus * r ** (-p.s) - kt * p.s
        return self._cpref(tau) * factor * rel

    def hessian_rho_classical(self, t: float, x) -> np.ndarray:
        """Pointwise second derivative matrix of rho off the singular set.

        Valid on the complement of {0} and the boundary sphere (where the
        distributional derivative carries an additional surface measure that
        is deliberately not represented here); zero matrix outside the
        support.
        """
        self._require_delta()
        if t < 0.0:
            raise DomainError("t must be >= 0")
        p = self.params
        tau = t + self.delta
        rel = self._rel(x)
        r = float(np.linalg.norm(rel))
        radius = self.support_radius_delta(t)
        if r == 0.0 or r == radius:
            raise SingularityError(
                "classical Hessian of rho is undefined at the origin and on the boundary sphere")
        if r > radius:
            return np.zeros((p.d, p.d))
        kt = self._kt(tau)
        s = p.s
        f = p.c_norm - kt * r ** s
        c = self._cpref(tau)
        two_ms = 2.0 - s
        # m(r): grad rho = m * x;  hessian = m'(r)/r * x x^T + m * I
        m = c * (two_ms * f * r ** (-s) - kt * s)
        mprime = c * two_ms * (-kt * s / r - s * f * r ** (-s - 1.0))
        outer = np.outer(rel, rel)
        return (mprime / r) * outer + m * np.eye(p.d)

    def drift(self, t: float, x) -> np.ndarray:
        """SDE drift q^(p-1) * grad_rho(t, x)."""
        p = self.params
        return p.q ** (p.p - 1.0) * self.grad_rho(t, x)

    def diffusion_scalar(self, t: float, x) -> float:
        """Scalar diffusion sqrt(2 q^(p-1) rho(t, x)) multiplying the identity matrix."""
        p = self.params
        return float(np.sqrt(2.0 * p.q ** (p.p - 1.0) * self.rho(t, x)))

    # -- radial law (shifted time), CDF and sampling --------------------------

    def radial_law(self, t: float) -> RadialLaw:
        if t + self.delta <= 0.0:
            raise DomainError("radial law requires t + delta > 0")
        key = float(t)
        law = self._laws.get(key)
        if law is not None:
            return law
        with self._law_lock:
            law = self._laws.get(key)
            if law is None:
                law = self._build_radial_law(t)
                self._laws[key] = law
        return law

    def _build_radial_law(self, t: float) -> RadialLaw:
        p = self.params
        tau = t + self.delta
        radius = self.params.r_unit * tau ** (1.0 / p.beta)
        n = _CHEB_NODES
        j = np.arange(n)
        radii = radius * 0.5 * (1.0 - np.cos(np.pi * j / (n - 1)))
        radii[0], radii[-1] = 0.0, radius

        # all GK15 panels between consecutive grid nodes in one vectorized sweep
        a = radii[:-1][:, None]
        b = radii[1:][:, None]
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GK_NODES[None, :]
        pdf = p.omega * self.density_w_radial(tau, nodes) * nodes ** (p.d - 1)
        panels = 0.5 * (b - a)[:, 0] * (pdf @ _GK_WEIGHTS)
        cdf = np.concatenate([[0.0], np.cumsum(panels)])
        total = float(cdf[-1])
        interp = PchipInterpolator(radii, cdf, extrapolate=False)
        return RadialLaw(params=p, delta=self.delta, t=float(t), radii=radii,
                         cdf_values=cdf, total_mass=total,
                         _interp=interp, _deriv=interp.derivative())

    def radial_cdf(self, t: float, r) -> float:
        """P(|X| <= r) under the shifted profile at simulation time t, in [0, 1]."""
        return self.radial_law(t).cdf(r)

    def sample_radius(self, t: float, u):
        """Inverse radial CDF at u in (0, 1); vectorized over u."""
        return self.radial_law(t).inverse(u)

    def moment2(self, t: float, tol: float = 1e-11) -> float:
        """Second radial moment int |x|^2 w(t+delta, x) dx by quadrature."""
        p = self.params
        tau = t + self.delta
        radius = self.params.r_unit * tau ** (1.0 / p.beta)

        def g(r):
            return p.omega * self.density_w_radial(tau, r) * r ** (p.d + 1)

        return integrate_radial(g, 0.0, radius, tol=tol).value
