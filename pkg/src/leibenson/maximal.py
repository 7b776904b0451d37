"""Spherical-cap geometry and the explicit maximal function of the surface
measure of a sphere in R^3.

For a sphere of radius R centered at the origin and a ball B_r(x), the
intersection is a spherical cap whose area is 2*pi*R*h(r) with height

    h(r) = R - (R^2 + |x|^2 - r^2) / (2|x|),   ||x|-R| < r <= |x|+R,

extended by 0 below and 2R above. The maximal function

    M(x) = sup_r  area(cap) / (w3 * r^3),      w3 = volume of the unit ball,

has the closed two-branch form implemented in ``maximal_surface_d3``; the
interior branch attains its supremum at r* = sqrt(3)*||x|-R|.  The explicit
formula exists for d = 3 only; no analogue is provided for other dimensions.
``maximal_surface_bruteforce`` is the independent oracle: a direct grid
supremum refined by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "CapGeometry",
    "cap_height",
    "cap_area",
    "maximal_surface_d3",
    "maximal_surface_bruteforce",
    "UNIT_BALL_VOLUME_3D",
]

UNIT_BALL_VOLUME_3D = 4.0 * math.pi / 3.0


@dataclass(frozen=True)
class CapGeometry:
    """Sphere radius R > 0 and the distance |x| of the ball center from the origin."""

    R: float
    x_norm: float

    def __post_init__(self):
        if not self.R > 0.0:
            raise DomainError("sphere radius R must be positive")
        if self.x_norm < 0.0:
            raise DomainError("|x| must be nonnegative")


def cap_height(geom: CapGeometry, r) -> float | np.ndarray:
    """Height of the spherical cap cut out of the sphere by B_r(x).

    Piecewise: 0 for r <= ||x|-R|, the affine-in-r^2 expression in between,
    and 2R once the ball swallows the sphere (r > |x|+R). Requires |x| > 0.
    """
    if geom.x_norm == 0.0:
        raise DomainError("cap height is undefined for a ball centered at the origin")
    R, xn = geom.R, geom.x_norm
    r = np.asarray(r, dtype=float)
    lo = abs(xn - R)
    hi = xn + R
    mid = R - (R * R + xn * xn - r * r) / (2.0 * xn)
    out = np.where(r <= lo, 0.0, np.where(r > hi, 2.0 * R, mid))
    return float(out) if out.ndim == 0 else out


def cap_area(geom: CapGeometry, r) -> float | np.ndarray:
    """Surface area of the cap (d = 3): 2*pi*R*h(r)."""
    return 2.0 * math.pi * geom.R * cap_height(geom, r)


def _branch_interior(R: float, xn: float) -> float:
    """Value of the maximal function when the interior critical radius
    r* = sqrt(3)*||x|-R| lies inside the admissible range."""
    return 2.0 * math.pi * R / (UNIT_BALL_VOLUME_3D * math.sqrt(27.0)) \
        / (xn * abs(xn - R))


def _branch_tail(R: float, xn: float) -> float:
    """Value when the supremum sits at the full-sphere endpoint r = |x|+R."""
    return 4.0 * math.pi * R * R / (UNIT_BALL_VOLUME_3D * (xn + R) ** 3)


def maximal_surface_d3(geom: CapGeometry) -> float:
    """Maximal function of the sphere's surface measure at distance |x|, d = 3.

    Branch 1 applies when sqrt(3)*||x|-R| <= |x|+R, branch 2 otherwise; the
    two expressions agree on the branch boundary.  Undefined (infinite) at
    |x| = R and undefined at the origin.
    """
    R, xn = geom.R, geom.x_norm
    if xn == 0.0 or xn == R:
        raise DomainError(
            "explicit maximal function requires |x| not in {0, R} (it is +inf at |x| = R)")
    if math.sqrt(3.0) * abs(xn - R) <= xn + R:
        return _branch_interior(R, xn)
    return _branch_tail(R, xn)


def _golden_section_max(f, a: float, b: float, tol: float = 1e-13,
                        max_iter: int = 200) -> float:
    """Argmax of a unimodal f on [a, b] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def maximal_surface_bruteforce(geom: CapGeometry, grid_size: int = 4096,
                               return_argmax: bool = False):
    """Direct supremum of cap_area(r) / (w3 r^3) over a log-spaced radius grid,
    refined around the grid argmax by golden-section search.

    The grid spans (||x|-R|*(1-1e-6), (|x|+R)*1.01]; beyond |x|+R the ratio
    decays like r^-3, so nothing is lost by truncating there. This is the
    oracle for ``maximal_surface_d3``.
    """
    if grid_size < 1000:
        raise DomainError("brute-force grid must have at least 10^3 points")
    R, xn = geom.R, geom.x_norm
    if xn == 0.0:
        raise DomainError("maximal function oracle requires |x| > 0")
    lo = abs(xn - R) * (1.0 - 1e-6)
    hi = (xn + R) * 1.01
    if lo <= 0.0:
        lo = hi * 1e-9
    grid = np.geomspace(lo, hi, grid_size)

    def ratio(r):
        return cap_area(geom, r) / (UNIT_BALL_VOLUME_3D * np.asarray(r, dtype=float) ** 3)

    vals = ratio(grid)
    k = int(np.argmax(vals))
    a = grid[max(0, k - 1)]
    b = grid[min(grid_size - 1, k + 1)]
    rstar = _golden_section_max(lambda r: float(ratio(r)), a, b)
    best = max(float(vals[k]), float(ratio(rstar)))
    if return_argmax:
        # report the better of grid argmax and polished point
        arg = rstar if float(ratio(rstar)) >= float(vals[k]) else float(grid[k])
        return best, arg
    return best
