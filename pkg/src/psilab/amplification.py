"""Closed-form one-step multipliers and stability surfaces.

A rank-1 Fourier probe x_m v_k^T (grid mode m, coefficient eigenvector k)
passes through every scheme as a scalar multiplier. This module carries two
views of that multiplier:

* ``mode_multiplier``: the exact complex factor for a signed Courant number,
  cross-checked elsewhere against the production steppers.
* ``h_*`` surfaces: the squared modulus as a function of Y = 1 - cos(theta)
  in [0, 2] and mu = |nu| >= 0, the objects the stability boundaries and
  contour grids are built from. Stability of a scheme means every surface
  value stays at or below one.

Implicit parabolic factors blow up where a backward substep hits its
resonance; surfaces emit inf there (kept as a sentinel in grid output) while
the scalar path raises PoleError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrators import SchemeSpec

__all__ = [
    "AmpQuery",
    "BoundaryResult",
    "PoleError",
    "Y_GRID",
    "amp_full_hyperbolic",
    "amp_p1_p2_p3",
    "contour_grid",
    "find_boundary",
    "g_parabolic",
    "h_dtp_lie",
    "h_dtp_strang_rk2",
    "h_full_fe",
    "h_parabolic_surface",
    "h_ptd_lie",
    "h_ptd_strang_rk2",
    "mode_multiplier",
]

#: Stability is judged on this Y sample. The uniform part resolves interior
#: violations; the geometric tail resolves thresholds whose first violation
#: appears at Y -> 0+ (the Lie splittings), where the unstable band at
#: distance delta above the threshold has width O(delta).
Y_GRID = np.unique(
    np.concatenate(
        [
            np.linspace(0.0, 2.0, 4001),
            np.geomspace(1e-9, 1e-2, 241),
            [2.0],
        ]
    )
)

_STABLE_SLACK = 1e-12
_POLE_TOL = 1e-12
_PARABOLIC_VARIANTS = ("full_theta", "dtp_lie_theta", "hybrid", "strang_cn")


class PoleError(ArithmeticError):
    """An implicit factor was evaluated at (or too close to) its resonance."""

    def __init__(self, x: float, where: str):
        super().__init__(f"implicit factor pole near x = {x!r} in {where}")
        self.x = x
        self.where = where


@dataclass(frozen=True)
class AmpQuery:
    """Mode coordinates for a one-step multiplier.

    ``y`` is 1 - cos(theta) of the grid mode, ``nu`` the signed Courant
    number of the coefficient eigendirection, ``z_sign`` the sign of
    sin(theta) (grid modes above the Nyquist index carry -1).
    """

    y: float
    nu: float
    z_sign: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.y <= 2.0:
            raise ValueError(f"y must lie in [0, 2], got {self.y}")
        if self.z_sign not in (1.0, -1.0):
            raise ValueError(f"z_sign must be +-1, got {self.z_sign}")

    @property
    def mu(self) -> float:
        return abs(self.nu)

    @property
    def z(self) -> float:
        return self.z_sign * math.sqrt(self.y * (2.0 - self.y))

    @property
    def x(self) -> float:
        """Diffusion variable 2*Y*nu (signed with the eigenvalue)."""
        return 2.0 * self.y * self.nu


# ---------------------------------------------------------------------------
# complex one-step factors (hyperbolic)


def _p1(q: AmpQuery) -> complex:
    """Upwind Euler factor: forward K/L substeps and the full scheme."""
    return complex(1.0 - q.mu * q.y, -q.nu * q.z)


def amp_full_hyperbolic(q: AmpQuery) -> complex:
    """One-step factor of the full-tensor upwind forward Euler scheme."""
    return _p1(q)


def amp_p1_p2_p3(q: AmpQuery) -> tuple[complex, complex, complex, complex]:
    """Substep factors of the hyperbolic Lie splittings.

    Returns (P1, P2 of the projected backward substep, P2 and P3 of the
    reduced central substeps); the products P1^2 * P2 and P1 * P2 * P3 are
    the one-step factors of the two formulations.
    """
    p1 = _p1(q)
    core = 1j * q.nu * q.z
    return p1, 2.0 - p1, 1.0 + core, 1.0 - core


def _rk2(p: complex) -> complex:
    """Heun average: two Euler stages of factor p, then the midpoint."""
    return 0.5 * (1.0 + p * p)


def _half(q: AmpQuery) -> AmpQuery:
    return AmpQuery(y=q.y, nu=0.5 * q.nu, z_sign=q.z_sign)


def _hyperbolic_multiplier(spec: SchemeSpec, q: AmpQuery) -> complex:
    if spec.approach == "full_tensor":
        return _p1(q)
    if spec.splitting == "lie":
        p1 = _p1(q)
        if spec.approach == "dtp":
            return p1 * p1 * (2.0 - p1)
        return p1 * (1.0 + 1j * q.nu * q.z) * (1.0 - 1j * q.nu * q.z)
    qh = _half(q)
    pk = _rk2(_p1(qh))
    if spec.approach == "dtp":
        ps = _rk2(2.0 - _p1(qh))
        pl = _rk2(_p1(q))
    else:
        ps = _rk2(1.0 + 1j * qh.nu * qh.z)
        pl = _rk2(1.0 - 1j * q.nu * q.z)
    return pk * ps * pl * ps * pk


# ---------------------------------------------------------------------------
# real one-step factors (parabolic), scalar with pole checks


def _div(num: float, den: float, x: float, where: str) -> float:
    if abs(den) <= _POLE_TOL * (1.0 + abs(x)):
        raise PoleError(x, where)
    return num / den


def g_parabolic(x: float, variant: str, theta: float | None = None) -> float:
    """One-step multiplier of the diffusion schemes at x = 2*Y*nu (signed).

    Variants: ``full_theta`` (single theta step), ``dtp_lie_theta`` (Lie
    splitting with theta substeps; identical for both low-rank formulations),
    ``hybrid`` (backward-forward-backward Euler), ``strang_cn`` (Strang with
    Crank-Nicolson substeps, which telescopes to one Crank-Nicolson step).
    """
    if variant not in _PARABOLIC_VARIANTS:
        raise ValueError(f"unknown parabolic variant '{variant}'")
    if variant in ("full_theta", "dtp_lie_theta"):
        if theta is None or not 0.0 <= theta <= 1.0:
            raise ValueError("theta in [0, 1] is required for theta variants")
    elif theta is not None:
        raise ValueError(f"variant '{variant}' takes no theta")

    if variant == "hybrid":
        return _div(1.0, 1.0 + x, x, variant)
    if variant == "strang_cn":
        return _div(1.0 - 0.5 * x, 1.0 + 0.5 * x, x, variant)
    if variant == "dtp_lie_theta" and theta == 0.5:
        # The backward substep cancels one forward factor exactly.
        return _div(1.0 - 0.5 * x, 1.0 + 0.5 * x, x, variant)
    p1 = _div(1.0 - (1.0 - theta) * x, 1.0 + theta * x, x, variant)
    if variant == "full_theta":
        return p1
    p2 = _div(1.0 + (1.0 - theta) * x, 1.0 - theta * x, x, variant)
    return p1 * p1 * p2


def mode_multiplier(spec: SchemeSpec, q: AmpQuery) -> complex:
    """Exact one-step factor of the scheme on the rank-1 Fourier probe."""
    if spec.equation == "hyperbolic":
        return _hyperbolic_multiplier(spec, q)
    if spec.substep == "hybrid_be_fe_be":
        return complex(g_parabolic(q.x, "hybrid"))
    if spec.splitting == "strang":
        return complex(g_parabolic(q.x, "strang_cn"))
    if spec.approach == "full_tensor":
        return complex(g_parabolic(q.x, "full_theta", spec.theta_value))
    return complex(g_parabolic(q.x, "dtp_lie_theta", spec.theta_value))


# ---------------------------------------------------------------------------
# stability surfaces: h(Y, mu) = squared modulus of the one-step factor


def h_full_fe(y, mu):
    """Upwind forward Euler on the full tensor."""
    y = np.asarray(y, dtype=float)
    return 1.0 + 2.0 * y * mu * (mu - 1.0)


def h_dtp_lie(y, mu):
    """Lie splitting, discretize then project, forward Euler substeps."""
    y = np.asarray(y, dtype=float)
    return (1.0 + 2.0 * y * mu * (mu - 1.0)) ** 2 * (1.0 + 2.0 * y * mu * (mu + 1.0))


def h_ptd_lie(y, mu):
    """Lie splitting, project then discretize, forward Euler substeps."""
    y = np.asarray(y, dtype=float)
    return (1.0 + 2.0 * y * mu * (mu - 1.0)) * (1.0 + mu**2 * y * (2.0 - y)) ** 2


def _p1bar_sq(y, mu):
    """Squared modulus of the Heun-averaged forward factor."""
    s = 1.0 - mu * y
    zz = mu**2 * y * (2.0 - y)
    return 0.25 * (1.0 + s * s - zz) ** 2 + s * s * zz


def _p2bar_dtp_sq(y, mu):
    """Squared modulus of the Heun-averaged backward projected factor."""
    s = 1.0 + mu * y
    zz = mu**2 * y * (2.0 - y)
    return 0.25 * (1.0 + s * s - zz) ** 2 + s * s * zz


def _p23bar_ptd_sq(y, mu):
    """Squared modulus of the Heun-averaged central reduced factors."""
    zz = mu**2 * y * (2.0 - y)
    return 0.25 * (2.0 - zz) ** 2 + zz


def h_dtp_strang_rk2(y, mu):
    """Strang splitting, discretize then project, Heun substeps."""
    y = np.asarray(y, dtype=float)
    return _p1bar_sq(y, 0.5 * mu) ** 2 * _p2bar_dtp_sq(y, 0.5 * mu) ** 2 * _p1bar_sq(y, mu)


def h_ptd_strang_rk2(y, mu):
    """Strang splitting, project then discretize, Heun substeps."""
    y = np.asarray(y, dtype=float)
    return (
        _p1bar_sq(y, 0.5 * mu) ** 2
        * _p23bar_ptd_sq(y, 0.5 * mu) ** 2
        * _p23bar_ptd_sq(y, mu)
    )


def _g_parabolic_array(x, variant: str, theta: float | None):
    """Vectorized diffusion multiplier; poles come out as inf, not raises."""
    x = np.asarray(x, dtype=float)
    if variant == "hybrid":
        return 1.0 / (1.0 + x)
    if variant == "strang_cn" or (variant == "dtp_lie_theta" and theta == 0.5):
        return (1.0 - 0.5 * x) / (1.0 + 0.5 * x)
    p1 = (1.0 - (1.0 - theta) * x) / (1.0 + theta * x)
    if variant == "full_theta":
        return p1
    p2 = (1.0 + (1.0 - theta) * x) / (1.0 - theta * x)
    return p1 * p1 * p2


def h_parabolic_surface(variant: str, theta: float | None = None):
    """Build the (Y, mu) stability surface of a diffusion scheme.

    Parameter checks reuse the scalar path; the returned callable maps a Y
    sample and a scalar mu to the squared multiplier at x = 2*Y*mu, with inf
    at resonances of the implicit substeps.
    """
    g_parabolic(0.0, variant, theta)  # validate variant/theta pairing

    def surface(y, mu):
        x = 2.0 * np.asarray(y, dtype=float) * mu
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            g = _g_parabolic_array(x, variant, theta)
        return g * g

    return surface


# ---------------------------------------------------------------------------
# stability boundary and contour output


@dataclass(frozen=True)
class BoundaryResult:
    """Bisection outcome: the critical mu (or "unconditional"), the Y of the
    largest surface value on the unstable edge, the final bracket, and how
    many surface sweeps the search used."""

    critical_mu: float | str
    worst_y: float
    lo: float
    hi: float
    evaluations: int


def _sweep(surface, mu: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        h = np.asarray(surface(Y_GRID, mu), dtype=float)
    return np.where(np.isnan(h), np.inf, h)


def find_boundary(surface, mu_cap: float, tol: float) -> BoundaryResult:
    """Largest mu at which the surface stays at or below one on Y_GRID.

    The cap is probed first: a scheme stable there is reported
    unconditional. Otherwise bisection on [0, cap] narrows the boundary to
    ``tol``; the worst Y is read off the unstable bracket edge.
    """
    if not mu_cap > 0.0:
        raise ValueError("mu_cap must be positive")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    evals = 0

    def stable(mu: float) -> bool:
        nonlocal evals
        evals += 1
        h = _sweep(surface, mu)
        return bool(np.all(h <= 1.0 + _STABLE_SLACK))

    if stable(mu_cap):
        worst = _sweep(surface, mu_cap)
        worst_y = float(Y_GRID[int(np.argmax(worst))])
        return BoundaryResult("unconditional", worst_y, mu_cap, mu_cap, evals)

    lo, hi = 0.0, mu_cap
    for _ in range(60):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    worst = _sweep(surface, hi)
    worst_y = float(Y_GRID[int(np.argmax(worst))])
    return BoundaryResult(0.5 * (lo + hi), worst_y, lo, hi, evals)


def contour_grid(surface, y_points: int, mu_points: int, mu_max: float) -> np.ndarray:
    """Tabulate the surface on [0, 2] x [0, mu_max] as rows (Y, mu, h).

    Rows run Y-major: all mu values of the first Y, then the next Y. Poles
    appear as inf and are preserved for the text output.
    """
    if y_points < 2 or mu_points < 2:
        raise ValueError("need at least two points per axis")
    ys = np.linspace(0.0, 2.0, y_points)
    mus = np.linspace(0.0, mu_max, mu_points)
    h = np.empty((y_points, mu_points))
    for j, mu in enumerate(mus):
        h[:, j] = _sweep_on(surface, ys, float(mu))
    out = np.empty((y_points * mu_points, 3))
    out[:, 0] = np.repeat(ys, mu_points)
    out[:, 1] = np.tile(mus, y_points)
    out[:, 2] = h.reshape(-1)
    return out


def _sweep_on(surface, ys: np.ndarray, mu: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.asarray(surface(ys, mu), dtype=float)
