"""Strong form of the reduced equation and its first-order rewrite.

The canonical equation is the Euler-Lagrange equation of the discrete
functional's continuum limit, written term by term as

    k^2/h^2 (phi'^3)' - k^2/h^2 (m1 tan t - m2 cot t + 4 h'/h) phi'^3
        + 3 k k'/h^2 phi'^4 + h^2/k^2 F(t, phi) = 0,

with ``F = -(1/4) dV/dphi`` the forcing of the potential ``V``.  Its
Euler-Lagrange derivative equals ``4 w k^2/h^2`` times this expression.

With ``psi = k^2 phi'^3`` the same equation reads ``psi' + A psi + B = 0``
where ``A = -(m1 tan t - m2 cot t + 4 h'/h)`` and
``B = k k' phi'^4 + h^4 F / k^2``; that is, ``(psi' + A psi + B) / h^2`` is
the expression above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functional import CoefficientSet, Profile, _potential_dphi
from .geometry import HALF_PI, ProblemConfig, _h, _hp, _k, _kp

DEFAULT_MARGIN = 0.05


def signed_cuberoot(x):
    return np.cbrt(x)


@dataclass(frozen=True)
class FirstOrderState:
    """Shooting state ``(t, phi, psi)`` with ``psi = k(phi)^2 phi'^3``."""

    t: float
    phi: float
    psi: float

    def dphi(self, cfg: ProblemConfig) -> float:
        return float(signed_cuberoot(self.psi / _k(self.phi, cfg) ** 2))

    @classmethod
    def from_slope(cls, t: float, phi: float, dphi: float, cfg: ProblemConfig) -> "FirstOrderState":
        return cls(t, phi, float(_k(phi, cfg) ** 2 * dphi**3))


def _check_interior(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= HALF_PI):
        raise ValueError("coefficients are singular at t = 0 and t = pi/2")
    return t


def _transport(t, cfg: ProblemConfig):
    return cfg.m1 * np.tan(t) - cfg.m2 / np.tan(t) + 4.0 * _hp(t, cfg) / _h(t, cfg)


def forcing(t, phi, cfg: ProblemConfig):
    """``-(1/4) dV/dphi``; vanishes wherever ``sin(phi) cos(phi) = 0``."""
    co = CoefficientSet.from_config(cfg)
    return -0.25 * _potential_dphi(np.asarray(t, dtype=float), np.asarray(phi, dtype=float), co)


def coefficient_A(t, phi, cfg: ProblemConfig):
    """``A(t) = -m1 tan t + m2 cot t - 4 h'/h``; behaves like ``+m2/t`` as ``t -> 0``.

    ``phi`` is accepted for a uniform ``(t, phi, ...)`` signature; once the
    equation is written for ``psi`` the transport coefficient does not depend on it.
    """
    t = _check_interior(t)
    return -_transport(t, cfg) + np.zeros_like(np.asarray(phi, dtype=float))


def coefficient_B(t, phi, dphi, cfg: ProblemConfig):
    """``B = k k' phi'^4 + h^4 F / k^2``.

    The ``k k' phi'^4`` term is what remains of the ``3 k k'`` transport after
    ``psi' = k^2 (phi'^3)' + 2 k k' phi'^4`` absorbs two thirds of it, so B needs
    the slope as well as ``(t, phi)``.
    """
    t = _check_interior(t)
    phi = np.asarray(phi, dtype=float)
    k = _k(phi, cfg)
    return k * _kp(phi, cfg) * np.asarray(dphi, dtype=float) ** 4 + _h(t, cfg) ** 4 * forcing(t, phi, cfg) / k**2


def strong_form(t, phi, dphi, d_cube, cfg: ProblemConfig):
    """Direct term-by-term assembly; ``d_cube`` is ``(phi'^3)'``."""
    t = _check_interior(t)
    phi = np.asarray(phi, dtype=float)
    dphi = np.asarray(dphi, dtype=float)
    k, h = _k(phi, cfg), _h(t, cfg)
    k2h2 = k**2 / h**2
    return (
        k2h2 * d_cube
        - k2h2 * _transport(t, cfg) * dphi**3
        + 3.0 * k * _kp(phi, cfg) / h**2 * dphi**4
        + h**2 / k**2 * forcing(t, phi, cfg)
    )


def first_order_form(t, phi, psi, dpsi, cfg: ProblemConfig):
    """``(psi' + A psi + B) / h^2`` with the slope recovered from ``psi``."""
    t = _check_interior(t)
    phi = np.asarray(phi, dtype=float)
    dphi = signed_cuberoot(np.asarray(psi, dtype=float) / _k(phi, cfg) ** 2)
    total = dpsi + coefficient_A(t, phi, cfg) * psi + coefficient_B(t, phi, dphi, cfg)
    return total / _h(t, cfg) ** 2


def ellipsoid_terms(t, phi, dphi, cfg: ProblemConfig):
    """The two contributions that vanish identically when both ellipsoids are spheres.

    Returns ``(h-transport, k-transport)`` = ``(-4 k^2 h'/h^3 phi'^3, 3 k k'/h^2 phi'^4)``.
    """
    t = _check_interior(t)
    phi = np.asarray(phi, dtype=float)
    dphi = np.asarray(dphi, dtype=float)
    k, h = _k(phi, cfg), _h(t, cfg)
    return -4.0 * k**2 * _hp(t, cfg) / h**3 * dphi**3, 3.0 * k * _kp(phi, cfg) / h**2 * dphi**4


def nodal_slopes(p: Profile) -> np.ndarray:
    """Second-order finite-difference ``phi'`` at every node (one-sided at the ends)."""
    x, y = p.grid.nodes, p.values
    out = np.empty_like(y)
    hl, hr = np.diff(x)[:-1], np.diff(x)[1:]
    out[1:-1] = (hl**2 * y[2:] - hr**2 * y[:-2] + (hr**2 - hl**2) * y[1:-1]) / (hl * hr * (hl + hr))
    out[0] = (y[1] - y[0]) / (x[1] - x[0])
    out[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
    return out


def residual(p: Profile, cfg: ProblemConfig) -> np.ndarray:
    """Strong-form residual at the n-1 interior nodes."""
    if p.grid.n < 8:
        raise ValueError("residual needs at least 8 cells")
    t = p.grid.nodes[1:-1]
    cubes = p.slopes**3
    half_width = 0.5 * (p.grid.widths[:-1] + p.grid.widths[1:])
    d_cube = np.diff(cubes) / half_width
    return strong_form(t, p.values[1:-1], nodal_slopes(p)[1:-1], d_cube, cfg)


def residual_sup(p: Profile, cfg: ProblemConfig, delta: float = DEFAULT_MARGIN) -> float:
    """Largest ``|residual|`` over interior nodes with ``delta <= t <= pi/2 - delta``."""
    t = p.grid.nodes[1:-1]
    mask = (t >= delta) & (t <= HALF_PI - delta)
    if not np.any(mask):
        raise ValueError("no grid node inside the reporting window")
    return float(np.max(np.abs(residual(p, cfg)[mask])))
