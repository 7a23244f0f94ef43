"""Shooting oracle: integrate the first-order system and bisect on the start amplitude.

This is the verification path independent of the minimizer.  It integrates

    phi' = cbrt(psi / k(phi)^2),    psi' = -A(t) psi - B(t, phi, phi')

from ``t = eps`` to ``pi/2 - eps`` with classical fourth-order Runge-Kutta
and bisects on the amplitude ``s`` of the start ansatz ``phi(eps) = s eps^alpha``
(``alpha = 1`` by default; ``ansatz="power"`` uses the leading-order exponent)
until ``phi(pi/2 - eps) = pi/2 - eps``.  The right-hand side is compiled with
numba; ``tests/test_shooting.py`` pins it to ``euler_lagrange``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq

from .euler_lagrange import FirstOrderState
from .functional import CoefficientSet
from .geometry import HALF_PI, Mode, ProblemConfig, _k
from .solver import SolveReport

log = logging.getLogger(__name__)

LOWER_ESCAPE = -0.1
UPPER_ESCAPE = HALF_PI + 0.1
SCAN_POINTS = 16
MAX_WIDENINGS = 3
MAX_BISECTIONS = 200


class BracketFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ShootingOptions:
    eps: float = 1e-3
    rk_steps: int = 20000
    slope_lo: float = 1e-3
    slope_hi: float = 1e3
    bisect_tol: float = 1e-15  # relative width of the amplitude bracket
    target_tol: float = 1e-6
    ansatz: str = "linear"

    def __post_init__(self):
        if not 0.0 < self.eps < math.pi / 4:
            raise ValueError("eps must lie in (0, pi/4)")
        if self.rk_steps < 1:
            raise ValueError("rk_steps must be positive")
        if not 0.0 < self.slope_lo < self.slope_hi:
            raise ValueError("need 0 < slope_lo < slope_hi")
        if self.bisect_tol <= 0 or self.target_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.ansatz not in ("power", "linear"):
            raise ValueError("ansatz must be 'power' or 'linear'")


@dataclass
class Trajectory:
    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    hit: float
    blown_up: bool
    slope: float = float("nan")
    exponent: float = 1.0

    @property
    def states(self) -> list[FirstOrderState]:
        return [FirstOrderState(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.phi, self.psi)]


@dataclass
class ShootResult:
    slope: float
    trajectory: Trajectory
    iterations: int
    bracket: tuple
    non_monotone: bool = False
    warnings: list = field(default_factory=list)


def _params(cfg: ProblemConfig) -> np.ndarray:
    co = CoefficientSet.from_config(cfg)
    hopf = 1.0 if cfg.mode is Mode.HOPF else 0.0
    return np.array([hopf, cfg.m1, cfg.m2, cfg.a, cfg.b, cfg.c, cfg.d, co.a1, co.a2], dtype=float)


@numba.njit(cache=True)
def _cbrt(x):
    if x >= 0.0:
        return x ** (1.0 / 3.0)
    return -((-x) ** (1.0 / 3.0))


@numba.njit(cache=True)
def symphonic_rhs(t, y, p):
    """``(phi', psi')`` of the first-order system; ``p`` packs mode, dims, axes, a1, a2."""
    phi, psi = y[0], y[1]
    m1, m2, a, b, c, d, a1, a2 = p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]
    st, ct = math.sin(t), math.cos(t)
    sp, cp = math.sin(phi), math.cos(phi)
    h = math.sqrt(b * b * st * st + a * a * ct * ct)
    hp = (b * b - a * a) * st * ct / h
    k2 = d * d * sp * sp + c * c * cp * cp
    k = math.sqrt(k2)
    kp = (d * d - c * c) * sp * cp / k
    dphi = _cbrt(psi / k2)
    c4, s4 = ct**4, st**4
    if p[0] == 0.0:
        force = sp * cp * (a1 * cp * cp / c4 - a2 * sp * sp / s4)
    else:
        force = sp * cp**3 * (a1 / c4 + a2 / s4)
    coef_a = -(m1 * st / ct - m2 * ct / st + 4.0 * hp / h)
    coef_b = k * kp * dphi**4 + h**4 * force / k2
    out = np.empty(2)
    out[0] = dphi
    out[1] = -coef_a * psi - coef_b
    return out


@numba.njit(cache=True)
def rk4_path(rhs, t0, t1, y0, nsteps, p, lo, hi):
    """Classical RK4 with ``nsteps`` equal steps and compensated state updates.

    Stops early when ``y[0]`` leaves ``[lo, hi]`` or any component is not
    finite; returns the sampled path, the number of stored states and an
    escape flag.
    """
    dim = y0.shape[0]
    ts = np.empty(nsteps + 1)
    ys = np.empty((nsteps + 1, dim))
    dt = (t1 - t0) / nsteps
    ts[0] = t0
    ys[0] = y0
    y = y0.copy()
    carry = np.zeros(dim)
    for i in range(nsteps):
        t = t0 + i * dt
        k1 = rhs(t, y, p)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1, p)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2, p)
        k4 = rhs(t + dt, y + dt * k3, p)
        # compensated accumulation: the end value amplifies rounding in y by orders of magnitude
        inc = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - carry
        y_new = y + inc
        carry = (y_new - y) - inc
        ok = True
        for j in range(dim):
            if not math.isfinite(y_new[j]):
                ok = False
        if not ok:
            return ts, ys, i + 1, True
        y = y_new
        ts[i + 1] = t0 + (i + 1) * dt if i + 1 < nsteps else t1
        ys[i + 1] = y
        if y[0] < lo or y[0] > hi:
            return ts, ys, i + 2, True
    return ts, ys, nsteps + 1, False


def start_exponent(cfg: ProblemConfig, ansatz: str = "power") -> float:
    """Exponent ``alpha`` of the start ansatz ``phi ~ s t^alpha`` near ``t = 0``.

    For the join the leading balance gives ``alpha^3 (3 alpha + m2 - 3) = a2 (a/c)^4``;
    its positive root is used.  Without a positive root (``a2 = 0``), in Hopf
    mode, or for ``ansatz="linear"``, the exponent is 1.
    """
    if ansatz == "linear" or cfg.mode is Mode.HOPF:
        return 1.0
    rhs = CoefficientSet.from_config(cfg).a2 * (cfg.a / cfg.c) ** 4
    if rhs <= 0.0:
        return 1.0

    def balance(alpha):
        return alpha**3 * (3.0 * alpha + cfg.m2 - 3.0) - rhs

    lo = max(0.0, (3.0 - cfg.m2) / 3.0)
    hi = lo + 1.0
    while balance(hi) <= 0.0:
        hi *= 2.0
    return float(brentq(balance, lo, hi, xtol=1e-15, rtol=1e-15))


def integrate(s: float, cfg: ProblemConfig, opts: ShootingOptions = ShootingOptions()) -> Trajectory:
    if not s > 0.0:
        raise ValueError("start amplitude must be positive")
    alpha = start_exponent(cfg, opts.ansatz)
    eps = opts.eps
    phi0 = s * eps**alpha
    dphi0 = s * alpha * eps ** (alpha - 1.0)
    psi0 = float(_k(phi0, cfg)) ** 2 * dphi0**3
    ts, ys, count, escaped = rk4_path(
        symphonic_rhs, eps, HALF_PI - eps, np.array([phi0, psi0]), opts.rk_steps,
        _params(cfg), LOWER_ESCAPE, UPPER_ESCAPE,
    )
    ts, ys = ts[:count], ys[:count]
    finite = np.isfinite(ys[:, 0])
    hit = float(ys[finite, 0][-1])
    return Trajectory(ts, ys[:, 0], ys[:, 1], hit, bool(escaped), float(s), alpha)


def _miss(traj: Trajectory, target: float) -> float:
    return traj.hit - target


def shoot(cfg: ProblemConfig, opts: ShootingOptions = ShootingOptions()) -> ShootResult:
    """Bisect on ``s`` so the trajectory ends at ``pi/2 - eps``.

    The end value grows steeply with ``s`` near the root, so bisection runs
    until the bracket is ``bisect_tol`` wide relative to ``s`` (by default
    down to floating-point resolution) and returns the closest trajectory.
    Raises ``BracketFailure`` if ``[slope_lo, slope_hi]`` does not bracket the
    target after widening it geometrically three times.
    """
    target = HALF_PI - opts.eps
    lo, hi = opts.slope_lo, opts.slope_hi
    for _ in range(MAX_WIDENINGS + 1):
        f_lo = _miss(integrate(lo, cfg, opts), target)
        f_hi = _miss(integrate(hi, cfg, opts), target)
        if f_lo < 0.0 < f_hi:
            break
        lo, hi = lo / 10.0, hi * 10.0
    else:
        raise BracketFailure(f"no bracket for the end condition in [{lo * 10:g}, {hi / 10:g}]")

    notes = []
    scan = np.geomspace(lo, hi, SCAN_POINTS)
    # escaped trajectories only say "above" or "below"; their last value is noise
    hits = np.clip([integrate(s, cfg, opts).hit for s in scan], LOWER_ESCAPE, UPPER_ESCAPE)
    non_monotone = bool(np.any(np.diff(hits) < 0.0))
    if non_monotone:
        notes.append("end value is not monotone in the start amplitude on the bracket")
        log.warning(notes[-1])
    # any adjacent below/above pair of the scan is a valid sub-bracket
    change = np.flatnonzero((hits[:-1] < target) & (hits[1:] > target))
    if change.size:
        lo, hi = scan[change[0]], scan[change[0] + 1]

    best = None
    iterations = 0
    while iterations < MAX_BISECTIONS:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        traj = integrate(mid, cfg, opts)
        miss = _miss(traj, target)
        if best is None or abs(miss) < abs(_miss(best, target)):
            best = traj
        if abs(miss) < opts.target_tol or hi - lo < opts.bisect_tol * hi:
            break
        if miss < 0.0:
            lo = mid
        else:
            hi = mid
    if best is None:
        best = integrate(lo, cfg, opts)
    return ShootResult(best.slope, best, iterations, (lo, hi), non_monotone, notes)


def compare(report: SolveReport, traj: Trajectory, eps: float | None = None) -> float:
    """Sup of ``|phi_variational - phi_shooting|`` over grid nodes in ``[eps, pi/2 - eps]``.

    The trajectory is linearly interpolated onto the profile grid; nodes past
    an early escape of the trajectory are compared against its last value.
    """
    if eps is None:
        eps = float(traj.t[0])
    nodes = report.profile.grid.nodes
    mask = (nodes >= eps) & (nodes <= HALF_PI - eps)
    shot = np.interp(nodes[mask], traj.t, traj.phi)
    return float(np.max(np.abs(report.profile.values[mask] - shot)))
