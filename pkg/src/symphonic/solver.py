"""Projected gradient descent for the discrete functional.

The feasible set pins ``phi(0) = 0``, ``phi(pi/2) = pi/2`` and boxes every
node into ``[0, pi/2]``.  Each iteration moves along a descent direction,
projects onto the box and backtracks from ``step0`` until the Armijo
condition holds along the projected path, so accepted values of J never
increase.

Two metrics are available.  ``curvature`` (default) scales the gradient on
free nodes by the tridiagonal curvature model of J, which removes the
grid-dependent conditioning of the quartic slope term; nodes pinned against
the box keep the raw gradient.  ``euclidean`` is the unscaled projected
gradient with Barzilai-Borwein trial steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from scipy.linalg import solveh_banded

from .functional import CoefficientSet, Grid, Profile, curvature_model, evaluate_J, grad_J
from .geometry import HALF_PI, ProblemConfig

log = logging.getLogger(__name__)

STAGNATION_RTOL = 1e-14
STAGNATION_WINDOW = 100
MAX_BACKTRACKS = 60
MIN_STEP, MAX_STEP = 1e-20, 1e20
REGULARIZATION = 1e-12
METRICS = ("curvature", "euclidean")


class InvalidInit(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 50000
    grad_tol: float = 1e-8
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    history_every: int = 100
    metric: str = "curvature"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.max_iters < 1 or self.grad_tol <= 0 or self.step0 <= 0 or self.history_every < 1:
            raise ValueError("solver options must be positive")
        if not (0.0 < self.backtrack < 1.0 and 0.0 < self.armijo < 1.0):
            raise ValueError("backtrack and armijo must lie in (0, 1)")


@dataclass
class SolveReport:
    profile: Profile
    j_value: float
    iterations: int
    converged: bool
    projected_grad_norm: float
    residual_sup: Optional[float] = None
    history: list = field(default_factory=list)
    stop_reason: str = ""
    descent_violations: int = 0
    feasibility_violations: int = 0


def project(p: Profile) -> Profile:
    values = np.clip(p.values, 0.0, HALF_PI)
    values[0], values[-1] = 0.0, HALF_PI
    return Profile(p.grid, values)


def _project_interior(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, HALF_PI)


def initial_profile(grid: Grid, kind: str = "linear", seed: int = 0) -> Profile:
    """``linear`` is ``phi = t``; ``random`` adds a smooth seeded perturbation."""
    if kind == "linear":
        return Profile.linear(grid)
    if kind == "random":
        rng = np.random.default_rng(seed)
        t = grid.nodes
        bump = np.zeros_like(t)
        for j, amp in enumerate(rng.normal(scale=0.15, size=4), start=1):
            bump += amp * np.sin(2 * j * t) / j
        return project(Profile(grid, t + bump))
    raise ValueError(f"unknown initial profile kind {kind!r}")


def _projected_gradient(x: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(_project_interior(x - g) - x))) if x.size else 0.0


def _preconditioned_direction(x: np.ndarray, g: np.ndarray, banded: np.ndarray) -> np.ndarray:
    """Two-metric direction: curvature-scaled on free nodes, plain gradient on active ones."""
    active = ((x <= 0.0) & (g > 0.0)) | ((x >= HALF_PI) & (g < 0.0))
    d = -g.copy()
    free = np.flatnonzero(~active)
    if free.size == 0:
        return d
    diag = banded[1, free].copy()
    off = banded[0, free].copy()
    # couplings survive only between nodes that are adjacent in the full grid
    off[1:] = np.where(np.diff(free) == 1, off[1:], 0.0)
    off[0] = 0.0
    diag += REGULARIZATION * max(float(diag.max()), 1e-300)
    if free.size == 1:
        d[free] = -g[free] / diag
        return d
    try:
        d[free] = -solveh_banded(np.vstack([off, diag]), g[free])
    except np.linalg.LinAlgError:
        pass
    return d


def minimize(
    cfg: ProblemConfig,
    grid: Grid,
    init: Union[Profile, str] = "linear",
    opts: SolverOptions = SolverOptions(),
    callback: Optional[Callable[[int, Profile, float], None]] = None,
) -> SolveReport:
    """Minimize the discrete J over the feasible set.

    ``callback(iteration, profile, j)`` sees the initial point and every
    accepted iterate.  Non-convergence is reported through
    ``converged=False`` with the best iterate, not raised.
    """
    coeffs = CoefficientSet.from_config(cfg)
    if isinstance(init, str):
        init = initial_profile(grid, init, opts.seed)
    if not np.array_equal(init.grid.nodes, grid.nodes):
        raise InvalidInit("initial profile lives on a different grid")
    problems = init.violations()
    if problems:
        raise InvalidInit("; ".join(problems))

    values = init.values.copy()

    def at(x):
        values[1:-1] = x
        return Profile(grid, values)

    x = init.values[1:-1].copy()
    current = at(x)
    j = evaluate_J(current, coeffs)
    g = grad_J(current, coeffs)
    pg = _projected_gradient(x, g)
    bb_step = opts.step0
    history = [(0, j)]
    descent_bad = feasible_bad = 0
    stalled = 0
    it = 0
    reason = "max_iters"
    if callback:
        callback(0, current, j)

    while True:
        if pg < opts.grad_tol:
            reason = "grad_tol"
            break
        if it >= opts.max_iters:
            break
        candidates = [(-g, bb_step)]
        if opts.metric == "curvature":
            # raw gradient stays as the fallback if the scaled direction stalls at the box
            candidates.insert(0, (_preconditioned_direction(x, g, curvature_model(current, coeffs)), opts.step0))
        accepted = False
        for d, eta in candidates:
            for _ in range(MAX_BACKTRACKS):
                x_new = _project_interior(x + eta * d)
                decrease = float(np.dot(g, x_new - x))
                if decrease < 0.0:
                    trial = at(x_new)
                    j_new = evaluate_J(trial, coeffs)
                    if j_new <= j + opts.armijo * decrease:
                        accepted = True
                        break
                eta *= opts.backtrack
            if accepted:
                break
        if not accepted:
            reason = "line_search"
            break

        it += 1
        g_new = grad_J(trial, coeffs)
        if j_new > j:
            descent_bad += 1
        if np.any(x_new < 0.0) or np.any(x_new > HALF_PI):
            feasible_bad += 1
        s, y = x_new - x, g_new - g
        sy = float(np.dot(s, y))
        bb_step = float(np.clip(np.dot(s, s) / sy, MIN_STEP, MAX_STEP)) if sy > 0 else opts.step0
        stalled = stalled + 1 if j - j_new <= STAGNATION_RTOL * abs(j) else 0

        x, g, j, current = x_new, g_new, j_new, trial
        pg = _projected_gradient(x, g)
        if callback:
            callback(it, current, j)
        if it % opts.history_every == 0:
            history.append((it, j))
        if stalled >= STAGNATION_WINDOW:
            reason = "stagnation"
            break

    if history[-1][0] != it:
        history.append((it, j))
    # a stagnated run counts as converged when the gradient is within 10x tolerance
    converged = pg <= opts.grad_tol or (reason == "stagnation" and pg <= 10.0 * opts.grad_tol)
    if not converged:
        log.warning("minimize stopped (%s) after %d iterations, projected gradient %.3e", reason, it, pg)
    return SolveReport(
        profile=current,
        j_value=j,
        iterations=it,
        converged=converged,
        projected_grad_norm=pg,
        history=history,
        stop_reason=reason,
        descent_violations=descent_bad,
        feasibility_violations=feasible_bad,
    )
