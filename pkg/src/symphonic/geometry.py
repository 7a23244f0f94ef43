"""Ellipsoid geometry scalars shared by every other module.

The domain ellipsoid Q(a, b) is parametrized by ``a cos t x + b sin t y`` with
``t`` in ``[0, pi/2]``; the target uses the same construction with axes
``(c, d)`` and angle ``phi``.  All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

HALF_PI = 0.5 * math.pi
DOMAIN_TOL = 1e-12


class Mode(str, enum.Enum):
    JOIN = "join"
    HOPF = "hopf"


class SingularPointError(ValueError):
    """Raised when a formula is evaluated where a denominator vanishes."""


@dataclass(frozen=True)
class ProblemConfig:
    """Full parameter tuple of the reduced problem.

    ``norm1`` and ``norm2`` are the constant pointwise squared pullback norms of
    the two input maps (``m`` for the identity of ``S^m``).  ``r1`` and ``r2``
    are carried for bookkeeping only and enter no formula.
    """

    m1: int
    m2: int
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0
    norm1: float = 0.0
    norm2: float = 0.0
    r1: float = 1.0
    r2: float = 1.0
    mode: Mode = Mode.JOIN

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("m1", "m2"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("a", "b", "c", "d", "r1", "r2"):
            value = float(getattr(self, name))
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)
        for name in ("norm1", "norm2"):
            value = float(getattr(self, name))
            if not (value >= 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be nonnegative and finite, got {value!r}")
            object.__setattr__(self, name, value)

    def swapped(self) -> "ProblemConfig":
        """Exchange the roles of the two sphere factors (join reflection)."""
        return ProblemConfig(
            m1=self.m2, m2=self.m1, a=self.b, b=self.a, c=self.d, d=self.c,
            norm1=self.norm2, norm2=self.norm1, r1=self.r2, r2=self.r1, mode=self.mode,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mode"] = self.mode.value
        return out


@dataclass(frozen=True)
class EigenmapSpec:
    k: int  # polynomial degree
    p: int  # dimension of the domain sphere

    def __post_init__(self):
        if self.k < 1 or self.p < 1:
            raise ValueError("eigenmap degree and sphere dimension must be >= 1")


def eigenvalue(spec: EigenmapSpec) -> int:
    """Laplace eigenvalue ``k (k + p - 1)`` of a degree-k eigenmap of ``S^p``."""
    return spec.k * (spec.k + spec.p - 1)


def clamp_angle(x, name: str = "angle"):
    """Clamp to ``[0, pi/2]``, rejecting values more than 1e-12 outside."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -DOMAIN_TOL) or np.any(arr > HALF_PI + DOMAIN_TOL) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} outside [0, pi/2]")
    out = np.clip(arr, 0.0, HALF_PI)
    return float(out) if out.ndim == 0 else out


# Unchecked kernels: valid for any real angle, used inside the discretization
# where finite-difference probes may step marginally outside the box.
def _h(t, cfg):
    return np.sqrt(cfg.b**2 * np.sin(t) ** 2 + cfg.a**2 * np.cos(t) ** 2)


def _hp(t, cfg):
    return (cfg.b**2 - cfg.a**2) * np.sin(t) * np.cos(t) / _h(t, cfg)


def _k(phi, cfg):
    return np.sqrt(cfg.d**2 * np.sin(phi) ** 2 + cfg.c**2 * np.cos(phi) ** 2)


def _kp(phi, cfg):
    return (cfg.d**2 - cfg.c**2) * np.sin(phi) * np.cos(phi) / _k(phi, cfg)


def _weight(t, cfg):
    return np.cos(t) ** cfg.m1 * np.sin(t) ** cfg.m2


def h_of_t(t, cfg: ProblemConfig):
    return _h(clamp_angle(t, "t"), cfg)


def h_prime(t, cfg: ProblemConfig):
    """Analytic ``dh/dt = (b^2 - a^2) sin t cos t / h``."""
    return _hp(clamp_angle(t, "t"), cfg)


def k_of_phi(phi, cfg: ProblemConfig):
    return _k(clamp_angle(phi, "phi"), cfg)


def k_prime(phi, cfg: ProblemConfig):
    return _kp(clamp_angle(phi, "phi"), cfg)


def weight(t, cfg: ProblemConfig):
    """Angular part ``cos^m1 t sin^m2 t`` of the volume density (exactly 0 at both ends)."""
    cos, sin = exact_cos_sin(clamp_angle(t, "t"))
    out = cos**cfg.m1 * sin**cfg.m2
    return float(out) if out.ndim == 0 else out


def exact_cos_sin(x):
    """cos and sin with exact zeros at the endpoints 0 and pi/2."""
    x = np.asarray(x, dtype=float)
    cos = np.where(x >= HALF_PI, 0.0, np.cos(x))
    sin = np.where(x <= 0.0, 0.0, np.sin(x))
    return cos, sin


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if np.any((den == 0.0) & (num != 0.0)):
        raise SingularPointError("energy density is singular at this endpoint")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den == 0.0, 0.0, num / np.where(den == 0.0, 1.0, den))
    return float(out) if out.ndim == 0 else out


def join_energy_density(t, phi, dphi, cfg: ProblemConfig, e1: float, e2: float):
    """Pointwise ``|d u|^2`` of the join (or Hopf map) with profile ``phi``.

    ``e1`` and ``e2`` are the constant Dirichlet densities of the input maps.
    At an endpoint a term whose denominator vanishes is dropped when its
    numerator vanishes too; otherwise ``SingularPointError`` is raised, so
    callers wanting the limiting value should pass an interior ``t``.
    """
    t = clamp_angle(t, "t")
    phi = clamp_angle(phi, "phi")
    cos_t, sin_t = exact_cos_sin(t)
    cos_p, sin_p = exact_cos_sin(phi)
    first = _ratio(cfg.c**2 * cos_p**2 * e1, cfg.a**2 * cos_t**2)
    if cfg.mode is Mode.JOIN:
        second = _ratio(cfg.d**2 * sin_p**2 * e2, cfg.b**2 * sin_t**2)
    else:
        second = _ratio(cfg.c**2 * cos_p**2 * e2, cfg.b**2 * sin_t**2)
    radial = k_of_phi(phi, cfg) ** 2 * np.asarray(dphi, dtype=float) ** 2 / h_of_t(t, cfg) ** 2
    out = first + second + radial
    return float(out) if np.ndim(out) == 0 else out
