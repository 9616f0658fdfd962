"""One-degree-of-freedom parallel-plate switch with acoustic Casimir loading.

Sign convention: ``net_force`` is the force pushing the gap *closed*. The
spring opposes closing below the rest gap, the electrostatic term always
closes, and the acoustic term closes for attractive (negative) pressure.

In gap-fraction units ``L~ = L / D`` the equilibria satisfy

    lambda1 = L~^2 (1 - L~) + lambda2 * f(L~)

with ``lambda1 = eps0 A V^2 / (2 k D^3)``, ``lambda2 = I A / (k D^2)`` and
``f(L~) = L~^2 (D / I) P(L~ D)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .acoustics import (
    EPSILON_0,
    AcousticEnvironment,
    Bandwidth,
    DomainMode,
    acp_pressure,
)
from .numerics import (
    DEFAULT_TOL,
    NumericsError,
    Tolerance,
    derivative,
    find_max,
    find_root,
)

PULL_IN_FRACTION = 2.0 / 3.0
CLASSIC_LAMBDA1_MAX = 4.0 / 27.0
ARGMAX_SHIFT_THRESHOLD = 1e-3
MAXIMIZER_DOMAIN = (0.01, 1.0)

ShapeFunction = Callable[[float], float]


class NoEquilibriumError(NumericsError):
    """The applied voltage exceeds pull-in: the gap has no equilibrium."""


@dataclass(frozen=True)
class LumpedDevice:
    """Spring-suspended plate over a fixed electrode.

    Attributes:
        k_spring: Spring constant (N/m).
        D: Rest gap (m).
        A: Plate area (m^2).
    """

    k_spring: float = 1.0
    D: float = 60e-6
    A: float = 1e-8

    def __post_init__(self):
        for name in ("k_spring", "D", "A"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite number, got {v}")


@dataclass(frozen=True)
class Actuation:
    V: float
    env: AcousticEnvironment
    band: Bandwidth
    mode: DomainMode = "printed"

    def __post_init__(self):
        if not self.V >= 0:
            raise ValueError(f"voltage must be >= 0, got {self.V}")


@dataclass(frozen=True)
class DimensionlessState:
    L_tilde: float
    lambda1: float
    lambda2: float
    f_value: float

    def __post_init__(self):
        if not 0 < self.L_tilde <= 1:
            raise ValueError(f"L_tilde must lie in (0, 1], got {self.L_tilde}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be >= 0")


@dataclass(frozen=True)
class PullInResult:
    """Pull-in point of the switch.

    ``V_star`` comes from maximizing the bifurcation curve; ``V_star_closed``
    is the shortcut ``V_in sqrt(1 + 27/4 lambda2 f(2/3))``, which is only
    exact while the maximum stays at ``L~ = 2/3``.
    """

    L_in: float
    V_in: float
    V_star: float
    L_tilde_star: float
    lambda1_star: float
    argmax_shifted: bool
    lambda2: float = 0.0
    f_at_pull_in: float = 0.0
    V_star_closed: float = float("nan")


# --- force balance ------------------------------------------------------------

def spring_force(L: float, dev: LumpedDevice) -> float:
    return -dev.k_spring * (dev.D - L)


def electrostatic_force(L: float, dev: LumpedDevice, V: float) -> float:
    return EPSILON_0 * V * V * dev.A / (2.0 * L * L)


def net_force(L: float, dev: LumpedDevice, act: Actuation, tol: Tolerance = DEFAULT_TOL) -> float:
    """Gap-closing force (N) at separation ``L``; zero at equilibrium."""
    if not L > 0:
        raise ValueError(f"gap must be > 0, got {L}")
    F = spring_force(L, dev) + electrostatic_force(L, dev, act.V)
    if act.env.intensity > 0:
        F -= dev.A * acp_pressure(L, act.band, act.env, tol, act.mode)
    return F


def lambda1(dev: LumpedDevice, V: float) -> float:
    """Electrostatic-to-elastic load ``eps0 A V^2 / (2 k D^3)``."""
    if V < 0:
        raise ValueError("voltage must be >= 0")
    return EPSILON_0 * dev.A * V * V / (2.0 * dev.k_spring * dev.D**3)


def voltage_for_lambda1(dev: LumpedDevice, lam1: float) -> float:
    """Inverse of :func:`lambda1`."""
    if lam1 < 0:
        raise ValueError("lambda1 must be >= 0")
    return math.sqrt(2.0 * dev.k_spring * dev.D**3 * lam1 / (EPSILON_0 * dev.A))


def lambda2(dev: LumpedDevice, env: AcousticEnvironment) -> float:
    """Acoustic-to-elastic load ``I A / (k D^2)``."""
    return env.intensity * dev.A / (dev.k_spring * dev.D**2)


def f_dimensionless(L_tilde: float, dev: LumpedDevice, env: AcousticEnvironment,
                    band: Bandwidth, tol: Tolerance = DEFAULT_TOL,
                    mode: DomainMode = "printed") -> float:
    """Acoustic shape term ``L~^2 (D / I) P(L~ D)``; independent of ``I``.

    Positive where the pressure is repulsive. Evaluated at unit intensity so
    that it is defined for silent environments too.
    """
    if not 0 < L_tilde <= 1:
        raise ValueError(f"L_tilde must lie in (0, 1], got {L_tilde}")
    unit = env.with_intensity(1.0)
    return L_tilde * L_tilde * dev.D * acp_pressure(L_tilde * dev.D, band, unit, tol, mode)


def shape_function(dev: LumpedDevice, env: AcousticEnvironment, band: Bandwidth,
                   tol: Tolerance = DEFAULT_TOL, mode: DomainMode = "printed",
                   cache_size: int | None = 4096) -> ShapeFunction:
    """``f_dimensionless`` as a memoized one-argument callable."""
    def f(L_tilde: float) -> float:
        return f_dimensionless(L_tilde, dev, env, band, tol, mode)

    return lru_cache(maxsize=cache_size)(f) if cache_size != 0 else f


def bifurcation_value(L_tilde: float, lambda2_value: float, f: ShapeFunction | None) -> float:
    base = L_tilde * L_tilde * (1.0 - L_tilde)
    if lambda2_value == 0 or f is None:
        return base
    return base + lambda2_value * f(L_tilde)


def bifurcation_curve(L_tilde_grid: Sequence[float], lambda2_value: float,
                      f: ShapeFunction | None) -> list[float]:
    """``lambda1(L~) = L~^2 (1 - L~) + lambda2 f(L~)`` on a grid."""
    if lambda2_value < 0:
        raise ValueError("lambda2 must be >= 0")
    grid = [float(x) for x in L_tilde_grid]
    if any(not 0 < x <= 1 for x in grid):
        raise ValueError("grid values must lie in (0, 1]")
    return [bifurcation_value(x, lambda2_value, f) for x in grid]


def bifurcation_term(L_tilde: float, lambda2_value: float, f: ShapeFunction | None) -> float:
    if lambda2_value == 0 or f is None:
        return 0.0
    return lambda2_value * f(L_tilde)


def equilibrium_residual(L_tilde: float, lambda1_value: float, lambda2_value: float,
                         f: ShapeFunction | None) -> float:
    """Dimensionless gap-closing force, ``net_force / (k D)``."""
    return (-(1.0 - L_tilde) + lambda1_value / L_tilde**2
            - bifurcation_term(L_tilde, lambda2_value, f) / L_tilde**2)


# --- pull-in ------------------------------------------------------------------

def classic_pull_in_voltage(dev: LumpedDevice) -> float:
    return math.sqrt(8.0 * dev.k_spring * dev.D**3 / (27.0 * EPSILON_0 * dev.A))


def pull_in_classic(dev: LumpedDevice) -> PullInResult:
    """Electrostatic-only pull-in: ``L_in = 2D/3``, ``V_in = sqrt(8 k D^3 / (27 eps0 A))``."""
    V_in = classic_pull_in_voltage(dev)
    return PullInResult(
        L_in=2.0 * dev.D / 3.0,
        V_in=V_in,
        V_star=V_in,
        L_tilde_star=PULL_IN_FRACTION,
        lambda1_star=CLASSIC_LAMBDA1_MAX,
        argmax_shifted=False,
        lambda2=0.0,
        f_at_pull_in=0.0,
        V_star_closed=V_in,
    )


def pull_in_from_shape(dev: LumpedDevice, lambda2_value: float, f: ShapeFunction | None,
                       tol: Tolerance = DEFAULT_TOL, n_grid: int = 512) -> PullInResult:
    """Pull-in from the maximum of the bifurcation curve for given ``lambda2`` and ``f``.

    Always runs the maximizer over ``L~`` in (0.01, 1), even for
    ``lambda2 = 0``.
    """
    if lambda2_value < 0:
        raise ValueError("lambda2 must be >= 0")
    x_star, lam_star = find_max(lambda x: bifurcation_value(x, lambda2_value, f),
                                MAXIMIZER_DOMAIN, _maximizer_tol(tol), n_grid=n_grid)
    V_in = classic_pull_in_voltage(dev)
    f_in = f(PULL_IN_FRACTION) if (f is not None and lambda2_value != 0) else 0.0
    radicand = 1.0 + 6.75 * lambda2_value * f_in
    return PullInResult(
        L_in=x_star * dev.D,
        V_in=V_in,
        V_star=voltage_for_lambda1(dev, lam_star),
        L_tilde_star=x_star,
        lambda1_star=lam_star,
        argmax_shifted=abs(x_star - PULL_IN_FRACTION) > ARGMAX_SHIFT_THRESHOLD,
        lambda2=lambda2_value,
        f_at_pull_in=f_in,
        V_star_closed=V_in * math.sqrt(radicand) if radicand >= 0 else float("nan"),
    )


def _maximizer_tol(tol: Tolerance) -> Tolerance:
    return Tolerance(rel=min(tol.rel, 1e-10), abs=min(tol.abs, 1e-12), max_evals=tol.max_evals)


def pull_in_acoustic(dev: LumpedDevice, env: AcousticEnvironment, band: Bandwidth,
                     tol: Tolerance = DEFAULT_TOL, mode: DomainMode = "printed",
                     f: ShapeFunction | None = None) -> PullInResult:
    """Pull-in with the acoustic Casimir term.

    A silent environment (``lambda2 = 0``) returns :func:`pull_in_classic`
    unchanged, since the acoustic term then vanishes identically.
    """
    lam2 = lambda2(dev, env)
    if lam2 == 0:
        return pull_in_classic(dev)
    if f is None:
        f = shape_function(dev, env, band, tol, mode)
    return pull_in_from_shape(dev, lam2, f, tol)


def shape_slope(f: ShapeFunction, L_tilde: float = PULL_IN_FRACTION, h: float = 1e-5) -> float:
    """Finite-difference ``df/dL~``; stationarity check of the shape term."""
    return derivative(f, L_tilde, h)


# --- equilibria ---------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    L: float
    stable: bool


def equilibrium_gaps(dev: LumpedDevice, act: Actuation, tol: Tolerance = DEFAULT_TOL,
                     L_min_fraction: float = 0.01, n_scan: int = 400) -> list[Equilibrium]:
    """All equilibria on ``(L_min, D]`` by sign scan plus root refinement.

    An equilibrium is stable when the closing force grows with the gap
    (``dF/dL > 0``), i.e. a perturbation is pushed back.

    Raises:
        NoEquilibriumError: No root in the scanned range (beyond pull-in).
    """
    force = lambda L: net_force(L, dev, act, tol)
    grid = np.linspace(L_min_fraction * dev.D, dev.D, n_scan)
    values = [force(float(L)) for L in grid]
    roots = []
    for i in range(len(grid) - 1):
        a, b = float(grid[i]), float(grid[i + 1])
        fa, fb = values[i], values[i + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            root_tol = Tolerance(rel=1e-12, abs=1e-15 * dev.D, max_evals=tol.max_evals)
            roots.append(find_root(force, (a, b), root_tol))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise NoEquilibriumError(f"no equilibrium gap for V={act.V!r} V on (0, D]")
    h = 1e-6 * dev.D
    return [Equilibrium(L, derivative(force, L, h) > 0) for L in roots]


def dimensionless_state(L: float, dev: LumpedDevice, act: Actuation,
                        tol: Tolerance = DEFAULT_TOL) -> DimensionlessState:
    L_tilde = L / dev.D
    return DimensionlessState(
        L_tilde=L_tilde,
        lambda1=lambda1(dev, act.V),
        lambda2=lambda2(dev, act.env),
        f_value=f_dimensionless(L_tilde, dev, act.env, act.band, tol, act.mode),
    )

