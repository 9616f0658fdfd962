"""Acoustic Casimir pressure between parallel plates in band-limited noise.

All wavevector integrals are evaluated in gap-scaled variables ``u = k_z L``
and ``q = Q L``. In those variables the pressure is

    P(L) = -(I / (pi L)) * J(w1 L / c, w2 L / c, rho)

with ``J`` a pure number, so a problem with gaps divided by ``s`` and band
edges multiplied by ``s`` runs through exactly the same quadrature.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    NumericsError,
    Tolerance,
    find_root,
    integrate_2d,
    refine_max,
)

EPSILON_0 = 8.8541878128e-12  # F/m
SOUND_SPEED_AIR = 340.0  # m/s

DomainMode = Literal["printed", "annulus"]
DOMAIN_MODES = ("printed", "annulus")


class GeometryError(ValueError):
    """Non-positive plate separation."""


class SeriesDivergenceError(ValueError):
    """Reflection series requested with r1 * r2 >= 1."""


@dataclass(frozen=True)
class Bandwidth:
    """Angular-frequency band [omega1, omega2] of the noise, in rad/s."""

    omega1: float
    omega2: float

    def __post_init__(self):
        if not (math.isfinite(self.omega1) and math.isfinite(self.omega2)):
            raise ValueError("band edges must be finite")
        if not 0 < self.omega1 < self.omega2:
            raise ValueError(f"need 0 < omega1 < omega2, got [{self.omega1}, {self.omega2}]")

    def scaled(self, s: float) -> "Bandwidth":
        return Bandwidth(self.omega1 * s, self.omega2 * s)


@dataclass(frozen=True)
class AcousticEnvironment:
    """Medium and plates.

    Attributes:
        c: Sound speed (m/s).
        intensity: Spectral intensity of the noise (W s^-1 m^-2).
        r1: Amplitude reflectivity of the fixed plate.
        r2: Amplitude reflectivity of the moving plate.

    Only ``r_product = r1 * r2`` enters the pressure. The defaults give
    ``r_product = 0.8``.
    """

    c: float = SOUND_SPEED_AIR
    intensity: float = 1e-4
    r1: float = math.sqrt(0.8)
    r2: float = math.sqrt(0.8)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"sound speed must be > 0, got {self.c}")
        if not self.intensity >= 0:
            raise ValueError(f"intensity must be >= 0, got {self.intensity}")
        for name in ("r1", "r2"):
            r = getattr(self, name)
            if not 0 <= r < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {r}")

    @property
    def r_product(self) -> float:
        return self.r1 * self.r2

    @classmethod
    def from_product(cls, r_product: float, **kwargs) -> "AcousticEnvironment":
        r = math.sqrt(r_product)
        return cls(r1=r, r2=r, **kwargs)

    def with_intensity(self, intensity: float) -> "AcousticEnvironment":
        return AcousticEnvironment(self.c, intensity, self.r1, self.r2)


class ModeCoordinates(NamedTuple):
    """Wavevector components (1/m): ``k_z`` normal and ``Q`` parallel to the plates."""

    k_z: float
    Q: float

    @property
    def k(self) -> float:
        return math.hypot(self.k_z, self.Q)

    def omega(self, c: float) -> float:
        return c * self.k


@dataclass(frozen=True)
class PressureProfile:
    gaps: tuple[float, ...]
    pressures: tuple[float, ...]
    env: AcousticEnvironment
    band: Bandwidth
    tol: Tolerance = DEFAULT_TOL
    mode: DomainMode = "printed"
    evaluations: int = 0
    max_error: float = 0.0

    def __post_init__(self):
        if len(self.gaps) != len(self.pressures):
            raise ValueError("gaps and pressures differ in length")
        g = np.asarray(self.gaps)
        if len(g) == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ValueError("gaps must be nonempty, positive and strictly increasing")


class PressureEvaluation(NamedTuple):
    pressure: float
    error: float
    evaluations: int


def _check_gap(L: float) -> None:
    if not L > 0:
        raise GeometryError(f"plate separation must be > 0, got {L}")


def _check_mode(mode: str) -> None:
    if mode not in DOMAIN_MODES:
        raise ValueError(f"unknown domain mode {mode!r}; expected one of {DOMAIN_MODES}")


def reflection_factor(r_product, theta):
    """Real part of ``1 / (xi - 1)`` with ``xi = 1 / (r_product**2 exp(2 i theta))``.

    Closed form ``(rho cos 2t - rho^2) / (1 - 2 rho cos 2t + rho^2)`` with
    ``rho = r_product**2``. Vectorized over ``theta``.
    """
    if not 0 <= r_product < 1:
        raise ValueError(f"r_product must lie in [0, 1), got {r_product}")
    rho = r_product * r_product
    cs = np.cos(2.0 * np.asarray(theta, dtype=float))
    out = (rho * cs - rho * rho) / (1.0 - 2.0 * rho * cs + rho * rho)
    return out if out.ndim else float(out)


def _scaled_edges(L, band, c):
    return band.omega1 * L / c, band.omega2 * L / c


def _outer_range(a1: float, a2: float, mode: str) -> tuple[float, float]:
    return (a1, a2) if mode == "printed" else (0.0, a2)


def _outer_breaks(lo: float, hi: float, a1: float) -> list[float]:
    # half-period panelization of the standing-wave factor (period pi in u)
    step = 0.5 * math.pi
    n0 = math.floor(lo / step) + 1
    n1 = math.ceil(hi / step)
    pts = [n * step for n in range(n0, n1)]
    pts.append(a1)
    return pts


def _dimensionless_integral(a1, a2, r_product, tol, mode, full_output=False):
    lo, hi = _outer_range(a1, a2, mode)

    def integrand(u, q):
        k2 = u * u + q * q
        return u * u * q / (k2 * k2) * reflection_factor(r_product, u)

    def q_limits(u):
        return math.sqrt(max(0.0, a1 * a1 - u * u)), math.sqrt(max(0.0, a2 * a2 - u * u))

    return integrate_2d(integrand, (lo, hi), q_limits, tol,
                        breaks=_outer_breaks(lo, hi, a1), full_output=full_output)


def acp_pressure_detail(L, band, env, tol=DEFAULT_TOL, mode: DomainMode = "printed") -> PressureEvaluation:
    """:func:`acp_pressure` with its quadrature error (Pa) and evaluation count."""
    _check_gap(L)
    _check_mode(mode)
    if env.intensity == 0 or env.r_product == 0:
        return PressureEvaluation(0.0, 0.0, 0)
    a1, a2 = _scaled_edges(L, band, env.c)
    res = _dimensionless_integral(a1, a2, env.r_product, tol, mode, full_output=True)
    scale = env.intensity / (math.pi * L)
    return PressureEvaluation(-scale * res.value, scale * res.error, res.evaluations)


def acp_pressure(L: float, band: Bandwidth, env: AcousticEnvironment,
                 tol: Tolerance = DEFAULT_TOL, mode: DomainMode = "printed") -> float:
    """Acoustic Casimir pressure (Pa) at plate separation ``L`` (m).

    Direct nested quadrature over ``k_z`` in ``[w1/c, w2/c]`` and ``Q`` up to
    ``sqrt(w2^2/c^2 - k_z^2)``. The ``Q`` lower limit ``sqrt(w1^2/c^2 - k_z^2)``
    is clamped at zero. ``mode="annulus"`` instead integrates ``k_z`` from 0
    so that every mode has ``w1 <= c k <= w2``.

    Negative values are attractive, positive repulsive.
    """
    return acp_pressure_detail(L, band, env, tol, mode).pressure


# --- series oracle ---------------------------------------------------------
# After the Q-integration the kernel in u is a quadratic alpha + beta u^2 on
# each piece, and each reflection harmonic cos(2 n u) integrates in closed form.

def _kernel_pieces(a1: float, a2: float, mode: str) -> list[tuple[float, float, float, float]]:
    """(lo, hi, alpha, beta) with Q-integrated kernel alpha + beta u^2 on [lo, hi]."""
    pieces = [(a1, a2, 0.5, -0.5 / (a2 * a2))]
    if mode == "annulus":
        pieces.insert(0, (0.0, a1, 0.0, 0.5 * (1.0 / (a1 * a1) - 1.0 / (a2 * a2))))
    return pieces


def _cos_moments(m: np.ndarray, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``int cos(m u) du`` and ``int u^2 cos(m u) du`` over [lo, hi]."""

    def prim(u):
        s = np.sin(m * u)
        c = np.cos(m * u)
        return s / m, u * u * s / m + 2.0 * u * c / m**2 - 2.0 * s / m**3

    p0h, p2h = prim(hi)
    p0l, p2l = prim(lo)
    return p0h - p0l, p2h - p2l


def series_remainder_bound(r_product: float, n_terms: int) -> float:
    """Bound on the neglected harmonics, relative to the integrated kernel magnitude."""
    rho = r_product * r_product
    return rho ** (n_terms + 1) / (1.0 - rho)


def series_terms_for(r_product: float, target: float) -> int:
    """Smallest ``n_terms`` whose remainder bound is below ``target``."""
    if not 0 <= r_product < 1:
        raise SeriesDivergenceError(f"series diverges for r_product={r_product}")
    if r_product == 0:
        return 1
    rho = r_product * r_product
    n = math.ceil(math.log(target * (1.0 - rho)) / math.log(rho)) - 1
    return max(n, 1)


def acp_pressure_series_detail(L, band, env, n_terms=None, tol=DEFAULT_TOL,
                               mode: DomainMode = "printed") -> tuple[float, float]:
    """Series-oracle pressure and its truncation bound, both in Pa."""
    _check_gap(L)
    _check_mode(mode)
    if not env.r_product < 1:
        raise SeriesDivergenceError(f"series diverges for r_product={env.r_product}")
    if n_terms is None:
        n_terms = series_terms_for(env.r_product, 0.01 * tol.rel)
    if n_terms < 1:
        raise ValueError("n_terms must be a positive integer")
    if env.intensity == 0 or env.r_product == 0:
        return 0.0, 0.0

    a1, a2 = _scaled_edges(L, band, env.c)
    rho = env.r_product ** 2
    n = np.arange(1, n_terms + 1, dtype=float)
    weights = rho ** n
    m = 2.0 * n
    total = 0.0
    magnitude = 0.0
    for lo, hi, alpha, beta in _kernel_pieces(a1, a2, mode):
        c0, c2 = _cos_moments(m, lo, hi)
        total += math.fsum(weights * (alpha * c0 + beta * c2))
        magnitude += alpha * (hi - lo) + beta * (hi**3 - lo**3) / 3.0
    scale = env.intensity / (math.pi * L)
    bound = scale * series_remainder_bound(env.r_product, n_terms) * magnitude
    return -scale * total, bound


def acp_pressure_series(L: float, band: Bandwidth, env: AcousticEnvironment,
                        n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL,
                        mode: DomainMode = "printed") -> float:
    """Independent evaluation of :func:`acp_pressure` through the reflection series.

    The standing-wave factor is expanded as ``sum_n rho^n cos(2 n k_z L)``;
    the ``Q`` integral and every harmonic's ``k_z`` integral are done in
    closed form. With ``n_terms=None`` enough terms are kept to push the
    truncation bound two decades below ``tol.rel``.
    """
    return acp_pressure_series_detail(L, band, env, n_terms, tol, mode)[0]


# --- closed forms ------------------------------------------------------------

def ideal_pressure(L: float, intensity: float) -> float:
    """Perfect reflectors, unbounded band: ``-pi I / (4 L)``."""
    _check_gap(L)
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    return -math.pi * intensity / (4.0 * L)


def electrostatic_pressure(L: float, V: float) -> float:
    """Parallel-plate electrostatic pressure magnitude ``eps0 V^2 / (2 L^2)``."""
    _check_gap(L)
    return EPSILON_0 * V * V / (2.0 * L * L)


def repulsive_peak_locations(band: Bandwidth, c: float, n_max: int) -> list[float]:
    """Gaps ``n pi c / omega1`` for ``n = 1..n_max`` (half-wavelength multiples)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    base = math.pi * c / band.omega1
    return [n * base for n in range(1, n_max + 1)]


def design_bandwidth(L_target: float, n: int, c: float, rel_width: float) -> Bandwidth:
    """Band whose n-th half-wavelength resonance of the lower edge sits at ``L_target``."""
    if not L_target > 0:
        raise GeometryError(f"L_target must be > 0, got {L_target}")
    if n < 1:
        raise ValueError("harmonic index must be >= 1")
    if not 0 < rel_width < 1:
        raise ValueError("rel_width must lie in (0, 1)")
    omega1 = n * math.pi * c / L_target
    return Bandwidth(omega1, omega1 * (1.0 + rel_width))


# --- profiles ----------------------------------------------------------------

class GapEvaluationError(NumericsError):
    def __init__(self, gap: float, cause: Exception):
        self.gap = gap
        self.cause = cause
        super().__init__(f"pressure evaluation failed at L={gap!r}: {cause}")


def _evaluate_gap(L, band, env, tol, mode):
    try:
        return acp_pressure_detail(L, band, env, tol, mode)
    except NumericsError as exc:
        raise GapEvaluationError(L, exc) from exc


def default_workers() -> int:
    raw = os.environ.get("ACASIMIR_THREADS", "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        n = 0
    return n if n > 0 else 1


def pressure_profile(gaps: Sequence[float], band: Bandwidth, env: AcousticEnvironment,
                     tol: Tolerance = DEFAULT_TOL, mode: DomainMode = "printed",
                     workers: int | None = None) -> PressureProfile:
    """Evaluate the pressure at each gap.

    With ``workers > 1`` gaps are farmed out to a process pool; results are
    assembled in input order either way. ``workers=None`` reads
    ``ACASIMIR_THREADS`` (unset or 0 means serial).
    """
    gaps = tuple(float(g) for g in gaps)
    g = np.asarray(gaps)
    if len(g) == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("gaps must be nonempty, positive and strictly increasing")
    _check_mode(mode)
    workers = default_workers() if workers is None else max(int(workers), 1)
    job = partial(_evaluate_gap, band=band, env=env, tol=tol, mode=mode)
    if workers > 1 and len(gaps) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(gaps))) as pool:
            results = list(pool.map(job, gaps))
    else:
        results = [job(L) for L in gaps]
    return PressureProfile(
        gaps=gaps,
        pressures=tuple(r.pressure for r in results),
        env=env,
        band=band,
        tol=tol,
        mode=mode,
        evaluations=sum(r.evaluations for r in results),
        max_error=max(r.error for r in results),
    )


def _pressure_fn(profile: PressureProfile, tol: Tolerance):
    return lambda L: acp_pressure(L, profile.band, profile.env, tol, profile.mode)


def sign_changes(profile: PressureProfile, tol: Tolerance = DEFAULT_TOL) -> list[float]:
    """Gaps where the pressure changes sign, refined by root finding.

    Only strict sign flips between neighbouring samples count.
    """
    p = np.asarray(profile.pressures)
    idx = np.flatnonzero(p[:-1] * p[1:] < 0)
    if len(idx) == 0:
        return []
    fn = _pressure_fn(profile, profile.tol)
    root_tol = Tolerance(rel=max(tol.rel, 1e-10), abs=0.0, max_evals=tol.max_evals)
    return [find_root(fn, (profile.gaps[i], profile.gaps[i + 1]), root_tol) for i in idx]


@dataclass(frozen=True)
class Extremum:
    L: float
    pressure: float


def pressure_extrema(profile: PressureProfile, tol: Tolerance = DEFAULT_TOL) -> list[Extremum]:
    """Local maxima of ``|P(L)|`` inside the sampled range, refined by local search.

    Endpoint samples are never reported.
    """
    p = np.abs(np.asarray(profile.pressures))
    gaps = profile.gaps
    fn = _pressure_fn(profile, profile.tol)
    xtol = Tolerance(rel=max(tol.rel, 1e-9), abs=0.0, max_evals=tol.max_evals)
    out = []
    for i in range(1, len(p) - 1):
        if p[i] > 0 and p[i] >= p[i - 1] and p[i] > p[i + 1]:
            x, _ = refine_max(lambda L: abs(fn(L)), (gaps[i - 1], gaps[i + 1]), xtol)
            out.append(Extremum(x, fn(x)))
    return out


def nearest_extremum(extrema: Sequence[Extremum], L: float) -> Extremum | None:
    if not extrema:
        return None
    return min(extrema, key=lambda e: abs(e.L - L))


def sweep_gaps(L_min: float, L_max: float, n_points: int, spacing: str = "linear") -> list[float]:
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not 0 < L_min < L_max:
        raise ValueError("need 0 < L_min < L_max")
    if spacing == "log":
        return list(np.geomspace(L_min, L_max, n_points))
    if spacing == "linear":
        return list(np.linspace(L_min, L_max, n_points))
    raise ValueError(f"spacing must be 'linear' or 'log', got {spacing!r}")

