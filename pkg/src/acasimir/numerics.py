"""Numerical primitives: adaptive quadrature, root bracketing, maximization.

Integrands handed to :func:`integrate_1d` and :func:`integrate_2d` are called
with numpy arrays of abscissae and must return an array of the same shape
(scalar returns are broadcast).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

# 15-point Kronrod rule with its embedded 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[9:14:2] = _WG[2::-1]


class NumericsError(ArithmeticError):
    """Base class for numerical failures."""


class QuadratureBudgetError(NumericsError):
    """Adaptive quadrature ran out of evaluations before converging."""

    def __init__(self, estimate: float, error: float, evaluations: int, level: str = "1d"):
        self.estimate = estimate
        self.error = error
        self.evaluations = evaluations
        self.level = level
        super().__init__(
            f"quadrature budget exhausted at {level} level after {evaluations} "
            f"evaluations: estimate={estimate!r}, error bound={error!r}"
        )


class NonFiniteError(NumericsError):
    """A function returned NaN or infinity."""

    def __init__(self, x: float, value: float, level: str = "1d"):
        self.x = x
        self.value = value
        self.level = level
        super().__init__(f"non-finite value {value!r} at x={x!r} ({level})")


class NoSignChangeError(NumericsError):
    """Root bracket endpoints have the same sign."""


@dataclass(frozen=True)
class Tolerance:
    """Accuracy target and evaluation budget.

    Attributes:
        rel: Relative tolerance.
        abs: Absolute tolerance, in the units of the quantity being computed.
        max_evals: Function-evaluation budget.
    """

    rel: float = 1e-8
    abs: float = 1e-14
    max_evals: int = 1_000_000

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError(f"rel must be > 0, got {self.rel}")
        if not self.abs >= 0:
            raise ValueError(f"abs must be >= 0, got {self.abs}")
        if self.max_evals < 100:
            raise ValueError(f"max_evals must be >= 100, got {self.max_evals}")

    def target(self, value: float) -> float:
        return max(self.abs, self.rel * abs(value))


DEFAULT_TOL = Tolerance()

_EPS = float(np.finfo(float).eps)
ROUNDOFF_FACTOR = 50.0


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval bounds must be finite: [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


class QuadResult(NamedTuple):
    value: float
    error: float
    evaluations: int


def _as_bounds(iv) -> tuple[float, float] | None:
    if iv is None:
        return None
    if isinstance(iv, Interval):
        return iv.lo, iv.hi
    lo, hi = (float(v) for v in iv)
    if not hi > lo:
        return None
    return lo, hi


def _panel_estimate(y: np.ndarray, half: float) -> tuple[float, float, float]:
    """Kronrod value, error estimate and ``int |f|`` from the 15 node values.

    The error follows QUADPACK's QK15 heuristic: the raw Kronrod-Gauss
    difference is scaled by ``(200 |K - G| / resasc) ** 1.5`` with ``resasc``
    the integrated deviation from the panel mean. The raw difference mostly
    measures the 7-point Gauss error and is far too pessimistic for smooth
    panels. Roundoff is handled globally by the adaptive driver.
    """
    kron = half * float(KRONROD_WEIGHTS @ y)
    gauss = half * float(GAUSS_WEIGHTS @ y)
    resabs = abs(half) * float(KRONROD_WEIGHTS @ np.abs(y))
    mean = 0.5 * float(KRONROD_WEIGHTS @ y)
    resasc = abs(half) * float(KRONROD_WEIGHTS @ np.abs(y - mean))
    err = abs(kron - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return kron, err, resabs


def _gk15(f, a: float, b: float, level: str):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center + half * NODES
    y = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    if not np.all(np.isfinite(y)):
        i = int(np.flatnonzero(~np.isfinite(y))[0])
        raise NonFiniteError(float(x[i]), float(y[i]), level)
    return _panel_estimate(y, half)


def _initial_panels(lo: float, hi: float, breaks: Sequence[float] | None) -> list[float]:
    edges = [lo]
    if breaks is not None:
        edges.extend(sorted(float(b) for b in breaks if lo < b < hi))
    edges.append(hi)
    return edges


def _adaptive(panel_rule, lo, hi, tol: Tolerance, breaks, evals_per_panel, level):
    """Globally adaptive bisection driver shared by the 1-D and 2-D routines.

    ``panel_rule(a, b)`` returns ``(value, error, evaluations, abs_value,
    inner_error)`` where ``abs_value`` integrates ``|f|``; ``inner_error`` is
    carried along for the 2-D driver but does not steer the bisection.
    Accuracy below the roundoff level ``ROUNDOFF_FACTOR * eps * int |f|`` is
    never demanded.
    """
    edges = _initial_panels(lo, hi, breaks)
    heap = []
    panels = {}
    evals = 0
    counter = 0

    def push(a, b):
        nonlocal evals, counter
        v, e, n, av, ie = panel_rule(a, b)
        evals += n
        panels[counter] = (a, b, v, e, av, ie)
        heapq.heappush(heap, (-e, counter))
        counter += 1
        return v, e, av

    total = err = resabs = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e, av = push(a, b)
        total += v
        err += e
        resabs += av

    def target():
        return max(tol.target(total), ROUNDOFF_FACTOR * _EPS * resabs)

    while err > target():
        if evals + evals_per_panel > tol.max_evals:
            raise QuadratureBudgetError(total, err, evals, level)
        _, key = heapq.heappop(heap)
        a, b, v, e, av, _ = panels.pop(key)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            raise QuadratureBudgetError(total, err, evals, level)
        for lo_, hi_ in ((a, mid), (mid, b)):
            v2, e2, av2 = push(lo_, hi_)
            total += v2
            err += e2
            resabs += av2
        total -= v
        err -= e
        resabs -= av
        # incremental sums drift; resync periodically
        if err < 0 or counter % 64 == 0:
            total = math.fsum(p[2] for p in panels.values())
            err = math.fsum(p[3] for p in panels.values())
            resabs = math.fsum(p[4] for p in panels.values())

    ordered = sorted(panels.values())
    value = math.fsum(p[2] for p in ordered)
    error = math.fsum(p[3] for p in ordered)
    return QuadResult(value, error, evals), ordered


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    iv: Interval | tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
    breaks: Sequence[float] | None = None,
    full_output: bool = False,
):
    """Adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over ``iv``.

    The panel with the largest error estimate is bisected until the summed
    estimate is at most ``max(tol.abs, tol.rel * |Q|)``. ``breaks`` seeds the
    initial panelization, which matters for oscillatory integrands: a single
    panel spanning several periods can report a falsely small error.

    Args:
        f: Vectorized integrand.
        iv: Integration interval. An empty ``(lo, hi)`` tuple with
            ``hi <= lo`` integrates to zero.
        tol: Accuracy target and evaluation budget.
        breaks: Optional interior points for the initial panels.
        full_output: Return a :class:`QuadResult` instead of a float.

    Raises:
        QuadratureBudgetError: Budget exhausted; carries the best estimate.
        NonFiniteError: The integrand returned NaN/inf; carries the abscissa.
    """
    bounds = _as_bounds(iv)
    if bounds is None:
        res = QuadResult(0.0, 0.0, 0)
        return res if full_output else res.value

    def rule(a, b):
        v, e, av = _gk15(f, a, b, "1d")
        return v, e, 15, av, 0.0

    res, _ = _adaptive(rule, bounds[0], bounds[1], tol, breaks, 30, "1d")
    return res if full_output else res.value


def integrate_2d(
    f: Callable[[float, np.ndarray], np.ndarray],
    outer: Interval | tuple[float, float],
    inner_of: Callable[[float], Interval | tuple[float, float] | None],
    tol: Tolerance = DEFAULT_TOL,
    breaks: Sequence[float] | None = None,
    full_output: bool = False,
):
    """Iterated adaptive integral ``int dx int_{inner_of(x)} dy f(x, y)``.

    ``f(x, y)`` is called with a scalar ``x`` and an array ``y``; an empty
    inner interval contributes zero. ``breaks`` applies to the outer axis.

    Half of the target goes to the outer bisection, half to the integrated
    inner errors. Inner integrals start at ``tol.rel / 2``; if cancellation
    in the outer sum leaves their accumulated error above its share, the
    whole integral is redone with tighter inner tolerances.

    Raises:
        QuadratureBudgetError: ``level`` is ``"outer"`` or ``"inner"``.
        NonFiniteError: ``level`` names the outer abscissa for inner failures.
    """
    bounds = _as_bounds(outer)
    if bounds is None:
        res = QuadResult(0.0, 0.0, 0)
        return res if full_output else res.value
    lo, hi = bounds
    outer_tol = Tolerance(rel=0.5 * tol.rel, abs=0.5 * tol.abs, max_evals=tol.max_evals)
    inner_rel = 0.5 * tol.rel
    spent = 0

    def make_rule(inner_tol):
        def inner(x: float) -> QuadResult:
            try:
                return integrate_1d(lambda y: f(x, y), inner_of(x), inner_tol, full_output=True)
            except QuadratureBudgetError as exc:
                exc.level = "inner"
                raise
            except NonFiniteError as exc:
                raise NonFiniteError(exc.x, exc.value, f"inner at x={x!r}") from exc

        def rule(a, b):
            center = 0.5 * (a + b)
            half = 0.5 * (b - a)
            results = [inner(float(x)) for x in center + half * NODES]
            y = np.array([r.value for r in results])
            ye = np.array([r.error for r in results])
            kron, err, resabs = _panel_estimate(y, half)
            return (kron, err, sum(r.evaluations for r in results), resabs,
                    half * float(KRONROD_WEIGHTS @ ye))

        return rule

    while True:
        inner_tol = Tolerance(rel=inner_rel, abs=0.5 * tol.abs / (hi - lo),
                              max_evals=tol.max_evals)
        budget = Tolerance(outer_tol.rel, outer_tol.abs, max(tol.max_evals - spent, 100))
        try:
            res, panels = _adaptive(make_rule(inner_tol), lo, hi, budget, breaks, 1, "outer")
        except QuadratureBudgetError as exc:
            exc.level = "outer" if exc.level == "1d" else exc.level
            exc.evaluations += spent
            raise
        spent += res.evaluations
        inner_err = math.fsum(p[5] for p in panels)
        resabs = math.fsum(p[4] for p in panels)
        target = 0.5 * max(tol.target(res.value), ROUNDOFF_FACTOR * _EPS * resabs)
        if inner_err <= target:
            break
        # cancellation in the outer sum: inner integrals need more digits
        tighter = inner_rel * max(min(0.5 * target / inner_err, 0.1), 1e-6)
        if tighter < 4 * _EPS:
            raise QuadratureBudgetError(res.value, res.error + inner_err, spent, "inner")
        inner_rel = tighter

    res = QuadResult(res.value, res.error + inner_err, spent)
    return res if full_output else res.value


def find_root(
    f: Callable[[float], float],
    bracket: Interval | tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
    maxiter: int = 200,
) -> float:
    """Brent's method on a sign-change bracket.

    Each step tries inverse quadratic or secant interpolation and falls back
    to bisection whenever the interpolant leaves the bracket or converges too
    slowly. Stops once the bracket is narrower than
    ``2 * max(tol.abs, tol.rel * |x|)`` or an exact zero is hit.

    Raises:
        NoSignChangeError: ``f(lo) * f(hi) > 0``.
    """
    a, b = (bracket.lo, bracket.hi) if isinstance(bracket, Interval) else bracket
    fa, fb = float(f(a)), float(f(b))
    for x, fx in ((a, fa), (b, fb)):
        if not math.isfinite(fx):
            raise NonFiniteError(x, fx)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NoSignChangeError(f"no sign change on [{a!r}, {b!r}]: f={fa!r}, {fb!r}")

    c, fc = a, fa
    e = d = b - a
    for _ in range(maxiter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        xtol = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * tol.target(b)
        m = 0.5 * (c - b)
        if abs(m) <= xtol or fb == 0.0:
            return b
        if abs(e) < xtol or abs(fa) <= abs(fb):
            e = d = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(xtol * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m
        a, fa = b, fb
        if abs(d) > xtol:
            b += d
        else:
            b += xtol if m > 0 else -xtol
        fb = float(f(b))
        if not math.isfinite(fb):
            raise NonFiniteError(b, fb)
        if (fb > 0 and fc > 0) or (fb <= 0 and fc <= 0):
            c, fc = a, fa
            e = d = b - a
    return b


def refine_max(
    f: Callable[[float], float],
    iv: Interval | tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[float, float]:
    """Local maximization on ``iv`` by bounded Brent (golden section + parabolas)."""
    lo, hi = (iv.lo, iv.hi) if isinstance(iv, Interval) else iv

    def neg(x):
        v = float(f(x))
        if not math.isfinite(v):
            raise NonFiniteError(x, v)
        return -v

    xatol = max(tol.abs, tol.rel * max(abs(lo), abs(hi)), 4 * np.finfo(float).eps * max(abs(lo), abs(hi)))
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol, "maxiter": 500})
    x = float(res.x)
    return x, -float(res.fun)


def find_max(
    f: Callable[[float], float],
    iv: Interval | tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
    n_grid: int = 512,
) -> tuple[float, float]:
    """Global maximum over ``iv``: dense grid scan, then local refinement.

    The scan guards against multiple local maxima; refinement runs on the two
    grid cells around the best sample. Returns ``(x_max, f_max)``.
    """
    lo, hi = (iv.lo, iv.hi) if isinstance(iv, Interval) else iv
    n_grid = max(int(n_grid), 512)
    xs = np.linspace(lo, hi, n_grid)
    ys = np.empty(n_grid)
    for i, x in enumerate(xs):
        y = float(f(float(x)))
        if not math.isfinite(y):
            raise NonFiniteError(float(x), y)
        ys[i] = y
    i = int(np.argmax(ys))
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n_grid - 1)])
    x, y = refine_max(f, (a, b), tol)
    if ys[i] > y:
        return float(xs[i]), float(ys[i])
    return x, y


def derivative(f: Callable[[float], float], x: float, h: float) -> float:
    """Central difference ``(f(x + h) - f(x - h)) / (2 h)``."""
    fp = float(f(x + h))
    fm = float(f(x - h))
    for xx, v in ((x + h, fp), (x - h, fm)):
        if not math.isfinite(v):
            raise NonFiniteError(xx, v)
    return (fp - fm) / (2.0 * h)
