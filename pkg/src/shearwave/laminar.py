"""Flow parameters, the laminar (q-independent) solution family and the dispersion relation.

The laminar flows are parallel shear flows under a flat surface.  In the
height-function formulation they read ``H(p) = 2 (p - p0) / (r(p) + r(p0))``
with ``r(p) = sqrt(lambda - 2 gamma p)``.  Genuine waves bifurcate from the
member ``lambda = lambda_*`` fixed by the dispersion relation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoDispersionRootError, SingularDenominatorError

DEFAULT_G = 9.8
DEFAULT_P0 = -2.0

# scan/bisection settings for the dispersion root
SCAN_DELTA = 1e-9
SCAN_POINTS = 4000
POLE_REJECT = 1e-8


@dataclass(frozen=True)
class FlowParams:
    """Physical inputs: constant vorticity, relative mass flux and gravity."""

    gamma: float
    p0: float = DEFAULT_P0
    g: float = DEFAULT_G

    def __post_init__(self):
        if not self.p0 < 0:
            raise ValueError(f"relative mass flux p0 must be negative, got {self.p0}")
        if not self.g > 0:
            raise ValueError(f"gravity g must be positive, got {self.g}")

    @property
    def lambda_min(self) -> float:
        """Infimum of admissible lambda: r(p) must be real on the whole strip."""
        return max(0.0, 2.0 * self.gamma * self.p0)


@dataclass(frozen=True)
class LaminarState:
    """A member of the laminar family, normally the bifurcation point lambda_*.

    ``other_roots`` lists further admissible dispersion roots (diagnostics only).
    """

    params: FlowParams
    lambda_star: float
    q_star: float
    r0: float
    other_roots: tuple = field(default=(), compare=False)

    @classmethod
    def from_lambda(cls, params: FlowParams, lam: float) -> "LaminarState":
        """Laminar state for an arbitrary admissible lambda (not necessarily a dispersion root)."""
        _check_admissible(params, lam)
        r0 = float(np.sqrt(lam - 2.0 * params.gamma * params.p0))
        return cls(params, float(lam), hydraulic_head(params, lam), r0)

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def p0(self) -> float:
        return self.params.p0

    @property
    def g(self) -> float:
        return self.params.g

    @property
    def sqrt_lam(self) -> float:
        return float(np.sqrt(self.lambda_star))

    @property
    def surface_height(self) -> float:
        """H(0): the laminar depth, equal to the first-order mean depth."""
        return 2.0 * (-self.p0) / (self.sqrt_lam + self.r0)


def _check_admissible(params: FlowParams, lam: float) -> None:
    if not lam > 0 or lam - 2.0 * params.gamma * params.p0 <= 0:
        raise DomainError(
            f"lambda={lam!r} inadmissible for gamma={params.gamma}, p0={params.p0}"
        )


def r_profile(state: LaminarState, p):
    """r(p) = sqrt(lambda_* - 2 gamma p); raises DomainError on a non-positive radicand."""
    rad = state.lambda_star - 2.0 * state.gamma * np.asarray(p)
    if np.any(rad <= 0):
        raise DomainError(
            f"lambda - 2 gamma p <= 0 (lambda={state.lambda_star}, gamma={state.gamma})"
        )
    return np.sqrt(rad)


def laminar_height(state: LaminarState, p):
    """Laminar height function H(p) = 2 (p - p0) / (r(p) + r0)."""
    r = r_profile(state, p)
    return 2.0 * (p - state.p0) / (r + state.r0)


def hydraulic_head(params: FlowParams, lam: float) -> float:
    """Hydraulic head Q(lambda) of the laminar flow with parameter lambda."""
    _check_admissible(params, lam)
    return lam + 4.0 * params.g * abs(params.p0) / (
        np.sqrt(lam) + np.sqrt(lam - 2.0 * params.gamma * params.p0)
    )


def dispersion_function(params: FlowParams, lam):
    """Left-hand side of the dispersion relation; lambda_* is a zero of it."""
    lam = np.asarray(lam, dtype=float)
    sl = np.sqrt(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        return lam / (params.g - params.gamma * sl) + np.tanh(
            2.0 * params.p0 / (sl + np.sqrt(lam - 2.0 * params.p0 * params.gamma))
        )


def _dispersion_terms(params: FlowParams, lam: float) -> tuple[float, float]:
    sl = np.sqrt(lam)
    t1 = lam / (params.g - params.gamma * sl)
    t2 = np.tanh(2.0 * params.p0 / (sl + np.sqrt(lam - 2.0 * params.p0 * params.gamma)))
    return float(t1), float(t2)


def dispersion_residual(params: FlowParams, lam: float) -> float:
    """Relative residual |t1 + t2| / (|t1| + |t2|) of the dispersion relation."""
    t1, t2 = _dispersion_terms(params, lam)
    return abs(t1 + t2) / (abs(t1) + abs(t2))


def _bisect(f, a: float, b: float, fa: float, max_iter: int = 400) -> float:
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return a if abs(f(a)) <= abs(f(b)) else b


def _scan_roots(f, lo: float, hi: float, n: int, pole: float | None = None) -> list[float]:
    nodes = np.geomspace(lo, hi, n)
    vals = np.array([f(x) for x in nodes])
    roots = []
    for i in range(n - 1):
        a, b = nodes[i], nodes[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if pole is not None and a <= pole <= b:
            continue
        if fa == 0.0:
            roots.append(float(a))
        elif np.sign(fa) != np.sign(fb):
            roots.append(_bisect(f, float(a), float(b), float(fa)))
    return roots


def search_interval(params: FlowParams) -> tuple[float, float]:
    """Geometric scan interval for the dispersion root."""
    lo = params.lambda_min + SCAN_DELTA
    hi = 10.0 * (params.g**2 + abs(params.gamma * params.p0 * params.g))
    return lo, hi


def solve_dispersion(params: FlowParams, n_scan: int = SCAN_POINTS) -> LaminarState:
    """Smallest admissible root lambda_* of the dispersion relation.

    The interval (lambda_min, 10 (g^2 + |gamma p0 g|)] is scanned in geometric
    steps; each sign change not straddling the pole g = gamma sqrt(lambda) is
    bisected to machine precision.
    """
    g, gamma = params.g, params.gamma
    pole = (g / gamma) ** 2 if gamma > 0 else None

    def f(lam):
        return float(dispersion_function(params, lam))

    lo, hi = search_interval(params)
    roots = _scan_roots(f, lo, hi, n_scan, pole)
    if not roots:
        raise NoDispersionRootError(
            f"no sign change of the dispersion function on [{lo:.3g}, {hi:.3g}] "
            f"for gamma={gamma}, p0={params.p0}, g={g}"
        )
    good = [lam for lam in roots if abs(g - gamma * np.sqrt(lam)) >= POLE_REJECT * g]
    if not good:
        raise SingularDenominatorError(
            f"dispersion root {roots[0]!r} coincides with the pole g = gamma sqrt(lambda)"
        )
    lam = good[0]
    state = LaminarState.from_lambda(params, lam)
    return LaminarState(state.params, state.lambda_star, state.q_star, state.r0, tuple(good[1:]))


def solve_dispersion_irrotational(g: float, p0: float, n_scan: int = SCAN_POINTS) -> float:
    """Root of lambda + g tanh(p0 / sqrt(lambda)) = 0 (the gamma = 0 dispersion relation)."""

    def f(lam):
        return lam + g * np.tanh(p0 / np.sqrt(lam))

    roots = _scan_roots(f, SCAN_DELTA, 10.0 * g * g, n_scan)
    if not roots:
        raise NoDispersionRootError(f"no irrotational dispersion root for g={g}, p0={p0}")
    return roots[0]


def linear_wave_speed(gamma: float, k: float, d: float, u0: float = 0.0,
                      g: float = DEFAULT_G, branch: int = 1) -> float:
    """Linear wave speed in a flow of constant vorticity (surface current u0, mean depth d)."""
    if k <= 0 or d <= 0:
        raise ValueError("k and d must be positive")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    t = np.tanh(k * d)
    return float(
        u0 - gamma * t / (2.0 * k)
        + branch * np.sqrt(gamma**2 * t**2 + 4.0 * g * k * t) / (2.0 * k)
    )
