"""Selection of the amplitude b (residual-norm balancing) and of the auxiliary B~ (norm minimization)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ShearWaveError, UnreachableEpsilonError
from .expansion import Expansion, make_expansion
from .laminar import FlowParams, LaminarState, solve_dispersion
from .residuals import Grid, ResidualEvaluator

DEFAULT_EPSILON = 1e-3
B_TOL = 1e-10
STAGNATION_TOL = 1e-6
B_CEILING = 1.0
SCAN_LADDER = 40
NEWTON_STEPS = 3


@dataclass(frozen=True)
class CalibrationResult:
    gamma: float
    order: int
    b: float
    btilde: float
    achieved_eps: float
    binding_norm: str
    b_max_stagnation: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def stagnation_threshold(expansion: Expansion, grid: Grid = Grid(), tol: float = STAGNATION_TOL,
                         evaluator: ResidualEvaluator | None = None) -> float:
    """Largest b (to ``tol``) keeping min h_p > 0 on the grid; ``inf`` if none fails up to b = 1."""
    ev = evaluator or ResidualEvaluator(expansion, grid)
    btilde = expansion.btilde

    def ok(b):
        return ev.min_hp(b, btilde) > 0

    lo = 0.0
    for b in np.geomspace(1e-4, B_CEILING, SCAN_LADDER):
        if not ok(b):
            hi = float(b)
            break
        lo = float(b)
    else:
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def select_b(state: LaminarState, order: int, epsilon: float = DEFAULT_EPSILON,
             grid: Grid = Grid(), b_max: float | None = None) -> CalibrationResult:
    """Bisect for the b at which max(||H||, ||B0||) reaches epsilon.

    The first sign change on a geometric scan of (0, b_max] is bisected, so a
    non-monotone norm still yields a deterministic (smallest) root.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if order not in (1, 2):
        raise ValueError("select_b calibrates orders 1 and 2")
    ev = ResidualEvaluator(make_expansion(state, order), grid)
    if b_max is None:
        b_max = stagnation_threshold(make_expansion(state, order), grid, evaluator=ev)
    upper = min(b_max, B_CEILING)

    def excess(b):
        return ev.report(b).eps - epsilon

    lo, hi = 0.0, None
    for b in np.geomspace(upper * 1e-6, upper, SCAN_LADDER):
        if excess(b) >= 0:
            hi = float(b)
            break
        lo = float(b)
    if hi is None:
        raise UnreachableEpsilonError(epsilon, ev.report(upper).eps)
    while hi - lo > B_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        lo, hi = (mid, hi) if excess(mid) < 0 else (lo, mid)
    b = 0.5 * (lo + hi)
    rep = ev.report(b)
    return CalibrationResult(state.gamma, order, b, 0.0, rep.eps, rep.binding, b_max)


class BtildeObjective:
    """||H||^2 + ||B0||^2 of the order-3 expansion as a function of B~ at fixed b."""

    def __init__(self, state: LaminarState, b: float, grid: Grid = Grid()):
        self.state = state
        self.b = b
        exp0 = make_expansion(state, 3, b, 0.0)
        self.surface_free = exp0.coeffs3.btilde_surface_free
        # long double keeps rounding noise of this flat objective well below its gradient
        self._ev = ResidualEvaluator(exp0, grid, dtype=np.longdouble)

    def norms(self, btilde: float) -> tuple[float, float]:
        rep = self._ev.report(self.b, btilde)
        return rep.rms_interior, rep.rms_surface

    def __call__(self, btilde: float):
        mi, ms = self._ev.mean_squares(self.b, btilde)
        return mi + ms


def select_btilde(state: LaminarState, b: float, grid: Grid = Grid()) -> CalibrationResult:
    """Golden-section minimizer of ||H||^2 + ||B0||^2 over B~ at fixed b.

    The starting bracket is [0, B~_s] (B~_s removes the b^3 surface defect)
    widened symmetrically by half its length.  Golden section only resolves the
    flat minimum to about sqrt(machine eps), so a few Newton steps on a
    difference stencil polish it.
    """
    if b == 0:
        return CalibrationResult(state.gamma, 3, 0.0, 0.0, 0.0, "interior", math.inf)
    obj = BtildeObjective(state, b, grid)
    upper = obj.surface_free
    half = max(abs(upper), 1e-12)
    res = minimize_scalar(obj, bracket=(0.5 * upper - half, 0.5 * upper + half),
                          method="golden", tol=1e-10)
    bt = float(res.x)
    step = 1e-5 * half
    for _ in range(NEWTON_STEPS):
        fm, f0, fp = obj(bt - step), obj(bt), obj(bt + step)
        curv = fp - 2 * f0 + fm
        if not curv > 0:
            break
        bt = float(bt - 0.5 * step * (fp - fm) / curv)
    ri, rs = obj.norms(bt)
    return CalibrationResult(state.gamma, 3, b, bt, max(ri, rs),
                             "interior" if ri >= rs else "surface", math.nan)


def calibrate(state: LaminarState, order: int, epsilon: float = DEFAULT_EPSILON,
              grid: Grid = Grid()) -> CalibrationResult:
    """b from norm balancing (order 3 takes the order-2 b), then B~ for order 3."""
    res = select_b(state, min(order, 2), epsilon, grid)
    if order < 3:
        return res
    bt = select_btilde(state, res.b, grid)
    return CalibrationResult(state.gamma, 3, res.b, bt.btilde, bt.achieved_eps,
                             bt.binding_norm, res.b_max_stagnation)


def sweep(gammas, epsilon: float = DEFAULT_EPSILON, orders=(2,), p0: float = -2.0,
          g: float = 9.8, grid: Grid = Grid()) -> list[CalibrationResult]:
    """Calibrate every (gamma, order); failures are recorded, not raised."""
    out = []
    for gamma in gammas:
        for order in orders:
            try:
                state = solve_dispersion(FlowParams(float(gamma), p0, g))
                out.append(calibrate(state, order, epsilon, grid))
            except (ShearWaveError, ValueError) as exc:
                out.append(CalibrationResult(float(gamma), order, math.nan, math.nan, math.nan,
                                             "", math.nan, f"{type(exc).__name__}: {exc}"))
    return out
