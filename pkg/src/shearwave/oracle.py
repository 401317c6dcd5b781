"""Independent numerical checks of the closed-form expansion.

Nothing here trusts the closed-form coefficient formulas: forcing terms are
reconstructed by sampling the operators at several amplitudes and solving for
polynomial coefficients in b, and the resulting mode problems

    v'' - (n^2 / r^2) v - (3 gamma / r^2) v' = f_n,   v(p0) = 0,
    v'(0) - g / lambda^(3/2) v(0) = g_n

are solved by second-order finite differences on a uniform p grid.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConditioningWarning, ResonantModeError
from .expansion import (Expansion, Partials, combine_terms, evaluate_height, make_expansion,
                        modes_u, modes_w, term_partials)
from .laminar import FlowParams, LaminarState, dispersion_residual, solve_dispersion
from .residuals import fit_residual_order, interior_residual, residual_norms, surface_residual

CHEB_POINTS = 10
CHEB_RANGE = (1e-3, 5e-2)
PROJECTION_Q = 16
RESONANCE_TOL = 1e-2
VANDERMONDE_TOL = 1e-8


@dataclass(frozen=True)
class ModeBVP:
    mode: int
    forcing_samples: np.ndarray
    robin_rhs: float
    np: int

    def __post_init__(self):
        if len(self.forcing_samples) != self.np:
            raise ValueError("forcing samples must live on the np uniform p nodes")


def p_nodes(state: LaminarState, npts: int) -> np.ndarray:
    return np.linspace(state.p0, 0.0, npts)


def _robin_kappa(state: LaminarState) -> float:
    return state.g / state.lambda_star**1.5


def _assemble(state: LaminarState, n: int, npts: int, robin: bool):
    """Banded matrix for the unknowns v_1..v_N (v_0 = 0 at the bed)."""
    p = p_nodes(state, npts)
    dp = p[1] - p[0]
    r2 = state.lambda_star - 2 * state.gamma * p[1:]
    a = 3 * state.gamma / r2
    ab = np.zeros((3, npts - 1))
    ab[0, 1:] = 1 / dp**2 - a[:-1] / (2 * dp)
    ab[1, :] = -2 / dp**2 - n * n / r2
    ab[2, :-1] = 1 / dp**2 + a[1:] / (2 * dp)
    if robin:
        kappa = _robin_kappa(state)
        ab[1, -1] = -2 / dp**2 + 2 * kappa / dp - n * n / r2[-1] - a[-1] * kappa
        ab[2, -2] = 2 / dp**2
    return ab, p, dp, a


def _solve_dirichlet(state: LaminarState, n: int, f, top: float = 0.0) -> np.ndarray:
    """v with v(p0) = 0 and v(0) = top."""
    npts = len(f)
    ab, p, dp, a = _assemble(state, n, npts, robin=False)
    ab_in = ab[:, :-1].copy()
    ab_in[0, 0] = 0.0
    rhs = np.array(f[1:-1], dtype=float)
    rhs[-1] -= (1 / dp**2 - a[-2] / (2 * dp)) * top
    v = np.zeros(npts)
    v[1:-1] = solve_banded((1, 1), ab_in, rhs)
    v[-1] = top
    return v


def _one_sided_slope(v, dp) -> float:
    return float((3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dp))


def robin_functional(state: LaminarState, v, dp) -> float:
    """v'(0) - g/lambda^(3/2) v(0) with a second-order one-sided slope."""
    return _one_sided_slope(v, dp) - _robin_kappa(state) * float(v[-1])


def is_resonant(state: LaminarState, n: int, npts: int = 256) -> bool:
    """True when the homogeneous mode-n problem has a nontrivial solution."""
    phi = _solve_dirichlet(state, n, np.zeros(npts), top=1.0)
    dp = -state.p0 / (npts - 1)
    slope = _one_sided_slope(phi, dp)
    kappa = _robin_kappa(state)
    return abs(slope - kappa) < RESONANCE_TOL * (abs(slope) + kappa)


def solve_mode_bvp(state: LaminarState, bvp: ModeBVP) -> np.ndarray:
    """Centered finite differences; the Robin condition uses a ghost node at p = 0."""
    if bvp.np < 64:
        raise ValueError("mode solves need np >= 64")
    if is_resonant(state, bvp.mode):
        raise ResonantModeError(f"mode {bvp.mode} is resonant: the Robin problem is singular")
    ab, p, dp, a = _assemble(state, bvp.mode, bvp.np, robin=True)
    ab[0, 0] = 0.0
    ab[2, -1] = 0.0
    rhs = np.array(bvp.forcing_samples[1:], dtype=float)
    rhs[-1] += -2 * bvp.robin_rhs / dp + a[-1] * bvp.robin_rhs
    v = np.zeros(bvp.np)
    v[1:] = solve_banded((1, 1), ab, rhs)
    return v


# --- forcing reconstruction ---------------------------------------------------

def chebyshev_amplitudes(n: int = CHEB_POINTS, lo: float = CHEB_RANGE[0], hi: float = CHEB_RANGE[1]):
    k = np.arange(n)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * n))


def _operator_values(state: LaminarState, terms, b: float, operator: str):
    d = combine_terms(terms, b)
    if operator == "interior":
        return interior_residual(d, state.gamma)
    if operator == "surface":
        return surface_residual(d.h, d.h_q, d.h_p, state.q_star, state.g)
    raise ValueError(f"operator must be 'interior' or 'surface', got {operator!r}")


def b_polynomial(expansion: Expansion, operator: str, q, p, bs=None) -> np.ndarray:
    """Coefficients (powers 0..len(bs)-1) of the operator residual as a polynomial in b.

    For the surface operator p should be 0.  Returns an array of shape
    (len(bs),) + broadcast(q, p).shape.
    """
    bs = chebyshev_amplitudes() if bs is None else np.asarray(bs, dtype=float)
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    terms = term_partials(expansion, q, p)
    values = np.stack([_operator_values(expansion.state, terms, b, operator) for b in bs])
    scale = float(np.max(bs))
    t = bs / scale
    V = np.vander(t, len(bs), increasing=True)
    flat = values.reshape(len(bs), -1)
    coef = np.linalg.solve(V, flat)
    resid = np.max(np.abs(V @ coef - flat)) / max(np.max(np.abs(flat)), 1e-300)
    # LU is backward stable, so also bound the forward error through the condition number
    resid = max(resid, np.linalg.cond(V) * np.finfo(float).eps)
    if resid > VANDERMONDE_TOL:
        warnings.warn(f"Vandermonde solve residual {resid:.2e}", ConditioningWarning, stacklevel=2)
    coef /= scale ** np.arange(len(bs))[:, None]
    return coef.reshape(values.shape)


def extract_b_coefficient(expansion: Expansion, operator: str, target_power: int, q, p, bs=None):
    """Coefficient of b^target_power in the operator residual at (q, p)."""
    return b_polynomial(expansion, operator, q, p, bs)[target_power]


def _projection_q(nq: int = PROJECTION_Q) -> np.ndarray:
    return 2 * np.pi * np.arange(nq) / nq


def _cos_modes(values, q, modes):
    """Cosine coefficients along the last axis (uniform q nodes)."""
    out = {}
    for n in modes:
        w = np.cos(n * q) * (1 if n == 0 else 2) / len(q)
        out[n] = values @ w
    return out


def reconstructed_forcing(state: LaminarState, power: int, npts: int, modes):
    """Mode forcing {n: (f_n(p) on nodes, g_n)} at order ``power`` from the order power-1 expansion.

    f_n = -[cos nq part of the b^power coefficient of H[h]]; g_n = [same for B0] / (2 sqrt(lambda)).
    """
    exp = make_expansion(state, power - 1)
    q = _projection_q()
    p = p_nodes(state, npts)
    F = extract_b_coefficient(exp, "interior", power, q[None, :], p[:, None])
    G = extract_b_coefficient(exp, "surface", power, q, 0.0)
    fm = _cos_modes(F, q, modes)
    gm = _cos_modes(G, q, modes)
    return {n: (-fm[n], float(gm[n]) / (2 * state.sqrt_lam)) for n in modes}


def second_order_forcing(state: LaminarState, p, printed: bool = False):
    """(f0(p), f2(p), g0, g2) of the second-order mode problems in closed form.

    With ``printed`` the formulas are returned exactly as typeset, where f0 is
    four times too large and g0, g2 lack a factor 1/(2 sqrt(lambda)).
    """
    G, L, g, r0 = state.gamma, state.lambda_star, state.g, state.r0
    sl = state.sqrt_lam
    p = np.asarray(p, dtype=float)
    r = np.sqrt(L - 2 * G * p)
    H = 2 * (p - state.p0) / (r + r0)
    c, s = np.cosh(2 * H), -np.sinh(2 * H)  # arguments 2 (r - r0)/gamma = -2 H
    f0 = -r0**2 / r**7 * (3 * G**3 - 3 * G * (G * G + 2 * r * r) * c + 2 * r * (3 * G * G + 2 * r * r) * s)
    f2 = -G / 4 * r0**2 / r**7 * (3 * G * G - 2 * r * r - (3 * G * G + 4 * r * r) * c + 6 * G * r * s)
    S = g * g - L * L - G * sl * (2 * g - G * sl)
    g0 = r0**2 / (2 * L) * (3 * g * g + L * L) / S
    g2 = r0**2 / (2 * L) * (3 * g * g - L * L) / S
    if printed:
        return f0, f2, g0, g2
    return f0 / 4, f2, g0 / (2 * sl), g2 / (2 * sl)


# --- certification runs -------------------------------------------------------

def second_order_mode_errors(state: LaminarState, npts: int, relative: bool = False) -> dict[int, float]:
    """max |FD solve - closed form| for the n = 0 and n = 2 second-order modes.

    With ``relative`` the error is divided by max |closed form|.
    """
    forcing = reconstructed_forcing(state, 2, npts, (0, 2))
    exp = make_expansion(state, 2)
    u0, u2 = modes_u(state, exp.coeffs2, p_nodes(state, npts))
    closed = {0: u0[0], 2: u2[0]}
    out = {}
    for n, (f, gn) in forcing.items():
        v = solve_mode_bvp(state, ModeBVP(n, f, gn, npts))
        err = float(np.max(np.abs(v - closed[n])))
        out[n] = err / float(np.max(np.abs(closed[n]))) if relative else err
    return out


@dataclass(frozen=True)
class ThirdOrderCheck:
    n3_error: float
    n1_particular_error: float
    defect: float
    expected_defect: float
    defect_slope: float
    expected_slope: float


def _auxiliary_direction(state: LaminarState, p):
    r = np.sqrt(state.lambda_star - 2 * state.gamma * p)
    H = 2 * (p - state.p0) / (r + state.r0)
    return -state.r0**2 * H / r


def measure_solvability_defect(state: LaminarState, npts: int = 2048, btilde: float = 0.0,
                               forcing=None) -> float:
    """cos q b^3 coefficient of B0 left by the interior-only n = 1 solve plus B~ times the auxiliary mode.

    At B~ = 0 this is -B~0.  The particular solution uses v(0) = 0 in place of
    the Robin condition; any multiple of the homogeneous solution m leaves the
    Robin functional unchanged.
    """
    forcing = forcing or reconstructed_forcing(state, 3, npts, (1,))
    f1, g1 = forcing[1]
    v = _solve_dirichlet(state, 1, f1) + btilde * _auxiliary_direction(state, p_nodes(state, npts))
    dp = -state.p0 / (npts - 1)
    return -2 * state.sqrt_lam * (robin_functional(state, v, dp) - g1)


def third_order_check(state: LaminarState, npts: int = 2048, coeffs3=None) -> ThirdOrderCheck:
    exp = make_expansion(state, 3)
    c3 = coeffs3 or exp.coeffs3
    p = p_nodes(state, npts)
    forcing = reconstructed_forcing(state, 3, npts, (1, 3))
    f3, g3 = forcing[3]
    v3 = solve_mode_bvp(state, ModeBVP(3, f3, g3, npts))
    w1, w3 = modes_w(state, c3, p)
    n3_err = float(np.max(np.abs(v3 - w3[0])))
    v1 = _solve_dirichlet(state, 1, forcing[1][0])
    m = np.sinh(2 * (p - state.p0) / (np.sqrt(state.lambda_star - 2 * state.gamma * p) + state.r0))
    m = m * state.r0 / np.sqrt(state.lambda_star - 2 * state.gamma * p)
    c = (w1[0][-1] - v1[-1]) / m[-1]
    n1_err = float(np.max(np.abs(w1[0] - v1 - c * m)))
    d0 = measure_solvability_defect(state, npts, 0.0, forcing)
    d1 = measure_solvability_defect(state, npts, 1.0, forcing)
    return ThirdOrderCheck(n3_err, n1_err, d0, -c3.btilde0, d1 - d0, c3.btilde_gain)


def finite_difference_partials(expansion: Expansion, q, p, step: float = 1e-5,
                               dtype=np.longdouble) -> Partials:
    """Second-order stencils for the partials, evaluated in ``dtype``.

    Extended precision keeps rounding well below the O(step^2) truncation
    error.  Points closer than two steps to an edge of [p0, 0] use one-sided
    p stencils.
    """
    q = np.asarray(q, dtype=dtype)
    p = np.asarray(p, dtype=dtype)
    hs = dtype(step)
    p0 = dtype(expansion.state.p0)

    def h(dq, dp):
        return evaluate_height(expansion, q + dq * hs, p + dp * hs)

    near_bed = p - p0 < 2 * hs
    near_top = -p < 2 * hs
    s = np.where(near_bed, 1, np.where(near_top, -1, 0))
    c = h(0, 0)
    hq = (h(1, 0) - h(-1, 0)) / (2 * hs)
    hqq = (h(1, 0) - 2 * c + h(-1, 0)) / hs**2
    central_p = (h(0, 1) - h(0, -1)) / (2 * hs)
    central_pp = (h(0, 1) - 2 * c + h(0, -1)) / hs**2
    central_qp = (h(1, 1) - h(1, -1) - h(-1, 1) + h(-1, -1)) / (4 * hs * hs)
    if np.any(s != 0):
        sp = np.where(s == 0, 1, s)

        def hs_(dq, k):
            return evaluate_height(expansion, q + dq * hs, p + sp * k * hs)

        one_p = sp * (-3 * c + 4 * hs_(0, 1) - hs_(0, 2)) / (2 * hs)
        one_pp = (2 * c - 5 * hs_(0, 1) + 4 * hs_(0, 2) - hs_(0, 3)) / hs**2
        one_qp = sp * ((-3 * hs_(1, 0) + 4 * hs_(1, 1) - hs_(1, 2))
                       - (-3 * hs_(-1, 0) + 4 * hs_(-1, 1) - hs_(-1, 2))) / (4 * hs * hs)
        central_p = np.where(s == 0, central_p, one_p)
        central_pp = np.where(s == 0, central_pp, one_pp)
        central_qp = np.where(s == 0, central_qp, one_qp)
    return Partials(c, hq, central_p, hqq, central_qp, central_pp)


def partials_relative_error(expansion: Expansion, q, p, step: float = 1e-5, dtype=np.longdouble) -> float:
    """max over the six partials of max|fd - analytic| / max|analytic|."""
    exact = evaluate_height(expansion, np.asarray(q, dtype=dtype), np.asarray(p, dtype=dtype),
                            derivatives=True, warn=False)
    fd = finite_difference_partials(expansion, q, p, step, dtype)
    worst = 0.0
    for a, b in zip(exact, fd):
        scale = float(np.max(np.abs(a)))
        if scale > 0:
            worst = max(worst, float(np.max(np.abs(b - a))) / scale)
    return worst


# --- verification battery -----------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def add(self, name, value, tolerance, passed, detail=""):
        self.checks.append(Check(name, float(value), float(tolerance), bool(passed), detail))


def run_verification(gammas=(-1.5, 0.0, 1.5), p0: float = -2.0, g: float = 9.8,
                     coeff_hook: Callable | None = None, fd_points: int = 4096,
                     seed: int = 0) -> VerificationReport:
    """Battery of oracle checks.  ``coeff_hook`` maps ThirdOrderCoeffs to a (corrupted) copy."""
    rep = VerificationReport()
    rng = np.random.default_rng(seed)
    for gamma in gammas:
        st = solve_dispersion(FlowParams(gamma, p0, g))
        tag = f"gamma={gamma:g}"
        rep.add(f"dispersion residual {tag}", dispersion_residual(st.params, st.lambda_star), 1e-12,
                dispersion_residual(st.params, st.lambda_star) <= 1e-12)
        lam = residual_norms(make_expansion(st, 1, 0.0))
        worst = max(lam.max_interior, lam.max_surface, lam.max_bed)
        rep.add(f"laminar residual {tag}", worst, 1e-10, worst <= 1e-10)
        for order, want, tol in ((1, 2.0, 0.1), (2, 3.0, 0.1), (3, 4.0, 0.15)):
            exp = make_expansion(st, order)
            if order == 3 and coeff_hook is not None:
                exp = replace(exp, coeffs3=coeff_hook(exp.coeffs3))
            slope = fit_residual_order(exp)["interior"].slope
            rep.add(f"interior order slope m={order} {tag}", slope, tol, abs(slope - want) <= tol,
                    f"expected {want}")
        e_fine = second_order_mode_errors(st, fd_points, relative=True)
        e_coarse = second_order_mode_errors(st, fd_points // 2, relative=True)
        for n in (0, 2):
            rep.add(f"second-order mode n={n} relative FD error {tag}", e_fine[n], 1e-6, e_fine[n] <= 1e-6)
            ratio = e_coarse[n] / e_fine[n]
            rep.add(f"second-order mode n={n} convergence ratio {tag}", ratio, 0.3, abs(ratio - 4) <= 0.3)
        pts = rng.uniform(p0, 0.0, 50)
        qs = rng.uniform(-np.pi, np.pi, 50)
        extracted = -extract_b_coefficient(make_expansion(st, 1), "interior", 2, qs, pts)
        f0, f2, _, _ = second_order_forcing(st, pts)
        rel = float(np.max(np.abs(extracted - (f0 + f2 * np.cos(2 * qs)))) / np.max(np.abs(extracted)))
        rep.add(f"second-order forcing closed form {tag}", rel, 1e-8, rel <= 1e-8)
        c3 = make_expansion(st, 3).coeffs3
        if coeff_hook is not None:
            c3 = coeff_hook(c3)
        chk = third_order_check(st, 2 * fd_points, c3)
        rep.add(f"third-order mode n=3 FD error {tag}", chk.n3_error, 1e-5, chk.n3_error <= 1e-5)
        rep.add(f"third-order mode n=1 FD error {tag}", chk.n1_particular_error, 1e-5,
                chk.n1_particular_error <= 1e-5)
        rel = abs(chk.defect - chk.expected_defect) / abs(chk.expected_defect)
        rep.add(f"solvability defect vs -B~0 {tag}", rel, 1e-2, rel <= 1e-2)
        q = rng.uniform(-np.pi, np.pi, 100)
        p = rng.uniform(p0, 0.0, 100)
        err = partials_relative_error(make_expansion(st, 3, 0.05, 1.0), q, p)
        rep.add(f"analytic vs FD partials {tag}", err, 1e-6, err <= 1e-6)
    return rep
