"""Closed-form expansion terms of the height function and their partial derivatives.

The approximate height function is

    h(q, p; b) = H(p) + b m(q, p) + b^2 u(q, p) + b^3 w(q, p)

truncated at the requested order.  Every term is a finite cosine sum in q, so
the evaluation works mode by mode: each radial coefficient is carried as a
triple ``(f, f_p, f_pp)`` assembled from the closed-form derivatives of its
building blocks (powers of r(p), sinh/cosh of multiples of H(p)) using
dr/dp = -gamma/r and dH/dp = 1/r.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import SingularCoefficientError, StagnationWarning
from .laminar import LaminarState

# below this |gamma| the irrotational closed forms are used
IRROTATIONAL_CUTOFF = 1e-8


# --- radial triples (value, d/dp, d2/dp2) -------------------------------------

def _mul(a, b):
    return (a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2])


def _scale(c, a):
    return (c * a[0], c * a[1], c * a[2])


def _add(*terms):
    return tuple(sum(t[i] for t in terms) for i in range(3))


def _rpow(r, gamma, k):
    return (r**k, -k * gamma * r ** (k - 2), k * (k - 2) * gamma**2 * r ** (k - 4))


def _height(H, r, gamma):
    return (H, 1.0 / r, gamma / r**3)


def _sinh(k, H, r, gamma):
    s, c = np.sinh(k * H), np.cosh(k * H)
    return (s, k * c / r, k * k * s / r**2 + k * gamma * c / r**3)


def _cosh(k, H, r, gamma):
    s, c = np.sinh(k * H), np.cosh(k * H)
    return (c, k * s / r, k * k * c / r**2 + k * gamma * s / r**3)


def _const(value, like):
    z = np.zeros_like(like)
    return (z + value, z, z)


# --- coefficient containers ---------------------------------------------------

@dataclass(frozen=True)
class SecondOrderCoeffs:
    c0: float
    c2: float
    a0_irr: float
    a2_irr: float


@dataclass(frozen=True)
class ThirdOrderCoeffs:
    """Third-order constants.

    ``btilde0`` is the surface solvability defect, obtained by projecting the
    b^3 coefficient of B0[h] at p = 0 onto cos q.  The value given by the
    printed closed form (D and c_0..c_5) is kept as ``btilde0_printed``.
    ``d1``/``d2`` are the irrotational cos 3q constants consistent with the
    rotational tables; ``d1_printed``/``d2_printed`` hold the printed values.
    ``beta`` replaces the (b_{1,3}, b_{1,4}) pair, which is singular at gamma = 0:
    (b_{1,3} r^3 + b_{1,4} r^4)/r^5 = -beta H/r^2.  ``e1`` is the gamma -> 0 limit
    of the sinh(H) cos q coefficient, a free homogeneous multiple that the
    irrotational formula omits.
    """

    a_table: np.ndarray
    b_table: np.ndarray
    btilde0: float
    d_factor: float
    c_poly: tuple
    b1: float
    b2: float
    d1: float
    d2: float
    b0: float
    e1: float
    beta: float
    btilde_gain: float
    btilde0_printed: float
    d1_printed: float
    d2_printed: float

    @property
    def btilde_surface_free(self) -> float:
        """The B~ that removes the b^3 surface defect."""
        return self.btilde0 / self.btilde_gain


def _nonzero(name, value, scale):
    if not np.isfinite(value) or abs(value) <= 1e-12 * max(abs(scale), 1e-300):
        raise SingularCoefficientError(name, float(value))
    return value


def _is_irrotational(state: LaminarState) -> bool:
    return abs(state.gamma) < IRROTATIONAL_CUTOFF


def second_order_coeffs(state: LaminarState) -> SecondOrderCoeffs:
    g, G, L, r0 = state.g, state.gamma, state.lambda_star, state.r0
    p0, sl = state.p0, state.sqrt_lam
    den_s = _nonzero("(g - gamma sqrt(lambda))^2 - lambda^2",
                     (g - G * sl) ** 2 - L**2, (g - G * sl) ** 2 + L**2)
    den_c = _nonzero("2 g p0 + lambda r0 + sqrt(lambda) r0^2",
                     2 * g * p0 + L * r0 + sl * r0**2, abs(2 * g * p0) + L * r0 + sl * r0**2)
    c0 = sl * (3 * g * (g - G * sl) + L * (G**2 - L)) * (r0 + sl) / (4 * den_s * den_c)
    c2 = (3 * g * (g - G * sl) + L * (G**2 - 3 * L)) / (8 * L**2.5)
    den_i = _nonzero("g^2 - lambda^2", g * g - L * L, g * g + L * L)
    den_f = _nonzero("g p0 + lambda^(3/2)", g * p0 + L**1.5, abs(g * p0) + L**1.5)
    a0 = L / 4 * (3 * g * g - L * L) / den_i / den_f
    a2 = (3 * g * g - L * L) / (8 * L * L)
    return SecondOrderCoeffs(float(c0), float(c2), float(a0), float(a2))


def _third_order_tables(state: LaminarState):
    g, G, L, r0 = state.g, state.gamma, state.lambda_star, state.r0
    sl, H0 = state.sqrt_lam, state.surface_height
    K = 3 * g * g - 3 * g * G * sl + (G * G - 3 * L) * L
    T = 3 * g * g - 3 * g * G * sl + (G * G - L) * L
    S = _nonzero("g^2 - 2 g gamma sqrt(lambda) + (gamma^2 - lambda) lambda",
                 g * g - 2 * g * G * sl + (G * G - L) * L, g * g + L * L)
    # gamma * (sqrt(lambda) r0 - g H0) = g sqrt(lambda) - r0 (g - gamma sqrt(lambda))
    den_a = _nonzero("sqrt(lambda) r0 - g H(0)", sl * r0 - g * H0, sl * r0 + g * H0)
    P = (-3 * g**3 - 15 * g * g * G * sl - 5 * G * (G * G - L) * L**1.5
         + 3 * g * L * (5 * G * G + L))
    N = -21 * g * g * L + 18 * g * G * L**1.5 - 5 * G * G * L * L + 5 * L**3 + H0 * P
    r03 = r0**3
    kk = K / (32 * L**2.5)
    _nonzero("g - gamma sqrt(lambda)", g - G * sl, g)

    a = np.zeros((4, 5))
    b = np.zeros((4, 5))
    a[0, 0] = -9 / 32 * G * G * r03
    a[0, 2] = -r03 * N / (32 * den_a * S)
    a[0, 3] = -r03 * kk
    b[0, 1] = -9 * G * r03 / 32
    b[0, 2] = -G * r03 * kk
    beta = r03 * sl * T / (4 * (g * H0 - r0 * sl) * S)
    if _is_irrotational(state):
        b[0, 3] = b[0, 4] = np.nan
    else:
        den1 = g * r0 - (g + G * r0) * sl
        b[0, 3] = -r0**4 * sl * T / (4 * den1 * S)
        b[0, 4] = r03 * sl * T / (4 * den1 * (g - G * sl - L) * (g - G * sl + L))
    a[1, 0] = 3 / 32 * G * G * r03
    a[1, 2] = 9 * r03 / 32
    a[1, 3] = 3 * r03 * kk
    b[1, 1] = 9 / 32 * G * r03
    b[1, 2] = G * r03 * kk
    a[2, 0] = -3 / 32 * G * G * r03
    a[2, 2] = -r03 / 32
    a[2, 3] = -r03 * kk
    b[2, 1] = -3 * G * r03 / 32
    b[2, 2] = -G * r03 * kk
    a[3, 0] = 1 / 32 * G * G * r03
    a[3, 2] = 3 * r03 / 32
    a[3, 3] = 3 * r03 * kk
    a[3, 4] = r03 * (
        9 * g**5 - 27 * g**4 * G * sl + 11 * g**3 * (3 * G * G - 2 * L) * L
        - g * g * G * (21 * G * G - 50 * L) * L**1.5
        + g * L * L * (7 * G**4 - 35 * G * G * L + 13 * L * L)
        - G * L**2.5 * (G**4 - 9 * G * G * L + 15 * L * L)
    ) / (64 * (g - G * sl) * L**5)
    b[3, 1] = 3 / 32 * G * r03
    b[3, 2] = G * r03 * kk
    return a, b, float(beta), float(S)


def _printed_btilde0(state: LaminarState, S: float):
    g, G, L, r0, p0 = state.g, state.gamma, state.lambda_star, state.r0, state.p0
    sl = state.sqrt_lam
    den = _nonzero("2 g p0 + r0 sqrt(lambda) (r0 + sqrt(lambda))",
                   2 * g * p0 + r0 * sl * (r0 + sl), abs(2 * g * p0) + r0 * sl * (r0 + sl))
    D = -(r0 + sl) / (4 * L**3.5 * den)
    c = (
        3 * g * sl * (9 * g**4 - 14 * g * g * L * L + 5 * L**4)
        - 4 * g * sl * r0 * (9 * g**4 - 9 * g * g * L * L + 4 * L**4)
        - 2 * p0 / (sl + r0) * (9 * g**6 - 12 * g**4 * L * L + 13 * g * g * L**4 - 2 * L**6),
        -L**1.5 * (33 * g**4 - 39 * g * g * L * L + 4 * L**4)
        - r0 * (-60 * g**4 * L + 45 * g * g * L**3 - 7 * L**5),
        -3 * (-7 * g**3 * L * L + 5 * g * L**4 + 2 * g * r0 * L**1.5 * (9 * g * g - 4 * L * L)),
        -L**2.5 * (7 * g * g - 2 * L * L) - r0 * (-28 * g * g * L * L + 5 * L**4),
        -8 * g * r0 * L**2.5 + g * L**3,
        r0 * L**3,
    )
    poly = sum(cn * G**n for n, cn in enumerate(c))
    return float(D), tuple(float(x) for x in c), float(D * poly / S)


def _irrotational_constants(state: LaminarState):
    g, L, p0 = state.g, state.lambda_star, state.p0
    sl = state.sqrt_lam
    H0 = -p0 / sl
    den_i = _nonzero("g^2 - lambda^2", g * g - L * L, g * g + L * L)
    den_f = _nonzero("g p0 + lambda^(3/2)", g * p0 + L**1.5, abs(g * p0) + L**1.5)
    b1 = L / 4 * (3 * g * g - L * L) / den_i / den_f
    b2 = 9 * g * g / (32 * L * L)
    d1 = -(3 * g * g - 2 * L * L) / (32 * L * L)
    d2 = (9 * g**4 - 4 * g * g * L * L + L**4) / (64 * L**4)
    n0 = -21 * g * g * L + 5 * L**3 - 3 * g * H0 * den_i
    e1 = -n0 / (32 * (L - g * H0) * den_i) - 3 * den_i / (32 * L * L)
    b0 = (L * p0 * (3 * g * g - L * L) ** 2 / den_f - g * (3 * g * g + L * L) ** 2 / (2 * L)) / (
        2 * L * abs(den_i) ** 1.5
    ) if den_i > 0 else np.nan
    d1p = -(3 * g * g - L * L) / (32 * L * L)
    d2p = 9 * g * g / (32 * L * L) + (3 * g * g - L * L) / (32 * L * L)
    return dict(b1=b1, b2=b2, d1=d1, d2=d2, e1=e1, b0=b0, d1_printed=d1p, d2_printed=d2p)


def btilde_gain(state: LaminarState) -> float:
    """Coefficient of B~ in the cos q b^3 part of the surface residual."""
    g, L, r0, p0, sl = state.g, state.lambda_star, state.r0, state.p0, state.sqrt_lam
    return float(2 * r0**2 * (2 * g * p0 + r0 * sl * (r0 + sl)) / (L**1.5 * (r0 + sl)))


def third_order_coeffs(state: LaminarState, coeffs2: SecondOrderCoeffs | None = None) -> ThirdOrderCoeffs:
    coeffs2 = coeffs2 or second_order_coeffs(state)
    a, b, beta, S = _third_order_tables(state)
    D, c, bt0_printed = _printed_btilde0(state, S)
    irr = _irrotational_constants(state) if _valid_irrotational(state) else dict.fromkeys(
        ("b1", "b2", "d1", "d2", "e1", "b0", "d1_printed", "d2_printed"), np.nan)
    partial = ThirdOrderCoeffs(
        a_table=a, b_table=b, btilde0=np.nan, d_factor=D, c_poly=c,
        b1=irr["b1"], b2=irr["b2"], d1=irr["d1"], d2=irr["d2"], b0=irr["b0"], e1=irr["e1"],
        beta=beta, btilde_gain=btilde_gain(state), btilde0_printed=bt0_printed,
        d1_printed=irr["d1_printed"], d2_printed=irr["d2_printed"],
    )
    a.setflags(write=False)
    b.setflags(write=False)
    bt0 = -surface_cos_q_b3(state, coeffs2, partial)
    return replace(partial, btilde0=float(bt0))


def _valid_irrotational(state: LaminarState) -> bool:
    L, g, p0 = state.lambda_star, state.g, state.p0
    return abs(g * g - L * L) > 1e-12 * (g * g + L * L) and abs(g * p0 + L**1.5) > 1e-12 * L**1.5


# --- radial mode functions ----------------------------------------------------

def _laminar_triples(state: LaminarState, p):
    p = np.asarray(p)
    if p.dtype.kind in "iu":
        p = p.astype(float)
    G = state.gamma
    if _is_irrotational(state):
        r = np.full_like(p, state.sqrt_lam)
        H = (p - state.p0) / state.sqrt_lam
        G = 0.0
    else:
        r = np.sqrt(state.lambda_star - 2.0 * G * p)
        H = 2.0 * (p - state.p0) / (r + state.r0)
    return r, H, G


def mode_m(state: LaminarState, p):
    """Radial factor M(p) of the first-order term m = M(p) cos q."""
    r, H, G = _laminar_triples(state, p)
    if G == 0.0:
        return _sinh(1, H, r, 0.0)
    return _scale(state.r0, _mul(_rpow(r, G, -1), _sinh(1, H, r, G)))


def modes_u(state: LaminarState, coeffs2: SecondOrderCoeffs, p):
    """Radial factors (U0, U2) of the second-order term u = U0 + U2 cos 2q."""
    r, H, G = _laminar_triples(state, p)
    if G == 0.0:
        sl = state.sqrt_lam
        s2 = _sinh(2, H, r, 0.0)
        u0 = _add(_scale(0.25, s2), _scale(coeffs2.a0_irr * sl, _height(H, r, 0.0)))
        u2 = _scale(coeffs2.a2_irr, s2)
        return u0, u2
    r02 = state.r0**2
    s2 = _sinh(2, H, r, G)
    c2 = _cosh(2, H, r, G)
    one_minus = _add(_const(1.0, H), _scale(-1.0, c2))
    shared = _add(_scale(-G / 8, _mul(one_minus, _rpow(r, G, -3))),
                  _scale(0.25, _mul(s2, _rpow(r, G, -2))))
    u0 = _scale(r02, _add(_scale(coeffs2.c0, _mul(_height(H, r, G), _rpow(r, G, -1))), shared))
    u2 = _scale(r02, _add(_scale(coeffs2.c2, _mul(s2, _rpow(r, G, -1))), shared))
    return u0, u2


def _poly_over_r5(row, r, G, skip=()):
    terms = [_scale(row[n], _rpow(r, G, n - 5)) for n in range(5) if n not in skip and row[n] != 0.0]
    return _add(*terms) if terms else _const(0.0, r)


def modes_w(state: LaminarState, coeffs3: ThirdOrderCoeffs, p, btilde: float = 0.0):
    """Radial factors (W1, W3) of the third-order term w = W1 cos q + W3 cos 3q.

    W1 includes the auxiliary contribution -B~ r0^2 H(p)/r(p).
    """
    r, H, G = _laminar_triples(state, p)
    hh = _height(H, r, G)
    if G == 0.0:
        sl = state.sqrt_lam
        s1, s3, c1 = _sinh(1, H, r, 0.0), _sinh(3, H, r, 0.0), _cosh(1, H, r, 0.0)
        w1 = _add(_scale(coeffs3.b1 * sl, _mul(hh, c1)), _scale(coeffs3.b2, s3),
                  _scale(coeffs3.e1, s1), _scale(-btilde * sl, hh))
        w3 = _add(_scale(coeffs3.d1, s1), _scale(coeffs3.d2, s3))
        return w1, w3
    A, B = coeffs3.a_table, coeffs3.b_table
    s1, s3 = _sinh(1, H, r, G), _sinh(3, H, r, G)
    c1, c3 = _cosh(1, H, r, G), _cosh(3, H, r, G)
    rinv2 = _rpow(r, G, -2)
    b1_fun = _add(_poly_over_r5(B[0], r, G, skip=(3, 4)), _scale(-coeffs3.beta, _mul(hh, rinv2)))
    w1 = _add(
        _mul(_poly_over_r5(A[0], r, G), s1),
        _mul(_poly_over_r5(A[1], r, G), s3),
        _mul(b1_fun, c1),
        _mul(_poly_over_r5(B[1], r, G), c3),
        _scale(-btilde * state.r0**2, _mul(hh, _rpow(r, G, -1))),
    )
    w3 = _add(
        _mul(_poly_over_r5(A[2], r, G), s1),
        _mul(_poly_over_r5(A[3], r, G), s3),
        _mul(_poly_over_r5(B[2], r, G), c1),
        _mul(_poly_over_r5(B[3], r, G), c3),
    )
    return w1, w3


def surface_cos_q_b3(state: LaminarState, coeffs2: SecondOrderCoeffs,
                     coeffs3: ThirdOrderCoeffs, btilde: float = 0.0) -> float:
    """cos q coefficient of the b^3 term of B0[h] (order-3 expansion, Q = Q*).

    Exact projection of the products of cosine modes at p = 0.
    """
    g, Q = state.g, state.q_star
    p = np.array([0.0])
    r, H, _ = _laminar_triples(state, p)
    Hp = 1.0 / r[0]
    a0 = 2 * g * H[0] - Q
    M, Mp, _ = (x[0] for x in mode_m(state, p))
    (U0, U0p, _), (U2, U2p, _) = ((x[0] for x in t) for t in modes_u(state, coeffs2, p))
    W1, W1p, _ = (x[0] for x in modes_w(state, coeffs3, p, btilde)[0])
    up_mean = U0p + 0.5 * U2p
    total = (
        2 * M * U2
        + a0 * (2 * Hp * W1p + 2 * Mp * up_mean)
        + 2 * g * M * (0.75 * Mp * Mp + 2 * Hp * up_mean)
        + 4 * g * Hp * Mp * (U0 + 0.5 * U2)
        + 2 * g * W1 * Hp * Hp
    )
    return float(total)


# --- the expansion ------------------------------------------------------------

class Partials(NamedTuple):
    h: np.ndarray
    h_q: np.ndarray
    h_p: np.ndarray
    h_qq: np.ndarray
    h_qp: np.ndarray
    h_pp: np.ndarray


@dataclass(frozen=True)
class Expansion:
    """An order-m approximation h = H + b m + b^2 u + b^3 w (order in {1, 2, 3})."""

    state: LaminarState
    order: int
    b: float = 0.0
    btilde: float = 0.0
    coeffs2: SecondOrderCoeffs | None = None
    coeffs3: ThirdOrderCoeffs | None = None

    def with_amplitude(self, b: float, btilde: float | None = None) -> "Expansion":
        return replace(self, b=float(b), btilde=self.btilde if btilde is None else float(btilde))

    def with_order(self, order: int) -> "Expansion":
        return make_expansion(self.state, order, self.b, self.btilde)

    def term_modes(self, p):
        """{k: {n: (c, c', c'')}}: the radial modes of the b^k term (b excluded)."""
        st = self.state
        r, H, G = _laminar_triples(st, p)
        terms = {0: {0: _height(H, r, G)}, 1: {1: mode_m(st, p)}}
        if self.order >= 2:
            u0, u2 = modes_u(st, self.coeffs2, p)
            terms[2] = {0: u0, 2: u2}
        if self.order >= 3:
            w1, w3 = modes_w(st, self.coeffs3, p, self.btilde)
            terms[3] = {1: w1, 3: w3}
        return terms

    def radial_modes(self, p):
        """{n: (c_n, c_n', c_n'')} such that h = sum_n c_n(p) cos(n q)."""
        modes = {}
        for k, term in self.term_modes(p).items():
            for n, c in term.items():
                c = _scale(self.b**k, c)
                modes[n] = _add(modes[n], c) if n in modes else c
        return modes

    def __call__(self, q, p):
        return evaluate_height(self, q, p)


def make_expansion(state: LaminarState, order: int, b: float = 0.0, btilde: float = 0.0) -> Expansion:
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    if b < 0:
        raise ValueError("amplitude b must be nonnegative")
    c2 = second_order_coeffs(state) if order >= 2 else None
    c3 = third_order_coeffs(state, c2) if order >= 3 else None
    return Expansion(state, order, float(b), float(btilde), c2, c3)


def first_order_term(state: LaminarState, q, p):
    return mode_m(state, p)[0] * np.cos(q)


def second_order_term(expansion: Expansion, q, p):
    u0, u2 = modes_u(expansion.state, expansion.coeffs2, p)
    return u0[0] + u2[0] * np.cos(2 * np.asarray(q))


def third_order_term(expansion: Expansion, q, p):
    w1, w3 = modes_w(expansion.state, expansion.coeffs3, p, expansion.btilde)
    q = np.asarray(q)
    return w1[0] * np.cos(q) + w3[0] * np.cos(3 * q)


def _partials_from_modes(modes, q, p) -> Partials:
    h = np.zeros(np.broadcast(q, p).shape, dtype=np.result_type(q, p, float))
    hq, hp, hqq, hqp, hpp = (np.zeros_like(h) for _ in range(5))
    for n, (c, cp, cpp) in modes.items():
        cs, sn = np.cos(n * q), np.sin(n * q)
        h = h + c * cs
        hp = hp + cp * cs
        hpp = hpp + cpp * cs
        hq = hq - n * c * sn
        hqq = hqq - n * n * c * cs
        hqp = hqp - n * cp * sn
    return Partials(h, hq, hp, hqq, hqp, hpp)


def evaluate_height(expansion: Expansion, q, p, derivatives: bool = False, warn: bool = True):
    """h(q, p), or all partials through second order when ``derivatives`` is true."""
    q, p = np.broadcast_arrays(np.asarray(q), np.asarray(p))
    modes = expansion.radial_modes(p)
    if not derivatives:
        return sum(c[0] * np.cos(n * q) for n, c in modes.items())
    d = _partials_from_modes(modes, q, p)
    if warn and np.any(d.h_p <= 0):
        warnings.warn("h_p <= 0: stagnation in the evaluated region", StagnationWarning, stacklevel=2)
    return d


def term_partials(expansion: Expansion, q, p) -> dict[int, Partials]:
    """Partials of each b^k term separately, so h = sum_k b^k term_k."""
    q, p = np.broadcast_arrays(np.asarray(q), np.asarray(p))
    return {k: _partials_from_modes(m, q, p) for k, m in expansion.term_modes(p).items()}


def combine_terms(terms: dict[int, Partials], b: float) -> Partials:
    return Partials(*(sum(b**k * t[i] for k, t in terms.items()) for i in range(6)))
