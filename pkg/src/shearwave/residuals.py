"""Governing operators of the height-function problem and residual diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError
from .expansion import Expansion, Partials, combine_terms, evaluate_height, term_partials

B_LADDER = (1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2)
UNDERFLOW = 1e-14


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the rectangle [-pi, pi) x [p0, 0]."""

    nq: int = 256
    np: int = 128

    def __post_init__(self):
        if self.nq < 8 or self.np < 8:
            raise ValueError(f"grid needs at least 8 nodes per direction, got {self.nq}x{self.np}")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        nq, npts = text.lower().split("x")
        return cls(int(nq), int(npts))

    def q(self) -> np.ndarray:
        return -np.pi + 2.0 * np.pi * np.arange(self.nq) / self.nq

    def p(self, p0: float) -> np.ndarray:
        return np.linspace(p0, 0.0, self.np)

    def mesh(self, p0: float):
        """(Q, P) arrays of shape (np, nq)."""
        return np.meshgrid(self.q(), self.p(p0))


@dataclass(frozen=True)
class ResidualReport:
    rms_interior: float
    max_interior: float
    rms_surface: float
    max_surface: float
    max_bed: float

    @property
    def eps(self) -> float:
        return max(self.rms_interior, self.rms_surface)

    @property
    def binding(self) -> str:
        return "interior" if self.rms_interior >= self.rms_surface else "surface"


def interior_residual(d: Partials, gamma: float):
    """H[h] = (1 + h_q^2) h_pp - 2 h_p h_q h_pq + h_p^2 h_qq - gamma h_p^3."""
    return ((1 + d.h_q**2) * d.h_pp - 2 * d.h_p * d.h_q * d.h_qp
            + d.h_p**2 * d.h_qq - gamma * d.h_p**3)


def surface_residual(h, h_q, h_p, Q: float, g: float):
    """B0[h] = 1 + h_q^2 + (2 g h - Q) h_p^2, evaluated on p = 0."""
    return 1 + h_q**2 + (2 * g * h - Q) * h_p**2


def bed_residual(h_bed):
    """B1[h] = h(q, p0)."""
    return np.asarray(h_bed)


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def residual_fields(expansion: Expansion, grid: Grid, Q: float | None = None):
    """Nodal interior residual (np, nq), surface residual (nq,) and bed values (nq,)."""
    st = expansion.state
    Q = st.q_star if Q is None else Q
    qq, pp = grid.mesh(st.p0)
    d = evaluate_height(expansion, qq, pp, derivatives=True, warn=False)
    interior = interior_residual(d, st.gamma)
    top = Partials(*(x[-1] for x in d))
    surface = surface_residual(top.h, top.h_q, top.h_p, Q, st.g)
    bed = bed_residual(d.h[0])
    return interior, surface, bed


def _report(interior, surface, bed) -> ResidualReport:
    return ResidualReport(
        rms_interior=_rms(interior),
        max_interior=float(np.max(np.abs(interior))),
        rms_surface=_rms(surface),
        max_surface=float(np.max(np.abs(surface))),
        max_bed=float(np.max(np.abs(bed))),
    )


def residual_norms(expansion: Expansion, grid: Grid = Grid(), Q: float | None = None) -> ResidualReport:
    return _report(*residual_fields(expansion, grid, Q))


class ResidualEvaluator:
    """Residual norms of one expansion family at many (b, B~) on a fixed grid.

    h is a polynomial in b and affine in B~, so the partials of each b^k term
    are computed once and recombined per query.
    """

    def __init__(self, expansion: Expansion, grid: Grid = Grid(), Q: float | None = None, dtype=float):
        st = expansion.state
        self.state = st
        self.grid = grid
        self.Q = st.q_star if Q is None else Q
        qq, pp = grid.mesh(st.p0)
        base = expansion.with_amplitude(expansion.b, 0.0)
        cast = lambda t: Partials(*(np.asarray(x, dtype=dtype) for x in t))  # noqa: E731
        self._terms = {k: cast(t) for k, t in term_partials(base, qq, pp).items()}
        self._w_dir = None
        if expansion.order >= 3:
            unit = cast(term_partials(base.with_amplitude(base.b, 1.0), qq, pp)[3])
            self._w_dir = Partials(*(x1 - x0 for x1, x0 in zip(unit, self._terms[3])))

    def partials(self, b: float, btilde: float = 0.0) -> Partials:
        terms = self._terms
        if self._w_dir is not None and btilde != 0.0:
            terms = dict(terms)
            terms[3] = Partials(*(x + btilde * dx for x, dx in zip(terms[3], self._w_dir)))
        return combine_terms(terms, b)

    def fields(self, b: float, btilde: float = 0.0):
        d = self.partials(b, btilde)
        interior = interior_residual(d, self.state.gamma)
        top = Partials(*(x[-1] for x in d))
        surface = surface_residual(top.h, top.h_q, top.h_p, self.Q, self.state.g)
        return interior, surface, d.h[0]

    def report(self, b: float, btilde: float = 0.0) -> ResidualReport:
        return _report(*self.fields(b, btilde))

    def mean_squares(self, b: float, btilde: float = 0.0):
        """(||H||^2, ||B0||^2) in the evaluator's working precision."""
        interior, surface, _ = self.fields(b, btilde)
        return np.mean(np.square(interior)), np.mean(np.square(surface))

    def min_hp(self, b: float, btilde: float = 0.0) -> float:
        return float(np.min(sum(b**k * t.h_p for k, t in self._terms.items())
                            if btilde == 0.0 else self.partials(b, btilde).h_p))


@dataclass(frozen=True)
class OrderFit:
    slope: float
    intercept: float
    fit_residual: float


def _fit(bs, values, label) -> OrderFit:
    values = np.asarray(values, dtype=float)
    if np.any(values < UNDERFLOW):
        raise DegenerateFitError(f"{label} RMS underflows {UNDERFLOW:g}: {values.min():.3e}")
    x, y = np.log(bs), np.log(values)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    return OrderFit(float(slope), float(intercept), float(np.sqrt(res[0] / len(x))) if len(res) else 0.0)


def fit_residual_order(expansion: Expansion, bs=B_LADDER, grid: Grid = Grid()) -> dict[str, OrderFit]:
    """Least-squares slopes of log RMS against log b for both operators."""
    if len(bs) < 5:
        raise ValueError("at least five b samples are required")
    ev = ResidualEvaluator(expansion, grid)
    reports = [ev.report(b, expansion.btilde) for b in bs]
    return {
        "interior": _fit(bs, [r.rms_interior for r in reports], "interior"),
        "surface": _fit(bs, [r.rms_surface for r in reports], "surface"),
    }


def defect_magnitude(expansion: Expansion, grid: Grid = Grid()) -> float:
    """max over the strip of |B~ r0^2 H(p)/r^3(p)|, the size of the b^3 interior defect."""
    st = expansion.state
    p = grid.p(st.p0)
    r = np.sqrt(st.lambda_star - 2 * st.gamma * p)
    H = 2 * (p - st.p0) / (r + st.r0)
    return float(np.max(np.abs(expansion.btilde * st.r0**2 * H / r**3)))
