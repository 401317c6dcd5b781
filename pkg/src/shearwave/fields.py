"""Physical quantities derived from an expansion: surface, velocity, pressure, streamlines, curvature."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StagnationError
from .expansion import Expansion, evaluate_height
from .residuals import Grid

BISECT_TOL = 1e-10


@dataclass(frozen=True)
class SurfaceProfile:
    q_nodes: np.ndarray
    eta: np.ndarray
    depth: float
    height: float


@dataclass(frozen=True)
class FlowFieldGrid:
    q: np.ndarray
    p: np.ndarray
    h: np.ndarray
    rel_horizontal: np.ndarray
    vertical: np.ndarray
    pressure_excess: np.ndarray


@dataclass(frozen=True)
class CurvatureCurve:
    """Roots q~(p) of h_qq(., p) in (0, pi); nan where a level has no sign change."""

    p: np.ndarray
    q_root: np.ndarray
    missing: tuple = ()
    multiple: dict = field(default_factory=dict)


def _uniform_q(nq: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(nq) / nq


def surface_profile(expansion: Expansion, nq: int = 256) -> SurfaceProfile:
    """Mean depth d = mean h(q, 0), eta = h(q, 0) - d, height = eta(0) - eta(pi)."""
    q = _uniform_q(nq)
    h0 = evaluate_height(expansion, q, 0.0)
    d = float(np.mean(h0))
    ends = evaluate_height(expansion, np.array([0.0, np.pi]), 0.0)
    return SurfaceProfile(q, h0 - d, d, float(ends[0] - ends[1]))


def _check_hp(hp, q, p):
    bad = hp <= 0
    if np.any(bad):
        i = np.flatnonzero(bad.ravel())[0]
        qb = np.broadcast_to(q, hp.shape).ravel()[i]
        pb = np.broadcast_to(p, hp.shape).ravel()[i]
        raise StagnationError(f"h_p <= 0 at (q, p) = ({qb:.6g}, {pb:.6g})", float(qb), float(pb))


def velocity(expansion: Expansion, q, p):
    """(c - u, v) = (1/h_p, -h_q/h_p)."""
    d = evaluate_height(expansion, q, p, derivatives=True, warn=False)
    _check_hp(d.h_p, q, p)
    return 1.0 / d.h_p, -d.h_q / d.h_p


def pressure(expansion: Expansion, q, p):
    """P - P_atm = -(1 + h_q^2)/(2 h_p^2) - g h - gamma p + Q*/2 (unit density)."""
    st = expansion.state
    d = evaluate_height(expansion, q, p, derivatives=True, warn=False)
    _check_hp(d.h_p, q, p)
    return -(1 + d.h_q**2) / (2 * d.h_p**2) - st.g * d.h - st.gamma * np.asarray(p) + st.q_star / 2


def streamline(expansion: Expansion, p_level: float, nq: int = 512, wavelengths: int = 2):
    """(q, h(q, p_level)) over ``wavelengths`` periods starting at q = -pi."""
    p0 = expansion.state.p0
    if not p0 <= p_level <= 0:
        raise ValueError(f"p_level must lie in [{p0}, 0]")
    q = -np.pi + 2.0 * np.pi * wavelengths * np.arange(nq) / nq
    return q, evaluate_height(expansion, q, float(p_level))


def flow_field(expansion: Expansion, grid: Grid = Grid()) -> FlowFieldGrid:
    qq, pp = grid.mesh(expansion.state.p0)
    st = expansion.state
    d = evaluate_height(expansion, qq, pp, derivatives=True, warn=False)
    _check_hp(d.h_p, qq, pp)
    cu = 1.0 / d.h_p
    v = -d.h_q / d.h_p
    pex = -(1 + d.h_q**2) / (2 * d.h_p**2) - st.g * d.h - st.gamma * pp + st.q_star / 2
    return FlowFieldGrid(qq, pp, d.h, cu, v, pex)


def _hqq(expansion: Expansion, q, p):
    return evaluate_height(expansion, q, p, derivatives=True, warn=False).h_qq


def curvature_transition(expansion: Expansion, np_levels: int = 64, nq_scan: int = 512) -> CurvatureCurve:
    """Root of h_qq(., p) in (0, pi) at each p level, by sign-change scan and bisection."""
    st = expansion.state
    ps = np.linspace(st.p0, 0.0, np_levels)
    qs = np.linspace(0.0, np.pi, nq_scan + 1)[1:-1]
    roots = np.full(np_levels, np.nan)
    missing, multiple = [], {}
    for i, p in enumerate(ps):
        vals = _hqq(expansion, qs, p)
        idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        if idx.size == 0:
            missing.append(float(p))
            continue
        found = []
        for j in idx:
            a, b = qs[j], qs[j + 1]
            fa = vals[j]
            while b - a > BISECT_TOL:
                m = 0.5 * (a + b)
                fm = _hqq(expansion, m, p)
                if np.sign(fm) == np.sign(fa):
                    a, fa = m, fm
                else:
                    b = m
            found.append(0.5 * (a + b))
        roots[i] = found[0]
        if len(found) > 1:
            multiple[float(p)] = tuple(found)
    return CurvatureCurve(ps, roots, tuple(missing), multiple)
