"""Command-line driver.

    shearwave dispersion --gamma-range -4.5:3:0.5
    shearwave calibrate --order 3 --epsilon 1e-3 --out results
    shearwave fields --gamma -1.5 --order 2 --format json
    shearwave verify

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import DEFAULT_EPSILON, calibrate, select_b, select_btilde
from .errors import ShearWaveError
from .expansion import make_expansion
from .export import FORMATS, write_table
from .fields import curvature_transition, flow_field, streamline, surface_profile
from .laminar import DEFAULT_G, DEFAULT_P0, FlowParams, solve_dispersion
from .oracle import run_verification
from .residuals import Grid, fit_residual_order, residual_norms

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
OUT_ENV = "SHEARWAVE_OUT"
DEFAULT_GAMMAS = tuple(-4.5 + 0.5 * k for k in range(16))
VERIFY_GAMMAS = (-1.5, 0.0, 1.5)
COMMANDS = ("dispersion", "calibrate", "fields", "residuals", "verify", "compare", "sweep")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    p0: float = DEFAULT_P0
    g: float = DEFAULT_G
    gammas: tuple = DEFAULT_GAMMAS
    order: int = 2
    orders: tuple = (1, 2, 3)
    epsilon: float = DEFAULT_EPSILON
    b_override: float | None = None
    btilde_mode: str = "auto"
    btilde: float = 0.0
    grid: Grid = field(default_factory=Grid)
    output_dir: Path = Path(".")
    fmt: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        FlowParams(0.0, self.p0, self.g)
        if self.order not in (1, 2, 3) or any(o not in (1, 2, 3) for o in self.orders):
            raise ConfigError("orders must be 1, 2 or 3")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.b_override is not None and self.b_override < 0:
            raise ConfigError("b must be nonnegative")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")

    def params(self, gamma: float) -> FlowParams:
        return FlowParams(float(gamma), self.p0, self.g)

    def header(self) -> dict:
        return {
            "p0": self.p0, "g": self.g, "gammas": " ".join(format(x, ".17g") for x in self.gammas),
            "order": self.order, "orders": " ".join(map(str, self.orders)), "epsilon": self.epsilon,
            "b": "auto" if self.b_override is None else format(self.b_override, ".17g"),
            "btilde": self.btilde_mode if self.btilde_mode == "auto" else format(self.btilde, ".17g"),
            "grid": f"{self.grid.nq}x{self.grid.np}",
        }


# --- configuration parsing ----------------------------------------------------

def parse_gamma_range(text: str) -> tuple:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"gamma range must be A:B:STEP, got {text!r}") from None
    if step <= 0 or b < a:
        raise ConfigError(f"gamma range needs STEP > 0 and B >= A, got {text!r}")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return tuple(round(a + k * step, 12) for k in range(n))


def read_config_file(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


CONFIG_KEYS = ("gamma", "gamma_range", "p0", "g", "order", "orders", "epsilon", "b", "btilde",
               "grid", "format", "out", "jobs")


def build_config(args: argparse.Namespace) -> RunConfig:
    raw = read_config_file(args.config) if args.config else {}
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    try:
        kw = {}
        if "gamma" in raw and "gamma_range" in raw:
            raise ConfigError("give either --gamma or --gamma-range")
        if "gamma" in raw:
            g = raw["gamma"]
            parts = g if isinstance(g, list) else [g]
            kw["gammas"] = tuple(float(x) for part in parts for x in str(part).split(","))
        elif "gamma_range" in raw:
            kw["gammas"] = parse_gamma_range(raw["gamma_range"])
        elif args.command == "verify":
            kw["gammas"] = VERIFY_GAMMAS
        for key in ("p0", "g", "epsilon"):
            if key in raw:
                kw[key] = float(raw[key])
        if "order" in raw:
            kw["order"] = int(raw["order"])
        if "orders" in raw:
            kw["orders"] = tuple(int(x) for x in str(raw["orders"]).split(","))
        if "b" in raw:
            kw["b_override"] = float(raw["b"])
        if "btilde" in raw and str(raw["btilde"]) != "auto":
            kw["btilde_mode"], kw["btilde"] = "value", float(raw["btilde"])
        if "grid" in raw:
            kw["grid"] = Grid.parse(str(raw["grid"]))
        if "format" in raw:
            kw["fmt"] = str(raw["format"])
        if "jobs" in raw:
            kw["jobs"] = max(1, int(raw["jobs"]))
        out = raw.get("out") or os.environ.get(OUT_ENV) or "."
        kw["output_dir"] = Path(out)
        return RunConfig(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", action="append",
                        help="vorticity; repeatable or comma list (use --gamma=-1.5,1.5)")
    common.add_argument("--gamma-range", metavar="A:B:STEP", help="inclusive vorticity range")
    common.add_argument("--p0", type=float, help=f"relative mass flux (default {DEFAULT_P0})")
    common.add_argument("--g", type=float, help=f"gravity (default {DEFAULT_G})")
    common.add_argument("--order", type=int, choices=(1, 2, 3), help="expansion order (default 2)")
    common.add_argument("--orders", help="comma list of orders for compare/sweep (default 1,2,3)")
    common.add_argument("--epsilon", type=float, help=f"residual level for b (default {DEFAULT_EPSILON})")
    common.add_argument("--b", type=float, help="fixed amplitude instead of calibration")
    common.add_argument("--btilde", help="'auto' (minimize norms) or a fixed value")
    common.add_argument("--grid", metavar="NQxNP", help="residual grid (default 256x128)")
    common.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--jobs", type=int, help="worker processes for sweep (default 1)")
    parser = argparse.ArgumentParser(prog="shearwave", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)
    return parser


# --- commands -----------------------------------------------------------------

def _gtag(gamma: float) -> str:
    return f"gamma{gamma:+.3f}"


def _amplitudes(cfg: RunConfig, state, order: int):
    """(b, btilde) for an order, calibrated unless overridden."""
    b = cfg.b_override
    if b is None:
        b = select_b(state, min(order, 2), cfg.epsilon, cfg.grid).b
    btilde = 0.0
    if order == 3:
        btilde = cfg.btilde if cfg.btilde_mode == "value" else select_btilde(state, b, cfg.grid).btilde
    return b, btilde


def _failure_note(gamma, exc) -> str:
    return f"gamma={gamma:.17g} failed: {type(exc).__name__}: {exc}"


def cmd_dispersion(cfg: RunConfig) -> int:
    rows, notes = [], []
    for gamma in cfg.gammas:
        try:
            st = solve_dispersion(cfg.params(gamma))
        except (ShearWaveError, ValueError) as exc:
            notes.append(_failure_note(gamma, exc))
            continue
        rows.append((float(gamma), st.lambda_star, st.q_star, st.surface_height))
    path = write_table(cfg.output_dir / "dispersion", ("gamma", "lambda_star", "q_star", "depth"),
                       rows, cfg.header(), cfg.fmt, notes)
    print(path)
    return EXIT_NUMERIC if notes else EXIT_OK


CALIBRATION_COLUMNS = ("gamma", "b", "btilde", "achieved_eps", "binding_norm")


def _calibration_row(cfg: RunConfig, gamma: float, order: int):
    st = solve_dispersion(cfg.params(gamma))
    if order == 3 and cfg.btilde_mode == "value":
        b = select_b(st, 2, cfg.epsilon, cfg.grid).b
        rep = residual_norms(make_expansion(st, 3, b, cfg.btilde), cfg.grid)
        return (float(gamma), b, cfg.btilde, rep.eps, rep.binding)
    res = calibrate(st, order, cfg.epsilon, cfg.grid)
    return (float(gamma), res.b, res.btilde, res.achieved_eps, res.binding_norm)


def cmd_calibrate(cfg: RunConfig) -> int:
    rows, notes = [], []
    for gamma in cfg.gammas:
        try:
            rows.append(_calibration_row(cfg, gamma, cfg.order))
        except (ShearWaveError, ValueError) as exc:
            notes.append(_failure_note(gamma, exc))
    path = write_table(cfg.output_dir / f"calibration_order{cfg.order}", CALIBRATION_COLUMNS,
                       rows, cfg.header(), cfg.fmt, notes)
    print(path)
    return EXIT_NUMERIC if notes else EXIT_OK


def write_fields(cfg: RunConfig, gamma: float) -> list[Path]:
    """One file per figure family for one gamma."""
    st = solve_dispersion(cfg.params(gamma))
    b, btilde = _amplitudes(cfg, st, cfg.order)
    exp = make_expansion(st, cfg.order, b, btilde)
    head = dict(cfg.header(), gamma=float(gamma), b_used=b, btilde_used=btilde)
    tag, out, fmt_ = _gtag(gamma), cfg.output_dir, cfg.fmt
    paths = []
    ff = flow_field(exp, cfg.grid)
    flat = [a.ravel() for a in (ff.q, ff.p, ff.h, ff.rel_horizontal, ff.vertical, ff.pressure_excess)]
    paths.append(write_table(out / f"field_{tag}", ("q", "p", "h", "cu", "v", "pexcess"),
                             list(zip(*(map(float, a) for a in flat))), head, fmt_))
    sp = surface_profile(exp, cfg.grid.nq)
    paths.append(write_table(out / f"surface_{tag}", ("q", "eta", "h"),
                             [(float(q), float(e), float(e + sp.depth)) for q, e in zip(sp.q_nodes, sp.eta)],
                             dict(head, depth=sp.depth, height=sp.height), fmt_))
    levels = np.linspace(st.p0, 0.0, 9)
    rows = []
    for lvl in levels:
        qs, hs = streamline(exp, float(lvl), 2 * cfg.grid.nq)
        rows += [(float(lvl), float(q), float(h)) for q, h in zip(qs, hs)]
    paths.append(write_table(out / f"streamlines_{tag}", ("p", "q", "h"), rows, head, fmt_))
    top, bed = -1, 0
    paths.append(write_table(out / f"surface_v_{tag}", ("q", "v"),
                             [(float(q), float(v)) for q, v in zip(ff.q[top], ff.vertical[top])], head, fmt_))
    crest = int(np.argmin(np.abs(ff.q[0])))
    paths.append(write_table(out / f"crest_cu_{tag}", ("p", "cu"),
                             [(float(p), float(c)) for p, c in zip(ff.p[:, crest], ff.rel_horizontal[:, crest])],
                             head, fmt_))
    paths.append(write_table(out / f"bottom_pressure_{tag}", ("q", "pexcess"),
                             [(float(q), float(x)) for q, x in zip(ff.q[bed], ff.pressure_excess[bed])],
                             head, fmt_))
    if cfg.order >= 2:
        cc = curvature_transition(exp, 64)
        notes = [f"no sign change at p={p:.17g}" for p in cc.missing]
        notes += [f"multiple roots at p={p:.17g}: {' '.join(format(x, '.17g') for x in r)}"
                  for p, r in cc.multiple.items()]
        paths.append(write_table(out / f"curvature_{tag}", ("p", "q_root"),
                                 [(float(p), float(q)) for p, q in zip(cc.p, cc.q_root)], head, fmt_, notes))
    return paths


def cmd_fields(cfg: RunConfig) -> int:
    status = EXIT_OK
    for gamma in cfg.gammas:
        try:
            for path in write_fields(cfg, gamma):
                print(path)
        except (ShearWaveError, ValueError) as exc:
            print(_failure_note(gamma, exc), file=sys.stderr)
            status = EXIT_NUMERIC
    return status


def cmd_residuals(cfg: RunConfig) -> int:
    cols = ("gamma", "order", "b", "btilde", "rms_interior", "max_interior", "rms_surface",
            "max_surface", "max_bed", "slope_interior", "slope_surface")
    rows, notes = [], []
    for gamma in cfg.gammas:
        try:
            st = solve_dispersion(cfg.params(gamma))
            b, btilde = _amplitudes(cfg, st, cfg.order)
            exp = make_expansion(st, cfg.order, b, btilde)
            rep = residual_norms(exp, cfg.grid)
            fit = fit_residual_order(exp.with_amplitude(b, 0.0), grid=cfg.grid)
            rows.append((float(gamma), cfg.order, b, btilde, rep.rms_interior, rep.max_interior,
                         rep.rms_surface, rep.max_surface, rep.max_bed,
                         fit["interior"].slope, fit["surface"].slope))
        except (ShearWaveError, ValueError) as exc:
            notes.append(_failure_note(gamma, exc))
    path = write_table(cfg.output_dir / f"residuals_order{cfg.order}", cols, rows, cfg.header(), cfg.fmt, notes)
    print(path)
    return EXIT_NUMERIC if notes else EXIT_OK


def _corrupt(coeffs):
    a = coeffs.a_table.copy()
    a[3, 4] *= 1.01
    # d2 is the matching cos 3q entry of the irrotational branch
    return dataclasses.replace(coeffs, a_table=a, d2=coeffs.d2 * 1.01)


def cmd_verify(cfg: RunConfig, inject: bool = False) -> int:
    try:
        rep = run_verification(cfg.gammas, cfg.p0, cfg.g, coeff_hook=_corrupt if inject else None)
    except ShearWaveError as exc:
        print(f"verification aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    rows = [(c.name, c.value, c.tolerance, "pass" if c.passed else "FAIL") for c in rep.checks]
    path = write_table(cfg.output_dir / "verify", ("check", "value", "tolerance", "status"),
                       rows, cfg.header(), cfg.fmt)
    print(path)
    for c in rep.checks:
        print(f"{'pass' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tolerance:g})")
    if not rep.passed:
        print(f"first failed check: {rep.first_failure.name}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def compare_orders(cfg: RunConfig, gamma: float):
    """Rows (gamma, order_a, order_b, height_a, height_b, height_gap, depth_gap, profile_gap, curvature_gap)."""
    st = solve_dispersion(cfg.params(gamma))
    cache = {}
    for order in sorted(set(cfg.orders)):
        b, bt = _amplitudes(cfg, st, order)
        exp = make_expansion(st, order, b, bt)
        sp = surface_profile(exp, cfg.grid.nq)
        curv = curvature_transition(exp, 32).q_root if order >= 2 else np.full(32, np.pi / 2)
        cache[order] = (sp, curv)
    rows = []
    orders = list(cfg.orders)
    for oa, ob in zip(orders, orders[1:]) if len(orders) > 1 else [(orders[0], orders[0])]:
        (sa, ca), (sb, cb) = cache[oa], cache[ob]
        prof = float(np.max(np.abs((sa.eta + sa.depth) - (sb.eta + sb.depth))))
        diff = np.abs(ca - cb)
        curv = float(np.max(diff[np.isfinite(diff)])) if np.any(np.isfinite(diff)) else math.nan
        rows.append((float(gamma), oa, ob, sa.height, sb.height, sa.height - sb.height,
                     sa.depth - sb.depth, prof, curv))
    return rows


def cmd_compare(cfg: RunConfig) -> int:
    cols = ("gamma", "order_a", "order_b", "height_a", "height_b", "height_gap", "depth_gap",
            "profile_gap", "curvature_gap")
    rows, notes = [], []
    for gamma in cfg.gammas:
        try:
            rows += compare_orders(cfg, gamma)
        except (ShearWaveError, ValueError) as exc:
            notes.append(_failure_note(gamma, exc))
    path = write_table(cfg.output_dir / "compare", cols, rows, cfg.header(), cfg.fmt, notes)
    print(path)
    return EXIT_NUMERIC if notes else EXIT_OK


def _sweep_item(args):
    cfg, gamma = args
    rows, err = [], None
    for order in cfg.orders:
        try:
            rows.append((order,) + _calibration_row(cfg, gamma, order))
        except (ShearWaveError, ValueError) as exc:
            err = _failure_note(gamma, exc)
            rows.append((order, float(gamma), math.nan, math.nan, math.nan, "failed"))
    path = write_table(cfg.output_dir / "sweep" / _gtag(gamma), ("order",) + CALIBRATION_COLUMNS, rows,
                       dict(cfg.header(), gamma=float(gamma)), cfg.fmt, [err] if err else [])
    return path, rows, err


def cmd_sweep(cfg: RunConfig) -> int:
    items = [(cfg, g) for g in cfg.gammas]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_sweep_item, items))
    else:
        results = [_sweep_item(it) for it in items]
    index = [row for _, rows, _ in results for row in rows]
    notes = [err for _, _, err in results if err]
    path = write_table(cfg.output_dir / "sweep_index", ("order",) + CALIBRATION_COLUMNS, index,
                       cfg.header(), cfg.fmt, notes)
    for p, _, _ in results:
        print(p)
    print(path)
    return EXIT_NUMERIC if notes else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handlers = {
        "dispersion": cmd_dispersion, "calibrate": cmd_calibrate, "fields": cmd_fields,
        "residuals": cmd_residuals, "compare": cmd_compare, "sweep": cmd_sweep,
    }
    try:
        if args.command == "verify":
            return cmd_verify(cfg, args.inject_corruption)
        return handlers[args.command](cfg)
    except ShearWaveError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
