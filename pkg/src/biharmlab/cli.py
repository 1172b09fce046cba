"""Command-line driver: reproducible experiment runs with CSV artifacts,
a JSON run manifest, and optional SVG plots.

Subcommands front the estimate-lab operations of the same name; `suite`
runs the full verification set.  Exit codes: 0 all enabled assertions
pass, 1 an assertion failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import report
from .estimates import (davies_distance, decay_fit, laplacian_decay_fit,
                        lambda_optimizer_check, offdiag_fit, rellich_constant,
                        remark_ball_inequality, riesz_pnorm_sweep,
                        solve_parabolic, twisted_decay_suite)
from .grids import (GridError, Region, build_box_grid, build_radial_grid,
                    euclidean_distance, make_phi, probe_functions)
from .norms import corner_norm
from .operators import (OperatorError, assemble_box, assemble_sector,
                        paper_rellich_constant, twisted_form_terms)
from .spectral import eigendecompose, make_evaluator, riesz_apply, riesz_kernel

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


KNOWN_KEYS = {
    "run": {"experiment", "N", "c", "seed", "out", "threads",
            "allow_supercritical"},
    "grid": {"kind", "n", "R", "mode", "m", "B"},
    "sweep": {"t", "p", "q", "d", "lam", "ell_max", "count"},
    "tolerances": {"slope_tol", "bracket_tol"},
}


def parse_config(path: str) -> dict:
    """Line-oriented `key = value` file with [section] headers; unknown
    sections or keys are hard errors."""
    cfg = {}
    section = "run"
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in KNOWN_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown section "
                                      f"[{section}]")
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in KNOWN_KEYS.get(section, set()):
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in "
                                  f"[{section}]")
            cfg[f"{section}.{key}"] = val
    return cfg


def _floats(s: str):
    return [float(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="biharmlab",
        description="numerical laboratory for Delta^2 - c|x|^-4 on R^N")
    sub = ap.add_subparsers(dest="cmd", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value config file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads (results are thread-count independent)")
    common.add_argument("--allow-supercritical", action="store_true")
    common.add_argument("--N", type=int, default=5)
    common.add_argument("--c", type=float, default=1.0)
    common.add_argument("--n", type=int, default=None, help="radial node count")
    common.add_argument("--R", type=float, default=None, help="outer radius")
    common.add_argument("--mode", default=None, choices=("uniform", "log"))
    common.add_argument("--t", default=None, help="comma list of times")
    common.add_argument("--p", default=None, help="comma list of p values")
    common.add_argument("--d", default=None, help="comma list of distances")
    common.add_argument("--lam", default=None, help="comma list of lambda values")
    common.add_argument("--ell-max", type=int, default=8)
    for name in ("rellich", "decay", "offdiag", "riesz", "twisted", "distance",
                 "solve", "suite"):
        sub.add_parser(name, parents=[common])
    pp = sub.add_parser("plot")
    pp.add_argument("csv")
    pp.add_argument("--x", required=True, help="x column name")
    pp.add_argument("--y", required=True, help="y column name(s), comma list")
    pp.add_argument("--logx", action="store_true")
    pp.add_argument("--logy", action="store_true")
    pp.add_argument("--guide", default=None,
                    help="comma list of reference slopes")
    pp.add_argument("--out", default=None, help="output SVG path")
    return ap


_FLAG_DEFAULTS = {
    "N": 5, "c": 1.0, "seed": 0, "out": "out", "threads": 1,
    "allow_supercritical": False, "n": None, "R": None, "mode": None,
    "t": None, "p": None, "d": None, "lam": None, "ell_max": 8,
}


def apply_config(args) -> None:
    """Config file values override built-in defaults; explicit command-line
    flags override the config file."""
    if args.config is None:
        return
    cfg = parse_config(args.config)
    mapping = {
        "run.N": ("N", int), "run.c": ("c", float), "run.seed": ("seed", int),
        "run.out": ("out", str), "run.threads": ("threads", int),
        "run.allow_supercritical": ("allow_supercritical",
                                    lambda s: s.lower() == "true"),
        "grid.n": ("n", int), "grid.R": ("R", float), "grid.mode": ("mode", str),
        "sweep.t": ("t", str), "sweep.p": ("p", str), "sweep.d": ("d", str),
        "sweep.lam": ("lam", str), "sweep.ell_max": ("ell_max", int),
    }
    for key, val in cfg.items():
        if key in mapping:
            attr, conv = mapping[key]
            if getattr(args, attr) == _FLAG_DEFAULTS.get(attr):
                setattr(args, attr, conv(val))


def validate(args) -> None:
    if args.N < 5:
        raise ConfigError("N >= 5 required")
    cstar = paper_rellich_constant(args.N)
    if args.c >= cstar and not args.allow_supercritical:
        raise ConfigError(
            f"c = {args.c} >= C* = {cstar}; pass --allow-supercritical "
            "for exploratory (report-only) runs")


def _outdir(args, experiment: str) -> str:
    d = os.path.join(args.out, experiment)
    os.makedirs(d, exist_ok=True)
    return d


def _asserting(args) -> bool:
    return not (args.allow_supercritical
                and args.c >= paper_rellich_constant(args.N))


def run_rellich(args, man: report.RunManifest, out: str) -> None:
    n = args.n or 2000
    R = args.R or 1e3
    mode = args.mode or "log"
    grid = build_radial_grid(args.N, R, n, mode)
    man.add_hash("grid", grid.content_hash())
    res = rellich_constant(grid, ell_max=args.ell_max)
    target = res["target"]
    rows = [(ell, val, target) for ell, val in res["per_sector"].items()]
    path = os.path.join(out, "rellich.csv")
    report.write_csv(path, ("ell", "constant", "target"), rows)
    man.add_file(path)
    rel = abs(res["min"] - target) / target
    man.add_check("rellich_within_10pct", rel <= 0.10,
                  f"C*_h = {res['min']!r}, target {target!r}, rel err {rel!r}")
    man.add_check("rellich_min_at_ell0", not res["higher_sector_wins"],
                  f"argmin ell = {res['argmin_ell']}")


def run_decay(args, man: report.RunManifest, out: str) -> None:
    n = args.n or 512
    R = args.R or 30.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    man.add_hash("grid", grid.content_hash())
    ts = _floats(args.t) if args.t else list(np.geomspace(0.01, 0.1, 9))
    rows = []
    curve_rows = []
    for c in (0.0, args.c):
        op = assemble_sector(grid, 0, c)
        ev = make_evaluator(op)
        for q in (math.inf, 10.0):
            fit = decay_fit(ev, 2.0, q, ts)
            rel = fit.relative_error()
            rows.append((c, 2.0, q, fit.exponent, fit.target, fit.residual))
            for tv, nv in zip(fit.params["t_values"], fit.params["norm_values"]):
                curve_rows.append((c, q, tv, nv))
            if _asserting(args):
                man.add_check(f"decay_slope_c{c}_q{q}", rel <= 0.15,
                              f"slope {fit.exponent!r} target {fit.target!r}")
    path = os.path.join(out, "decay.csv")
    report.write_csv(path, ("c", "p", "q", "slope", "target", "residual"), rows)
    man.add_file(path)
    path = os.path.join(out, "decay_curve.csv")
    report.write_csv(path, ("c", "q", "t", "norm_upper"), curve_rows)
    man.add_file(path)


def run_offdiag(args, man: report.RunManifest, out: str) -> None:
    n = args.n or 1024
    R = args.R or 40.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    man.add_hash("grid", grid.content_hash())
    op = assemble_sector(grid, 0, args.c)
    ev = make_evaluator(op)
    ds = _floats(args.d) if args.d else [3.0, 5.0, 8.0, 12.0]
    ts = _floats(args.t) if args.t else list(np.geomspace(1e-3, 1e-2, 8))
    E = Region.annulus(0.0, 1.0)
    Fs = [Region.annulus(d, math.inf) for d in ds]
    res = offdiag_fit(ev, E, Fs, ts)
    rows = []
    for fit in res["distance_fits"]:
        rows.append(("distance", fit.params["t"], fit.exponent, fit.target,
                     fit.residual))
    tf = res["time_fit"]
    if tf is not None:
        rows.append(("time", tf.params["d"], tf.exponent, tf.target,
                     tf.residual))
    jf = res["joint_fit"]
    if jf is not None:
        rows.append(("joint_c1_c2", 0.0, jf.params["c1"], jf.params["c2"],
                     jf.residual))
    path = os.path.join(out, "offdiag.csv")
    report.write_csv(path, ("fit", "fixed", "value", "target", "residual"),
                     rows)
    man.add_file(path)
    if _asserting(args):
        dist_ok = any(f.relative_error() <= 0.15 for f in res["distance_fits"])
        man.add_check("offdiag_distance_exponent", dist_ok,
                      "best distance-exponent fit vs 4/3")
        man.add_check("offdiag_time_exponent",
                      tf is not None and tf.relative_error() <= 0.15,
                      "time-exponent fit vs 1/3")


def run_riesz(args, man: report.RunManifest, out: str) -> None:
    n = args.n or 512
    R = args.R or 30.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    man.add_hash("grid", grid.content_hash())
    op = assemble_sector(grid, 0, args.c)
    dec = eigendecompose(op)
    rng = np.random.default_rng(args.seed)
    u = rng.standard_normal(n)
    rs = riesz_apply(op, u, "spectral", decomposition=dec)
    rq = riesz_apply(op, u, "quadrature", decomposition=dec)
    route_rel = float(np.linalg.norm(rs - rq) / np.linalg.norm(rs))
    grid2 = build_radial_grid(args.N, R, 2 * n, args.mode or "uniform")
    op2 = assemble_sector(grid2, 0, args.c)
    ps = _floats(args.p) if args.p else [1.3, 1.5, 1.8]
    sweep = riesz_pnorm_sweep(op, ps, refined_op=op2)
    rows = [("route_rel_err", route_rel, "", "")]
    for p, entry in sorted(sweep.items()):
        est = entry["estimate"]
        rows.append((f"p={p}", est.lower, est.upper,
                     entry.get("stability", "")))
    path = os.path.join(out, "riesz.csv")
    report.write_csv(path, ("quantity", "lower", "upper", "stability"), rows)
    man.add_file(path)
    if _asserting(args):
        man.add_check("riesz_routes_agree", route_rel <= 1e-6,
                      f"rel err {route_rel!r}")
        man.add_check("riesz_l2_bound", sweep[2.0]["ok"],
                      f"||R||_2 = {sweep[2.0]['estimate'].upper!r} vs "
                      f"eta_h^-1/2 = {sweep[2.0]['eta_bound']!r}")
        for p in ps:
            man.add_check(f"riesz_stability_p{p}", sweep[p]["stable"],
                          f"change {sweep[p]['stability']!r}")


def run_twisted(args, man: report.RunManifest, out: str) -> None:
    # box refinement study of the twisted-form expansion
    e = np.zeros(args.N)
    e[0], e[1] = 0.8, 0.6
    phi_box = make_phi(e, 1.0, 0.2)
    lam = 0.7
    discs, hs = [], []
    for m in (8, 12, 16):
        box = build_box_grid(args.N, m, 2.5)
        opb = assemble_box(box, args.c)
        r2 = box.radii_sq()
        u = np.exp(-r2) * (1.0 + 0.3j * box.coords()[:, 0])
        res = twisted_form_terms(opb, u, lam, phi_box)
        discs.append(res["discrepancy"])
        hs.append(box.h)
    orders = [math.log(discs[i] / discs[i + 1]) / math.log(hs[i] / hs[i + 1])
              for i in range(len(discs) - 1)]
    rows = [(m, h, d) for m, h, d in zip((8, 12, 16), hs, discs)]
    path = os.path.join(out, "twisted_expansion.csv")
    report.write_csv(path, ("m", "h", "discrepancy"), rows)
    man.add_file(path)
    if _asserting(args):
        man.add_check("twisted_expansion_order", min(orders) >= 1.5,
                      f"orders {orders!r}")

    # sector twisted semigroup suite
    n = args.n or 256
    R = args.R or 30.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    man.add_hash("grid", grid.content_hash())
    op = assemble_sector(grid, 0, args.c)
    lams = _floats(args.lam) if args.lam else [0.5, 1.0, 2.0]
    phis = [make_phi(np.zeros(args.N), 1.0, -R / 3.0, kind="radial", grid=grid),
            make_phi(np.zeros(args.N), 2.0, -R / 2.0, kind="radial", grid=grid)]
    ts = _floats(args.t) if args.t else list(np.geomspace(0.05, 0.5, 6))
    rep = twisted_decay_suite(op, lams, phis, ts, seed=args.seed)
    rows = [(r["lam"], r["t"], r["norm"], r["bound"], r["lap_norm"],
             r["lap_bound"]) for r in rep["rows"]]
    path = os.path.join(out, "twisted_semigroup.csv")
    report.write_csv(path, ("lam", "t", "norm", "bound", "lap_norm",
                            "lap_bound"), rows)
    man.add_file(path)
    if _asserting(args):
        man.add_check("twisted_semigroup_bounds", rep["ok"],
                      f"k_h {rep['k_h']!r} M-hat {rep['m_hat']!r}")
    # t^{-1/2} fit at c=0
    op0 = assemble_sector(grid, 0, 0.0)
    fit = laplacian_decay_fit(op0, np.geomspace(0.01, 0.1, 8))
    if _asserting(args):
        man.add_check("laplacian_decay_half", fit.relative_error() <= 0.10,
                      f"slope {fit.exponent!r}")


def run_distance(args, man: report.RunManifest, out: str) -> None:
    rng = np.random.default_rng(args.seed)
    count = 50
    rows = []
    ok_all = True
    for i in range(count):
        c1 = rng.uniform(-5, 5, args.N)
        c2 = rng.uniform(-5, 5, args.N)
        r1, r2 = rng.uniform(0.2, 1.5, 2)
        sep = np.linalg.norm(c1 - c2)
        if sep <= r1 + r2 + 0.1:
            gap = r1 + r2 + rng.uniform(0.5, 3.0)
            direction = (c2 - c1 + 1e-9) / max(np.linalg.norm(c2 - c1), 1e-9)
            c2 = c1 + direction * gap
        E = Region.ball(c1, r1)
        F = Region.ball(c2, r2)
        d_e = euclidean_distance(E, F)
        est = davies_distance(E, F, args.N, budget=50, seed=args.seed + i)
        ok = 0.95 * d_e <= est.d_lb <= math.sqrt(args.N) * d_e + 1e-9
        rem = remark_ball_inequality(c1, c2, min(r1, r2), d_lb=est.d_lb)
        ok_all = ok_all and ok and rem["ok"]
        rows.append((i, d_e, est.d_lb, est.bracket[1], ok, rem["ok"]))
    path = os.path.join(out, "distance.csv")
    report.write_csv(path, ("pair", "d_e", "d_lb", "bracket_top", "in_bracket",
                            "remark_ok"), rows)
    man.add_file(path)
    man.add_check("davies_distance_bracket", ok_all, f"{count} random pairs")
    res = lambda_optimizer_check(0.25, 1.0, 1.0)
    man.add_check("lambda_optimizer", res["ok"],
                  f"rel err {float(res['rel_err_lam'])!r}")


def run_solve(args, man: report.RunManifest, out: str) -> None:
    n = args.n or 256
    R = args.R or 30.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    man.add_hash("grid", grid.content_hash())
    op = assemble_sector(grid, 0, args.c)
    f = probe_functions(grid, 1, seed=args.seed)[0]
    ts = _floats(args.t) if args.t else list(np.geomspace(0.01, 1.0, 10))
    p = _floats(args.p)[0] if args.p else 1.5
    traj = solve_parabolic(op, f, ts, p)
    rows = [(r["t"], r["norm_p"], r["seminorm_p"]) for r in traj["rows"]]
    path = os.path.join(out, "solve.csv")
    report.write_csv(path, ("t", "norm_p", "seminorm_p"), rows)
    man.add_file(path)
    finite = all(math.isfinite(r["seminorm_p"]) for r in traj["rows"])
    man.add_check("solution_seminorm_finite", finite, f"p = {p}")


def run_coercivity(args, man: report.RunManifest, out: str) -> None:
    """Positivity of A and 2->2 contractivity of its semigroup."""
    n = args.n or 512
    R = args.R or 30.0
    grid = build_radial_grid(args.N, R, n, args.mode or "uniform")
    op = assemble_sector(grid, 0, args.c)
    dec = eigendecompose(op)
    ts = _floats(args.t) if args.t else list(np.geomspace(1e-3, 10.0, 12))
    ev = make_evaluator(op, decomposition=dec)
    rows = []
    contractive = True
    for t in ts:
        nrm = corner_norm(ev.kernel(t), 2.0, 2.0)
        contractive = contractive and nrm <= 1.0 + 1e-12
        rows.append((t, nrm))
    path = os.path.join(out, "contraction.csv")
    report.write_csv(path, ("t", "norm_2_2"), rows)
    man.add_file(path)
    if _asserting(args):
        man.add_check("positive_definite", dec.mu[0] > 0,
                      f"mu_1 = {dec.mu[0]!r}")
        man.add_check("semigroup_contractive", contractive, "")


SUBCOMMANDS = {
    "rellich": run_rellich,
    "decay": run_decay,
    "offdiag": run_offdiag,
    "riesz": run_riesz,
    "twisted": run_twisted,
    "distance": run_distance,
    "solve": run_solve,
}


def run_plot(args) -> int:
    header, rows = report.read_csv(args.csv)
    if args.x not in header:
        print(f"column {args.x!r} missing from {args.csv}", file=sys.stderr)
        return EXIT_CONFIG
    ycols = args.y.split(",")
    for yc in ycols:
        if yc not in header:
            print(f"column {yc!r} missing from {args.csv}", file=sys.stderr)
            return EXIT_CONFIG
    xi = header.index(args.x)

    def col(rows, i):
        out = []
        for r in rows:
            try:
                out.append(float(r[i]))
            except ValueError:
                out.append(math.nan)
        return out

    xs = col(rows, xi)
    series = []
    for yc in ycols:
        ys = col(rows, header.index(yc))
        pts = [(x, y) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)]
        series.append((yc, [p[0] for p in pts], [p[1] for p in pts]))
    guides = []
    if args.guide:
        for s in _floats(args.guide):
            guides.append((s, f"slope {s:g}"))
    svg = report.svg_plot(series, xlabel=args.x, ylabel=",".join(ycols),
                          logx=args.logx, logy=args.logy, guides=guides,
                          title=os.path.basename(args.csv))
    out = args.out or os.path.splitext(args.csv)[0] + ".svg"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(out)
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cmd == "plot":
        return run_plot(args)
    try:
        apply_config(args)
        validate(args)
    except (ConfigError, GridError, OperatorError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(limits=1)
    except ImportError:
        limiter = None
    try:
        if args.cmd == "suite":
            experiments = [("coercivity", run_coercivity)] + \
                list(SUBCOMMANDS.items())
        else:
            experiments = [(args.cmd, SUBCOMMANDS[args.cmd])]
        ok = True
        for name, fn in experiments:
            out = _outdir(args, name)
            man = report.RunManifest({
                "experiment": name, "N": args.N, "c": args.c,
                "seed": args.seed, "threads": args.threads,
            })
            try:
                fn(args, man, out)
            except (GridError, OperatorError, ValueError) as exc:
                print(f"config error in {name}: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            man.write(os.path.join(out, "manifest.json"))
            for check in man.checks:
                status = "PASS" if check["pass"] else "FAIL"
                print(f"[{status}] {name}:{check['name']} {check['detail']}")
            ok = ok and man.all_pass
        return EXIT_OK if ok else EXIT_ASSERT
    finally:
        if limiter is not None:
            limiter.unregister()


if __name__ == "__main__":
    sys.exit(main())
