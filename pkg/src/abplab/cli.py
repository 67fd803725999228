"""Batch driver: build experiments from flags or a JSON config, emit reports.

Exit status: 0 when every check passes, 1 when any check fails, 2 on
usage/config errors.  Reports are written atomically; rerunning with the same
seed produces byte-identical files (randomness comes from the counter-based
Philox4x64-10 generator keyed by the seed, and no timestamps are recorded).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import geometry
from .abp import AbpInstance, abp_check, disc_vertex_indices
from .barrier import BarrierSpec, check_ricci_comparison, junction_residuals, verify_barrier
from .constants import CurvatureParams, build_ledger, verify_ledger
from .contact import compute_contact_set, gradient_contact_residual
from .fields import constant_field, quadratic_field, random_bump_field, sum_fields
from .geometry import build_polar_grid
from .harnack import (HarnackInstance, growth_check, harnack_check_full,
                      harnack_check_sub, harnack_check_sup)
from .hfun import expansion_fit, hfun_closed_form, hfun_numeric
from .measure import BallFamily, doubling_check, lp_distribution_check, vitali_cover, vitali_verify
from .pde import DirichletProblem, solve_poisson
from .pucci import e_theta, e_theta_bounds, pucci, pucci_contact_bound
from .report import check_eq, check_le, emit_csv, emit_json, emit_plotdata, seeded_rng, write_atomic

_CONFIG_KEYS = {
    "experiment", "model", "k", "lambda", "K", "N", "R", "r", "a", "b", "d",
    "resolution", "seed", "samples", "format", "out", "which", "p", "alpha",
    "u", "theta", "fit", "dmax",
}


def build_model(args) -> geometry.ModelSpace:
    name = args.model
    if name == "euclidean":
        return geometry.euclidean()
    if name == "sphere":
        return geometry.sphere(args.k)
    if name == "hyperbolic":
        return geometry.hyperbolic(args.k)
    if name == "gaussian":
        return geometry.gaussian_plane(getattr(args, "lam"))
    raise ValueError(f"unknown model {name!r}")


def _parse_n(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    if str(text).lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _params(args) -> CurvatureParams:
    return CurvatureParams(args.K, _parse_n(args.N), args.R)


# -- subcommand handlers -----------------------------------------------------

def cmd_constants(args):
    ledger = build_ledger(_params(args))
    reports = verify_ledger(ledger)
    return reports, {"ledger": ledger.to_dict()}


def cmd_contact(args):
    m = build_model(args)
    grid = build_polar_grid(m, m.origin(), args.r, args.resolution, args.resolution)
    u = quadratic_field(grid, m.origin(), args.b)
    E = disc_vertex_indices(grid, grid.radial_rings(0.45 * args.r))
    cs = compute_contact_set(m, u, args.a, E)
    pairs = cs.pairs()
    lines = ["y_coords,x_coords,min_value,residual"]
    for p in pairs:
        res = gradient_contact_residual(m, u, p)
        ys = ";".join(repr(float(c)) for c in p.y)
        xs = ";".join(repr(float(c)) for c in p.x)
        lines.append(f"{ys},{xs},{p.min_value!r},{res!r}")
    rep = check_le("contact-vertex-coverage", "contact-set-construction",
                   float(len(E)), float(len(cs.contact_of)),
                   n_pairs=len(pairs), n_distinct_contact_nodes=int(len(cs.node_indices)))
    return [rep], {"pairs_csv": "\n".join(lines) + "\n"}


def cmd_abp(args):
    m = build_model(args)
    params = _params(args)
    grid = build_polar_grid(m, m.origin(), args.r, args.resolution, args.resolution)
    n_rings = grid.radial_rings(0.45 * args.r)
    E = disc_vertex_indices(grid, n_rings)
    if args.u == "const":
        u = constant_field(grid, 1.0)
    elif args.u == "quadratic":
        u = quadratic_field(grid, m.origin(), args.b)
    else:
        u = random_bump_field(grid, seeded_rng(args.seed, "abp-cli"),
                              hess_bound=0.5 * args.a)
    stride = 0 if args.resolution > 128 else 1
    rep = abp_check(AbpInstance(m, params, grid, E, u, args.a),
                    set_stride=stride, n_rings=n_rings)
    return [rep], {}


def cmd_barrier(args):
    m = build_model(args)
    params = _params(args)
    alpha = args.alpha if args.alpha is not None else build_ledger(params).alpha
    spec = BarrierSpec(alpha, m, m.origin(), args.r)
    reports = verify_barrier(spec, params)
    jr = junction_residuals(spec)
    reports.append(check_le("barrier-junction", "barrier-c2-junction",
                            max(jr), 1e-8 * max(1.0, abs(spec.beta1)),
                            value_residual=jr[0], d1_residual=jr[1], d2_residual=jr[2]))
    reports.append(check_ricci_comparison(m, params, m.origin(), args.r))
    return reports, {"alpha": alpha}


def cmd_doubling(args):
    m = build_model(args)
    params = _params(args)
    rng = seeded_rng(args.seed, "doubling")
    reports = []
    limit = min(params.R, 0.45 * m.domain_radius_limit)
    for _ in range(args.samples):
        r1 = limit * rng.uniform(0.3, 1.0)
        r2 = r1 * rng.uniform(0.15, 0.8)
        center = _random_center(m, rng, 0.2 * limit)
        reports.append(doubling_check(m, params, center, r1, r2))
    return reports, {}


def cmd_harnack(args):
    m = build_model(args)
    params = _params(args)
    ledger = build_ledger(params)
    which = args.which
    res = args.resolution
    reports = []
    if which in ("sup", "sub", "full"):
        grid = build_polar_grid(m, m.origin(), 2.0 * params.R, res, res)
        rng = seeded_rng(args.seed, f"harnack-{which}")
        bnd = 1.0 + 0.3 * np.cos(grid.theta) + 0.1 * np.sin(2.0 * grid.theta)
        fvals = -np.abs(rng.normal(size=grid.shape))
        u, _ = solve_poisson(DirichletProblem(grid, fvals, bnd))
        from .fields import ScalarField
        f = ScalarField(grid, fvals)
        inst = HarnackInstance(m, params, grid, u, f, boundary=bnd)
        if which == "sup":
            reports.append(harnack_check_sup(inst, ledger))
        elif which == "sub":
            reports.append(harnack_check_sub(inst, ledger, p=max(args.p, ledger.p0)))
        else:
            reports.append(harnack_check_full(inst, ledger))
    elif which == "growth":
        grid = build_polar_grid(m, m.origin(), args.r, res, res)
        u = sum_fields([constant_field(grid, 1.0 + args.r**2 / 8.0),
                        quadratic_field(grid, m.origin(), -2.0)])
        f = constant_field(grid, 0.0)
        reports.append(growth_check(m, params, ledger, u, f, m.origin(), args.r))
    elif which == "pucci":
        rng = seeded_rng(args.seed, "harnack-pucci")
        worst = 0.0
        for _ in range(args.samples):
            W = rng.normal(size=(2, 2))
            W = W @ W.T
            H = rng.normal(size=(2, 2))
            H = 0.5 * (H + H.T)
            a = rng.uniform(0.1, 3.0)
            rep = pucci_contact_bound(W - a * H, H, a, args.theta)
            worst = max(worst, rep.lhs - rep.rhs)
        reports.append(check_le("pucci-contact-battery", "extremal-trace-chain",
                                worst, 0.0, abs_tol=1e-10, samples=args.samples))
        ev = e_theta(m, 2.0 * params.R, args.theta)
        br, bs = e_theta_bounds(m, 2.0 * params.R, args.theta, params.K,
                                max(0.0, -m.sectional()))
        reports.append(check_le("curvature-error-term", "distance-hessian-excess",
                                ev, min(br, bs), rel_tol=1e-12,
                                ricci_bound=br, sectional_bound=bs))
    else:
        raise ValueError(f"unknown harnack check {which!r}")
    lines = ["quantity,lhs,rhs,slack"]
    for rep in reports:
        lines.append(f"{rep.name},{rep.lhs!r},{rep.rhs!r},{rep.rhs - rep.lhs!r}")
    return reports, {"slack_csv": "\n".join(lines) + "\n"}


def cmd_hfun(args):
    m = build_model(args)
    reports = []
    series = []
    if args.fit:
        dmax = args.dmax
        ds = np.linspace(dmax / 20.0, dmax, max(args.samples, 8))
        vals = np.array([hfun_closed_form(m, d) for d in ds])
        coeffs, resid = expansion_fit(ds, vals, degree=4)
        sec = m.sectional()
        reports.append(check_eq("hfun-fit-a0", "harnack-functional-expansion",
                                coeffs[0], 9.0, abs_tol=1e-3))
        reports.append(check_le("hfun-fit-a1", "harnack-functional-expansion",
                                abs(coeffs[1]), 1e-6))
        reports.append(check_eq("hfun-fit-a2", "harnack-functional-expansion",
                                coeffs[2], -3.0 * sec, rel_tol=0.01,
                                fit_residual=resid))
        series = [(float(d), float(v)) for d, v in zip(ds, vals)]
    else:
        r = hfun_numeric(m, args.d, args.samples, args.samples)
        reports.append(check_eq("hfun-numeric-vs-closed", "harnack-functional-value",
                                r.value_numeric, r.value_closed, rel_tol=1e-3,
                                theta=r.theta_used))
        series = [(args.d, r.value_closed)]
        values_csv = ("d,closed,numeric\n"
                      f"{args.d!r},{r.value_closed!r},{r.value_numeric!r}\n")
        return reports, {"series": series, "values_csv": values_csv}
    return reports, {"series": series}


def cmd_pucci(args):
    rng = seeded_rng(args.seed, "pucci-identities")
    th = args.theta
    worst = {"negation": 0.0, "trace_bracket": 0.0, "monotone": 0.0,
             "superadd_minus": 0.0, "subadd_plus": 0.0, "theta1_collapse": 0.0}
    for _ in range(args.samples):
        A = rng.normal(size=(2, 2))
        A = 0.5 * (A + A.T)
        B = rng.normal(size=(2, 2))
        B = 0.5 * (B + B.T)
        am, ap = pucci(A, th)
        bm, bp = pucci(B, th)
        sm, sp = pucci(A + B, th)
        worst["negation"] = max(worst["negation"], abs(am + pucci(-A, th)[1]))
        worst["trace_bracket"] = max(worst["trace_bracket"],
                                     am - np.trace(A), np.trace(A) - ap)
        P = rng.normal(size=(2, 2))
        P = P @ P.T
        cm, cp = pucci(A + P, th)
        worst["monotone"] = max(worst["monotone"], am - cm, ap - cp)
        worst["superadd_minus"] = max(worst["superadd_minus"], am + bm - sm)
        worst["subadd_plus"] = max(worst["subadd_plus"], sp - ap - bp)
        m1m, m1p = pucci(A, 1.0)
        worst["theta1_collapse"] = max(worst["theta1_collapse"],
                                       abs(m1m - np.trace(A)), abs(m1p - np.trace(A)))
    reports = [check_le(f"pucci-{k}", "extremal-operator-algebra", v, 0.0,
                        abs_tol=1e-10, samples=args.samples)
               for k, v in sorted(worst.items())]
    return reports, {}


def cmd_all(args):
    reports = []
    extras = {}
    ns = _clone(args)
    for name, fn in (("constants", cmd_constants), ("pucci", cmd_pucci)):
        r, _ = fn(ns)
        reports.extend(r)
    ns.resolution = min(args.resolution, 64)
    for model in ("euclidean", "hyperbolic"):
        ns.model = model
        ns.K = 1.0 if model == "hyperbolic" else 0.0
        r, _ = cmd_abp(ns)
        reports.extend(r)
        r, _ = cmd_barrier(ns)
        reports.extend(r)
        ns.samples = min(args.samples, 20)
        r, _ = cmd_doubling(ns)
        reports.extend(r)
    ns.model = "sphere"
    ns.fit = False
    ns.d = 0.5
    ns.samples = 128
    r, _ = cmd_hfun(ns)
    reports.extend(r)
    return reports, extras


def _clone(args):
    ns = argparse.Namespace(**vars(args))
    return ns


def _random_center(m, rng, spread):
    e1, e2 = m.tangent_frame(m.origin())
    th = rng.uniform(0.0, 2.0 * math.pi)
    rr = spread * math.sqrt(rng.uniform())
    return m.exp(m.origin(), rr * (math.cos(th) * e1 + math.sin(th) * e2))


# -- argument plumbing --------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(prog="abplab",
                                 description="curvature/measure-estimate verification runs")
    ap.add_argument("--config", help="JSON config file; flags override its values")
    sub = ap.add_subparsers(dest="experiment")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="euclidean",
                        choices=["euclidean", "sphere", "hyperbolic", "gaussian"])
    common.add_argument("--k", type=float, default=1.0, help="curvature magnitude")
    common.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="gaussian weight coefficient")
    common.add_argument("--K", type=float, default=0.0)
    common.add_argument("--N", default="2")
    common.add_argument("--R", type=float, default=1.0)
    common.add_argument("--r", type=float, default=1.0)
    common.add_argument("--a", type=float, default=1.0)
    common.add_argument("--b", type=float, default=1.0)
    common.add_argument("--d", type=float, default=0.5)
    common.add_argument("--p", type=float, default=1.0)
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--theta", type=float, default=2.0)
    common.add_argument("--u", default="quadratic",
                        choices=["const", "quadratic", "random"])
    common.add_argument("--resolution", type=int, default=64)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100)
    common.add_argument("--format", default="json", choices=["json", "csv"])
    common.add_argument("--out", default=None)
    common.add_argument("--which", default="sup",
                        choices=["sup", "sub", "full", "growth", "pucci"])
    common.add_argument("--fit", action="store_true")
    common.add_argument("--dmax", type=float, default=0.12)
    for name in ("constants", "contact", "abp-check", "barrier-check", "doubling",
                 "harnack-check", "hfun", "pucci", "all"):
        sub.add_parser(name, parents=[common])
    return ap


_HANDLERS = {
    "constants": cmd_constants,
    "contact": cmd_contact,
    "abp-check": cmd_abp,
    "barrier-check": cmd_barrier,
    "doubling": cmd_doubling,
    "harnack-check": cmd_harnack,
    "hfun": cmd_hfun,
    "pucci": cmd_pucci,
    "all": cmd_all,
}


def _apply_config(args, parser):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"unreadable config: {e}")
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    argv_flags = {a.lstrip("-").split("=")[0] for a in sys.argv[1:] if a.startswith("--")}
    for key, val in cfg.items():
        dest = {"lambda": "lam"}.get(key, key)
        if key not in argv_flags and hasattr(args, dest):
            setattr(args, dest, val)
    if "experiment" in cfg and args.experiment is None:
        args.experiment = cfg["experiment"]
    args.K = float(args.K)
    args.R = float(args.R)
    args.resolution = int(args.resolution)
    return args


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser)
        if args.experiment is None:
            raise ValueError("no experiment selected")
        handler = _HANDLERS.get(args.experiment)
        if handler is None:
            raise ValueError(f"unknown experiment {args.experiment!r}")
        reports, extra = handler(args)
    except (ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    out = os.environ.get("ABPLAB_OUT") or getattr(args, "out", None)
    name = args.experiment.replace("-", "_")
    payload_extra = {k: v for k, v in extra.items()
                     if k not in ("pairs_csv", "series", "slack_csv", "values_csv")}
    payload_extra["experiment"] = args.experiment
    payload_extra["seed"] = getattr(args, "seed", 0)
    text = emit_json(reports, None, payload_extra)
    if out:
        try:
            write_atomic(os.path.join(out, f"{name}_report.json"), text)
            if getattr(args, "format", "json") == "csv":
                emit_csv(reports, os.path.join(out, f"{name}_report.csv"))
            if "pairs_csv" in extra:
                write_atomic(os.path.join(out, f"{name}_pairs.csv"), extra["pairs_csv"])
            if "slack_csv" in extra:
                write_atomic(os.path.join(out, f"{name}_slack.csv"), extra["slack_csv"])
            if "values_csv" in extra:
                write_atomic(os.path.join(out, f"{name}_values.csv"), extra["values_csv"])
            if extra.get("series"):
                xs = [p[0] for p in extra["series"]]
                ys = [p[1] for p in extra["series"]]
                emit_plotdata((xs, ys), os.path.join(out, f"{name}_series.dat"))
        except OSError as e:
            print(f"output error: {e}", file=sys.stderr)
            return 2
    for r in reports:
        print(f"[{'pass' if r.passed else 'FAIL'}] {r.name}: lhs={r.lhs:.6g} rhs={r.rhs:.6g}")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
