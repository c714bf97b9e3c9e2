"""Command line interface: ``hofa <command> ...``.

Every JSON report embeds the parsed configuration, the seed and the library
version, and is written with sorted keys so identical runs are byte-identical.
Exit codes: 0 success, 2 input error, 3 budget exceeded, 4 invariant failure.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from ._config import BudgetExceeded, HofaError, InvariantFailure, StructuralError, budget_cap, make_rng
from .abelian import GroupFunction, GroupSpec

EXIT_INPUT, EXIT_BUDGET, EXIT_INVARIANT = 2, 3, 4


def _cx(z):
    z = complex(z)
    return [z.real, z.imag]


def _moduli(text):
    try:
        return tuple(int(x) for x in str(text).replace("x", ",").split(",") if x.strip())
    except ValueError as exc:
        raise StructuralError(f"bad moduli {text!r}") from exc


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise StructuralError(f"cannot read {path}: {exc}") from exc


def _function(args):
    if getattr(args, "input", None):
        return GroupFunction.from_dict(_read_json(args.input))
    spec = GroupSpec(_moduli(args.moduli))
    if args.random == "bounded":
        return GroupFunction.random_bounded(spec, make_rng(args.seed))
    return GroupFunction.random_unimodular(spec, make_rng(args.seed))


def _system(args, mode="full"):
    from .gowers import FunctionSystem
    if getattr(args, "system", None):
        S = FunctionSystem.from_dict(_read_json(args.system))
    else:
        S = FunctionSystem.random(GroupSpec(_moduli(args.moduli)), args.n, mode, make_rng(args.seed),
                                  unimodular=args.random != "bounded")
    return S


def _add_function_input(p, default_moduli="16"):
    p.add_argument("--input", help="GroupFunction JSON file; otherwise a seeded random function")
    p.add_argument("--moduli", default=default_moduli, help="comma separated moduli for random inputs")
    p.add_argument("--random", choices=("unimodular", "bounded"), default="unimodular")


def _add_system_input(p):
    p.add_argument("--system", help="FunctionSystem JSON file; otherwise a seeded random system")
    p.add_argument("--moduli", default="4")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--random", choices=("unimodular", "bounded"), default="unimodular")


# ---------------------------------------------------------------------------
# commands


def cmd_gowers(args):
    from .gowers import gowers_estimate, gowers_norm, gowers_power
    f = _function(args)
    if args.method == "monte_carlo":
        est = gowers_estimate(f, args.k, args.samples, args.seed)
        return {"power": est.power, "norm": est.value, "standard_error": est.standard_error,
                "samples": est.samples, "clamped": est.clamped}
    power = gowers_power(f, args.k, args.method, budget=args.budget)
    return {"power": power, "norm": gowers_norm(f, args.k, args.method, budget=args.budget)}


def cmd_convolve(args):
    from .gowers import corner_convolution
    F = _system(args, "punctured")
    return {"moduli": list(F.group.moduli), "values": [_cx(v) for v in corner_convolution(F, args.budget).values]}


def cmd_inner(args):
    from .gowers import check_identities, gowers_inner, gowers_norm
    G = _system(args, "full")
    value = gowers_inner(G, args.budget)
    bound = float(np.prod([gowers_norm(G[v], G.dim, budget=args.budget) for v in G.vertices]))
    out = {"value": _cx(value), "gcs_bound": bound, "gcs_holds": abs(value) <= bound + 1e-9}
    if args.identities:
        out["identity_residuals"] = check_identities(G, budget=args.budget)
    return out


def cmd_approx(args):
    from .approx import Subgroup, conv_product_approx, lowrank_approx, shift_sample_approx
    if args.kind == "shift":
        f = _function(args)
        gens = [_moduli(g) for g in args.subgroup] if args.subgroup else [tuple(2 for _ in f.group.moduli)]
        B = Subgroup.generated_by(f.group, gens)
        res = shift_sample_approx(f, B, args.eps, args.seed, n=args.n_samples)
        return {"n": res.n, "error": res.error, "attempts": res.attempts, "subgroup_order": B.order,
                "shifts": [list(map(int, f.group.residues(int(s)))) for s in res.shifts]}
    from .gowers import FunctionSystem
    spec = GroupSpec(_moduli(args.moduli))
    rng = make_rng(args.seed)
    F = FunctionSystem.random(spec, args.n, "punctured", rng)
    if args.kind == "lowrank":
        res = lowrank_approx(F, args.eps, rng, budget=args.budget)
        return {"terms": res.n, "error": res.error, "attempts": res.attempts, "cap": 1 + 4 / args.eps**2}
    G = FunctionSystem.random(spec, args.n, "punctured", rng)
    res = conv_product_approx(F, G, args.eps, rng, budget=args.budget)
    return {"systems": res.n, "error": res.error, "attempts": res.attempts, "cap": (1 + 64 / args.eps**2) ** 2}


def cmd_nilcheck(args):
    from .nilspace import FilteredGroup, check_nilspace_axioms, degree_cube_space, filtered_group_space
    if args.space == "degree":
        space = degree_cube_space(GroupSpec(_moduli(args.moduli)), args.k)
        k = args.k if args.check_k is None else args.check_k
    else:
        if args.space == "heisenberg":
            G = FilteredGroup.heisenberg(args.p)
        else:
            if not args.group:
                raise StructuralError("--space filtered needs --group FILE")
            G = FilteredGroup.from_dict(_read_json(args.group))
        space = filtered_group_space(G)
        k = G.degree if args.check_k is None else args.check_k
    report = check_nilspace_axioms(space, k, args.n_max, args.budget)
    out = report.to_dict()
    if args.strict and not report.passed:
        raise InvariantFailure(json.dumps(out, sort_keys=True))
    return out


def cmd_heisenberg(args):
    from .heisenberg import (closed_form_phase, pipeline_phase, reduce_to_domain, table_csv, tau,
                             u3_of_heis)
    if args.table:
        return table_csv(args.m, args.t)
    out = {}
    if args.k is not None:
        X = tau(args.k, args.m, args.t)
        rep = reduce_to_domain(X)
        cf, pp = closed_form_phase(args.k % args.m, args.m, args.t), pipeline_phase(args.k, args.m, args.t)
        out.update({"k": args.k, "tau": [str(v) for v in X.entries()],
                    "reduced": [str(v) for v in rep.entries()], "gamma": list(rep.gamma),
                    "closed_phase": str(cf), "pipeline_phase": str(pp), "exact_match": cf == pp})
    if args.u3:
        out["u3"] = u3_of_heis(args.m, args.t, args.budget)
    if not out:
        raise StructuralError("choose one of --k, --u3, --table")
    return out


def cmd_moments(args):
    from .moments import Moment, distribution, moment_estimate, moment_value, triangle_moment
    f = _function(args)
    if args.moment:
        text = args.moment
        M = Moment.from_dict(_read_json(text) if not text.lstrip().startswith("{") else json.loads(text))
    else:
        M = triangle_moment()
    out = {"moment": M.to_dict(), "simple": M.simple, "degree": M.degree}
    if args.method == "monte_carlo":
        v, se = moment_estimate(f, M, args.samples, args.seed)
        out.update({"value": _cx(v), "standard_error": se, "samples": args.samples})
    else:
        out["value"] = _cx(moment_value(f, M, args.method, budget=args.budget))
    if args.distribution:
        D = distribution(f, M.n, budget=args.budget)
        out["from_distribution"] = _cx(D.moment(M))
    return out


def cmd_limits(args):
    from .moments import chi_plus_chi_power, convergence_scan, search_limit_exponents, simple_moment_family, \
        torus_limit
    if args.scan:
        js = [int(j) for j in args.scan.split(",")]
        fam = simple_moment_family(3, args.degree_cap)
        seq = [chi_plus_chi_power(args.m, j) for j in js]
        scan = convergence_scan(seq, family=fam, tol=args.tol, labels=[f"j={j}" for j in js],
                                method="fourier", budget=args.budget)
        if args.format == "csv":
            return scan.to_csv()
        return {"moments": len(fam), "all_converged": scan.all_converged,
                "max_tail_oscillation": float(scan.oscillation.max())}
    matches, disc = search_limit_exponents(args.m, args.tol, budget=args.budget)
    return {"m": args.m, "matching_j": matches, "discrepancy": {str(j): d for j, d in disc.items()},
            "torus_moduli": list(torus_limit(args.m).group.moduli)}


def cmd_decompose(args):
    from .decompose import fourier_regularize
    from .gowers import gowers_norm
    f = _function(args)
    d = fourier_regularize(f, args.delta)
    return {"delta": args.delta, "kept": [list(map(int, f.group.residues(int(i)))) for i in d.kept],
            "kept_count": int(d.kept.size), "parseval_cap": 1 / args.delta**2,
            "u2_remainder": gowers_norm(d.f_r, 2), "u2_bound": (args.delta**2 * f.lp_norm(2) ** 2) ** 0.25,
            "orthogonality": abs(d.f_r.inner(d.f_s)), "residual": d.residual()}


def cmd_correlate(args):
    from .decompose import PhaseDictionary, correlation_search
    from .heisenberg import nilsequence_function
    m = int(args.dict_spec)
    if args.heisenberg_t is not None:
        f = nilsequence_function(m, args.heisenberg_t)
    else:
        f = _function(args)
        if f.group.moduli != (m,):
            raise StructuralError(f"input lives on {f.group}, dictionary on Z_{m}")
    D = PhaseDictionary.build(m, args.degree, heisenberg=not args.no_heisenberg)
    res = correlation_search(f, D)
    return {"dictionary_size": len(D), "best": res.best.description, "value": _cx(res.value),
            "ranked": [{"index": i, "entry": d, "abs": a, "re": re, "im": im}
                       for i, d, a, re, im in res.ranked[: args.top]]}


def cmd_selftest(args):
    from .selftest import run
    results = run()
    out = {"checks": [{"name": n, "passed": ok, "error": err} for n, ok, err in results],
           "passed": all(ok for _, ok, _ in results)}
    if not out["passed"]:
        raise InvariantFailure(json.dumps(out, sort_keys=True))
    return out


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="hofa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hofa {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None, help="enumeration cap (default $HOFA_BUDGET or 1e8)")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gowers", parents=[common], help="Gowers U_k norm of a function")
    _add_function_input(g)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--method", choices=("direct", "recursive", "fourier2", "monte_carlo"), default="direct")
    g.add_argument("--samples", type=int, default=10_000)
    g.set_defaults(func=cmd_gowers)

    c = sub.add_parser("convolve", parents=[common], help="corner convolution [F] of a punctured system")
    _add_system_input(c)
    c.set_defaults(func=cmd_convolve)

    i = sub.add_parser("inner", parents=[common], help="Gowers inner product of a full system")
    _add_system_input(i)
    i.add_argument("--identities", action="store_true", help="also report the convolution identity residuals")
    i.set_defaults(func=cmd_inner)

    a = sub.add_parser("approx", parents=[common], help="shift-average, low-rank and product approximations")
    _add_function_input(a)
    a.add_argument("--kind", choices=("shift", "lowrank", "product"), default="shift")
    a.add_argument("--eps", type=float, default=0.5)
    a.add_argument("--subgroup", action="append", help="generator residues, e.g. 2 or 1,0 (repeatable)")
    a.add_argument("--n-samples", type=int, default=None, help="force this many i.i.d. shifts")
    a.add_argument("--n", type=int, default=2, help="cube dimension for lowrank/product")
    a.set_defaults(func=cmd_approx)

    n = sub.add_parser("nilcheck", parents=[common], help="check nilspace axioms")
    n.add_argument("--space", choices=("degree", "heisenberg", "filtered"), default="degree")
    n.add_argument("--moduli", default="3")
    n.add_argument("--k", type=int, default=1, help="degree of D_k(A)")
    n.add_argument("--check-k", type=int, default=None, help="step count to test uniqueness at")
    n.add_argument("--p", type=int, default=3)
    n.add_argument("--group", help="FilteredGroup JSON file")
    n.add_argument("--n-max", type=int, default=3)
    n.add_argument("--strict", action="store_true", help="exit 4 when an axiom fails")
    n.set_defaults(func=cmd_nilcheck)

    h = sub.add_parser("heisenberg", parents=[common], help="exact Heisenberg nilsequence")
    h.add_argument("--m", type=int, required=True)
    h.add_argument("--t", type=int, required=True)
    h.add_argument("--k", type=int, default=None)
    h.add_argument("--u3", action="store_true")
    h.add_argument("--table", action="store_true", help="CSV of k, closed form and pipeline values")
    h.set_defaults(func=cmd_heisenberg)

    mo = sub.add_parser("moments", parents=[common], help="pattern moment of a function")
    _add_function_input(mo, "5")
    mo.add_argument("--moment", help="moment JSON (inline or file); default the triangle")
    mo.add_argument("--method", choices=("auto", "exact", "fourier", "monte_carlo"), default="auto")
    mo.add_argument("--samples", type=int, default=10_000)
    mo.add_argument("--distribution", action="store_true", help="also evaluate via the exact distribution")
    mo.set_defaults(func=cmd_moments)

    li = sub.add_parser("limits", parents=[common], help="chi + chi^j versus the torus function")
    li.add_argument("--m", type=int, default=17)
    li.add_argument("--tol", type=float, default=1e-9)
    li.add_argument("--scan", help="comma separated j values for a convergence scan")
    li.add_argument("--degree-cap", type=int, default=2)
    li.set_defaults(func=cmd_limits)

    d = sub.add_parser("decompose", parents=[common], help="Fourier threshold decomposition (k = 1)")
    _add_function_input(d)
    d.add_argument("--delta", type=float, default=0.3)
    d.set_defaults(func=cmd_decompose)

    co = sub.add_parser("correlate", parents=[common], help="correlation search over a phase dictionary")
    _add_function_input(co, "8")
    co.add_argument("--degree", type=int, default=2)
    co.add_argument("--dict-spec", default="8", help="modulus m of the cyclic group Z_m")
    co.add_argument("--no-heisenberg", action="store_true")
    co.add_argument("--heisenberg-t", type=int, default=None, help="use e(x^2 t/m^2) as the input")
    co.add_argument("--top", type=int, default=10)
    co.set_defaults(func=cmd_correlate)

    s = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    s.set_defaults(func=cmd_selftest)
    return p


def _config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "output")}
    cfg["budget"] = budget_cap(args.budget)
    return cfg


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except BudgetExceeded as exc:
        print(f"hofa: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantFailure as exc:
        print(f"hofa: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (StructuralError, HofaError, ValueError) as exc:
        print(f"hofa: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if isinstance(result, str):  # CSV
        _emit(result, args.output)
        return 0
    report = {"command": args.command, "config": _config(args), "seed": args.seed,
              "version": __version__, "result": result}
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
