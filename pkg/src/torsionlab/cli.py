"""Command line entry point: ``torsionlab <command> [flags]``.

Exit status: 0 when every check passed, 1 for invalid input, 2 when a check
failed (or a divergent case was found under ``--fail-on-divergent``), 3 on a
numerical failure (meshing, solver, quadrature, root search, fit).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments as E
from .errors import (
    FitFailure,
    IntegrationFailure,
    MeshingFailure,
    SearchFailure,
    SolverFailure,
    TorsionLabError,
)
from .geometry import Polygon, domain_from_json, make_rectangle
from .jsonio import dump17, dumps17
from .measures import beta_integral
from .solver import ScalarField, solve_sequence

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (MeshingFailure, SolverFailure, IntegrationFailure, SearchFailure, FitFailure)


class _Parser(argparse.ArgumentParser):
    # usage errors share the invalid-input status, keeping 2 for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _load_domain(path):
    with open(path, encoding="utf-8") as fh:
        return domain_from_json(json.load(fh))


def _polygon_arg(args) -> Polygon:
    if args.domain:
        return _load_domain(args.domain)
    return {"l-hexagon": E.l_shaped_hexagon(), "square": make_rectangle(1.0, 1.0)}[args.shape]


def _run_experiment(args):
    name = args.command
    if name == "regular-polygon":
        return E.exp_regular_polygon(args.beta, args.N, h0=args.h0, levels=args.levels, seed=args.seed)
    if name == "sector":
        return E.exp_sector_equivalence(args.beta[0], args.theta, args.r, seed=args.seed)
    if name == "polygon":
        return E.exp_polygon_finiteness(_polygon_arg(args), args.beta, h0=args.h0, levels=args.levels,
                                        seed=args.seed, assert_cauchy=not args.no_assert_cauchy)
    if name == "curvilinear":
        return E.exp_curvilinear_divergence(args.beta0, args.delta, args.epsilon, seed=args.seed)
    if name == "cusp":
        return E.exp_cusp(args.p, args.beta, seed=args.seed)
    if name == "sublevel":
        return E.exp_sublevel_chain(t_list=args.t, gamma=args.gamma, seed=args.seed)
    if name == "convex-refined":
        return E.exp_convex_refined(beta=args.beta[0], seed=args.seed)
    if name == "coarea":
        return E.exp_coarea(seed=args.seed)
    if name == "exponent":
        return E.exp_exponent(args.n, args.theta, seed=args.seed)
    if name == "sector-constant":
        return E.exp_sector_constant(args.theta, args.beta, seed=args.seed)
    raise AssertionError(name)


def _divergent(res) -> bool:
    if res.name == "cusp":
        return any(row.get("finite") is False for row in res.rows)
    return res.name == "curvilinear"


def _cmd_solve(args):
    dom = _load_domain(args.domain)
    seq = solve_sequence(dom, args.h, args.levels, corner_grading=args.grading, depth=args.depth)
    if args.levels == 1 or len(seq.fields) == 1:
        payload = seq.fields[-1].to_json()
    else:
        payload = {"type": "field-sequence", "fields": [f.to_json() for f in seq.fields],
                   "functionals": seq.functionals, "extrapolated": seq.extrapolated}
    dump17(payload, args.out)
    last = seq.fields[-1]
    print(dumps17({"out": args.out, "h": last.h, "residual": last.residual, "n_nodes": last.mesh.n_nodes,
                   "max": last.max}))
    return EXIT_OK


def _cmd_beta_integral(args):
    with open(args.field, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("type") == "field-sequence":
        fields = [ScalarField.from_json(d) for d in data["fields"]]
    else:
        fields = ScalarField.from_json(data)
    res = beta_integral(fields, args.beta)
    dump17(res.to_json(), args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("h,beta,value,error\n")
            prev = None
            for h, v in res.refinement_history:
                err = res.error_estimate if prev is None and len(res.refinement_history) == 1 else (
                    abs(v - prev) if prev is not None else float("nan"))
                fh.write(f"{h:.17g},{args.beta:.17g},{v:.17g},{err:.17g}\n")
                prev = v
    print(dumps17({"beta": res.beta, "value": res.value, "error_estimate": res.error_estimate}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torsionlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def exp(name, help_):
        q = sub.add_parser(name, help=help_)
        q.add_argument("--out", help="output directory for results.csv, results.json, plotdata/")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--fail-on-divergent", action="store_true",
                       help="exit 2 when a divergent case is reported")
        return q

    q = exp("regular-polygon", "beta-integrals of regular N-gons against their bounds")
    q.add_argument("--beta", type=_floats, default=[0.25, 0.5])
    q.add_argument("--N", type=_ints, default=[8, 16, 32, 64])
    q.add_argument("--h0", type=float, default=0.02)
    q.add_argument("--levels", type=int, default=2)

    q = exp("sector", "scaling band of beta-integrals on sectors")
    q.add_argument("--beta", type=_floats, default=[0.5])
    q.add_argument("--theta", type=_floats, default=[np.pi / 6, np.pi / 4, np.pi / 2])
    q.add_argument("--r", type=_floats, default=[0.5, 1.0, 2.0])

    q = exp("polygon", "refinement history and corner budgets on a polygon")
    g = q.add_mutually_exclusive_group()
    g.add_argument("--domain", help="domain JSON file")
    g.add_argument("--shape", choices=["l-hexagon", "square"], default="l-hexagon")
    q.add_argument("--beta", type=_floats, default=[0.25, 0.5, 0.75, 0.9])
    q.add_argument("--h0", type=float, default=0.1)
    q.add_argument("--levels", type=int, default=3)
    q.add_argument("--no-assert-cauchy", action="store_true")

    q = exp("curvilinear", "truncated integrals on the curvilinear triangle")
    q.add_argument("--beta0", type=float, default=0.75)
    q.add_argument("--epsilon", type=float, default=0.5)
    q.add_argument("--delta", type=_floats, default=None)

    q = exp("cusp", "finiteness table for power cusps")
    q.add_argument("--p", type=_floats, default=[1.5, 2.0, 3.0])
    q.add_argument("--beta", type=_floats, default=None)

    q = exp("sublevel", "sublevel-set chain for a convex test function")
    q.add_argument("--t", type=_floats, default=[0.05, 0.1, 0.2])
    q.add_argument("--gamma", type=float, default=1 / 3)

    q = exp("convex-refined", "normalised beta-integrals over convex polygons")
    q.add_argument("--beta", type=_floats, default=[0.25])

    exp("coarea", "collar coarea identity on a square and a hexagon")

    q = exp("exponent", "corner exponent and cap eigenvalue")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--theta", type=float, required=True)

    q = exp("sector-constant", "closed-form sector constant")
    q.add_argument("--theta", type=float, required=True)
    q.add_argument("--beta", type=float, required=True)

    q = sub.add_parser("solve", help="solve the torsion problem on a domain")
    q.add_argument("--domain", required=True)
    q.add_argument("--h", type=float, required=True)
    q.add_argument("--levels", type=int, default=2)
    q.add_argument("--grading", type=float, default=0.5)
    q.add_argument("--depth", type=int, default=0)
    q.add_argument("--out", required=True)

    q = sub.add_parser("beta-integral", help="integral of u^-beta from a saved field")
    q.add_argument("--field", required=True)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--csv", help="also write one row per refinement level")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "beta-integral":
            return _cmd_beta_integral(args)
        res = _run_experiment(args)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TorsionLabError, ValueError, OSError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.command in ("exponent", "sector-constant"):
        print(dumps17(res.rows[0]))
    if args.out:
        E.write_outputs(res, args.out)
    for c in res.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} {c['detail']}".rstrip())
    for n in res.notes:
        print(f"note: {n}")
    if not res.passed:
        return EXIT_CHECK
    if args.fail_on_divergent and _divergent(res):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
