"""Command line front end: solve, certify, oracle, export.

Problems arrive either as JSON files

    {"space": {"m": [...]},
     "form": {"edges": [[i, j, w], ...], "dirichlet": [i, ...]},
     "budget": {"p": 2.0 | "inf", "A": 1.0}}

or from the built-in constant-coefficient builders (path, grid2d, interval).
Solving writes `<out>.cert.json`, a deterministic JSON certificate whose
`valid` field is the conjunction of every individual check.  Exit codes:
0 valid certificate, 1 input error, 2 solver non-convergence, 3 converged
but certificate invalid, 4 certify mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .core_form import DirichletFormSpec, MeasuredSpace, build_grid2d, build_interval_fd, build_path
from .extremal_p1 import P1Options, solve_p1
from .extremal_pgt1 import (
    P_ONE_GUARD,
    LpBudget,
    SolveOptions,
    solve_p_gt_1,
    solve_p_inf,
)
from .oracle import SampleConfig, brute_force_sup


class CliError(Exception):
    pass


def _to_py(obj):
    if isinstance(obj, np.ndarray):
        return [_to_py(x) for x in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _to_py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_py(x) for x in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_to_py(obj), sort_keys=True, indent=2) + "\n"


def input_hash(problem: dict) -> str:
    blob = json.dumps(_to_py(problem), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_p(text):
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except (TypeError, ValueError):
        raise CliError(f'p must be a number or "inf", got {text!r}')


def problem_dict(space: MeasuredSpace, spec: DirichletFormSpec, budget: LpBudget) -> dict:
    return {
        "space": {"m": [float(x) for x in space.m]},
        "form": {
            "edges": [
                [int(i), int(j), float(w)]
                for i, j, w in zip(spec.edge_i, spec.edge_j, spec.edge_w)
            ],
            "dirichlet": [int(d) for d in spec.dirichlet_set],
        },
        "budget": budget.to_jsonable(),
    }


def load_problem(path: str):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read problem file: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"problem file is not valid JSON: {exc}")
    if not isinstance(raw, dict) or "space" not in raw or "form" not in raw:
        raise CliError('problem file needs "space" and "form" sections')
    try:
        m = raw["space"]["m"]
        edges = [(int(i), int(j), float(w)) for i, j, w in raw["form"]["edges"]]
        dirichlet = frozenset(int(d) for d in raw["form"].get("dirichlet", []))
        space = MeasuredSpace(m)
        spec = DirichletFormSpec(space.n, edges, dirichlet)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed problem file: {exc}")
    budget = None
    if "budget" in raw:
        try:
            budget = LpBudget(parse_p(raw["budget"]["p"]), float(raw["budget"]["A"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"malformed budget: {exc}")
    return space, spec, budget


def build_from_flags(args):
    if args.builder == "path":
        if args.n is None:
            raise CliError("--builder path needs --n")
        return build_path(args.n, grounded_ends=args.grounded)
    if args.builder == "grid2d":
        if args.nx is None or args.ny is None:
            raise CliError("--builder grid2d needs --nx and --ny")
        return build_grid2d(args.nx, args.ny, grounded_boundary=args.grounded)
    if args.builder == "interval":
        if args.n is None:
            raise CliError("--builder interval needs --n")
        return build_interval_fd(args.n)
    raise CliError(f"unknown builder {args.builder!r}")


def resolve_problem(args):
    """Builder flags or a problem file; flags override the file's budget."""
    if args.builder == "file" or (args.builder is None and args.problem):
        if not args.problem:
            raise CliError("--builder file needs a problem JSON path")
        space, spec, budget = load_problem(args.problem)
    else:
        if args.builder is None:
            raise CliError("give a problem file or pick --builder {path,grid2d,interval}")
        space, spec = build_from_flags(args)
        budget = None
    if args.p is not None or args.A is not None:
        if args.p is None or args.A is None:
            raise CliError("--p and --A must be given together")
        budget = LpBudget(parse_p(args.p), args.A)
    if budget is None:
        raise CliError("no budget: give --p and --A or a problem file with one")
    return space, spec, budget


def dispatch_solve(space, spec, budget, seed: int = 0, tol_I: float = 1e-8):
    """Route on p: inf is a shift, (1, inf) the J-minimization, else p = 1.

    Exponents within 1e-6 of 1 are numerically indistinguishable from p = 1
    and are routed there.
    """
    if budget.p == math.inf:
        return solve_p_inf(space, spec, budget, SolveOptions(seed=seed))
    if budget.p < P_ONE_GUARD:
        return solve_p1(space, spec, budget.A, P1Options(seed=seed, tol_I=tol_I))
    return solve_p_gt_1(space, spec, budget, SolveOptions(seed=seed))


def certificate_payload(result, problem: dict, oracle: dict | None = None) -> dict:
    cert = result.certificate
    payload = {
        "tool": {"name": "extremal-eigen", "version": __version__},
        "input_hash": input_hash(problem),
        "problem": problem,
        "budget": result.budget.to_jsonable(),
        "solver": result.solver,
        "seed": int(result.seed),
        "lambda": float(result.lam),
        "j_value": float(result.j_value),
        "u": [float(x) for x in result.u],
        "V": [float(x) for x in result.V],
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "checks": {c.name: c.to_jsonable() for c in cert.checks},
        "residuals": {k: float(v) for k, v in cert.residuals.items()},
        "valid": cert.valid,
        "oracle": oracle,
    }
    if result.bounds is not None:
        payload["bounds"] = _to_py(result.bounds)
    if result.solver == "p1":
        payload["I"] = cert.info["I"]
        payload["m_I"] = float(cert.info["m_I"])
        payload["tol_I"] = float(cert.info["tol_I"])
        payload["t_value"] = float(cert.info["t_value"])
        payload["vi_slack_min"] = float(cert.info["vi_slack_min"])
        payload["vi_slack_min_weak_form"] = float(cert.info["vi_slack_min_weak_form"])
        payload["complementarity"] = _to_py(cert.info["complementarity"])
        payload["regime_warning"] = cert.info["regime_warning"]
    return payload


def cmd_solve(args) -> int:
    space, spec, budget = resolve_problem(args)
    problem = problem_dict(space, spec, budget)
    result = dispatch_solve(space, spec, budget, seed=args.seed, tol_I=args.tol_i)
    payload = certificate_payload(result, problem)
    out_path = f"{args.out}.cert.json"
    with open(out_path, "w") as fh:
        fh.write(canonical_json(payload))
    status = "valid" if payload["valid"] else "INVALID"
    failed = [name for name, c in payload["checks"].items() if not c["passed"]]
    print(f"lambda = {result.lam:.12g}  certificate {status}  -> {out_path}")
    if failed:
        print("failed checks: " + ", ".join(sorted(failed)))
    if result.regime_warning:
        print(f"regime warning: {result.regime_warning}")
    if not result.converged:
        return 2
    return 0 if payload["valid"] else 3


def _resolve_from_problem_dict(problem: dict):
    m = problem["space"]["m"]
    edges = [(int(i), int(j), float(w)) for i, j, w in problem["form"]["edges"]]
    dirichlet = frozenset(int(d) for d in problem["form"]["dirichlet"])
    space = MeasuredSpace(m)
    spec = DirichletFormSpec(space.n, edges, dirichlet)
    budget = LpBudget.from_jsonable(problem["budget"])
    return space, spec, budget


def cmd_certify(args) -> int:
    try:
        with open(args.certificate) as fh:
            original = fh.read()
        recorded = json.loads(original)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read certificate: {exc}")
    space, spec, budget = _resolve_from_problem_dict(recorded["problem"])
    result = dispatch_solve(
        space, spec, budget,
        seed=int(recorded.get("seed", 0)),
        tol_I=float(recorded.get("tol_I", 1e-8)),
    )
    oracle = recorded.get("oracle")
    if oracle is not None:
        config = SampleConfig(
            seed=int(oracle["seed"]), count=int(oracle["count"]), strategy=oracle["strategy"]
        )
        best, _ = brute_force_sup(space, spec, budget, config, jobs=args.jobs)
        oracle = dict(oracle)
        oracle["best_lambda"] = float(best)
        oracle["gap"] = float(result.lam - best)
    regenerated = canonical_json(certificate_payload(result, recorded["problem"], oracle))
    if regenerated != original:
        print("certificate MISMATCH: re-solve does not reproduce the file")
        return 4
    print(f"certificate reproduced bit-stably; valid = {recorded['valid']}")
    return 0


def cmd_oracle(args) -> int:
    payload = None
    if args.cert:
        # the report lives inside the certificate, so sample its problem
        try:
            with open(args.cert) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read certificate: {exc}")
        space, spec, budget = _resolve_from_problem_dict(payload["problem"])
    else:
        space, spec, budget = resolve_problem(args)
    config = SampleConfig(seed=args.seed, count=args.count, strategy=args.strategy)
    best, _ = brute_force_sup(space, spec, budget, config, jobs=args.jobs)
    report = {
        "strategy": config.strategy,
        "count": config.count,
        "seed": config.seed,
        "best_lambda": float(best),
        "gap": None,
    }
    if payload is not None:
        report["gap"] = float(payload["lambda"]) - float(best)
        payload["oracle"] = report
        with open(args.cert, "w") as fh:
            fh.write(canonical_json(payload))
        print(f"oracle report attached to {args.cert}")
    print(canonical_json(report), end="")
    return 0


def cmd_export(args) -> int:
    try:
        with open(args.certificate) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read certificate: {exc}")
    m = payload["problem"]["space"]["m"]
    u = payload["u"]
    V = payload["V"]
    out = args.out or "export.csv"
    with open(out, "w") as fh:
        fh.write("index,m,u,V\n")
        for k in range(len(m)):
            fh.write(f"{k},{m[k]!r},{u[k]!r},{V[k]!r}\n")
    print(f"wrote {len(m)} rows -> {out}")
    return 0


def _add_problem_flags(sub):
    sub.add_argument("problem", nargs="?", help="problem JSON file (for --builder file)")
    sub.add_argument("--builder", choices=["path", "grid2d", "interval", "file"])
    sub.add_argument("--n", type=int, help="vertex count for path/interval builders")
    sub.add_argument("--nx", type=int)
    sub.add_argument("--ny", type=int)
    sub.add_argument("--grounded", action="store_true", help="pin the boundary to zero")
    sub.add_argument("--p", help='budget exponent in [1, inf]; "inf" allowed')
    sub.add_argument("--A", type=float, help="budget radius")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1, help="oracle worker processes")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extremal-eigen",
        description="maximize the first eigenvalue of L + V over the L^p ball",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="solve and write a certificate")
    _add_problem_flags(solve)
    solve.add_argument("--tol-i", dest="tol_i", type=float, default=1e-8,
                       help="coincidence threshold for the p = 1 solver")
    solve.add_argument("--out", default="out", help="certificate stem (<out>.cert.json)")

    certify = subs.add_parser("certify", help="re-solve and compare to a certificate")
    certify.add_argument("certificate")
    certify.add_argument("--jobs", type=int, default=1)

    oracle = subs.add_parser("oracle", help="brute-force lower bound on the supremum")
    _add_problem_flags(oracle)
    oracle.add_argument("--count", type=int, default=1000)
    oracle.add_argument("--strategy", default="random_sphere",
                        choices=["random_sphere", "corners", "dirichlet_simplex", "structured"])
    oracle.add_argument("--cert", help="certificate to attach the report to")

    export = subs.add_parser("export", help="write index,m,u,V columns as CSV")
    export.add_argument("certificate")
    export.add_argument("--out", help="CSV path (default export.csv)")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "certify": cmd_certify,
        "oracle": cmd_oracle,
        "export": cmd_export,
    }
    try:
        return handlers[args.command](args)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
