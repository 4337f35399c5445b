"""Command-line front end: ``gen``, ``run`` and ``verify``.

Reports are canonical JSON (sorted keys, rationals as ``"p/q"``), so the same
command on the same instance and seed produces identical bytes.  Wall time
is only included with ``--timing``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from math import prod

from ._numeric import log2_lower
from .bicriteria import pentagon_fixture, two_alg
from .core import (
    BudgetError,
    Instance,
    LightnessError,
    ParetoTSPError,
    dump_json,
    format_fraction,
    parse_fraction,
    validate,
    weight_of,
)
from .decompose import (
    WeightedCycleCover,
    best_decomposition_bruteforce,
    decompose_deterministic,
    decompose_randomized,
    ratio_for,
    tournament_fixture,
)
from .generators import euclidean_instance, gamma_instance, metric_instance, random_instance
from .maxtsp import DEFAULT_MAX_BETA_GRID, DEFAULT_MAX_K_CARD, max_atsp, max_stsp
from .minatsp import min_atsp
from .oracle import exact_tour_pareto
from .pareto import MAX, MIN, ZERO, ParetoSet, achieved_ratio, verify_approx_pareto

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET, EXIT_LIGHTNESS = 0, 1, 2, 3, 4

TOUR_ALGORITHMS = ("max-atsp", "max-stsp", "two-alg", "min-atsp")
COVER_ALGORITHMS = ("decompose-rand", "decompose-det")
BRUTE_DECOMPOSITIONS = 10**6


class UsageError(ParetoTSPError):
    pass


def jsonable(x):
    """Recursively turn Fractions into ``"p/q"`` and tuples into lists."""
    if isinstance(x, bool) or x is None or isinstance(x, (str, float)):
        return x
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, int):
        return int(x)
    if x is ZERO:
        return "ZERO"
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(data, out: str | None) -> None:
    text = dump_json(jsonable(data))
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    with open(path) as fh:
        data = json.load(fh)
    if data.get("standalone_cycle_cover"):
        return WeightedCycleCover.from_json(data)
    return Instance.from_json(data)


# gen

def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "pentagon":
        data = pentagon_fixture().to_json()
    elif kind == "tournament":
        data = tournament_fixture(args.k, args.eps, not args.undirected).to_json()
    else:
        if args.n is None:
            raise UsageError(f"gen {kind} needs --n")
        if kind == "random":
            inst = random_instance(args.n, args.k, args.seed, not args.undirected,
                                   args.low, args.high)
        elif kind == "metric":
            if args.undirected:
                raise UsageError("metric instances are directed; use euclidean")
            inst = metric_instance(args.n, args.k, args.seed, max(1, args.low), args.high)
        elif kind == "gamma":
            if args.gamma is None:
                raise UsageError("gen gamma needs --gamma")
            inst = gamma_instance(args.n, args.k, args.seed, args.gamma, None, args.high)
        else:
            inst = euclidean_instance(args.n, args.k, args.seed, not args.undirected)
        data = inst.to_json()
    _emit(data, args.out)
    return EXIT_OK


# run

def _solutions(ps: ParetoSet) -> list:
    return [{"edges": [list(e) for e in edges], "weight": list(w)} for edges, w in ps.items]


def target_alpha(algorithm: str, n: int, eps: Fraction, gamma: Fraction, directed: bool) -> Fraction:
    """Approximation factor a run of ``algorithm`` is verified against."""
    if algorithm == "max-atsp":
        return Fraction(1, 2) - eps
    if algorithm == "max-stsp":
        return Fraction(2, 3) - eps
    if algorithm == "two-alg":
        return Fraction(1, 3)
    if algorithm == "min-atsp":
        if gamma == 1:
            return log2_lower(n) + eps
        return 1 / (1 - gamma) + eps
    return ratio_for(directed, eps)


def _sense(algorithm: str) -> str:
    return MIN if algorithm == "min-atsp" else MAX


def _run_tours(args, inst: Instance, params: dict) -> dict:
    alg = args.algorithm
    eps = params["eps"]
    if alg in ("max-atsp", "max-stsp"):
        if (alg == "max-atsp") != inst.directed:
            raise UsageError(f"{alg} needs a {'directed' if alg == 'max-atsp' else 'undirected'} instance")
        fn = max_atsp if alg == "max-atsp" else max_stsp
        ps = fn(inst, eps, max_k_cardinality=args.max_k_card, max_beta_grid=args.max_beta_grid,
                cc_mode=args.cc_mode, seed=args.seed)
        rep = {"solutions": _solutions(ps), "certificates": [],
               "meta": {k: ps.meta[k] for k in ("candidates", "guarantee", "k_bound") if k in ps.meta}}
        if any(ps.meta["truncated"].values()):
            rep["truncated"] = ps.meta["truncated"]
    elif alg == "two-alg":
        if inst.directed or inst.k < 2:
            raise UsageError("two-alg needs an undirected instance with k >= 2")
        res = two_alg(inst)
        ps = ParetoSet([(tuple(res.tour), res.weight)], MAX)
        rep = {"solutions": _solutions(ps), "certificates": [res.certificate]}
    else:
        if not inst.directed:
            raise UsageError("min-atsp needs a directed instance")
        gamma = params["gamma"]
        ps = min_atsp(inst, eps, gamma, cc_mode=args.cc_mode)
        m = ps.meta
        rep = {"solutions": _solutions(ps), "certificates": m["certificates"],
               "meta": {k: m[k] for k in ("eps_prime", "Q", "layer_sizes", "max_vertices",
                                          "depth_limit", "guarantee")}}
    if args.oracle == "on":
        ref = exact_tour_pareto(inst, _sense(alg))
        r = achieved_ratio(ps, ref, _sense(alg))
        rep["oracle"] = {"achieved_ratio": r, "reference_size": len(ref)}
    return rep


def _decomposition_report(C: WeightedCycleCover, dec) -> dict:
    tot = C.total()
    ratio = min([Fraction(x, t) for x, t in zip(dec.weight, tot) if t > 0] + [Fraction(1)])
    return {"solutions": [{"edges": [list(e) for e in dec.edges], "weight": list(dec.weight)}],
            "certificates": [{"removed": [list(e) for e in dec.removed], "method": dec.method,
                              "rounds": dec.rounds, "total": list(tot), "kept_ratio": ratio}]}


def _run_cover(args, C: WeightedCycleCover, params: dict) -> dict:
    if args.algorithm == "decompose-rand":
        dec = decompose_randomized(C, params["eps"], rng_seed=args.seed)
    else:
        dec = decompose_deterministic(C, params["eps"])
    rep = _decomposition_report(C, dec)
    if args.oracle == "on":
        if prod(len(c) for c in C.cycles) > BRUTE_DECOMPOSITIONS:
            raise BudgetError("too many decompositions for the brute-force oracle")
        _, best = best_decomposition_bruteforce(C)
        rep["oracle"] = {"achieved_ratio": rep["certificates"][0]["kept_ratio"], "best_ratio": best}
    return rep


def _digest(obj) -> str:
    if isinstance(obj, Instance):
        return obj.digest()
    import hashlib
    return hashlib.sha256(dump_json(obj.to_json()).encode()).hexdigest()


def cmd_run(args) -> int:
    obj = _load(args.instance)
    alg = args.algorithm
    eps = parse_fraction(args.eps)
    params = {"eps": eps, "seed": args.seed, "cc_mode": args.cc_mode}
    t0 = time.perf_counter()
    if alg in COVER_ALGORITHMS:
        if not isinstance(obj, WeightedCycleCover):
            raise UsageError(f"{alg} needs a standalone cycle cover file")
        body = _run_cover(args, obj, params)
        directed, n = obj.directed, len(obj.vertices())
    else:
        if isinstance(obj, WeightedCycleCover):
            raise UsageError(f"{alg} needs an instance file")
        if alg == "min-atsp":
            params["gamma"] = (parse_fraction(args.gamma) if args.gamma is not None
                               else obj.gamma or Fraction(1))
        if alg in ("max-atsp", "max-stsp"):
            params["max_k_card"] = args.max_k_card
            params["max_beta_grid"] = args.max_beta_grid
        body = _run_tours(args, obj, params)
        directed, n = obj.directed, obj.n
    report = {"algorithm": alg, "instance_digest": _digest(obj), "parameters": params,
              "target_alpha": target_alpha(alg, n, eps, params.get("gamma", Fraction(1)), directed),
              **body}
    if args.timing:
        report["wall_time"] = round(time.perf_counter() - t0, 6)
    _emit(report, args.out)
    return EXIT_OK


# verify

def _check_solutions(report: dict, inst: Instance):
    """Recompute every claimed solution; return (weights, counterexample)."""
    weights = []
    for i, sol in enumerate(report.get("solutions", [])):
        edges = [tuple(e) for e in sol["edges"]]
        rep = validate(edges, "tour", inst)
        if not rep:
            return None, {"solution": i, "reason": rep.reason}
        actual = weight_of(inst, edges)
        claimed = tuple(int(x) for x in sol["weight"])
        if claimed != tuple(actual):
            return None, {"solution": i, "claimed": claimed, "actual": actual}
        weights.append(actual)
    if not weights:
        return None, {"reason": "report has no solutions"}
    return weights, None


def _verify_cover(report: dict, C: WeightedCycleCover) -> dict:
    eps = parse_fraction(report["parameters"]["eps"])
    alpha = ratio_for(C.directed, eps)
    sol = report["solutions"][0]
    kept = {tuple(e) if C.directed else tuple(sorted(e)) for e in sol["edges"]}
    if not kept <= set(C.edges()):
        return {"ok": False, "alpha": alpha, "counterexample": {"reason": "edge outside the cover"}}
    if any(set(cyc) <= kept for cyc in C.cycles):
        return {"ok": False, "alpha": alpha, "counterexample": {"reason": "a cycle survived intact"}}
    w = C.weight_of(kept)
    if tuple(int(x) for x in sol["weight"]) != tuple(w):
        return {"ok": False, "alpha": alpha,
                "counterexample": {"claimed": sol["weight"], "actual": w}}
    bad = [i for i, (x, t) in enumerate(zip(w, C.total())) if x < alpha * t]
    return {"ok": not bad, "alpha": alpha,
            "counterexample": {"coordinate": bad[0], "kept": w, "total": C.total()} if bad else None}


def cmd_verify(args) -> int:
    with open(args.report) as fh:
        report = json.load(fh)
    obj = _load(args.instance)
    alg = report.get("algorithm")
    if alg not in TOUR_ALGORITHMS + COVER_ALGORITHMS:
        raise UsageError(f"unknown algorithm in report: {alg!r}")
    if report.get("instance_digest") != _digest(obj):
        raise UsageError("report was produced for a different instance")
    if alg in COVER_ALGORITHMS:
        verdict = _verify_cover(report, obj)
    else:
        weights, bad = _check_solutions(report, obj)
        p = report["parameters"]
        eps = parse_fraction(p["eps"])
        gamma = parse_fraction(p.get("gamma", "1/1"))
        alpha = target_alpha(alg, obj.n, eps, gamma, obj.directed)
        if bad is not None:
            verdict = {"ok": False, "alpha": alpha, "counterexample": bad}
        else:
            ref = exact_tour_pareto(obj, _sense(alg))
            v = verify_approx_pareto(weights, ref, alpha, _sense(alg))
            verdict = {"ok": v.ok, "alpha": alpha,
                       "achieved_ratio": achieved_ratio(weights, ref, _sense(alg)),
                       "counterexample": None if v.ok else {"uncovered": v.counterexample}}
    _emit(verdict, args.out)
    return EXIT_OK if verdict["ok"] else EXIT_FAIL


# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pareto-tsp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance or fixture")
    g.add_argument("kind", choices=["random", "metric", "gamma", "euclidean", "tournament", "pentagon"])
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gamma")
    g.add_argument("--eps", default="1/8")
    g.add_argument("--low", type=int, default=0)
    g.add_argument("--high", type=int, default=20)
    g.add_argument("--undirected", action="store_true")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm and print a report")
    r.add_argument("algorithm", choices=TOUR_ALGORITHMS + COVER_ALGORITHMS)
    r.add_argument("instance")
    r.add_argument("--eps", default="1/4")
    r.add_argument("--gamma")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-k-card", type=int, default=DEFAULT_MAX_K_CARD)
    r.add_argument("--max-beta-grid", type=int, default=DEFAULT_MAX_BETA_GRID)
    r.add_argument("--cc-mode", choices=["exact", "scalarize"], default="exact")
    r.add_argument("--oracle", choices=["on", "off"], default="off")
    r.add_argument("--timing", action="store_true", help="include wall time (breaks byte identity)")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a report against the exact oracle")
    v.add_argument("report")
    v.add_argument("instance")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 <= getattr(args, "seed", 0) < 2**64:
        print("error: seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except LightnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIGHTNESS
    except BudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParetoTSPError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
