"""Command line interface.

Subcommands: validate, product, solve, oracle, learn, verify, sweep.  Every
command prints one JSON report (or writes it with --out); identical inputs
produce identical bytes unless --timing is set, which fills the otherwise
null timing field.

Exit codes: 0 ok, 2 usage, 3 unreadable or unparsable input, 4 validation or
construction failure, 5 solver non-convergence, 6 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .automata import (
    HoaError,
    complete_with_trap,
    is_complete,
    is_deterministic,
    parse_hoa,
)
from .learn import LearnConfig, train
from .mdp import MdpFormatError, load_mdp, validate
from .oracle import buchi_value
from .product import ProductError, ProductMdp, build_product
from .shaping import Mode, PayoffSpec, augment
from .solvers import ConvergenceError, evaluate_policy, greedy_policy, solve_optimal
from .verify import threshold_sweep, verify_instance

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INVALID = 4
EXIT_NOCONV = 5
EXIT_VERIFY = 6

DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


def _zeta(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("zeta must lie strictly between 0 and 1")
    return v


def _grid(text: str) -> tuple[float, ...]:
    return tuple(_zeta(part) for part in text.split(","))


def _read_automaton(args):
    a = parse_hoa(Path(args.hoa).read_text())
    if getattr(args, "trap_complete", False):
        a = complete_with_trap(a)
    if getattr(args, "assert_gfm", False):
        a = replace(a, gfm=True)
    return a


def _load_checked(path):
    """Load MDP JSON and refuse to compute on a semantically invalid model."""
    m = load_mdp(path)
    problems = [d for d in validate(m) if d.severity == "error"]
    if problems:
        raise ValueError(
            f"MDP failed validation with {len(problems)} error(s): "
            + "; ".join(d.message for d in problems[:3])
        )
    return m


def _values_by_name(p: ProductMdp, values) -> dict[str, float]:
    return {p.state_name(i): float(values[i]) for i in range(p.n_states)}


def _policy_by_name(p: ProductMdp, f) -> dict[str, str]:
    return {p.state_name(st): p.pair_name(st, f.choice[st]) for st in range(p.n_states)}


def _product_as_mdp_json(p: ProductMdp, zeta: float | None) -> dict:
    """Dynamics of the product (or its leaked augmentation) as MDP JSON.

    Rewards are not part of the MDP schema, so this is dynamics only.  Leak
    edges of one pair merge into a single edge to "t" carrying the symbol of
    the first accepting branch (the label function is per-triple, so mixed
    symbols cannot be kept apart).
    """
    m = p.mdp
    states = [p.state_name(i) for i in range(p.n_states)]
    actions = sorted({p.pair_name(st, k) for st in range(p.n_states) for k in range(len(p.pairs[st]))})
    transitions = []
    leak_any = False
    for st in range(p.n_states):
        for k, pair in enumerate(p.pairs[st]):
            act = p.pair_name(st, k)
            leak = 0.0
            leak_sym: int | None = None
            for b in pair.branches:
                prob = b.prob
                if zeta is not None and b.accepting:
                    prob = b.prob * zeta
                    leak += b.prob * (1.0 - zeta)
                    if leak_sym is None:
                        leak_sym = b.symbol
                transitions.append(
                    {
                        "from": states[st],
                        "action": act,
                        "to": states[b.succ],
                        "prob": prob,
                        "label": m.symbols[b.symbol],
                    }
                )
            if leak > 0.0:
                leak_any = True
                transitions.append(
                    {
                        "from": states[st],
                        "action": act,
                        "to": "t",
                        "prob": leak,
                        "label": m.symbols[leak_sym],
                    }
                )
    if leak_any:
        states.append("t")
        actions = sorted(set(actions) | {"stop"})
        transitions.append(
            {"from": "t", "action": "stop", "to": "t", "prob": 1.0, "label": m.symbols[0]}
        )
    return {
        "states": states,
        "actions": actions,
        "alphabet": list(m.symbols),
        "initial": states[p.initial],
        "transitions": transitions,
    }


def cmd_validate(args) -> tuple[dict, int]:
    m = load_mdp(args.mdp)
    diags = validate(m)
    result: dict = {
        "diagnostics": [asdict(d) for d in diags],
        "errors": sum(d.severity == "error" for d in diags),
        "warnings": sum(d.severity == "warning" for d in diags),
        "alphabet_match": None,
    }
    code = EXIT_INVALID if result["errors"] else EXIT_OK
    if args.hoa:
        a = _read_automaton(args)
        result["automaton"] = {
            "states": a.n_states,
            "transitions": len(a.transitions),
            "accepting": len(a.accepting),
            "deterministic": is_deterministic(a),
            "complete": is_complete(a),
            "gfm": a.gfm,
        }
        result["alphabet_match"] = set(m.symbols) == set(a.symbols)
        if not result["alphabet_match"]:
            code = EXIT_INVALID
    return result, code


def cmd_product(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    p = build_product(m, a)
    result = {
        "states": p.n_states,
        "pairs": p.n_pairs,
        "accepting_branches": p.accepting_branch_count,
        "gfm_caveat": p.gfm_caveat,
        "state_names": [p.state_name(i) for i in range(p.n_states)],
    }
    if args.export:
        data = _product_as_mdp_json(p, args.zeta)
        Path(args.export).write_text(json.dumps(data, indent=2) + "\n")
        result["export"] = args.export
        result["export_states"] = len(data["states"])
    return result, EXIT_OK


def cmd_solve(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    p = build_product(m, a)
    model = augment(p, PayoffSpec(Mode(args.mode), args.zeta))
    v = solve_optimal(model, tol=args.tol, max_iter=args.max_iter)
    f = greedy_policy(model, v.values)
    result = {
        "mode": args.mode,
        "zeta": args.zeta,
        "iterations": v.iterations,
        "residual": v.residual,
        "value_at_initial": v.at_initial(),
        "values": _values_by_name(p, v.values),
        "policy": _policy_by_name(p, f),
        "gfm_caveat": p.gfm_caveat,
    }
    return result, EXIT_OK


def cmd_oracle(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    p = build_product(m, a)
    res = buchi_value(p)
    result = {
        "mecs": [
            {"states": [p.state_name(i) for i in ec.states], "accepting": ec.accepting}
            for ec in res.mecs
        ],
        "accepting_mecs": list(res.accepting_mecs),
        "psat_at_initial": res.at_initial(),
        "psat": _values_by_name(p, res.values),
        "policy": _policy_by_name(p, res.strategy),
        "lower_bound_only": res.lower_bound_only,
    }
    return result, EXIT_OK


def cmd_learn(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    p = build_product(m, a)
    model = augment(p, PayoffSpec(Mode(args.mode), args.zeta))
    cfg = LearnConfig(
        episodes=args.episodes,
        max_steps=args.max_steps,
        alpha0=args.alpha0,
        epsilon0=args.epsilon0,
        epsilon_final=args.epsilon_final,
        seed=args.seed,
        optimistic=args.optimistic,
    )
    out = train(model, cfg)
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "total_reward", "epsilon"])
            w.writerows(out.curve)
    tail = out.curve[-1000:]
    init = p.initial
    result = {
        "mode": args.mode,
        "zeta": args.zeta,
        "episodes": args.episodes,
        "seed": args.seed,
        "policy": _policy_by_name(p, out.strategy),
        "q_at_initial": {
            p.pair_name(init, k): out.table.q[init][k]
            for k in range(len(p.pairs[init]))
        },
        "visits_at_initial": {
            p.pair_name(init, k): out.table.visits[init][k]
            for k in range(len(p.pairs[init]))
        },
        "mean_return_last_1000": float(np.mean([c[1] for c in tail])),
        "final_epsilon": out.curve[-1][2],
    }
    if args.curve:
        result["curve"] = args.curve
    return result, EXIT_OK


def cmd_verify(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    report = verify_instance(
        m,
        a,
        zetas=tuple(args.zeta) if args.zeta else (0.5, 0.9),
        n_random=args.policies,
        seed=args.seed,
        tail_episodes=args.tail_episodes,
    )
    return asdict(report), EXIT_OK if report.passed else EXIT_VERIFY


def cmd_sweep(args) -> tuple[dict, int]:
    m = _load_checked(args.mdp)
    a = _read_automaton(args)
    report = threshold_sweep(m, a, args.grid)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["zeta", "policy", "psat_policy", "psat_opt", "is_optimal"])
            for r in report.rows:
                w.writerow([r.zeta, r.policy, r.psat_policy, r.psat_opt, r.is_optimal])
    result = asdict(report)
    if args.csv:
        result["csv"] = args.csv
    return result, EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buchirl",
        description="Reward shaping for Buchi objectives on labelled MDPs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument(
        "--timing", action="store_true", help="fill the timing field (breaks byte-identity)"
    )

    auto = argparse.ArgumentParser(add_help=False)
    auto.add_argument(
        "--trap-complete",
        action="store_true",
        help="complete the automaton with a rejecting trap before use",
    )
    auto.add_argument(
        "--assert-gfm",
        action="store_true",
        help="trust the automaton to be good for MDPs",
    )

    s = sub.add_parser("validate", parents=[common, auto], help="check MDP JSON, optionally a pair")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("product", parents=[common, auto], help="build the product")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.add_argument("--zeta", type=_zeta, help="export the leaked dynamics instead of the raw product")
    s.add_argument("--export", help="write the (augmented) product as MDP JSON here")
    s.set_defaults(func=cmd_product)

    s = sub.add_parser("solve", parents=[common, auto], help="optimal values of one payoff view")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.add_argument("--zeta", type=_zeta, required=True)
    s.add_argument("--mode", choices=[m.value for m in Mode], default="total")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10**6)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("oracle", parents=[common, auto], help="independent Buchi value")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("learn", parents=[common, auto], help="tabular Q-learning")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.add_argument("--zeta", type=_zeta, required=True)
    s.add_argument("--mode", choices=["total", "reach"], default="total")
    s.add_argument("--episodes", type=int, default=50_000)
    s.add_argument("--max-steps", type=int, default=1000)
    s.add_argument("--alpha0", type=float, default=1.0)
    s.add_argument("--epsilon0", type=float, default=0.3)
    s.add_argument("--epsilon-final", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--optimistic", action="store_true")
    s.add_argument("--curve", help="write the learning curve CSV here")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("verify", parents=[common, auto], help="cross-check the payoff views")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.add_argument("--zeta", type=_zeta, action="append", help="repeatable; default 0.5 and 0.9")
    s.add_argument("--policies", type=int, default=20, help="random strategies per zeta")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tail-episodes", type=int, default=0, help="Monte Carlo tail check sample size")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[common, auto], help="greedy policy across a zeta grid")
    s.add_argument("--mdp", required=True)
    s.add_argument("--hoa", required=True)
    s.add_argument("--grid", type=_grid, default=DEFAULT_GRID, help="comma-separated zetas")
    s.add_argument("--csv", help="write sweep rows as CSV here")
    s.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    start = time.perf_counter()
    try:
        result, code = args.func(args)
    except (MdpFormatError, HoaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (ProductError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    elapsed = time.perf_counter() - start
    report = {
        "command": args.command,
        "inputs": {"mdp": getattr(args, "mdp", None), "hoa": getattr(args, "hoa", None)},
        "config": {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in {"func", "command", "mdp", "hoa", "out", "timing"}
        },
        "result": result,
        "timing": round(elapsed, 6) if args.timing else None,
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
