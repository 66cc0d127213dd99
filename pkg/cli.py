#!/usr/bin/env python3
"""
cli.py – Command-line driver for coalition structure search experiments.

Usage:
    python cli.py count --agents 10
    python cli.py search --gen singleton --agents 10 --alg css1 --budget 513
    python cli.py search --game my_game.txt --alg exhaustive
    python cli.py bound-curve --agents 10 --out output/bound_curve_10.csv
    python cli.py gen-adversarial --gen level-tight:6 --agents 8 --out witness.txt
    python cli.py oracle --agents 5
    python cli.py minimality --agents 4
    python cli.py protocol-sim --gen singleton --agents 4 --rounds 1000 --seed 1
    python cli.py verify --level quick

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
CSV goes to stdout unless --out/--trace names a file.
"""
import argparse
import os
import sys
import time
from dataclasses import dataclass

import pandas as pd

from adversarial import GENERATORS, make_game, parse_generator
from bounds import (
    ORACLE_MAX_AGENTS,
    BOUND_VARIANTS,
    bound_after_level,
    bottom_two_nodes,
    css1_checkpoint_node_sets,
    css1_bound_staircase,
    minimality_check,
    staircase_bound_at,
    worst_case_ratio,
)
from game_model import MAX_AGENTS, CoalitionError, Game, SearchCapError, load_game, save_game
from partition_enum import bell, enumerate_all, enumerate_level
from protocol_sim import (
    BOTTOM_TWO_PHASE,
    PAYOFF_SCHEMES,
    AgentStrategy,
    InspectionParams,
    exact_catch_rate,
    inspection_equilibrium,
    simulate_rounds,
)
from reporting import (
    bound_curve_frame,
    count_frame,
    format_k,
    format_result,
    format_structure,
    frame_to_csv_text,
    trace_frame,
    write_csv,
)
from search import ALGORITHMS, Budget, run_algorithm
from verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
ENUMERATE_MAX_NODES = 10_000_000


class UsageError(CoalitionError):
    pass


# ── Configuration ──────────────────────────────────────────────────
@dataclass
class RunConfig:
    command: str
    agents: int | None = None
    algorithm: str = "css1"
    budget: int | None = None
    seed: int | None = None
    game_path: str | None = None
    generator: str | None = None
    out: str | None = None
    threads: int = 1
    time_limit: float | None = None
    shift: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            command=args.command,
            agents=getattr(args, "agents", None),
            algorithm=getattr(args, "alg", "css1"),
            budget=getattr(args, "budget", None),
            seed=getattr(args, "seed", None),
            game_path=getattr(args, "game", None),
            generator=getattr(args, "gen", None),
            out=getattr(args, "out", None) or getattr(args, "trace", None),
            threads=getattr(args, "threads", 1),
            time_limit=getattr(args, "time_limit", None),
            shift=getattr(args, "shift", False),
        )

    def load_game(self, verbose: bool = True) -> tuple[Game, int | None]:
        """The game named by --game or --gen (argparse keeps them exclusive)."""
        if self.game_path is not None:
            return load_game(self.game_path, shift=self.shift, verbose=verbose), None
        if self.agents is None:
            raise CoalitionError("--gen needs --agents")
        game, expected = make_game(self.generator, self.agents)
        if verbose:
            print(f"[game] Generated {self.generator} game, a={self.agents}", file=sys.stderr)
        return game, expected


def _emit(frame, out: str | None) -> None:
    if out:
        write_csv(frame, out)
        print(f"[output] Wrote {len(frame)} rows to {out}", file=sys.stderr)
    else:
        sys.stdout.write(frame_to_csv_text(frame))


def _check_cap(a: int, cap: int = MAX_AGENTS) -> None:
    if not 1 <= a <= cap:
        raise UsageError(f"--agents must be in [1, {cap}], got {a}")


# ── Subcommands ──────────────────────────────────────────────────
def cmd_count(args) -> int:
    _check_cap(args.agents)
    _emit(count_frame(args.agents, with_fraction=args.fraction), args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    _check_cap(args.agents)
    total = bell(args.agents)
    if args.level is None and total > ENUMERATE_MAX_NODES:
        raise SearchCapError(f"{total} structures at a={args.agents}; pass --level")
    nodes = enumerate_all(args.agents) if args.level is None else enumerate_level(args.agents, args.level)
    for cs in nodes:
        print(format_structure(cs))
    return EXIT_OK


def cmd_search(args) -> int:
    cfg = RunConfig.from_args(args)
    game, _ = cfg.load_game()
    stop = None
    if cfg.time_limit is not None:
        deadline = time.monotonic() + cfg.time_limit
        stop = lambda: time.monotonic() > deadline   # noqa: E731
    kwargs = {} if cfg.algorithm == "exhaustive" else {"stop": stop, "threads": cfg.threads}
    budget = Budget(cfg.budget) if cfg.budget is not None else None
    result = run_algorithm(cfg.algorithm, game, budget, verbose=args.verbose, **kwargs)
    if cfg.out:
        write_csv(trace_frame(result), cfg.out)
        print(f"[output] Wrote trace ({len(result.checkpoints)} checkpoints) to {cfg.out}",
              file=sys.stderr)
    print(format_result(result))
    return EXIT_OK


def cmd_bound_curve(args) -> int:
    _check_cap(args.agents)
    if args.agents < 2:
        raise UsageError("the bound curve needs at least two agents")
    _emit(bound_curve_frame(args.agents, with_splitting=not args.no_splitting), args.out)
    return EXIT_OK


def cmd_gen_adversarial(args) -> int:
    cfg = RunConfig.from_args(args)
    name, _ = parse_generator(cfg.generator)
    game, expected = cfg.load_game(verbose=False)
    header = f"generator {cfg.generator}, a={cfg.agents}"
    if expected is not None:
        header += f", expected ratio {expected}"
    save_game(game, cfg.out, header=header)
    print(f"[output] Wrote {name} game (a={cfg.agents}) to {cfg.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    _check_cap(args.agents, ORACLE_MAX_AGENTS)
    a = args.agents
    if a < 2:
        raise UsageError("the oracle needs at least two agents")
    stair = css1_bound_staircase(a)
    rows = []
    for n, nodes in css1_checkpoint_node_sets(a):
        oracle = worst_case_ratio(a, nodes, verbose=args.verbose)
        level = min(nodes.levels - {1, 2}, default=None)
        variants = {v: (bound_after_level(a, level, v) if level is not None and level > 3 else "")
                    for v in BOUND_VARIANTS}
        rows.append({"a": a, "checkpoint": nodes.label, "n": n,
                     "closed_form": format_k(staircase_bound_at(stair, n)),
                     "oracle": format_k(oracle) if oracle is not None else "unbounded",
                     **{f"variant_{v}": variants[v] for v in BOUND_VARIANTS}})
    if args.drop_one:
        nodes = bottom_two_nodes(a)
        omitted = next(cs for cs in nodes if cs.level == 2)
        oracle = worst_case_ratio(a, nodes.without(omitted))
        rows.append({"a": a, "checkpoint": f"bottom-two minus {format_structure(omitted)}",
                     "n": nodes.size() - 1, "closed_form": "",
                     "oracle": format_k(oracle) if oracle is not None else "unbounded",
                     **{f"variant_{v}": "" for v in BOUND_VARIANTS}})
    _emit(pd.DataFrame(rows), args.out)
    return EXIT_OK


def cmd_minimality(args) -> int:
    verdict = minimality_check(args.agents, args.mode)
    if verdict.mode == "exhaustive":
        print(f"a={verdict.a}: {verdict.subsets_checked} subsets checked, "
              f"{len(verdict.covering_sets)} cover every coalition")
    else:
        counts = sorted(verdict.min_replacements.values(), key=lambda v: (v is None, v))
        print(f"a={verdict.a}: {len(counts)} level-2 nodes, fewest replacements "
              f"{counts[0] if counts else '-'}")
    print("minimal" if verdict.ok else "NOT minimal")
    return EXIT_OK if verdict.ok else EXIT_VERIFY_FAILED


def _parse_strategy(text: str, audit_prob: float, params: InspectionParams) -> AgentStrategy:
    kind, _, arg = text.partition(":")
    try:
        fraction = float(arg) if arg else 0.0
    except ValueError:
        raise UsageError(f"strategy fraction must be a number, got {arg!r}") from None
    if kind == "equilibrium":
        p_audit, q_search = inspection_equilibrium(params)
        return AgentStrategy("shirk", fraction=fraction, search_prob=q_search,
                             audit_prob=p_audit)
    if kind == "shirk":
        return AgentStrategy("shirk", fraction=fraction, audit_prob=audit_prob)
    if arg:
        raise UsageError(f"strategy {kind!r} takes no argument")
    return AgentStrategy(kind, audit_prob=audit_prob)


def cmd_protocol_sim(args) -> int:
    cfg = RunConfig.from_args(args)
    game, _ = cfg.load_game()
    params = InspectionParams(args.penalty, args.c_search, args.c_audit)
    k = game.a
    texts = args.strategy or ["truthful"]
    if len(texts) == 1:
        texts = texts * k
    if len(texts) != k:
        raise UsageError(f"give one --strategy or one per agent ({k}), got {len(texts)}")
    strategies = [_parse_strategy(t, args.audit_prob, params) for t in texts]
    stats = simulate_rounds(game, k, strategies, params, args.rounds, cfg.seed,
                            phase=args.phase, scheme=args.scheme, verbose=args.verbose)
    if cfg.out:
        write_csv(stats.rounds, cfg.out)
        print(f"[output] Wrote {len(stats.rounds)} rounds to {cfg.out}", file=sys.stderr)
    exact = exact_catch_rate(game, k, strategies, args.phase)
    print(f"  Equilibrium p_audit:  {stats.p_audit:.4f}")
    print(f"  Equilibrium q_search: {stats.q_search:.4f}")
    print(f"  Audit rate:           {stats.audit_rate:.4f}")
    print(f"  Catch rate:           {stats.catch_rate:.4f} (exact {exact:.4f})")
    print(f"  Deviation rate:       {stats.deviation_rate:.4f}")
    print(f"  Mean welfare:         {stats.mean_welfare:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_suite(args.level, verbose=True)
    if args.report:
        folder = os.path.dirname(args.report)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(args.report, "w") as f:
            f.write(report.to_json() + "\n")
    for note in report.notes:
        print(f"[verify] adjudicated: a={note['a']} l={note['l']} matches {note['adjudicated']}")
    if report.ok:
        print(f"[verify] {args.level}: all {len(report.checks)} checks passed")
        return EXIT_OK
    print(report.to_json())
    return EXIT_VERIFY_FAILED


# ── Argument parsing ─────────────────────────────────────────────
def _add_game_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--game", type=str, help="Game file (see game_model.py for the format)")
    src.add_argument("--gen", type=str,
                     help=f"Generator: {', '.join(sorted(GENERATORS))} "
                          "(level-tight:<l>, uniform-random:<seed>)")
    p.add_argument("--agents", type=int, help="Agent count for --gen")
    p.add_argument("--shift", action="store_true",
                   help="Shift negative values to zero instead of rejecting the file")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description="Anytime coalition structure search")
    p.add_argument("--verbose", action="store_true", help="Print progress lines")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("count", help="Coalition, structure and n_min counts for 1..a")
    c.add_argument("--agents", type=int, required=True)
    c.add_argument("--fraction", action="store_true", help="Add n_min/bell(a) as p/q")
    c.add_argument("--out", type=str)
    c.set_defaults(func=cmd_count)

    e = sub.add_parser("enumerate", help="List coalition structures")
    e.add_argument("--agents", type=int, required=True)
    e.add_argument("--level", type=int)
    e.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("search", help="Run one search algorithm")
    _add_game_source(s)
    s.add_argument("--alg", choices=sorted(ALGORITHMS), default="css1")
    s.add_argument("--budget", type=int, help="Node budget (default: unlimited)")
    s.add_argument("--trace", type=str, help="Write the checkpoint trace CSV here")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--time-limit", type=float, help="Stop after this many seconds")
    s.set_defaults(func=cmd_search)

    b = sub.add_parser("bound-curve", help="CSS-1 staircase and splitting bad-case curve")
    b.add_argument("--agents", type=int, required=True)
    b.add_argument("--no-splitting", action="store_true")
    b.add_argument("--out", type=str)
    b.set_defaults(func=cmd_bound_curve)

    g = sub.add_parser("gen-adversarial", help="Write a generated game file")
    g.add_argument("--gen", type=str, required=True)
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--out", type=str, required=True)
    g.set_defaults(func=cmd_gen_adversarial)

    o = sub.add_parser("oracle", help="Worst-case ratio at every CSS-1 checkpoint")
    o.add_argument("--agents", type=int, required=True)
    o.add_argument("--drop-one", action="store_true",
                   help="Also evaluate the bottom two levels minus one level-2 node")
    o.add_argument("--out", type=str)
    o.set_defaults(func=cmd_oracle)

    m = sub.add_parser("minimality", help="Is the bottom-two search the only minimal one?")
    m.add_argument("--agents", type=int, default=4)
    m.add_argument("--mode", choices=["exhaustive", "spot"], default="exhaustive")
    m.set_defaults(func=cmd_minimality)

    ps = sub.add_parser("protocol-sim", help="Simulate the audited distributed search")
    _add_game_source(ps)
    ps.add_argument("--rounds", type=int, default=1000)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--penalty", type=float, default=10.0)
    ps.add_argument("--c-search", type=float, default=1.0)
    ps.add_argument("--c-audit", type=float, default=1.0)
    ps.add_argument("--audit-prob", type=float, default=1.0,
                    help="Per-target audit probability (at most 1/k with one audit per round)")
    ps.add_argument("--strategy", type=str, nargs="+",
                    help="truthful | shirk[:f] | fabricate | equilibrium[:f], one or one per agent")
    ps.add_argument("--phase", type=str, default=BOTTOM_TWO_PHASE,
                    help="bottom-two or level-<l>")
    ps.add_argument("--scheme", choices=PAYOFF_SCHEMES, default=PAYOFF_SCHEMES[0])
    ps.add_argument("--out", type=str, help="Per-round CSV")
    ps.set_defaults(func=cmd_protocol_sim)

    v = sub.add_parser("verify", help="Run the self-check suites")
    v.add_argument("--level", choices=SUITES, default="quick")
    v.add_argument("--report", type=str, help="Write the JSON report here")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CoalitionError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
