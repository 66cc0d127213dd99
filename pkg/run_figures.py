#!/usr/bin/env python3
"""
run_figures.py – Regenerate the count table, bound curves and baseline traces.

Writes into output/:
  counts.csv                 a, coalitions, structures, n_min, fraction for a = 1..25
  bound_curve_<a>.csv        CSS-1 staircase + splitting bad-case curve
  traces_singleton_<a>.csv   css1 / splitting / merging traces on the singleton game
  summary.md                 the tables above as markdown

Usage:
    python run_figures.py
    python run_figures.py --agents 8 10 12 --trace-agents 10
"""
import argparse
import os
import time

import pandas as pd

from adversarial import singleton_game
from game_model import MAX_AGENTS
from reporting import bound_curve_frame, count_frame, frame_table_md, trace_frame, write_csv
from search import css1, merging_search, splitting_search

OUTPUT_DIR = os.path.join(os.path.dirname(__file__), "output")


def parse_args():
    p = argparse.ArgumentParser(description="Regenerate count table and bound curves")
    p.add_argument("--agents", type=int, nargs="+", default=[10],
                   help="Agent counts for bound curves. Default: 10")
    p.add_argument("--trace-agents", type=int, default=10,
                   help="Agent count for the singleton-game baseline traces. Default: 10")
    p.add_argument("--out-dir", type=str, default=OUTPUT_DIR)
    return p.parse_args()


def baseline_traces(a: int) -> pd.DataFrame:
    """All three traces on the singleton game, with the realized ratio a / best."""
    game = singleton_game(a)
    frames = []
    for algo in (css1, splitting_search, merging_search):
        df = trace_frame(algo(game))
        df.insert(0, "algorithm", algo.__name__)
        df["ratio"] = [f"{a / v:.6g}" if v > 0 else "" for v in df["best_value"]]
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def main():
    args = parse_args()
    t0 = time.time()
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    summary = ["# Coalition structure search: counts and bounds", ""]

    counts = count_frame(MAX_AGENTS, with_fraction=True)
    write_csv(counts, os.path.join(out, "counts.csv"))
    print(f"[figures] counts.csv ({len(counts)} rows)")
    summary += [frame_table_md(counts, "Graph size and minimal search"), ""]

    for a in args.agents:
        curve = bound_curve_frame(a)
        write_csv(curve, os.path.join(out, f"bound_curve_{a}.csv"))
        print(f"[figures] bound_curve_{a}.csv ({len(curve)} rows)")
        summary += [frame_table_md(curve, f"Bound curves, a={a}"), ""]

    traces = baseline_traces(args.trace_agents)
    write_csv(traces, os.path.join(out, f"traces_singleton_{args.trace_agents}.csv"))
    print(f"[figures] traces_singleton_{args.trace_agents}.csv ({len(traces)} rows)")
    summary += [frame_table_md(traces, f"Baseline traces, singleton game a={args.trace_agents}"), ""]

    with open(os.path.join(out, "summary.md"), "w") as f:
        f.write("\n".join(summary))
    print(f"[figures] Done in {time.time() - t0:.1f}s -> {out}")


if __name__ == "__main__":
    main()
