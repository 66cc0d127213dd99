"""
reporting.py – Text and table output for searches, counts and bound curves.

Structures print as pipe-separated member lists, members ascending:
{1,2}|{3}|{4}. CSV files are written without an index, with "\n" line
endings and absent bounds as empty fields, so reruns are byte-identical.
"""
import os
from fractions import Fraction

import pandas as pd

from bounds import css1_bound_staircase, splitting_bad_case_curve
from game_model import CoalitionError, CoalitionStructure, mask_of, members, validate_structure
from partition_enum import bell, bottom_two_count, coalition_count, search_fraction
from search import AnytimeResult

TRACE_COLUMNS = ["n", "best_value", "bound", "phase"]
COUNT_COLUMNS = ["a", "coalitions", "structures", "n_min"]


def format_structure(cs: CoalitionStructure | None) -> str:
    if cs is None:
        return ""
    return "|".join("{" + ",".join(str(i) for i in members(m)) + "}" for m in cs.coalitions)


def parse_structure(text: str, a: int) -> CoalitionStructure:
    """Inverse of format_structure; the result is validated against a agents."""
    parts = [p.strip() for p in text.strip().split("|")]
    masks = []
    for p in parts:
        if not (p.startswith("{") and p.endswith("}")):
            raise CoalitionError(f"expected {{i,j,...}}, got {p!r}")
        inner = p[1:-1].strip()
        try:
            agents = [int(x) for x in inner.split(",")] if inner else []
        except ValueError:
            raise CoalitionError(f"agent ids must be integers in {p!r}") from None
        masks.append(mask_of(agents))
    return validate_structure(a, masks)


def format_k(k) -> str:
    """Bounds and ratios for CSV: int as is, Fraction as p/q, None as empty."""
    if k is None:
        return ""
    if isinstance(k, Fraction):
        return str(k.numerator) if k.denominator == 1 else f"{k.numerator}/{k.denominator}"
    return str(k)


# ── Frames ────────────────────────────────────────────────────────
def trace_frame(result: AnytimeResult, with_structures: bool = False) -> pd.DataFrame:
    """One row per checkpoint: n, best_value, bound (empty when absent), phase."""
    rows = []
    for c in result.checkpoints:
        row = {"n": c.n, "best_value": c.best_value, "bound": format_k(c.bound), "phase": c.phase}
        if with_structures:
            row["best_cs"] = format_structure(c.best_cs)
        rows.append(row)
    cols = TRACE_COLUMNS + (["best_cs"] if with_structures else [])
    return pd.DataFrame(rows, columns=cols)


def count_frame(a_max: int, with_fraction: bool = False) -> pd.DataFrame:
    """Rows a = 1 .. a_max: 2^a - 1, bell(a), 2^(a-1) and optionally their ratio."""
    rows = []
    for a in range(1, a_max + 1):
        row = {"a": a, "coalitions": coalition_count(a), "structures": bell(a),
               "n_min": bottom_two_count(a)}
        if with_fraction:
            row["fraction"] = format_k(search_fraction(a))
        rows.append(row)
    return pd.DataFrame(rows, columns=COUNT_COLUMNS + (["fraction"] if with_fraction else []))


def bound_curve_frame(a: int, with_splitting: bool = True) -> pd.DataFrame:
    """
    The CSS-1 staircase (curve=css1) and the splitting search's realized
    ratio on the singleton game (curve=splitting-bad-case).
    """
    rows = [("css1", n, format_k(k)) for n, k in css1_bound_staircase(a)]
    if with_splitting:
        rows += [("splitting-bad-case", n, format_k(r)) for n, r in splitting_bad_case_curve(a)]
    return pd.DataFrame(rows, columns=["curve", "n", "k"])


def write_csv(df: pd.DataFrame, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")


def frame_to_csv_text(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, lineterminator="\n")


# ── Text summaries ────────────────────────────────────────────────
def format_result(result: AnytimeResult) -> str:
    """Final checkpoint as a readable block."""
    f = result.final
    lines = [
        f"  Algorithm:        {result.algorithm} (a={result.a})",
        f"  Best structure:   {format_structure(f.best_cs)}",
        f"  Value:            {f.best_value:.6g}",
        f"  Nodes searched:   {f.n}",
        f"  Bound k:          {format_k(f.bound) or 'none'}",
        f"  Phase:            {f.phase}",
    ]
    return "\n".join(lines)


def frame_table_md(df: pd.DataFrame, title: str) -> str:
    """Markdown table of a frame, every cell via str()."""
    cols = [str(c) for c in df.columns]
    lines = [f"### {title}\n",
             "| " + " | ".join(cols) + " |",
             "| " + " | ".join(["---"] * len(cols)) + " |"]
    for row in df.itertuples(index=False):
        lines.append("| " + " | ".join(str(v) for v in row) + " |")
    return "\n".join(lines)
