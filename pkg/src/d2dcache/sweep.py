"""Parameter sweeps producing CSV rows of achievable loads and bounds."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .core import ZERO, as_fraction, fmt_decimal, fmt_fraction, validate_profile
from .errors import ProfileError

METHODS = ("O1", "best-bound", "closed-form", "restricted", "cut-set")
VALUE_COLUMNS = ("R_O1", "R_lowerbound", "R_closedform", "R_restricted", "R_cutset", "gap")


class SweepSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    K: int
    N: int
    grid: tuple[tuple[Fraction, ...] | None, ...]   # None marks a skipped point
    methods: tuple[str, ...] = METHODS
    labels: tuple[str, ...] = ()


def _frac_range(start, stop, step) -> list[Fraction]:
    start, stop, step = (as_fraction(x) for x in (start, stop, step))
    if step <= 0:
        raise SweepSpecError("step must be positive")
    out, x = [], start
    while x <= stop:
        out.append(x)
        x += step
    return out


def geometric_profile(K: int, alpha: Fraction, m_tot: Fraction) -> tuple[Fraction, ...] | None:
    """m_k = alpha * m_{k+1} scaled to total m_tot; None if m_K would exceed 1."""
    weights = [alpha ** (K - 1 - k) for k in range(K)]
    if alpha == 0:
        weights = [ZERO] * (K - 1) + [Fraction(1)]
    top = m_tot / sum(weights)
    if top > 1:
        return None
    return tuple(w * top for w in weights)


def parse_spec(data: dict) -> SweepSpec:
    try:
        K = int(data["K"])
    except (KeyError, TypeError, ValueError) as e:
        raise SweepSpecError("spec needs an integer K") from e
    N = int(data.get("N", K))
    methods = tuple(data.get("methods", METHODS))
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise SweepSpecError(f"unknown methods {sorted(unknown)}")
    grid: list = []
    labels: list = []
    if "profiles" in data:
        for row in data["profiles"]:
            grid.append(tuple(as_fraction(x) for x in row))
            labels.append("")
    if "family" in data:
        fam = data["family"]
        if fam.get("type", "geometric") != "geometric":
            raise SweepSpecError(f"unknown family {fam.get('type')!r}")
        alphas = [as_fraction(a) for a in fam["alpha"]]
        r = fam["m_tot"]
        totals = [as_fraction(x) for x in r] if isinstance(r, list) else \
            _frac_range(r["start"], r["stop"], r["step"])
        for a in alphas:
            for t in totals:
                grid.append(geometric_profile(K, a, t))
                labels.append(f"alpha={fmt_decimal(a)}")
    if not grid:
        raise SweepSpecError("empty grid")
    return SweepSpec(K, N, tuple(grid), methods, tuple(labels))


def load_spec(path: str) -> SweepSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SweepSpecError(f"{path}: {e}") from e
    return parse_spec(data)


def evaluate_point(K: int, N: int, m, methods: Iterable[str]) -> dict:
    """All requested quantities for one grid point, as Fractions (or None)."""
    from .achievability import min_load_restricted, min_load_uncoded_linear
    from .closed_form import closed_form_load
    from .converse import best_lower_bound, cutset_bound

    row = dict.fromkeys(VALUE_COLUMNS)
    if m is None:
        return {"m": None, **row, "status": "skipped: m_K > 1"}
    try:
        p = validate_profile(K, N, m)
    except ProfileError as e:
        return {"m": tuple(m), **row, "status": f"skipped: {type(e).__name__}"}
    methods = set(methods)
    if "O1" in methods:
        row["R_O1"] = min_load_uncoded_linear(p, rule="dantzig").load
    if "best-bound" in methods:
        row["R_lowerbound"] = best_lower_bound(p)[0]
    if "closed-form" in methods:
        cf = closed_form_load(p)
        row["R_closedform"] = None if cf is None else cf.load
    if "restricted" in methods:
        row["R_restricted"] = min_load_restricted(p, rule="dantzig")
    if "cut-set" in methods:
        row["R_cutset"] = cutset_bound(p)
    if row["R_O1"] is not None and row["R_lowerbound"] is not None:
        row["gap"] = row["R_O1"] - row["R_lowerbound"]
    return {"m": p.input_order_m(), **row, "status": "ok"}


def _eval_args(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    args = [(spec.K, spec.N, m, spec.methods) for m in spec.grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_eval_args, args))
    else:
        rows = [_eval_args(a) for a in args]
    return rows


def _cell(x, exact: bool):
    if x is None:
        return ["", ""] if exact else [""]
    return [fmt_decimal(x), fmt_fraction(x)] if exact else [fmt_decimal(x)]


def header(K: int, exact: bool = False) -> list[str]:
    cols = [f"m_{k}" for k in range(1, K + 1)] + ["m_tot"] + list(VALUE_COLUMNS)
    if exact:
        cols = [c2 for c in cols for c2 in (c, c + "_exact")]
    return cols + ["status"]


def rows_to_csv(K: int, rows: list[dict], exact: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(K, exact))
    for r in rows:
        m = r["m"]
        cells = []
        if m is None:
            cells += _cell(None, exact) * (K + 1)
        else:
            for x in m:
                cells += _cell(x, exact)
            cells += _cell(sum(m, ZERO), exact)
        for c in VALUE_COLUMNS:
            cells += _cell(r[c], exact)
        w.writerow(cells + [r["status"]])
    return buf.getvalue()
