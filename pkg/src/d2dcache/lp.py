"""Exact two-phase simplex over rationals.

The tableau is stored sparsely (one dict per row) because the caching LPs
have a handful of nonzeros per column.  The default ``"dantzig"`` rule
picks the most negative reduced cost and falls back to Bland's rule after
50 consecutive degenerate pivots, so every degenerate run is finite and the
method terminates; ``"bland"`` uses Bland's rule throughout.

Tableau entries are gmpy2 rationals when available (same exact semantics,
several times faster than ``Fraction``); inputs and outputs are always
``Fraction``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

from .core import Verdict, as_fraction
from .errors import MalformedLP

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction


def _to_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(int(x.numerator), int(x.denominator))

RELATIONS = ("<=", "==", ">=")

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class Constraint:
    coeffs: dict
    relation: str
    rhs: Fraction
    name: str | None = None

    def lhs(self, point: Mapping) -> Fraction:
        return sum((c * point[v] for v, c in self.coeffs.items()), Fraction(0))

    def holds(self, point: Mapping) -> bool:
        lhs = self.lhs(point)
        if self.relation == "<=":
            return lhs <= self.rhs
        if self.relation == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


class LinearProgram:
    """A linear program over named variables.

    Variables default to ``x >= 0``; pass ``lower=None`` for a free variable.
    """

    def __init__(self, sense: str = "min", name: str = ""):
        if sense not in ("min", "max"):
            raise MalformedLP(f"bad sense {sense!r}")
        self.sense = sense
        self.name = name
        self.variables: list[Hashable] = []
        self.index: dict[Hashable, int] = {}
        self.lower: list[Fraction | None] = []
        self.upper: list[Fraction | None] = []
        self.objective: dict[Hashable, Fraction] = {}
        self.constraints: list[Constraint] = []

    def add_variable(self, name: Hashable, lower=0, upper=None, cost=0) -> Hashable:
        if name in self.index:
            raise MalformedLP(f"duplicate variable {name!r}")
        lo = None if lower is None else as_fraction(lower)
        up = None if upper is None else as_fraction(upper)
        if lo is not None and up is not None and lo > up:
            raise MalformedLP(f"empty bounds for {name!r}")
        self.index[name] = len(self.variables)
        self.variables.append(name)
        self.lower.append(lo)
        self.upper.append(up)
        if cost:
            self.objective[name] = as_fraction(cost)
        return name

    def set_cost(self, name: Hashable, cost) -> None:
        self._check(name)
        cost = as_fraction(cost)
        if cost:
            self.objective[name] = cost
        else:
            self.objective.pop(name, None)

    def add_constraint(self, coeffs: Mapping, relation: str, rhs, name: str | None = None) -> Constraint:
        if relation not in RELATIONS:
            raise MalformedLP(f"bad relation {relation!r}")
        clean = {}
        for v, c in coeffs.items():
            self._check(v)
            c = as_fraction(c)
            if c:
                clean[v] = clean.get(v, 0) + c
        row = Constraint(clean, relation, as_fraction(rhs), name)
        self.constraints.append(row)
        return row

    def _check(self, name):
        if name not in self.index:
            raise MalformedLP(f"unknown variable {name!r}")

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def objective_value(self, point: Mapping) -> Fraction:
        return sum((c * point[v] for v, c in self.objective.items()), Fraction(0))

    def rows_named(self, prefix: str) -> list[Constraint]:
        return [r for r in self.constraints if r.name and r.name.startswith(prefix)]

    def to_text(self) -> str:
        """Plain-text dump, one line per objective/row/bound."""
        def term(c, v):
            return f"{'+' if c >= 0 else '-'} {abs(c)} {v}"

        lines = [f"{self.sense} " + " ".join(term(c, v) for v, c in self.objective.items())]
        lines.append("subject to")
        for r in self.constraints:
            label = f"{r.name}: " if r.name else ""
            lines.append(f"  {label}" + " ".join(term(c, v) for v, c in r.coeffs.items())
                         + f" {r.relation} {r.rhs}")
        lines.append("bounds")
        for v, lo, up in zip(self.variables, self.lower, self.upper):
            lines.append(f"  {'-inf' if lo is None else lo} <= {v} <= {'inf' if up is None else up}")
        return "\n".join(lines)


@dataclass
class LPSolution:
    status: str
    value: Fraction | None = None
    point: dict = field(default_factory=dict)
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Sparse simplex tableau: row r reads x[basis[r]] + sum row[k] x[k] = rhs[r]."""

    def __init__(self, rows, rhs, basis, ncols, rule):
        self.rows: list[dict] = rows
        self.rhs: list = rhs
        self.basis: list[int] = basis
        self.ncols = ncols
        self.rule = rule
        self.d: dict = {}
        self.val = Q(0)
        self.pivots = 0

    def pivot(self, r: int, c: int, drop_leaving: bool = False) -> None:
        row = self.rows[r]
        p = row.pop(c)
        leaving = self.basis[r]
        inv = 1 / p
        if inv != 1:
            for k in row:
                row[k] *= inv
        if not drop_leaving:
            row[leaving] = inv
        b = self.rhs[r] * inv
        self.rhs[r] = b
        self.basis[r] = c
        for s, other in enumerate(self.rows):
            if s == r:
                continue
            f = other.pop(c, None)
            if f is None:
                continue
            self._axpy(other, f, row)
            if b:
                self.rhs[s] -= f * b
        f = self.d.pop(c, None)
        if f is not None:
            self._axpy(self.d, f, row)
            self.val += f * b
        self.pivots += 1

    @staticmethod
    def _axpy(target: dict, f, row: dict) -> None:
        for k, x in row.items():
            y = target.get(k)
            if y is None:
                target[k] = -f * x
            else:
                y -= f * x
                if y:
                    target[k] = y
                else:
                    del target[k]

    def entering(self, degenerate_run: int):
        negs = [k for k, x in self.d.items() if x < 0]
        if not negs:
            return None
        if self.rule == "dantzig" and degenerate_run < 50:
            return min(negs, key=lambda k: (self.d[k], k))
        return min(negs)

    def leaving(self, c: int):
        best = None
        best_ratio = None
        for r, row in enumerate(self.rows):
            a = row.get(c)
            if a is None or a <= 0:
                continue
            ratio = self.rhs[r] / a
            if best is None or ratio < best_ratio or (ratio == best_ratio and self.basis[r] < self.basis[best]):
                best, best_ratio = r, ratio
        return best

    def run(self, max_pivots: int) -> str:
        degenerate = 0
        while True:
            c = self.entering(degenerate)
            if c is None:
                return OPTIMAL
            r = self.leaving(c)
            if r is None:
                return UNBOUNDED
            degenerate = degenerate + 1 if self.rhs[r] == 0 else 0
            self.pivot(r, c)
            if self.pivots > max_pivots:
                raise RuntimeError("simplex pivot limit exceeded")


def solve(lp: LinearProgram, rule: str = "dantzig", max_pivots: int = 1_000_000) -> LPSolution:
    """Solve ``lp`` exactly; the returned point satisfies every row exactly."""
    if rule not in ("bland", "dantzig"):
        raise MalformedLP(f"unknown pivot rule {rule!r}")
    n = lp.num_variables

    # standard-form columns: x = shift + sign * col (+ optional negative part)
    pos_col: list[int] = []
    neg_col: list[int | None] = []
    shift: list[Fraction] = []
    sign: list[int] = []
    ncols = 0
    extra_rows = []
    for v in range(n):
        lo, up = lp.lower[v], lp.upper[v]
        pos_col.append(ncols)
        ncols += 1
        if lo is not None:
            shift.append(lo)
            sign.append(1)
            neg_col.append(None)
            if up is not None:
                extra_rows.append(({pos_col[v]: Fraction(1)}, "<=", up - lo))
        elif up is not None:
            shift.append(up)
            sign.append(-1)
            neg_col.append(None)
        else:
            shift.append(Fraction(0))
            sign.append(1)
            neg_col.append(ncols)
            ncols += 1

    raw_rows = []
    for con in lp.constraints:
        coeffs: dict[int, Fraction] = {}
        rhs = con.rhs
        for name, a in con.coeffs.items():
            v = lp.index[name]
            rhs -= a * shift[v]
            coeffs[pos_col[v]] = coeffs.get(pos_col[v], 0) + a * sign[v]
            if neg_col[v] is not None:
                coeffs[neg_col[v]] = -a
        raw_rows.append(({k: x for k, x in coeffs.items() if x}, con.relation, rhs))
    raw_rows.extend(extra_rows)

    cost: dict[int, Fraction] = {}
    const = Fraction(0)
    flip = -1 if lp.sense == "max" else 1
    for name, a in lp.objective.items():
        v = lp.index[name]
        a = a * flip
        const += a * shift[v]
        cost[pos_col[v]] = cost.get(pos_col[v], 0) + a * sign[v]
        if neg_col[v] is not None:
            cost[neg_col[v]] = -a

    rows, rhs, basis, artificial = [], [], [], set()
    for coeffs, rel, b in raw_rows:
        if b < 0:
            coeffs = {k: -x for k, x in coeffs.items()}
            b = -b
            rel = {"<=": ">=", ">=": "<=", "==": "=="}[rel]
        if not coeffs:
            if (rel == "==" and b != 0) or (rel == ">=" and b > 0):
                return LPSolution(INFEASIBLE)
            continue
        row = {k: Q(x) for k, x in coeffs.items()}
        if rel == "<=":
            basis.append(ncols)
            ncols += 1
        else:
            if rel == ">=":
                row[ncols] = Q(-1)
                ncols += 1
            artificial.add(ncols)
            basis.append(ncols)
            ncols += 1
        rows.append(row)
        rhs.append(Q(b))

    tab = _Tableau(rows, rhs, basis, ncols, rule)

    if artificial:
        for r, row in enumerate(rows):
            if basis[r] in artificial:
                _Tableau._axpy(tab.d, 1, row)
                tab.val += rhs[r]
        # artificials leave the basis for good
        orig_pivot = tab.pivot

        def pivot_dropping(r, c, drop_leaving=False):
            orig_pivot(r, c, drop_leaving or tab.basis[r] in artificial)

        tab.pivot = pivot_dropping
        status = tab.run(max_pivots)
        if status != OPTIMAL:
            raise RuntimeError("phase one cannot be unbounded")
        if tab.val > 0:
            return LPSolution(INFEASIBLE, pivots=tab.pivots)
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] in artificial:
                cols = [k for k in tab.rows[r] if k not in artificial]
                if cols:
                    tab.pivot(r, min(cols))
                else:
                    del tab.rows[r], tab.rhs[r], tab.basis[r]
                    continue
            r += 1
        tab.pivot = orig_pivot

    basic_pos = {k: r for r, k in enumerate(tab.basis)}
    cost = {k: Q(x) for k, x in cost.items()}
    d = {k: x for k, x in cost.items() if k not in basic_pos}
    val = Q(0)
    for r, k in enumerate(tab.basis):
        ck = cost.get(k)
        if ck:
            val += ck * tab.rhs[r]
            _Tableau._axpy(d, ck, tab.rows[r])
    tab.d = d
    tab.val = val
    status = tab.run(max_pivots)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, pivots=tab.pivots)

    colval = [Fraction(0)] * ncols
    for r, k in enumerate(tab.basis):
        colval[k] = _to_fraction(tab.rhs[r])
    point = {}
    for v, name in enumerate(lp.variables):
        x = shift[v] + sign[v] * colval[pos_col[v]]
        if neg_col[v] is not None:
            x -= colval[neg_col[v]]
        point[name] = x
    value = lp.objective_value(point)
    assert value == flip * (_to_fraction(tab.val) + const)
    return LPSolution(OPTIMAL, value, point, tab.pivots)


def verify_certificate(lp: LinearProgram, point: Mapping, claimed=None) -> Verdict:
    """Exact check that ``point`` is feasible for ``lp`` and, when ``claimed``
    is given, that it attains that objective value."""
    bad = []
    missing = [v for v in lp.variables if v not in point]
    if missing:
        return Verdict(False, [f"no value for {missing[0]!r}" + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else "")])
    for v, lo, up in zip(lp.variables, lp.lower, lp.upper):
        x = as_fraction(point[v])
        if lo is not None and x < lo:
            bad.append(f"{v!r}={x} below lower bound {lo}")
        if up is not None and x > up:
            bad.append(f"{v!r}={x} above upper bound {up}")
    pt = {v: as_fraction(point[v]) for v in lp.variables}
    for i, con in enumerate(lp.constraints):
        if not con.holds(pt):
            bad.append(f"row {con.name or i}: {con.lhs(pt)} {con.relation} {con.rhs} fails")
    if claimed is not None:
        val = lp.objective_value(pt)
        if val != as_fraction(claimed):
            bad.append(f"objective {val} != claimed {as_fraction(claimed)}")
    return Verdict(not bad, bad)
