"""Multi-way single-commodity flows (MSFs) on Hanoi graphs.

An :class:`ArcFlow` assigns a nonnegative amount to each directed arc of
H_p^n. Internally it is a *move tensor* of shape ``(p**n, p, p)``: entry
``[u, a, b]`` is the flow on the arc leaving ``u`` by moving the top disc of
peg ``a`` onto peg ``b``. Illegal moves always hold zero. Because pinned
large discs never change which small-disc moves are legal, a flow on a
subgraph handle embeds into its parent by adding it to a contiguous slice.

Two arithmetic modes are supported: ``float`` (float64) and exact rational
(object arrays holding :class:`fractions.Fraction` and ``int``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from pathlib import Path
from typing import Iterator, Mapping, NamedTuple, Union

import numpy as np

from .hanoi import HanoiGraph, move_table

Number = Union[int, float, Fraction]

DEFAULT_TOL = 1e-9


class CompositionError(ValueError):
    pass


class UnbalancedProblemError(ValueError):
    pass


class NotAnArcError(KeyError):
    pass


@lru_cache(maxsize=64)
def _heads(p: int, n: int) -> np.ndarray:
    table = move_table(p, n)
    table.setflags(write=False)
    return table


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, Rational)) and not isinstance(x, bool)


def as_number(x: Number, exact: bool) -> Number:
    if exact:
        return x if isinstance(x, (int, Fraction)) else Fraction(x)
    return float(x)


class ArcFlow:
    """Nonnegative flow on the arcs of H_p^n."""

    __slots__ = ("p", "n", "values", "exact")

    def __init__(self, p: int, n: int, values: np.ndarray, exact: bool = False):
        shape = (p**n, p, p)
        if values.shape != shape:
            raise ValueError(f"expected move tensor of shape {shape}, got {values.shape}")
        self.p = p
        self.n = n
        self.exact = exact
        self.values = values

    @classmethod
    def zeros(cls, p: int, n: int, exact: bool = False) -> "ArcFlow":
        dtype = object if exact else np.float64
        return cls(p, n, np.zeros((p**n, p, p), dtype=dtype), exact)

    @classmethod
    def from_arcs(
        cls, p: int, n: int, amounts: Mapping[tuple[int, int], Number], exact: bool = False
    ) -> "ArcFlow":
        f = cls.zeros(p, n, exact)
        for (u, v), x in amounts.items():
            if x < 0:
                raise ValueError(f"negative amount {x} on arc ({u}, {v})")
            a, b = f._move(u, v)
            f.values[u, a, b] += as_number(x, exact)
        return f

    @property
    def heads(self) -> np.ndarray:
        return _heads(self.p, self.n)

    @property
    def vertex_count(self) -> int:
        return self.p**self.n

    def _move(self, u: int, v: int) -> tuple[int, int]:
        V = self.vertex_count
        if not (0 <= u < V and 0 <= v < V) or u == v:
            raise NotAnArcError((u, v))
        x, y, a, b = u, v, None, None
        while x or y:
            x, da = divmod(x, self.p)
            y, db = divmod(y, self.p)
            if da != db:
                if a is not None:
                    raise NotAnArcError((u, v))
                a, b = da, db
        if a is None or self.heads[u, a, b] != v:
            raise NotAnArcError((u, v))
        return a, b

    def __getitem__(self, arc: tuple[int, int]) -> Number:
        a, b = self._move(*arc)
        return self.values[arc[0], a, b]

    def _compatible(self, other: "ArcFlow") -> None:
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("flows live on different graphs")

    def __add__(self, other: "ArcFlow") -> "ArcFlow":
        self._compatible(other)
        exact = self.exact and other.exact
        if self.exact != other.exact:
            raise ValueError("cannot mix exact and floating flows")
        return ArcFlow(self.p, self.n, self.values + other.values, exact)

    def __mul__(self, scalar: Number) -> "ArcFlow":
        if scalar < 0:
            raise ValueError("flows can only be scaled by nonnegative factors")
        return ArcFlow(self.p, self.n, self.values * as_number(scalar, self.exact), self.exact)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArcFlow):
            return NotImplemented
        return (self.p, self.n) == (other.p, other.n) and bool(
            np.all(self.values == other.values)
        )

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "float"
        return f"ArcFlow(p={self.p}, n={self.n}, {mode}, support={self.support_size()})"

    def reversed(self) -> "ArcFlow":
        """Flow with every arc reversed: amount on (u, v) moves to (v, u)."""
        heads = self.heads
        out = np.zeros_like(self.values)
        u, a, b = np.nonzero(heads >= 0)
        out[heads[u, a, b], b, a] = self.values[u, a, b]
        return ArcFlow(self.p, self.n, out, self.exact)

    def embedded(self, n: int, offset: int) -> "ArcFlow":
        """This flow placed in H_p^n on the block starting at ``offset``."""
        if n < self.n or offset % self.vertex_count:
            raise ValueError("offset must address a subgraph handle of the target")
        out = ArcFlow.zeros(self.p, n, self.exact)
        out.values[offset : offset + self.vertex_count] += self.values
        return out

    def as_float(self) -> "ArcFlow":
        return ArcFlow(self.p, self.n, self.values.astype(np.float64), False)

    def divergence(self) -> np.ndarray:
        """Net outflow (out minus in) at every vertex."""
        out = self.values.sum(axis=(1, 2))
        inflow = np.zeros_like(out)
        mask = self.heads >= 0
        np.add.at(inflow, self.heads[mask], self.values[mask])
        return out - inflow

    def nonzero_arcs(self) -> Iterator[tuple[tuple[int, int], Number]]:
        """Nonzero arcs as ``((tail, head), amount)`` sorted by (tail, head)."""
        u, a, b = np.nonzero(self.values != 0)
        heads = self.heads[u, a, b]
        order = np.lexsort((heads, u))
        for k in order:
            yield (int(u[k]), int(heads[k])), self.values[u[k], a[k], b[k]]

    def support_size(self) -> int:
        return int(np.count_nonzero(self.values != 0))

    def min_amount(self) -> Number:
        return self.values.min()

    def max_load(self) -> tuple[Number, tuple[int, int] | None]:
        """Largest arc amount and the smallest (tail, head) arc attaining it."""
        peak = self.values.max()
        if peak == 0:
            return peak, None
        u, a, b = np.nonzero(self.values == peak)
        best = min(zip(u.tolist(), self.heads[u, a, b].tolist()))
        return peak, best


@dataclass(frozen=True)
class MsfProblem:
    """Sources with surplus and sinks with demand: the tuple (S, T, sigma, delta)."""

    sources: Mapping[int, Number]
    sinks: Mapping[int, Number]
    tol: float = field(default=DEFAULT_TOL, compare=False, repr=False)

    def __post_init__(self):
        for v, x in list(self.sources.items()) + list(self.sinks.items()):
            if x < 0:
                raise ValueError(f"negative surplus/demand {x} at vertex {v}")
        s, t = sum(self.sources.values()), sum(self.sinks.values())
        if self.is_exact:
            balanced = s == t
        else:
            balanced = math.isclose(s, t, rel_tol=self.tol, abs_tol=self.tol)
        if not balanced:
            raise UnbalancedProblemError(f"total surplus {s} != total demand {t}")

    @classmethod
    def uniform(cls, sources, sinks, sigma: Number, delta: Number) -> "MsfProblem":
        """Constant surplus ``sigma`` on every source and ``delta`` on every sink."""
        return cls({int(v): sigma for v in sources}, {int(v): delta for v in sinks})

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(x) for x in self.sources.values()) and all(
            _is_exact(x) for x in self.sinks.values()
        )

    def expected_divergence(self, vertex_count: int, exact: bool) -> np.ndarray:
        dtype = object if exact else np.float64
        out = np.zeros(vertex_count, dtype=dtype)
        for v, x in self.sources.items():
            out[v] += as_number(x, exact)
        for v, x in self.sinks.items():
            out[v] -= as_number(x, exact)
        return out


class Violation(NamedTuple):
    vertex: int
    expected: Number
    actual: Number


def validate_msf(
    f: ArcFlow, problem: MsfProblem, graph: HanoiGraph | None = None, tol: float = DEFAULT_TOL
) -> list[Violation]:
    """Conservation violations of ``f`` against ``problem``; empty means ``f`` solves it.

    Pure sources must push out their surplus, pure sinks absorb their demand,
    vertices in both net the difference, everyone else is balanced. Exact
    flows checked against exact problems are compared with ``==`` and
    ``tol`` is ignored. A negative arc amount is reported at vertex -1.
    """
    if graph is not None and (graph.p, graph.n) != (f.p, f.n):
        raise ValueError("flow and graph disagree on (p, n)")
    exact = f.exact and problem.is_exact
    violations = []
    low = f.min_amount()
    if low < 0:
        violations.append(Violation(-1, 0, low))
    actual = f.divergence()
    expected = problem.expected_divergence(f.vertex_count, exact)
    if exact:
        bad = np.nonzero(actual != expected)[0]
    else:
        scale = max(
            [1.0]
            + [abs(float(x)) for x in problem.sources.values()]
            + [abs(float(x)) for x in problem.sinks.values()]
        )
        resid = np.abs(actual.astype(np.float64) - expected.astype(np.float64))
        bad = np.nonzero(resid > tol * scale)[0]
    violations.extend(Violation(int(v), expected[v], actual[v]) for v in bad)
    return violations


def _same_amounts(x: Mapping[int, Number], y: Mapping[int, Number], tol: float) -> bool:
    if set(x) != set(y):
        return False
    return all(
        x[v] == y[v]
        if _is_exact(x[v]) and _is_exact(y[v])
        else math.isclose(x[v], y[v], rel_tol=tol, abs_tol=tol)
        for v in x
    )


def compose(
    f1: ArcFlow, f2: ArcFlow, pi1: MsfProblem, pi2: MsfProblem, tol: float = DEFAULT_TOL
) -> tuple[ArcFlow, MsfProblem]:
    """Chain ``f1`` (solving ``pi1``) into ``f2`` (solving ``pi2``).

    Requires the sources of ``pi2`` to be the sinks of ``pi1`` with matching
    amounts; the composite solves ``(S1, T2, sigma1, delta2)``.
    """
    if not _same_amounts(pi1.sinks, pi2.sources, tol):
        raise CompositionError("sources/surplus of the second problem must equal "
                               "sinks/demand of the first")
    return f1 + f2, MsfProblem(dict(pi1.sources), dict(pi2.sinks))


def _merge(x: Mapping[int, Number], y: Mapping[int, Number]) -> dict[int, Number]:
    out = dict(x)
    for v, amount in y.items():
        out[v] = out.get(v, 0) + amount
    return out


def msf_sum(
    f1: ArcFlow, pi1: MsfProblem, f2: ArcFlow, pi2: MsfProblem
) -> tuple[ArcFlow, MsfProblem]:
    """Pointwise sum of two MSFs and the problem it solves (zero-extended)."""
    return f1 + f2, MsfProblem(_merge(pi1.sources, pi2.sources), _merge(pi1.sinks, pi2.sinks))


@dataclass(frozen=True)
class CongestionReport:
    max_arc_load: Number
    argmax_arc: tuple[int, int] | None
    normalized_congestion: Number
    vertex_count: int
    per_level_terms: tuple[tuple[int, Number], ...] = ()

    def as_dict(self) -> dict:
        return {
            "max_arc_load": render_number(self.max_arc_load),
            "argmax_arc": list(self.argmax_arc) if self.argmax_arc else None,
            "normalized_congestion": render_number(self.normalized_congestion),
            "vertex_count": self.vertex_count,
            "per_level_terms": [[m, render_number(x)] for m, x in self.per_level_terms],
        }


def congestion(
    aggregate: ArcFlow, vertex_count: int | None = None, per_level_terms=()
) -> CongestionReport:
    """Max commodity-summed arc load, normalized by the vertex count."""
    V = aggregate.vertex_count if vertex_count is None else vertex_count
    peak, arc = aggregate.max_load()
    if aggregate.exact:
        normalized = Fraction(peak) / V
    else:
        normalized = float(peak) / V
    return CongestionReport(peak, arc, normalized, V, tuple(per_level_terms))


def expansion_lower_bound(rho: Number) -> Number:
    """h(G) >= 1 / (2 rho) for a multicommodity flow of congestion rho."""
    if rho <= 0:
        raise ValueError("the flow bound is undefined for non-positive congestion")
    if _is_exact(rho):
        return Fraction(1) / (2 * Fraction(rho))
    return 1.0 / (2.0 * rho)


def render_number(x: Number) -> str:
    if isinstance(x, (int, Fraction)) or _is_exact(x):
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def dump_flow(f: ArcFlow, out=None) -> str:
    """Write ``tail,head,amount`` records sorted by (tail, head).

    Exact amounts are rendered as ``a/b`` fractions, floats with ``repr``.
    ``out`` may be a path or a text stream; the CSV text is also returned.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tail", "head", "amount"])
    for (u, v), x in f.nonzero_arcs():
        writer.writerow([u, v, render_number(x)])
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).write_text(text)
    elif out is not None:
        out.write(text)
    return text


def load_flow(source, p: int, n: int) -> ArcFlow:
    """Inverse of :func:`dump_flow`; exact if every amount parses as a fraction."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source if isinstance(source, str) else source.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    exact = all(_looks_rational(r["amount"]) for r in rows)
    amounts = {}
    for r in rows:
        x = Fraction(r["amount"]) if exact else float(r["amount"])
        amounts[int(r["tail"]), int(r["head"])] = x
    return ArcFlow.from_arcs(p, n, amounts, exact)


def _looks_rational(s: str) -> bool:
    return all(c.isdigit() or c in "/-" for c in s)
