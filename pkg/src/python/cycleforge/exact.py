"""Exact generalized Ramsey numbers for tiny hosts and closed-form bound calculators"""

import json
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

from .errors import CapExceededError, ForgeError, ValidationError
from .lllcolour import fresh_palette_size
from .model import Colouring, Edge, HostMode, HostSpec, edge_key, fresh
from .utils import chunked, run_partitioned
from .verify import iter_canonical_cycles, verify_colouring

logger = logging.getLogger(__name__)

MAX_COMPLETE_N = 8
MAX_BIPARTITE_N = 5
PREFIX_DEPTH = 4


@dataclass
class ExactResult:
    """Minimum colour count with its witness and the exhausted searches below it."""

    mode: HostMode
    n: int
    k_low: int
    k_high: int
    q: int
    value: int
    witness: dict[Edge, int]
    nodes: dict[int, int] = field(default_factory=dict)
    symmetry: bool = True
    cycles: int = 0
    verified: bool = False
    duration_ms: int = 0

    @property
    def unsat(self) -> dict[int, int]:
        """Search nodes spent proving each colour count below the answer infeasible."""
        return {c: nodes for c, nodes in self.nodes.items() if c < self.value}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n": self.n,
            "k_low": self.k_low,
            "k_high": self.k_high,
            "q": self.q,
            "value": self.value,
            "symmetry": self.symmetry,
            "cycles": self.cycles,
            "verified": self.verified,
            "witness": [[u, v, c] for (u, v), c in sorted(self.witness.items())],
            "nodes": {str(c): nodes for c, nodes in self.nodes.items()},
            "duration_ms": self.duration_ms,
        }


@dataclass
class BoundsReport:
    """Lower bound from the path extremal number, with the upper-bound parameters."""

    mode: HostMode
    n: int
    k: int
    lower_bound: int
    path_extremal: Fraction | int
    t: int | None = None
    upper_coefficient: Fraction | None = None
    upper_budget: int | None = None
    alpha: float | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n": self.n,
            "k": self.k,
            "lower_bound": self.lower_bound,
            "path_extremal": str(self.path_extremal),
            "t": self.t,
            "upper_coefficient": (
                None if self.upper_coefficient is None else str(self.upper_coefficient)
            ),
            "upper_budget": self.upper_budget,
            "alpha": self.alpha,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.to_dict()])


class _Search:
    """Edge-by-edge colouring search; a cycle is checked as soon as its last edge is coloured."""

    def __init__(
        self, edges: Sequence[Edge], cycles: Sequence[tuple[int, ...]], q: int, symmetry: bool
    ):
        self.edges = list(edges)
        self.q = q
        self.symmetry = symmetry
        position = {e: i for i, e in enumerate(self.edges)}
        self.closing: list[list[tuple[int, ...]]] = [[] for _ in self.edges]
        for cycle in cycles:
            ids = tuple(position[edge_key(a, b)] for a, b in zip(cycle, [*cycle[1:], cycle[0]]))
            self.closing[max(ids)].append(ids)

    def _fits(self, colours: list[int], index: int) -> bool:
        for ids in self.closing[index]:
            if len({colours[i] for i in ids}) < self.q:
                return False
        return True

    def _choices(self, top: int, c: int) -> range:
        if self.symmetry:
            return range(1, min(c, top + 1) + 1)
        return range(1, c + 1)

    def prefixes(self, c: int, depth: int) -> list[list[int]]:
        """Every consistent assignment of the first `depth` edges."""
        out: list[list[int]] = []
        self._collect([], 0, c, min(depth, len(self.edges)), out)
        return out

    def _collect(self, colours: list[int], top: int, c: int, depth: int, out: list) -> None:
        index = len(colours)
        if index == depth:
            out.append(list(colours))
            return
        for colour in self._choices(top, c):
            colours.append(colour)
            if self._fits(colours, index):
                self._collect(colours, max(top, colour), c, depth, out)
            colours.pop()

    def solve(self, c: int, prefixes: Sequence[list[int]]) -> tuple[list[int] | None, int]:
        nodes = 0
        for prefix in prefixes:
            colours = list(prefix)
            found, spent = self._extend(colours, max(colours, default=0), c)
            nodes += spent
            if found:
                return colours, nodes
        return None, nodes

    def _extend(self, colours: list[int], top: int, c: int) -> tuple[bool, int]:
        index = len(colours)
        if index == len(self.edges):
            return True, 1
        nodes = 1
        for colour in self._choices(top, c):
            colours.append(colour)
            if self._fits(colours, index):
                found, spent = self._extend(colours, max(top, colour), c)
                nodes += spent
                if found:
                    return True, nodes
            colours.pop()
        return False, nodes


def _search_host(mode: HostMode, n: int, k_low: int, k_high: int) -> HostSpec:
    # Only the vertex and edge layout of the host is used here.
    return HostSpec(mode=mode, n=n, k=k_low, ell=k_high, eps=0.0)


def exact_ramsey(
    n: int,
    k_low: int,
    k_high: int,
    q: int = 3,
    mode: HostMode | str = HostMode.COMPLETE,
    symmetry: bool = True,
    max_n: int | None = None,
    workers: int = 1,
) -> ExactResult:
    """Fewest colours giving every cycle of length in [k_low, k_high] at least q colours.

    Colour counts c = 1, 2, ... are tried in turn; each failure is an exhausted search.

    Raises:
        ValidationError: If the parameters are out of range or no colouring can exist
        CapExceededError: If n is beyond the solver cap
    """
    start_time = time.time()
    mode = HostMode(mode)
    if n < 1 or q < 1 or k_low < 3 or k_low > k_high:
        raise ValidationError(
            f"Need n >= 1, q >= 1 and 3 <= k_low <= k_high, got n={n}, q={q}, "
            f"k_low={k_low}, k_high={k_high}",
            field="k_low",
        )
    cap = max_n or (MAX_BIPARTITE_N if mode is HostMode.BIPARTITE else MAX_COMPLETE_N)
    if n > cap:
        raise CapExceededError(f"n={n} exceeds the exact solver cap {cap}", cap=cap, required=n)

    host = _search_host(mode, n, k_low, k_high)
    lengths = [h for h in range(k_low, k_high + 1) if not (host.is_bipartite and h % 2)]
    cycles = [cycle for h in lengths for cycle in iter_canonical_cycles(host, h)]
    if cycles and min(len(cycle) for cycle in cycles) < q:
        raise ValidationError(f"A cycle shorter than q={q} can never see q colours", field="q")

    edges = sorted(host.edges, key=lambda e: (e[1], e[0]))
    search = _Search(edges, cycles, q, symmetry)
    result = ExactResult(
        mode=mode,
        n=n,
        k_low=k_low,
        k_high=k_high,
        q=q,
        value=0,
        witness={},
        symmetry=symmetry,
        cycles=len(cycles),
    )

    for c in range(1, max(1, len(edges)) + 1):
        if workers > 1:
            prefixes = search.prefixes(c, PREFIX_DEPTH)
            parts = run_partitioned(
                lambda part, c=c: search.solve(c, part), chunked(prefixes, workers), workers
            )
        else:
            parts = [search.solve(c, [[]])]
        result.nodes[c] = sum(spent for _, spent in parts)
        colours = next((found for found, _ in parts if found is not None), None)
        if colours is not None:
            result.value = c
            result.witness = dict(zip(edges, colours, strict=True))
            break

    if edges:
        colouring = Colouring(
            host,
            {e: fresh(c) for e, c in result.witness.items()},
            fresh_palette=result.value,
        )
        verdict = verify_colouring(colouring, lengths=lengths, cap=10**12)
        if q == 3 and not verdict.certified:
            raise ForgeError(f"Witness for c={result.value} fails verification")
        result.verified = verdict.certified or q != 3
    else:
        result.value = 1
        result.verified = True

    result.duration_ms = int((time.time() - start_time) * 1000)
    logger.info(
        json.dumps(
            {
                "action": "exact_ramsey",
                "mode": mode.value,
                "n": n,
                "k_low": k_low,
                "k_high": k_high,
                "q": q,
                "value": result.value,
                "metrics": {
                    "cycles": len(cycles),
                    "nodes": sum(result.nodes.values()),
                    "duration_ms": result.duration_ms,
                },
            }
        )
    )
    return result


def lower_bound_complete(n: int, k: int) -> BoundsReport:
    """ceil(C(n,2) / ((k-2)n/2)) = ceil((n-1)/(k-2)), from ex(n, P_k) <= (k-2)n/2.

    Raises:
        ValidationError: Unless n >= k >= 3
    """
    if not n >= k >= 3:
        raise ValidationError(f"Need n >= k >= 3, got n={n}, k={k}", field="k")
    extremal = Fraction((k - 2) * n, 2)
    lower = math.ceil(Fraction(math.comb(n, 2)) / extremal)
    return BoundsReport(mode=HostMode.COMPLETE, n=n, k=k, lower_bound=lower, path_extremal=extremal)


def ex_path_bipartite(m: int, n: int, k: int) -> int:
    """Largest subgraph of K_{m,n} without a path on 2(k+1) vertices.

    Raises:
        ValidationError: If m > n or k < 1
    """
    if k < 1 or m < 1:
        raise ValidationError(f"Need m >= 1 and k >= 1, got m={m}, k={k}", field="k")
    if m > n:
        raise ValidationError(f"Need m <= n, got m={m}, n={n}", field="m")
    if m <= k:
        return m * n
    if m < 2 * k:
        return n * k
    return (m + n - 2 * k) * k


def block_parameter(k: int) -> int:
    """Largest t with t^2 - t + 2 <= k, by integer scan."""
    t = 1
    while (t + 1) * (t + 1) - (t + 1) + 2 <= k:
        t += 1
    return t


def bipartite_bounds(n: int, k: int) -> BoundsReport:
    """Lower bound ceil(n^2 / ex(n,n;P_k)) and the upper coefficient 2/(t^2-1).

    Raises:
        ValidationError: Unless k >= 4 is even and n >= 1
    """
    if k < 4 or k % 2:
        raise ValidationError(f"k must be even and at least 4, got {k}", field="k")
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}", field="n")
    extremal = ex_path_bipartite(n, n, k // 2 - 1)
    t = block_parameter(k)
    coefficient = Fraction(2, t * t - 1)
    return BoundsReport(
        mode=HostMode.BIPARTITE,
        n=n,
        k=k,
        lower_bound=math.ceil(Fraction(n * n, extremal)),
        path_extremal=extremal,
        t=t,
        upper_coefficient=coefficient,
        upper_budget=math.floor(coefficient * n),
    )


def complete_upper_budget(n: int, k: int, alpha: float) -> BoundsReport:
    """Construction budget floor(n/(k-2)) + ceil(n^(1-alpha)) next to the lower bound."""
    report = lower_bound_complete(n, k)
    report.alpha = alpha
    report.upper_coefficient = Fraction(1, k - 2)
    report.upper_budget = n // (k - 2) + fresh_palette_size(n, alpha)
    return report
