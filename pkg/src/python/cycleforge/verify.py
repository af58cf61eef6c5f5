"""Cycle-colour verification and the structural checks on a matching/colouring pair"""

import json
import logging
import math
import time
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import networkx as nx
import numpy as np
import pandas as pd

from .certificate import CertificateVerdict, VerdictStatus
from .errors import CapExceededError, ColouringMismatchError, PartialColouringError, ValidationError
from .model import Block, Colouring, Edge, EdgeColour, HostSpec, canonical_cycle, edge_key
from .utils import chunked, run_partitioned

logger = logging.getLogger(__name__)

DEFAULT_CYCLE_CAP = 10**9
WITNESS_CAP = 1000
SMALL_HOST_EDGES = 2000
DEFAULT_SAMPLE_EDGES = 200


class VerifyMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class Violation:
    """A cycle seeing at most two colours, with its colour multiset."""

    cycle: tuple[int, ...]
    colours: tuple[str, ...]

    @property
    def h(self) -> int:
        return len(self.cycle)


@dataclass
class Verdict:
    """Outcome of one verification run.

    `violation_counts` is exact; `violations` keeps at most WITNESS_CAP witnesses per length.
    """

    mode: VerifyMode
    lengths: list[int]
    cycles_checked: dict[int, int] = field(default_factory=dict)
    violation_counts: dict[int, int] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    duration_ms: int = 0

    @property
    def count(self) -> int:
        return sum(self.violation_counts.values())

    @property
    def certified(self) -> bool:
        return self.count == 0

    def to_certificate_verdict(self) -> CertificateVerdict:
        if self.certified:
            return CertificateVerdict(VerdictStatus.CERTIFIED)
        return CertificateVerdict(
            VerdictStatus.VIOLATIONS, self.count, tuple(v.cycle for v in self.violations)
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "h": h,
                    "checked": self.cycles_checked.get(h, 0),
                    "violations": self.violation_counts.get(h, 0),
                }
                for h in self.lengths
            ],
            columns=["h", "checked", "violations"],
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "certified": self.certified,
            "count": self.count,
            "cycles_checked": {str(h): c for h, c in self.cycles_checked.items()},
            "violation_counts": {str(h): c for h, c in self.violation_counts.items()},
            "violations": [
                {"cycle": list(v.cycle), "colours": list(v.colours)} for v in self.violations
            ],
        }


def count_canonical_cycles(host: HostSpec, h: int) -> int:
    """Number of h-cycles of the host: n!/(2h(n-h)!) for K_n, (n!/(n-h/2)!)^2/h for K_{n,n}."""
    if h < 3:
        return 0
    if host.is_bipartite:
        if h % 2 or h // 2 > host.n:
            return 0
        return math.perm(host.n, h // 2) ** 2 // h
    if h > host.n:
        return 0
    return math.perm(host.n, h) // (2 * h)


def _ordered_tuples(host: HostSpec, h: int) -> int:
    if host.is_bipartite:
        return 2 * math.perm(host.n, h // 2) ** 2 if h % 2 == 0 else 0
    return math.perm(host.n, h)


def _candidates(host: HostSpec, x: int, floor: int) -> range:
    """Neighbours of x above `floor`."""
    if host.is_bipartite:
        low, high = (host.n + 1, 2 * host.n) if host.side(x) == 0 else (1, host.n)
        return range(max(low, floor + 1), high + 1)
    return range(floor + 1, host.n + 1)


def iter_canonical_cycles(
    host: HostSpec, h: int, starts: Iterable[int] | None = None
) -> Iterator[tuple[int, ...]]:
    """Every h-cycle once, least vertex first and neighbour-minimal direction."""
    if h < 3 or (host.is_bipartite and h % 2):
        return
    for s in starts if starts is not None else host.vertices:
        path = [s]
        seen = {s}
        yield from _extend_all(host, path, seen, h)


def _extend_all(
    host: HostSpec, path: list[int], seen: set[int], h: int
) -> Iterator[tuple[int, ...]]:
    s = path[0]
    x = path[-1]
    if len(path) == h:
        if host.is_edge(x, s) and path[1] < x:
            yield tuple(path)
        return
    for y in _candidates(host, x, s):
        if y in seen:
            continue
        path.append(y)
        seen.add(y)
        yield from _extend_all(host, path, seen, h)
        seen.discard(y)
        path.pop()


class _ColourTable:
    """Dense integer colour codes indexed by vertex pair."""

    def __init__(self, colouring: Colouring):
        host = colouring.host
        size = host.vertex_count + 1
        self.names: list[EdgeColour] = sorted(set(colouring.assignment.values()))
        codes = {c: i for i, c in enumerate(self.names)}
        self.table = [[-1] * size for _ in range(size)]
        for (u, v), colour in colouring.assignment.items():
            self.table[u][v] = self.table[v][u] = codes[colour]

    def multiset(self, cycle: Sequence[int]) -> tuple[str, ...]:
        codes = [self.table[a][b] for a, b in zip(cycle, [*cycle[1:], cycle[0]])]
        return tuple(sorted(str(self.names[c]) for c in codes))


class _ViolationScan:
    """Depth-first search for cycles with at most two colours; prefixes with three are pruned."""

    def __init__(self, host: HostSpec, table: _ColourTable, lengths: Sequence[int]):
        self.host = host
        self.table = table.table
        self.colours = table
        self.lengths = sorted(lengths)
        self.max_len = max(self.lengths, default=0)

    def run(self, starts: Sequence[int]) -> tuple[dict[int, int], dict[int, list[Violation]]]:
        counts = {h: 0 for h in self.lengths}
        witnesses: dict[int, list[Violation]] = {h: [] for h in self.lengths}
        for s in starts:
            self._extend([s], {s}, (), counts, witnesses)
        return counts, witnesses

    def _extend(
        self,
        path: list[int],
        seen: set[int],
        distinct: tuple[int, ...],
        counts: dict[int, int],
        witnesses: dict[int, list[Violation]],
    ) -> None:
        s = path[0]
        x = path[-1]
        row = self.table[x]
        if len(path) >= 3 and len(path) in counts and path[1] < x:
            closing = row[s]
            if closing >= 0 and (closing in distinct or len(distinct) < 2):
                h = len(path)
                counts[h] += 1
                if len(witnesses[h]) < WITNESS_CAP:
                    cycle = tuple(path)
                    witnesses[h].append(Violation(cycle, self.colours.multiset(cycle)))
        if len(path) == self.max_len:
            return
        for y in _candidates(self.host, x, s):
            if y in seen:
                continue
            c = row[y]
            if c not in distinct:
                if len(distinct) == 2:
                    continue
                grown = (*distinct, c)
            else:
                grown = distinct
            path.append(y)
            seen.add(y)
            self._extend(path, seen, grown, counts, witnesses)
            seen.discard(y)
            path.pop()


def _resolve_lengths(host: HostSpec, lengths: Sequence[int] | None) -> list[int]:
    if lengths is None:
        return list(host.cycle_lengths)
    resolved = sorted(set(lengths))
    if any(h < 3 for h in resolved):
        raise ValidationError(f"Cycle lengths must be at least 3, got {resolved}", field="lengths")
    return resolved


def verify_colouring(
    colouring: Colouring,
    host: HostSpec | None = None,
    mode: VerifyMode | str = VerifyMode.EXHAUSTIVE,
    sample_budget: int = 1000,
    seed: int = 0,
    lengths: Sequence[int] | None = None,
    cap: int = DEFAULT_CYCLE_CAP,
    workers: int = 1,
) -> Verdict:
    """Check that every cycle of each length in range sees at least three colours.

    Raises:
        PartialColouringError: If some host edge is uncoloured
        CapExceededError: If exhaustive mode would walk more than `cap` ordered tuples
    """
    start_time = time.time()
    host = host or colouring.host
    mode = VerifyMode(mode)
    if not colouring.is_total():
        missing = host.edge_count - len(colouring.assignment)
        raise PartialColouringError(f"{missing} host edges are uncoloured", uncoloured=missing)
    lengths = _resolve_lengths(host, lengths)
    if host.is_bipartite:
        lengths = [h for h in lengths if h % 2 == 0]
    table = _ColourTable(colouring)
    verdict = Verdict(mode=mode, lengths=lengths)

    if mode is VerifyMode.EXHAUSTIVE:
        required = sum(_ordered_tuples(host, h) for h in lengths)
        if required > cap:
            raise CapExceededError(
                f"Exhaustive verification needs {required} ordered tuples, cap is {cap}",
                cap=cap,
                required=required,
            )
        scan = _ViolationScan(host, table, lengths)
        parts = run_partitioned(scan.run, chunked(list(host.vertices), workers), workers)
        for h in lengths:
            verdict.cycles_checked[h] = count_canonical_cycles(host, h)
            verdict.violation_counts[h] = sum(counts[h] for counts, _ in parts)
            found = [v for _, witnesses in parts for v in witnesses[h]]
            verdict.violations.extend(sorted(found, key=lambda v: v.cycle)[:WITNESS_CAP])
    else:
        _sample(colouring, host, table, verdict, sample_budget, seed)

    verdict.duration_ms = int((time.time() - start_time) * 1000)
    logger.info(
        json.dumps(
            {
                "action": "verify_colouring",
                "mode": mode.value,
                "certified": verdict.certified,
                "metrics": {
                    "lengths": lengths,
                    "cycles_checked": sum(verdict.cycles_checked.values()),
                    "violations": verdict.count,
                    "duration_ms": verdict.duration_ms,
                },
            }
        )
    )
    return verdict


def _random_cycle(host: HostSpec, h: int, rng: np.random.Generator) -> tuple[int, ...]:
    if host.is_bipartite:
        t = h // 2
        xs = rng.choice(host.n, size=t, replace=False) + 1
        ys = rng.choice(host.n, size=t, replace=False) + host.n + 1
        seq = [int(v) for pair in zip(xs, ys, strict=True) for v in pair]
    else:
        seq = [int(v) for v in rng.choice(host.n, size=h, replace=False) + 1]
    return canonical_cycle(seq)


def _sample(
    colouring: Colouring,
    host: HostSpec,
    table: _ColourTable,
    verdict: Verdict,
    budget: int,
    seed: int,
) -> None:
    rng = np.random.default_rng(seed)
    for h in verdict.lengths:
        if count_canonical_cycles(host, h) == 0:
            verdict.cycles_checked[h] = 0
            verdict.violation_counts[h] = 0
            continue
        found: set[tuple[int, ...]] = set()
        for _ in range(budget):
            cycle = _random_cycle(host, h, rng)
            if len(set(table.multiset(cycle))) <= 2:
                found.add(cycle)
        confirmed = sorted(c for c in found if _recheck(colouring, c))
        verdict.cycles_checked[h] = budget
        verdict.violation_counts[h] = len(confirmed)
        verdict.violations.extend(
            Violation(c, table.multiset(c)) for c in confirmed[:WITNESS_CAP]
        )


def _recheck(colouring: Colouring, cycle: Sequence[int]) -> bool:
    colours = {colouring.colour_of(a, b) for a, b in zip(cycle, [*cycle[1:], cycle[0]])}
    return None not in colours and len(colours) <= 2


@dataclass
class PropertyResult:
    """Pass/fail of one structural property with its measured value and witnesses."""

    name: str
    passed: bool
    measured: Any = None
    bound: Any = None
    witnesses: list[Any] = field(default_factory=list)


@dataclass
class PropertyReport:
    host: HostSpec
    delta: float
    results: dict[str, PropertyResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> PropertyResult:
        return self.results[name]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "property": r.name,
                    "status": "PASS" if r.passed else "FAIL",
                    "measured": r.measured,
                    "bound": r.bound,
                    "witnesses": len(r.witnesses),
                }
                for r in self.results.values()
            ],
            columns=["property", "status", "measured", "bound", "witnesses"],
        )

    def to_dict(self) -> dict:
        return {
            "host": self.host.to_dict(),
            "delta": self.delta,
            "passed": self.passed,
            "properties": {
                r.name: {
                    "passed": r.passed,
                    "measured": r.measured,
                    "bound": r.bound,
                    "witnesses": [str(w) for w in r.witnesses],
                }
                for r in self.results.values()
            },
        }


def _check_agreement(blocks: Sequence[Block], colouring: Colouring, host: HostSpec) -> None:
    covered: dict[Edge, int] = {}
    for block in blocks:
        for e in host.block_edges(block):
            covered[e] = block.colour
    structured = colouring.structured_edges()
    for e, colour in covered.items():
        if structured.get(e) != colour:
            raise ColouringMismatchError(
                f"Block edge {e} should carry structured colour {colour}", edge=e
            )
    for e in structured:
        if e not in covered:
            raise ColouringMismatchError(f"Structured edge {e} lies in no block", edge=e)


def _block_shape_ok(host: HostSpec, graph: nx.Graph) -> bool:
    nodes = sorted(graph.nodes)
    if len(nodes) != host.block_size:
        return False
    if host.is_bipartite:
        xs = [v for v in nodes if host.side(v) == 0]
        if len(xs) not in host.block_sides:
            return False
        return graph.number_of_edges() == len(xs) * (len(nodes) - len(xs))
    return graph.number_of_edges() == math.comb(len(nodes), 2)


def _property_one(blocks: Sequence[Block], colouring: Colouring, host: HostSpec) -> PropertyResult:
    by_colour: dict[int, nx.Graph] = {}
    for e, colour in colouring.structured_edges().items():
        by_colour.setdefault(colour, nx.Graph()).add_edge(*e)
    witnesses = []
    for colour, graph in sorted(by_colour.items()):
        for component in nx.connected_components(graph):
            if _block_shape_ok(host, graph.subgraph(component)):
                continue
            witnesses.append(
                tuple(
                    b for b in sorted(blocks) if b.colour == colour and b.vertex_set & component
                )
            )
    return PropertyResult(
        "I", not witnesses, measured=len(witnesses), bound=0, witnesses=witnesses
    )


def _property_two(blocks: Sequence[Block], host: HostSpec) -> PropertyResult:
    max_cycle = host.ell if host.is_bipartite else 2 * (host.ell // 2)
    colours_at: dict[int, set[int]] = {}
    for block in blocks:
        for v in block.vertices:
            colours_at.setdefault(v, set()).add(block.colour)
    pairs = sorted(
        {(i, j) for colours in colours_at.values() for i in colours for j in colours if i < j}
    )
    witnesses = []
    for i, j in pairs:
        graph = nx.Graph()
        left = [b for b in blocks if b.colour == i]
        right = [b for b in blocks if b.colour == j]
        for a in left:
            for b in right:
                if a.shared(b) == 1:
                    graph.add_edge(a, b)
        for cycle in nx.simple_cycles(graph, length_bound=max_cycle):
            witnesses.append(tuple(cycle))
            break
    return PropertyResult(
        "II",
        not witnesses,
        measured=len(witnesses),
        bound=f"girth > {max_cycle}",
        witnesses=witnesses,
    )


def _leftover_adjacency(colouring: Colouring) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {}
    for u, v in colouring.nonstructured_edges():
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def _property_three(
    colouring: Colouring, host: HostSpec, delta: float, adj: dict[int, set[int]]
) -> PropertyResult:
    max_degree = max((len(ws) for ws in adj.values()), default=0)
    bound = host.n ** (1 - delta)
    witness = [v for v, ws in sorted(adj.items()) if len(ws) > bound]
    return PropertyResult(
        "III", max_degree <= bound, measured=max_degree, bound=bound, witnesses=witness
    )


class _MixedCycleCounter:
    """Counts cycles u_1 v_1 ... u_m v_m u_1 whose u_t v_t lie in distinct same-coloured blocks
    and whose v_t u_{t+1} are leftover edges."""

    def __init__(self, blocks: Sequence[Block], host: HostSpec, adj: dict[int, set[int]]):
        self.host = host
        self.adj = adj
        self.at: dict[int, dict[int, Block]] = {}
        for block in blocks:
            for v in block.vertices:
                self.at.setdefault(block.colour, {})[v] = block

    def partners(self, block: Block, v: int) -> list[int]:
        if self.host.is_bipartite:
            return [w for w in block.vertices if self.host.side(w) != self.host.side(v)]
        return [w for w in block.vertices if w != v]

    def count(self, u: int, v: int, m: int) -> int:
        total = 0
        for index in self.at.values():
            first = index.get(u)
            last = index.get(v)
            if first is None or last is None or first == last:
                continue
            for v1 in self.partners(first, u):
                total += self._walk(index, v1, [first], last, v, m)
        return total

    def _walk(
        self, index: dict[int, Block], at: int, used: list[Block], last: Block, v: int, m: int
    ) -> int:
        total = 0
        for y in self.adj.get(at, ()):
            block = index.get(y)
            if block is None:
                continue
            if len(used) == m - 1:
                if block == last and y != v and v in self.partners(last, y):
                    total += 1
                continue
            if block == last or block in used:
                continue
            used.append(block)
            for z in self.partners(block, y):
                total += self._walk(index, z, used, last, v, m)
            used.pop()
        return total


def _property_four(
    blocks: Sequence[Block],
    host: HostSpec,
    delta: float,
    adj: dict[int, set[int]],
    sample_edges: int | None,
    seed: int,
) -> PropertyResult:
    counter = _MixedCycleCounter(blocks, host, adj)
    edges = list(host.edges)
    if sample_edges is None and len(edges) > SMALL_HOST_EDGES:
        sample_edges = DEFAULT_SAMPLE_EDGES
    if sample_edges is not None and sample_edges < len(edges):
        rng = np.random.default_rng(seed)
        picks = sorted(rng.choice(len(edges), size=sample_edges, replace=False))
        edges = [edges[int(i)] for i in picks]
    ordered = edges if host.is_bipartite else [p for e in edges for p in (e, e[::-1])]

    measured = {}
    witnesses = []
    passed = True
    for m in host.half_range:
        bound = host.n ** ((m - 1) * (1 - delta))
        worst = 0
        for u, v in ordered:
            value = counter.count(u, v, m)
            worst = max(worst, value)
            if value > bound:
                passed = False
                witnesses.append((m, edge_key(u, v), value))
        measured[m] = worst
    return PropertyResult(
        "IV",
        passed,
        measured=measured,
        bound={m: host.n ** ((m - 1) * (1 - delta)) for m in host.half_range},
        witnesses=witnesses,
    )


def check_lemma_properties(
    matching: Iterable[Block],
    colouring: Colouring,
    host: HostSpec | None = None,
    delta: float = 0.1,
    sample_edges: int | None = None,
    seed: int = 0,
) -> PropertyReport:
    """Check block-structured colour classes, two-colour girth, leftover degree and
    mixed-cycle counts.

    Raises:
        ColouringMismatchError: If the colouring does not extend the blocks' colouring
    """
    host = host or colouring.host
    blocks = sorted(set(matching))
    _check_agreement(blocks, colouring, host)
    adj = _leftover_adjacency(colouring)

    report = PropertyReport(host=host, delta=delta)
    for result in (
        _property_one(blocks, colouring, host),
        _property_two(blocks, host),
        _property_three(colouring, host, delta, adj),
        _property_four(blocks, host, delta, adj, sample_edges, seed),
    ):
        report.results[result.name] = result

    logger.info(
        json.dumps(
            {
                "action": "check_lemma_properties",
                **host.to_dict(),
                "passed": report.passed,
                "properties": {r.name: r.passed for r in report.results.values()},
            }
        )
    )
    return report
