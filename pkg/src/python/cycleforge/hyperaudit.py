"""Block hypergraph of a host: materialization, degree audits, conflict audits and P/T counts"""

import itertools
import json
import logging
import math
import time
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import pandas as pd

from .errors import CapExceededError, ValidationError
from .model import Block, HostSpec, VertexKind
from .utils import binom, chunked, run_partitioned

logger = logging.getLogger(__name__)

DEFAULT_EDGE_CAP = 10**7
DEFAULT_CONFLICT_CAP = 5 * 10**6
ADVISORY_LIMIT = 5000

# H-vertices: ("pair", u, v) for host pairs, ("vc", v, colour) for vertex-colour pairs
HVertex = tuple[str, int, int]


def degree_formula(host: HostSpec, kind: VertexKind | str) -> int:
    """Exact degree of any H-vertex of the given kind.

    Raises:
        ValidationError: If the kind does not exist for the host mode
    """
    kind = VertexKind(kind)
    n, palette = host.n, host.palette_size
    if not host.is_bipartite:
        if kind is VertexKind.PAIR_EDGE:
            return binom(n - 2, host.k - 3) * palette
        if kind is VertexKind.VERTEX_COLOUR:
            return binom(n - 1, host.k - 2)
        raise ValidationError(f"{kind.value} is not a vertex kind of complete hosts", field="kind")

    small, large = host.block_sides
    if kind is VertexKind.SAME_SIDE_PAIR:
        return palette * (
            binom(n - 2, large - 2) * binom(n, small) + binom(n - 2, small - 2) * binom(n, large)
        )
    if kind is VertexKind.CROSS_PAIR:
        return palette * 2 * binom(n - 1, large - 1) * binom(n - 1, small - 1)
    if kind is VertexKind.VERTEX_COLOUR:
        return binom(n - 1, large - 1) * binom(n, small) + binom(n - 1, small - 1) * binom(n, large)
    raise ValidationError(f"{kind.value} is not a vertex kind of bipartite hosts", field="kind")


def vertex_kinds(host: HostSpec) -> list[VertexKind]:
    if host.is_bipartite:
        return [VertexKind.SAME_SIDE_PAIR, VertexKind.CROSS_PAIR, VertexKind.VERTEX_COLOUR]
    return [VertexKind.PAIR_EDGE, VertexKind.VERTEX_COLOUR]


def h_vertices(block: Block) -> list[HVertex]:
    """H-vertices covered by a block: all its vertex pairs and its (vertex, colour) pairs."""
    pairs: list[HVertex] = [("pair", u, v) for u, v in block.pairs()]
    return pairs + [("vc", v, block.colour) for v in block.vertices]


@dataclass
class ExplicitHypergraph:
    """Fully materialized block hypergraph with degree and codegree tables."""

    host: HostSpec
    edges: list[Block]
    degrees: dict[HVertex, int]
    max_codegree: int
    codegree_witness: tuple[HVertex, HVertex] | None = None

    def kind_of(self, vertex: HVertex) -> VertexKind:
        tag, a, b = vertex
        if tag == "vc":
            return VertexKind.VERTEX_COLOUR
        if not self.host.is_bipartite:
            return VertexKind.PAIR_EDGE
        same = self.host.side(a) == self.host.side(b)
        return VertexKind.SAME_SIDE_PAIR if same else VertexKind.CROSS_PAIR

    def census(self) -> list[HVertex]:
        """Every H-vertex of the host, including any of degree zero."""
        pairs = [("pair", u, v) for u, v in itertools.combinations(self.host.vertices, 2)]
        colours = range(1, self.host.palette_size + 1)
        return pairs + [("vc", v, i) for v in self.host.vertices for i in colours]

    def degree(self, vertex: HVertex) -> int:
        return self.degrees.get(vertex, 0)

    def kind_degrees(self) -> dict[VertexKind, tuple[int, int]]:
        """(min, max) measured degree per vertex kind."""
        spans: dict[VertexKind, tuple[int, int]] = {}
        for vertex in self.census():
            kind = self.kind_of(vertex)
            value = self.degree(vertex)
            low, high = spans.get(kind, (value, value))
            spans[kind] = (min(low, value), max(high, value))
        return spans

    @property
    def min_degree(self) -> int:
        return min((self.degree(v) for v in self.census()), default=0)

    @property
    def max_degree(self) -> int:
        return max(self.degrees.values(), default=0)


def _codegree_scan(edges: Sequence[Block]) -> Counter:
    counts: Counter = Counter()
    for block in edges:
        counts.update(itertools.combinations(h_vertices(block), 2))
    return counts


def materialize(
    host: HostSpec, cap: int = DEFAULT_EDGE_CAP, workers: int = 1
) -> ExplicitHypergraph:
    """Enumerate every block of every colour and tabulate degrees and codegrees.

    Raises:
        CapExceededError: If the edge census exceeds `cap`; nothing is materialized
    """
    required = host.placement_count * host.palette_size
    if required > cap:
        raise CapExceededError(
            f"Hypergraph has {required} edges, above the cap of {cap}", cap=cap, required=required
        )

    start_time = time.time()
    colours = range(1, host.palette_size + 1)
    edges = [Block(i, vertices) for vertices in host.placements() for i in colours]

    degrees: Counter = Counter()
    for block in edges:
        degrees.update(h_vertices(block))

    codegrees: Counter = Counter()
    for partial in run_partitioned(_codegree_scan, chunked(edges, workers), workers):
        codegrees.update(partial)
    witness, max_codegree = max(codegrees.items(), key=lambda kv: kv[1], default=(None, 0))

    logger.info(
        json.dumps(
            {
                "action": "materialize_hypergraph",
                **host.to_dict(),
                "metrics": {
                    "edges": len(edges),
                    "max_codegree": max_codegree,
                    "duration_ms": int((time.time() - start_time) * 1000),
                },
            }
        )
    )
    return ExplicitHypergraph(
        host=host,
        edges=edges,
        degrees=dict(degrees),
        max_codegree=max_codegree,
        codegree_witness=witness,
    )


@dataclass
class AuditEntry:
    """One audited claim: bound or closed form, measured value, outcome."""

    claim: str
    bound: Any
    measured: Any
    passed: bool | None

    @property
    def status(self) -> str:
        if self.passed is None:
            return "info"
        return "PASS" if self.passed else "FAIL"


@dataclass
class AuditReport:
    """Audit entries for one host; informative, never fatal."""

    host: HostSpec
    title: str
    entries: list[AuditEntry] = field(default_factory=list)
    advisory: str | None = None

    def add(self, claim: str, bound: Any, measured: Any, passed: bool | None) -> None:
        self.entries.append(AuditEntry(claim, bound, measured, passed))

    def entry(self, claim: str) -> AuditEntry:
        for item in self.entries:
            if item.claim == claim:
                return item
        raise KeyError(claim)

    @property
    def passed(self) -> bool:
        return all(e.passed is not False for e in self.entries)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"claim": e.claim, "bound": str(e.bound), "measured": str(e.measured), "status": e.status}
                for e in self.entries
            ],
            columns=["claim", "bound", "measured", "status"],
        )

    def to_text(self) -> str:
        host = self.host
        lines = [
            f"{self.title}: mode={host.mode.value} n={host.n} k={host.k} ell={host.ell} eps={host.eps:.6g}",
            self.to_frame().to_string(index=False),
        ]
        if self.advisory:
            lines.append(f"advisory: {self.advisory}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "host": self.host.to_dict(),
            "entries": [
                {
                    "claim": e.claim,
                    "bound": str(e.bound),
                    "measured": str(e.measured),
                    "status": e.status,
                }
                for e in self.entries
            ],
            "advisory": self.advisory,
        }


def _regularity_holds(host: HostSpec) -> bool:
    d = host.d
    values = [degree_formula(host, kind) for kind in vertex_kinds(host)]
    return min(values) >= float(d) * (1 - float(d) ** -host.eps) and max(values) <= d


def minimum_n_advisory(host: HostSpec, limit: int = ADVISORY_LIMIT) -> int | None:
    """Smallest n' >= n at which the formula degrees meet the delta and Delta bounds."""
    for n in range(host.n, max(host.n, limit) + 1):
        if _regularity_holds(replace(host, n=n)):
            return n
    return None


def audit_regularity(
    host: HostSpec, cap: int = DEFAULT_EDGE_CAP, workers: int = 1
) -> AuditReport:
    """Compare measured degrees and codegrees of the materialized hypergraph with the claims."""
    hyper = materialize(host, cap=cap, workers=workers)
    report = AuditReport(host=host, title="regularity audit")
    d = host.d
    d_float = float(d)

    census = host.placement_count * host.palette_size
    report.add("census |E(H)| = placements * palette", census, len(hyper.edges), census == len(hyper.edges))

    for kind, (low, high) in hyper.kind_degrees().items():
        expected = degree_formula(host, kind)
        measured = str(low) if low == high else f"{low}..{high}"
        report.add(f"degree[{kind.value}] = formula", expected, measured, low == high == expected)

    lower = d_float * (1 - d_float**-host.eps) if d_float > 0 else 0.0
    report.add("delta(H) >= d(1-d^-eps)", f"{lower:.6g}", hyper.min_degree, hyper.min_degree >= lower)
    report.add("Delta(H) <= d", d, hyper.max_degree, hyper.max_degree <= d)
    upper = d_float ** (1 - host.eps)
    report.add(
        "Delta2(H) <= d^(1-eps)", f"{upper:.6g}", hyper.max_codegree, hyper.max_codegree <= upper
    )

    advised = minimum_n_advisory(host)
    if advised is None:
        report.advisory = f"formula degrees miss the delta/Delta bounds for all n <= {ADVISORY_LIMIT}"
    elif advised > host.n:
        report.advisory = f"formula degrees meet the delta/Delta bounds from n = {advised}"
    else:
        report.advisory = "formula degrees meet the delta/Delta bounds at this n"

    logger.info(
        json.dumps(
            {
                "action": "audit_regularity",
                **host.to_dict(),
                "passed": report.passed,
                "metrics": {"min_degree": hyper.min_degree, "max_degree": hyper.max_degree},
            }
        )
    )
    return report


@dataclass
class ConflictCensus:
    """Alternating-cycle conflicts in the two colours 1 and 2.

    Blocks are coded as `2 * placement_index + colour_bit`; colour bit 0 is colour 1.
    """

    placements: list[tuple[int, ...]]
    sets: dict[int, set[frozenset[int]]]
    arrangements: dict[int, int]

    def block(self, code: int) -> Block:
        return Block(code % 2 + 1, self.placements[code // 2])

    def conflict_blocks(self, m: int) -> set[frozenset[Block]]:
        return {frozenset(self.block(c) for c in s) for s in self.sets.get(m, set())}

    def ordered(self, m: int) -> int:
        """Conflicts counted as ordered sequences (every rotation and reflection)."""
        return self.arrangements.get(m, 0) * 4 * m


class _ConflictSearch:
    """Canonical DFS for alternating block cycles over all placements."""

    def __init__(self, host: HostSpec, cap: int):
        self.host = host
        self.cap = cap
        self.max_half = host.ell // 2
        self.placements = list(host.placements())
        self.vertex_sets = [frozenset(p) for p in self.placements]
        self.by_vertex: dict[int, list[int]] = {v: [] for v in host.vertices}
        for pid, placement in enumerate(self.placements):
            for v in placement:
                self.by_vertex[v].append(pid)

    def run(self, starts: Sequence[int]) -> tuple[dict[int, set[frozenset[int]]], dict[int, int], int]:
        sets: dict[int, set[frozenset[int]]] = {}
        arrangements: Counter = Counter()
        nodes = 0
        vsets = self.vertex_sets

        for start in starts:
            path = [start]
            colours = [0]
            links: list[int] = []
            occupied = [set(vsets[start]), set()]

            def extend() -> None:
                nonlocal nodes
                nodes += 1
                if nodes > self.cap:
                    raise CapExceededError(
                        f"Conflict enumeration exceeded {self.cap} search nodes", cap=self.cap
                    )
                size = len(path)
                current = path[-1]
                if size >= 4 and size % 2 == 0:
                    closing = vsets[current] & vsets[start]
                    if len(closing) == 1 and next(iter(closing)) not in links and path[1] < path[-1]:
                        m = size // 2
                        sets.setdefault(m, set()).add(
                            frozenset(2 * p + c for p, c in zip(path, colours, strict=True))
                        )
                        arrangements[m] += 1
                if size == 2 * self.max_half:
                    return
                colour = size % 2
                entry = links[-1] if links else None
                for w in sorted(vsets[current]):
                    if w == entry or w in links:
                        continue
                    for pid in self.by_vertex[w]:
                        if colour == 0 and pid <= start:
                            continue
                        candidate = vsets[pid]
                        if occupied[colour] & candidate:
                            continue
                        if len(candidate & vsets[current]) != 1:
                            continue
                        if any(
                            len(candidate & vsets[p]) > 1
                            for p, c in zip(path, colours, strict=True)
                            if c != colour
                        ):
                            continue
                        path.append(pid)
                        colours.append(colour)
                        links.append(w)
                        occupied[colour] |= candidate
                        extend()
                        occupied[colour] -= candidate
                        links.pop()
                        colours.pop()
                        path.pop()

            extend()
        return sets, dict(arrangements), nodes


def enumerate_conflicts(
    host: HostSpec, cap: int = DEFAULT_CONFLICT_CAP, workers: int = 1
) -> ConflictCensus:
    """All alternating 2m-cycle conflicts using colours 1 and 2, each cyclic arrangement once.

    Raises:
        CapExceededError: If the search exceeds `cap` nodes in any partition
    """
    search = _ConflictSearch(host, cap)
    sets: dict[int, set[frozenset[int]]] = {}
    arrangements: Counter = Counter()
    if host.palette_size >= 2:
        starts = list(range(len(search.placements)))
        for part_sets, part_arrangements, _ in run_partitioned(
            search.run, chunked(starts, max(1, workers)), workers
        ):
            for m, found in part_sets.items():
                sets.setdefault(m, set()).update(found)
            arrangements.update(part_arrangements)
    return ConflictCensus(placements=search.placements, sets=sets, arrangements=dict(arrangements))


def conflict_degrees(census: ConflictCensus, host: HostSpec, m: int) -> dict[int, int]:
    """Delta_j of the size-2m conflict family for j = 1..2m-1, over all colour pairs.

    Counts over colours {1, 2} scale by (palette - 1) for monochromatic j-sets, whose
    second colour is free.
    """
    spread = host.palette_size - 1
    sets = census.sets.get(m, set())
    result = {}
    for j in range(1, 2 * m):
        counts: Counter = Counter()
        for conflict in sets:
            counts.update(itertools.combinations(sorted(conflict), j))
        best = 0
        for subset, count in counts.items():
            monochromatic = len({code % 2 for code in subset}) == 1
            best = max(best, count * spread if monochromatic else count)
        result[j] = best
    return result


def audit_conflicts(
    host: HostSpec, cap: int = DEFAULT_CONFLICT_CAP, workers: int = 1
) -> AuditReport:
    """Enumerate the alternating-cycle conflicts and check the boundedness conditions."""
    materialize_required = host.placement_count * host.palette_size
    if materialize_required > DEFAULT_EDGE_CAP:
        raise CapExceededError(
            f"Hypergraph has {materialize_required} edges, above the cap of {DEFAULT_EDGE_CAP}",
            cap=DEFAULT_EDGE_CAP,
            required=materialize_required,
        )

    start_time = time.time()
    census = enumerate_conflicts(host, cap=cap, workers=workers)
    report = AuditReport(host=host, title="conflict audit")
    d = host.d
    d_float = float(d)
    pair_count = math.comb(host.palette_size, 2)
    max_size = 2 * (host.ell // 2)

    sizes_ok = all(
        len(conflict) == 2 * m and 4 <= 2 * m <= max_size
        for m, found in census.sets.items()
        for conflict in found
    )
    report.add("(C1) conflict sizes even in [4, 2*floor(ell/2)]", f"[4, {max_size}]", sorted(census.sets), sizes_ok)

    for m in host.half_range:
        size = 2 * m
        found = census.sets.get(m, set())
        report.add(f"|C^({size})| unordered sets", None, len(found) * pair_count, None)
        report.add(f"|C^({size})| ordered sequences", None, census.ordered(m) * pair_count, None)
        degrees = conflict_degrees(census, host, m)
        bound = max_size * d_float ** (size - 1)
        report.add(f"(C2) Delta(C^({size})) <= l*d^{size - 1}", f"{bound:.6g}", degrees[1], degrees[1] <= bound)
        for j in range(2, size):
            bound_j = d_float ** (size - j - host.eps)
            report.add(
                f"(C3) Delta_{j}(C^({size})) <= d^({size - j}-eps)",
                f"{bound_j:.6g}",
                degrees[j],
                degrees[j] <= bound_j,
            )

    logger.info(
        json.dumps(
            {
                "action": "audit_conflicts",
                **host.to_dict(),
                "passed": report.passed,
                "metrics": {
                    "conflict_sets": {m: len(s) * pair_count for m, s in census.sets.items()},
                    "duration_ms": int((time.time() - start_time) * 1000),
                },
            }
        )
    )
    return report


def _check_half(host: HostSpec, m: int) -> None:
    if m not in host.half_range:
        raise ValidationError(
            f"m={m} outside 2..{host.ell // 2} for ell={host.ell}", field="m"
        )


def _check_endpoints(host: HostSpec, u: int, v: int) -> None:
    if u == v or not (host.is_vertex(u) and host.is_vertex(v)):
        raise ValidationError(f"({u},{v}) are not two distinct host vertices", field="vertices")
    if host.is_bipartite and (host.side(u), host.side(v)) != (0, 1):
        raise ValidationError("bipartite counts need u in X and v in Y", field="vertices")


def _check_flags(host: HostSpec, **flags: int | None) -> None:
    if not host.is_bipartite:
        return
    for name, value in flags.items():
        if value not in (0, 1):
            raise ValidationError(f"bipartite flag {name} must be 0 or 1, got {value}", field=name)


def _complete_middles(remaining: int, block: int, count: int) -> int:
    """Unordered collections of `count` disjoint `block`-sets from `remaining` vertices."""
    ordered = 1
    for t in range(count):
        ordered *= binom(remaining - t * block, block)
    return ordered // math.factorial(count)


def _bipartite_ends(host: HostSpec, a: int, b: int) -> tuple[int, int, int]:
    """Choices for the x- and y-blocks, plus the X and Y vertices left for the middle blocks."""
    n, size = host.n, host.block_size
    first_x = math.comb(host.k + a, 2)
    last_y = math.comb(host.k + b, 2)
    first = binom(n - 1, first_x - 1) * binom(n - 1, size - first_x)
    last = binom(n - 1 - (size - first_x), last_y - 1) * binom(n - first_x, size - last_y)
    x_left = n - first_x - (size - last_y)
    y_left = n - (size - first_x) - last_y
    return first * last, x_left, y_left


def _bipartite_middles(host: HostSpec, x_left: int, y_left: int, small_count: int, large_count: int) -> int:
    """Unordered middle collections with the given numbers of each orientation."""
    small, large = host.block_sides
    size = host.block_size
    ordered = 1
    for orientation_x in [small] * small_count + [large] * large_count:
        ordered *= binom(x_left, orientation_x) * binom(y_left, size - orientation_x)
        x_left -= orientation_x
        y_left -= size - orientation_x
    return ordered // (math.factorial(small_count) * math.factorial(large_count))


def count_P(
    host: HostSpec, u: int, v: int, m: int, *, a: int | None = None, b: int | None = None
) -> int:
    """Exact number of sets of m disjoint same-coloured blocks with u in one block and v in another.

    Bipartite hosts also fix |A_1 ∩ X| = C(k+a, 2) and |A_m ∩ Y| = C(k+b, 2).
    """
    _check_half(host, m)
    _check_endpoints(host, u, v)
    _check_flags(host, a=a, b=b)
    if not host.is_bipartite:
        n, block = host.n, host.k - 1
        ends = binom(n - 2, block - 1) * binom(n - block - 1, block - 1)
        return host.palette_size * ends * _complete_middles(n - 2 * block, block, m - 2)

    ends, x_left, y_left = _bipartite_ends(host, a, b)
    middles = sum(
        _bipartite_middles(host, x_left, y_left, s, m - 2 - s) for s in range(m - 1)
    )
    return host.palette_size * ends * middles


def formula_P(host: HostSpec, m: int, *, a: int | None = None, b: int | None = None) -> Fraction:
    """Leading term of the P count."""
    _check_half(host, m)
    _check_flags(host, a=a, b=b)
    d, n, k = host.d, host.n, host.k
    if not host.is_bipartite:
        return Fraction(d**m * n ** (m - 1)) / (
            math.factorial(m - 2) * (k - 2) * (k - 1) ** (m - 2)
        )
    numerator = 2 ** (m - 1) * math.comb(k + a, 2) * math.comb(k + b, 2) * d**m * n ** (m - 1)
    return Fraction(numerator) / (k ** (2 * m) * (k * k - 1) * math.factorial(m - 2))


def _representative(host: HostSpec, u: int, v: int, m: int, a: int, b: int, small_count: int) -> list[frozenset[int]]:
    """One concrete P-set: u-block first, v-block last, middle blocks between."""
    if not host.is_bipartite:
        spare = [w for w in host.vertices if w not in (u, v)]
        block = host.k - 1
        first = frozenset([u, *spare[: block - 1]])
        last = frozenset([v, *spare[block - 1 : 2 * block - 2]])
        rest = spare[2 * block - 2 :]
        middles = [frozenset(rest[t * block : (t + 1) * block]) for t in range(m - 2)]
        return [first, *middles, last]

    size = host.block_size
    small, large = host.block_sides
    xs = [w for w in range(1, host.n + 1) if w != u]
    ys = [w for w in range(host.n + 1, 2 * host.n + 1) if w != v]

    def take(pool: list[int], count: int) -> list[int]:
        chosen = pool[:count]
        del pool[:count]
        return chosen

    first_x = math.comb(host.k + a, 2)
    first = frozenset([u, *take(xs, first_x - 1), *take(ys, size - first_x)])
    last_y = math.comb(host.k + b, 2)
    last = frozenset([v, *take(ys, last_y - 1), *take(xs, size - last_y)])
    middles = []
    for orientation_x in [small] * small_count + [large] * (m - 2 - small_count):
        middles.append(frozenset(take(xs, orientation_x) + take(ys, size - orientation_x)))
    return [first, *middles, last]


def _t_extension_count(
    host: HostSpec, blocks: list[frozenset[int]], u: int, v: int, c: int | None
) -> int:
    """Vertex sets B that extend the P-set `blocks` to a T-set."""
    first, last, middles = blocks[0], blocks[-1], blocks[1:-1]
    m = len(blocks)
    count = 0
    for placement in host.placements():
        candidate = set(placement)
        if u in candidate or v in candidate:
            continue
        meets = [len(candidate & block) for block in blocks]
        if max(meets) > 1 or meets[0] != 1:
            continue
        if host.is_bipartite and host.side(next(iter(candidate & first))) != 1:
            continue
        seconds = [last] if m == 2 else middles
        if any(_is_second(host, candidate, block, c) for block in seconds):
            count += 1
    return count


def _is_second(host: HostSpec, candidate: set[int], block: frozenset[int], c: int | None) -> bool:
    shared = candidate & block
    if len(shared) != 1:
        return False
    if not host.is_bipartite:
        return True
    x_size = sum(1 for w in block if host.side(w) == 0)
    return x_size == math.comb(host.k + c, 2) and host.side(next(iter(shared))) == 0


def count_T(
    host: HostSpec,
    u: int,
    v: int,
    m: int,
    *,
    a: int | None = None,
    b: int | None = None,
    c: int | None = None,
) -> int:
    """Exact number of P-sets extended by one block (B, j), j != i, meeting the T conditions.

    All P-sets with the same middle orientations are isomorphic under vertex permutations
    fixing u and v, so each orientation class is counted once on a representative.
    """
    _check_half(host, m)
    _check_endpoints(host, u, v)
    _check_flags(host, a=a, b=b, c=c)
    palette = host.palette_size
    if palette < 2:
        return 0

    if not host.is_bipartite:
        structures = count_P(host, u, v, m) // palette
        if structures == 0:
            return 0
        blocks = _representative(host, u, v, m, 0, 0, 0)
        return palette * (palette - 1) * structures * _t_extension_count(host, blocks, u, v, None)

    ends, x_left, y_left = _bipartite_ends(host, a, b)
    total = 0
    for small_count in range(m - 1):
        structures = ends * _bipartite_middles(host, x_left, y_left, small_count, m - 2 - small_count)
        if structures == 0:
            continue
        blocks = _representative(host, u, v, m, a, b, small_count)
        total += structures * _t_extension_count(host, blocks, u, v, c)
    return palette * (palette - 1) * total


def t_constant(host: HostSpec, m: int) -> Fraction:
    """The a-constant (complete) or z-constant (bipartite) of the T leading term."""
    k = host.k
    if host.is_bipartite:
        return Fraction(m - 2, 2) if m >= 3 else Fraction(1)
    return Fraction((m - 2) * (k - 1) * (k - 2)) if m >= 3 else Fraction((k - 2) ** 2)


def formula_T(
    host: HostSpec, m: int, *, a: int | None = None, b: int | None = None, c: int | None = None
) -> Fraction:
    """Leading term of the T count."""
    _check_half(host, m)
    _check_flags(host, a=a, b=b, c=c)
    d, n, k = host.d, host.n, host.k
    constant = t_constant(host, m)
    if not host.is_bipartite:
        return constant * d ** (m + 1) * n ** (m - 1) / (
            math.factorial(m - 2) * (k - 2) * (k - 1) ** (m - 2)
        )
    numerator = (
        Fraction(2) ** (m - 3) * math.comb(k + c, 2) * math.comb(k + b, 2) * constant
        * d ** (m + 1) * n ** (m - 1)
    )
    return numerator / (k ** (2 * m - 2) * math.factorial(m - 2))

