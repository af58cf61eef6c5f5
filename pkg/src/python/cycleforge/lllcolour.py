"""Fresh-palette colouring of the leftover graph and bad-event resampling"""

import json
import logging
import math
import time
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from .errors import PartialColouringError, ValidationError
from .model import (
    Block,
    BlockMatching,
    Colouring,
    Edge,
    HostMode,
    HostSpec,
    b_event_half_lengths,
    canonical_cycle,
    edge_key,
)
from .utils import chunked, run_partitioned

logger = logging.getLogger(__name__)

NEAR_INTEGER = 1e-9


class EventKind(str, Enum):
    """Bad-event families"""

    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class BadEvent:
    """One occurring bad event.

    A: two adjacent leftover edges with the same fresh colour, witnessed by the shared
    vertex and the colour. B: a properly two-coloured leftover cycle. C: a cycle alternating
    between edges of distinct blocks of one structured colour and leftover edges of a
    single fresh colour.
    """

    kind: EventKind
    scope: tuple[Edge, ...]
    cycle: tuple[int, ...] = ()
    vertex: int | None = None
    colour: int | None = None
    blocks: tuple[Block, ...] = ()

    @property
    def identity(self) -> tuple:
        if self.kind is EventKind.A:
            return (self.kind.value, self.scope)
        return (self.kind.value, self.cycle)

    @property
    def m(self) -> int | None:
        return len(self.cycle) // 2 if self.cycle else None

    def __str__(self) -> str:
        edges = " ".join(f"{u}-{v}" for u, v in self.scope)
        return f"{self.kind.value} {edges}"


@dataclass(frozen=True)
class FeasibilityCheck:
    """One exponent condition of the local lemma, for one family and half-length."""

    family: str
    m: int | None
    condition: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs < self.rhs


@dataclass
class LLLWeights:
    """Local-lemma weights x, y_m, z_m with the event probabilities they are set against."""

    n: int
    alpha: float
    delta: float
    r: int
    x: float
    y: dict[int, float]
    z: dict[int, float]
    probabilities: dict[str, float] = field(default_factory=dict)
    neighbourhoods: dict[str, float] = field(default_factory=dict)


@dataclass
class FeasibilityReport:
    """Which exponent inequalities hold for the chosen alpha and delta."""

    alpha: float
    delta: float
    checks: list[FeasibilityCheck] = field(default_factory=list)

    @property
    def alpha_bound(self) -> float:
        return min(self.delta / 4, 0.5)

    @property
    def alpha_below_bound(self) -> bool:
        return self.alpha < self.alpha_bound

    @property
    def feasible(self) -> bool:
        return all(check.holds for check in self.checks)

    def failures(self) -> list[FeasibilityCheck]:
        return [check for check in self.checks if not check.holds]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "family": c.family,
                    "m": c.m,
                    "condition": c.condition,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "holds": c.holds,
                }
                for c in self.checks
            ],
            columns=["family", "m", "condition", "lhs", "rhs", "holds"],
        )


@dataclass(frozen=True)
class ResampleEntry:
    round: int
    kind: EventKind
    scope: tuple[Edge, ...]

    def to_line(self) -> str:
        edges = " ".join(f"{u}-{v}" for u, v in self.scope)
        return f"R {self.round} {self.kind.value} {edges}"


@dataclass
class ResampleLog:
    """Trace of one resampling run."""

    seed: int
    max_rounds: int
    initial_events: int = 0
    rounds: int = 0
    certified: bool = False
    entries: list[ResampleEntry] = field(default_factory=list)
    residual: list[BadEvent] = field(default_factory=list)
    duration_ms: int = 0

    def kind_counts(self) -> dict[str, int]:
        counts = {kind.value: 0 for kind in EventKind}
        for entry in self.entries:
            counts[entry.kind.value] += 1
        return counts

    def lines(self) -> list[str]:
        return [entry.to_line() for entry in self.entries]

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.lines())


def fresh_palette_size(n: int, alpha: float) -> int:
    """r = ceil(n^(1-alpha)); values within 1e-9 of an integer are taken as that integer."""
    value = n ** (1 - alpha)
    nearest = round(value)
    if abs(value - nearest) < NEAR_INTEGER:
        return max(1, int(nearest))
    return max(1, math.ceil(value))


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 0.5:
        raise ValidationError(f"alpha must lie in (0, 1/2), got {alpha}", field="alpha")


def init_fresh(colouring: Colouring, alpha: float, seed: int = 0) -> Colouring:
    """Give every uncoloured edge an independent uniform colour from the fresh palette [r].

    Raises:
        ValidationError: If alpha is outside (0, 1/2)
    """
    _check_alpha(alpha)
    leftover = colouring.uncoloured_edges()
    if not leftover:
        return colouring

    r = fresh_palette_size(colouring.host.n, alpha)
    rng = np.random.default_rng(seed)
    draws = rng.integers(1, r + 1, size=len(leftover))
    assignment = {e: int(c) for e, c in zip(leftover, draws, strict=True)}
    logger.info(
        json.dumps(
            {
                "action": "init_fresh",
                "alpha": alpha,
                "seed": seed,
                "metrics": {"leftover_edges": len(leftover), "fresh_palette": r},
            }
        )
    )
    return colouring.with_fresh(assignment, alpha=alpha, fresh_palette=r)


def lll_weights(
    n: int,
    alpha: float,
    delta: float,
    k: int,
    ell: int,
    mode: HostMode | str = HostMode.COMPLETE,
    max_degree: int | None = None,
) -> tuple[LLLWeights, FeasibilityReport]:
    """Local-lemma weights and the exponent conditions they need.

    Infeasible parameters are reported, never rejected.

    Raises:
        ValidationError: If alpha or delta is outside (0, 1)
    """
    for name, value in (("alpha", alpha), ("delta", delta)):
        if not 0 < value < 1:
            raise ValidationError(f"{name} must lie in (0, 1), got {value}", field=name)
    mode = HostMode(mode)
    b_range = b_event_half_lengths(mode, k, ell)
    c_range = range(2, ell // 2 + 1)
    r = fresh_palette_size(n, alpha)

    weights = LLLWeights(
        n=n,
        alpha=alpha,
        delta=delta,
        r=r,
        x=float(n) ** (-2 + 3 * alpha),
        y={m: float(n) ** (-(2 * m - 2) + (2 * m - 1) * alpha) for m in b_range},
        z={m: float(n) ** (-m + (m + 1) * alpha) for m in c_range},
    )
    weights.probabilities["A"] = r**-2
    for m in b_range:
        weights.probabilities[f"B{m}"] = r * (r - 1) / r ** (2 * m)
    for m in c_range:
        weights.probabilities[f"C{m}"] = r**-m
    if max_degree is not None:
        weights.neighbourhoods["A"] = float(max_degree * r)
        for m in b_range:
            weights.neighbourhoods[f"B{m}"] = float(max_degree) ** (2 * m - 2)
        for m in c_range:
            weights.neighbourhoods[f"C{m}"] = r * float(n) ** ((m - 1) * (1 - delta))

    report = FeasibilityReport(alpha=alpha, delta=delta)
    report.checks.append(FeasibilityCheck("A", None, "2a < d", 2 * alpha, delta))
    for m in b_range:
        report.checks.append(
            FeasibilityCheck(
                "B", m, "(2m-1)a < (2m-2)d", (2 * m - 1) * alpha, (2 * m - 2) * delta
            )
        )
    for m in c_range:
        report.checks.append(
            FeasibilityCheck("C", m, "(m+2)a < (m-1)d", (m + 2) * alpha, (m - 1) * delta)
        )

    logger.debug(
        json.dumps(
            {
                "action": "lll_weights",
                "n": n,
                "alpha": alpha,
                "delta": delta,
                "feasible": report.feasible,
                "alpha_below_bound": report.alpha_below_bound,
            }
        )
    )
    return weights, report


class EventScanner:
    """Fresh-colour adjacency of the leftover graph with A, B and C event searches."""

    def __init__(self, host: HostSpec, matching: BlockMatching, fresh_colours: dict[Edge, int]):
        self.host = host
        self.matching = matching
        self.colour_of: dict[Edge, int] = dict(fresh_colours)
        self.adj: dict[int, dict[int, set[int]]] = {}
        for (u, v), c in self.colour_of.items():
            self._link(u, v, c)
        self.b_lengths = {2 * m for m in host.b_event_range}
        self.max_b = max(self.b_lengths, default=0)
        self.max_blocks = host.ell // 2

    def _link(self, u: int, v: int, c: int) -> None:
        self.adj.setdefault(u, {}).setdefault(c, set()).add(v)
        self.adj.setdefault(v, {}).setdefault(c, set()).add(u)

    def _unlink(self, u: int, v: int, c: int) -> None:
        for a, b in ((u, v), (v, u)):
            bucket = self.adj[a][c]
            bucket.discard(b)
            if not bucket:
                del self.adj[a][c]

    def recolour(self, edge: Edge, colour: int) -> None:
        old = self.colour_of[edge]
        if old == colour:
            return
        self._unlink(*edge, old)
        self.colour_of[edge] = colour
        self._link(*edge, colour)

    def neighbours(self, v: int, c: int) -> list[int]:
        return sorted(self.adj.get(v, {}).get(c, ()))

    def partners(self, block: Block, v: int) -> list[int]:
        """Vertices joined to v by an edge of the block."""
        if self.host.is_bipartite:
            side = self.host.side(v)
            return [w for w in block.vertices if self.host.side(w) != side]
        return [w for w in block.vertices if w != v]

    # A events

    def a_events_at(self, v: int) -> list[BadEvent]:
        events = []
        for c, bucket in sorted(self.adj.get(v, {}).items()):
            ends = sorted(bucket)
            for i, w1 in enumerate(ends):
                for w2 in ends[i + 1 :]:
                    scope = tuple(sorted((edge_key(v, w1), edge_key(v, w2))))
                    events.append(BadEvent(EventKind.A, scope, vertex=v, colour=c))
        return events

    def a_events_through(self, edge: Edge) -> list[BadEvent]:
        c = self.colour_of[edge]
        events = []
        for v, other in (edge, edge[::-1]):
            for w in self.neighbours(v, c):
                if w != other:
                    scope = tuple(sorted((edge, edge_key(v, w))))
                    events.append(BadEvent(EventKind.A, scope, vertex=v, colour=c))
        return events

    # B events

    def _b_event(self, path: list[int]) -> BadEvent:
        cycle = canonical_cycle(path)
        scope = tuple(sorted(edge_key(a, b) for a, b in zip(cycle, cycle[1:] + cycle[:1])))
        return BadEvent(EventKind.B, scope, cycle=cycle)

    def _b_walk(
        self,
        path: list[int],
        seen: set[int],
        pair: tuple[int, int],
        floor: int,
        oriented: bool,
        out: list[BadEvent],
    ) -> None:
        root = path[0]
        x = path[-1]
        edges = len(path) - 1
        want = pair[edges % 2]
        closing = edges + 1
        if (
            closing in self.b_lengths
            and root in self.adj.get(x, {}).get(want, ())
            and (not oriented or path[1] < x)
        ):
            out.append(self._b_event(path))
        if closing >= self.max_b:
            return
        for y in self.neighbours(x, want):
            if y <= floor or y in seen:
                continue
            path.append(y)
            seen.add(y)
            self._b_walk(path, seen, pair, floor, oriented, out)
            seen.discard(y)
            path.pop()

    def b_events_from(self, s: int) -> list[BadEvent]:
        """B events whose least vertex is s."""
        out: list[BadEvent] = []
        if not self.b_lengths:
            return out
        for a, bucket in sorted(self.adj.get(s, {}).items()):
            for w in sorted(bucket):
                if w <= s:
                    continue
                for b in sorted(self.adj.get(w, {})):
                    if b != a:
                        self._b_walk([s, w], {s, w}, (a, b), s, True, out)
        return out

    def b_events_through(self, edge: Edge) -> list[BadEvent]:
        out: list[BadEvent] = []
        if not self.b_lengths:
            return out
        p, q = edge
        a = self.colour_of[edge]
        for b in sorted(self.adj.get(q, {})):
            if b != a:
                self._b_walk([p, q], {p, q}, (a, b), 0, False, out)
        return out

    # C events

    def _c_event(self, path: list[int], blocks: list[Block], j: int) -> BadEvent:
        cycle = canonical_cycle(path)
        links = [edge_key(path[t], path[(t + 1) % len(path)]) for t in range(1, len(path), 2)]
        return BadEvent(
            EventKind.C,
            tuple(sorted(links)),
            cycle=cycle,
            colour=j,
            blocks=tuple(sorted(blocks)),
        )

    def _c_walk(
        self,
        path: list[int],
        seen: set[int],
        blocks: list[Block],
        i: int,
        j: int,
        floor: int,
        forced: int | None,
        out: list[BadEvent],
    ) -> None:
        root = path[0]
        v = path[-1]
        targets = [forced] if forced is not None else self.neighbours(v, j)
        for y in targets:
            if y == root:
                if len(blocks) >= 2:
                    out.append(self._c_event(path, blocks, j))
                continue
            if len(blocks) == self.max_blocks or y <= floor or y in seen:
                continue
            block = self.matching.block_at(i, y)
            if block is None or block in blocks:
                continue
            for z in self.partners(block, y):
                if z <= floor or z in seen:
                    continue
                path.extend((y, z))
                seen.update((y, z))
                blocks.append(block)
                self._c_walk(path, seen, blocks, i, j, floor, None, out)
                blocks.pop()
                seen.difference_update((y, z))
                del path[-2:]

    def c_events_from(self, s: int) -> list[BadEvent]:
        """C events whose least vertex is s, traversed from s along its block edge."""
        out: list[BadEvent] = []
        for i in self.matching.colours_at(s):
            block = self.matching.block_at(i, s)
            for v in self.partners(block, s):
                if v <= s:
                    continue
                for j in sorted(self.adj.get(v, {})):
                    self._c_walk([s, v], {s, v}, [block], i, j, s, None, out)
        return out

    def c_events_through(self, edge: Edge) -> list[BadEvent]:
        out: list[BadEvent] = []
        j = self.colour_of[edge]
        for v, y in (edge, edge[::-1]):
            for i in self.matching.colours_at(v):
                block = self.matching.block_at(i, v)
                for u in self.partners(block, v):
                    self._c_walk([u, v], {u, v}, [block], i, j, 0, y, out)
        return out

    def scan_from(self, starts: Iterable[int]) -> list[BadEvent]:
        events: list[BadEvent] = []
        for v in starts:
            events.extend(self.a_events_at(v))
            events.extend(self.b_events_from(v))
            events.extend(self.c_events_from(v))
        return events

    def scan_through(self, edges: Iterable[Edge]) -> list[BadEvent]:
        found: dict[tuple, BadEvent] = {}
        for edge in edges:
            for event in (
                *self.a_events_through(edge),
                *self.b_events_through(edge),
                *self.c_events_through(edge),
            ):
                found.setdefault(event.identity, event)
        return sort_events(found.values())


def sort_events(events: Iterable[BadEvent]) -> list[BadEvent]:
    return sorted(events, key=lambda e: e.identity)


def _scanner(colouring: Colouring, matching: BlockMatching, host: HostSpec) -> EventScanner:
    missing = colouring.uncoloured_edges()
    if missing:
        raise PartialColouringError(
            f"{len(missing)} leftover edges have no fresh colour", uncoloured=len(missing)
        )
    return EventScanner(host, matching, colouring.fresh_edges())


def detect_events(
    colouring: Colouring,
    matching: BlockMatching,
    host: HostSpec,
    touching: Iterable[Edge] | None = None,
    workers: int = 1,
) -> list[BadEvent]:
    """Every occurring A, B and C event, each reported once in canonical form.

    With `touching`, only events whose cycle or scope uses one of those leftover edges.

    Raises:
        PartialColouringError: If a leftover edge is still uncoloured
    """
    scanner = _scanner(colouring, matching, host)
    if touching is not None:
        edges = [edge_key(*e) for e in touching if edge_key(*e) in scanner.colour_of]
        return scanner.scan_through(edges)

    starts = list(host.vertices)
    parts = run_partitioned(scanner.scan_from, chunked(starts, workers), workers)
    return sort_events(event for part in parts for event in part)


class _EventPool:
    """Occurring events with O(1) uniform selection and removal by edge."""

    def __init__(self) -> None:
        self._items: list[BadEvent] = []
        self._position: dict[tuple, int] = {}
        self._by_edge: dict[Edge, set[tuple]] = {}

    def __len__(self) -> int:
        return len(self._items)

    def add(self, event: BadEvent) -> None:
        key = event.identity
        if key in self._position:
            return
        self._position[key] = len(self._items)
        self._items.append(event)
        for e in self._edges(event):
            self._by_edge.setdefault(e, set()).add(key)

    def pick(self, index: int) -> BadEvent:
        return self._items[index]

    def discard_touching(self, edges: Iterable[Edge]) -> None:
        keys: set[tuple] = set()
        for e in edges:
            keys |= self._by_edge.get(e, set())
        for key in sorted(keys):
            self._remove(key)

    def _remove(self, key: tuple) -> None:
        index = self._position.pop(key)
        event = self._items[index]
        last = self._items.pop()
        if index < len(self._items):
            self._items[index] = last
            self._position[last.identity] = index
        for e in self._edges(event):
            bucket = self._by_edge[e]
            bucket.discard(key)
            if not bucket:
                del self._by_edge[e]

    @staticmethod
    def _edges(event: BadEvent) -> set[Edge]:
        return set(event.scope)

    def events(self) -> list[BadEvent]:
        return sort_events(self._items)


def moser_tardos(
    colouring: Colouring,
    matching: BlockMatching,
    host: HostSpec,
    seed: int = 0,
    max_rounds: int = 10_000,
    r: int | None = None,
) -> tuple[Colouring, ResampleLog]:
    """Resample a uniformly chosen occurring event until none is left or the round cap is hit.

    Only leftover edges are resampled. An uncertified log carries the residual events.

    Raises:
        PartialColouringError: If a leftover edge is still uncoloured
    """
    start_time = time.time()
    r = r or colouring.fresh_palette
    scanner = _scanner(colouring, matching, host)
    log = ResampleLog(seed=seed, max_rounds=max_rounds)

    pool = _EventPool()
    for event in detect_events(colouring, matching, host):
        pool.add(event)
    log.initial_events = len(pool)

    rng = np.random.default_rng(seed)
    while len(pool) and log.rounds < max_rounds:
        event = pool.pick(int(rng.integers(len(pool))))
        log.rounds += 1
        draws = rng.integers(1, r + 1, size=len(event.scope))
        for e, c in zip(event.scope, draws, strict=True):
            scanner.recolour(e, int(c))
        log.entries.append(ResampleEntry(log.rounds, event.kind, event.scope))
        pool.discard_touching(event.scope)
        for found in scanner.scan_through(event.scope):
            pool.add(found)

    log.certified = len(pool) == 0
    log.residual = pool.events()
    log.duration_ms = int((time.time() - start_time) * 1000)
    result = colouring.with_fresh(scanner.colour_of, alpha=colouring.alpha, fresh_palette=r)

    logger.info(
        json.dumps(
            {
                "action": "moser_tardos",
                "seed": seed,
                "certified": log.certified,
                "metrics": {
                    "initial_events": log.initial_events,
                    "rounds": log.rounds,
                    "residual_events": len(log.residual),
                    "resampled": log.kind_counts(),
                    "duration_ms": log.duration_ms,
                },
            }
        )
    )
    return result, log
