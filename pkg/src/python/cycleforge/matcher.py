"""Conflict detection and the conflict-free random greedy block matching"""

import itertools
import json
import logging
import math
import time
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ForgeError, ValidationError
from .hyperaudit import count_P, count_T, degree_formula
from .model import Block, BlockMatching, HostSpec, MatchingBuilder, MatchingIndex, VertexKind
from .utils import binom

logger = logging.getLogger(__name__)

SAMPLE_BATCH = 4096


@dataclass(frozen=True)
class AlternatingCycleConflict:
    """Blocks (A_1,i),(B_1,j),...,(A_m,i),(B_m,j) with single-vertex links v_1,u_1,...,v_m,u_m."""

    m: int
    blocks: tuple[Block, ...]
    link_vertices: tuple[int, ...]

    @property
    def colours(self) -> tuple[int, int]:
        return self.blocks[0].colour, self.blocks[1].colour


@dataclass
class MatcherParams:
    """Configuration for the greedy matcher."""

    seed: int = 0
    stall_threshold: int = 100_000
    target_coverage: float | None = None
    max_samples: int | None = None
    recheck: bool = True
    track_pairs: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.stall_threshold < 1:
            raise ValidationError("stall threshold must be at least 1", field="stall_threshold")
        if self.target_coverage is not None and not 0 < self.target_coverage <= 1:
            raise ValidationError("target coverage must lie in (0, 1]", field="target_coverage")


@dataclass
class MatchStats:
    """Counters of one greedy run."""

    samples: int = 0
    accepted: int = 0
    rejected_incompatible: int = 0
    rejected_conflict: int = 0
    covered_edges: int = 0
    host_edges: int = 0
    stop_reason: str = "stall"
    duration_ms: int = 0
    accepted_order: list[Block] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return self.covered_edges / self.host_edges if self.host_edges else 0.0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.samples if self.samples else 0.0


@dataclass
class TrackedCount:
    """Measured size of M ∩ P (or M ∩ T) for one tracked pair, with its prediction."""

    kind: str
    u: int
    v: int
    m: int
    flags: tuple[int, ...]
    measured: int
    predicted: float

    @property
    def relative_deviation(self) -> float | None:
        if self.predicted == 0:
            return None
        return (self.measured - self.predicted) / self.predicted


@dataclass
class TestFunctionReport:
    """Test-function values of a matching next to their predicted values."""

    __test__ = False

    vertex_weights: dict[int, int]
    vertex_prediction: float
    band: float
    counts: list[TrackedCount] = field(default_factory=list)

    def vertex_deviation(self) -> float:
        """Largest relative deviation of w_v(M) from its prediction."""
        if not self.vertex_weights or self.vertex_prediction == 0:
            return 0.0
        values = np.array(list(self.vertex_weights.values()), dtype=float)
        return float(np.max(np.abs(values - self.vertex_prediction)) / self.vertex_prediction)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "kind": c.kind,
                    "u": c.u,
                    "v": c.v,
                    "m": c.m,
                    "flags": ",".join(map(str, c.flags)),
                    "measured": c.measured,
                    "predicted": c.predicted,
                    "deviation": c.relative_deviation,
                }
                for c in self.counts
            ],
            columns=["kind", "u", "v", "m", "flags", "measured", "predicted", "deviation"],
        )


def is_compatible(matching: MatchingIndex, cand: Block) -> bool:
    """True iff `cand` keeps same colours vertex-disjoint and other colours sharing at most one vertex."""
    return matching.conflicting_block(cand) is None


def find_conflict(
    matching: MatchingIndex, cand: Block, host: HostSpec
) -> AlternatingCycleConflict | None:
    """First alternating cycle through `cand` completed by blocks of the matching.

    Colours j are tried in increasing order and link vertices in sorted order. A matching
    that already contains `cand` is searched as if `cand` were absent.
    """
    max_blocks = 2 * (host.ell // 2)
    i = cand.colour
    colours = sorted({j for v in cand.vertices for j in matching.colours_at(v)} - {i})

    for j in colours:
        for v1 in cand.vertices:
            first = matching.block_at(j, v1)
            if first is None:
                continue
            found = _alternate(matching, cand, [cand, first], [v1], i, j, max_blocks)
            if found is not None:
                return found
    return None


def _alternate(
    matching: MatchingIndex,
    cand: Block,
    blocks: list[Block],
    links: list[int],
    i: int,
    j: int,
    max_blocks: int,
) -> AlternatingCycleConflict | None:
    current = blocks[-1]
    on_j = current.colour == j
    for w in current.vertices:
        if w in links:
            continue
        if on_j and w in cand:
            if len(blocks) >= 4:
                return AlternatingCycleConflict(
                    m=len(blocks) // 2, blocks=tuple(blocks), link_vertices=(*links, w)
                )
            continue
        if len(blocks) == max_blocks:
            continue
        nxt = matching.block_at(i if on_j else j, w)
        if nxt is None or nxt in blocks:
            continue
        blocks.append(nxt)
        links.append(w)
        found = _alternate(matching, cand, blocks, links, i, j, max_blocks)
        links.pop()
        blocks.pop()
        if found is not None:
            return found
    return None


def _candidates(host: HostSpec, rng: np.random.Generator) -> Iterator[Block]:
    """Uniform blocks: colour uniform in the palette, placement uniform among block-shape sets."""
    palette = host.palette_size
    if not host.is_bipartite:
        size = host.k - 1
        while True:
            colours = rng.integers(1, palette + 1, size=SAMPLE_BATCH)
            rows = rng.integers(1, host.n + 1, size=(SAMPLE_BATCH, size))
            for colour, row in zip(colours, rows, strict=True):
                vertices = tuple(int(v) for v in row)
                if len(set(vertices)) == size:
                    yield Block(int(colour), vertices)

    n = host.n
    while True:
        colour = int(rng.integers(1, palette + 1))
        x_size = host.block_sides[int(rng.integers(0, 2))]
        xs = rng.choice(n, size=x_size, replace=False) + 1
        ys = rng.choice(n, size=host.block_size - x_size, replace=False) + n + 1
        yield Block(colour, tuple(int(v) for v in np.concatenate([xs, ys])))


def _edges_per_block(host: HostSpec) -> int:
    if host.is_bipartite:
        small, large = host.block_sides
        return small * large
    return math.comb(host.k - 1, 2)


def greedy_match(
    host: HostSpec, params: MatcherParams | None = None
) -> tuple[BlockMatching, TestFunctionReport, MatchStats]:
    """Random greedy matching that accepts a sampled block iff it is compatible and conflict-free.

    Stops after `stall_threshold` consecutive rejections or once the target coverage is met.

    Raises:
        ForgeError: If the soundness re-check finds a conflict
    """
    params = params or MatcherParams()
    start_time = time.time()
    stats = MatchStats(host_edges=host.edge_count)
    builder = MatchingBuilder()

    if host.is_bipartite:
        fits = host.n >= host.block_sides[1]
    else:
        fits = host.n >= host.k - 1

    if not fits:
        stats.stop_reason = "no_placement"
    else:
        rng = np.random.default_rng(params.seed)
        stream = _candidates(host, rng)
        per_block = _edges_per_block(host)
        stall = 0
        while stall < params.stall_threshold:
            if params.max_samples is not None and stats.samples >= params.max_samples:
                stats.stop_reason = "max_samples"
                break
            cand = next(stream)
            stats.samples += 1
            if not is_compatible(builder, cand):
                stats.rejected_incompatible += 1
                stall += 1
                continue
            if find_conflict(builder, cand, host) is not None:
                stats.rejected_conflict += 1
                stall += 1
                continue
            builder.add(cand)
            stats.accepted_order.append(cand)
            stats.accepted += 1
            stats.covered_edges += per_block
            stall = 0
            if params.target_coverage is not None and stats.coverage >= params.target_coverage:
                stats.stop_reason = "target_coverage"
                break

    matching = builder.freeze()
    if params.recheck:
        for block in matching:
            conflict = find_conflict(matching, block, host)
            if conflict is not None:
                raise ForgeError(f"Accepted block {block} closes an alternating cycle")

    stats.duration_ms = int((time.time() - start_time) * 1000)
    report = track_tests(matching, host, params.track_pairs)
    logger.info(
        json.dumps(
            {
                "action": "greedy_match",
                **host.to_dict(),
                "seed": params.seed,
                "stop_reason": stats.stop_reason,
                "metrics": {
                    "samples": stats.samples,
                    "accepted": stats.accepted,
                    "rejected_incompatible": stats.rejected_incompatible,
                    "rejected_conflict": stats.rejected_conflict,
                    "coverage": round(stats.coverage, 6),
                    "duration_ms": stats.duration_ms,
                },
            }
        )
    )
    return matching, report, stats


def vertex_weight(host: HostSpec, matching: MatchingIndex, v: int) -> int:
    """w_v(M): host edges at v covered by blocks of the matching."""
    total = 0
    for colour in matching.colours_at(v):
        block = matching.block_at(colour, v)
        if host.is_bipartite:
            total += sum(1 for w in block.vertices if host.side(w) != host.side(v))
        else:
            total += len(block.vertices) - 1
    return total


def _x_size(host: HostSpec, block: Block) -> int:
    return sum(1 for w in block.vertices if host.side(w) == 0)


def _count_p_in(
    host: HostSpec, matching: MatchingIndex, u: int, v: int, m: int, a: int | None, b: int | None
) -> int:
    total = 0
    for colour in matching.colours_at(u):
        first = matching.block_at(colour, u)
        last = matching.block_at(colour, v)
        if last is None or last == first:
            continue
        if host.is_bipartite and not _ends_match(host, first, last, a, b):
            continue
        total += binom(len(matching.blocks_of_colour(colour)) - 2, m - 2)
    return total


def _ends_match(host: HostSpec, first: Block, last: Block, a: int, b: int) -> bool:
    return _x_size(host, first) == math.comb(host.k + a, 2) and (
        host.block_size - _x_size(host, last) == math.comb(host.k + b, 2)
    )


def _seconds_ok(host: HostSpec, extra: Block, block: Block, c: int | None) -> bool:
    shared = extra.vertex_set & block.vertex_set
    if len(shared) != 1:
        return False
    if not host.is_bipartite:
        return True
    return _x_size(host, block) == math.comb(host.k + c, 2) and host.side(next(iter(shared))) == 0


def _count_t_in(
    host: HostSpec,
    matching: MatchingIndex,
    u: int,
    v: int,
    m: int,
    a: int | None,
    b: int | None,
    c: int | None,
) -> int:
    total = 0
    for colour in matching.colours_at(u):
        first = matching.block_at(colour, u)
        last = matching.block_at(colour, v)
        if last is None or last == first:
            continue
        if host.is_bipartite and not _ends_match(host, first, last, a, b):
            continue
        others = [blk for blk in matching.blocks_of_colour(colour) if blk not in (first, last)]
        extras = {
            matching.block_at(j, w)
            for w in first.vertices
            if w != u
            for j in matching.colours_at(w)
            if j != colour
        }
        for extra in sorted(extras):
            if u in extra or v in extra:
                continue
            shared_first = extra.vertex_set & first.vertex_set
            if len(shared_first) != 1 or extra.shared(last) > 1:
                continue
            if host.is_bipartite and host.side(next(iter(shared_first))) != 1:
                continue
            if m == 2:
                total += int(_seconds_ok(host, extra, last, c))
                continue
            pool = [blk for blk in others if extra.shared(blk) <= 1]
            eligible = sum(1 for blk in pool if _seconds_ok(host, extra, blk, c))
            total += binom(len(pool), m - 2) - binom(len(pool) - eligible, m - 2)
    return total


def track_tests(
    matching: MatchingIndex, host: HostSpec, sample_pairs: Sequence[tuple[int, int, int]] = ()
) -> TestFunctionReport:
    """Exact test-function values of the matching and their predictions d^-j * w(H)."""
    d = float(host.d)
    if host.is_bipartite:
        w_h = host.n * degree_formula(host, VertexKind.CROSS_PAIR)
    else:
        w_h = (host.n - 1) * degree_formula(host, VertexKind.PAIR_EDGE)
    band = d ** -(host.eps**3) if d > 0 else 1.0
    report = TestFunctionReport(
        vertex_weights={v: vertex_weight(host, matching, v) for v in host.vertices},
        vertex_prediction=w_h / d if d else 0.0,
        band=band,
    )

    for u, v, m in sample_pairs:
        if host.is_bipartite:
            flag_sets = list(itertools.product((0, 1), repeat=2))
        else:
            flag_sets = [(None, None)]
        for a, b in flag_sets:
            flags = () if a is None else (a, b)
            report.counts.append(
                TrackedCount(
                    "P", u, v, m, flags,
                    _count_p_in(host, matching, u, v, m, a, b),
                    count_P(host, u, v, m, a=a, b=b) / d**m,
                )
            )
            for c in ((0, 1) if host.is_bipartite else (None,)):
                t_flags = flags if c is None else (*flags, c)
                report.counts.append(
                    TrackedCount(
                        "T", u, v, m, t_flags,
                        _count_t_in(host, matching, u, v, m, a, b, c),
                        count_T(host, u, v, m, a=a, b=b, c=c) / d ** (m + 1),
                    )
                )
    return report
