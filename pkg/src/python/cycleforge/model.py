"""Core data model: host graphs, blocks, block matchings and edge colourings"""

import itertools
import json
import logging
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import NamedTuple

from .errors import ColouringMismatchError, InvalidMatchingError, ValidationError
from .utils import binom, iter_pairs

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


class HostMode(str, Enum):
    """Host graph family"""

    COMPLETE = "complete"
    BIPARTITE = "bipartite"


class VertexKind(str, Enum):
    """Kinds of vertices of the block hypergraph"""

    PAIR_EDGE = "pairEdge"
    SAME_SIDE_PAIR = "sameSidePair"
    CROSS_PAIR = "crossPair"
    VERTEX_COLOUR = "vertexColour"


def edge_key(u: int, v: int) -> Edge:
    """Canonical (min, max) key of an unordered pair."""
    return (u, v) if u < v else (v, u)


def canonical_cycle(cycle: Iterable[int]) -> tuple[int, ...]:
    """Rotate a cycle so its least vertex comes first, then take the neighbour-minimal direction."""
    seq = list(cycle)
    start = seq.index(min(seq))
    rotated = seq[start:] + seq[:start]
    if len(rotated) > 2 and rotated[-1] < rotated[1]:
        rotated = [rotated[0], *reversed(rotated[1:])]
    return tuple(rotated)


@dataclass(frozen=True)
class HostSpec:
    """Problem instance: host graph, cycle family and the derived block parameters.

    Complete hosts use vertices 1..n. Bipartite hosts use X = 1..n and Y = n+1..2n.
    """

    mode: HostMode
    n: int
    k: int
    ell: int
    eps: float

    @property
    def is_bipartite(self) -> bool:
        return self.mode is HostMode.BIPARTITE

    @property
    def vertex_count(self) -> int:
        return 2 * self.n if self.is_bipartite else self.n

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    @property
    def block_sides(self) -> tuple[int, int] | None:
        """Side sizes (C(k,2), C(k+1,2)) of a bipartite block; None for complete hosts."""
        if not self.is_bipartite:
            return None
        return (math.comb(self.k, 2), math.comb(self.k + 1, 2))

    @property
    def block_size(self) -> int:
        return self.k * self.k if self.is_bipartite else self.k - 1

    @property
    def palette_size(self) -> int:
        if self.is_bipartite:
            return (2 * self.n) // (self.k * self.k - 1)
        return self.n // (self.k - 2)

    @cached_property
    def d(self) -> Fraction:
        """Exact density parameter of the block hypergraph."""
        if self.is_bipartite:
            small, large = self.block_sides
            return Fraction(
                self.k * self.k * self.n ** (self.k * self.k - 1),
                math.factorial(small) * math.factorial(large),
            )
        return Fraction(self.n ** (self.k - 2), math.factorial(self.k - 2))

    @property
    def half_range(self) -> range:
        """Half-lengths m of alternating conflicts and C-events."""
        return range(2, self.ell // 2 + 1)

    @property
    def b_event_range(self) -> range:
        """Half-lengths m of the properly two-coloured leftover cycles."""
        return b_event_half_lengths(self.mode, self.k, self.ell)

    @property
    def cycle_lengths(self) -> list[int]:
        """Forbidden cycle lengths that must see at least three colours."""
        if self.is_bipartite:
            low = max(4, self.k * self.k - self.k + 2)
            return [h for h in range(low, self.ell + 1) if h % 2 == 0]
        return list(range(self.k, self.ell + 1))

    def side(self, v: int) -> int:
        """0 for X (or any complete-host vertex), 1 for Y."""
        return 1 if self.is_bipartite and v > self.n else 0

    def is_vertex(self, v: int) -> bool:
        return 1 <= v <= self.vertex_count

    def is_edge(self, u: int, v: int) -> bool:
        if u == v or not (self.is_vertex(u) and self.is_vertex(v)):
            return False
        return not self.is_bipartite or self.side(u) != self.side(v)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """All host edges in lexicographic order."""
        if self.is_bipartite:
            return tuple(
                (x, y) for x in range(1, self.n + 1) for y in range(self.n + 1, 2 * self.n + 1)
            )
        return tuple(itertools.combinations(self.vertices, 2))

    @property
    def edge_count(self) -> int:
        return self.n * self.n if self.is_bipartite else math.comb(self.n, 2)

    def neighbours(self, v: int) -> list[int]:
        if self.is_bipartite:
            if self.side(v) == 0:
                return list(range(self.n + 1, 2 * self.n + 1))
            return list(range(1, self.n + 1))
        return [u for u in self.vertices if u != v]

    def split(self, block: "Block") -> tuple[tuple[int, ...], tuple[int, ...]]:
        """X-side and Y-side vertices of a block."""
        xs = tuple(v for v in block.vertices if self.side(v) == 0)
        ys = tuple(v for v in block.vertices if self.side(v) == 1)
        return xs, ys

    def orientation(self, block: "Block") -> int:
        """0 when the X side has C(k,2) vertices, 1 when it has C(k+1,2)."""
        xs, _ = self.split(block)
        return 0 if len(xs) == self.block_sides[0] else 1

    def block_edges(self, block: "Block") -> list[Edge]:
        """Host edges spanned by a block."""
        if not self.is_bipartite:
            return list(iter_pairs(block.vertices))
        xs, ys = self.split(block)
        return [(x, y) for x in xs for y in ys]

    def validate_block(self, block: "Block") -> None:
        """Raise ValidationError unless the block has the block shape of this host."""
        if not 1 <= block.colour <= self.palette_size:
            raise ValidationError(
                f"Block colour {block.colour} outside palette 1..{self.palette_size}",
                field="colour",
            )
        if len(block.vertices) != self.block_size:
            raise ValidationError(
                f"Block {block.vertices} has {len(block.vertices)} vertices, "
                f"expected {self.block_size}",
                field="vertices",
            )
        if any(not self.is_vertex(v) for v in block.vertices):
            raise ValidationError(f"Block {block.vertices} leaves the host", field="vertices")
        if self.is_bipartite:
            xs, _ = self.split(block)
            if len(xs) not in self.block_sides:
                raise ValidationError(
                    f"Block {block.vertices} has X side of size {len(xs)}, "
                    f"expected one of {self.block_sides}",
                    field="vertices",
                )

    def placements(self) -> Iterator[tuple[int, ...]]:
        """Every vertex set of block shape, in lexicographic order per orientation."""
        if not self.is_bipartite:
            yield from itertools.combinations(self.vertices, self.k - 1)
            return
        xs_all = range(1, self.n + 1)
        ys_all = range(self.n + 1, 2 * self.n + 1)
        for x_size in self.block_sides:
            y_size = self.block_size - x_size
            for xs in itertools.combinations(xs_all, x_size):
                for ys in itertools.combinations(ys_all, y_size):
                    yield xs + ys

    @property
    def placement_count(self) -> int:
        if not self.is_bipartite:
            return binom(self.n, self.k - 1)
        small, large = self.block_sides
        return 2 * binom(self.n, small) * binom(self.n, large)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "n": self.n, "k": self.k, "ell": self.ell, "eps": self.eps}


def b_event_half_lengths(mode: HostMode, k: int, ell: int) -> range:
    """Half-lengths m for which a two-coloured leftover 2m-cycle is a bad event."""
    if mode is HostMode.BIPARTITE:
        low = (k * k - k + 2) // 2
    else:
        low = max(2, -(-k // 2))
    return range(low, ell // 2 + 1)


def default_eps(mode: HostMode, k: int) -> float:
    """Audit exponent used when none is configured: half of its admissible upper end."""
    if mode is HostMode.BIPARTITE:
        return 1 / (2 * (k * k - 1))
    return 1 / (2 * (k - 2))


def build_host(
    mode: HostMode | str, n: int, k: int, ell: int, eps: float | None = None
) -> HostSpec:
    """Validate the instance parameters and derive the block parameters.

    Raises:
        ValidationError: If any parameter is outside its admissible range
    """
    try:
        mode = HostMode(mode)
    except ValueError as e:
        raise ValidationError(f"Unknown host mode: {mode}", e, field="mode") from e

    if mode is HostMode.COMPLETE:
        if k < 3:
            raise ValidationError(f"k must be at least 3 for complete hosts, got {k}", field="k")
        if ell < k:
            raise ValidationError(f"ell must be at least k={k}, got {ell}", field="ell")
        if n < max(1, k - 2):
            raise ValidationError(
                f"n={n} leaves an empty palette for k={k}; need n >= {k - 2}", field="n"
            )
        eps_high = 1 / (k - 2)
    else:
        if k < 2:
            raise ValidationError(f"k must be at least 2 for bipartite hosts, got {k}", field="k")
        if ell % 2:
            raise ValidationError(f"ell must be even for bipartite hosts, got {ell}", field="ell")
        if ell < k * k - k + 2:
            raise ValidationError(
                f"ell must be at least k^2-k+2={k * k - k + 2}, got {ell}", field="ell"
            )
        if 2 * n < k * k - 1:
            raise ValidationError(
                f"n={n} leaves an empty palette for k={k}; need 2n >= {k * k - 1}", field="n"
            )
        eps_high = 1 / (k * k - 1)

    if eps is None:
        eps = default_eps(mode, k)
    if not 0 < eps < eps_high:
        raise ValidationError(f"eps must lie in (0, {eps_high:.6g}), got {eps}", field="eps")

    host = HostSpec(mode=mode, n=n, k=k, ell=ell, eps=eps)
    logger.debug(
        json.dumps(
            {
                "action": "build_host",
                **host.to_dict(),
                "palette_size": host.palette_size,
                "d": str(host.d),
            }
        )
    )
    return host


@dataclass(frozen=True, order=True)
class Block:
    """One hyperedge (A, i): a vertex set of the block shape with a structured colour."""

    colour: int
    vertices: tuple[int, ...]

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.vertices))
        if len(set(ordered)) != len(ordered):
            raise ValidationError(f"Block vertices must be distinct: {ordered}", field="vertices")
        object.__setattr__(self, "vertices", ordered)

    @cached_property
    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self.vertex_set

    def pairs(self) -> Iterator[Edge]:
        """All vertex pairs of the block, same-side pairs included."""
        return iter_pairs(self.vertices)

    def shared(self, other: "Block") -> int:
        return len(self.vertex_set & other.vertex_set)

    def __str__(self) -> str:
        return f"({{{','.join(map(str, self.vertices))}}},{self.colour})"


class MatchingIndex:
    """Per-colour vertex index and pair ownership table over a set of blocks."""

    def __init__(self) -> None:
        self._by_colour: dict[int, dict[int, Block]] = {}
        self._pairs: dict[Edge, Block] = {}
        self._blocks: set[Block] = set()

    def block_at(self, colour: int, v: int) -> Block | None:
        """The block of `colour` containing `v`, if any."""
        index = self._by_colour.get(colour)
        return index.get(v) if index else None

    def pair_owner(self, u: int, v: int) -> Block | None:
        return self._pairs.get(edge_key(u, v))

    def colours(self) -> list[int]:
        return sorted(c for c, index in self._by_colour.items() if index)

    def colours_at(self, v: int) -> list[int]:
        """Colours of the blocks containing `v`."""
        return sorted(c for c, index in self._by_colour.items() if v in index)

    def blocks_of_colour(self, colour: int) -> list[Block]:
        index = self._by_colour.get(colour, {})
        return sorted(set(index.values()))

    def conflicting_block(self, cand: Block) -> Block | None:
        """First block that `cand` cannot coexist with, or None."""
        same = self._by_colour.get(cand.colour)
        if same:
            for v in cand.vertices:
                if v in same:
                    return same[v]
        for pair in cand.pairs():
            owner = self._pairs.get(pair)
            if owner is not None:
                return owner
        return None

    def _insert(self, block: Block) -> None:
        index = self._by_colour.setdefault(block.colour, {})
        for v in block.vertices:
            index[v] = block
        for pair in block.pairs():
            self._pairs[pair] = block
        self._blocks.add(block)

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(sorted(self._blocks))

    def __contains__(self, block: object) -> bool:
        return block in self._blocks


class MatchingBuilder(MatchingIndex):
    """Mutable single-writer matching used while blocks are being accepted."""

    def add(self, block: Block) -> None:
        """Insert a block, rejecting it if it breaks either matching rule.

        Raises:
            InvalidMatchingError: With the offending block pair
        """
        other = self.conflicting_block(block)
        if other is not None:
            raise InvalidMatchingError(
                f"Blocks {other} and {block} cannot share a matching", first=other, second=block
            )
        self._insert(block)

    def freeze(self) -> "BlockMatching":
        return BlockMatching(self._blocks)


class BlockMatching(MatchingIndex):
    """Immutable set of blocks obeying the matching rules.

    Same-coloured blocks are vertex-disjoint and blocks of different colours share at
    most one vertex.
    """

    def __init__(self, blocks: Iterable[Block] = (), host: HostSpec | None = None):
        super().__init__()
        builder = MatchingBuilder()
        for block in sorted(set(blocks)):
            if host is not None:
                host.validate_block(block)
            builder.add(block)
        self._by_colour = builder._by_colour
        self._pairs = builder._pairs
        self._blocks = builder._blocks
        self._frozen = frozenset(self._blocks)

    def without(self, block: Block) -> "BlockMatching":
        return BlockMatching(b for b in self._frozen if b != block)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockMatching):
            return NotImplemented
        return self._frozen == other._frozen

    def __hash__(self) -> int:
        return hash(self._frozen)

    def __repr__(self) -> str:
        return f"BlockMatching({len(self)} blocks)"


class ColourKind(str, Enum):
    """Namespace of an edge colour"""

    STRUCTURED = "structured"
    FRESH = "fresh"


class EdgeColour(NamedTuple):
    """A structured or fresh colour; an uncoloured edge has no EdgeColour."""

    kind: ColourKind
    ident: int

    def __str__(self) -> str:
        prefix = "s" if self.kind is ColourKind.STRUCTURED else "f"
        return f"{prefix}{self.ident}"


def structured(ident: int) -> EdgeColour:
    return EdgeColour(ColourKind.STRUCTURED, ident)


def fresh(ident: int) -> EdgeColour:
    return EdgeColour(ColourKind.FRESH, ident)


@dataclass(frozen=True)
class Colouring:
    """Edge-colour assignment over a host; edges absent from `assignment` are uncoloured."""

    host: HostSpec
    assignment: Mapping[Edge, EdgeColour]
    alpha: float | None = None
    fresh_palette: int = 0

    def __post_init__(self) -> None:
        frozen = MappingProxyType(dict(self.assignment))
        for (u, v), colour in frozen.items():
            if u >= v or not self.host.is_edge(u, v):
                raise ColouringMismatchError(f"({u},{v}) is not a canonical host edge", (u, v))
            limit = (
                self.host.palette_size
                if colour.kind is ColourKind.STRUCTURED
                else self.fresh_palette
            )
            if not 1 <= colour.ident <= limit:
                raise ColouringMismatchError(
                    f"Colour {colour} on ({u},{v}) outside 1..{limit}", (u, v)
                )
        object.__setattr__(self, "assignment", frozen)

    def colour_of(self, u: int, v: int) -> EdgeColour | None:
        return self.assignment.get(edge_key(u, v))

    def uncoloured_edges(self) -> list[Edge]:
        return [e for e in self.host.edges if e not in self.assignment]

    def is_total(self) -> bool:
        return len(self.assignment) == self.host.edge_count

    def nonstructured_edges(self) -> list[Edge]:
        """Host edges not covered by a block: the leftover graph, whether fresh-coloured or not."""
        return [
            e
            for e in self.host.edges
            if (c := self.assignment.get(e)) is None or c.kind is ColourKind.FRESH
        ]

    def structured_edges(self) -> dict[Edge, int]:
        return {
            e: c.ident for e, c in self.assignment.items() if c.kind is ColourKind.STRUCTURED
        }

    def fresh_edges(self) -> dict[Edge, int]:
        return {e: c.ident for e, c in self.assignment.items() if c.kind is ColourKind.FRESH}

    def with_fresh(
        self, assignment: Mapping[Edge, int], alpha: float | None, fresh_palette: int
    ) -> "Colouring":
        """Copy with the given edges fresh-coloured; structured edges are kept as they are."""
        merged = dict(self.assignment)
        for e, ident in assignment.items():
            current = merged.get(e)
            if current is not None and current.kind is ColourKind.STRUCTURED:
                raise ColouringMismatchError(f"Edge {e} is structured and cannot be recoloured", e)
            merged[e] = fresh(ident)
        return Colouring(self.host, merged, alpha=alpha, fresh_palette=fresh_palette)

    def colour_count(self) -> int:
        return len(set(self.assignment.values()))


@dataclass(frozen=True)
class LeftoverGraph:
    """Host edges left uncoloured by the structured stage."""

    edges: tuple[Edge, ...]
    degrees: Mapping[int, int] = field(default_factory=dict)

    @property
    def max_degree(self) -> int:
        return max(self.degrees.values(), default=0)

    def __len__(self) -> int:
        return len(self.edges)


def graph_of_matching(matching: BlockMatching | Iterable[Block], host: HostSpec) -> Colouring:
    """Colour every host edge inside a block with the block's structured colour.

    Raises:
        InvalidMatchingError: If the blocks do not form a matching
    """
    if not isinstance(matching, BlockMatching):
        matching = BlockMatching(matching, host=host)
    assignment: dict[Edge, EdgeColour] = {}
    for block in matching:
        host.validate_block(block)
        colour = structured(block.colour)
        for e in host.block_edges(block):
            assignment[e] = colour
    return Colouring(host, assignment)


def leftover_graph(colouring: Colouring) -> LeftoverGraph:
    """Uncoloured host edges with their degree table."""
    edges = tuple(colouring.uncoloured_edges())
    degrees: dict[int, int] = {}
    for u, v in edges:
        degrees[u] = degrees.get(u, 0) + 1
        degrees[v] = degrees.get(v, 0) + 1
    return LeftoverGraph(edges=edges, degrees=degrees)
