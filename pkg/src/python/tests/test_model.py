"""Tests for hosts, blocks, matchings and colourings"""

from fractions import Fraction

import pytest
from cycleforge.errors import ColouringMismatchError, InvalidMatchingError, ValidationError
from cycleforge.model import (
    Block,
    BlockMatching,
    Colouring,
    HostMode,
    b_event_half_lengths,
    build_host,
    canonical_cycle,
    fresh,
    graph_of_matching,
    leftover_graph,
    structured,
)
from hypothesis import given, settings
from hypothesis import strategies as st


class TestBuildHost:
    """Tests for host validation and derived parameters"""

    @pytest.mark.parametrize(
        ("mode", "n", "k", "ell", "palette", "d"),
        [
            ("complete", 12, 4, 4, 6, Fraction(72)),
            ("complete", 10, 3, 3, 10, Fraction(10)),
            ("bipartite", 20, 2, 4, 13, Fraction(16000, 3)),
        ],
    )
    def test_derived_parameters(self, mode, n, k, ell, palette, d):
        """Test palette size and exact density"""
        host = build_host(mode, n, k, ell)
        assert host.palette_size == palette
        assert host.d == d

    def test_bipartite_layout(self):
        """Test X = 1..n, Y = n+1..2n and the block sides"""
        host = build_host("bipartite", 4, 2, 4)
        assert host.mode is HostMode.BIPARTITE
        assert list(host.vertices) == list(range(1, 9))
        assert host.block_sides == (1, 3)
        assert host.is_edge(1, 5)
        assert not host.is_edge(1, 2)
        assert host.edge_count == len(host.edges) == 16
        assert host.placement_count == len(list(host.placements())) == 32

    def test_default_eps(self):
        """Test the default exponent is half its upper end"""
        assert build_host("complete", 12, 4, 4).eps == pytest.approx(0.25)
        assert build_host("bipartite", 20, 2, 4).eps == pytest.approx(1 / 6)

    @pytest.mark.parametrize(
        ("mode", "n", "k", "ell", "eps", "field"),
        [
            ("complete", 10, 2, 4, None, "k"),
            ("complete", 10, 4, 3, None, "ell"),
            ("complete", 1, 4, 4, None, "n"),
            ("complete", 10, 4, 4, 0.5, "eps"),
            ("bipartite", 10, 2, 5, None, "ell"),
            ("bipartite", 10, 3, 6, None, "ell"),
            ("bipartite", 10, 1, 4, None, "k"),
            ("torus", 10, 4, 4, None, "mode"),
        ],
    )
    def test_rejects(self, mode, n, k, ell, eps, field):
        """Test out-of-range parameters name the offending field"""
        with pytest.raises(ValidationError) as excinfo:
            build_host(mode, n, k, ell, eps)
        assert excinfo.value.field == field

    def test_cycle_lengths(self):
        """Test forbidden lengths for both host families"""
        assert build_host("complete", 10, 3, 5).cycle_lengths == [3, 4, 5]
        assert build_host("bipartite", 10, 2, 6).cycle_lengths == [4, 6]

    def test_b_event_half_lengths(self):
        """Test the half-lengths of two-coloured leftover cycles"""
        assert list(b_event_half_lengths(HostMode.COMPLETE, 3, 6)) == [2, 3]
        assert list(b_event_half_lengths(HostMode.COMPLETE, 5, 8)) == [3, 4]
        assert list(b_event_half_lengths(HostMode.BIPARTITE, 2, 4)) == [2]
        assert list(b_event_half_lengths(HostMode.BIPARTITE, 3, 8)) == [4]


class TestBlocks:
    """Tests for blocks and block matchings"""

    def test_block_sorted(self):
        """Test vertices are stored sorted"""
        block = Block(2, (5, 1, 3))
        assert block.vertices == (1, 3, 5)
        assert 3 in block
        assert str(block) == "({1,3,5},2)"

    def test_block_rejects_repeats(self):
        """Test repeated vertices are rejected"""
        with pytest.raises(ValidationError):
            Block(1, (1, 1, 2))

    def test_validate_block_shape(self, conflict_host):
        """Test colour, size and range checks"""
        conflict_host.validate_block(Block(1, (1, 2, 3)))
        with pytest.raises(ValidationError):
            conflict_host.validate_block(Block(9, (1, 2, 3)))
        with pytest.raises(ValidationError):
            conflict_host.validate_block(Block(1, (1, 2)))
        with pytest.raises(ValidationError):
            conflict_host.validate_block(Block(1, (1, 2, 10)))

    def test_bipartite_orientation(self):
        """Test both block orientations are admitted and mixed shapes are not"""
        host = build_host("bipartite", 4, 2, 4)
        host.validate_block(Block(1, (1, 5, 6, 7)))
        host.validate_block(Block(1, (1, 2, 3, 5)))
        with pytest.raises(ValidationError):
            host.validate_block(Block(1, (1, 2, 5, 6)))
        assert host.split(Block(1, (1, 2, 3, 5))) == ((1, 2, 3), (5,))
        assert len(host.block_edges(Block(1, (1, 5, 6, 7)))) == 3

    def test_same_colour_must_be_disjoint(self):
        """Test same-coloured blocks may not share a vertex"""
        with pytest.raises(InvalidMatchingError) as excinfo:
            BlockMatching([Block(1, (1, 2, 3)), Block(1, (3, 4, 5))])
        assert {excinfo.value.first, excinfo.value.second} == {
            Block(1, (1, 2, 3)),
            Block(1, (3, 4, 5)),
        }

    def test_different_colours_share_one_vertex(self):
        """Test blocks of different colours share at most one vertex"""
        BlockMatching([Block(1, (1, 2, 3)), Block(2, (3, 4, 5))])
        with pytest.raises(InvalidMatchingError):
            BlockMatching([Block(1, (1, 2, 3)), Block(2, (2, 3, 4))])

    def test_index(self, two_block_matching):
        """Test per-colour lookups"""
        assert two_block_matching.block_at(1, 5) == Block(1, (4, 5, 6))
        assert two_block_matching.block_at(2, 5) is None
        assert two_block_matching.colours_at(1) == [1, 2]
        assert two_block_matching.pair_owner(7, 1) == Block(2, (1, 4, 7))
        assert len(two_block_matching) == 3
        assert two_block_matching.without(Block(2, (1, 4, 7))) == BlockMatching(
            [Block(1, (1, 2, 3)), Block(1, (4, 5, 6))]
        )


class TestColouring:
    """Tests for colourings and the leftover graph"""

    def test_graph_of_matching(self, small_host):
        """Test block edges get the block colour and the rest stay uncoloured"""
        colouring = graph_of_matching([Block(1, (1, 2, 3)), Block(1, (4, 5, 6))], small_host)
        assert colouring.colour_of(3, 1) == structured(1)
        assert colouring.colour_of(3, 4) is None
        assert len(colouring.structured_edges()) == 6
        assert not colouring.is_total()

        leftover = leftover_graph(colouring)
        assert len(leftover) == 28 - 6
        assert leftover.degrees[1] == 5
        assert leftover.degrees[7] == 7
        assert leftover.max_degree == 7

    def test_rejects_foreign_edges(self, k4_host):
        """Test non-canonical pairs and out-of-palette colours are rejected"""
        with pytest.raises(ColouringMismatchError):
            Colouring(k4_host, {(2, 1): structured(1)})
        with pytest.raises(ColouringMismatchError):
            Colouring(k4_host, {(1, 2): structured(3)})
        with pytest.raises(ColouringMismatchError):
            Colouring(k4_host, {(1, 2): fresh(1)}, fresh_palette=0)

    def test_with_fresh_keeps_structure(self, small_host):
        """Test fresh colours fill leftover edges and cannot overwrite block edges"""
        base = graph_of_matching([Block(2, (1, 2, 3))], small_host)
        leftover = {e: 1 for e in base.uncoloured_edges()}
        full = base.with_fresh(leftover, alpha=0.1, fresh_palette=2)
        assert full.is_total()
        assert full.structured_edges() == base.structured_edges()
        assert full.colour_count() == 2
        assert set(full.nonstructured_edges()) == set(leftover)

        with pytest.raises(ColouringMismatchError):
            base.with_fresh({(1, 2): 1}, alpha=0.1, fresh_palette=2)


class TestCanonicalCycle:
    """Tests for canonical cycle forms"""

    def test_examples(self):
        """Test rotation and direction choice"""
        assert canonical_cycle((3, 1, 2)) == (1, 2, 3)
        assert canonical_cycle((1, 4, 3, 2)) == (1, 2, 3, 4)
        assert canonical_cycle((2, 5, 1, 4)) == (1, 4, 2, 5)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.integers(1, 50), min_size=3, max_size=8, unique=True),
        st.integers(0, 7),
        st.booleans(),
    )
    def test_rotation_and_reflection_invariant(self, cycle, shift, flip):
        """Test every traversal of a cycle has the same canonical form"""
        shift %= len(cycle)
        other = cycle[shift:] + cycle[:shift]
        if flip:
            other = other[::-1]
        assert canonical_cycle(other) == canonical_cycle(cycle)
