"""Tests for conflict detection and the greedy matcher"""

import itertools

import numpy as np
import pytest
from cycleforge.errors import ValidationError
from cycleforge.matcher import (
    MatcherParams,
    find_conflict,
    greedy_match,
    is_compatible,
    track_tests,
)
from cycleforge.model import Block, BlockMatching, MatchingBuilder, build_host, graph_of_matching
from cycleforge.verify import check_lemma_properties


def two_colour_links(blocks, i, j):
    """Blocks of colours i and j, joined when they share exactly one vertex."""
    pool = [b for b in blocks if b.colour in (i, j)]
    links = {b: [] for b in pool}
    for a, b in itertools.combinations(pool, 2):
        if a.colour != b.colour and len(a.vertex_set & b.vertex_set) == 1:
            links[a].append(b)
            links[b].append(a)
    return links


def on_alternating_cycle(links, start, limit):
    """Depth-first search for a cycle of at most `limit` blocks back to `start`."""
    stack = [(start, (start,))]
    while stack:
        block, path = stack.pop()
        for nxt in links[block]:
            if nxt == start and len(path) >= 3:
                return True
            if nxt not in path and len(path) < limit:
                stack.append((nxt, (*path, nxt)))
    return False


def blocks_on_cycles(blocks, host):
    """Every block lying on an alternating cycle of at most 2 * floor(ell / 2) blocks."""
    limit = 2 * (host.ell // 2)
    colours = sorted({b.colour for b in blocks})
    hit = set()
    for i, j in itertools.combinations(colours, 2):
        links = two_colour_links(blocks, i, j)
        hit |= {b for b in links if b not in hit and on_alternating_cycle(links, b, limit)}
    return hit


def random_compatible(host, seed, tries):
    """Uniform random blocks kept whenever they obey the matching rules."""
    rng = np.random.default_rng(seed)
    builder = MatchingBuilder()
    for _ in range(tries):
        colour = int(rng.integers(1, host.palette_size + 1))
        vertices = rng.choice(host.n, size=host.k - 1, replace=False) + 1
        block = Block(colour, tuple(int(v) for v in vertices))
        if builder.conflicting_block(block) is None:
            builder.add(block)
    return builder.freeze()


class TestConflicts:
    """Tests for compatibility and alternating-cycle detection"""

    def test_finds_alternating_four_cycle(self, conflict_host, alternating_blocks):
        """Test a candidate closing an alternating 4-cycle is caught"""
        matching = BlockMatching(alternating_blocks, host=conflict_host)
        conflict = find_conflict(matching, Block(1, (1, 2, 3)), conflict_host)
        assert conflict is not None
        assert conflict.m == 2
        assert conflict.colours == (1, 2)
        assert set(conflict.blocks) == {Block(1, (1, 2, 3)), *alternating_blocks}
        assert conflict.link_vertices == (1, 7, 5, 3)

    def test_open_path_is_no_conflict(self, conflict_host, alternating_blocks):
        """Test a candidate touching only one end of the path is accepted"""
        matching = BlockMatching(alternating_blocks, host=conflict_host)
        assert find_conflict(matching, Block(1, (1, 2, 9)), conflict_host) is None

    def test_six_block_cycle_needs_ell_six(self):
        """Test only cycles of at most 2*floor(ell/2) blocks count"""
        blocks = [
            Block(2, (3, 4, 5)),
            Block(1, (5, 6, 7)),
            Block(2, (7, 8, 9)),
            Block(1, (9, 10, 11)),
            Block(2, (11, 12, 1)),
        ]
        cand = Block(1, (1, 2, 3))
        short = build_host("complete", 12, 4, 4)
        long = build_host("complete", 12, 4, 6)
        matching = BlockMatching(blocks, host=long)
        assert find_conflict(matching, cand, short) is None
        conflict = find_conflict(matching, cand, long)
        assert conflict is not None
        assert conflict.m == 3

    def test_is_compatible(self, two_block_matching):
        """Test the two matching rules"""
        assert is_compatible(two_block_matching, Block(1, (7, 8, 9)))
        assert not is_compatible(two_block_matching, Block(1, (3, 8, 9)))
        assert not is_compatible(two_block_matching, Block(3, (1, 2, 9)))
        assert is_compatible(two_block_matching, Block(3, (1, 5, 9)))

    @pytest.mark.parametrize(("n", "k", "ell"), [(7, 4, 8), (6, 3, 8), (8, 4, 6)])
    def test_agrees_with_cycle_search(self, n, k, ell):
        """Test find_conflict flags exactly the blocks lying on short alternating cycles"""
        host = build_host("complete", n, k, ell)
        for seed in range(20):
            matching = random_compatible(host, seed, tries=4 + seed)
            on_cycles = blocks_on_cycles(list(matching), host)
            for block in matching:
                assert (find_conflict(matching, block, host) is not None) == (block in on_cycles)
                assert (find_conflict(matching.without(block), block, host) is None) == (
                    block not in on_cycles
                )

    def test_cycle_search_on_known_conflict(self, conflict_host, alternating_blocks):
        """Test the search finds all four blocks of a hand-built alternating 4-cycle"""
        blocks = [*alternating_blocks, Block(1, (1, 2, 3))]
        matching = BlockMatching(blocks, host=conflict_host)
        assert blocks_on_cycles(blocks, conflict_host) == set(blocks)
        for block in matching:
            assert find_conflict(matching.without(block), block, conflict_host) is not None

    def test_girth_property_matches_conflicts(self, conflict_host, alternating_blocks):
        """Test the two-colour girth check passes exactly on conflict-free matchings"""
        known = BlockMatching([*alternating_blocks, Block(1, (1, 2, 3))], host=conflict_host)
        colouring = graph_of_matching(known, conflict_host)
        assert not check_lemma_properties(known, colouring, conflict_host)["II"].passed

        outcomes = set()
        hosts = [(7, 4, 8), (6, 3, 8), (8, 4, 6), (9, 4, 4)]
        for (n, k, ell), seed in itertools.product(hosts, range(50)):
            host = build_host("complete", n, k, ell)
            matching = random_compatible(host, seed, tries=2 + seed % 25)
            free = not blocks_on_cycles(list(matching), host)
            colouring = graph_of_matching(matching, host)
            report = check_lemma_properties(matching, colouring, host, sample_edges=5, seed=seed)
            assert report["II"].passed == free
            outcomes.add(free)
        assert True in outcomes


class TestGreedyMatch:
    """Tests for the random greedy matcher"""

    def test_result_is_conflict_free(self, small_host):
        """Test every accepted block is compatible and closes no alternating cycle"""
        matching, _, stats = greedy_match(small_host, MatcherParams(seed=1, stall_threshold=2000))
        assert len(matching) == stats.accepted > 0
        for block in matching:
            small_host.validate_block(block)
            assert find_conflict(matching, block, small_host) is None
            assert is_compatible(matching.without(block), block)
        assert not blocks_on_cycles(list(matching), small_host)
        assert stats.covered_edges == 3 * stats.accepted
        assert stats.coverage == pytest.approx(3 * stats.accepted / 28)
        assert stats.stop_reason == "stall"
        assert stats.accepted_order[0] in matching

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(50))
    def test_edge_blocks_conflict_free(self, seed):
        """Test greedy runs on K_30 with edge blocks leave no alternating 4-cycle"""
        host = build_host("complete", 30, 3, 4)
        matching, _, stats = greedy_match(host, MatcherParams(seed=seed, stall_threshold=2000))
        assert stats.accepted > 0
        assert not blocks_on_cycles(list(matching), host)
        colouring = graph_of_matching(matching, host)
        report = check_lemma_properties(matching, colouring, host, sample_edges=20, seed=seed)
        assert report["I"].passed
        assert report["II"].passed

    def test_deterministic(self, small_host):
        """Test the same seed gives the same matching"""
        params = MatcherParams(seed=7, stall_threshold=500)
        first, _, _ = greedy_match(small_host, params)
        second, _, _ = greedy_match(small_host, params)
        assert first == second

    def test_target_coverage(self, small_host):
        """Test the run stops once the target share is covered"""
        _, _, stats = greedy_match(small_host, MatcherParams(seed=1, target_coverage=0.1))
        assert stats.stop_reason == "target_coverage"
        assert stats.coverage >= 0.1

    def test_max_samples(self, small_host):
        """Test the hard sample cap"""
        _, _, stats = greedy_match(small_host, MatcherParams(seed=1, max_samples=5))
        assert stats.stop_reason == "max_samples"
        assert stats.samples == 5

    def test_bipartite(self):
        """Test bipartite blocks take one of the two orientations"""
        host = build_host("bipartite", 5, 2, 4)
        matching, _, stats = greedy_match(host, MatcherParams(seed=3, stall_threshold=500))
        assert stats.accepted > 0
        for block in matching:
            xs, _ = host.split(block)
            assert len(xs) in (1, 3)

    def test_no_placement(self):
        """Test a host too small for any block returns an empty matching"""
        host = build_host("bipartite", 2, 2, 4)
        matching, _, stats = greedy_match(host)
        assert len(matching) == 0
        assert stats.stop_reason == "no_placement"

    def test_params_validation(self):
        """Test invalid matcher parameters"""
        with pytest.raises(ValidationError):
            MatcherParams(stall_threshold=0)
        with pytest.raises(ValidationError):
            MatcherParams(target_coverage=1.5)


class TestTrackTests:
    """Tests for test-function tracking"""

    def test_vertex_weights(self, conflict_host, two_block_matching):
        """Test w_v counts covered host edges at v"""
        report = track_tests(two_block_matching, conflict_host)
        assert report.vertex_weights[1] == 4
        assert report.vertex_weights[2] == 2
        assert report.vertex_weights[9] == 0
        assert report.vertex_deviation() > 0

    def test_tracked_pair(self, conflict_host, two_block_matching):
        """Test the measured P and T counts of a tracked pair"""
        report = track_tests(two_block_matching, conflict_host, [(2, 5, 2)])
        counts = {c.kind: c for c in report.counts}
        assert counts["P"].measured == 1
        assert counts["T"].measured == 1
        assert counts["P"].predicted > 0
        frame = report.to_frame()
        assert list(frame["kind"]) == ["P", "T"]
