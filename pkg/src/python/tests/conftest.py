"""Pytest configuration for the tests."""

import pytest
from cycleforge.model import Block, BlockMatching, Colouring, build_host, fresh, structured


@pytest.fixture
def k4_host():
    """K_4 with every 4-cycle constrained"""
    return build_host("complete", 4, 4, 4)


@pytest.fixture
def small_host():
    """K_8 with blocks of three vertices"""
    return build_host("complete", 8, 4, 4)


@pytest.fixture
def conflict_host():
    """K_9 large enough for the alternating-cycle example blocks"""
    return build_host("complete", 9, 4, 4)


@pytest.fixture
def alternating_blocks():
    """Three blocks that an extra ({1,2,3},1) would close into an alternating 4-cycle"""
    return [Block(2, (3, 4, 5)), Block(1, (5, 6, 7)), Block(2, (7, 8, 1))]


@pytest.fixture
def monochromatic_k4(k4_host):
    """K_4 with every edge in structured colour 1"""
    return Colouring(k4_host, {e: structured(1) for e in k4_host.edges})


@pytest.fixture
def rainbow_k4(k4_host):
    """K_4 with six distinct fresh colours"""
    return Colouring(
        k4_host,
        {e: fresh(i) for i, e in enumerate(k4_host.edges, start=1)},
        fresh_palette=6,
    )


@pytest.fixture
def two_block_matching(conflict_host):
    """Two disjoint colour-1 blocks and a colour-2 block meeting each in one vertex"""
    return BlockMatching(
        [Block(1, (1, 2, 3)), Block(1, (4, 5, 6)), Block(2, (1, 4, 7))], host=conflict_host
    )
