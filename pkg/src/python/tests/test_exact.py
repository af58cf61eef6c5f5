"""Tests for the exact solver and the bound calculators"""

from fractions import Fraction

import pytest
from cycleforge.errors import CapExceededError, ValidationError
from cycleforge.exact import (
    bipartite_bounds,
    block_parameter,
    complete_upper_budget,
    ex_path_bipartite,
    exact_ramsey,
    lower_bound_complete,
)


class TestExactRamsey:
    """Tests for the exhaustive colouring search"""

    @pytest.mark.parametrize(
        ("n", "k_low", "k_high", "value"),
        [(4, 4, 4, 3), (4, 3, 3, 3), (3, 4, 4, 1), (5, 3, 3, 5)],
    )
    def test_small_values(self, n, k_low, k_high, value):
        """Test known minimum colour counts"""
        result = exact_ramsey(n, k_low, k_high)
        assert result.value == value
        assert result.verified
        assert len(result.witness) == n * (n - 1) // 2
        assert max(result.witness.values()) <= value

    def test_unsat_counts(self):
        """Test every colour count below the answer was searched out"""
        result = exact_ramsey(4, 4, 4)
        assert set(result.unsat) == {1, 2}
        assert all(nodes > 0 for nodes in result.unsat.values())
        assert result.cycles == 3

    def test_without_symmetry(self):
        """Test symmetry breaking does not change the value"""
        assert exact_ramsey(4, 3, 3, symmetry=False).value == 3

    def test_workers(self):
        """Test the partitioned search finds the same value"""
        assert exact_ramsey(4, 4, 4, workers=3).value == 3

    def test_bipartite(self):
        """Test K_{2,2} is a single 4-cycle needing three colours"""
        result = exact_ramsey(2, 4, 4, mode="bipartite")
        assert result.value == 3
        assert result.to_dict()["mode"] == "bipartite"

    def test_q_two(self):
        """Test two colours per cycle on K_4 triangles"""
        assert exact_ramsey(4, 3, 3, q=2).value == 2

    def test_rejects(self):
        """Test invalid parameters and the size cap"""
        with pytest.raises(ValidationError):
            exact_ramsey(4, 2, 4)
        with pytest.raises(ValidationError):
            exact_ramsey(4, 4, 3)
        with pytest.raises(ValidationError):
            exact_ramsey(4, 4, 4, q=5)
        with pytest.raises(CapExceededError):
            exact_ramsey(9, 3, 3)
        with pytest.raises(CapExceededError):
            exact_ramsey(6, 4, 4, mode="bipartite")

    @pytest.mark.slow
    def test_k6_four_cycles(self):
        """Test a larger search still returns a verified witness"""
        result = exact_ramsey(6, 4, 4)
        assert result.verified
        assert result.value >= lower_bound_complete(6, 4).lower_bound


class TestBounds:
    """Tests for the closed-form bounds"""

    @pytest.mark.parametrize(("n", "k", "bound"), [(10, 4, 5), (10, 3, 9), (3, 3, 2), (7, 7, 2)])
    def test_lower_bound_complete(self, n, k, bound):
        """Test the path extremal lower bound"""
        assert lower_bound_complete(n, k).lower_bound == bound

    def test_lower_bound_rejects(self):
        """Test n >= k >= 3 is required"""
        with pytest.raises(ValidationError):
            lower_bound_complete(3, 4)
        with pytest.raises(ValidationError):
            lower_bound_complete(10, 2)

    @pytest.mark.parametrize(
        ("m", "n", "k", "value"), [(10, 10, 2, 32), (2, 10, 2, 20), (3, 10, 2, 20)]
    )
    def test_ex_path_bipartite(self, m, n, k, value):
        """Test the three regimes of the bipartite path extremal number"""
        assert ex_path_bipartite(m, n, k) == value

    def test_ex_path_rejects(self):
        """Test m <= n and k >= 1"""
        with pytest.raises(ValidationError):
            ex_path_bipartite(11, 10, 2)
        with pytest.raises(ValidationError):
            ex_path_bipartite(10, 10, 0)

    @pytest.mark.parametrize(
        ("k", "t", "coefficient"),
        [(4, 2, Fraction(2, 3)), (8, 3, Fraction(1, 4)), (14, 4, Fraction(2, 15))],
    )
    def test_bipartite_bounds(self, k, t, coefficient):
        """Test the block parameter and the upper coefficient"""
        report = bipartite_bounds(30, k)
        assert block_parameter(k) == t
        assert report.t == t
        assert report.upper_coefficient == coefficient
        assert report.upper_budget == int(coefficient * 30)

    def test_bipartite_lower_bound(self):
        """Test n^2 over the path extremal number"""
        report = bipartite_bounds(10, 6)
        assert report.path_extremal == 32
        assert report.lower_bound == 4

    def test_bipartite_rejects_odd(self):
        """Test odd k is rejected"""
        with pytest.raises(ValidationError):
            bipartite_bounds(10, 5)

    def test_complete_upper_budget(self):
        """Test the structured plus fresh budget"""
        report = complete_upper_budget(100, 3, 0.2)
        assert report.upper_budget == 140
        assert report.lower_bound == 99
        assert report.to_frame().iloc[0]["upper_budget"] == 140
