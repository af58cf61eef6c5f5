"""Tests for utility functions"""

import logging
import threading
from unittest import mock

import pytest
from cycleforge.errors import ConfigurationError, RetriesExhaustedError, StageFailure
from cycleforge.utils import (
    WORKERS_ENV,
    binom,
    chunked,
    iter_pairs,
    retry,
    run_partitioned,
    setup_logging,
    worker_count,
)


class TestWorkerCount:
    """Tests for the worker count override"""

    def test_default_when_unset(self, monkeypatch):
        """Test the default is used without the variable"""
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert worker_count() == 1
        assert worker_count(default=4) == 4

    def test_override(self, monkeypatch):
        """Test the variable overrides the default"""
        monkeypatch.setenv(WORKERS_ENV, "3")
        assert worker_count() == 3

    @pytest.mark.parametrize("raw", ["zero", "0", "-2"])
    def test_invalid_values(self, monkeypatch, raw):
        """Test non-integer and non-positive values are rejected"""
        monkeypatch.setenv(WORKERS_ENV, raw)
        with pytest.raises(ConfigurationError):
            worker_count()


class TestCombinatorics:
    """Tests for the small counting helpers"""

    def test_binom(self):
        """Test binomial coefficients inside and outside the valid range"""
        assert binom(6, 2) == 15
        assert binom(5, 0) == 1
        assert binom(3, 4) == 0
        assert binom(3, -1) == 0

    def test_iter_pairs(self):
        """Test all pairs come out ordered"""
        assert list(iter_pairs((1, 3, 5))) == [(1, 3), (1, 5), (3, 5)]

    def test_chunked(self):
        """Test chunks are contiguous, non-empty and cover the input"""
        items = list(range(10))
        chunks = chunked(items, 3)
        assert [len(c) for c in chunks] == [4, 3, 3]
        assert [x for c in chunks for x in c] == items
        assert chunked(items, 50) == [[x] for x in items]
        assert chunked([], 3) == []


class TestRunPartitioned:
    """Tests for the partitioned thread pool runner"""

    def test_inline(self):
        """Test a single worker runs inline in order"""
        assert run_partitioned(sum, [[1, 2], [3], [4, 5]]) == [3, 3, 9]

    def test_threaded_order(self):
        """Test results keep partition order with several workers"""
        threads = set()

        def work(part):
            threads.add(threading.get_ident())
            return [x * x for x in part]

        parts = chunked(list(range(20)), 4)
        result = run_partitioned(work, parts, workers=4)
        assert [x for chunk in result for x in chunk] == [x * x for x in range(20)]
        assert threads


class TestRetry:
    """Tests for the restart decorator"""

    def test_retry_success_first_attempt(self):
        """Test successful function on first attempt"""
        mock_func = mock.Mock(return_value="success")
        decorated = retry()(mock_func)

        assert decorated() == "success"
        mock_func.assert_called_once_with(attempt=0)

    def test_retry_success_second_attempt(self):
        """Test the attempt number advances on each restart"""
        mock_func = mock.Mock(side_effect=[StageFailure("uncertified"), "success"])
        decorated = retry(max_attempts=3)(mock_func)

        assert decorated() == "success"
        assert mock_func.call_args_list == [mock.call(attempt=0), mock.call(attempt=1)]

    def test_retry_all_fails(self):
        """Test the last certificate travels with the exhausted error"""
        mock_func = mock.Mock(
            side_effect=[StageFailure("first", certificate="a"), StageFailure("last", certificate="b")]
        )
        decorated = retry(max_attempts=2)(mock_func)

        with pytest.raises(RetriesExhaustedError) as excinfo:
            decorated()

        assert excinfo.value.attempts == 2
        assert excinfo.value.certificate == "b"
        assert mock_func.call_count == 2

    def test_retry_non_retryable_exception(self):
        """Test a failure that forbids restarts is raised at once"""
        error = StageFailure("fatal", retry_allowed=False)
        mock_func = mock.Mock(side_effect=[error])
        decorated = retry(max_attempts=3)(mock_func)

        with pytest.raises(StageFailure):
            decorated()

        assert mock_func.call_count == 1

    def test_other_exceptions_pass_through(self):
        """Test errors outside the retry set are not retried"""
        mock_func = mock.Mock(side_effect=ValueError("bug"))
        decorated = retry(max_attempts=3)(mock_func)

        with pytest.raises(ValueError, match="bug"):
            decorated()
        assert mock_func.call_count == 1


class TestLogging:
    """Tests for logger setup"""

    def test_setup_logging_once(self):
        """Test repeated setup does not stack handlers"""
        logger = setup_logging("debug")
        count = len(logger.handlers)
        setup_logging("INFO")
        assert len(logger.handlers) == count
        assert logger.level == logging.INFO
