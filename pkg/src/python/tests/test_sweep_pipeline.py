"""Tests for the sweep script"""

import pandas as pd
import pytest
from cycleforge.certificate import Certificate
from cycleforge.errors import StageFailure
from cycleforge.model import BlockMatching, build_host
from cycleforge.pipeline import EXIT_CERTIFIED, EXIT_RETRIES_EXHAUSTED, PipelineResult
from sweep_pipeline import generate_report, run_sweep


def result_for(config, status):
    certificate = Certificate(
        host=config.host,
        matching=BlockMatching(),
        fresh_palette=config.fresh_palette,
        stats={"coverage": 0.5, "leftover_max_degree": 6, "resample_rounds": 3},
    )
    return PipelineResult(certificate=certificate, status=status, attempts=1)


@pytest.fixture
def sweep_frame():
    return pd.DataFrame(
        [
            {
                "n": n,
                "seed": seed,
                "coverage": 0.5,
                "leftover_max_degree": 6,
                "resample_rounds": seed,
                "total_colours": n + 5,
                "lower_bound": n - 1,
                "certified": seed == 1,
                "seconds": 0.1,
            }
            for n in (10, 20)
            for seed in (1, 2)
        ]
    )


class TestRunSweep:
    """Tests for run_sweep"""

    def test_rows(self, mocker):
        """Test one row per size and seed with the pipeline's figures"""
        pipeline = mocker.patch("sweep_pipeline.Pipeline")
        pipeline.side_effect = lambda config: mocker.Mock(
            run=mocker.Mock(
                return_value=result_for(
                    config, EXIT_CERTIFIED if config.seed == 1 else EXIT_RETRIES_EXHAUSTED
                )
            )
        )
        df = run_sweep([10, 12], [1, 2], k=3, ell=4, alpha=0.25, stall=50)
        assert len(df) == 4
        assert list(df["certified"]) == [True, False, True, False]
        assert list(df["lower_bound"]) == [9, 9, 11, 11]
        first_config = pipeline.call_args_list[0].args[0]
        assert first_config.restarts == 1
        assert first_config.matcher.stall_threshold == 50
        assert df.iloc[0]["total_colours"] == build_host("complete", 10, 3, 4).palette_size + 6

    def test_skips_failures(self, mocker):
        """Test a failing run is logged and left out"""
        pipeline = mocker.patch("sweep_pipeline.Pipeline")
        pipeline.return_value.run.side_effect = StageFailure("boom", retry_allowed=False)
        assert run_sweep([10], [1], k=3, ell=4, alpha=0.25, stall=50).empty


class TestGenerateReport:
    """Tests for generate_report"""

    def test_writes_files(self, sweep_frame, tmp_path):
        """Test the CSV, summary and chart are written"""
        generate_report(sweep_frame, str(tmp_path))
        assert len(pd.read_csv(tmp_path / "sweep_results.csv")) == 4
        summary = (tmp_path / "sweep_summary.txt").read_text()
        assert summary.startswith("Pipeline Sweep Summary")
        assert "certified_share" in summary
        assert (tmp_path / "sweep_colours.png").stat().st_size > 0

    def test_empty(self, tmp_path):
        """Test an empty sweep still writes its table"""
        generate_report(pd.DataFrame(), str(tmp_path))
        assert (tmp_path / "sweep_results.csv").exists()
        assert not (tmp_path / "sweep_summary.txt").exists()
