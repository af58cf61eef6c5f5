#!/usr/bin/env python3
"""Sweep the full construction over host sizes and seeds.

For each (n, seed) the pipeline runs once with a restart budget of one, and the
coverage, leftover degree, resampling effort, colour budget and verdict are tabulated.
Results are written as CSV, a text summary and a chart of colours used against n.
"""

import argparse
import logging
import os
import time

import matplotlib.pyplot as plt
import pandas as pd
from cycleforge.errors import ForgeError
from cycleforge.exact import lower_bound_complete
from cycleforge.matcher import MatcherParams
from cycleforge.pipeline import EXIT_CERTIFIED, Pipeline, PipelineConfig
from cycleforge.utils import setup_logging

logger = logging.getLogger(__name__)


def run_sweep(
    sizes: list[int],
    seeds: list[int],
    k: int,
    ell: int,
    alpha: float,
    stall: int,
    verify_mode: str = "exhaustive",
) -> pd.DataFrame:
    """Run one pipeline attempt per (n, seed) and collect one row each."""
    rows = []
    for n in sizes:
        for seed in seeds:
            start_time = time.time()
            config = PipelineConfig(
                n=n,
                k=k,
                ell=ell,
                seed=seed,
                alpha=alpha,
                restarts=1,
                matcher=MatcherParams(stall_threshold=stall),
                verify_mode=verify_mode,
            )
            try:
                result = Pipeline(config).run()
            except ForgeError as e:
                logger.error(f"n={n} seed={seed} failed: {e!s}")
                continue
            stats = result.certificate.stats
            rows.append(
                {
                    "n": n,
                    "seed": seed,
                    "coverage": stats.get("coverage"),
                    "leftover_max_degree": stats.get("leftover_max_degree"),
                    "resample_rounds": stats.get("resample_rounds"),
                    "total_colours": result.certificate.total_colours,
                    "lower_bound": lower_bound_complete(n, k).lower_bound,
                    "certified": result.status == EXIT_CERTIFIED,
                    "seconds": time.time() - start_time,
                }
            )
            logger.info(f"n={n} seed={seed} status={result.status}")
    return pd.DataFrame(rows)


def generate_report(df: pd.DataFrame, output_dir: str) -> None:
    """Write the raw table, a per-n summary and the colour chart."""
    os.makedirs(output_dir, exist_ok=True)
    df.to_csv(f"{output_dir}/sweep_results.csv", index=False)
    if df.empty:
        logger.warning("No rows to summarise")
        return

    summary = df.groupby("n").agg(
        coverage=("coverage", "mean"),
        leftover_max_degree=("leftover_max_degree", "max"),
        resample_rounds=("resample_rounds", "mean"),
        total_colours=("total_colours", "first"),
        lower_bound=("lower_bound", "first"),
        certified_share=("certified", "mean"),
    )
    with open(f"{output_dir}/sweep_summary.txt", "w") as f:
        f.write("Pipeline Sweep Summary\n")
        f.write("======================\n\n")
        f.write(summary.to_string())
        f.write("\n")

    plt.figure(figsize=(10, 6))
    plt.plot(summary.index, summary["total_colours"], marker="o", label="colours used")
    plt.plot(summary.index, summary["lower_bound"], marker="s", label="lower bound")
    plt.xlabel("n")
    plt.ylabel("colours")
    plt.title("Colour budget against the path lower bound")
    plt.legend()
    plt.grid(linestyle="--", alpha=0.7)
    plt.savefig(f"{output_dir}/sweep_colours.png", dpi=300, bbox_inches="tight")

    logger.info(f"Sweep report generated in {output_dir} directory")


def main() -> int:
    """Main entry point for the sweep script"""
    parser = argparse.ArgumentParser(description="Sweep the construction over n and seeds")
    parser.add_argument("--sizes", default="20,30,40,60", help="Comma-separated host sizes")
    parser.add_argument("--seeds", type=int, default=5, help="Seeds 1..N per size")
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--ell", type=int, default=4)
    parser.add_argument("--alpha", type=float, default=0.25)
    parser.add_argument("--stall", type=int, default=20_000, help="Matcher stall threshold")
    parser.add_argument(
        "--verify-mode", choices=["exhaustive", "sampled"], default="exhaustive"
    )
    parser.add_argument("--output", default="results", help="Output directory for results")
    args = parser.parse_args()

    setup_logging("INFO")
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    df = run_sweep(
        sizes,
        list(range(1, args.seeds + 1)),
        args.k,
        args.ell,
        args.alpha,
        args.stall,
        args.verify_mode,
    )
    generate_report(df, args.output)
    return 0


if __name__ == "__main__":
    exit(main())
