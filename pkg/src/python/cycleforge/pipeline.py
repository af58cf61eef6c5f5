"""Stage orchestration: greedy matching, fresh colouring, resampling and verification"""

import dataclasses
import json
import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .certificate import Certificate, CertificateVerdict
from .errors import RetriesExhaustedError, StageFailure, ValidationError
from .lllcolour import ResampleLog, fresh_palette_size, init_fresh, moser_tardos
from .matcher import MatcherParams, MatchStats, greedy_match
from .model import HostMode, HostSpec, build_host, graph_of_matching, leftover_graph
from .utils import retry
from .verify import Verdict, VerifyMode, check_lemma_properties, verify_colouring

logger = logging.getLogger(__name__)

EXIT_CERTIFIED = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2
EXIT_RETRIES_EXHAUSTED = 3

STAGES = ("match", "fresh", "resample", "verify")


@dataclass
class PipelineConfig:
    """Everything one pipeline run needs; the host is validated on construction."""

    mode: HostMode | str = HostMode.COMPLETE
    n: int = 60
    k: int = 3
    ell: int = 4
    eps: float | None = None
    seed: int = 0
    alpha: float | None = None
    delta: float = 0.1
    max_rounds: int = 10_000
    restarts: int = 3
    matcher: MatcherParams = field(default_factory=MatcherParams)
    verify_mode: VerifyMode | str = VerifyMode.EXHAUSTIVE
    sample_budget: int = 1000
    verify_cap: int = 10**9
    check_properties: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        self.mode = HostMode(self.mode)
        self.verify_mode = VerifyMode(self.verify_mode)
        if self.restarts < 1:
            raise ValidationError("restart budget must be at least 1", field="restarts")
        if not 0 < self.delta < 1:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}", field="delta")
        if self.alpha is None:
            self.alpha = self.delta / 5
        if not 0 < self.alpha < 0.5:
            raise ValidationError(f"alpha must lie in (0, 1/2), got {self.alpha}", field="alpha")
        if self.max_rounds < 0:
            raise ValidationError("max rounds must be non-negative", field="max_rounds")
        self.host: HostSpec = build_host(self.mode, self.n, self.k, self.ell, self.eps)

    @property
    def fresh_palette(self) -> int:
        return fresh_palette_size(self.host.n, self.alpha)


def stage_seeds(root: int, attempt: int) -> dict[str, int]:
    """Per-stage seeds of one attempt, split from the root seed."""
    sequence = np.random.SeedSequence(entropy=root, spawn_key=(attempt,))
    children = sequence.spawn(len(STAGES))
    return {
        name: int(child.generate_state(1, dtype=np.uint32)[0])
        for name, child in zip(STAGES, children, strict=True)
    }


@dataclass
class PipelineResult:
    certificate: Certificate
    status: int
    attempts: int
    match_stats: MatchStats | None = None
    resample_log: ResampleLog | None = None
    verdict: Verdict | None = None
    properties: Any = None


class Pipeline:
    """Runs the stages in order and restarts with fresh seeds on an uncertified attempt."""

    def __init__(
        self,
        config: PipelineConfig,
        matcher: Callable = greedy_match,
        recolourer: Callable = moser_tardos,
        verifier: Callable = verify_colouring,
    ):
        self.config = config
        self.matcher = matcher
        self.recolourer = recolourer
        self.verifier = verifier

    def attempt(self, attempt: int = 0) -> PipelineResult:
        """One pass through all stages.

        Raises:
            StageFailure: If resampling or verification ends uncertified
        """
        cfg = self.config
        host = cfg.host
        seeds = stage_seeds(cfg.seed, attempt)

        params = dataclasses.replace(cfg.matcher, seed=seeds["match"])
        matching, _, match_stats = self.matcher(host, params)
        structured = graph_of_matching(matching, host)
        leftover = leftover_graph(structured)

        coloured = init_fresh(structured, cfg.alpha, seed=seeds["fresh"])
        recoloured, log = self.recolourer(
            coloured,
            matching,
            host,
            seed=seeds["resample"],
            max_rounds=cfg.max_rounds,
            r=cfg.fresh_palette,
        )

        stats: dict[str, Any] = {
            "attempt": attempt,
            "accepted": match_stats.accepted,
            "samples": match_stats.samples,
            "coverage": round(match_stats.coverage, 6),
            "stop_reason": match_stats.stop_reason,
            "leftover_edges": len(leftover),
            "leftover_max_degree": leftover.max_degree,
            "initial_events": log.initial_events,
            "resample_rounds": log.rounds,
            "residual_events": len(log.residual),
        }
        verdict = None
        if log.certified:
            verdict = self.verifier(
                recoloured,
                host,
                mode=cfg.verify_mode,
                sample_budget=cfg.sample_budget,
                seed=seeds["verify"],
                cap=cfg.verify_cap,
                workers=cfg.workers,
            )

        properties = None
        if cfg.check_properties:
            properties = check_lemma_properties(
                matching, recoloured, host, cfg.delta, seed=seeds["verify"]
            )
            for name, result in properties.results.items():
                stats[f"property_{name}"] = int(result.passed)

        certificate = Certificate(
            host=host,
            matching=matching,
            leftover=tuple(recoloured.fresh_edges().items()),
            seed=cfg.seed,
            alpha=cfg.alpha,
            delta=cfg.delta,
            fresh_palette=cfg.fresh_palette,
            stage_seeds=seeds,
            verdict=verdict.to_certificate_verdict() if verdict else CertificateVerdict(),
            stats=stats,
        )

        if not log.certified:
            raise StageFailure(
                f"Resampling stopped after {log.rounds} rounds with {len(log.residual)} events",
                certificate=certificate,
            )
        if not verdict.certified:
            raise StageFailure(
                f"Verification found {verdict.count} violating cycles", certificate=certificate
            )

        return PipelineResult(
            certificate=certificate,
            status=EXIT_CERTIFIED,
            attempts=attempt + 1,
            match_stats=match_stats,
            resample_log=log,
            verdict=verdict,
            properties=properties,
        )

    def run(self) -> PipelineResult:
        """Run attempts until one certifies or the restart budget is spent."""
        start_time = time.time()
        cfg = self.config
        runner = retry(max_attempts=cfg.restarts, logger=logger)(self.attempt)
        try:
            result = runner()
        except RetriesExhaustedError as e:
            result = PipelineResult(
                certificate=e.certificate, status=EXIT_RETRIES_EXHAUSTED, attempts=e.attempts
            )

        logger.info(
            json.dumps(
                {
                    "action": "run_pipeline",
                    **cfg.host.to_dict(),
                    "seed": cfg.seed,
                    "status": result.status,
                    "metrics": {
                        "attempts": result.attempts,
                        "total_colours": result.certificate.total_colours,
                        "duration_ms": int((time.time() - start_time) * 1000),
                    },
                }
            )
        )
        return result


def run_pipeline(config: PipelineConfig) -> tuple[Certificate, int]:
    """Run the full construction and return its certificate with the exit status."""
    result = Pipeline(config).run()
    return result.certificate, result.status
