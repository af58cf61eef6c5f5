"""Command-line entry point: forge, recolour, verify, audit, exact, bounds and pipeline"""

import argparse
import dataclasses
import json
import logging
import sys
import traceback
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .certificate import Certificate, CertificateVerdict, decode_certificate, encode_certificate
from .errors import ConfigurationError, ForgeError, ValidationError
from .exact import bipartite_bounds, complete_upper_budget, exact_ramsey, lower_bound_complete
from .hyperaudit import DEFAULT_CONFLICT_CAP, DEFAULT_EDGE_CAP, audit_conflicts, audit_regularity
from .lllcolour import fresh_palette_size, init_fresh, moser_tardos
from .matcher import MatcherParams, greedy_match
from .model import BlockMatching, HostMode, build_host, graph_of_matching
from .pipeline import (
    EXIT_CERTIFIED,
    EXIT_ERROR,
    EXIT_RETRIES_EXHAUSTED,
    EXIT_VIOLATIONS,
    Pipeline,
    PipelineConfig,
    stage_seeds,
)
from .utils import setup_logging, worker_count
from .verify import DEFAULT_CYCLE_CAP, VerifyMode, verify_colouring

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as ConfigurationError instead of exiting 2."""

    def error(self, message: str) -> None:
        raise ConfigurationError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _triple(text: str) -> tuple[int, int, int]:
    values = _int_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected u,v,m, got {text!r}")
    return values[0], values[1], values[2]


def _add_host_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode", choices=[m.value for m in HostMode], default="complete", help="Host family"
    )
    parser.add_argument("--n", type=int, required=True, help="Host size (per side if bipartite)")
    parser.add_argument(
        "--k", type=int, required=True, help="Shortest constrained cycle or block parameter"
    )
    parser.add_argument("--ell", type=int, required=True, help="Longest constrained cycle")
    parser.add_argument("--eps", type=float, help="Audit exponent (default: half its upper end)")


def _add_matcher_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--stall", type=int, default=100_000, help="Consecutive rejections before stopping"
    )
    parser.add_argument(
        "--target-coverage", type=float, help="Stop once this edge share is covered"
    )
    parser.add_argument("--max-samples", type=int, help="Hard cap on sampled candidates")
    parser.add_argument(
        "--track", type=_triple, action="append", default=[], help="Tracked u,v,m (repeatable)"
    )


def _add_lll_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, help="Fresh palette exponent (default: delta/5)")
    parser.add_argument("--delta", type=float, default=0.1, help="Leftover degree exponent")
    parser.add_argument("--max-rounds", type=int, default=10_000, help="Resampling round cap")


def _add_verify_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--verify-mode",
        choices=[m.value for m in VerifyMode],
        default="exhaustive",
        help="Enumerate every cycle or sample them",
    )
    parser.add_argument("--samples", type=int, default=1000, help="Sampled cycles per length")
    parser.add_argument("--cap", type=int, default=DEFAULT_CYCLE_CAP, help="Exhaustive tuple cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cycleforge",
        description="Build and check edge-colourings in which every short cycle sees three colours",
    )
    parser.add_argument("--seed", type=int, default=0, help="Root random seed (default: 0)")
    parser.add_argument(
        "--format", choices=["text", "json"], default="text", help="Output format (default: text)"
    )
    parser.add_argument("--out", help="Write the certificate or report here instead of stdout")
    parser.add_argument("--log-level", default="WARNING", help="Logging level (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    forge = sub.add_parser("forge", help="Run the greedy block matching")
    _add_host_args(forge)
    _add_matcher_args(forge)

    recolour = sub.add_parser("recolour", help="Fresh-colour the leftover graph and resample")
    recolour.add_argument("--in", dest="input", required=True, help="Certificate path or '-'")
    _add_lll_args(recolour)
    recolour.add_argument("--log", help="Write the resample log lines here")

    verify = sub.add_parser("verify", help="Verify a certificate's colouring")
    verify.add_argument("--in", dest="input", required=True, help="Certificate path or '-'")
    _add_verify_args(verify)
    verify.add_argument("--lengths", type=_int_list, help="Override cycle lengths, e.g. 4,5,6")

    audit = sub.add_parser("audit", help="Audit the block hypergraph and its conflicts")
    _add_host_args(audit)
    audit.add_argument(
        "--what", choices=["regularity", "conflicts", "all"], default="regularity"
    )
    audit.add_argument("--edge-cap", type=int, default=DEFAULT_EDGE_CAP)
    audit.add_argument("--conflict-cap", type=int, default=DEFAULT_CONFLICT_CAP)

    exact = sub.add_parser("exact", help="Exact minimum colour count on a tiny host")
    exact.add_argument(
        "--mode", choices=[m.value for m in HostMode], default="complete", help="Host family"
    )
    exact.add_argument("--n", type=int, required=True)
    exact.add_argument("--k-low", type=int, required=True)
    exact.add_argument("--k-high", type=int, required=True)
    exact.add_argument("--q", type=int, default=3)
    exact.add_argument(
        "--no-symmetry", action="store_true", help="Disable colour symmetry breaking"
    )
    exact.add_argument("--max-n", type=int, help="Override the host size cap")
    exact.add_argument("--witness", help="Write the witness colouring as a certificate here")

    bounds = sub.add_parser("bounds", help="Closed-form lower and upper bounds")
    bounds.add_argument(
        "--mode", choices=[m.value for m in HostMode], default="complete", help="Host family"
    )
    bounds.add_argument("--n", type=int, required=True)
    bounds.add_argument("--k", type=int, required=True)
    bounds.add_argument(
        "--alpha", type=float, help="Report the construction budget for this alpha"
    )

    pipeline = sub.add_parser("pipeline", help="forge, recolour and verify with restarts")
    _add_host_args(pipeline)
    _add_matcher_args(pipeline)
    _add_lll_args(pipeline)
    _add_verify_args(pipeline)
    pipeline.add_argument("--restarts", type=int, default=3, help="Restart budget (default: 3)")
    pipeline.add_argument(
        "--check-properties", action="store_true", help="Also run the structural property checks"
    )
    return parser


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ConfigurationError(f"Cannot read {path}: {e!s}", e) from e


def _write(path: str | None, data: bytes) -> None:
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise ConfigurationError(f"Cannot write {path}: {e!s}", e) from e


def _report(args: argparse.Namespace, payload: dict, text: str) -> bytes:
    if args.format == "json":
        return (json.dumps(payload, indent=2, default=str) + "\n").encode("utf-8")
    return text.encode("utf-8")


def _summary(payload: dict[str, Any]) -> str:
    return "".join(f"{key}: {value}\n" for key, value in payload.items())


def _matcher_params(args: argparse.Namespace, seed: int) -> MatcherParams:
    return MatcherParams(
        seed=seed,
        stall_threshold=args.stall,
        target_coverage=args.target_coverage,
        max_samples=args.max_samples,
        track_pairs=tuple(args.track),
    )


def cmd_forge(args: argparse.Namespace) -> int:
    host = build_host(args.mode, args.n, args.k, args.ell, args.eps)
    matching, tests, stats = greedy_match(host, _matcher_params(args, args.seed))
    certificate = Certificate(
        host=host,
        matching=matching,
        seed=args.seed,
        stage_seeds={"match": args.seed},
        stats={
            "accepted": stats.accepted,
            "samples": stats.samples,
            "coverage": round(stats.coverage, 6),
            "stop_reason": stats.stop_reason,
            "vertex_deviation": round(tests.vertex_deviation(), 6),
        },
    )
    _write(args.out, encode_certificate(certificate, args.format))
    if not tests.to_frame().empty:
        sys.stderr.write(tests.to_frame().to_string(index=False) + "\n")
    return EXIT_CERTIFIED


def cmd_recolour(args: argparse.Namespace) -> int:
    source = decode_certificate(_read(args.input))
    host = source.host
    delta = args.delta
    alpha = args.alpha if args.alpha is not None else delta / 5
    seeds = stage_seeds(args.seed, 0)
    structured = graph_of_matching(source.matching, host)
    coloured = init_fresh(structured, alpha, seed=seeds["fresh"])
    r = fresh_palette_size(host.n, alpha)
    recoloured, log = moser_tardos(
        coloured, source.matching, host, seed=seeds["resample"], max_rounds=args.max_rounds, r=r
    )
    certificate = dataclasses.replace(
        source,
        leftover=tuple(recoloured.fresh_edges().items()),
        alpha=alpha,
        delta=delta,
        fresh_palette=r,
        stage_seeds={**source.stage_seeds, "fresh": seeds["fresh"], "resample": seeds["resample"]},
        verdict=CertificateVerdict(),
        stats={
            **source.stats,
            "initial_events": log.initial_events,
            "resample_rounds": log.rounds,
            "residual_events": len(log.residual),
        },
    )
    _write(args.out, encode_certificate(certificate, args.format))
    if args.log:
        _write(args.log, log.to_text().encode("utf-8"))
    return EXIT_CERTIFIED if log.certified else EXIT_RETRIES_EXHAUSTED


def cmd_verify(args: argparse.Namespace) -> int:
    source = decode_certificate(_read(args.input))
    verdict = verify_colouring(
        source.colouring(),
        source.host,
        mode=args.verify_mode,
        sample_budget=args.samples,
        seed=args.seed,
        lengths=args.lengths,
        cap=args.cap,
        workers=worker_count(),
    )
    if args.out:
        updated = dataclasses.replace(source, verdict=verdict.to_certificate_verdict())
        _write(args.out, encode_certificate(updated, args.format))
    text = verdict.to_frame().to_string(index=False) + "\n"
    for v in verdict.violations:
        text += f"V {' '.join(map(str, v.cycle))} {' '.join(v.colours)}\n"
    text += f"VERDICT {'certified' if verdict.certified else f'violations {verdict.count}'}\n"
    sys.stdout.buffer.write(_report(args, verdict.to_dict(), text))
    return EXIT_CERTIFIED if verdict.certified else EXIT_VIOLATIONS


def cmd_audit(args: argparse.Namespace) -> int:
    host = build_host(args.mode, args.n, args.k, args.ell, args.eps)
    workers = worker_count()
    reports = []
    if args.what in ("regularity", "all"):
        reports.append(audit_regularity(host, cap=args.edge_cap, workers=workers))
    if args.what in ("conflicts", "all"):
        reports.append(audit_conflicts(host, cap=args.conflict_cap, workers=workers))
    payload = {"reports": [report.to_dict() for report in reports]}
    text = "\n".join(report.to_text() for report in reports)
    _write(args.out, _report(args, payload, text))
    return EXIT_CERTIFIED


def cmd_exact(args: argparse.Namespace) -> int:
    result = exact_ramsey(
        args.n,
        args.k_low,
        args.k_high,
        q=args.q,
        mode=args.mode,
        symmetry=not args.no_symmetry,
        max_n=args.max_n,
        workers=worker_count(),
    )
    payload = result.to_dict()
    text = _summary(
        {
            "value": result.value,
            "verified": result.verified,
            "cycles": result.cycles,
            "nodes": " ".join(f"c={c}:{nodes}" for c, nodes in result.nodes.items()),
            "witness": " ".join(f"{u}-{v}:{c}" for (u, v), c in sorted(result.witness.items())),
        }
    )
    if args.witness:
        _write_witness(args, result)
    _write(args.out, _report(args, payload, text))
    return EXIT_CERTIFIED


def _write_witness(args: argparse.Namespace, result: Any) -> None:
    """Store the witness as an all-fresh certificate when the parameters form a valid host."""
    try:
        host = build_host(args.mode, args.n, args.k_low, args.k_high)
    except ValidationError as e:
        logger.warning(json.dumps({"action": "witness_skipped", "reason": str(e)}))
        return
    certificate = Certificate(
        host=host,
        matching=BlockMatching(),
        leftover=tuple(result.witness.items()),
        seed=args.seed,
        fresh_palette=result.value,
        stats={"exact_value": result.value},
    )
    _write(args.witness, encode_certificate(certificate, args.format))


def cmd_bounds(args: argparse.Namespace) -> int:
    if args.mode == HostMode.BIPARTITE.value:
        report = bipartite_bounds(args.n, args.k)
    elif args.alpha is not None:
        report = complete_upper_budget(args.n, args.k, args.alpha)
    else:
        report = lower_bound_complete(args.n, args.k)
    payload = report.to_dict()
    _write(args.out, _report(args, payload, _summary(payload)))
    return EXIT_CERTIFIED


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        mode=args.mode,
        n=args.n,
        k=args.k,
        ell=args.ell,
        eps=args.eps,
        seed=args.seed,
        alpha=args.alpha,
        delta=args.delta,
        max_rounds=args.max_rounds,
        restarts=args.restarts,
        matcher=_matcher_params(args, args.seed),
        verify_mode=args.verify_mode,
        sample_budget=args.samples,
        verify_cap=args.cap,
        check_properties=args.check_properties,
        workers=worker_count(),
    )
    result = Pipeline(config).run()
    _write(args.out, encode_certificate(result.certificate, args.format))
    return result.status


COMMANDS = {
    "forge": cmd_forge,
    "recolour": cmd_recolour,
    "verify": cmd_verify,
    "audit": cmd_audit,
    "exact": cmd_exact,
    "bounds": cmd_bounds,
    "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse the command line, run one subcommand and map the outcome to an exit code."""
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level)
        return COMMANDS[args.command](args)
    except ForgeError as e:
        logger.error(
            json.dumps(
                {
                    "action": "command_error",
                    "error": str(e),
                    "error_type": e.__class__.__name__,
                    "field": getattr(e, "field", None),
                }
            )
        )
        sys.stderr.write(f"error: {e!s}\n")
        return EXIT_ERROR
    except Exception as e:
        logger.error(
            json.dumps(
                {
                    "action": "command_error",
                    "error": str(e),
                    "error_type": e.__class__.__name__,
                    "stack_trace": traceback.format_exc(),
                }
            )
        )
        sys.stderr.write(f"error: {e!s}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
