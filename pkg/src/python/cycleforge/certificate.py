"""Certificate bundle and its line-oriented text / JSON codecs"""

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import CertificateFormatError, ValidationError
from .model import (
    Block,
    BlockMatching,
    Colouring,
    Edge,
    HostSpec,
    build_host,
    edge_key,
    graph_of_matching,
)

logger = logging.getLogger(__name__)


class VerdictStatus(str, Enum):
    """Outcome recorded by the verify stage"""

    CERTIFIED = "certified"
    VIOLATIONS = "violations"
    UNVERIFIED = "unverified"


@dataclass(frozen=True)
class CertificateVerdict:
    """Verdict line plus the listed violating cycles (the list may be capped, `count` is exact)."""

    status: VerdictStatus = VerdictStatus.UNVERIFIED
    count: int = 0
    violations: tuple[tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class Certificate:
    """Everything needed to rebuild and re-verify a colouring."""

    host: HostSpec
    matching: BlockMatching
    leftover: tuple[tuple[Edge, int], ...] = ()
    seed: int = 0
    alpha: float | None = None
    delta: float | None = None
    fresh_palette: int = 0
    stage_seeds: Mapping[str, int] = field(default_factory=dict)
    verdict: CertificateVerdict = field(default_factory=CertificateVerdict)
    stats: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "leftover", tuple(sorted(self.leftover)))

    @property
    def total_colours(self) -> int:
        """Colour budget: structured palette plus fresh palette."""
        return self.host.palette_size + self.fresh_palette

    def colouring(self) -> Colouring:
        """Rebuild the colouring the certificate describes."""
        base = graph_of_matching(self.matching, self.host)
        if not self.leftover and self.alpha is None and not self.fresh_palette:
            return base
        return base.with_fresh(dict(self.leftover), self.alpha, self.fresh_palette)


def _format_number(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _parse_number(text: str) -> int | float | str:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _encode_text(cert: Certificate) -> str:
    host = cert.host
    lines = [
        f"mode {host.mode.value}",
        f"n {host.n}",
        f"k {host.k}",
        f"ell {host.ell}",
        f"eps {host.eps!r}",
    ]
    if cert.alpha is not None:
        lines.append(f"alpha {cert.alpha!r}")
    if cert.delta is not None:
        lines.append(f"delta {cert.delta!r}")
    lines.append(f"fresh {cert.fresh_palette}")
    lines.append(f"seed {cert.seed}")
    lines.extend(f"stage {name} {value}" for name, value in cert.stage_seeds.items())
    for block in cert.matching:
        if host.is_bipartite:
            xs, ys = host.split(block)
            lines.append(
                f"B {block.colour} X {' '.join(map(str, xs))} Y {' '.join(map(str, ys))}"
            )
        else:
            lines.append(f"B {block.colour} {' '.join(map(str, block.vertices))}")
    lines.extend(f"F {u} {v} {colour}" for (u, v), colour in cert.leftover)
    lines.extend(f"STAT {key} {_format_number(value)}" for key, value in cert.stats.items())
    verdict = cert.verdict
    if verdict.status is VerdictStatus.VIOLATIONS:
        lines.append(f"VERDICT violations {verdict.count}")
    else:
        lines.append(f"VERDICT {verdict.status.value}")
    lines.extend(f"V {' '.join(map(str, cycle))}" for cycle in verdict.violations)
    return "\n".join(lines) + "\n"


def _to_json_dict(cert: Certificate) -> dict:
    host = cert.host
    blocks = []
    for block in cert.matching:
        if host.is_bipartite:
            xs, ys = host.split(block)
            blocks.append({"colour": block.colour, "X": list(xs), "Y": list(ys)})
        else:
            blocks.append({"colour": block.colour, "vertices": list(block.vertices)})
    return {
        **host.to_dict(),
        "alpha": cert.alpha,
        "delta": cert.delta,
        "fresh": cert.fresh_palette,
        "seed": cert.seed,
        "stages": dict(cert.stage_seeds),
        "blocks": blocks,
        "leftover": [[u, v, colour] for (u, v), colour in cert.leftover],
        "stats": dict(cert.stats),
        "verdict": {
            "status": cert.verdict.status.value,
            "count": cert.verdict.count,
            "violations": [list(cycle) for cycle in cert.verdict.violations],
        },
    }


def encode_certificate(cert: Certificate, fmt: str = "text") -> bytes:
    """Serialize a certificate as UTF-8 text lines or as the JSON mirror."""
    if fmt == "json":
        return (json.dumps(_to_json_dict(cert), indent=2) + "\n").encode("utf-8")
    if fmt != "text":
        raise ValidationError(f"Unknown certificate format: {fmt}", field="format")
    return _encode_text(cert).encode("utf-8")


@dataclass
class _Draft:
    """Certificate fields collected while parsing, before validation."""

    header: dict[str, Any] = field(default_factory=dict)
    stages: dict[str, int] = field(default_factory=dict)
    blocks: list[tuple[int, list[int], int | None]] = field(default_factory=list)
    leftover: list[tuple[int, int, int, int | None]] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)
    status: VerdictStatus | None = None
    count: int = 0
    violations: list[tuple[int, ...]] = field(default_factory=list)


def _assemble(draft: _Draft) -> Certificate:
    header = draft.header
    for required in ("mode", "n", "k", "ell", "seed"):
        if required not in header:
            raise CertificateFormatError(f"Missing header field: {required}")
    if draft.status is None:
        raise CertificateFormatError("Missing VERDICT line")
    try:
        host = build_host(header["mode"], header["n"], header["k"], header["ell"], header.get("eps"))
    except ValidationError as e:
        raise CertificateFormatError(f"Invalid host header: {e!s}", e) from e

    blocks = []
    for colour, vertices, offset in draft.blocks:
        try:
            block = Block(colour, tuple(vertices))
            host.validate_block(block)
        except ValidationError as e:
            raise CertificateFormatError(f"Invalid block: {e!s}", e, offset=offset) from e
        blocks.append(block)
    matching = BlockMatching(blocks)

    fresh_palette = header.get("fresh", 0)
    covered = {e for block in matching for e in host.block_edges(block)}
    leftover = []
    seen: set[tuple[int, int]] = set()
    for u, v, colour, offset in draft.leftover:
        if not host.is_edge(u, v):
            raise CertificateFormatError(f"F line names a non-edge ({u},{v})", offset=offset)
        if not 1 <= colour <= fresh_palette:
            raise CertificateFormatError(
                f"Fresh colour {colour} outside 1..{fresh_palette}", offset=offset
            )
        if edge_key(u, v) in covered:
            raise CertificateFormatError(
                f"Edge ({u},{v}) is both structured and fresh", offset=offset
            )
        if edge_key(u, v) in seen:
            raise CertificateFormatError(f"Edge ({u},{v}) is listed twice", offset=offset)
        seen.add(edge_key(u, v))
        leftover.append((edge_key(u, v), colour))

    if len(draft.violations) > draft.count:
        raise CertificateFormatError(
            f"{len(draft.violations)} V lines exceed the verdict count {draft.count}"
        )
    verdict = CertificateVerdict(draft.status, draft.count, tuple(draft.violations))
    return Certificate(
        host=host,
        matching=matching,
        leftover=tuple(leftover),
        seed=header["seed"],
        alpha=header.get("alpha"),
        delta=header.get("delta"),
        fresh_palette=fresh_palette,
        stage_seeds=draft.stages,
        verdict=verdict,
        stats=draft.stats,
    )


_INT_HEADERS = {"n", "k", "ell", "seed", "fresh"}
_FLOAT_HEADERS = {"eps", "alpha", "delta"}


def _decode_text(data: bytes) -> Certificate:
    try:
        data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CertificateFormatError("Certificate is not UTF-8", e, offset=e.start) from e
    if not data.endswith(b"\n"):
        raise CertificateFormatError("Truncated certificate: no final newline", offset=len(data))

    draft = _Draft()
    offset = 0
    for number, raw in enumerate(data.split(b"\n")[:-1], start=1):
        line_offset = offset
        offset += len(raw) + 1
        text = raw.decode("utf-8").strip()
        if not text:
            continue
        tag, *rest = text.split()
        try:
            _parse_line(draft, tag, rest, line_offset)
        except (ValueError, IndexError) as e:
            raise CertificateFormatError(
                f"Malformed line {number}: {text!r}", e, offset=line_offset, line=number
            ) from e
        except CertificateFormatError as e:
            e.offset = line_offset if e.offset is None else e.offset
            e.line = number
            raise
    return _assemble(draft)


def _parse_line(draft: _Draft, tag: str, rest: list[str], offset: int) -> None:
    if draft.status is not None and tag != "V":
        raise CertificateFormatError(f"Unexpected {tag!r} after the VERDICT line")
    if tag == "mode":
        draft.header["mode"] = rest[0]
    elif tag in _INT_HEADERS:
        draft.header[tag] = int(rest[0])
    elif tag in _FLOAT_HEADERS:
        draft.header[tag] = float(rest[0])
    elif tag == "stage":
        draft.stages[rest[0]] = int(rest[1])
    elif tag == "B":
        colour = int(rest[0])
        tokens = rest[1:]
        if tokens and tokens[0] == "X":
            y_at = tokens.index("Y")
            vertices = [int(t) for t in tokens[1:y_at]] + [int(t) for t in tokens[y_at + 1 :]]
        else:
            vertices = [int(t) for t in tokens]
        draft.blocks.append((colour, vertices, offset))
    elif tag == "F":
        u, v, colour = (int(t) for t in rest)
        draft.leftover.append((u, v, colour, offset))
    elif tag == "STAT":
        draft.stats[rest[0]] = _parse_number(rest[1])
    elif tag == "VERDICT":
        draft.status = VerdictStatus(rest[0])
        draft.count = int(rest[1]) if draft.status is VerdictStatus.VIOLATIONS else 0
    elif tag == "V":
        if draft.status is None:
            raise CertificateFormatError("V line before the VERDICT line")
        draft.violations.append(tuple(int(t) for t in rest))
    else:
        raise CertificateFormatError(f"Unknown line tag {tag!r}")


def _decode_json(data: bytes) -> Certificate:
    try:
        text = data.decode("utf-8")
        payload = json.loads(text)
    except UnicodeDecodeError as e:
        raise CertificateFormatError("Certificate is not UTF-8", e, offset=e.start) from e
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise CertificateFormatError(
            f"Malformed JSON certificate: {e.msg}", e, offset=offset, line=e.lineno
        ) from e

    draft = _Draft()
    try:
        for key in ("mode", "n", "k", "ell", "seed", "eps", "alpha", "delta", "fresh"):
            if payload.get(key) is not None:
                draft.header[key] = payload[key]
        draft.stages = {str(k): int(v) for k, v in payload.get("stages", {}).items()}
        for block in payload.get("blocks", []):
            vertices = block["vertices"] if "vertices" in block else block["X"] + block["Y"]
            draft.blocks.append((int(block["colour"]), [int(v) for v in vertices], None))
        for u, v, colour in payload.get("leftover", []):
            draft.leftover.append((int(u), int(v), int(colour), None))
        draft.stats = dict(payload.get("stats", {}))
        verdict = payload["verdict"]
        draft.status = VerdictStatus(verdict["status"])
        draft.count = int(verdict.get("count", 0))
        draft.violations = [tuple(int(v) for v in cycle) for cycle in verdict.get("violations", [])]
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise CertificateFormatError(f"JSON certificate does not match the schema: {e!s}", e) from e
    return _assemble(draft)


def decode_certificate(data: bytes) -> Certificate:
    """Parse a certificate, detecting the JSON mirror by its leading brace.

    Raises:
        CertificateFormatError: On malformed input, with the byte offset where known
        InvalidMatchingError: If the listed blocks do not form a matching
    """
    if not data.strip():
        raise CertificateFormatError("Empty certificate", offset=0)
    if data.lstrip()[:1] == b"{":
        cert = _decode_json(data)
    else:
        cert = _decode_text(data)
    logger.debug(
        json.dumps(
            {
                "action": "decode_certificate",
                "mode": cert.host.mode.value,
                "blocks": len(cert.matching),
                "leftover": len(cert.leftover),
                "verdict": cert.verdict.status.value,
            }
        )
    )
    return cert
