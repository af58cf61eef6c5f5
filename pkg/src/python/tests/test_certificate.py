"""Tests for the certificate codecs"""

import json

import pytest
from cycleforge.certificate import (
    Certificate,
    CertificateVerdict,
    VerdictStatus,
    decode_certificate,
    encode_certificate,
)
from cycleforge.errors import CertificateFormatError, InvalidMatchingError, ValidationError
from cycleforge.model import Block, BlockMatching, build_host, graph_of_matching

HEADER = b"mode complete\nn 4\nk 4\nell 4\nfresh 1\nseed 0\n"


@pytest.fixture
def certificate(conflict_host, two_block_matching):
    """A certificate with blocks, fresh edges, stage seeds and stats"""
    leftover = graph_of_matching(two_block_matching, conflict_host).uncoloured_edges()
    return Certificate(
        host=conflict_host,
        matching=two_block_matching,
        leftover=tuple((e, i % 3 + 1) for i, e in enumerate(leftover)),
        seed=11,
        alpha=0.02,
        delta=0.1,
        fresh_palette=3,
        stage_seeds={"match": 1, "fresh": 2},
        verdict=CertificateVerdict(VerdictStatus.VIOLATIONS, 2, ((1, 5, 2, 6),)),
        stats={"accepted": 3, "coverage": 0.25, "stop_reason": "stall"},
    )


class TestEncode:
    """Tests for the text and JSON encodings"""

    def test_text_layout(self, certificate):
        """Test header, block, fresh and verdict lines"""
        lines = encode_certificate(certificate).decode("utf-8").splitlines()
        assert lines[:5] == ["mode complete", "n 9", "k 4", "ell 4", "eps 0.25"]
        assert "B 1 1 2 3" in lines
        assert "B 2 1 4 7" in lines
        assert "F 1 5 1" in lines
        assert "STAT coverage 0.25" in lines
        assert lines[-2:] == ["VERDICT violations 2", "V 1 5 2 6"]

    def test_bipartite_blocks(self):
        """Test bipartite blocks list their X and Y sides"""
        host = build_host("bipartite", 4, 2, 4)
        cert = Certificate(host=host, matching=BlockMatching([Block(1, (1, 5, 6, 7))]))
        assert b"B 1 X 1 Y 5 6 7\n" in encode_certificate(cert)
        assert decode_certificate(encode_certificate(cert)).matching == cert.matching

    @pytest.mark.parametrize("fmt", ["text", "json"])
    def test_decode_restores(self, certificate, fmt):
        """Test decoding gives back the same certificate"""
        assert decode_certificate(encode_certificate(certificate, fmt)) == certificate

    def test_json_mirror(self, certificate):
        """Test the JSON form carries the same fields"""
        payload = json.loads(encode_certificate(certificate, "json"))
        assert payload["blocks"][0] == {"colour": 1, "vertices": [1, 2, 3]}
        assert payload["verdict"]["count"] == 2
        assert payload["stages"] == {"match": 1, "fresh": 2}

    def test_unknown_format(self, certificate):
        """Test only text and json are accepted"""
        with pytest.raises(ValidationError):
            encode_certificate(certificate, "xml")

    def test_rebuilt_colouring(self, certificate):
        """Test the colouring rebuilt from a certificate is total"""
        colouring = certificate.colouring()
        assert colouring.is_total()
        assert certificate.total_colours == 4 + 3


class TestDecodeErrors:
    """Tests for malformed certificate input"""

    def test_empty(self):
        """Test empty input"""
        with pytest.raises(CertificateFormatError) as excinfo:
            decode_certificate(b"  \n")
        assert excinfo.value.offset == 0

    def test_truncated(self):
        """Test a missing final newline is reported at the end"""
        data = HEADER + b"VERDICT unverified"
        with pytest.raises(CertificateFormatError) as excinfo:
            decode_certificate(data)
        assert excinfo.value.offset == len(data)

    def test_unknown_tag(self):
        """Test the offending line and byte offset are reported"""
        data = HEADER + b"Q 1 2\nVERDICT unverified\n"
        with pytest.raises(CertificateFormatError) as excinfo:
            decode_certificate(data)
        assert excinfo.value.line == 7
        assert excinfo.value.offset == len(HEADER)

    def test_malformed_number(self):
        """Test a non-integer field"""
        with pytest.raises(CertificateFormatError) as excinfo:
            decode_certificate(HEADER + b"F 1 two 1\nVERDICT unverified\n")
        assert excinfo.value.line == 7

    def test_missing_verdict(self):
        """Test the verdict line is required"""
        with pytest.raises(CertificateFormatError):
            decode_certificate(HEADER)

    def test_line_after_verdict(self):
        """Test only V lines may follow the verdict"""
        with pytest.raises(CertificateFormatError):
            decode_certificate(HEADER + b"VERDICT certified\nF 1 2 1\n")

    def test_fresh_on_block_edge(self):
        """Test an edge cannot be both structured and fresh"""
        data = HEADER + b"B 1 1 2 3\nF 1 2 1\nVERDICT unverified\n"
        with pytest.raises(CertificateFormatError):
            decode_certificate(data)

    def test_duplicate_edge(self):
        """Test an edge listed on two F lines"""
        with pytest.raises(CertificateFormatError):
            decode_certificate(HEADER + b"F 1 2 1\nF 2 1 1\nVERDICT unverified\n")

    def test_fresh_colour_out_of_range(self):
        """Test fresh colours must lie in the fresh palette"""
        with pytest.raises(CertificateFormatError):
            decode_certificate(HEADER + b"F 1 2 2\nVERDICT unverified\n")

    def test_too_many_witnesses(self):
        """Test V lines cannot outnumber the verdict count"""
        data = HEADER + b"VERDICT violations 1\nV 1 2 3 4\nV 1 2 4 3\n"
        with pytest.raises(CertificateFormatError):
            decode_certificate(data)

    def test_invalid_host(self):
        """Test an invalid host header"""
        with pytest.raises(CertificateFormatError):
            decode_certificate(b"mode complete\nn 4\nk 2\nell 4\nseed 0\nVERDICT unverified\n")

    def test_overlapping_blocks(self):
        """Test blocks breaking the matching rules"""
        data = b"mode complete\nn 9\nk 4\nell 4\nseed 0\nB 1 1 2 3\nB 1 3 4 5\nVERDICT unverified\n"
        with pytest.raises(InvalidMatchingError):
            decode_certificate(data)

    def test_bad_json(self):
        """Test malformed JSON reports a byte offset"""
        with pytest.raises(CertificateFormatError) as excinfo:
            decode_certificate(b'{"mode": "complete",}')
        assert excinfo.value.offset is not None

    def test_json_schema(self):
        """Test JSON missing the verdict"""
        payload = {"mode": "complete", "n": 4, "k": 4, "ell": 4, "seed": 0}
        with pytest.raises(CertificateFormatError):
            decode_certificate(json.dumps(payload).encode("utf-8"))
