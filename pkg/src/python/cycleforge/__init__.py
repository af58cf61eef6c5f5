"""Edge-colourings of complete and complete bipartite hosts in which short cycles see three colours"""

from .certificate import Certificate, CertificateVerdict, decode_certificate, encode_certificate
from .errors import (
    CapExceededError,
    CertificateFormatError,
    ColouringMismatchError,
    ConfigurationError,
    ForgeError,
    InvalidMatchingError,
    PartialColouringError,
    RetriesExhaustedError,
    StageFailure,
    ValidationError,
)
from .exact import (
    bipartite_bounds,
    complete_upper_budget,
    ex_path_bipartite,
    exact_ramsey,
    lower_bound_complete,
)
from .hyperaudit import (
    audit_conflicts,
    audit_regularity,
    count_P,
    count_T,
    degree_formula,
    formula_P,
    formula_T,
    materialize,
)
from .lllcolour import detect_events, init_fresh, lll_weights, moser_tardos
from .matcher import MatcherParams, find_conflict, greedy_match, is_compatible, track_tests
from .model import (
    Block,
    BlockMatching,
    Colouring,
    HostMode,
    HostSpec,
    build_host,
    graph_of_matching,
    leftover_graph,
)
from .pipeline import PipelineConfig, run_pipeline
from .utils import retry, run_partitioned, setup_logging, worker_count
from .verify import check_lemma_properties, verify_colouring
