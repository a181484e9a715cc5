"""Walk-based centralities of temporal networks, including nonbacktracking Katz."""

__version__ = "0.1.0"

from .centrality import (
    CentralityReport,
    CoefficientFunction,
    exponential_function,
    f_centrality,
    katz_function,
    katz_temporal,
    temporal_spectral_radius,
)
from .errors import (
    BudgetExceeded,
    DimensionError,
    NotDiagonalizableOverR,
    NotInvertibleOverR,
    NumericalError,
    ParameterError,
    ParseError,
    TempoError,
    ValidationError,
)
from .generate import GeneratorSpec, generate, parse_generator_spec
from .nonbacktracking import (
    NBTSolver,
    PsiFactors,
    auto_t,
    compute_t0,
    nbt_append_frame,
    nbt_katz_incremental,
    nbt_katz_temporal,
    psi_factors,
    static_nbt_katz,
)
from .ring import (
    RingMatrix,
    dd_star,
    ring_det,
    ring_eigendecompose,
    ring_spectral_radius,
    series_radius,
    star_inverse,
    star_multiply,
    star_transpose,
)
from .temporal_graph import (
    ParseOptions,
    TemporalNetwork,
    assemble_time_evolving,
    frame_adjacency,
    parse_temporal_edgelist,
    read_temporal_edgelist,
    serialize_temporal_edgelist,
)
from .walks import enumerate_walks, recurrence_check, tally_walks
