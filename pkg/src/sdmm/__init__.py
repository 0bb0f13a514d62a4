"""Analog secure distributed matrix multiplication over the complex numbers."""

from .codec import (
    GaspParams,
    MatDotParams,
    NotEnoughResponses,
    Response,
    ResponseSet,
    ShareSet,
    decode,
    decode_gasp,
    decode_matdot,
    encode,
    encode_gasp,
    encode_matdot,
    sample_masks,
)
from .kernels import BACKEND
from .linalg import (
    EvaluationPoints,
    condition_number,
    frobenius_distance,
    hermitian_gram,
    matmul,
    relative_frobenius_distance,
    solve_vandermonde,
    trace_of_solve,
    vandermonde,
)
from .partition import assemble_outer, split_inner, split_outer
from .runtime import (
    InProcessCluster,
    NetworkCluster,
    StragglerModel,
    TrialRecord,
    WorkerConfig,
    collect_fastest,
    run_job,
)
from .security import (
    LeakageReport,
    NoiseSpec,
    calibrate,
    calibrate_sigma2,
    generator_split,
    leakage_bound,
    scalar_leakage_exact,
    worst_collusion,
)

__version__ = "0.1.0"
