"""Leakage accounting for the analog schemes.

For a colluding set of servers, the information the shares leak about one
input is bounded by::

    (block_elements / ln 2) * Tr(Gamma^{-1} Sigma') / sigma2    [bits]

where ``Gamma`` is the Gram matrix of the mask generator columns seen by the
colluders and ``Sigma'`` the covariance of the data part of their shares.
The total over both inputs is the quantity a budget ``delta`` caps; since it
is exactly proportional to ``1 / sigma2`` the minimal mask variance has a
closed form.

Input entries are modelled as i.i.d. with declared variances. For GASP the
per-side element counts ``ts/m`` and ``sr/n`` extend the MatDot argument;
reports flag this as ``"analog-GASP bound (extended)"``.
"""

import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .codec import GASP
from .linalg import EvaluationPoints, IllConditionedError, hermitian_gram, trace_of_solve

LN2 = math.log(2.0)
EXHAUSTIVE_LIMIT = 10**6
AUTO_EXHAUSTIVE_LIMIT = 20_000


@dataclass(frozen=True)
class GeneratorSplit:
    """Generator rows of one side, evaluated at all ``N`` points.

    ``data_rows[j, i - 1] = alpha_i ** data_exponents[j]`` and likewise for the
    mask rows.
    """

    side: str
    data_exponents: tuple
    noise_exponents: tuple
    data_rows: np.ndarray
    noise_rows: np.ndarray

    @property
    def n(self):
        return self.data_rows.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    sigma2: float
    input_sigma2_a: float = 1.0
    input_sigma2_b: float = 1.0

    def __post_init__(self):
        for name in ("sigma2", "input_sigma2_a", "input_sigma2_b"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass
class LeakageReport:
    scheme: str
    params: dict
    delta_bits: float
    sigma2: float
    worst_set: tuple
    bound_a_bits: float
    bound_b_bits: float
    strategy: str
    conjecture_verified: object = None
    bound_kind: str = "analog-MatDot bound"
    warning: str = None
    gamma_a: np.ndarray = field(default=None, repr=False)
    sigma_a: np.ndarray = field(default=None, repr=False)
    gamma_b: np.ndarray = field(default=None, repr=False)
    sigma_b: np.ndarray = field(default=None, repr=False)

    @property
    def total_bits(self):
        return self.bound_a_bits + self.bound_b_bits

    def to_dict(self):
        d = {
            k: v
            for k, v in asdict(self).items()
            if k not in ("gamma_a", "sigma_a", "gamma_b", "sigma_b")
        }
        d["worst_set"] = list(self.worst_set)
        d["total_bits"] = self.total_bits
        return d

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def generator_split(params, points, side):
    """Monomials of one side's share polynomial at every evaluation point."""
    if side not in ("a", "b"):
        raise ValueError(f"side must be 'a' or 'b', got {side!r}")
    if isinstance(points, EvaluationPoints):
        pts = points.points
    else:
        pts = np.asarray(points, dtype=np.complex128)
    data_exps = tuple(params.data_exponents(side))
    noise_exps = tuple(params.noise_exponents())
    data_rows = pts[None, :] ** np.array(data_exps)[:, None]
    noise_rows = pts[None, :] ** np.array(noise_exps)[:, None]
    return GeneratorSplit(side, data_exps, noise_exps, data_rows, noise_rows)


def _check_colluders(colluders, n):
    idx = tuple(int(i) for i in colluders)
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate server ids in colluding set {idx}")
    if any(i < 1 or i > n for i in idx):
        raise ValueError(f"colluding set {idx} is not a subset of servers 1..{n}")
    return tuple(sorted(idx))


def collusion_matrices(split, colluders, input_sigma2):
    """``(Gamma, Sigma')`` for a colluding set; both indexed by colluder."""
    cols = np.asarray(_check_colluders(colluders, split.n)) - 1
    data = split.data_rows[:, cols]
    noise = split.noise_rows[:, cols]
    if noise.shape[0] != noise.shape[1]:
        raise ValueError(
            f"colluding set of size {noise.shape[1]} does not match X={noise.shape[0]}"
        )
    gamma = hermitian_gram(noise.T)
    sigma = input_sigma2 * hermitian_gram(data.T)
    return gamma, sigma


def _input_var(noise, side):
    return noise.input_sigma2_a if side == "a" else noise.input_sigma2_b


def leakage_bound(split, colluders, noise, dims, params):
    """Upper bound (bits) on what ``colluders`` learn about one input."""
    gamma, sigma = collusion_matrices(split, colluders, _input_var(noise, split.side))
    tr = trace_of_solve(gamma, sigma)
    return params.block_elements(dims, split.side) / LN2 * tr / noise.sigma2


def _batched_traces(split, subsets, input_sigma2):
    cols = np.asarray(subsets, dtype=np.int64) - 1
    data = split.data_rows[:, cols].transpose(1, 2, 0)
    noise = split.noise_rows[:, cols].transpose(1, 2, 0)
    gamma = noise @ noise.conj().transpose(0, 2, 1)
    sigma = input_sigma2 * (data @ data.conj().transpose(0, 2, 1))
    try:
        sol = np.linalg.solve(gamma, sigma)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError("singular mask Gram matrix", float("inf")) from exc
    return np.trace(sol, axis1=1, axis2=2).real


def consecutive_sets(n, x):
    """The ``n`` cyclically consecutive windows of size ``x`` (1-based, sorted)."""
    if x > n:
        return []
    return sorted({tuple(sorted((s + k) % n + 1 for k in range(x))) for s in range(n)})


def is_cyclically_consecutive(indices, n):
    return tuple(sorted(indices)) in set(consecutive_sets(n, len(indices)))


def _resolve_strategy(strategy, n, x):
    count = math.comb(n, x)
    if strategy == "auto":
        if count <= AUTO_EXHAUSTIVE_LIMIT:
            return "exhaustive", None
        return "consecutive", (
            f"C({n},{x})={count} collusion sets exceeds {AUTO_EXHAUSTIVE_LIMIT}; "
            "worst set found by the consecutive-roots heuristic"
        )
    if strategy == "exhaustive":
        if count > EXHAUSTIVE_LIMIT:
            raise ValueError(
                f"exhaustive search over C({n},{x})={count} sets is too large; "
                "use the consecutive strategy"
            )
        return "exhaustive", None
    if strategy == "consecutive":
        return "consecutive", None
    raise ValueError(f"unknown strategy {strategy!r}")


def _scores(split_a, split_b, noise, dims, params, subsets):
    ka = params.block_elements(dims, "a") / LN2 / noise.sigma2
    kb = params.block_elements(dims, "b") / LN2 / noise.sigma2
    ta = _batched_traces(split_a, subsets, noise.input_sigma2_a)
    tb = _batched_traces(split_b, subsets, noise.input_sigma2_b)
    return ka * ta + kb * tb


def worst_collusion(split_a, split_b, noise, dims, params, strategy="exhaustive"):
    """Colluding set maximizing the total bound.

    Returns ``(worst_set, total_bits)``. Ties go to the lexicographically
    smallest set.
    """
    n = split_a.n
    strategy, _ = _resolve_strategy(strategy, n, params.x)
    if strategy == "exhaustive":
        subsets = list(itertools.combinations(range(1, n + 1), params.x))
    else:
        subsets = consecutive_sets(n, params.x)
    scores = _scores(split_a, split_b, noise, dims, params, subsets)
    best = int(np.argmax(scores))
    return subsets[best], float(scores[best])


def _splits(params, points):
    if points is None:
        points = EvaluationPoints.roots_of_unity(params.n_servers)
    return generator_split(params, points, "a"), generator_split(params, points, "b")


def calibrate_sigma2(
    delta,
    dims,
    params,
    points=None,
    input_sigma2_a=1.0,
    input_sigma2_b=1.0,
    strategy="auto",
):
    """Smallest mask variance whose worst-case total leakage equals ``delta`` bits."""
    return calibrate(delta, dims, params, points, input_sigma2_a, input_sigma2_b, strategy)[0]


def calibrate(
    delta,
    dims,
    params,
    points=None,
    input_sigma2_a=1.0,
    input_sigma2_b=1.0,
    strategy="auto",
):
    """Like :func:`calibrate_sigma2` but also returns the :class:`LeakageReport`."""
    if not delta > 0:
        raise ValueError(f"leakage budget must be positive, got {delta}")
    split_a, split_b = _splits(params, points)
    resolved, warn = _resolve_strategy(strategy, split_a.n, params.x)
    if warn:
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    unit = NoiseSpec(1.0, input_sigma2_a, input_sigma2_b)
    worst, total_unit = worst_collusion(split_a, split_b, unit, dims, params, resolved)
    noise = NoiseSpec(total_unit / delta, input_sigma2_a, input_sigma2_b)

    verified = None
    if resolved == "exhaustive":
        _, best_consec = worst_collusion(split_a, split_b, unit, dims, params, "consecutive")
        verified = bool(best_consec >= total_unit * (1 - 1e-12))

    gamma_a, sigma_a = collusion_matrices(split_a, worst, input_sigma2_a)
    gamma_b, sigma_b = collusion_matrices(split_b, worst, input_sigma2_b)
    report = LeakageReport(
        scheme=params.scheme,
        params=params.describe(),
        delta_bits=float(delta),
        sigma2=noise.sigma2,
        worst_set=worst,
        bound_a_bits=leakage_bound(split_a, worst, noise, dims, params),
        bound_b_bits=leakage_bound(split_b, worst, noise, dims, params),
        strategy=resolved,
        conjecture_verified=verified,
        bound_kind="analog-GASP bound (extended)" if params.tag == GASP else "analog-MatDot bound",
        warning=warn,
        gamma_a=gamma_a,
        sigma_a=sigma_a,
        gamma_b=gamma_b,
        sigma_b=sigma_b,
    )
    return noise, report


def scalar_leakage_exact(sigma_a2, sigma_r2, alpha):
    """Exact leakage (bits) of one share ``a + alpha * r`` of a Gaussian scalar ``a``."""
    if not (sigma_a2 > 0 and sigma_r2 > 0):
        raise ValueError("variances must be positive")
    if alpha == 0:
        raise ValueError("alpha = 0 makes the share equal to the secret")
    return 0.5 * math.log2(1.0 + sigma_a2 / (abs(alpha) ** 2 * sigma_r2))


def gaussian_entropy_bits(variance, complex_valued=False):
    """Differential entropy (bits) of a real or circular complex Gaussian."""
    if complex_valued:
        return math.log2(math.pi * math.e * variance)
    return 0.5 * math.log2(2 * math.pi * math.e * variance)


def input_entropy_bits(dims, input_sigma2_a=1.0, input_sigma2_b=1.0, complex_valued=False):
    """Entropy proxy of the inputs: entry count times per-entry Gaussian entropy."""
    t, s, r = dims
    return t * s * gaussian_entropy_bits(input_sigma2_a, complex_valued) + s * r * (
        gaussian_entropy_bits(input_sigma2_b, complex_valued)
    )
