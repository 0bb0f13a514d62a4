"""Analog MatDot and GASP codecs over the complex numbers.

Both schemes hide the input blocks behind ``X`` circular complex Gaussian
masks, evaluate the share polynomials at the servers' roots of unity, and
interpolate the product polynomial from the fastest ``K`` responses.

Servers are numbered ``1..N``; server ``i`` holds evaluation point
``zeta_N ** i``.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import cmat, kernels
from .linalg import EvaluationPoints, ShapeError, solve_vandermonde
from .partition import assemble_outer, split_inner, split_outer

MATDOT = 1
GASP = 2
SCHEME_NAMES = {MATDOT: "matdot", GASP: "gasp"}

_SHARE_HEADER = struct.Struct("<BII")


class NotEnoughResponses(RuntimeError):
    """Fewer responses than the recovery threshold arrived."""

    def __init__(self, got, need):
        super().__init__(f"got {got} responses, need {need} to decode")
        self.got = got
        self.need = need


class SchemeParams:
    """Shared behaviour of :class:`MatDotParams` and :class:`GaspParams`."""

    tag = 0

    @property
    def scheme(self):
        return SCHEME_NAMES[self.tag]

    @property
    def threshold(self):
        return 2 * self.data_terms + 2 * self.x - 1

    def noise_exponents(self):
        return list(range(self.data_terms, self.data_terms + self.x))

    def _validate(self):
        if self.x < 1:
            raise ValueError(f"collusion tolerance X must be >= 1, got {self.x}")
        if self.n_servers < self.threshold:
            raise ValueError(
                f"N={self.n_servers} servers is below the recovery threshold "
                f"K={self.threshold}"
            )


@dataclass(frozen=True)
class MatDotParams(SchemeParams):
    p: int
    x: int
    n_servers: int
    tag = MATDOT

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        self._validate()

    @property
    def data_terms(self):
        return self.p

    def data_exponents(self, side):
        """Exponent of each data block, in block order."""
        if side == "a":
            return list(range(self.p))
        return [self.p - j for j in range(1, self.p + 1)]

    def split(self, a, b):
        return split_inner(a, b, self.p)

    def block_elements(self, dims, side):
        t, s, r = dims
        return t * s // self.p if side == "a" else s * r // self.p

    def describe(self):
        return {"scheme": "matdot", "p": self.p, "x": self.x, "n_servers": self.n_servers}


@dataclass(frozen=True)
class GaspParams(SchemeParams):
    m: int
    n: int
    x: int
    n_servers: int
    tag = GASP

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"m and n must be >= 1, got m={self.m}, n={self.n}")
        self._validate()

    @property
    def data_terms(self):
        return self.m * self.n

    def data_exponents(self, side):
        if side == "a":
            return list(range(self.m))
        return [self.m * j for j in range(self.n)]

    def split(self, a, b):
        return split_outer(a, b, self.m, self.n)

    def block_elements(self, dims, side):
        t, s, r = dims
        return t * s // self.m if side == "a" else s * r // self.n

    def describe(self):
        return {
            "scheme": "gasp",
            "m": self.m,
            "n": self.n,
            "x": self.x,
            "n_servers": self.n_servers,
        }


def params_from_dict(d):
    """Build scheme parameters from a ``describe()``-style mapping."""
    scheme = d["scheme"].lower()
    if scheme == "matdot":
        return MatDotParams(int(d["p"]), int(d["x"]), int(d["n_servers"]))
    if scheme == "gasp":
        return GaspParams(int(d["m"]), int(d["n"]), int(d["x"]), int(d["n_servers"]))
    raise ValueError(f"unknown scheme {d['scheme']!r}")


@dataclass
class ShareSet:
    """Encoded inputs for all ``N`` servers.

    ``a_shares[i - 1]`` and ``b_shares[i - 1]`` go to server ``i``.
    """

    params: SchemeParams
    points: EvaluationPoints
    a_shares: np.ndarray
    b_shares: np.ndarray
    noise: object = None

    def __len__(self):
        return self.a_shares.shape[0]

    def share(self, server_id):
        return self.a_shares[server_id - 1], self.b_shares[server_id - 1]

    def to_bytes(self, server_id):
        """Share header plus the two CMAT blocks for one server."""
        a_i, b_i = self.share(server_id)
        return pack_share(self.params.tag, server_id, server_id, a_i, b_i)


@dataclass(frozen=True)
class Response:
    server_id: int
    point: complex
    product: np.ndarray = field(repr=False)

    @property
    def point_index(self):
        return self.server_id


class ResponseSet:
    """Products returned by servers, kept in arrival order."""

    def __init__(self, responses=()):
        self._items = list(responses)

    def add(self, response):
        self._items.append(response)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, item):
        return self._items[item]

    @property
    def server_ids(self):
        return [r.server_id for r in self._items]

    def fastest(self, k):
        """The first ``k`` arrivals, reordered by server id."""
        if len(self._items) < k:
            raise NotEnoughResponses(len(self._items), k)
        return sorted(self._items[:k], key=lambda r: r.server_id)


def pack_share(tag, server_id, point_index, a_share, b_share):
    return _SHARE_HEADER.pack(tag, server_id, point_index) + cmat.encode(a_share) + cmat.encode(b_share)


def unpack_share(buf):
    """Inverse of :func:`pack_share`; returns ``(tag, server_id, point_index, a, b)``."""
    if len(buf) < _SHARE_HEADER.size:
        raise cmat.CmatError("truncated share header")
    tag, server_id, point_index = _SHARE_HEADER.unpack_from(buf, 0)
    a_share, off = cmat.decode_from(buf, _SHARE_HEADER.size)
    b_share, off = cmat.decode_from(buf, off)
    if off != len(buf):
        raise cmat.CmatError(f"{len(buf) - off} trailing bytes after share")
    return tag, server_id, point_index, a_share, b_share


def sample_masks(shape, count, sigma2, rng):
    """Draw ``count`` matrices of i.i.d. circular complex Gaussians with ``E|z|^2 = sigma2``."""
    if not sigma2 > 0:
        raise ValueError(f"mask variance must be positive, got {sigma2}")
    if count < 1:
        raise ValueError(f"need at least one mask, got {count}")
    rows, cols = shape
    g = rng.standard_normal((count, rows, cols, 2)) * np.sqrt(sigma2 / 2.0)
    out = np.empty((count, rows, cols), dtype=np.complex128)
    out.real = g[..., 0]
    out.imag = g[..., 1]
    return out


def _evaluate(data_blocks, data_exps, masks, noise_exps, points):
    data_blocks = [np.asarray(b, dtype=np.complex128) for b in data_blocks]
    masks = [np.asarray(mk, dtype=np.complex128) for mk in masks]
    shape = data_blocks[0].shape
    for blk in data_blocks + masks:
        if blk.shape != shape:
            raise ShapeError(f"block of shape {blk.shape} does not match {shape}", blk.shape, shape)
    terms = sorted(zip(list(data_exps) + list(noise_exps), data_blocks + masks), key=lambda t: t[0])
    exps = np.array([e for e, _ in terms], dtype=np.int64)
    coeffs = np.stack([c for _, c in terms])
    return kernels.poly_eval(coeffs, exps, points.points)


def _encode(params, part, masks_r, masks_s, points, noise):
    if len(masks_r) != params.x or len(masks_s) != params.x:
        raise ValueError(
            f"need X={params.x} masks per side, got {len(masks_r)} and {len(masks_s)}"
        )
    if points.n != params.n_servers:
        raise ValueError(f"{points.n} evaluation points for N={params.n_servers} servers")
    noise_exps = params.noise_exponents()
    a_sh = _evaluate(part.blocks_a, params.data_exponents("a"), masks_r, noise_exps, points)
    b_sh = _evaluate(part.blocks_b, params.data_exponents("b"), masks_s, noise_exps, points)
    return ShareSet(params, points, a_sh, b_sh, noise)


def encode_matdot(part, masks_r, masks_s, points, params=None, noise=None):
    """Evaluate the MatDot share polynomials at every point.

    ``f(x) = sum_j A_j x^(j-1) + sum_k R_k x^(p+k-1)`` and
    ``g(x) = sum_j B_j x^(p-j) + sum_k S_k x^(p+k-1)``.
    """
    if params is None:
        params = MatDotParams(part.p, len(masks_r), points.n)
    return _encode(params, part, masks_r, masks_s, points, noise)


def encode_gasp(part, masks_r, masks_s, points, params=None, noise=None):
    """Evaluate the GASP share polynomials at every point.

    ``f(x) = sum_j A_j x^(j-1) + sum_k R_k x^(mn+k-1)`` and
    ``g(x) = sum_j B_j x^(m(j-1)) + sum_k S_k x^(mn+k-1)``.
    """
    if params is None:
        params = GaspParams(part.m, part.n, len(masks_r), points.n)
    return _encode(params, part, masks_r, masks_s, points, noise)


def encode(a, b, params, sigma2, rng, points=None, noise=None):
    """Split, draw masks and encode in one step.

    Masks for ``A`` are drawn before masks for ``B``.
    """
    if points is None:
        points = EvaluationPoints.roots_of_unity(params.n_servers)
    part = params.split(a, b)
    masks_r = sample_masks(part.blocks_a[0].shape, params.x, sigma2, rng)
    masks_s = sample_masks(part.blocks_b[0].shape, params.x, sigma2, rng)
    if params.tag == MATDOT:
        return encode_matdot(part, masks_r, masks_s, points, params, noise)
    return encode_gasp(part, masks_r, masks_s, points, params, noise)


def _interpolate(responses, params):
    if not isinstance(responses, ResponseSet):
        responses = ResponseSet(responses)
    used = responses.fastest(params.threshold)
    points = np.array([r.point for r in used], dtype=np.complex128)
    values = np.stack([np.asarray(r.product, dtype=np.complex128) for r in used])
    return solve_vandermonde(points, values)


def decode_matdot(responses, params):
    """Recover ``AB`` as the ``x^(p-1)`` coefficient of the product polynomial."""
    coeffs = _interpolate(responses, params)
    return coeffs[params.p - 1]


def decode_gasp(responses, params):
    """Recover ``AB`` from the first ``mn`` coefficients of the product polynomial."""
    coeffs = _interpolate(responses, params)
    m, n = params.m, params.n
    grid = [[coeffs[m * jj + j] for jj in range(n)] for j in range(m)]
    return assemble_outer(grid)


def decode(responses, params):
    if params.tag == MATDOT:
        return decode_matdot(responses, params)
    return decode_gasp(responses, params)
