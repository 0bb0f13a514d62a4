"""Dense complex linear algebra used by the codecs and the leakage bounds.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels

# Vandermonde systems whose estimated condition number exceeds this are
# refused; past it double precision cannot resolve the coefficients.
MAX_CONDITION = 1e14


class ShapeError(ValueError):
    """Operand shapes are incompatible."""

    def __init__(self, message, *shapes):
        super().__init__(message)
        self.shapes = shapes


class IllConditionedError(np.linalg.LinAlgError):
    """A linear system is singular to working precision."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


def as_complex_matrix(m, name="matrix"):
    """Validate ``m`` as a finite 2-D complex matrix and return it as complex128."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}", arr.shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class EvaluationPoints:
    """Distinct points on the unit circle, one per server.

    ``points[i - 1]`` belongs to server ``i``.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128).reshape(-1)
        if not np.allclose(np.abs(pts), 1.0, rtol=0, atol=1e-12):
            raise ValueError("evaluation points must lie on the unit circle")
        _check_distinct(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def roots_of_unity(cls, n):
        """Canonical points ``exp(2*pi*1j*i/n)`` for ``i = 1..n``."""
        if n < 1:
            raise ValueError(f"need at least one point, got n={n}")
        return cls(np.exp(2j * np.pi * np.arange(1, n + 1) / n))

    @property
    def n(self):
        return self.points.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, item):
        return self.points[item]

    def for_servers(self, server_ids):
        """Points of the given 1-based server ids, in the given order."""
        return self.points[np.asarray(server_ids, dtype=np.int64) - 1]


def _check_distinct(points):
    if len(points) < 2:
        return
    diff = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(diff, np.inf)
    if diff.min() == 0.0:
        raise ValueError("evaluation points must be pairwise distinct")


def matmul(a, b):
    """Product ``a @ b`` with a fixed accumulation order.

    Every entry is summed over the inner index in increasing order, so the
    result is reproducible bit-for-bit on a given platform whichever kernel
    backend is active.
    """
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ",
            a.shape,
            b.shape,
        )
    return kernels.cmatmul(a, b)


def vandermonde(points, degree):
    """Matrix with ``V[i, j] = points[i] ** j`` for ``j < degree``."""
    pts = np.asarray(points, dtype=np.complex128).reshape(-1)
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    _check_distinct(pts)
    return pts[:, None] ** np.arange(degree)[None, :]


def solve_vandermonde(points, rhs):
    """Interpolate matrix-valued polynomial coefficients.

    Finds ``C_0..C_{K-1}`` with ``sum_j C_j * points[i]**j == rhs[i]``. The
    ``K x K`` system is factored once with column-pivoted QR and applied to
    every matrix entry at the same time.

    Parameters
    ----------
    points : array_like, shape (K,)
        Distinct interpolation points.
    rhs : sequence of ndarray or ndarray, shape (K, rows, cols)
        Values at the points.

    Returns
    -------
    ndarray, shape (K, rows, cols)
        Coefficient matrices in increasing degree.

    Raises
    ------
    IllConditionedError
        If the system cannot be solved in double precision.
    """
    pts = np.asarray(points, dtype=np.complex128).reshape(-1)
    values = np.asarray(rhs, dtype=np.complex128)
    if values.ndim != 3:
        raise ShapeError("rhs must be a stack of equally shaped matrices", values.shape)
    k = pts.shape[0]
    if values.shape[0] != k:
        raise ShapeError(
            f"{k} points but {values.shape[0]} right-hand sides", (k,), values.shape
        )
    v = vandermonde(pts, k)
    q, r, perm = scipy.linalg.qr(v, pivoting=True)
    diag = np.abs(np.diag(r))
    est = np.inf if diag[-1] == 0.0 else diag[0] / diag[-1]
    if not est < MAX_CONDITION:
        raise IllConditionedError(
            f"Vandermonde system is singular to working precision (cond ~ {est:.3g})",
            est,
        )
    flat = values.reshape(k, -1)
    sol = scipy.linalg.solve_triangular(r, q.conj().T @ flat)
    coeffs = np.empty_like(sol)
    coeffs[perm] = sol
    return coeffs.reshape(values.shape)


def condition_number(m):
    """2-norm condition number ``sigma_max / sigma_min``; ``inf`` if singular."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"condition number needs a square matrix, got {m.shape}", m.shape)
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= np.finfo(float).tiny:
        return float("inf")
    return float(sv[0] / sv[-1])


def frobenius_distance(a, b):
    """``||a - b||_F``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}", a.shape, b.shape)
    return float(np.linalg.norm(a - b))


def relative_frobenius_distance(a, b):
    """``||a - b||_F / ||b||_F`` (``b`` is the reference)."""
    ref = float(np.linalg.norm(np.asarray(b, dtype=np.complex128)))
    dist = frobenius_distance(a, b)
    if ref == 0.0:
        return 0.0 if dist == 0.0 else float("inf")
    return dist / ref


def hermitian_gram(m):
    """``m @ m^H``, symmetrised so the result is exactly Hermitian."""
    m = np.asarray(m, dtype=np.complex128)
    g = m @ m.conj().T
    return 0.5 * (g + g.conj().T)


def trace_of_solve(gram, rhs):
    """Real part of ``Tr(gram^{-1} rhs)`` for Hermitian positive-definite ``gram``."""
    gram = np.asarray(gram, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if gram.shape != rhs.shape or gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ShapeError(
            f"need equal square operands, got {gram.shape} and {rhs.shape}",
            gram.shape,
            rhs.shape,
        )
    try:
        factor = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError("Gram matrix is not positive definite", float("inf")) from exc
    tr = np.trace(scipy.linalg.cho_solve(factor, rhs))
    scale = max(1.0, abs(tr.real))
    if abs(tr.imag) > 1e-9 * scale:
        raise ValueError(f"trace has non-negligible imaginary part {tr.imag:.3g}")
    return float(tr.real)
