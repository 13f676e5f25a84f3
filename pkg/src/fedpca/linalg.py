"""Dense subspace algebra for streaming PCA.

Everything operates on column-space summaries: a matrix block is reduced to
an orthonormal basis U (d x r) paired with non-negative singular values, and
summaries from disjoint column blocks are merged without ever rebuilding the
original matrix. The merge works in the (r1 + r2)-dimensional coordinate
frame spanned by the two bases, so its cost is independent of the number of
columns ever observed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import accounting

# Dense LAPACK SVD is used up to this many columns; beyond it the spectrum
# is recovered from the Gram matrix of the smaller dimension.
DENSE_SVD_MAX_COLS = 512

# Orthonormality slack per unit of leading dimension.
ORTHO_TOL = 1e-10

_EPS = np.finfo(np.float64).eps


def ensure_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 array with finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _fix_signs(left: np.ndarray, right: Optional[np.ndarray] = None) -> None:
    """Flip columns in place so each column's largest-magnitude entry is positive.

    Ties pick the lowest row index (np.argmax convention). The matching row
    of ``right`` (a Vt-style factor) is flipped alongside so products are
    preserved.
    """
    for j in range(left.shape[1]):
        col = left[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            left[:, j] = -col
            if right is not None:
                right[j, :] = -right[j, :]


def _zero_cutoff(values: np.ndarray, dim_max: int) -> float:
    """Threshold below which singular values are treated as exact zeros."""
    if values.size == 0:
        return 0.0
    return dim_max * _EPS * float(values[0])


def _check_orthonormal(u: np.ndarray, tol_scale: float, what: str) -> None:
    r = u.shape[1]
    if r == 0:
        return
    gram = u.T @ u
    dev = float(np.max(np.abs(gram - np.eye(r))))
    if dev > ORTHO_TOL * tol_scale:
        raise ValueError(f"{what} is not column-orthonormal (deviation {dev:.3e})")


@dataclass(frozen=True)
class SvdFactors:
    """Rank-k SVD triplet. ``right`` is optional; the Gram route omits it."""

    left: np.ndarray
    values: np.ndarray
    right: Optional[np.ndarray] = None

    def __post_init__(self):
        left = np.asarray(self.left, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "values", values)
        if left.ndim != 2 or values.ndim != 1 or left.shape[1] != values.size:
            raise ValueError("left factor and values disagree in rank")
        if values.size and (np.any(values < 0) or np.any(values[:-1] < values[1:])):
            raise ValueError("singular values must be non-increasing and non-negative")
        scale = max(left.shape[0], 1)
        if self.right is not None:
            right = np.asarray(self.right, dtype=np.float64)
            object.__setattr__(self, "right", right)
            if right.ndim != 2 or right.shape[1] != values.size:
                raise ValueError("right factor and values disagree in rank")
            scale = max(scale, right.shape[0])
            _check_orthonormal(right, scale, "right factor")
        _check_orthonormal(left, scale, "left factor")


@dataclass(frozen=True)
class SubspaceEstimate:
    """Orthonormal basis (d x r) with non-increasing, non-negative values.

    r = 0 is a valid empty estimate and acts as the neutral element of
    :func:`merge`. Instances are treated as immutable snapshots; the arrays
    they carry are never mutated by this module.
    """

    basis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "values", values)
        if basis.ndim != 2:
            raise ValueError("basis must be 2-D")
        if values.ndim != 1 or values.size != basis.shape[1]:
            raise ValueError("values length must match basis column count")
        if basis.shape[1] > basis.shape[0]:
            raise ValueError("rank cannot exceed ambient dimension")
        if not (np.all(np.isfinite(basis)) and np.all(np.isfinite(values))):
            raise ValueError("estimate contains non-finite entries")
        if values.size and (np.any(values < 0) or np.any(values[:-1] < values[1:])):
            raise ValueError("values must be non-increasing and non-negative")
        _check_orthonormal(basis, max(basis.shape[0], 1), "basis")

    @classmethod
    def empty(cls, dim: int) -> "SubspaceEstimate":
        if dim < 1:
            raise ValueError("ambient dimension must be positive")
        return cls(np.zeros((dim, 0)), np.zeros(0))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def truncated(self, r: int) -> "SubspaceEstimate":
        """Leading min(r, rank) directions, unchanged otherwise."""
        if r < 0:
            raise ValueError("rank must be non-negative")
        if r >= self.rank:
            return self
        return SubspaceEstimate(self.basis[:, :r], self.values[:r])

    def scaled(self, weight: float) -> "SubspaceEstimate":
        """Same directions with values multiplied by a positive weight."""
        if weight <= 0:
            raise ValueError("weight must be positive")
        if weight == 1.0 or self.rank == 0:
            return self
        return SubspaceEstimate(self.basis, self.values * weight)


def truncated_svd(a, r: int) -> SvdFactors:
    """Leading r singular triplets of a dense matrix.

    Up to DENSE_SVD_MAX_COLS columns this is a full LAPACK SVD truncated to
    rank r; wider inputs go through the Gram matrix of the smaller dimension
    (in which case the right factor is omitted). Column signs follow a fixed
    convention: the largest-magnitude entry of each left vector is positive,
    ties resolved at the lowest row index.

    Args:
        a: d x n matrix with finite entries.
        r: number of triplets, 1 <= r <= min(d, n).

    Returns:
        SvdFactors with exactly r values (zeros included when rank(a) < r).
    """
    m = ensure_matrix(a)
    d, n = m.shape
    if not 1 <= r <= min(d, n):
        raise ValueError(f"r={r} outside [1, {min(d, n)}] for shape {m.shape}")

    if n <= DENSE_SVD_MAX_COLS:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        accounting.note("truncated_svd.left", u.shape)
        accounting.note("truncated_svd.right", vt.shape)
        left = u[:, :r].copy()
        values = s[:r].copy()
        right_t = vt[:r, :].copy()
        _fix_signs(left, right_t)
        return SvdFactors(left, values, right_t.T.copy())

    left, values = _gram_leading(m, r)
    _fix_signs(left)
    return SvdFactors(left, values, None)


def _gram_leading(m: np.ndarray, r: int) -> Tuple[np.ndarray, np.ndarray]:
    """Leading left vectors and values via the smaller Gram matrix."""
    d, n = m.shape
    if d <= n:
        g = m @ m.T
        accounting.note("truncated_svd.gram", g.shape)
        w, vecs = np.linalg.eigh(g)
        w = np.sqrt(np.clip(w[::-1], 0.0, None))
        left = vecs[:, ::-1][:, :r].copy()
        return left, w[:r].copy()

    g = m.T @ m
    accounting.note("truncated_svd.gram", g.shape)
    w, vecs = np.linalg.eigh(g)
    values = np.sqrt(np.clip(w[::-1], 0.0, None))[:r].copy()
    vr = vecs[:, ::-1][:, :r]
    left = m @ vr
    accounting.note("truncated_svd.left", left.shape)
    cutoff = _zero_cutoff(values, max(d, n))
    good = values > cutoff
    left[:, good] /= values[good]
    if not np.all(good):
        left[:, ~good] = _orthonormal_completion(left[:, good], d, int(np.sum(~good)))
        values[~good] = 0.0
    return left, values


def _orthonormal_completion(q: np.ndarray, dim: int, count: int) -> np.ndarray:
    """Orthonormal columns spanning directions outside the span of q."""
    out = np.zeros((dim, count))
    have = 0
    for i in range(dim):
        if have == count:
            break
        w = np.zeros(dim)
        w[i] = 1.0
        for basis in (q, out[:, :have]):
            if basis.shape[1]:
                w -= basis @ (basis.T @ w)
                w -= basis @ (basis.T @ w)
        nrm = float(np.linalg.norm(w))
        if nrm > 1e-6:
            out[:, have] = w / nrm
            have += 1
    if have != count:
        raise ValueError("could not complete orthonormal basis")
    return out


def singular_values(a) -> np.ndarray:
    """Full singular spectrum, descending, route-matched to truncated_svd."""
    m = ensure_matrix(a)
    d, n = m.shape
    if n <= DENSE_SVD_MAX_COLS:
        return np.linalg.svd(m, compute_uv=False)
    g = m @ m.T if d <= n else m.T @ m
    accounting.note("singular_values.gram", g.shape)
    w = np.linalg.eigvalsh(g)
    return np.sqrt(np.clip(w[::-1], 0.0, None))


def economy_qr(a) -> Tuple[np.ndarray, np.ndarray]:
    """Reduced QR of a tall matrix with a non-negative R diagonal.

    Args:
        a: d x n matrix, d >= n.

    Returns:
        (q, r) with q d x n column-orthonormal, r n x n upper triangular,
        diag(r) >= 0, and q @ r == a to rounding.
    """
    m = ensure_matrix(a)
    d, n = m.shape
    if d < n:
        raise ValueError(f"economy_qr expects a tall matrix, got {m.shape}")
    q, r = np.linalg.qr(m)
    accounting.note("economy_qr.q", q.shape)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs
    r = r * signs[:, None]
    return q, r


def subspace_of(a, r: Optional[int] = None) -> SubspaceEstimate:
    """Subspace estimate of a matrix block, zero directions pruned.

    With r omitted, keeps every direction carrying a nonzero singular value;
    otherwise at most r of them.
    """
    m = ensure_matrix(a)
    d, n = m.shape
    k = min(d, n) if r is None else min(r, d, n)
    if k < 1:
        raise ValueError("requested rank must be at least 1")
    f = truncated_svd(m, k)
    cutoff = _zero_cutoff(f.values, max(d, n))
    keep = int(np.sum(f.values > cutoff))
    return SubspaceEstimate(f.left[:, :keep], f.values[:keep])


def merge(s1: SubspaceEstimate, s2: SubspaceEstimate, r: int) -> SubspaceEstimate:
    """Rank-r summary of the column concatenation behind two estimates.

    Computes the leading r singular directions of [U1*S1 | U2*S2] while
    working only in the combined (r1 + r2)-dimensional frame: the second
    basis is split into its components inside and orthogonal to span(U1),
    the concatenation is rewritten over [U1 | Q], and a small dense SVD
    finishes the job. Exact when r covers the combined rank.

    The empty estimate is neutral: merging s with it returns s truncated
    to r.
    """
    if s1.dim != s2.dim:
        raise ValueError("estimates live in different ambient dimensions")
    if not 1 <= r <= s1.dim:
        raise ValueError(f"target rank {r} outside [1, {s1.dim}]")
    if s1.rank == 0:
        return s2.truncated(r)
    if s2.rank == 0:
        return s1.truncated(r)

    u1, u2 = s1.basis, s2.basis
    r1, r2 = s1.rank, s2.rank
    z = u1.T @ u2
    proj = u2 - u1 @ z
    # one reorthogonalization pass keeps Q orthogonal to U1 at working precision
    proj -= u1 @ (u1.T @ proj)
    accounting.note("merge.proj", proj.shape)
    q, rr = np.linalg.qr(proj)
    accounting.note("merge.q", q.shape)

    core = np.zeros((r1 + r2, r1 + r2))
    core[:r1, :r1] = np.diag(s1.values)
    core[:r1, r1:] = z * s2.values
    core[r1:, r1:] = rr * s2.values
    accounting.note("merge.core", core.shape)

    u_in, vals, _ = np.linalg.svd(core)
    cutoff = _zero_cutoff(vals, max(s1.dim, r1 + r2))
    keep = min(r, int(np.sum(vals > cutoff)))
    if keep == 0:
        return SubspaceEstimate.empty(s1.dim)

    basis = np.hstack([u1, q]) @ u_in[:, :keep]
    accounting.note("merge.basis", basis.shape)
    _fix_signs(basis)
    return SubspaceEstimate(basis, vals[:keep].copy())


def _weighted_concat(
    s1: SubspaceEstimate, s2: SubspaceEstimate, w_old: float, w_new: float
) -> np.ndarray:
    cols = []
    if s1.rank:
        cols.append(s1.basis * (w_old * s1.values))
    if s2.rank:
        cols.append(s2.basis * (w_new * s2.values))
    c = np.hstack(cols)
    accounting.note("merge.concat", c.shape)
    return c


def _check_weights(w_old: float, w_new: float) -> None:
    if not 0 < w_old <= 1:
        raise ValueError(f"history weight must lie in (0, 1], got {w_old}")
    if w_new < 1:
        raise ValueError(f"update weight must be >= 1, got {w_new}")


def basic_merge(
    s1: SubspaceEstimate,
    s2: SubspaceEstimate,
    r: int,
    w_old: float = 1.0,
    w_new: float = 1.0,
) -> SubspaceEstimate:
    """Direct rank-r SVD of the weighted concatenation [w1*U1*S1 | w2*U2*S2].

    w_old in (0, 1] discounts the first estimate (forgetting), w_new >= 1
    amplifies the second. Reference implementation; :func:`merge` and
    :func:`faster_merge` agree with it at neutral weights.
    """
    _check_weights(w_old, w_new)
    if s1.dim != s2.dim:
        raise ValueError("estimates live in different ambient dimensions")
    if not 1 <= r <= s1.dim:
        raise ValueError(f"target rank {r} outside [1, {s1.dim}]")
    if s1.rank == 0 and s2.rank == 0:
        return SubspaceEstimate.empty(s1.dim)

    c = _weighted_concat(s1, s2, w_old, w_new)
    d, n = c.shape
    f = truncated_svd(c, min(r, d, n))
    cutoff = _zero_cutoff(f.values, max(d, n))
    keep = int(np.sum(f.values > cutoff))
    return SubspaceEstimate(f.left[:, :keep], f.values[:keep])


def faster_merge(
    s1: SubspaceEstimate,
    s2: SubspaceEstimate,
    r: int,
    w_old: float = 1.0,
    w_new: float = 1.0,
) -> SubspaceEstimate:
    """Same result as :func:`basic_merge` via QR of the concatenation.

    The SVD runs on the small triangular factor, so the dense work on tall
    inputs is a single QR pass.
    """
    _check_weights(w_old, w_new)
    if s1.dim != s2.dim:
        raise ValueError("estimates live in different ambient dimensions")
    if not 1 <= r <= s1.dim:
        raise ValueError(f"target rank {r} outside [1, {s1.dim}]")
    if s1.rank == 0 and s2.rank == 0:
        return SubspaceEstimate.empty(s1.dim)

    c = _weighted_concat(s1, s2, w_old, w_new)
    q, rr = np.linalg.qr(c)
    accounting.note("merge.q", q.shape)
    u_in, vals, _ = np.linalg.svd(rr)
    cutoff = _zero_cutoff(vals, max(c.shape))
    keep = min(r, int(np.sum(vals > cutoff)))
    if keep == 0:
        return SubspaceEstimate.empty(s1.dim)
    basis = q @ u_in[:, :keep]
    accounting.note("merge.basis", basis.shape)
    _fix_signs(basis)
    return SubspaceEstimate(basis, vals[:keep].copy())
