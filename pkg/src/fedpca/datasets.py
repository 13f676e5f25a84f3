"""Synthetic data, CSV ingestion, and stream partitioning.

Samples are columns everywhere inside the package; the CSV loader accepts
either orientation and transposes on the way in. Generation is fully
deterministic given the seed: the same spec always yields the same bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .linalg import economy_qr, ensure_matrix


class DataError(ValueError):
    """Raised when an input file cannot be parsed into a matrix."""


@dataclass(frozen=True)
class SynthSpec:
    """Power-law spectrum test matrix: values i**(-alpha), random factors."""

    d: int
    n: int
    alpha: float
    seed: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError(f"shape must be positive, got ({self.d}, {self.n})")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")


def synth(spec: SynthSpec) -> np.ndarray:
    """d x n matrix with singular values exactly i**(-alpha).

    Left factors come from the QR of a seeded d x d Gaussian draw, right
    factors from the QR of a seeded Gaussian with min(d, n) columns (the
    economy-size slice of the square draw when n exceeds d). Bit-identical
    across runs for a fixed spec.
    """
    rng = np.random.default_rng(spec.seed)
    k = min(spec.d, spec.n)
    left, _ = economy_qr(rng.standard_normal((spec.d, spec.d)))
    right, _ = economy_qr(rng.standard_normal((spec.n, k)))
    values = np.arange(1, k + 1, dtype=np.float64) ** (-spec.alpha)
    return (left[:, :k] * values) @ right.T


def synth_gaussian_cov(d: int, n: int, alpha: float, seed: int) -> np.ndarray:
    """n iid samples (columns) from N(0, S diag(i**-alpha) S^T), S orthogonal."""
    spec = SynthSpec(d, n, alpha, seed)  # reuse validation
    rng = np.random.default_rng(spec.seed)
    basis, _ = economy_qr(rng.standard_normal((d, d)))
    lam = np.arange(1, d + 1, dtype=np.float64) ** (-alpha)
    shaper = basis * np.sqrt(lam)
    return shaper @ rng.standard_normal((d, n))


def load_csv(path, orientation: str = "columns", normalize: str = "none") -> np.ndarray:
    """Parse a numeric CSV into a d x n matrix of column samples.

    orientation "columns" takes the file as the matrix itself (rows are
    features); "rows" means each CSV row is one sample and the result is
    transposed. A single non-numeric first row is treated as a header and
    skipped. normalize "unit-ball" divides every column by
    max(1, largest column norm) so all samples fit in the unit ball.

    Raises:
        DataError: empty file, ragged rows, or non-numeric cells.
    """
    if orientation not in ("columns", "rows"):
        raise ValueError(f"unknown orientation {orientation!r}")
    if normalize not in ("none", "unit-ball"):
        raise ValueError(f"unknown normalize mode {normalize!r}")

    rows: list[list[float]] = []
    width = None
    with open(path, "r", newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            try:
                parsed = [float(cell) for cell in record]
            except ValueError:
                if line_no == 1 and not rows:
                    continue  # header row
                raise DataError(
                    f"{path}: non-numeric cell on line {line_no}"
                ) from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise DataError(
                    f"{path}: line {line_no} has {len(parsed)} cells, "
                    f"expected {width}"
                )
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no numeric rows")

    matrix = np.asarray(rows, dtype=np.float64)
    if orientation == "rows":
        matrix = matrix.T.copy()
    matrix = ensure_matrix(matrix, str(path))
    if normalize == "unit-ball":
        matrix, _ = normalize_unit_ball(matrix)
    return matrix


def normalize_unit_ball(x) -> Tuple[np.ndarray, float]:
    """Scale all columns by 1 / max(1, largest column norm).

    Returns the scaled matrix and the divisor actually applied, so callers
    can record it. Never scales up: data already inside the unit ball is
    returned unchanged with factor 1.
    """
    m = ensure_matrix(x)
    largest = float(np.max(np.linalg.norm(m, axis=0)))
    factor = max(1.0, largest)
    if factor == 1.0:
        return m, 1.0
    return m / factor, factor


def save_matrix_csv(path, x) -> None:
    """Write a matrix as CSV with 17 significant digits (lossless for float64)."""
    m = ensure_matrix(x)
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class StreamPartition:
    """Disjoint, exhaustive assignment of column indices to clients.

    Each client's index tuple is strictly increasing, so per-client column
    order always follows the original stream.
    """

    n: int
    assignments: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for client in self.assignments:
            for prev, cur in zip(client, client[1:]):
                if cur <= prev:
                    raise ValueError("client indices must be strictly increasing")
            seen.update(client)
        if len(seen) != self.n or (seen and (min(seen) < 0 or max(seen) >= self.n)):
            raise ValueError("assignments must partition range(n)")
        if sum(len(c) for c in self.assignments) != self.n:
            raise ValueError("assignments overlap")

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        """Materialize one column block per client."""
        m = ensure_matrix(x)
        if m.shape[1] != self.n:
            raise ValueError(f"matrix has {m.shape[1]} columns, expected {self.n}")
        return [m[:, list(idx)] if idx else m[:, :0] for idx in self.assignments]


def partition_columns(
    n: int, clients: int, policy: str = "contiguous", seed: int = 0
) -> StreamPartition:
    """Assign n column indices to clients under a named policy.

    contiguous: consecutive runs, sizes within one of n/clients.
    round_robin: client i takes columns i, i + M, i + 2M, ...
    seeded_shuffle: a seeded permutation dealt into equal chunks, each
    client's share then sorted to preserve stream order.

    With fewer columns than clients some shares come back empty, which the
    federation treats as a silent client.
    """
    if clients < 1:
        raise ValueError("clients must be positive")
    if n < 0:
        raise ValueError("n must be non-negative")
    if policy == "contiguous":
        base, extra = divmod(n, clients)
        out = []
        start = 0
        for i in range(clients):
            size = base + (1 if i < extra else 0)
            out.append(tuple(range(start, start + size)))
            start += size
        return StreamPartition(n, tuple(out))
    if policy == "round_robin":
        return StreamPartition(
            n, tuple(tuple(range(i, n, clients)) for i in range(clients))
        )
    if policy == "seeded_shuffle":
        perm = np.random.default_rng(seed).permutation(n)
        out = [
            tuple(sorted(int(j) for j in perm[i::clients])) for i in range(clients)
        ]
        return StreamPartition(n, tuple(out))
    raise ValueError(f"unknown policy {policy!r}")
