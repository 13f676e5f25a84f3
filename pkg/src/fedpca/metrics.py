"""Evaluation metrics and the CSV row sink shared by every command.

All reported numbers flow through MetricLog so output files share one
schema: run_id, t, metric, value, params (a compact JSON object). Metric
names come from a fixed registry; an unregistered name is a programming
error, not a new column.
"""

from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import ensure_matrix, singular_values

REGISTERED_METRICS = frozenset(
    {
        "rank",
        "level_rank",
        "merge_count",
        "reconstruction_error",
        "log_reconstruction_error",
        "energy_ratio",
        "global_value",
        "singular_value",
        "schedule_replay_max_dev",
        "noise_omega",
        "batch_width",
        "qa_signed",
        "qa_abs",
        "measured_error",
        "error_bound",
        "within_bound",
        "runtime_s",
        "unit_ball_scale",
    }
)


def residual_rho(y, r: int) -> float:
    """Frobenius norm of what the best rank-r approximation leaves behind.

    sqrt(sum of squared singular values past the r-th); zero once r reaches
    the full rank.
    """
    m = ensure_matrix(y)
    if not 0 <= r <= min(m.shape):
        raise ValueError(f"r={r} outside [0, {min(m.shape)}]")
    s = singular_values(m)
    tail = s[r:]
    return float(np.sqrt(np.sum(tail * tail)))


def projection_error(y, basis) -> float:
    """Mean squared residual per column after projecting onto the basis.

    (||Y||_F^2 - ||U^T Y||_F^2) / n for a column-orthonormal U; the d x d
    projector is never formed.
    """
    m = ensure_matrix(y)
    u = np.asarray(basis, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != m.shape[0]:
        raise ValueError("basis rows must match the data dimension")
    _require_orthonormal(u)
    total = float(np.sum(m * m))
    if u.shape[1]:
        proj = u.T @ m
        total -= float(np.sum(proj * proj))
    return max(total, 0.0) / m.shape[1]


def qa_overlap(v, v_hat, signed: bool = False) -> float:
    """Overlap |<v, v_hat>| between two unit vectors (signed on request)."""
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    b = np.asarray(v_hat, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError("vectors differ in length")
    for name, vec in (("v", a), ("v_hat", b)):
        if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-8:
            raise ValueError(f"{name} is not unit-norm")
    dot = float(a @ b)
    return dot if signed else abs(dot)


def subspace_distance(basis_a, basis_b) -> float:
    """Frobenius distance between the two orthogonal projectors.

    Computed without forming either d x d projector:
    sqrt(r_a + r_b - 2 ||A^T B||_F^2). Zero iff the spans coincide.
    """
    a = np.asarray(basis_a, dtype=np.float64)
    b = np.asarray(basis_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError("bases must share the ambient dimension")
    _require_orthonormal(a)
    _require_orthonormal(b)
    cross = a.T @ b
    inner = a.shape[1] + b.shape[1] - 2.0 * float(np.sum(cross * cross))
    return float(np.sqrt(max(inner, 0.0)))


def procrustes_align_error(a, b) -> float:
    """Residual min over square orthogonal W of ||A W - B||_F.

    Solved through the singular values of A^T B:
    ||A||_F^2 + ||B||_F^2 - 2 * nuclear(A^T B), clipped at zero before the
    square root.
    """
    ma = ensure_matrix(a, "a")
    mb = ensure_matrix(b, "b")
    if ma.shape != mb.shape:
        raise ValueError(f"shapes differ: {ma.shape} vs {mb.shape}")
    cross = ma.T @ mb
    nuclear = float(np.sum(np.linalg.svd(cross, compute_uv=False)))
    sq = float(np.sum(ma * ma)) + float(np.sum(mb * mb)) - 2.0 * nuclear
    return float(np.sqrt(max(sq, 0.0)))


def _require_orthonormal(u: np.ndarray) -> None:
    r = u.shape[1]
    if r == 0:
        return
    dev = float(np.max(np.abs(u.T @ u - np.eye(r))))
    if dev > 1e-10 * max(u.shape[0], 1):
        raise ValueError(f"basis is not column-orthonormal (deviation {dev:.3e})")


@dataclass(frozen=True)
class MetricRow:
    run_id: str
    t: Optional[int]
    metric: str
    value: float
    params: str  # compact JSON object


class MetricLog:
    """Append-only, thread-safe collection of metric rows for one run."""

    def __init__(self, run_id: str):
        self.run_id = run_id
        self._rows: list[MetricRow] = []
        self._lock = threading.Lock()

    def add(self, metric: str, value: float, t: Optional[int] = None, **params) -> None:
        if metric not in REGISTERED_METRICS:
            raise ValueError(f"unregistered metric {metric!r}")
        val = float(value)
        if not math.isfinite(val):
            raise ValueError(f"non-finite value for metric {metric!r}")
        encoded = json.dumps(params, sort_keys=True, separators=(",", ":"))
        row = MetricRow(self.run_id, t, metric, val, encoded)
        with self._lock:
            self._rows.append(row)

    def rows(self) -> list[MetricRow]:
        with self._lock:
            return list(self._rows)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_id", "t", "metric", "value", "params"])
            for row in self.rows():
                t_field = "" if row.t is None else str(row.t)
                writer.writerow(
                    [row.run_id, t_field, row.metric, str(row.value), row.params]
                )
