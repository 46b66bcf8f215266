"""Figure data: leading eigenvectors of style matrices and classical MDS.

Exports are plain CSV with 17 significant digits, optionally with a
minimal SVG rendering next to them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .stylemat import EigenFactorization, symmetric_eigen


@dataclass(frozen=True)
class Projection2D:
    points: np.ndarray  # (N, out_dim)
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != self.points.shape[0]:
            raise ValueError("one label per point is required")
        if not np.isfinite(self.points).all():
            raise ValueError("projection coordinates must be finite")


def top_eigenvectors(ef: EigenFactorization, k: int) -> np.ndarray:
    """First ``k`` columns of P, i.e. eigenvectors of the ``k`` largest eigenvalues."""
    d = ef.P.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    return ef.P[:, :k].copy()


def classical_mds(vectors, out_dim: int = 2, labels: Sequence[str] | None = None) -> Projection2D:
    """Torgerson MDS on Euclidean distances between the rows of ``vectors``.

    B = -1/2 J D^2 J is factorised with :func:`symmetric_eigen`; coordinates
    are the top ``out_dim`` eigenvectors scaled by sqrt(lambda). Eigenvalues
    below 1e-12 of the largest are treated as zero.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("vectors must be a 2-D array of points")
    n = X.shape[0]
    if n < 3:
        raise ValueError(f"MDS needs at least 3 points, got {n}")
    if not 1 <= out_dim < n:
        raise ValueError(f"out_dim must lie in [1, {n - 1}]")
    sq = np.sum(X * X, axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    np.fill_diagonal(D2, 0.0)
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ D2 @ J
    B = 0.5 * (B + B.T)
    ef = symmetric_eigen(B)
    # eigenvalues at roundoff level would turn into coordinates of size sqrt(eps)
    lam = np.where(ef.lam > 1e-12 * ef.lam[0], ef.lam, 0.0)
    coords = ef.P[:, :out_dim] * np.sqrt(lam[:out_dim])
    coords -= coords.mean(axis=0)
    labels = tuple(str(l) for l in labels) if labels is not None else tuple(str(i) for i in range(n))
    return Projection2D(coords, labels)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_heatmap(matrix, path: str | Path, svg: bool = False) -> None:
    """Write a matrix as CSV (header c0..c{k-1}); optionally ``path`` with .svg suffix too."""
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("heatmap matrix must be a non-empty 2-D array")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"c{j}" for j in range(M.shape[1])])
        for row in M:
            w.writerow([_fmt(v) for v in row])
    if svg:
        _heatmap_svg(M, path.with_suffix(".svg"))


def export_scatter(proj: Projection2D, path: str | Path, svg: bool = False) -> None:
    """Write label,x,y rows (extra columns for out_dim > 2)."""
    pts = proj.points
    if pts.size == 0:
        raise ValueError("nothing to export")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        axes = ["x", "y", "z"][: pts.shape[1]] if pts.shape[1] <= 3 else [f"d{j}" for j in range(pts.shape[1])]
        w.writerow(["label", *axes])
        for label, row in zip(proj.labels, pts):
            w.writerow([label, *(_fmt(v) for v in row)])
    if svg:
        _scatter_svg(proj, path.with_suffix(".svg"))


def read_csv_matrix(path: str | Path) -> np.ndarray:
    """Parse a heatmap CSV back into a float array."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)


def _heatmap_svg(M: np.ndarray, path: Path, cell: int = 8) -> None:
    lim = float(np.abs(M).max()) or 1.0
    rows, cols = M.shape
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * cell}" height="{rows * cell}">']
    for i in range(rows):
        for j in range(cols):
            t = M[i, j] / lim
            fade = int(round(255 * (1 - abs(t))))
            # red for positive, blue for negative, white at zero
            color = f"#ff{fade:02x}{fade:02x}" if t >= 0 else f"#{fade:02x}{fade:02x}ff"
            parts.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" fill="{color}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


def _scatter_svg(proj: Projection2D, path: Path, size: int = 400, margin: int = 40) -> None:
    pts = proj.points[:, :2] if proj.points.shape[1] >= 2 else np.c_[proj.points, np.zeros(len(proj.points))]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    xy = margin + (pts - lo) / span * (size - 2 * margin)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for label, (x, y) in zip(proj.labels, xy):
        y = size - y
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3"/>')
        parts.append(f'<text x="{x + 5:.2f}" y="{y - 5:.2f}" font-size="10">{escape(label)}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
