"""Cross-sections and the magnetostatic shape-anisotropy matrix.

The boundary double integral

    B = -1/(2 pi) \\int\\int n(xi) (x) n(eta) ln|xi - eta| dxi deta

is the 2D demagnetising tensor of the cross-section (``trace B = |Q|``; the
unit-area disk gives ``B = I/2``).  The reduced energies used for straight
wires and rings carry the disk coefficient ``1/(2 pi)``, i.e. ``M = B / pi``;
that scaling is the default ``convention="reduced"``.

Quadrature: panel midpoints on the boundary, product rule over panel pairs.
The self-pair of each panel is replaced by a closed-form log integral.  Two
self terms are available:

* ``"corrected"`` (default): ``w^2 ln(w / 2 pi)``, the local correction that
  makes the punctured product rule consistent for a log singularity on a
  uniformly paneled boundary; third-order on the disk.
* ``"midpoint"``: ``w * \\int_{-w/2}^{w/2} ln|u| du = w^2 (ln(w/2) - 1)``;
  first-order, used as an independent route for Richardson extrapolation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import GeometryError, NormalizationError

AREA_TOL = 1e-9
CONVENTIONS = {"reduced": 1.0 / np.pi, "boundary": 1.0}


@dataclass(frozen=True)
class BoundaryPanels:
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def divergence_area(self) -> float:
        """``sum (xi . n) w / 2``, equal to ``|Q|`` by the divergence theorem."""
        return float(0.5 * np.sum(np.sum(self.nodes * self.normals, axis=1) * self.weights))


@dataclass(frozen=True)
class CrossSection:
    """Simply connected cross-section Q: a disk, a square or a CCW polygon."""

    kind: str
    radius: float = 0.0
    vertices: np.ndarray | None = None

    @property
    def area(self) -> float:
        if self.kind == "disk":
            return float(np.pi * self.radius**2)
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def rho(self) -> float:
        """``max |z|`` over Q."""
        if self.kind == "disk":
            return float(self.radius)
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def scaled(self, factor: float) -> "CrossSection":
        if self.kind == "disk":
            return CrossSection("disk", radius=self.radius * factor)
        return CrossSection(self.kind, vertices=self.vertices * factor)

    def normalized(self) -> "CrossSection":
        """Copy rescaled to unit area."""
        return self.scaled(1.0 / np.sqrt(self.area))

    def rotated(self, angle: float) -> "CrossSection":
        """Rotate a polygon by ``angle``; a disk only shifts its panel start angle."""
        if self.kind == "disk":
            return self
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return CrossSection(self.kind, vertices=self.vertices @ rot.T)

    def panels(self, count: int, start_angle: float = 0.0) -> BoundaryPanels:
        """Split the boundary into ``count`` panels (midpoint nodes, outward normals)."""
        if count < 4:
            raise GeometryError("need at least 4 panels")
        if self.kind == "disk":
            th = start_angle + (np.arange(count) + 0.5) * (2.0 * np.pi / count)
            nrm = np.stack([np.cos(th), np.sin(th)], axis=1)
            w = np.full(count, 2.0 * np.pi * self.radius / count)
            return BoundaryPanels(self.radius * nrm, nrm, w)
        return _polygon_panels(self.vertices, count)


def _polygon_panels(verts: np.ndarray, count: int) -> BoundaryPanels:
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths <= 0):
        raise GeometryError("degenerate polygon edge")
    if count < len(verts):
        raise GeometryError("need at least one panel per polygon edge")
    # largest-remainder split, proportional to edge length, at least 1 per edge
    share = lengths / lengths.sum() * count
    per = np.maximum(1, np.floor(share).astype(int))
    while per.sum() < count:
        per[np.argmax(share - per)] += 1
    while per.sum() > count:
        cand = np.where(per > 1, per - share, -np.inf)
        per[np.argmax(cand)] -= 1
    nodes, normals, weights = [], [], []
    for v0, e, ln, k in zip(verts, edges, lengths, per):
        u = (np.arange(k) + 0.5) / k
        nodes.append(v0 + u[:, None] * e)
        outward = np.array([e[1], -e[0]]) / ln  # CCW polygon: right-hand normal
        normals.append(np.tile(outward, (k, 1)))
        weights.append(np.full(k, ln / k))
    return BoundaryPanels(np.vstack(nodes), np.vstack(normals), np.concatenate(weights))


def disk(radius: float | None = None) -> CrossSection:
    """Disk; default radius ``1/sqrt(pi)`` gives unit area."""
    r = 1.0 / np.sqrt(np.pi) if radius is None else float(radius)
    if r <= 0:
        raise GeometryError("disk radius must be positive")
    return CrossSection("disk", radius=r)


def square(side: float = 1.0) -> CrossSection:
    a = 0.5 * float(side)
    if a <= 0:
        raise GeometryError("square side must be positive")
    v = np.array([[-a, -a], [a, -a], [a, a], [-a, a]])
    return CrossSection("square", vertices=v)


def polygon(vertices) -> CrossSection:
    """Polygon from counter-clockwise vertices (not repeated at the end)."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise GeometryError("polygon needs at least 3 (x, y) vertices")
    if np.allclose(v[0], v[-1]):
        v = v[:-1]
    q = CrossSection("polygon", vertices=v)
    if q.area <= 0:
        raise GeometryError("polygon vertices must be counter-clockwise")
    return q


def read_polygon_csv(path) -> CrossSection:
    """Read ``x,y`` vertex rows (optional header) into a polygon."""
    rows = []
    with open(Path(path), newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append([float(row[0]), float(row[1])])
            except (ValueError, IndexError):
                if k == 0:
                    continue
                raise GeometryError(f"{path}: malformed row {k + 1}")
    return polygon(rows)


@dataclass(frozen=True)
class DemagMatrix:
    """Symmetric 2x2 matrix acting on the ``(v.n, v.b)`` components."""

    matrix: np.ndarray
    panels: int
    convention: str = "reduced"
    self_term: str = "corrected"

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "panels": self.panels,
                "convention": self.convention, "self_term": self.self_term}


def self_panel_values(w: np.ndarray, rule: str) -> np.ndarray:
    if rule == "corrected":
        return w * w * np.log(w / (2.0 * np.pi))
    if rule == "midpoint":
        return w * w * (np.log(0.5 * w) - 1.0)
    raise ValueError(f"unknown self-panel rule {rule!r}")


def demag_matrix(q: CrossSection, panels: int = 2048, *, convention: str = "reduced",
                 self_term: str = "corrected", start_angle: float = 0.0) -> DemagMatrix:
    """Shape-anisotropy matrix of a unit-area cross-section.

    Raises :class:`NormalizationError` unless ``|Q| = 1``; use
    :meth:`CrossSection.normalized` first.
    """
    if abs(q.area - 1.0) > AREA_TOL:
        raise NormalizationError(
            f"cross-section area is {q.area:.12g}; rescale to |Q| = 1 (CrossSection.normalized())")
    if panels < 64:
        raise ValueError("demag_matrix needs at least 64 panels")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    bp = q.panels(panels, start_angle=start_angle)
    if np.any(bp.weights <= 0):
        raise GeometryError("degenerate panel (zero length)")
    S = _kernels.boundary_log_sum(np.ascontiguousarray(bp.nodes),
                                  np.ascontiguousarray(bp.normals),
                                  np.ascontiguousarray(bp.weights),
                                  self_panel_values(bp.weights, self_term))
    M = -S / (2.0 * np.pi) * CONVENTIONS[convention]
    M = 0.5 * (M + M.T)
    return DemagMatrix(M, panels, convention, self_term)


def demag_convergence(q: CrossSection, panel_counts, **kw) -> list[dict]:
    """Table of ``M`` at increasing panel counts with successive differences."""
    rows, prev = [], None
    for p in panel_counts:
        M = demag_matrix(q, p, **kw).matrix
        diff = None if prev is None else float(np.max(np.abs(M - prev)))
        rows.append({"panels": int(p), "m11": float(M[0, 0]), "m12": float(M[0, 1]),
                     "m22": float(M[1, 1]), "diff": diff})
        prev = M
    return rows


def richardson(values, ratio: float = 2.0, orders=(1, 2)) -> float:
    """Repeated Richardson extrapolation of a sequence refined by ``ratio``.

    ``orders`` lists the error exponents removed in turn; ``len(values)``
    must exceed ``len(orders)``.
    """
    table = [np.asarray(v, dtype=float) for v in values]
    for p in orders:
        f = ratio**p
        table = [(f * b - a) / (f - 1.0) for a, b in zip(table[:-1], table[1:])]
    return table[-1]


def magnetostatic_density(M: DemagMatrix | np.ndarray, sigma, n, b) -> np.ndarray:
    """``1/2 (sigma.n, sigma.b) M (sigma.n, sigma.b)^T`` (vectorised over leading axes)."""
    mat = M.matrix if isinstance(M, DemagMatrix) else np.asarray(M)
    c1 = np.sum(sigma * n, axis=-1)
    c2 = np.sum(sigma * b, axis=-1)
    return 0.5 * (mat[0, 0] * c1 * c1 + 2.0 * mat[0, 1] * c1 * c2 + mat[1, 1] * c2 * c2)


def magnetostatic_operator(M: DemagMatrix | np.ndarray, n, b) -> np.ndarray:
    """Per-node ``3x3`` matrix ``A = [n b] M [n b]^T`` so the density is ``v.A v / 2``."""
    mat = M.matrix if isinstance(M, DemagMatrix) else np.asarray(M)
    nb = np.stack([n, b], axis=-1)
    return np.einsum("...ia,ab,...jb->...ij", nb, mat, nb)


def magnetostatic_gradient(M: DemagMatrix | np.ndarray, sigma, n, b) -> np.ndarray:
    mat = M.matrix if isinstance(M, DemagMatrix) else np.asarray(M)
    c1 = np.sum(sigma * n, axis=-1)
    c2 = np.sum(sigma * b, axis=-1)
    g1 = mat[0, 0] * c1 + mat[0, 1] * c2
    g2 = mat[0, 1] * c1 + mat[1, 1] * c2
    return g1[..., None] * n + g2[..., None] * b


def from_spec(kind: str, **params) -> CrossSection | None:
    if kind == "none":
        return None
    if kind == "disk":
        return disk(params.get("radius"))
    if kind == "square":
        return square(params.get("side", 1.0))
    if kind == "polygon":
        if params.get("vertices") is not None:
            return polygon(params["vertices"])
        return read_polygon_csv(params["path"])
    raise ValueError(f"unknown cross-section kind {kind!r}")
