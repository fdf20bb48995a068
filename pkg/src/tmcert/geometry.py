"""Rectilinear 2D domains, truncated strip ports and structured triangulations.

Domains are unions of axis-aligned rectangles.  Semi-infinite strips are
described by :class:`StripPort` objects and truncated at distance ``T`` from
the edge they are attached to; the truncation face carries the
``"artificial"`` tag.  :func:`triangulate` builds a conforming mesh on a
global tensor grid so that neighbouring rectangles always share nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

TAGS = (
    "dirichlet",
    "neumann",
    "artificial",
    "inner_conductor",
    "outer_conductor",
    "symmetry",
)

PRESETS = ("rectangle", "l_shape", "x_shape", "square_annulus", "half_guide_mixed")

DEFAULT_T = 4.0
DEFAULT_H = 1.0 / 32

_DIRECTIONS = {"+x": (1, 0), "-x": (-1, 0), "+y": (0, 1), "-y": (0, -1)}


class MeshError(ValueError):
    """Raised when a mesh request is inconsistent with the geometry."""


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x, y):
        """Vectorised strict-interior test."""
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)

    def overlaps(self, other: "Rect") -> bool:
        return (
            min(self.x1, other.x1) > max(self.x0, other.x0)
            and min(self.y1, other.y1) > max(self.y0, other.y0)
        )

    def touches(self, other: "Rect") -> bool:
        """True when the two closed rectangles share a segment of positive length."""
        dx = min(self.x1, other.x1) - max(self.x0, other.x0)
        dy = min(self.y1, other.y1) - max(self.y0, other.y0)
        return (dx >= 0 and dy > 0) or (dx > 0 and dy >= 0)


Segment = Tuple[Tuple[float, float], Tuple[float, float]]


@dataclass(frozen=True)
class StripPort:
    """A semi-infinite strip glued to ``edge`` and truncated at length ``T``."""

    edge: Segment
    direction: str
    width: float
    T: float = DEFAULT_T

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"unknown port direction {self.direction!r}")
        if self.width <= 0 or self.T <= 0:
            raise ValueError("port width and truncation length must be positive")
        (ax, ay), (bx, by) = self.edge
        dx, dy = _DIRECTIONS[self.direction]
        if dx != 0 and ax != bx or dy != 0 and ay != by:
            raise ValueError("port edge must be perpendicular to its direction")
        if not math.isclose(math.hypot(bx - ax, by - ay), self.width):
            raise ValueError("port width does not match its attachment edge")

    def rect(self) -> Rect:
        (ax, ay), (bx, by) = self.edge
        lo_x, hi_x = sorted((ax, bx))
        lo_y, hi_y = sorted((ay, by))
        if self.direction == "+x":
            return Rect(ax, lo_y, ax + self.T, hi_y)
        if self.direction == "-x":
            return Rect(ax - self.T, lo_y, ax, hi_y)
        if self.direction == "+y":
            return Rect(lo_x, ay, hi_x, ay + self.T)
        return Rect(lo_x, ay - self.T, hi_x, ay)

    def truncation_face(self) -> Segment:
        (ax, ay), (bx, by) = self.edge
        dx, dy = _DIRECTIONS[self.direction]
        return (
            (ax + dx * self.T, ay + dy * self.T),
            (bx + dx * self.T, by + dy * self.T),
        )

    def with_T(self, T: float) -> "StripPort":
        return StripPort(self.edge, self.direction, self.width, T)


@dataclass(frozen=True)
class RectilinearDomain2D:
    """Bounded rectangles plus truncated ports, with boundary tags.

    ``edge_tags`` lists ``(segment, tag)`` rules; a boundary edge lying on one
    of the segments takes its tag, every other boundary edge gets
    ``default_tag``.  Port truncation faces are always ``"artificial"``.
    """

    rects: Tuple[Rect, ...]
    ports: Tuple[StripPort, ...] = ()
    edge_tags: Tuple[Tuple[Segment, str], ...] = ()
    default_tag: str = "dirichlet"
    name: str = "custom"
    holes: int = 0

    def __post_init__(self):
        if not self.rects:
            raise ValueError("domain needs at least one rectangle")
        if self.default_tag not in TAGS:
            raise ValueError(f"unknown tag {self.default_tag!r}")
        for _, tag in self.edge_tags:
            if tag not in TAGS:
                raise ValueError(f"unknown tag {tag!r}")
            if tag == "artificial":
                raise ValueError("artificial tags are reserved for port truncation faces")
        pieces = self.all_rects()
        for i, r in enumerate(pieces):
            for s in pieces[i + 1 :]:
                if r.overlaps(s):
                    raise ValueError(f"overlapping rectangles {r} and {s}")
        if not _connected(pieces):
            raise ValueError("domain is not connected")
        for port in self.ports:
            if not _on_boundary(port.edge, self.rects):
                raise ValueError(f"port edge {port.edge} is not on the bounded part's boundary")

    def all_rects(self) -> List[Rect]:
        return list(self.rects) + [p.rect() for p in self.ports]

    def with_T(self, T: float) -> "RectilinearDomain2D":
        return RectilinearDomain2D(
            self.rects,
            tuple(p.with_T(T) for p in self.ports),
            self.edge_tags,
            self.default_tag,
            self.name,
            self.holes,
        )

    @property
    def area(self) -> float:
        return sum(r.area for r in self.all_rects())

    def min_feature(self) -> float:
        xs, ys = _breakpoints(self.all_rects())
        return float(min(np.diff(xs).min(), np.diff(ys).min()))

    def contains(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        inside = np.zeros(np.broadcast(x, y).shape, bool)
        for r in self.all_rects():
            inside |= (x >= r.x0) & (x <= r.x1) & (y >= r.y0) & (y <= r.y1)
        return inside


def _connected(rects: Sequence[Rect]) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(len(rects)):
            if j not in seen and rects[i].touches(rects[j]):
                seen.add(j)
                stack.append(j)
    return len(seen) == len(rects)


def _on_segment(p, seg: Segment, tol: float = 1e-12) -> bool:
    (ax, ay), (bx, by) = seg
    px, py = p
    if ax == bx:
        return abs(px - ax) <= tol and min(ay, by) - tol <= py <= max(ay, by) + tol
    if ay == by:
        return abs(py - ay) <= tol and min(ax, bx) - tol <= px <= max(ax, bx) + tol
    raise ValueError("segments must be axis-aligned")


def _on_boundary(seg: Segment, rects: Sequence[Rect]) -> bool:
    mid = ((seg[0][0] + seg[1][0]) / 2, (seg[0][1] + seg[1][1]) / 2)
    sides = []
    for r in rects:
        sides += [
            ((r.x0, r.y0), (r.x1, r.y0)),
            ((r.x1, r.y0), (r.x1, r.y1)),
            ((r.x0, r.y1), (r.x1, r.y1)),
            ((r.x0, r.y0), (r.x0, r.y1)),
        ]
    on_side = any(_on_segment(seg[0], s) and _on_segment(seg[1], s) for s in sides)
    if not on_side:
        return False
    # the edge must not be interior: probe both sides of its midpoint
    eps = 1e-9
    if seg[0][0] == seg[1][0]:
        probes = [(mid[0] - eps, mid[1]), (mid[0] + eps, mid[1])]
    else:
        probes = [(mid[0], mid[1] - eps), (mid[0], mid[1] + eps)]
    hits = [any(bool(r.contains(*p)) for r in rects) for p in probes]
    return hits.count(True) == 1


def _breakpoints(rects: Sequence[Rect]):
    xs = sorted({r.x0 for r in rects} | {r.x1 for r in rects})
    ys = sorted({r.y0 for r in rects} | {r.y1 for r in rects})
    return np.array(xs), np.array(ys)


def preset_domain(name: str, **params) -> RectilinearDomain2D:
    """Build one of the canonical domains by name.

    Parameters
    ----------
    name : {"rectangle", "l_shape", "x_shape", "square_annulus", "half_guide_mixed"}
    **params
        ``rectangle``/``half_guide_mixed``: ``a``, ``b``.
        ``l_shape``/``x_shape``: truncation length ``T`` (default 4).
        ``square_annulus``: ``outer`` and ``inner`` side lengths, optional
        centre offsets ``cx``, ``cy`` of the inner square.
    """
    if name == "rectangle":
        a, b = float(params.get("a", 1.0)), float(params.get("b", 1.0))
        if a <= 0 or b <= 0:
            raise ValueError("rectangle needs a, b > 0")
        return RectilinearDomain2D((Rect(0.0, 0.0, a, b),), name=name)

    if name == "half_guide_mixed":
        a, b = float(params.get("a", 1.0)), float(params.get("b", 0.5))
        if a <= 0 or b <= 0:
            raise ValueError("half_guide_mixed needs a, b > 0")
        # the line y = 0 is the symmetry line of the doubled section
        tags = ((((0.0, 0.0), (a, 0.0)), "dirichlet"),)
        return RectilinearDomain2D(
            (Rect(0.0, 0.0, a, b),), edge_tags=tags, default_tag="neumann", name=name
        )

    if name == "l_shape":
        T = float(params.get("T", DEFAULT_T))
        ports = (
            StripPort(((1.0, 0.0), (1.0, 1.0)), "+x", 1.0, T),
            StripPort(((0.0, 1.0), (1.0, 1.0)), "+y", 1.0, T),
        )
        return RectilinearDomain2D((Rect(0.0, 0.0, 1.0, 1.0),), ports, name=name)

    if name == "x_shape":
        T = float(params.get("T", DEFAULT_T))
        lo, hi = -0.5, 0.5
        ports = (
            StripPort(((hi, lo), (hi, hi)), "+x", 1.0, T),
            StripPort(((lo, lo), (lo, hi)), "-x", 1.0, T),
            StripPort(((lo, hi), (hi, hi)), "+y", 1.0, T),
            StripPort(((lo, lo), (hi, lo)), "-y", 1.0, T),
        )
        return RectilinearDomain2D((Rect(lo, lo, hi, hi),), ports, name=name)

    if name == "square_annulus":
        outer = float(params.get("outer", 2.0))
        inner = float(params.get("inner", 1.0))
        cx, cy = float(params.get("cx", 0.0)), float(params.get("cy", 0.0))
        if outer <= 0 or inner <= 0:
            raise ValueError("annulus sides must be positive")
        o = outer / 2
        ix0, ix1 = cx - inner / 2, cx + inner / 2
        iy0, iy1 = cy - inner / 2, cy + inner / 2
        if not (-o < ix0 and ix1 < o and -o < iy0 and iy1 < o):
            raise ValueError("inner square must be strictly inside the outer one")
        rects = (
            Rect(-o, -o, o, iy0),
            Rect(-o, iy1, o, o),
            Rect(-o, iy0, ix0, iy1),
            Rect(ix1, iy0, o, iy1),
        )
        inner_sides = (
            ((ix0, iy0), (ix1, iy0)),
            ((ix1, iy0), (ix1, iy1)),
            ((ix0, iy1), (ix1, iy1)),
            ((ix0, iy0), (ix0, iy1)),
        )
        tags = tuple((s, "inner_conductor") for s in inner_sides)
        return RectilinearDomain2D(
            rects, edge_tags=tags, default_tag="outer_conductor", name=name, holes=1
        )

    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray  # (n, 2)
    tris: np.ndarray  # (m, 3), counter-clockwise
    boundary_edges: np.ndarray  # (b, 2)
    edge_tags: Tuple[str, ...]
    h: float
    holes: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_tris(self) -> int:
        return len(self.tris)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.tris]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted."""
        e = np.concatenate([self.tris[:, [0, 1]], self.tris[:, [1, 2]], self.tris[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def nodes_with_tag(self, *tags: str) -> np.ndarray:
        sel = [i for i, t in enumerate(self.edge_tags) if t in tags]
        if not sel:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.boundary_edges[sel].ravel())

    def centroids(self) -> np.ndarray:
        return self.nodes[self.tris].mean(axis=1)

    def diameters(self) -> np.ndarray:
        p = self.nodes[self.tris]
        lengths = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return np.max(lengths, axis=0)


def triangulate(dom: RectilinearDomain2D, h: float = DEFAULT_H) -> TriMesh:
    """Structured conforming triangulation of ``dom`` with target size ``h``.

    Every interval between consecutive rectangle breakpoints is split into
    ``ceil(length / h)`` equal cells; each cell square is cut along its
    south-west/north-east diagonal.
    """
    if not h > 0:
        raise MeshError("h must be positive")
    if h > dom.min_feature() / 2 + 1e-12:
        raise MeshError(
            f"h={h} too large: must be at most half the smallest feature ({dom.min_feature()})"
        )
    rects = dom.all_rects()
    bx, by = _breakpoints(rects)
    xs = _subdivide(bx, h)
    ys = _subdivide(by, h)
    nx, ny = len(xs), len(ys)

    xc = 0.5 * (xs[:-1] + xs[1:])
    yc = 0.5 * (ys[:-1] + ys[1:])
    XC, YC = np.meshgrid(xc, yc, indexing="ij")
    active = np.zeros(XC.shape, bool)
    for r in rects:
        active |= r.contains(XC, YC)

    used = np.zeros((nx, ny), bool)
    used[:-1, :-1] |= active
    used[1:, :-1] |= active
    used[:-1, 1:] |= active
    used[1:, 1:] |= active
    # node numbering: lexicographic in (x index, y index)
    index = -np.ones((nx, ny), dtype=np.int64)
    index[used] = np.arange(int(used.sum()))
    I, J = np.nonzero(used)
    nodes = np.column_stack([xs[I], ys[J]])

    ci, cj = np.nonzero(active)
    sw = index[ci, cj]
    se = index[ci + 1, cj]
    ne = index[ci + 1, cj + 1]
    nw = index[ci, cj + 1]
    tris = np.empty((2 * len(ci), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([sw, se, ne])
    tris[1::2] = np.column_stack([sw, ne, nw])

    bedges = _boundary_edges(tris)
    tags = _tag_edges(nodes, bedges, dom)
    return TriMesh(nodes, tris, bedges, tags, float(h), dom.holes)


def _subdivide(breaks: np.ndarray, h: float) -> np.ndarray:
    pts = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / h - 1e-9)))
        pts.extend(a + (b - a) * np.arange(1, n + 1) / n)
        pts[-1] = b
    return np.array(pts, dtype=float)


def _boundary_edges(tris: np.ndarray) -> np.ndarray:
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    boundary = counts[inv] == 1
    # keep the orientation of the owning triangle (domain on the left)
    out = e[boundary]
    order = np.lexsort((out[:, 1], out[:, 0]))
    return out[order]


def _tag_edges(nodes: np.ndarray, bedges: np.ndarray, dom: RectilinearDomain2D) -> Tuple[str, ...]:
    rules: List[Tuple[Segment, str]] = [(p.truncation_face(), "artificial") for p in dom.ports]
    rules += list(dom.edge_tags)
    tags = []
    for a, b in bedges:
        pa, pb = nodes[a], nodes[b]
        hit = None
        for seg, tag in rules:
            if _on_segment(pa, seg) and _on_segment(pb, seg):
                if hit is not None and hit != tag:
                    raise MeshError(f"conflicting tags {hit!r}/{tag!r} on edge {pa}-{pb}")
                hit = tag
        tags.append(hit or dom.default_tag)
    return tuple(tags)


def refine(mesh: TriMesh) -> TriMesh:
    """Uniform red refinement: every triangle is split into four."""
    edges = mesh.edges()
    n = mesh.n_nodes
    lookup: Dict[Tuple[int, int], int] = {
        (int(a), int(b)): n + k for k, (a, b) in enumerate(edges)
    }
    mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])

    def mid(a, b):
        return np.array([lookup[(min(i, j), max(i, j))] for i, j in zip(a, b)], dtype=np.int64)

    t = mesh.tris
    m01 = mid(t[:, 0], t[:, 1])
    m12 = mid(t[:, 1], t[:, 2])
    m20 = mid(t[:, 2], t[:, 0])
    tris = np.empty((4 * len(t), 3), dtype=np.int64)
    tris[0::4] = np.column_stack([t[:, 0], m01, m20])
    tris[1::4] = np.column_stack([m01, t[:, 1], m12])
    tris[2::4] = np.column_stack([m20, m12, t[:, 2]])
    tris[3::4] = np.column_stack([m01, m12, m20])

    be = mesh.boundary_edges
    bm = mid(be[:, 0], be[:, 1])
    bedges = np.empty((2 * len(be), 2), dtype=np.int64)
    bedges[0::2] = np.column_stack([be[:, 0], bm])
    bedges[1::2] = np.column_stack([bm, be[:, 1]])
    tags = tuple(t for t in mesh.edge_tags for _ in range(2))
    return TriMesh(nodes, tris, bedges, tags, mesh.h / 2, mesh.holes)


def check_mesh(mesh: TriMesh, holes: Optional[int] = None) -> List[str]:
    """Return the list of violated mesh invariants (empty when valid)."""
    problems = []
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        problems.append(f"{int(np.sum(areas <= 0))} triangles with non-positive area")

    e = np.concatenate([mesh.tris[:, [0, 1]], mesh.tris[:, [1, 2]], mesh.tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    bkey = {tuple(r) for r in uniq[counts == 1]}
    given = {tuple(sorted(map(int, r))) for r in mesh.boundary_edges}
    if bkey != given:
        problems.append("boundary edge list does not match single-owner edges")
    if len(mesh.edge_tags) != len(mesh.boundary_edges):
        problems.append("boundary edges and tags differ in length")
    elif any(t not in TAGS for t in mesh.edge_tags):
        problems.append("unknown boundary tag")

    # a hanging node sits in the interior of some edge
    lengths = np.linalg.norm(mesh.nodes[uniq[:, 0]] - mesh.nodes[uniq[:, 1]], axis=1)
    hmin = lengths.min()
    from scipy.spatial import cKDTree

    tree = cKDTree(mesh.nodes)
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    d, _ = tree.query(mids)
    if np.any(d < 1e-9 * hmin):
        problems.append("hanging node on an edge midpoint")
    dup = tree.query_pairs(1e-9 * hmin)
    if dup:
        problems.append("duplicate nodes")

    expected = 1 - (mesh.holes if holes is None else holes)
    chi = mesh.n_nodes - len(uniq) + mesh.n_tris
    if chi != expected:
        problems.append(f"Euler characteristic {chi} != {expected}")
    return problems


def port_truncation_distance(port: StripPort) -> float:
    (ax, ay), _ = port.edge
    (fx, fy), _ = port.truncation_face()
    return math.hypot(fx - ax, fy - ay)
