"""Domains, removable sets, planar fibers and lattice contours.

Sets are membership predicates with a bounding polydisc; nothing is meshed
until a contour is built. Predicates are vectorised: they take an array of
shape ``(..., n)`` and return a boolean array of shape ``(...)``.

The contour builder covers a planar compact set K by closed lattice squares of
side ``eps*sqrt(2)/2`` (diagonal ``eps``), adds one ring of neighbours, and keeps
the sides that belong to exactly one selected square. Each square is taken
counterclockwise, so interior sides cancel and the survivors form ``dP``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .complexcore import Point, Polydisc, as_point, insert_component_array
from .errors import ContourError, EmptyFiberError, SeparationError

Predicate = Callable[[np.ndarray], np.ndarray]

FIBER_SAMPLES = 32       # per-axis grid used to decide fiber emptiness
SEPARATION_ANGLES = 16   # boundary points checked on each eps-disc


def _call_pred(pred: Predicate, pts: np.ndarray) -> np.ndarray:
    out = np.asarray(pred(pts), dtype=bool)
    return np.broadcast_to(out, pts.shape[:-1])


@dataclass(frozen=True)
class DomainSpec:
    """An open set in C^n given by a predicate and a bounding polydisc."""

    dimension: int
    predicate: Predicate = field(repr=False)
    bound: Polydisc
    name: str = ""

    def __post_init__(self):
        if self.bound.dimension != self.dimension:
            raise ValueError("bounding polydisc dimension does not match")

    def contains(self, z) -> bool:
        pts = np.asarray(as_point(z), dtype=complex)
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"dimension mismatch: {pts.shape[-1]} vs {self.dimension}")
        return bool(self.contains_array(pts))

    def contains_array(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        return _call_pred(self.predicate, pts) & self.bound.contains_array(pts)

    def fiber(self, i: int, zp) -> "PlanarOpenSet":
        """Slot-i slice ``{w : zp with w inserted at slot i is in the set}``."""
        zp = _check_base(self, zp)
        lo, hi = _fiber_box(self.bound, i)
        return PlanarOpenSet(lambda w: self.contains_array(insert_component_array(i, zp, w)), lo, hi)


@dataclass(frozen=True)
class RemovableSetSpec(DomainSpec):
    """A relatively closed set A in Omega whose slot-i fibers are compact.

    ``predicate`` has closed semantics: boundary points are members. The
    fiber-compactness claim is the caller's; :func:`check_bounded`
    spot-checks it.
    """

    def fiber(self, i: int, zp) -> "PlanarCompactSet":
        return fiber(self, i, zp)


def _check_base(spec, zp) -> Point:
    zp = as_point(zp)
    if len(zp) != spec.dimension - 1:
        raise ValueError(f"base point must lie in C^{spec.dimension - 1}, got {len(zp)} coordinates")
    return zp


def _fiber_box(bound: Polydisc, i: int):
    c = bound.center[i - 1]
    r = bound.radius
    return complex(c.real - r, c.imag - r), complex(c.real + r, c.imag + r)


@dataclass(frozen=True)
class PlanarOpenSet:
    predicate: Predicate = field(repr=False)
    lo: complex
    hi: complex

    def contains(self, w) -> bool:
        return bool(self.contains_array(np.asarray(w, dtype=complex)))

    def contains_array(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.broadcast_to(np.asarray(self.predicate(w), dtype=bool), w.shape)


@dataclass(frozen=True)
class PlanarCompactSet(PlanarOpenSet):
    """Closed planar set with closed-set membership semantics."""

    def sample_grid(self, m: int = FIBER_SAMPLES) -> np.ndarray:
        xs = np.linspace(self.lo.real, self.hi.real, m)
        ys = np.linspace(self.lo.imag, self.hi.imag, m)
        return (xs[None, :] + 1j * ys[:, None]).ravel()

    def samples(self, m: int = FIBER_SAMPLES) -> np.ndarray:
        """Grid points of the bounding box that belong to the set."""
        g = self.sample_grid(m)
        return g[self.contains_array(g)]

    def is_empty(self, m: int = FIBER_SAMPLES) -> bool:
        return not np.any(self.contains_array(self.sample_grid(m)))


def fiber(a: DomainSpec, i: int, zp) -> PlanarCompactSet:
    """Planar set ``pi_i(A_i(zp))``; may be empty (check ``is_empty``)."""
    zp = _check_base(a, zp)
    lo, hi = _fiber_box(a.bound, i)
    pred = lambda w: a.contains_array(insert_component_array(i, zp, w))  # noqa: E731
    return PlanarCompactSet(pred, lo, hi)


def in_projection(spec: DomainSpec, i: int, zps, m: int = FIBER_SAMPLES) -> np.ndarray:
    """Sampled membership of base points ``zps`` (shape ``(k, n-1)``) in pi^i(spec)."""
    zps = np.atleast_2d(np.asarray(zps, dtype=complex))
    lo, hi = _fiber_box(spec.bound, i)
    xs = np.linspace(lo.real, hi.real, m)
    ys = np.linspace(lo.imag, hi.imag, m)
    grid = (xs[None, :] + 1j * ys[:, None]).ravel()
    out = np.zeros(len(zps), dtype=bool)
    chunk = max(1, 65536 // grid.size)
    for s in range(0, len(zps), chunk):
        block = zps[s:s + chunk]
        pts = np.empty((len(block), grid.size, spec.dimension), dtype=complex)
        pts[..., :i - 1] = block[:, None, :i - 1]
        pts[..., i - 1] = grid[None, :]
        pts[..., i:] = block[:, None, i - 1:]
        out[s:s + chunk] = spec.contains_array(pts).any(axis=1)
    return out


def project_domain(spec: DomainSpec, i: int) -> DomainSpec:
    """pi^i(spec) as a DomainSpec over C^{n-1}, decided by fiber sampling."""
    if spec.dimension < 2:
        raise ValueError("projection needs n >= 2")

    def pred(pts):
        pts = np.asarray(pts, dtype=complex)
        flat = pts.reshape(-1, pts.shape[-1])
        return in_projection(spec, i, flat).reshape(pts.shape[:-1])

    return DomainSpec(spec.dimension - 1, pred, spec.bound.project(i), name=f"pi^{i}({spec.name})")


# -- constructors --------------------------------------------------------------

def _closed_bound(center, radius) -> Polydisc:
    # open bounding polydisc strictly containing the closed one
    return Polydisc(center, radius * (1 + 2.0 ** -30) + 1e-300)


def polydisc_domain(center, radius) -> DomainSpec:
    d = Polydisc(center, radius)
    return DomainSpec(d.dimension, d.contains_array, d, name=f"polydisc(r={d.radius})")


def closed_polydisc_set(center, radius) -> RemovableSetSpec:
    c = as_point(center)
    r = float(radius)
    cc = np.asarray(c)

    def pred(pts):
        return np.abs(np.asarray(pts) - cc).max(axis=-1) <= r

    return RemovableSetSpec(len(c), pred, _closed_bound(c, r), name=f"closed_polydisc(r={r})")


class HartogsFigure(NamedTuple):
    figure: DomainSpec
    removable: RemovableSetSpec
    slot: int

    @property
    def ambient(self) -> DomainSpec:
        """The unit polydisc, i.e. figure union removable."""
        return polydisc_domain((0j,) * self.figure.dimension, 1.0)


def hartogs_figure(q: Sequence[float], n: int) -> HartogsFigure:
    """Hartogs figure H(q) in the unit polydisc and its complement A.

    z is in H iff ``|z1| > q1`` or ``|zj| < qj`` for every j >= 2. A is
    ``{|z1| <= q1} x (unit polydisc minus {all |zj| < qj})``; slot 1 fibers of A are
    closed discs of radius q1.
    """
    if n < 2:
        raise ValueError("Hartogs figures need n >= 2")
    q = [float(x) for x in q]
    if len(q) != n:
        raise ValueError(f"need {n} radii, got {len(q)}")
    if not all(0 < x < 1 for x in q):
        raise ValueError(f"every q_j must lie in (0, 1), got {q}")
    qa = np.asarray(q)
    unit = Polydisc((0j,) * n, 1.0)

    def inner(pts):
        return (np.abs(pts[..., 1:]) < qa[1:]).all(axis=-1)

    def in_h(pts):
        pts = np.asarray(pts, dtype=complex)
        return unit.contains_array(pts) & ((np.abs(pts[..., 0]) > qa[0]) | inner(pts))

    def in_a(pts):
        pts = np.asarray(pts, dtype=complex)
        return unit.contains_array(pts) & (np.abs(pts[..., 0]) <= qa[0]) & ~inner(pts)

    figure = DomainSpec(n, in_h, unit, name=f"H{tuple(q)}")
    removable = RemovableSetSpec(n, in_a, unit, name=f"complement of H{tuple(q)}")
    return HartogsFigure(figure, removable, 1)


# -- sampling checks -----------------------------------------------------------

def _box_samples(bound: Polydisc, count: int, seed: int, inflate: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = bound.dimension
    r = bound.radius * inflate
    u = rng.uniform(-r, r, size=(count, n)) + 1j * rng.uniform(-r, r, size=(count, n))
    return u + np.asarray(bound.center)


def check_subset(inner: DomainSpec, outer: DomainSpec, count: int = 4000, seed: int = 0):
    """Return a witness point of ``inner`` not in ``outer``, or None."""
    pts = _box_samples(inner.bound, count, seed)
    bad = inner.contains_array(pts) & ~outer.contains_array(pts)
    if np.any(bad):
        return tuple(complex(c) for c in pts[np.flatnonzero(bad)[0]])
    return None


def check_bounded(spec: DomainSpec, count: int = 4000, seed: int = 0):
    """Witness of a predicate member outside the bounding polydisc, or None."""
    pts = _box_samples(spec.bound, count, seed, inflate=1.5)
    bad = _call_pred(spec.predicate, pts) & ~spec.bound.contains_array(pts)
    if np.any(bad):
        return tuple(complex(c) for c in pts[np.flatnonzero(bad)[0]])
    return None


# -- lattice contours ----------------------------------------------------------

Edge = tuple  # ((a, b), (a2, b2)) integer lattice vertices

_TURN_ORDER = {  # incoming direction -> outgoing preference: left, straight, right
    (1, 0): [(0, 1), (1, 0), (0, -1)],
    (0, 1): [(-1, 0), (0, 1), (1, 0)],
    (-1, 0): [(0, -1), (-1, 0), (0, 1)],
    (0, -1): [(1, 0), (0, -1), (-1, 0)],
}


def trace_loops(edges) -> list:
    """Partition oriented unit lattice edges into closed loops.

    ``edges`` is an iterable of ``((a, b), (a', b'))`` with unit axis-aligned
    steps. Where two loops touch at a vertex, each incoming edge is paired with
    the outgoing edge turning left, so diagonal neighbours give separate loops.
    Returns lists of vertices (the closing vertex is not repeated).
    """
    edges = list(edges)
    out_edges = defaultdict(list)
    in_edges = defaultdict(list)
    seen = set()
    for u, v in edges:
        d = (v[0] - u[0], v[1] - u[1])
        if d not in _TURN_ORDER:
            raise ContourError(f"edge {u}->{v} is not a unit axis-aligned step")
        if (u, v) in seen:
            raise ContourError(f"duplicate edge {u}->{v}")
        seen.add((u, v))
        out_edges[u].append(v)
        in_edges[v].append(u)
    for vtx in sorted(set(out_edges) | set(in_edges)):
        if len(out_edges[vtx]) != len(in_edges[vtx]):
            raise ContourError(f"degree mismatch at lattice vertex {vtx}: "
                               f"in={len(in_edges[vtx])} out={len(out_edges[vtx])}")

    successor = {}
    for vtx, preds in in_edges.items():
        free = set(out_edges[vtx])
        for p in sorted(preds):
            d_in = (vtx[0] - p[0], vtx[1] - p[1])
            for d in _TURN_ORDER[d_in]:
                cand = (vtx[0] + d[0], vtx[1] + d[1])
                if cand in free:
                    free.discard(cand)
                    successor[(p, vtx)] = (vtx, cand)
                    break
            else:
                raise ContourError(f"no left/straight/right continuation at lattice vertex {vtx}")

    loops = []
    remaining = set(successor)
    for e in sorted(successor):
        if e not in remaining:
            continue
        loop = []
        cur = e
        while cur in remaining:
            remaining.discard(cur)
            loop.append(cur[0])
            cur = successor[cur]
        if cur != e:
            raise ContourError(f"edge walk from {e} did not close")
        loops.append(loop)
    return loops


@dataclass(frozen=True)
class PolygonalContour:
    """Oriented boundary of a union of closed lattice squares.

    ``cells`` holds the selected squares as integer indices relative to
    ``origin``; square (a, b) is ``[x0 + a h, x0 + (a+1) h] x [y0 + b h, ...]``.
    """

    h: float
    origin: complex
    cells: frozenset
    loops: tuple  # tuple of tuples of (start, end) complex segments
    areas: tuple

    @property
    def segments(self) -> list:
        return [s for loop in self.loops for s in loop]

    def segment_arrays(self):
        segs = self.segments
        return (np.array([s[0] for s in segs], dtype=complex),
                np.array([s[1] for s in segs], dtype=complex))

    @property
    def vertices(self) -> np.ndarray:
        return np.array([s[0] for s in self.segments], dtype=complex)

    @property
    def length(self) -> float:
        return sum(abs(b - a) for a, b in self.segments)

    def reversed(self) -> "PolygonalContour":
        loops = tuple(tuple((b, a) for a, b in reversed(loop)) for loop in self.loops)
        return PolygonalContour(self.h, self.origin, self.cells, loops, tuple(-a for a in self.areas))

    def cell_index(self, w):
        w = np.asarray(w, dtype=complex)
        a = np.floor((w.real - self.origin.real) / self.h).astype(np.int64)
        b = np.floor((w.imag - self.origin.imag) / self.h).astype(np.int64)
        return a, b

    def distance_to_boundary(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        s, e = self.segment_arrays()
        flat = w.reshape(-1, 1)
        d = e - s
        t = np.clip(((flat - s) * np.conj(d)).real / (np.abs(d) ** 2), 0.0, 1.0)
        dist = np.abs(flat - (s + t * d)).min(axis=1)
        return dist.reshape(w.shape)

    def contains_array(self, w, margin: float = 0.0) -> np.ndarray:
        """Strict membership in the open set P, optionally ``margin`` away from dP."""
        w = np.asarray(w, dtype=complex)
        a, b = self.cell_index(w)
        inside = np.fromiter((c in self.cells for c in zip(a.ravel().tolist(), b.ravel().tolist())),
                             dtype=bool, count=a.size).reshape(w.shape)
        return inside & (self.distance_to_boundary(w) > margin)

    def contains(self, w, margin: float = 0.0) -> bool:
        return bool(self.contains_array(np.asarray(w, dtype=complex), margin))

    def cell_centers(self) -> np.ndarray:
        cs = sorted(self.cells)
        return np.array([self.origin + complex((a + 0.5) * self.h, (b + 0.5) * self.h) for a, b in cs])

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "loops": [[[s[0].real, s[0].imag] for s in loop] for loop in self.loops],
        }


def _shoelace(vertices) -> float:
    area = 0.0
    k = len(vertices)
    for j in range(k):
        p, q = vertices[j], vertices[(j + 1) % k]
        area += p.real * q.imag - q.real * p.imag
    return 0.5 * area


def _sub_grid(origin, h, a0, a1, b0, b1, s=2):
    """Sample lattice with ``s`` steps per cell covering cells a0..a1-1 x b0..b1-1."""
    xs = origin.real + h * (np.arange(s * a0, s * a1 + 1) / s)
    ys = origin.imag + h * (np.arange(s * b0, s * b1 + 1) / s)
    return xs[:, None] + 1j * ys[None, :]


MAX_SUBGRID = 2048  # cap on samples per axis of the occupancy lattice


def contour_from_cells(cells, origin: complex, h: float) -> PolygonalContour:
    """Boundary of the union of the given closed squares."""
    edges = set()
    for a, b in cells:
        corner = [(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)]
        for k in range(4):
            u, v = corner[k], corner[(k + 1) % 4]
            if (v, u) in edges:
                edges.discard((v, u))
            else:
                edges.add((u, v))
    loops = []
    areas = []
    for vloop in trace_loops(edges):
        pts = [origin + complex(a * h, b * h) for a, b in vloop]
        segs = tuple((pts[j], pts[(j + 1) % len(pts)]) for j in range(len(pts)))
        loops.append(segs)
        areas.append(_shoelace(pts))
    return PolygonalContour(h, origin, frozenset(cells), tuple(loops), tuple(areas))


def build_lattice_contour(k: PlanarCompactSet, u: PlanarOpenSet, eps: float) -> PolygonalContour:
    """Polygonal contour around K inside U for separation ``eps``.

    Raises SeparationError if some sampled eps-disc about K leaves U or a
    selected square leaves U, EmptyFiberError if K has no sampled points.
    """
    eps = float(eps)
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be positive, got {eps!r}")
    h = eps * math.sqrt(2) / 2
    origin = k.lo
    na = max(1, math.ceil((k.hi.real - k.lo.real) / h))
    nb = max(1, math.ceil((k.hi.imag - k.lo.imag) / h))
    # one extra cell each side so K points on the box edge register in both neighbours
    a0, a1, b0, b1 = -1, na + 1, -1, nb + 1
    ncx, ncy = a1 - a0, b1 - b0
    # sample at least as finely as the fiber grid, so small K are not stepped over
    pitch = min(k.hi.real - k.lo.real, k.hi.imag - k.lo.imag) / (FIBER_SAMPLES - 1)
    s = 2 if pitch <= 0 else max(2, math.ceil(h / pitch))
    s = max(2, min(s, MAX_SUBGRID // max(ncx, ncy)))
    grid = _sub_grid(origin, h, a0, a1, b0, b1, s)
    member = k.contains_array(grid)
    occupied = np.zeros((ncx, ncy), dtype=bool)
    for dx in range(s + 1):
        for dy in range(s + 1):
            occupied |= member[dx:dx + s * ncx:s, dy:dy + s * ncy:s]
    fs = k.samples()
    ca = np.floor((fs.real - origin.real) / h).astype(np.int64) - a0
    cb = np.floor((fs.imag - origin.imag) / h).astype(np.int64) - b0
    occupied[np.clip(ca, 0, ncx - 1), np.clip(cb, 0, ncy - 1)] = True

    kpts = np.concatenate([grid[member], fs])
    if kpts.size == 0:
        raise EmptyFiberError("compact set has no sampled points on its bounding box")
    ring = np.exp(2j * np.pi * np.arange(SEPARATION_ANGLES) / SEPARATION_ANGLES)
    disc_pts = kpts[:, None] + eps * ring[None, :]
    ok = u.contains_array(disc_pts) & u.contains_array(kpts)[:, None]
    if not ok.all():
        bad = np.argwhere(~ok)[0]
        raise SeparationError(
            f"eps={eps} separation fails: disc about {complex(kpts[bad[0]])} "
            f"reaches {complex(disc_pts[tuple(bad)])} outside U")

    padded = np.zeros((ncx + 2, ncy + 2), dtype=bool)
    for dx in range(3):
        for dy in range(3):
            padded[dx:dx + ncx, dy:dy + ncy] |= occupied
    sel = np.argwhere(padded)
    cells = [(int(i) + a0 - 1, int(j) + b0 - 1) for i, j in sel]

    offs = np.array([0.0, 0.5, 1.0])
    sq = np.array([origin + complex((a + x) * h, (b + y) * h) for a, b in cells for x in offs for y in offs])
    inside_u = u.contains_array(sq)
    if not inside_u.all():
        w = complex(sq[np.flatnonzero(~inside_u)[0]])
        raise SeparationError(f"eps={eps}: selected lattice square reaches {w} outside U")
    return contour_from_cells(cells, origin, h)
