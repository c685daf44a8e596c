"""Cauchy integrals over segments, rectangles and lattice contours.

All segments of one contour are integrated as a single batch: each level of
adaptive bisection is one vectorised evaluation of the integrand over every
piece that has not yet converged. A piece is accepted when Gauss-Legendre on
the whole piece and on its two halves differ by at most ``rtol * max(1, |I|)``.

Segments are integrated in a canonical direction (lexicographically smaller
endpoint first) and the sign applied afterwards, and partial sums use
``math.fsum``; reversing a contour therefore negates the result exactly.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, PreconditionError, ProximityError, SingularityError
from .geometry import PolygonalContour

PlanarFunction = Callable[[np.ndarray], np.ndarray]

SEGMENT_EXCLUSION = 1e-12


@dataclass(frozen=True)
class QuadratureConfig:
    gauss_order: int = 8
    max_subdivisions: int = 6
    rtol: float = 1e-10

    def __post_init__(self):
        if self.gauss_order < 2:
            raise ValueError("gauss_order must be >= 2")
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if self.max_subdivisions < 0:
            raise ValueError("max_subdivisions must be >= 0")


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    error_estimate: float
    nodes_used: int


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1], symmetrised so that x[k] == -x[-1-k] exactly."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def _as_array_function(f: PlanarFunction):
    def g(zeta):
        try:
            out = f(zeta)
        except SingularityError as exc:
            raise SingularityError(f"integrand singular at quadrature node {exc.point}: {exc}",
                                   point=exc.point) from exc
        except ZeroDivisionError as exc:
            raise SingularityError(f"integrand singular near quadrature nodes: {exc}") from exc
        out = np.broadcast_to(np.asarray(out, dtype=complex), zeta.shape)
        bad = ~np.isfinite(out)
        if bad.any():
            node = complex(zeta[bad][0])
            raise SingularityError(f"integrand not finite at quadrature node {node}", point=(node,))
        return out
    return g


def _seg_distance(z: complex, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    t = np.clip(((z - a) * np.conj(d)).real / (np.abs(d) ** 2), 0.0, 1.0)
    return np.abs(z - (a + t * d))


def _gauss_pieces(g, a, b, z, x, w):
    """Gauss rule for int f(t)/(t - z) dt over each piece [a_k, b_k]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = g(nodes) / (nodes - z)
    return half * (vals @ w)


def integrate_segments(f: PlanarFunction, starts, ends, z: complex, cfg: QuadratureConfig):
    """Adaptive integrals of f(t)/(t - z) dt over many oriented segments.

    Returns (values, error_estimates, nodes_used) with one entry per segment.
    """
    starts = np.asarray(starts, dtype=complex).ravel()
    ends = np.asarray(ends, dtype=complex).ravel()
    nseg = starts.size
    if nseg == 0:
        return np.zeros(0, complex), np.zeros(0), 0
    dist = _seg_distance(z, starts, ends)
    if np.any(dist <= SEGMENT_EXCLUSION):
        k = int(np.argmin(dist))
        raise ProximityError(f"evaluation point {z} lies on segment {complex(starts[k])} -> {complex(ends[k])}")

    flip = (starts.real > ends.real) | ((starts.real == ends.real) & (starts.imag > ends.imag))
    a = np.where(flip, ends, starts)
    b = np.where(flip, starts, ends)
    sign = np.where(flip, -1.0, 1.0)

    g = _as_array_function(f)
    x, w = gauss_legendre(cfg.gauss_order)
    owner = np.arange(nseg)
    coarse = _gauss_pieces(g, a, b, z, x, w)
    nodes = nseg * cfg.gauss_order
    accepted = [[] for _ in range(nseg)]
    errors = np.zeros(nseg)
    depth = 0
    while owner.size:
        m = 0.5 * (a + b)
        both = _gauss_pieces(g, np.concatenate([a, m]), np.concatenate([m, b]), z, x, w)
        left, right = both[:owner.size], both[owner.size:]
        nodes += 2 * owner.size * cfg.gauss_order
        fine = left + right
        diff = np.abs(fine - coarse)
        done = (diff <= cfg.rtol * np.maximum(1.0, np.abs(fine))) | (depth >= cfg.max_subdivisions)
        for k in np.flatnonzero(done):
            accepted[owner[k]].append(complex(fine[k]))
            errors[owner[k]] += diff[k]
        keep = ~done
        if not keep.any():
            break
        owner = np.concatenate([owner[keep], owner[keep]])
        a, b = np.concatenate([a[keep], m[keep]]), np.concatenate([m[keep], b[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
        depth += 1
    values = np.array([_fsum_complex(v) for v in accepted]) * sign
    return values, errors, nodes


def integrate_cauchy_segment(f: PlanarFunction, seg, z: complex, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """Integral of f(t)/(t - z) dt along one oriented segment ``(start, end)``."""
    cfg = cfg or QuadratureConfig()
    values, errors, nodes = integrate_segments(f, [seg[0]], [seg[1]], complex(z), cfg)
    return IntegralResult(complex(values[0]), float(errors[0]), nodes)


def _cauchy_sum(f, starts, ends, z, cfg) -> IntegralResult:
    values, errors, nodes = integrate_segments(f, starts, ends, complex(z), cfg)
    scale = 1 / (2j * math.pi)
    total = _fsum_complex(values)
    err = math.fsum(errors) / (2 * math.pi)
    if not (cmath.isfinite(total) and math.isfinite(err)):
        raise EvaluationError(f"non-finite Cauchy integral at z={z}")
    return IntegralResult(total * scale, err, nodes)


def rectangle_sides(a: float, b: float, c: float, d: float):
    """Positively oriented sides of the rectangle (a, b) x (c, d)."""
    if not (a < b and c < d):
        raise ValueError(f"degenerate rectangle ({a}, {b}) x ({c}, {d})")
    p = [complex(a, c), complex(b, c), complex(b, d), complex(a, d)]
    return [(p[k], p[(k + 1) % 4]) for k in range(4)]


def cauchy_rectangle(f: PlanarFunction, rect: Sequence[float], z: complex,
                     cfg: QuadratureConfig | None = None) -> IntegralResult:
    """(1/2 pi i) times the integral of f(t)/(t - z) over the boundary of ``rect = (a, b, c, d)``."""
    cfg = cfg or QuadratureConfig()
    sides = rectangle_sides(*rect)
    starts = [s for s, _ in sides]
    ends = [e for _, e in sides]
    return _cauchy_sum(f, starts, ends, z, cfg)


def cauchy_compact(f: PlanarFunction, p: PolygonalContour, z: complex,
                   cfg: QuadratureConfig | None = None) -> IntegralResult:
    """(1/2 pi i) times the integral of f(t)/(t - z) over the lattice contour ``p``.

    ``z`` must keep a distance of more than h/10 from every contour edge.
    """
    cfg = cfg or QuadratureConfig()
    z = complex(z)
    if not cmath.isfinite(z):
        raise PreconditionError(f"non-finite evaluation point {z}")
    starts, ends = p.segment_arrays()
    dist = float(_seg_distance(z, starts, ends).min())
    if dist <= p.h / 10:
        raise ProximityError(f"z={z} is {dist:.3g} from the contour, inside the h/10 = {p.h / 10:.3g} exclusion zone")
    return _cauchy_sum(f, starts, ends, z, cfg)


def winding_number(p: PolygonalContour, z: complex, cfg: QuadratureConfig | None = None) -> complex:
    """Cauchy integral of the constant 1: 1 inside P, 0 outside its closure."""
    return cauchy_compact(_one, p, z, cfg).value


def _one(zeta):
    return np.ones_like(zeta)


def contour_agreement(f: PlanarFunction, p1: PolygonalContour, p2: PolygonalContour,
                      samples, cfg: QuadratureConfig | None = None) -> float:
    """Max over ``samples`` of the difference between the two contour integrals."""
    worst = 0.0
    for z in samples:
        d = abs(cauchy_compact(f, p1, z, cfg).value - cauchy_compact(f, p2, z, cfg).value)
        worst = max(worst, d)
    return worst
