"""Points of C^n, polydiscs and the two projection maps.

Scalars are plain Python ``complex``. A point is a tuple of complex numbers;
batches of points are numpy arrays of shape ``(..., n)``. Indices are 1-based,
matching the z1..zn naming used in expressions.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Point = tuple  # tuple[complex, ...]


def as_complex(value) -> complex:
    """Coerce a number or ``(re, im)`` pair to a finite complex."""
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError(f"expected (re, im) pair, got {value!r}")
        value = complex(float(value[0]), float(value[1]))
    c = complex(value)
    if not cmath.isfinite(c):
        raise ValueError(f"non-finite complex value {c!r}")
    return c


def as_point(coords: Iterable) -> Point:
    if isinstance(coords, (int, float, complex)):
        coords = (coords,)
    point = tuple(as_complex(c) for c in coords)
    if not point:
        raise ValueError("a point needs at least one coordinate")
    return point


def _check_index(i: int, n: int) -> int:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= n:
        raise IndexError(f"index {i!r} out of range 1..{n}")
    return int(i)


def project_skip(i: int, z: Sequence[complex]) -> Point:
    """Drop the i-th coordinate of ``z``."""
    n = len(z)
    if n < 2:
        raise ValueError("cannot skip a coordinate of a point in C^1")
    i = _check_index(i, n)
    return tuple(z[:i - 1]) + tuple(z[i:])


def project_component(i: int, z: Sequence[complex]) -> complex:
    i = _check_index(i, len(z))
    return z[i - 1]


def insert_component(i: int, zp: Sequence[complex], w: complex) -> Point:
    """Inverse of the pair (project_skip, project_component)."""
    i = _check_index(i, len(zp) + 1)
    return tuple(zp[:i - 1]) + (w,) + tuple(zp[i - 1:])


def insert_component_array(i: int, zp, w) -> np.ndarray:
    """Vectorised insertion: ``w`` of any shape, ``zp`` a single point.

    Returns an array of shape ``w.shape + (n,)``.
    """
    w = np.asarray(w, dtype=complex)
    zp = np.asarray(zp, dtype=complex).reshape(-1)
    n = zp.size + 1
    i = _check_index(i, n)
    out = np.empty(w.shape + (n,), dtype=complex)
    out[..., :i - 1] = zp[:i - 1]
    out[..., i - 1] = w
    out[..., i:] = zp[i - 1:]
    return out


def sup_norm(z: Sequence[complex]) -> float:
    return max(abs(c) for c in z)


def sup_distance(z: Sequence[complex], w: Sequence[complex]) -> float:
    if len(z) != len(w):
        raise ValueError(f"dimension mismatch: {len(z)} vs {len(w)}")
    return max(abs(a - b) for a, b in zip(z, w))


@dataclass(frozen=True)
class Polydisc:
    """Open sup-norm ball ``{z : max_j |z_j - center_j| < radius}``."""

    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise ValueError(f"polydisc radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @property
    def dimension(self) -> int:
        return len(self.center)

    def contains(self, z) -> bool:
        return polydisc_contains(self, z)

    def contains_array(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"dimension mismatch: {pts.shape[-1]} vs {self.dimension}")
        d = np.abs(pts - np.asarray(self.center)).max(axis=-1)
        return d < self.radius

    def contains_closed(self, z) -> bool:
        """Membership in the closure (``<=``)."""
        return sup_distance(as_point(z), self.center) <= self.radius

    def project(self, i: int) -> "Polydisc":
        return Polydisc(project_skip(i, self.center), self.radius)


def polydisc_contains(d: Polydisc, z) -> bool:
    z = as_point(z)
    if len(z) != d.dimension:
        raise ValueError(f"dimension mismatch: point in C^{len(z)}, polydisc in C^{d.dimension}")
    return sup_distance(z, d.center) < d.radius
