"""Fiberwise extension integrals, stable neighbourhoods, gluing and chains.

For a base point z' in pi^i(A) a lattice contour dP(z') is built around the
planar fiber of A, and a sup-norm radius rho is found (by sampled bisection)
such that every nearby fiber of A stays inside P(z') while the closure of
P(z') stays inside the fiber of Omega. On the resulting set

    U^(z') = {z : |pi^i(z) - z'| < rho, z_i in P(z')}

the extension is the Cauchy integral over dP(z') of f with z_i replaced by the
integration variable. Verification walks a straight chain of base points from
z' to the boundary of pi^i(A), checks that consecutive fiber integrals agree
on overlaps, and that the last one agrees with f itself just outside pi^i(A).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .complexcore import (Point, as_point, insert_component, insert_component_array,
                          project_skip, sup_distance)
from .errors import (ChainError, EmptyFiberError, HartogsError, HypothesisViolation,
                     NeighborhoodError, OutsideDomainError, PreconditionError, ProximityError,
                     ToleranceError)
from .geometry import (DomainSpec, PolygonalContour, RemovableSetSpec, build_lattice_contour,
                       fiber, in_projection, project_domain)
from .quadrature import QuadratureConfig, cauchy_compact

PERTURBATION_ANGLES = 8
MAX_RHO_HALVINGS = 20
MAX_CHAIN_REFINEMENTS = 10


@dataclass(frozen=True)
class Tolerances:
    quadrature: float = 1e-10
    cross_check: float = 1e-8
    coincidence: float = 1e-7
    grid: float = 1e-6


@dataclass(frozen=True)
class FiberContour:
    base: Point
    rho: float
    contour: PolygonalContour
    slot: int
    eps: float

    @property
    def margin(self) -> float:
        return self.contour.h / 10

    def covers(self, z) -> bool:
        """True iff z lies in U^(base) away from the contour exclusion zone."""
        z = as_point(z)
        if sup_distance(project_skip(self.slot, z), self.base) >= self.rho:
            return False
        return self.contour.contains(z[self.slot - 1], margin=self.margin)


@dataclass(frozen=True)
class Provenance:
    kind: str  # "passthrough" | "fiber_integral" | "glued_chain"
    base: Optional[Point] = None
    chain_length: Optional[int] = None

    @property
    def code(self) -> str:
        if self.kind == "glued_chain":
            return f"glued_chain:{self.chain_length}"
        return self.kind


PASSTHROUGH = Provenance("passthrough")


@dataclass(frozen=True)
class ExtensionReport:
    point: Point
    value: complex
    error_estimate: float
    provenance: Provenance


def _require_holomorphic(f):
    if getattr(f, "non_holomorphic", False):
        raise HypothesisViolation(
            f"function {getattr(f, 'text', f)!r} uses conj() and is not holomorphic; extension refused",
            stage="hypothesis")


# -- stable neighbourhoods ------------------------------------------------------

def perturbations(z0p: Sequence[complex], rho: float) -> list:
    """Points at sup-distance ``rho`` from z0p: 8 directions in each complex coordinate."""
    out = []
    ring = [complex(math.cos(2 * math.pi * k / PERTURBATION_ANGLES),
                    math.sin(2 * math.pi * k / PERTURBATION_ANGLES)) for k in range(PERTURBATION_ANGLES)]
    for j in range(len(z0p)):
        for u in ring:
            p = list(z0p)
            p[j] = p[j] + rho * u
            out.append(tuple(p))
    return out


def _contour_probe_points(contour: PolygonalContour) -> np.ndarray:
    s, e = contour.segment_arrays()
    return np.concatenate([s, 0.5 * (s + e)])


def inclusion_failure(omega: DomainSpec, a: RemovableSetSpec, i: int, contour: PolygonalContour, zpp):
    """Check fiber(A, zpp) inside P and closure(P) inside fiber(Omega, zpp) on samples.

    Returns None, or ``(description, witness)`` for the first failure.
    """
    ksamples = fiber(a, i, zpp).samples()
    if ksamples.size:
        inside = contour.contains_array(ksamples)
        if not inside.all():
            w = complex(ksamples[np.flatnonzero(~inside)[0]])
            return "fiber of A leaves P", insert_component(i, zpp, w)
    probes = _contour_probe_points(contour)
    in_omega = omega.contains_array(insert_component_array(i, zpp, probes))
    if not in_omega.all():
        w = complex(probes[np.flatnonzero(~in_omega)[0]])
        return "closure of P leaves the fiber of Omega", insert_component(i, zpp, w)
    return None


def stable_neighborhood(omega: DomainSpec, a: RemovableSetSpec, i: int, z0p, eps: float,
                        cfg: QuadratureConfig | None = None) -> FiberContour:
    """Contour around the fiber at z0p plus a radius on which it stays valid."""
    z0p = as_point(z0p)
    if len(z0p) != a.dimension - 1:
        raise ValueError(f"base point must lie in C^{a.dimension - 1}")
    k = fiber(a, i, z0p)
    if k.is_empty():
        raise EmptyFiberError(f"base point {z0p} is not in pi^{i}(A): empty fiber")
    contour = build_lattice_contour(k, omega.fiber(i, z0p), eps)
    rho = eps / 2
    failure = None
    for _ in range(MAX_RHO_HALVINGS + 1):
        for zpp in [z0p] + perturbations(z0p, rho):
            failure = inclusion_failure(omega, a, i, contour, zpp)
            if failure:
                break
        else:
            return FiberContour(z0p, rho, contour, i, float(eps))
        rho /= 2
    what, witness = failure
    raise NeighborhoodError(f"no stable radius at {z0p} after {MAX_RHO_HALVINGS} halvings: "
                            f"{what} at {witness}")


# -- fiber integrals ------------------------------------------------------------

def fiber_integrand(f: Callable, i: int, zp) -> Callable[[np.ndarray], np.ndarray]:
    zp = np.asarray(as_point(zp), dtype=complex)

    def g(zeta):
        return f(insert_component_array(i, zp, zeta))

    return g


def fiber_extension(f, fc: FiberContour, z, cfg: QuadratureConfig | None = None) -> ExtensionReport:
    """Cauchy integral over the fiber contour, evaluated at z in U^(fc.base)."""
    _require_holomorphic(f)
    z = as_point(z)
    if len(z) != len(fc.base) + 1:
        raise ValueError(f"point must lie in C^{len(fc.base) + 1}")
    zp = project_skip(fc.slot, z)
    w = z[fc.slot - 1]
    d = sup_distance(zp, fc.base)
    if d >= fc.rho:
        raise PreconditionError(f"{z} is outside U^({fc.base}): base distance {d:.3g} >= rho {fc.rho:.3g}")
    if not fc.contour.contains(w, margin=fc.margin):
        raise ProximityError(f"slot-{fc.slot} coordinate {w} is not inside P({fc.base}) "
                             f"at safe distance {fc.margin:.3g}")
    res = cauchy_compact(fiber_integrand(f, fc.slot, zp), fc.contour, w, cfg)
    return ExtensionReport(z, res.value, res.error_estimate, Provenance("fiber_integral", base=fc.base))


def glue_check(f, fc1: FiberContour, fc2: FiberContour, samples, cfg: QuadratureConfig | None = None) -> float:
    """Max difference of the two fiber extensions over samples of their overlap."""
    if fc1.slot != fc2.slot:
        raise ValueError("fiber contours use different slots")
    d = sup_distance(fc1.base, fc2.base)
    if d >= fc1.rho + fc2.rho:
        raise PreconditionError(f"empty overlap: bases {fc1.base} and {fc2.base} are {d:.3g} apart, "
                                f"radii sum to {fc1.rho + fc2.rho:.3g}")
    worst = 0.0
    for z in samples:
        v1 = fiber_extension(f, fc1, z, cfg).value
        v2 = fiber_extension(f, fc2, z, cfg).value
        worst = max(worst, abs(v1 - v2))
    return worst


def boundary_coincidence_check(f, omega: DomainSpec, a: RemovableSetSpec, i: int, zbp,
                               fc: FiberContour, samples, cfg: QuadratureConfig | None = None) -> float:
    """Max of |f - fiber extension| over samples whose base lies outside pi^i(A)."""
    zbp = as_point(zbp)
    if sup_distance(zbp, fc.base) >= fc.rho:
        raise PreconditionError(f"boundary point {zbp} is not in U({fc.base})")
    worst = 0.0
    for z in samples:
        z = as_point(z)
        zp = project_skip(i, z)
        if in_projection(a, i, [zp])[0]:
            raise PreconditionError(f"sample {z} has base {zp} inside pi^{i}(A)")
        if not omega.contains(z):
            raise OutsideDomainError(f"sample {z} is outside Omega")
        v = fiber_extension(f, fc, z, cfg).value
        worst = max(worst, abs(complex(f(z)) - v))
    return worst


# -- sampling -------------------------------------------------------------------

def _disc_points(rng, center, radius, size):
    r = radius * np.sqrt(rng.uniform(0, 1, size))
    t = rng.uniform(0, 2 * np.pi, size)
    return center + r * np.exp(1j * t)


def _contour_points(rng, contour: PolygonalContour, size):
    cells = sorted(contour.cells)
    idx = rng.integers(0, len(cells), size)
    off = rng.uniform(0, 1, (size, 2))
    return np.array([contour.origin + complex((cells[k][0] + ox) * contour.h, (cells[k][1] + oy) * contour.h)
                     for k, (ox, oy) in zip(idx, off)])


def _sample_fibers(rng, contours, size):
    """Points inside every contour, clear of every exclusion zone."""
    out = []
    for _ in range(50):
        cand = _contour_points(rng, contours[0], 4 * size)
        ok = np.ones(cand.shape, dtype=bool)
        for c in contours:
            ok &= c.contains_array(cand, margin=c.h / 10)
        out.extend(cand[ok].tolist())
        if len(out) >= size:
            return out[:size]
    raise PreconditionError("could not sample the intersection of the fiber contours")


def overlap_samples(fc1: FiberContour, fc2: FiberContour, count: int, seed: int = 0) -> list:
    """Deterministic sample points of U^(fc1.base) intersected with U^(fc2.base)."""
    rng = np.random.default_rng(seed)
    shrink = 0.95
    bases = []
    for _ in range(200):
        cand = np.stack([_disc_points(rng, c, shrink * fc1.rho, 8 * count) for c in fc1.base], axis=-1)
        d2 = np.abs(cand - np.asarray(fc2.base)).max(axis=-1)
        bases.extend(cand[d2 < shrink * fc2.rho].tolist())
        if len(bases) >= count:
            break
    if len(bases) < count:
        raise PreconditionError(f"empty overlap between U({fc1.base}) and U({fc2.base})")
    ws = _sample_fibers(rng, [fc1.contour, fc2.contour], count)
    return [insert_component(fc1.slot, tuple(b), w) for b, w in zip(bases[:count], ws)]


def boundary_samples(a: RemovableSetSpec, fc: FiberContour, count: int, seed: int = 0) -> list:
    """Sample points of U^(fc.base) whose base lies outside pi^i(A)."""
    rng = np.random.default_rng(seed)
    bases = []
    for _ in range(200):
        cand = np.stack([_disc_points(rng, c, 0.95 * fc.rho, 8 * count) for c in fc.base], axis=-1)
        outside = ~in_projection(a, fc.slot, cand)
        bases.extend(cand[outside].tolist())
        if len(bases) >= count:
            break
    if len(bases) < count:
        raise PreconditionError(f"U({fc.base}) minus pi^{fc.slot}(A) has no sampled points")
    ws = _sample_fibers(rng, [fc.contour], count)
    return [insert_component(fc.slot, tuple(b), w) for b, w in zip(bases[:count], ws)]


# -- chains ---------------------------------------------------------------------

def _grid_candidates(bound, per_axis):
    d = bound.dimension
    axes = []
    for c in bound.center:
        axes.append(np.linspace(c.real - bound.radius, c.real + bound.radius, per_axis))
        axes.append(np.linspace(c.imag - bound.radius, c.imag + bound.radius, per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    return np.stack([flat[2 * j] + 1j * flat[2 * j + 1] for j in range(d)], axis=-1)


def nearest_exterior(start, omega_proj: DomainSpec, a_proj: DomainSpec, budget: int = 4096):
    """Nearest grid sample of omega_proj outside a_proj, or None."""
    start = np.asarray(as_point(start), dtype=complex)
    d = omega_proj.dimension
    per_axis = max(3, int(round(budget ** (1 / (2 * d)))))
    cand = _grid_candidates(omega_proj.bound, per_axis)
    dist = np.sqrt((np.abs(cand - start) ** 2).sum(axis=-1))
    order = np.argsort(dist, kind="stable")
    cand = cand[order]
    for s in range(0, len(cand), 256):
        block = cand[s:s + 256]
        ok = omega_proj.contains_array(block)
        if ok.any():
            ok[ok] &= ~a_proj.contains_array(block[ok])
        if ok.any():
            return tuple(complex(c) for c in block[np.flatnonzero(ok)[0]])
    return None


def boundary_crossing(start, target, a_proj: DomainSpec, step: float):
    """Last point of pi^i(A) on the segment start -> target, to within step/100."""
    p0 = np.asarray(start, dtype=complex)
    v = np.asarray(target, dtype=complex) - p0
    length = float(np.sqrt((np.abs(v) ** 2).sum()))
    nmarch = max(2, math.ceil(length / (step / 4)))
    ts = np.linspace(0.0, 1.0, nmarch + 1)
    inside = a_proj.contains_array(p0 + ts[:, None] * v)
    outs = np.flatnonzero(~inside)
    if outs.size == 0:
        raise ChainError(f"segment from {tuple(start)} to exterior sample {tuple(target)} never leaves pi^i(A)")
    k = int(outs[0])
    t_in, t_out = ts[k - 1], ts[k]
    while (t_out - t_in) * length > step / 100:
        t_mid = 0.5 * (t_in + t_out)
        if a_proj.contains_array((p0 + t_mid * v)[None, :])[0]:
            t_in = t_mid
        else:
            t_out = t_mid
    return tuple(complex(c) for c in p0 + t_in * v)


def path_chain(start, omega_proj: DomainSpec, a_proj: DomainSpec, step: float,
               radius_of: Callable[[Point], float] | None = None) -> list:
    """Base points from ``start`` to a boundary point of a_proj, at most ``step`` apart.

    With ``radius_of`` (base point -> neighbourhood radius) the spacing is halved
    until consecutive neighbourhoods overlap.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    start = as_point(start)
    if not a_proj.contains_array(np.asarray(start)[None, :])[0]:
        raise PreconditionError(f"chain start {start} is not in {a_proj.name or 'the projection of A'}")
    target = nearest_exterior(start, omega_proj, a_proj)
    if target is None:
        raise HypothesisViolation("projection of Omega minus projection of A has no sampled points; "
                                  "the extension hypothesis requires it to be nonempty")
    zb = boundary_crossing(start, target, a_proj, step)
    p0 = np.asarray(start)
    v = np.asarray(zb) - p0
    length = float(np.sqrt((np.abs(v) ** 2).sum()))
    if length <= step / 100:
        return [start]
    s = step
    for _ in range(MAX_CHAIN_REFINEMENTS + 1):
        k = math.ceil(length / s)
        chain = [start] + [tuple(complex(c) for c in p0 + v * (j / k)) for j in range(1, k)] + [zb]
        if radius_of is None:
            return chain
        radii = [radius_of(p) for p in chain]
        if all(sup_distance(chain[j], chain[j + 1]) < radii[j] + radii[j + 1] for j in range(k)):
            return chain
        s /= 2
    raise ChainError(f"chain from {start} to {zb} still has non-overlapping neighbourhoods "
                     f"after {MAX_CHAIN_REFINEMENTS} refinements")


# -- the Hartogs engine ---------------------------------------------------------

@dataclass(frozen=True)
class ChainVerification:
    chain: tuple
    glue: tuple
    boundary: float


def _key(zp, quantum=1e-12):
    return tuple((round(c.real / quantum), round(c.imag / quantum)) for c in zp)


@dataclass
class Extender:
    """Evaluates the extension of f from Omega minus A to Omega, slot ``i``."""

    f: Callable
    omega: DomainSpec
    a: RemovableSetSpec
    i: int
    eps: float = 0.4
    step: float = 0.1
    cfg: QuadratureConfig = field(default_factory=QuadratureConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    verify: bool = True
    verify_samples: int = 6
    seed: int = 0

    def __post_init__(self):
        n = self.omega.dimension
        if n < 2 or self.a.dimension < 2:
            raise HypothesisViolation(
                f"extension across a removable set needs n >= 2 (got n={n}); "
                "in one variable the Cauchy integral need not reproduce f", stage="hypothesis")
        if self.a.dimension != n:
            raise ValueError("Omega and A have different dimensions")
        if not 1 <= self.i <= n:
            raise IndexError(f"slot {self.i} out of range 1..{n}")
        _require_holomorphic(self.f)
        self.omega_proj = project_domain(self.omega, self.i)
        self.a_proj = project_domain(self.a, self.i)
        self._lock = threading.Lock()
        self._fibers = {}
        self._chains = {}

    def _stage(self, stage, fn, *args):
        try:
            return fn(*args)
        except HartogsError as exc:
            raise exc.with_stage(stage)

    def neighborhood(self, zp) -> FiberContour:
        key = _key(zp)
        with self._lock:
            hit = self._fibers.get(key)
        if hit is not None:
            return hit
        fc = self._stage("neighborhood", stable_neighborhood, self.omega, self.a, self.i, zp, self.eps, self.cfg)
        with self._lock:
            return self._fibers.setdefault(key, fc)

    def verify_chain(self, zp) -> ChainVerification:
        """Glue checks along a chain from zp to the boundary, then boundary coincidence."""
        key = _key(zp)
        with self._lock:
            hit = self._chains.get(key)
        if hit is not None:
            return hit
        chain = self._stage("chain", path_chain, zp, self.omega_proj, self.a_proj, self.step,
                            lambda p: self.neighborhood(p).rho)
        fcs = [self.neighborhood(p) for p in chain]
        tol = self.tolerances.cross_check
        glue = []
        for j in range(len(fcs) - 1):
            samples = self._stage("glue", overlap_samples, fcs[j], fcs[j + 1], self.verify_samples, self.seed + j)
            worst = self._stage("glue", glue_check, self.f, fcs[j], fcs[j + 1], samples, self.cfg)
            if worst > tol:
                raise ToleranceError(f"fiber extensions at {fcs[j].base} and {fcs[j + 1].base} differ by "
                                     f"{worst:.3g} > {tol:.3g}", value=worst, tolerance=tol,
                                     witness=fcs[j].base, stage="glue")
            glue.append(worst)
        end = fcs[-1]
        samples = self._stage("boundary", boundary_samples, self.a, end, self.verify_samples, self.seed)
        worst = self._stage("boundary", boundary_coincidence_check, self.f, self.omega, self.a, self.i,
                            end.base, end, samples, self.cfg)
        if worst > tol:
            raise ToleranceError(f"fiber extension at boundary point {end.base} differs from f by "
                                 f"{worst:.3g} > {tol:.3g}", value=worst, tolerance=tol,
                                 witness=end.base, stage="boundary")
        result = ChainVerification(tuple(chain), tuple(glue), worst)
        with self._lock:
            return self._chains.setdefault(key, result)

    def extend_at(self, z, verify: bool | None = None) -> ExtensionReport:
        verify = self.verify if verify is None else verify
        z = as_point(z)
        if len(z) != self.omega.dimension:
            raise ValueError(f"point must lie in C^{self.omega.dimension}")
        if not self.omega.contains(z):
            raise OutsideDomainError(f"{z} is not in Omega", stage="domain")
        zp = project_skip(self.i, z)
        w = z[self.i - 1]
        in_a = self.a.contains(z)
        if not in_a and not in_projection(self.a, self.i, [zp])[0]:
            return ExtensionReport(z, complex(self.f(z)), 0.0, PASSTHROUGH)
        fc = self.neighborhood(zp)
        if not fc.contour.contains(w, margin=fc.margin):
            if in_a:
                raise ProximityError(f"{z} lies in A but not safely inside P({zp})", stage="fiber_integral")
            return ExtensionReport(z, complex(self.f(z)), 0.0, PASSTHROUGH)
        rep = self._stage("fiber_integral", fiber_extension, self.f, fc, z, self.cfg)
        prov = rep.provenance
        if verify:
            ver = self.verify_chain(zp)
            prov = Provenance("glued_chain", base=fc.base, chain_length=len(ver.chain))
        if not in_a:
            direct = complex(self.f(z))
            dev = abs(rep.value - direct)
            if dev > self.tolerances.coincidence:
                raise ToleranceError(f"extension differs from f by {dev:.3g} at {z} in Omega minus A",
                                     value=dev, tolerance=self.tolerances.coincidence, witness=z,
                                     stage="coincidence")
        return ExtensionReport(z, rep.value, rep.error_estimate, prov)


def extend_at(f, omega: DomainSpec, a: RemovableSetSpec, i: int, z, eps: float = 0.4, step: float = 0.1,
              cfg: QuadratureConfig | None = None, verify: bool = True,
              tolerances: Tolerances | None = None) -> ExtensionReport:
    """One-off evaluation of the extension at z; see :class:`Extender`."""
    ext = Extender(f, omega, a, i, eps=eps, step=step, cfg=cfg or QuadratureConfig(),
                   tolerances=tolerances or Tolerances(), verify=verify)
    return ext.extend_at(z)
