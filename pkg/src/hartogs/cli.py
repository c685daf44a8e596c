"""Command line front end: ``hartogs {contour,extend,verify} --scene FILE``.

Exit codes: 0 all checks pass, 2 invalid scene, 3 precondition or hypothesis
failure, 4 tolerance violation, 5 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (HartogsError, PreconditionError, ProximityError, SeparationError,
                     ToleranceError)
from .expr import wirtinger_residual
from .extension import (Extender, fiber_extension, fiber_integrand, overlap_samples,
                        stable_neighborhood)
from .geometry import build_lattice_contour, fiber
from .quadrature import QuadratureConfig, contour_agreement, winding_number
from .scene import Scene, load_scene, representative_base

WINDING_TOL = 1e-9
WIRTINGER_TOL = 1e-6
REPORT_SAMPLES = 64

EXCLUDED_OUTSIDE = "excluded_outside"
EXCLUDED_CONTOUR = "excluded_contour"


def _cplx(z):
    return [float(z.real), float(z.imag)]


def _point_json(z):
    return [_cplx(c) for c in z]


def _parse_base(text: str, n: int):
    """Base point as comma separated complex literals, e.g. ``"0.7"`` or ``"0.1+0.2j, 0"``."""
    try:
        parts = [complex(p.strip().replace(" ", "").replace("i", "j")) for p in text.split(",")]
    except ValueError as exc:
        raise PreconditionError(f"cannot parse base point {text!r}: {exc}") from None
    if len(parts) != n - 1:
        raise PreconditionError(f"base point needs {n - 1} coordinates, got {len(parts)}")
    return tuple(parts)


def _thin(points: np.ndarray, count: int) -> np.ndarray:
    if points.size <= count:
        return points
    return points[np.linspace(0, points.size - 1, count).round().astype(int)]


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text: str):
    Path(path).write_text(text, encoding="utf-8")


# -- contour ---------------------------------------------------------------------

def winding_report(contour, k_samples, exterior) -> dict:
    inside = [abs(winding_number(contour, w) - 1) for w in k_samples]
    outside = [abs(winding_number(contour, w)) for w in exterior]

    def summary(devs, pts):
        if not devs:
            return {"count": 0, "max_deviation": None, "witness": None, "passed": True}
        k = int(np.argmax(devs))
        return {"count": len(devs), "max_deviation": float(devs[k]), "witness": _cplx(complex(pts[k])),
                "passed": bool(max(devs) <= WINDING_TOL)}

    return {"inside": summary(inside, k_samples), "outside": summary(outside, exterior)}


def _exterior_samples(contour, u, count):
    """Points of U well outside the closure of P."""
    lo, hi = u.lo, u.hi
    m = 24
    xs = np.linspace(lo.real, hi.real, m)
    ys = np.linspace(lo.imag, hi.imag, m)
    grid = (xs[None, :] + 1j * ys[:, None]).ravel()
    ok = u.contains_array(grid) & ~contour.contains_array(grid)
    ok &= contour.distance_to_boundary(grid) > contour.h / 10
    return _thin(grid[ok], count)


def cmd_contour(scene: Scene, base=None, out_path=None) -> tuple[dict, int]:
    base = base if base is not None else representative_base(scene.hole, scene.slot)
    if base is None:
        raise PreconditionError("could not find a base point in the projection of the hole", stage="contour")
    try:
        k = fiber(scene.hole, scene.slot, base)
        if k.is_empty():
            raise PreconditionError(f"base point {base} is not in pi^{scene.slot}(hole): empty fiber")
        u = scene.omega.fiber(scene.slot, base)
        contour = build_lattice_contour(k, u, scene.eps)
    except HartogsError as exc:
        raise exc.with_stage("contour")
    wind = winding_report(contour, _thin(k.samples(), REPORT_SAMPLES), _exterior_samples(contour, u, REPORT_SAMPLES))
    report = {"base": _point_json(base), "slot": scene.slot, "eps": scene.eps, "h": contour.h,
              "loops": len(contour.loops), "segments": len(contour.segments), "winding": wind,
              "passed": wind["inside"]["passed"] and wind["outside"]["passed"]}
    if out_path:
        _write(out_path, _dump(contour.to_json()))
    else:
        report["contour"] = contour.to_json()
    return report, 0 if report["passed"] else 4


# -- extend ----------------------------------------------------------------------

def _evaluate(ext: Extender, scene: Scene, z):
    if not scene.omega.contains(z):
        return None, EXCLUDED_OUTSIDE
    try:
        return ext.extend_at(z), None
    except ProximityError:
        return None, EXCLUDED_CONTOUR


def cmd_extend(scene: Scene, out_path=None, verify=True, tolerance=None, workers=1) -> tuple[dict, str, int]:
    """Evaluate the extension on the scene grid; returns (summary, csv text, exit code)."""
    ext = scene.extender(verify=verify)
    points = list(scene.grid_points())
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda z: _evaluate(ext, scene, z), points))
    else:
        results = [_evaluate(ext, scene, z) for z in points]

    tol = tolerance if tolerance is not None else scene.tolerances.grid
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{p}_z{j}" for j in range(1, scene.n + 1) for p in ("re", "im")]
                    + ["re_val", "im_val", "err_est", "provenance", "ref_dev"])
    prov = Counter()
    worst_dev, worst_at, worst_err = 0.0, None, 0.0
    for z, (rep, excluded) in zip(points, results):
        coords = [repr(x) for c in z for x in (c.real, c.imag)]
        if rep is None:
            prov[excluded] += 1
            writer.writerow(coords + ["", "", "", excluded, ""])
            continue
        prov[rep.provenance.kind] += 1
        dev = ""
        if scene.reference is not None:
            d = abs(rep.value - scene.reference(z))
            dev = repr(d)
            if worst_at is None or d > worst_dev:
                worst_dev, worst_at = d, z
        worst_err = max(worst_err, rep.error_estimate)
        writer.writerow(coords + [repr(rep.value.real), repr(rep.value.imag), repr(rep.error_estimate),
                                  rep.provenance.code, dev])
    text = buf.getvalue()
    if out_path:
        _write(out_path, text)
    passed = scene.reference is None or worst_dev <= tol
    summary = {"points": len(points), "evaluated": len(points) - prov[EXCLUDED_OUTSIDE] - prov[EXCLUDED_CONTOUR],
               "counts": dict(sorted(prov.items())), "max_error_estimate": worst_err,
               "max_ref_dev": worst_dev if scene.reference is not None else None,
               "max_ref_dev_at": _point_json(worst_at) if worst_at is not None else None,
               "tolerance": tol, "verified_chains": verify, "passed": passed}
    return summary, text, 0 if passed else 4


# -- verify ----------------------------------------------------------------------

class _Suite:
    def __init__(self, names):
        self.order = names
        self.results = {name: {"status": "skipped"} for name in names}
        self.aborted = None

    def record(self, name, value, tol, witness=None, **extra):
        ok = bool(value <= tol)
        self.results[name] = {"status": "pass" if ok else "fail", "worst": value, "tolerance": tol,
                              "witness": witness, **extra}
        return ok

    def error(self, name, exc):
        self.results[name] = {"status": "error", "stage": exc.stage, "message": str(exc),
                              "exit_code": exc.exit_code}
        self.aborted = exc

    def exit_code(self):
        if self.aborted is not None:
            return self.aborted.exit_code
        statuses = [r["status"] for r in self.results.values()]
        return 4 if "fail" in statuses else 0

    def as_json(self):
        return {"properties": [{"name": k, **self.results[k]} for k in self.order],
                "passed": self.exit_code() == 0}


VERIFY_PROPERTIES = ("dimension", "input_wirtinger", "separation", "winding", "contour_agreement",
                     "stable_neighborhood", "glue", "boundary_coincidence", "coincidence",
                     "extension_wirtinger", "reference")


def _function_samples(scene: Scene, count, seed=0):
    """Points of omega minus the hole where f can be evaluated."""
    rng = np.random.default_rng(seed)
    b = scene.omega.bound
    given = scene.figure
    out = []
    for _ in range(100):
        pts = np.stack([c + b.radius * rng.uniform(-1, 1, 4 * count) + 1j * b.radius * rng.uniform(-1, 1, 4 * count)
                        for c in b.center], axis=-1)
        ok = scene.omega.contains_array(pts) & ~scene.hole.contains_array(pts)
        if given is not None:
            ok &= given.contains_array(pts)
        out.extend(tuple(complex(c) for c in p) for p in pts[ok])
        if len(out) >= count:
            break
    return out[:count]


def _max_wirtinger(fn, points, n):
    worst, at = 0.0, None
    for z in points:
        try:
            r = max(wirtinger_residual(fn, z, j) for j in range(1, n + 1))
        except (ArithmeticError, HartogsError):
            continue
        if at is None or r > worst:
            worst, at = r, z
    return worst, at


def cmd_verify(scene: Scene, tolerance=None, verify=True) -> tuple[dict, int]:
    suite = _Suite(VERIFY_PROPERTIES)
    tol = scene.tolerances
    if tolerance is not None:
        tol = replace(tol, grid=tolerance)
    cfg = QuadratureConfig(rtol=tol.quadrature)
    count = max(scene.verify_samples, 10)

    try:
        if scene.n < 2:
            suite.results["dimension"] = {"status": "fail", "worst": scene.n, "tolerance": 2,
                                          "message": "Hartogs extension needs n >= 2"}
            suite.aborted = PreconditionError("n >= 2 hypothesis violated", stage="dimension")
            return {"scene": scene.source, **suite.as_json()}, 3
        suite.results["dimension"] = {"status": "pass", "worst": scene.n, "tolerance": 2}

        pts = _function_samples(scene, 20)
        worst, at = _max_wirtinger(scene.function, pts, scene.n)
        if not suite.record("input_wirtinger", worst, WIRTINGER_TOL, _point_json(at) if at else None):
            suite.aborted = PreconditionError(f"input function fails the Wirtinger check (residual {worst:.3g})",
                                              stage="input_wirtinger")
            return {"scene": scene.source, **suite.as_json()}, 3

        base = representative_base(scene.hole, scene.slot)
        if base is None:
            raise PreconditionError("projection of the hole has no sampled points", stage="separation")
        k = fiber(scene.hole, scene.slot, base)
        u = scene.omega.fiber(scene.slot, base)
        try:
            contour = build_lattice_contour(k, u, scene.eps)
            half = build_lattice_contour(k, u, scene.eps / 2)
        except SeparationError as exc:
            suite.error("separation", exc.with_stage("separation"))
            return {"scene": scene.source, **suite.as_json()}, suite.exit_code()
        suite.results["separation"] = {"status": "pass", "eps": scene.eps, "h": contour.h}

        wind = winding_report(contour, _thin(k.samples(), REPORT_SAMPLES),
                              _exterior_samples(contour, u, REPORT_SAMPLES))
        wdev = max(wind["inside"]["max_deviation"] or 0.0, wind["outside"]["max_deviation"] or 0.0)
        suite.record("winding", wdev, WINDING_TOL, detail=wind)

        g = fiber_integrand(scene.function, scene.slot, base)
        cells = half.cell_centers()
        ok = contour.contains_array(cells, margin=contour.h / 10) & half.contains_array(cells, margin=half.h / 10)
        ok &= ~k.contains_array(cells)
        agree_pts = _thin(cells[ok], 20)
        if agree_pts.size:
            suite.record("contour_agreement", contour_agreement(g, contour, half, agree_pts, cfg),
                         tol.cross_check, samples=int(agree_pts.size))

        fc = stable_neighborhood(scene.omega, scene.hole, scene.slot, base, scene.eps, cfg)
        suite.results["stable_neighborhood"] = {"status": "pass", "rho": fc.rho, "base": _point_json(base)}

        ext = Extender(scene.function, scene.omega, scene.hole, scene.slot, eps=scene.eps, step=scene.step,
                       cfg=cfg, tolerances=tol, verify=verify, verify_samples=count)
        if verify:
            try:
                ver = ext.verify_chain(base)
            except ToleranceError as exc:
                name = "glue" if exc.stage == "glue" else "boundary_coincidence"
                suite.record(name, exc.value, exc.tolerance, _point_json(exc.witness))
            else:
                suite.record("glue", max(ver.glue, default=0.0), tol.cross_check, chain_length=len(ver.chain))
                suite.record("boundary_coincidence", ver.boundary, tol.cross_check,
                             endpoint=_point_json(ver.chain[-1]))

        samples = overlap_samples(fc, fc, 4 * count, seed=1)
        outside = [z for z in samples if not scene.hole.contains(z)]
        if outside:
            devs = [abs(fiber_extension(scene.function, fc, z, cfg).value - scene.function(z)) for z in outside]
            j = int(np.argmax(devs))
            suite.record("coincidence", devs[j], tol.coincidence, _point_json(outside[j]), samples=len(outside))

        def ext_fn(z):
            return fiber_extension(scene.function, fc, z, cfg).value

        inner = samples[:count]
        worst, at = _max_wirtinger(ext_fn, inner, scene.n)
        suite.record("extension_wirtinger", worst, WIRTINGER_TOL, _point_json(at) if at else None)

        if scene.reference is not None:
            devs = [abs(ext_fn(z) - scene.reference(z)) for z in inner]
            j = int(np.argmax(devs))
            suite.record("reference", devs[j], tol.grid, _point_json(inner[j]))
    except HartogsError as exc:
        pending = next((k for k in VERIFY_PROPERTIES if suite.results[k]["status"] == "skipped"),
                       VERIFY_PROPERTIES[-1])
        suite.error(pending, exc)
    return {"scene": scene.source, **suite.as_json()}, suite.exit_code()


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", required=True, help="scene JSON file")
    common.add_argument("--out", help="output path (contour JSON, grid CSV or report JSON)")
    common.add_argument("--no-verify", action="store_true", help="skip chain gluing checks (fast path)")
    common.add_argument("--tolerance", type=float, help="override the reference tolerance")

    parser = argparse.ArgumentParser(prog="hartogs", description="Numerical Hartogs extension.")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("contour", parents=[common], help="build a fiber contour and report winding numbers")
    c.add_argument("--base", help="base point z' as comma separated complex numbers")
    e = sub.add_parser("extend", parents=[common], help="evaluate the extension on the scene grid")
    e.add_argument("--workers", type=int, default=1, help="threads for grid evaluation")
    sub.add_parser("verify", parents=[common], help="run the property suite on the scene")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        scene = load_scene(args.scene)
        if args.command == "contour":
            base = _parse_base(args.base, scene.n) if args.base else None
            report, code = cmd_contour(scene, base, args.out)
            stdout.write(_dump(report))
        elif args.command == "extend":
            summary, text, code = cmd_extend(scene, args.out, verify=not args.no_verify,
                                             tolerance=args.tolerance, workers=args.workers)
            if not args.out:
                stdout.write(text)
            stderr.write(_dump(summary))
        else:
            report, code = cmd_verify(scene, tolerance=args.tolerance, verify=not args.no_verify)
            if args.out:
                _write(args.out, _dump(report))
            stdout.write(_dump(report))
        return code
    except HartogsError as exc:
        stage = exc.stage or ("scene" if exc.exit_code == 2 else "run")
        stderr.write(f"hartogs: error in stage '{stage}': {exc.args[0]}\n")
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        stderr.write(f"hartogs: internal error: {type(exc).__name__}: {exc}\n")
        return 5


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
