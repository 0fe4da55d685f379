"""Command-line entry point: ``diskpattern <command> --spec FILE``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .complex import ExhaustionWarning, VertexClass, check_c1_c2, classify_vertices, validate_complex
from .extremal import PreconditionError as ExtremalPrecondition
from .extremal import SizeLimitError, mod_separating, type_classify, vel_between
from .geometry import Geometry
from .layout import LAYOUT_TOL, LayoutError, layout, verify_angles, holonomy_residual
from .network import CONDUCTANCE_SUM_BOUND, conductances, is_unbounded
from .render import RenderStyle, render_svg
from .solver import DEFAULT_TOL, PreconditionError as SolverPrecondition, SolveOptions, solve
from .specfile import PatternSpec, SpecParseError, SpecValidationError, load_spec
from .uniformize import (ConvergenceError, PreconditionError as UniformPrecondition, exhaust_uniformize,
                         max_pack_hyperbolic, rigidity_experiment, ring_lemma_check, smooth_profile,
                         tangency_residual)

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_PARSE = 0, 1, 2, 3
COMMANDS = ("validate", "solve", "layout", "render", "network", "vel", "classify", "uniformize", "rigidity")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="diskpattern", description="Disk patterns with prescribed intersection angles.")
    p.add_argument("--version", action="version", version=f"diskpattern {__version__}")
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--spec", help="pattern file (JSON)")
    p.add_argument("--out", help="output path; stdout if omitted")
    p.add_argument("--tol", type=float, help="solver tolerance on max |curvature|")
    p.add_argument("--depth", type=int, help="exhaustion depth (classify, uniformize)")
    p.add_argument("--time-steps", type=int, default=11, help="grid points in [0, 1] (rigidity)")
    p.add_argument("--seed", type=int, help="random boundary profile (rigidity)")
    p.add_argument("--amplitude", type=float, default=0.1, help="boundary profile amplitude (rigidity)")
    p.add_argument("--geometry", choices=["euclidean", "hyperbolic"], help="override the file's geometry")
    p.add_argument("--style", action="append", default=[], metavar="KEY=VALUE", help="render style entry")
    p.add_argument("--v1", help="comma-separated vertex ids (vel); default v0")
    p.add_argument("--v2", help="comma-separated vertex ids (vel); default the boundary")
    return p


def _load(args) -> PatternSpec:
    if not args.spec:
        raise UsageError("--spec is required for this command")
    spec = load_spec(args.spec)
    if args.geometry:
        spec.geometry = Geometry(args.geometry)
        if spec.geometry is Geometry.HYPERBOLIC and not spec.boundary_explicit:
            spec.boundary = {v: "horocyclic" for v in spec.boundary}
    return spec


def _tolerances(args, g: Geometry) -> dict:
    return {"solver_max_curvature": args.tol if args.tol is not None else DEFAULT_TOL[g],
            "layout_max_curvature": LAYOUT_TOL}


def _report(args, g: Geometry, body: dict) -> dict:
    return {"tool": "diskpattern", "version": __version__, "command": args.command,
            "geometry": g.value, "tolerances": _tolerances(args, g), **body}


def _emit(args, payload) -> None:
    data = payload if isinstance(payload, bytes) else (json.dumps(payload, indent=1, default=_jsonable) + "\n").encode()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if is_unbounded(x):
        return x.to_json()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _solve(args, spec: PatternSpec):
    r, rep = solve(spec.triangulation, spec.angles, spec.boundary, spec.geometry, SolveOptions(tol=args.tol))
    if not rep.converged:
        raise ConvergenceError(f"solver stopped at max |K| = {rep.max_residual:.3e}", rep)
    return r, rep


def _ids(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"vertex list {text!r} must be comma-separated integers") from None


def cmd_validate(args) -> int:
    try:
        spec = _load(args)
    except SpecValidationError as exc:
        body = {"passed": False, "error": str(exc)}
        if exc.report is not None:
            body["report"] = exc.report.to_dict()
        _emit(args, _report(args, Geometry.EUCLIDEAN, body))
        return EXIT_INVALID
    t, a = spec.triangulation, spec.angles
    cls = classify_vertices(t, a)
    body = {"passed": True, "complex": validate_complex(t).to_dict(), "conditions": check_c1_c2(t, a).to_dict(),
            "vertices": len(t.vertices), "faces": len(t.faces), "euler_characteristic": t.euler_characteristic(),
            "interior": sorted(v for v, c in cls.items() if c is VertexClass.INTERIOR),
            "boundary": sorted(v for v, c in cls.items() if c is VertexClass.BOUNDARY),
            "completed_edges": sorted(list(e) for e in a.completed_edges)}
    _emit(args, _report(args, spec.geometry, body))
    return EXIT_OK


def cmd_solve(args) -> int:
    spec = _load(args)
    r, rep = solve(spec.triangulation, spec.angles, spec.boundary, spec.geometry, SolveOptions(tol=args.tol))
    _emit(args, _report(args, spec.geometry, {"radii": r.to_dict(), "report": rep.to_dict()}))
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def _placed(args, spec):
    if spec.geometry is Geometry.HYPERBOLIC and all(x == "horocyclic" for x in spec.boundary.values()):
        return max_pack_hyperbolic(spec.triangulation, spec.angles, spec.v0, opts=SolveOptions(tol=args.tol))
    r, _ = _solve(args, spec)
    anchor = spec.v0
    return layout(spec.triangulation, spec.angles, r, spec.geometry, anchor=anchor,
                  neighbor=None if anchor is None else min(spec.triangulation.neighbors[anchor]))


def cmd_layout(args) -> int:
    spec = _load(args)
    p = _placed(args, spec)
    checks = {"angle_error": verify_angles(p, spec.angles)}
    if p.geometry is Geometry.EUCLIDEAN:
        checks["holonomy_residual"] = holonomy_residual(p)
    else:
        checks["tangency_residual"] = tangency_residual(p)
    _emit(args, _report(args, spec.geometry, {"pattern": p.to_dict(), "checks": checks}))
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        style = RenderStyle.from_pairs(args.style)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    spec = _load(args)
    _emit(args, render_svg(_placed(args, spec), style))
    return EXIT_OK


def cmd_network(args) -> int:
    spec = _load(args)
    if spec.geometry is not Geometry.EUCLIDEAN:
        raise SpecValidationError("conductances are defined for euclidean patterns")
    r, _ = _solve(args, spec)
    net = conductances(spec.triangulation, spec.angles, r)
    cls = classify_vertices(spec.triangulation, spec.angles)
    sums = net.conductance_sums()
    interior = [v for v, c in cls.items() if c is VertexClass.INTERIOR]
    worst = max((sums[v] for v in interior), default=0.0)
    completed = [net.conductance(*e) for e in spec.angles.completed_edges]
    body = {"network": net.summary(),
            "bounds": {"max_interior_conductance_sum": worst, "bound": CONDUCTANCE_SUM_BOUND,
                       "sum_bound_holds": worst <= CONDUCTANCE_SUM_BOUND,
                       "completed_edges_zero": all(x == 0.0 for x in completed),
                       "min_conductance": float(net.mu.min()) if len(net.mu) else None}}
    _emit(args, _report(args, spec.geometry, body))
    return EXIT_OK


def cmd_vel(args) -> int:
    spec = _load(args)
    t = spec.triangulation
    v1 = _ids(args.v1)
    if v1 is None:
        v1 = [spec.v0 if spec.v0 is not None else t.vertices[0]]
    v2 = _ids(args.v2)
    if v2 is None:
        v2 = [v for v in spec.boundary if v not in v1]
    res = vel_between(t, v1, v2)
    body = {"V1": v1, "V2": v2, **res.to_dict()}
    try:
        dual = mod_separating(t, v1, v2)
        body["mod_separating"] = dual.value
    except SizeLimitError as exc:
        body["mod_separating"] = None
        body["mod_separating_note"] = str(exc)
    _emit(args, _report(args, spec.geometry, body))
    return EXIT_OK


def _generator_of(spec: PatternSpec):
    from .generators import PerturbedAngles, make_generator

    if spec.generator:
        g = make_generator(spec.generator["name"])
        if "max_angle" in spec.generator or "seed" in spec.generator:
            g = PerturbedAngles(g, spec.generator.get("max_angle", 1.2), spec.generator.get("seed", 0))
        return g, g.origin, spec.generator["depth"]
    v0 = spec.v0 if spec.v0 is not None else spec.triangulation.vertices[0]
    return (spec.triangulation, spec.angles), v0, None


def cmd_classify(args) -> int:
    spec = _load(args)
    gen, v0, depth = _generator_of(spec)
    depth = args.depth or depth or 10
    res = type_classify(gen, v0, depth)
    _emit(args, _report(args, spec.geometry, {"v0": v0, "depth": depth, **res.to_dict()}))
    return EXIT_OK


def cmd_uniformize(args) -> int:
    spec = _load(args)
    gen, v0, depth = _generator_of(spec)
    depth = args.depth or depth or 6
    mode = spec.geometry.value
    trace = exhaust_uniformize(gen, v0, depth, mode)
    body = trace.to_dict()
    try:
        body["ring_lemma"] = ring_lemma_check(trace).to_dict()
    except UniformPrecondition as exc:
        body["ring_lemma"] = {"skipped": str(exc)}
    _emit(args, _report(args, spec.geometry, body))
    failed = [x for x in trace.terms if x.status == "failed"]
    return EXIT_NONCONVERGED if failed else EXIT_OK


def cmd_rigidity(args) -> int:
    spec = _load(args)
    if spec.geometry is not Geometry.EUCLIDEAN:
        raise SpecValidationError("the deformation experiment runs on euclidean patterns")
    t = spec.triangulation
    bnd = sorted(spec.boundary)
    if args.seed is not None:
        rng = np.random.default_rng(args.seed)
        lam = {v: float(x) for v, x in zip(bnd, rng.uniform(-args.amplitude, args.amplitude, len(bnd)))}
    else:
        lam = smooth_profile(t, bnd, args.amplitude)
    b1 = dict(spec.boundary)
    b2 = {v: b1[v] * math.exp(lam[v]) for v in bnd}
    trace = rigidity_experiment(t, spec.angles, b1, b2, args.time_steps, v0=spec.v0)
    _emit(args, _report(args, spec.geometry, trace.to_dict()))
    return EXIT_OK


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command not in HANDLERS:
            raise UsageError(f"unknown command {args.command!r}\n{parser.format_usage()}")
        return HANDLERS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_PARSE
    except SpecParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except OSError as exc:
        sys.stderr.write(f"cannot read or write file: {exc}\n")
        return EXIT_PARSE
    except (SpecValidationError, SolverPrecondition, UniformPrecondition, ExtremalPrecondition,
            KeyError, ValueError) as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_INVALID
    except (ConvergenceError, LayoutError, ArithmeticError) as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
