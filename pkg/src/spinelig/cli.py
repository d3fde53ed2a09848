"""
Command-line interface.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable
or invalid meshes, landmark files, configs, or a failing pipeline stage).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import config as cfg
from .edges import compute_edge_values
from .errors import SpineLigError
from .evaluation import evaluate
from .frame import compute_frame
from .landmarks import LandmarkSet
from .mesh import load_mesh, save_mesh
from .pipeline import STAGES, run_pipeline
from .poi import SCHEMES, PoISet, detect_pois
from .projection import project_landmarks
from .registration import horn_align, match_by_name
from .synthetic import DEFORMATIONS, SUITES, Deformation, SyntheticSpec, gen_vertebra, suite_target

log = logging.getLogger("spinelig")

SCHEMA_HELP = """\
config file: one `key = value` per line, `#` starts a comment. Keys:
  poi_scheme       poi15 | poi8
  with_scale       true | false
  edge_radius      auto | radius in mm
  seed             integer
  hint_lr, hint_ap, hint_si   three numbers each (all or none)
  rule.<GROUP>.plane_axis     AP | LR | SI
  rule.<GROUP>.search_radius  mm
  rule.<GROUP>.plane_mode     group | side | bundle
  atlas_mesh, atlas_landmarks, target_mesh, out   file paths
  GROUP is one of ALL PLL CL LF ISL SSL ITL
landmark JSON: {"landmarks": [{"group", "bundle", "side", "xyz", "status"}, ...]}
PoI JSON: {"scheme": "poi15", "points": [{"name", "xyz"}, ...]}
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(p):
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--poi-scheme", choices=sorted(SCHEMES))
    p.add_argument("--with-scale", dest="with_scale", action="store_const", const="true")
    p.add_argument("--no-scale", dest="with_scale", action="store_const", const="false")
    p.add_argument("--edge-radius", help="mm or 'auto'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default: stdout)")


def _resolve_config(args):
    conf = cfg.load_config(args.config) if getattr(args, "config", None) else cfg.PipelineConfig()
    values = {}
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    for key in ("poi_scheme", "with_scale", "edge_radius", "seed", "out"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    for key in ("atlas_mesh", "atlas_landmarks", "target_mesh"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return conf.with_overrides(values)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


_FLAGS = {"atlas_mesh": "--atlas", "atlas_landmarks": "--atlas-landmarks", "target_mesh": "--target"}


def _require(conf, *keys):
    missing = [k for k in keys if getattr(conf, k) is None]
    if missing:
        raise UsageError("missing required input(s): " + ", ".join(_FLAGS[k] for k in missing))
    conf.check_paths(keys)


# ------------------------------------------------------------------ commands

def cmd_detect(args):
    conf = _resolve_config(args)
    _require(conf, "atlas_mesh", "atlas_landmarks", "target_mesh")
    atlas = load_mesh(conf.atlas_mesh)
    target = load_mesh(conf.target_mesh)
    lms = LandmarkSet.load(conf.atlas_landmarks)
    res = run_pipeline(atlas, lms, target, conf)
    _emit(json.dumps(res.to_json(timings=args.timings), indent=2), conf.out)
    log.info("runtime %.3f s (%s)", res.runtime_s,
             ", ".join(f"{k} {v:.3f}" for k, v in res.stage_s.items()))


def cmd_pois(args):
    conf = _resolve_config(args)
    mesh = load_mesh(args.mesh)
    pois = detect_pois(mesh, compute_frame(mesh, conf.hints), conf.poi_scheme)
    _emit(pois.dumps(), conf.out)


def _load_pois(path):
    with open(path) as fh:
        return PoISet.from_json(json.load(fh))


def cmd_register(args):
    conf = _resolve_config(args)
    if args.source_pois and args.target_pois:
        src, dst = _load_pois(args.source_pois), _load_pois(args.target_pois)
    elif args.source and args.target:
        a, b = load_mesh(args.source), load_mesh(args.target)
        src = detect_pois(a, compute_frame(a, conf.hints), conf.poi_scheme)
        dst = detect_pois(b, compute_frame(b, conf.hints), conf.poi_scheme)
    else:
        raise UsageError("register needs --source/--target meshes or --source-pois/--target-pois")
    xf = horn_align(match_by_name(src, dst), with_scale=conf.with_scale)
    _emit(xf.dumps(), conf.out)


def cmd_edges(args):
    conf = _resolve_config(args)
    mesh = load_mesh(args.mesh)
    field = compute_edge_values(mesh, radius=conf.edge_radius)
    out = conf.out
    if out and out.lower().endswith(".ply"):
        field.to_ply(mesh, out)
    elif out:
        field.to_csv(out)
    else:
        sys.stdout.write("vertex_index,value\n")
        sys.stdout.writelines(f"{i},{float(v)!r}\n" for i, v in enumerate(field.values))


def cmd_project(args):
    conf = _resolve_config(args)
    mesh = load_mesh(args.mesh)
    lms = LandmarkSet.load(args.landmarks)
    frame = compute_frame(mesh, conf.hints)
    field = compute_edge_values(mesh, radius=conf.edge_radius)
    _emit(project_landmarks(mesh, frame, field, lms, conf.rules).dumps(), conf.out)


def cmd_eval(args):
    with open(args.detected) as fh:
        data = json.load(fh)
    det, ref = LandmarkSet.from_json(data), LandmarkSet.load(args.truth)
    report = evaluate(det, ref, runtime_s=data.get("runtime_s"))
    report.stage_s = data.get("stage_s", {})
    _emit(report.dumps(), args.out)


def _deformation(text):
    kind, _, amount = text.partition(":")
    if kind not in DEFORMATIONS:
        raise argparse.ArgumentTypeError(f"deformation must be one of {DEFORMATIONS}")
    try:
        return Deformation(kind, float(amount or 0.0))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_gen_synth(args):
    first, *rest = args.deformation or [Deformation()]
    spec = SyntheticSpec(deformation=first, extra=tuple(rest), seed=args.seed, edge_length=args.edge_length)
    v = gen_vertebra(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    save_mesh(v.mesh, os.path.join(args.out_dir, "mesh.obj"))
    v.landmarks.save(os.path.join(args.out_dir, "landmarks.json"))
    for scheme, pois in v.pois.items():
        with open(os.path.join(args.out_dir, f"pois_{scheme}.json"), "w") as fh:
            fh.write(pois.dumps() + "\n")
    print(f"wrote {v.mesh.n_vertices} vertices, {len(v.landmarks)} landmarks to {args.out_dir}")


def _seeds(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_bench(args):
    conf = _resolve_config(args)
    try:
        seeds = _seeds(args.seeds)
    except ValueError:
        raise UsageError(f"--seeds expects 'a..b' or a comma list, got {args.seeds!r}") from None
    atlas = gen_vertebra(SyntheticSpec())
    header = ["seed", "n_vertices", *STAGES, "total_s", "avg_mm", "rmse_mm", "fallbacks"]
    rows = []
    for seed in seeds:
        target = suite_target(args.suite, seed)
        res = run_pipeline(atlas.mesh, atlas.landmarks, target.mesh, conf)
        rep = evaluate(res.landmarks, target.landmarks)
        rows.append([seed, target.mesh.n_vertices, *(res.stage_s[s] for s in STAGES), res.runtime_s,
                     rep.avg_mm, rep.rmse_mm, res.summary()["fallbacks"]])
    lines = ["\t".join(header)]
    for r in rows:
        lines.append("\t".join(f"{x:.4f}" if isinstance(x, float) else str(x) for x in r))
    means = np.mean(np.array([r[2:-1] for r in rows], dtype=float), axis=0)
    lines.append("\t".join(["mean", "-", *(f"{x:.4f}" for x in means), "-"]))
    _emit("\n".join(lines), conf.out)


# ------------------------------------------------------------------ parser

def build_parser():
    p = _Parser(prog="spinelig", description="Spinal-ligament landmark transfer.",
                epilog=SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("detect", help="run the full pipeline")
    d.add_argument("--atlas", dest="atlas_mesh")
    d.add_argument("--atlas-landmarks", dest="atlas_landmarks")
    d.add_argument("--target", dest="target_mesh")
    d.add_argument("--timings", action="store_true",
                   help="include runtime_s and stage_s (makes the output run-dependent)")
    _add_config_flags(d)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("pois", help="detect the named PoIs of one mesh")
    s.add_argument("--mesh", required=True)
    _add_config_flags(s)
    s.set_defaults(func=cmd_pois)

    r = sub.add_parser("register", help="similarity transform between two meshes or PoI files")
    r.add_argument("--source")
    r.add_argument("--target")
    r.add_argument("--source-pois")
    r.add_argument("--target-pois")
    _add_config_flags(r)
    r.set_defaults(func=cmd_register)

    e = sub.add_parser("edges", help="per-vertex edge values (CSV, or PLY if --out ends in .ply)")
    e.add_argument("--mesh", required=True)
    _add_config_flags(e)
    e.set_defaults(func=cmd_edges)

    j = sub.add_parser("project", help="project registered landmarks onto a mesh")
    j.add_argument("--mesh", required=True)
    j.add_argument("--landmarks", required=True)
    _add_config_flags(j)
    j.set_defaults(func=cmd_project)

    v = sub.add_parser("eval", help="compare detected landmarks against ground truth")
    v.add_argument("--detected", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--out")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen-synth", help="write a synthetic vertebra with ground truth")
    g.add_argument("--out-dir", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--edge-length", type=float, default=SyntheticSpec.edge_length)
    g.add_argument("--deformation", type=_deformation, action="append",
                   help="KIND:AMOUNT, e.g. noise:0.5 or endplate_fracture:3 (repeatable)")
    g.add_argument("-v", "--verbose", action="store_true")
    g.set_defaults(func=cmd_gen_synth)

    b = sub.add_parser("bench", help="per-stage timings over a synthetic suite")
    b.add_argument("--suite", choices=sorted(SUITES), default="default")
    b.add_argument("--seeds", default="0..9")
    _add_config_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        t0 = time.perf_counter()
        args.func(args)
        log.debug("done in %.3f s", time.perf_counter() - t0)
        return 0
    except BrokenPipeError:
        # reader closed stdout early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n\n{parser.format_usage()}\n{SCHEMA_HELP}")
        return 1
    except (SpineLigError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
