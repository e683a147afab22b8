"""Command-line front end: decimate / metrics / symmetry / synth.

Reports are JSON on stdout (or --report <path>); warnings go to stderr.
Exit codes: 0 success, 1 I/O or usage failure, 2 unreachable decimation
target (partial output still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .decimate import DecimationConfig, decimate
from .mesh import total_triangle_count
from .mesh_io import (
    MeshIOError,
    SkinSidecar,
    attach_skin,
    read_obj,
    read_skin_sidecar,
    write_obj,
    write_skin_sidecar,
)
from .metrics import DEFAULT_SAMPLES, animated_metrics, metric_report
from .symmetry import all_symmetry_weights, default_delta
from .synth import synth_mesh

log = logging.getLogger("quadreduce")


def _emit(report: dict, path):
    text = json.dumps(report, indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_decimate(args) -> int:
    mesh = read_obj(args.input)
    sidecar = None
    if args.skin:
        sidecar = read_skin_sidecar(args.skin)
        attach_skin(mesh, sidecar)
    config = DecimationConfig(
        target_total_triangles=args.target_tris,
        target_ratio=args.ratio,
        eps_abs=args.eps_abs,
        lambda_sym=args.lambda_sym,
        lambda_joint=args.lambda_joint,
        sym_delta=args.sym_delta,
        recency_enabled=not args.no_recency,
        cost_mode="original" if args.original_qem else "new",
        edge_weight_mode=args.edge_weight_mode,
        rng_seed=args.seed,
    )
    before = total_triangle_count(mesh)
    result = decimate(mesh, config)
    write_obj(result.mesh, args.output)
    if sidecar is not None:
        out_sidecar = SkinSidecar(
            skeleton=sidecar.skeleton,
            influences=[list(e) for e in result.mesh.attributes.influences],
            poses=sidecar.poses,
        )
        write_skin_sidecar(out_sidecar, _sidecar_path(args.output))
    report = {
        "input": args.input,
        "output": args.output,
        "input_total_triangles": before,
        "target_total_triangles": config.resolve_target(before),
        **result.stats(),
    }
    _emit(report, args.report)
    return 2 if result.unreachable else 0


def _sidecar_path(obj_path: str) -> str:
    base, _ = os.path.splitext(obj_path)
    return base + ".skin.json"


def _cmd_metrics(args) -> int:
    mesh_a = read_obj(args.mesh_a)
    mesh_b = read_obj(args.mesh_b)
    if args.skin:
        sidecar_a = read_skin_sidecar(args.skin)
        attach_skin(mesh_a, sidecar_a)
        skin_b = args.skin_b or _sidecar_path(args.mesh_b)
        sidecar_b = read_skin_sidecar(skin_b)
        if sidecar_b.skeleton.names != sidecar_a.skeleton.names:
            raise MeshIOError("sidecar skeletons do not match")
        attach_skin(mesh_b, sidecar_b)
        name = args.animation or next(iter(sidecar_a.poses), None)
        if name is None:
            raise MeshIOError("sidecar has no poses for an animated series")
        frames = min(args.frames, len(sidecar_a.poses[name]))
        poses = [sidecar_a.pose(name, f) for f in range(frames)]
        reports = animated_metrics(mesh_a, mesh_b, poses,
                                   n=args.samples, seed=args.seed)
        payload = {"animation": name,
                   "frames": [r.to_dict() for r in reports]}
        if args.csv:
            _write_frame_csv(reports, args.csv)
    else:
        payload = metric_report(mesh_a, mesh_b, n=args.samples,
                                seed=args.seed).to_dict()
    _emit(payload, args.report)
    return 0


def _write_frame_csv(reports, path):
    with open(path, "w") as fh:
        fh.write("frame,chamfer,hausdorff,quads,tris,total_triangles\n")
        for i, r in enumerate(reports):
            fh.write(f"{i},{r.chamfer:.12g},{r.hausdorff:.12g},"
                     f"{r.quads},{r.tris},{r.total_triangles}\n")


def _cmd_symmetry(args) -> int:
    mesh = read_obj(args.input)
    delta = args.delta if args.delta else default_delta(mesh)
    weights = all_symmetry_weights(mesh, delta)
    lines = ["lo,hi,weight"]
    lines += [f"{e[0]},{e[1]},{w:.9g}" for e, w in weights.items()]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_synth(args) -> int:
    params = {
        "subdivided-cube": (args.params + [None])[:1],
        "grid": args.params[:2],
        "skinned-cylinder": args.params[:3],
    }[args.kind]
    if any(p is None for p in params) or len(params) < {
            "subdivided-cube": 1, "grid": 2, "skinned-cylinder": 3}[args.kind]:
        raise MeshIOError(f"synth {args.kind} needs more parameters")
    mesh, sidecar = synth_mesh(args.kind, params)
    write_obj(mesh, args.output)
    if sidecar is not None:
        write_skin_sidecar(sidecar, args.skin_out or _sidecar_path(args.output))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadreduce",
        description="Quad-preserving simplification of hybrid tri/quad meshes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decimate", help="collapse a mesh to a triangle budget")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ratio", type=float,
                       help="target fraction of the input total triangle "
                            "count (2*quads + tris)")
    group.add_argument("--target-tris", type=int,
                       help="absolute target total triangle count")
    p.add_argument("--eps-abs", type=float, default=5e-6,
                   help="cost band treated as equal (default 5e-6)")
    p.add_argument("--lambda-sym", type=float, default=0.0)
    p.add_argument("--lambda-joint", type=float, default=1.0)
    p.add_argument("--sym-delta", type=float, default=0.0,
                   help="symmetry matching distance (default: 1e-3 of the "
                        "bounding-box diagonal)")
    p.add_argument("--no-recency", action="store_true",
                   help="order purely by cost (disables quad-chord chewing)")
    p.add_argument("--original-qem", action="store_true",
                   help="measure error from the input mesh instead of the "
                        "decimated one")
    p.add_argument("--edge-weight-mode", default="dihedral",
                   choices=["none", "uniform", "dihedral"])
    p.add_argument("--skin", help="skinning sidecar for the input mesh")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_decimate)

    p = sub.add_parser("metrics", help="compare two meshes")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skin", help="sidecar for mesh_a (enables the animated series)")
    p.add_argument("--skin-b", help="sidecar for mesh_b (default: next to mesh_b)")
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--animation", help="animation name (default: first)")
    p.add_argument("--report")
    p.add_argument("--csv", help="also write the frame series as CSV rows")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("symmetry", help="dump per-edge symmetry weights as CSV")
    p.add_argument("input")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_symmetry)

    p = sub.add_parser("synth", help="generate a synthetic test mesh")
    p.add_argument("kind", choices=["subdivided-cube", "grid", "skinned-cylinder"])
    p.add_argument("params", nargs="*", type=int)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--skin-out", help="sidecar path for skinned kinds")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("QUADREDUCE_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MeshIOError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
