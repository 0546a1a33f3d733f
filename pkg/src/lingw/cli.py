"""Command-line driver for the full pipeline.

Every subcommand is deterministic for fixed inputs, flags and ``--seed``;
``--jobs`` only changes wall-clock time. Errors exit nonzero with a JSON
``{"error", "detail"}`` object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import classical_mds, compare_distance_matrices, confusion_matrix
from .barycenter import BarycenterConfig, solve_barycenter
from .errors import LinGWError
from .gw import GwConfig, solve_gw
from .ingest import image_to_space, mesh_to_space
from .lgw import (
    check_lgw_bounds,
    embed,
    glgw_pairwise,
    load_embeddings_dir,
    save_embedding,
)
from .measure import (
    DistanceMatrix,
    load_distance_csv,
    load_labels_csv,
    load_mm_space,
    load_spaces_dir,
    save_distance_csv,
    save_labels_csv,
    save_mm_space,
)

log = logging.getLogger("lingw")

STREAMS = {"init": 0, "fps": 1, "confusion": 2, "barycenter": 3}


def sub_seed(seed: int, stream: str) -> int:
    """Independent seed for a named random stream derived from ``--seed``."""
    ss = np.random.SeedSequence([int(seed), STREAMS[stream]])
    return int(ss.generate_state(1)[0] & 0x7FFFFFFF)


def _jobs(value):
    if value is not None:
        return max(1, int(value))
    return max(1, int(os.environ.get("LGW_JOBS", "1")))


def _map(fn, tasks, jobs):
    """Ordered map; results come back in task order whatever the schedule."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _gw_config(args, default_inits=None):
    inits = None
    if getattr(args, "init", None):
        inits = [s.strip() for s in args.init.split(",") if s.strip()]
    elif default_inits is not None:
        inits = default_inits
    return GwConfig(
        max_iter=args.max_iter,
        rel_tol=args.tol,
        inits=inits,
        restarts=args.restarts,
        seed=sub_seed(args.seed, "init"),
    )


def _write_json(obj, out=None):
    text = json.dumps(obj, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pair_task(task):
    x, y, cfg = task
    return solve_gw(x, y, cfg).distance


def _embed_task(task):
    ref, target, cfg = task
    return embed(ref, target, cfg)


def _save_labels(spaces, out_csv):
    if all(s.label is not None for s in spaces):
        base = out_csv[:-4] if out_csv.endswith(".csv") else out_csv
        save_labels_csv([s.id for s in spaces], [s.label for s in spaces], base + ".labels.csv")


# ---------------------------------------------------------------- commands

def cmd_ingest(args):
    if args.kind == "image":
        space = image_to_space(args.input, args.threshold, args.points,
                               sub_seed(args.seed, "fps"), id=args.id, label=args.label)
    else:
        space = mesh_to_space(args.input, args.coarse, args.points,
                              sub_seed(args.seed, "fps"), id=args.id, label=args.label)
    save_mm_space(space, args.out)
    log.info("wrote %s (%d points)", args.out, space.n)


def cmd_gw(args):
    x = load_mm_space(args.a)
    y = load_mm_space(args.b)
    res = solve_gw(x, y, _gw_config(args))
    _write_json(res.to_dict(), args.out)


def cmd_gw_pairwise(args):
    spaces = load_spaces_dir(args.spaces)
    cfg = _gw_config(args)
    N = len(spaces)
    tasks = [(spaces[i], spaces[j], cfg) for i in range(N) for j in range(i + 1, N)]
    dists = _map(_pair_task, tasks, _jobs(args.jobs))
    D = np.zeros((N, N))
    k = 0
    for i in range(N):
        for j in range(i + 1, N):
            D[i, j] = D[j, i] = dists[k]
            k += 1
    log.info("gw pairwise: performed %d GW solves for %d spaces", len(tasks), N)
    save_distance_csv(DistanceMatrix([s.id for s in spaces], D), args.out)
    _save_labels(spaces, args.out)


def cmd_glgw_embed(args):
    ref = load_mm_space(args.ref)
    spaces = load_spaces_dir(args.spaces)
    cfg = _gw_config(args)
    embs = _map(_embed_task, [(ref, s, cfg) for s in spaces], _jobs(args.jobs))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "_reference.meta"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"ref_id": ref.id, "weights": ref.weights.tolist()}) + "\n")
    for s, e in zip(spaces, embs):
        save_embedding(e, os.path.join(args.out, f"{s.id}.json"))
    if all(s.label is not None for s in spaces):
        save_labels_csv([s.id for s in spaces], [s.label for s in spaces],
                        os.path.join(args.out, "_labels.csv"))
    log.info("glgw embed: performed %d GW solves for %d spaces", len(spaces), len(spaces))


def cmd_glgw_pairwise(args):
    embs = load_embeddings_dir(args.embeddings)
    with open(os.path.join(args.embeddings, "_reference.meta"), encoding="utf-8") as fh:
        weights = np.asarray(json.load(fh)["weights"], dtype=float)
    D = glgw_pairwise(weights, embs)
    ids = [e.target_id for e in embs]
    save_distance_csv(DistanceMatrix(ids, D), args.out)
    lab_path = os.path.join(args.embeddings, "_labels.csv")
    if os.path.exists(lab_path):
        lab = load_labels_csv(lab_path)
        base = args.out[:-4] if args.out.endswith(".csv") else args.out
        save_labels_csv(ids, [lab[i] for i in ids], base + ".labels.csv")
    log.info("glgw pairwise: %d evaluations, 0 GW solves", len(ids) * (len(ids) - 1) // 2)


def cmd_barycenter(args):
    spaces = [load_mm_space(p) for p in args.spaces]
    gw_cfg = _gw_config(args, default_inits=["product", "random"])
    cfg = BarycenterConfig(points=args.points, outer_iters=args.iters,
                           seed=sub_seed(args.seed, "barycenter"), inner_gw=gw_cfg)
    bary = solve_barycenter(spaces, cfg, id=args.id)
    save_mm_space(bary, args.out)


def cmd_mds(args):
    dm = load_distance_csv(args.matrix)
    X = classical_mds(dm, args.dim)
    lines = ["id," + ",".join(f"x{k + 1}" for k in range(args.dim))]
    lines += [i + "," + ",".join(repr(float(v)) for v in row) for i, row in zip(dm.ids, X)]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_confusion(args):
    dm = load_distance_csv(args.matrix, labels_path=args.labels)
    classes, C = confusion_matrix(dm, repetitions=args.reps, seed=sub_seed(args.seed, "confusion"))
    lines = ["true\\predicted," + ",".join(classes)]
    lines += [c + "," + ",".join(repr(float(v)) for v in row) for c, row in zip(classes, C)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_compare(args):
    a = load_distance_csv(args.reference)
    b = load_distance_csv(args.other)
    _write_json(compare_distance_matrices(a, b), args.out)


def cmd_bounds(args):
    ref = load_mm_space(args.ref)
    x = load_mm_space(args.x)
    y = load_mm_space(args.y)
    _write_json(check_lgw_bounds(ref, x, y, _gw_config(args)), args.out)


def cmd_check(args):
    space = load_mm_space(args.space, drop_zero=args.drop_zero)
    report = {"id": space.id, "n": space.n, "valid": True}
    if args.triangle:
        report["triangle_violation"] = space.triangle_violation()
    _write_json(report)


# ---------------------------------------------------------------- parser

def _add_gw_flags(p):
    p.add_argument("--init", default=None,
                   help="comma list: product,wasserstein,identity,random,random(S),plan(file)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=1000)


def build_parser():
    parser = argparse.ArgumentParser(prog="lingw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an mm-space from an image or mesh")
    p.add_argument("kind", choices=["image", "mesh"])
    p.add_argument("input")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--coarse", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--id", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gw", help="GW distance of two spaces")
    p.add_argument("a")
    p.add_argument("b")
    _add_gw_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gw)

    p = sub.add_parser("gw-pairwise", help="all pairwise GW distances (also: gw pairwise)")
    p.add_argument("--spaces", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    _add_gw_flags(p)
    p.set_defaults(func=cmd_gw_pairwise)

    p = sub.add_parser("glgw", help="gLGW embeddings and pairwise distances")
    gsub = p.add_subparsers(dest="glgw_command", required=True)
    e = gsub.add_parser("embed")
    e.add_argument("--ref", required=True)
    e.add_argument("--spaces", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--jobs", type=int, default=None)
    _add_gw_flags(e)
    e.set_defaults(func=cmd_glgw_embed)
    q = gsub.add_parser("pairwise")
    q.add_argument("--embeddings", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_glgw_pairwise)

    p = sub.add_parser("barycenter", help="fixed-support GW barycenter")
    p.add_argument("--spaces", nargs="+", required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--id", default="barycenter")
    p.add_argument("--out", required=True)
    _add_gw_flags(p)
    p.set_defaults(func=cmd_barycenter)

    p = sub.add_parser("mds", help="classical MDS coordinates")
    p.add_argument("matrix")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("confusion", help="nearest-representative confusion matrix")
    p.add_argument("matrix")
    p.add_argument("--labels", required=True)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_confusion)

    p = sub.add_parser("compare", help="MRE and PCC of two distance matrices")
    p.add_argument("reference")
    p.add_argument("other")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bounds", help="numerical check of the LGW bound sandwich")
    p.add_argument("--ref", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--out", default=None)
    _add_gw_flags(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("check", help="validate a space file")
    p.add_argument("space")
    p.add_argument("--triangle", action="store_true")
    p.add_argument("--drop-zero", action="store_true")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # `gw pairwise ...` is an alias for `gw-pairwise ...`
    k = next((i for i, a in enumerate(argv) if not a.startswith("-")), len(argv))
    if argv[k:k + 2] == ["gw", "pairwise"]:
        argv = argv[:k] + ["gw-pairwise"] + argv[k + 2:]
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except LinGWError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
        return 2
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "IoError", "detail": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
