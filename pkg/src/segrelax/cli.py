"""Command-line front end.

Subcommands: ``segment`` (one image, one method), ``compare`` (all methods
side by side), ``sweep`` (overlap ratio over a threshold grid, CSV),
``verify`` (the numerical check suite), ``bench`` (relative solver timings,
or a quality sweep with simulated seed corrections under ``--quality``),
``synth`` (generate a test scene), and ``serve`` (the HTTP service).

Exit codes: 0 success, 2 unreadable or malformed input, 3 solver failure,
4 verification failure.  All randomness is driven by ``--seed``, so repeated
invocations produce byte-identical JSON/CSV apart from timing fields.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import diagnostics, pipeline
from .config import Config, load_config
from .errors import InputError, SolverError
from .factorization import cholesky_upper
from .graph import SeedSet, build_incidence, build_wtilde
from .relaxations import METHODS, compute_energies, segment

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def _config_from(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return cfg.override(
        threshold=getattr(args, "threshold", None),
        superpixels=getattr(args, "superpixels", None),
        epsilon=getattr(args, "epsilon", None),
        lp_tol=getattr(args, "lp_tol", None),
        lp_max_iter=getattr(args, "lp_max_iter", None),
    )


def _load_scene(args, cfg: Config):
    """Image, superpixel map, graph, factor, and seeds shared by commands."""
    image = pipeline.load_image(args.image)
    spmap = pipeline.superpixelize(image, cfg.superpixels, cfg.compactness)
    graph = spmap.to_graph(cfg.edge_constant)
    factor = cholesky_upper(build_wtilde(build_incidence(graph), cfg.epsilon))
    if args.seeds.endswith(".png"):
        from PIL import Image as _Image

        with _Image.open(args.seeds) as im:
            overlay = np.asarray(im.convert("RGBA"))
        seeds = pipeline.rasterize_scribble_image(spmap, overlay)
    else:
        fg, bg = pipeline.load_seeds_json(args.seeds)
        seeds = pipeline.rasterize_seed_points(spmap, fg, bg)
    if not seeds.foreground or not seeds.background:
        raise InputError("need at least one foreground and one background seed")
    return image, spmap, graph, factor, seeds


def _result_doc(field, report, threshold: float) -> dict:
    binary = pipeline.threshold_labels(field.labels, threshold)
    return {
        "labels": [float(v) for v in field.labels],
        "binary": [int(v) for v in binary],
        "energy": report.as_dict(),
        "solver": field.solver,
        "threshold": threshold,
    }


def cmd_segment(args) -> int:
    cfg = _config_from(args)
    _, spmap, graph, factor, seeds = _load_scene(args, cfg)
    field, report = segment(
        graph, seeds, args.method, factor=factor,
        boundary_weight=cfg.boundary_weight, tol=cfg.lp_tol,
        max_iterations=cfg.lp_max_iter,
    )
    doc = _result_doc(field, report, cfg.threshold)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_dump(doc) + "\n")
    if args.mask_out:
        mask = pipeline.threshold_labels(spmap.paint(field.labels), cfg.threshold)
        pipeline.save_mask_png(args.mask_out, mask)
    if args.json or not args.out:
        print(_dump(doc))
    else:
        print(f"{field.solver}: {len(field.labels)} superpixels, "
              f"l1 energy {report.l1:.6g}, wrote {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config_from(args)
    _, spmap, graph, factor, seeds = _load_scene(args, cfg)
    truth = pipeline.load_mask_png(args.truth) if args.truth else None
    rows = []
    for method in METHODS:
        field, report = segment(
            graph, seeds, method, factor=factor,
            boundary_weight=cfg.boundary_weight, tol=cfg.lp_tol,
            max_iterations=cfg.lp_max_iter,
        )
        row = {"method": method, "energy": report.as_dict()}
        if truth is not None:
            mask = pipeline.threshold_labels(spmap.paint(field.labels), cfg.threshold)
            row["gamma"] = pipeline.overlap_ratio(mask, truth)
        rows.append(row)
    doc = {"threshold": cfg.threshold, "methods": rows}
    if args.json:
        print(_dump(doc))
    else:
        for row in rows:
            extra = f"  gamma={row['gamma']:.4f}" if "gamma" in row else ""
            e = row["energy"]
            print(f"{row['method']:>10}  l1={e['l1']:.6g}  l2={e['l2']:.6g}  "
                  f"l1plus={e['l1plus']:.6g}{extra}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    _, spmap, graph, factor, seeds = _load_scene(args, cfg)
    truth = pipeline.load_mask_png(args.truth)
    maps = {}
    for method in args.methods.split(","):
        method = method.strip()
        field, _ = segment(
            graph, seeds, method, factor=factor,
            boundary_weight=cfg.boundary_weight, tol=cfg.lp_tol,
            max_iterations=cfg.lp_max_iter,
        )
        maps[method] = spmap.paint(field.labels)
    report = pipeline.threshold_sweep(maps, truth, args.grid_size)
    csv_text = pipeline.sweep_to_csv(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    if args.json:
        print(_dump({
            "thresholds": report.thresholds.tolist(),
            "gamma": {m: g.tolist() for m, g in report.gamma.items()},
            "mean": report.mean,
            "std": report.std,
        }))
    elif args.out:
        means = "  ".join(f"{m}={report.mean[m]:.4f}" for m in sorted(report.mean))
        print(f"wrote {args.out}; mean gamma: {means}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = diagnostics.run_verification_suite(seed=args.seed)
    failed = [r for r in reports if not r.passed]
    if args.json:
        print(_dump({"checks": [r.as_dict() for r in reports],
                     "passed": not failed}))
    else:
        for r in reports:
            mark = "pass" if r.passed else "FAIL"
            print(f"[{mark}] {r.name}  {r.details.get('n', '')}")
        print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def cmd_bench(args) -> int:
    if args.quality:
        report = diagnostics.interactive_sweep_bench(
            scenes=args.scenes, seed=args.seed
        )
        csv_text = diagnostics.interactive_sweep_to_csv(report)
        summary = "  ".join(
            f"{report.reference}>={m} on {w}/{report.thresholds.size} thresholds"
            for m, w in sorted(report.wins.items())
        )
    else:
        sides = tuple(int(s) for s in args.sides.split(","))
        rows = diagnostics.timing_bench(sides, args.reps, args.seed)
        csv_text = diagnostics.bench_to_csv(rows)
        summary = ""
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out}" + (f"; {summary}" if summary else ""))
    else:
        sys.stdout.write(csv_text)
        if summary:
            print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    scene = pipeline.generate_two_region(
        size=(args.size, args.size), contrast=args.contrast,
        noise=args.noise, rng=args.seed,
    )
    pipeline.save_image(args.out, scene.image)
    pipeline.save_mask_png(args.truth_out, scene.truth)
    fg, bg = scene.seed_points()
    with open(args.seeds_out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(
            {"v": 1, "foreground": [[x, y] for x, y in fg],
             "background": [[x, y] for x, y in bg]},
            sort_keys=True,
        ) + "\n")
    print(f"wrote {args.out}, {args.truth_out}, {args.seeds_out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .service import create_app

    cfg = _config_from(args)
    app = create_app(cfg)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    sock.listen(128)
    port = sock.getsockname()[1]
    print(f"listening on http://{args.host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segrelax",
        description="Seed-constrained segmentation solvers on superpixel graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=True, lp=True):
        p.add_argument("--image", required=True, help="input image (PNG etc.)")
        if seeds:
            p.add_argument("--seeds", required=True,
                           help="seed JSON (point lists) or scribble PNG overlay")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--superpixels", type=int, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        if lp:
            p.add_argument("--lp-tol", type=float, default=None, dest="lp_tol")
            p.add_argument("--lp-max-iter", type=int, default=None, dest="lp_max_iter")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("segment", help="run one solver on one image")
    common(p)
    p.add_argument("--method", choices=METHODS, default="compact_lp")
    p.add_argument("--out", help="write result JSON here")
    p.add_argument("--mask-out", help="write the thresholded mask PNG here")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("compare", help="run all four solvers side by side")
    common(p)
    p.add_argument("--truth", help="ground-truth mask PNG for overlap scoring")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="overlap ratio across a threshold grid")
    common(p)
    p.add_argument("--truth", required=True)
    p.add_argument("--grid-size", type=int, default=100, dest="grid_size")
    p.add_argument("--methods", default="compact_lp,conv_lp,qp,gc")
    p.add_argument("--out", help="write CSV here (stdout otherwise)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the numerical verification suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="relative solver timings on grid graphs")
    p.add_argument("--sides", default="10,20",
                   help="comma-separated grid side lengths")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--quality", action="store_true",
                   help="sweep segmentation quality on synthetic scenes with "
                        "simulated seed corrections instead of timing")
    p.add_argument("--scenes", type=int, default=20,
                   help="scene count for --quality")
    p.add_argument("--out", help="write CSV here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a noisy two-region test scene")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--contrast", type=float, default=0.4)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="scene.png")
    p.add_argument("--truth-out", default="truth.png", dest="truth_out")
    p.add_argument("--seeds-out", default="seeds.json", dest="seeds_out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="start the HTTP segmentation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000,
                   help="0 binds an ephemeral port and prints it")
    p.add_argument("--config", help="key = value config file")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
