"""Command-line pipelines built from the library modules.

Subcommands cover the full workflow: simulate samples from a mixture
config, fit mixtures back from samples, compute mixture distances and
transport plans, build distance matrices over mixture collections, run
change-point detection, and convert triangle / contour data to spherical
representations.

Every command is deterministic given --seed.  Exit codes: 0 on success,
2 for validation problems (bad files, bad flags, malformed inputs), 3 for
numerical failures (non-convergence, degenerate geometry).  Failures print
a one-line JSON object to stderr with the error class and message.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .changepoint import e_divisive, save_report
from .contours import (
    SrvfShape,
    align_shape,
    contour_to_srvf,
    load_contour_dir,
    load_distmat,
    save_distmat,
    shape_statistics,
)
from .errors import (
    AntipodalPoint,
    ClusterTooSmall,
    DegenerateContour,
    DegenerateFrame,
    DegenerateMatrix,
    DegenerateTriangle,
    DimensionMismatch,
    EmptyCluster,
    FrameMismatch,
    InfeasibleWeights,
    NoConvergence,
    NotSymmetric,
    SegmentTooSmall,
)
from .estimation import fit_mixture, kmodes_cluster, riemannian_kmeans, save_clustering
from .gauss import (
    BundleGaussian,
    GaussianMixture,
    load_mixture,
    mixture_from_dict,
    mixture_to_dict,
    save_mixture,
)
from .geometry import (
    Point,
    frechet_mean,
    load_frame,
    pairwise_geodesic,
    standard_frame,
)
from .sampling import load_samples, sample_mixture, save_samples
from .transport import mw2, save_result, solve_transportation
from .triangles import (
    hopf_backward,
    hopf_forward,
    load_triangles,
    point_to_angles,
    save_triangles,
    triangle_preshape,
)

_NUMERICAL_ERRORS = (
    NoConvergence,
    AntipodalPoint,
    DegenerateFrame,
    EmptyCluster,
    DegenerateMatrix,
    ClusterTooSmall,
    DegenerateTriangle,
    DegenerateContour,
)
_VALIDATION_ERRORS = (
    ValueError,
    TypeError,
    KeyError,
    OSError,
    NotSymmetric,
    DimensionMismatch,
    InfeasibleWeights,
    FrameMismatch,
    SegmentTooSmall,
)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _config_error(field, why):
    return ValueError(f"config field '{field}': {why}")


def cmd_simulate(args) -> int:
    raw = Path(args.config).read_bytes()
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    for field in ("frame", "mixture", "n", "seed"):
        if field not in cfg:
            raise _config_error(field, "missing")
    n = cfg["n"]
    if not isinstance(n, int) or n < 1:
        raise _config_error("n", f"must be a positive integer, got {n!r}")
    seed = cfg["seed"]
    if not isinstance(seed, int):
        raise _config_error("seed", f"must be an integer, got {seed!r}")
    mix_section = cfg["mixture"]
    for field in ("weights", "components"):
        if field not in mix_section:
            raise _config_error(f"mixture.{field}", "missing")
    mix = mixture_from_dict(
        {
            "frame": cfg["frame"],
            "weights": mix_section["weights"],
            "components": mix_section["components"],
        }
    )
    stats = {}
    points, labels = sample_mixture(mix, n, seed, stats=stats)
    save_samples(args.out, points, labels)
    _emit(
        {
            "config_sha256": hashlib.sha256(raw).hexdigest(),
            "n": n,
            "K": mix.K,
            "truncation": stats,
            "out": str(args.out),
        }
    )
    return 0


def cmd_fit(args) -> int:
    X, _ = load_samples(args.samples)
    frame = load_frame(args.frame)
    points = [Point(row) for row in X]
    if args.method == "kmeans":
        if args.K is None:
            raise ValueError("--K is required with --method kmeans")
        clustering = riemannian_kmeans(points, args.K, seed=args.seed)
    else:
        clustering = kmodes_cluster(pairwise_geodesic(X), q=args.q)
    mix = fit_mixture(points, clustering, frame)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    mixture_path = outdir / "mixture.json"
    clustering_path = outdir / "clustering.json"
    save_mixture(mixture_path, mix)
    save_clustering(clustering_path, clustering)
    _emit(
        {
            "K": mix.K,
            "outliers": len(clustering.outliers),
            "mixture": str(mixture_path),
            "clustering": str(clustering_path),
        }
    )
    return 0


def cmd_mw2(args) -> int:
    mix0 = load_mixture(args.mixture_a)
    mix1 = load_mixture(args.mixture_b)
    res = mw2(mix0, mix1)
    if args.out is not None:
        save_result(args.out, res)
    _emit({"distance": res.distance, "distance_sq": res.distance_sq})
    return 0


def _mw2_pair(payload):
    i, j, d0, d1 = payload
    res = mw2(mixture_from_dict(d0), mixture_from_dict(d1))
    return i, j, res.distance


def cmd_distmat(args) -> int:
    indir = Path(args.mixtures)
    paths = sorted(indir.glob("*.json"))
    if len(paths) < 2:
        raise ValueError(f"need at least two mixture files in {indir}")
    names = [p.stem for p in paths]
    mixtures = [load_mixture(p) for p in paths]
    n = len(mixtures)
    D = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if args.jobs > 1:
        dicts = [mixture_to_dict(m) for m in mixtures]
        payloads = [(i, j, dicts[i], dicts[j]) for i, j in pairs]
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for i, j, d in pool.map(_mw2_pair, payloads):
                D[i, j] = D[j, i] = d
    else:
        for i, j in pairs:
            D[i, j] = D[j, i] = mw2(mixtures[i], mixtures[j]).distance
    save_distmat(args.out, D, names=names)
    _emit({"n": n, "names": names, "out": str(args.out)})
    return 0


def _parse_weights(text, k, flag):
    if text is None:
        return np.full(k, 1.0 / k)
    try:
        w = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ValueError(f"{flag} must be comma-separated numbers") from exc
    if w.size != k:
        raise ValueError(f"{flag} has {w.size} entries, cost matrix needs {k}")
    return w


def cmd_transport(args) -> int:
    cost = np.loadtxt(args.cost, delimiter=",", ndmin=2)
    w0 = _parse_weights(args.w0, cost.shape[0], "--w0")
    w1 = _parse_weights(args.w1, cost.shape[1], "--w1")
    plan = solve_transportation(cost, w0, w1)
    payload = {
        "cost": plan.cost,
        "plan": plan.matrix.tolist(),
        "w0": w0.tolist(),
        "w1": w1.tolist(),
    }
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit({"cost": plan.cost, "nonzeros": int(np.count_nonzero(plan.matrix))})
    return 0


def cmd_changepoint(args) -> int:
    D, _names = load_distmat(args.distmat)
    report = e_divisive(
        D,
        R=args.R,
        p0=args.p0,
        min_size=args.min_size,
        alpha=args.alpha,
        seed=args.seed,
    )
    if args.out is not None:
        save_report(args.out, report)
    _emit(
        {
            "accepted": report.accepted_indices,
            "tested": len(report.points),
            "p_values": [p.p_value for p in report.points],
        }
    )
    return 0


def cmd_triangles(args) -> int:
    if args.mode == "forward":
        triangles = load_triangles(args.input)
        rows = []
        for t in triangles:
            p = hopf_forward(triangle_preshape(t))
            theta, phi = point_to_angles(p)
            rows.append([theta, phi, *p.coords])
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("theta,phi,x,y,z\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        _emit({"triangles": len(rows), "out": str(args.out)})
    else:
        with open(args.input, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if lines and lines[0].lstrip("#").split(",")[0].strip() in ("theta", "psi"):
            lines = lines[1:]
        if not lines:
            raise ValueError("angle file contains no data rows")
        triangles = []
        for ln in lines:
            vals = [float(v) for v in ln.split(",")]
            if len(vals) not in (2, 3):
                raise ValueError("each row needs theta,phi or theta,phi,psi")
            triangles.append(hopf_backward(*vals))
        save_triangles(args.out, triangles)
        _emit({"triangles": len(triangles), "out": str(args.out)})
    return 0


def cmd_contours(args) -> int:
    frames = load_contour_dir(args.contours)
    T = args.T
    shapes = {
        name: [contour_to_srvf(c, T) for c in cs] for name, cs in frames.items()
    }
    first = next(iter(shapes))
    reference = shapes[first][0]
    sphere_frame = standard_frame(2 * T)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, qs in shapes.items():
        aligned = [align_shape(reference, q) for q in qs]
        mean = frechet_mean([Point(q.flat) for q in aligned])
        mean_shape = SrvfShape(mean.coords.reshape(2, T))
        _, cov = shape_statistics(aligned, mean_shape, frame=sphere_frame)
        mix = GaussianMixture(
            [1.0], [BundleGaussian(mean, cov)], sphere_frame
        )
        path = outdir / f"{name}.json"
        save_mixture(path, mix)
        written.append(str(path))
    _emit({"frames": len(written), "T": T, "out": str(outdir)})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundlemw",
        description="Gaussian mixtures on tangent bundles of punctured spheres: "
        "simulation, estimation, Wasserstein distances, and shape pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw labeled samples from a mixture config")
    p.add_argument("config", help="JSON config with frame, mixture, n, seed sections")
    p.add_argument("--out", required=True, help="output samples.csv path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate a mixture from samples")
    p.add_argument("samples", help="samples.csv produced by simulate or external data")
    p.add_argument("--frame", required=True, help="frame.json for the mixture")
    p.add_argument("--method", choices=("kmeans", "kmodes"), default="kmeans")
    p.add_argument("--K", type=int, default=None, help="number of clusters (kmeans)")
    p.add_argument("--q", type=float, default=0.1, help="radius quantile (kmodes)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("mw2", help="mixture Wasserstein distance between two mixtures")
    p.add_argument("mixture_a")
    p.add_argument("mixture_b")
    p.add_argument("--out", default=None, help="optional plan.json output")
    p.set_defaults(func=cmd_mw2)

    p = sub.add_parser("distmat", help="pairwise MW2 matrix over a mixture directory")
    p.add_argument("mixtures", help="directory of mixture .json files")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for pairs")
    p.add_argument("--out", required=True, help="output distmat.csv path")
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("transport", help="solve a transportation problem from a cost CSV")
    p.add_argument("cost", help="cost matrix CSV")
    p.add_argument("--w0", default=None, help="row marginals, comma-separated")
    p.add_argument("--w1", default=None, help="column marginals, comma-separated")
    p.add_argument("--out", default=None, help="optional plan JSON output")
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("changepoint", help="E-divisive detection on a distance matrix")
    p.add_argument("distmat", help="distmat.csv with pairwise distances")
    p.add_argument("--p0", type=float, default=0.0125)
    p.add_argument("--R", type=int, default=499)
    p.add_argument("--min-size", dest="min_size", type=int, default=12)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional changepoints.json output")
    p.set_defaults(func=cmd_changepoint)

    p = sub.add_parser("triangles", help="map triangles to sphere points and back")
    p.add_argument("input", help="triangles.csv (forward) or theta,phi CSV (backward)")
    p.add_argument("--mode", choices=("forward", "backward"), default="forward")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_triangles)

    p = sub.add_parser("contours", help="fit per-frame shape Gaussians from contours")
    p.add_argument("contours", help="directory of contour files (one file per frame)")
    p.add_argument("--T", type=int, default=100, help="resampling resolution")
    p.add_argument("--out", required=True, help="output directory for mixtures")
    p.set_defaults(func=cmd_contours)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        _fail(exc)
        return 3
    except _VALIDATION_ERRORS as exc:
        _fail(exc)
        return 2


def _fail(exc) -> None:
    print(
        json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
        ),
        file=sys.stderr,
    )


if __name__ == "__main__":
    sys.exit(main())
