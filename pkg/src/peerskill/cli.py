"""Command-line entry point: ``peerskill {analyze,predict,simulate,generate}``.

Every command writes into ``--out`` and leaves a ``manifest.json`` with the
command, its configuration, the seed, input digests and the tool version.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import DiffusionConfig, simulate
from .graph import average_rating, build_laplacian, normalize_series, total_variation
from .ingest import (
    IngestError,
    MissingRatingsError,
    assemble_all,
    generate_synthetic_dataset,
    read_events,
    read_series_json,
    series_to_comment_events,
    write_comments_csv,
    write_series_json,
)
from .regression import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_MU_GRID,
    IllPosedFitError,
    PredictionTask,
    compare_models,
)
from .trend import group_average_trend, linear_trend

log = logging.getLogger("peerskill")


class CommandError(Exception):
    pass


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _write_manifest(out: Path, command: str, config: dict, seed, inputs=()) -> None:
    outputs = {
        str(p.relative_to(out)): _digest(p)
        for p in sorted(out.rglob("*")) if p.is_file() and p.name != "manifest.json"
    }
    _dump_json(
        {
            "command": command,
            "config": config,
            "seed": seed,
            "inputs": {str(p): _digest(p) for p in inputs},
            "outputs": outputs,
            "tool_version": __version__,
        },
        out / "manifest.json",
    )


def _float_list(text: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers: {text!r}")


def _load_communities(args, inputs: list) -> list:
    if args.series:
        paths = []
        for p in map(Path, args.series):
            paths.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
        if not paths:
            raise CommandError("no series JSON files found")
        inputs.extend(paths)
        return sorted((read_series_json(p) for p in paths), key=lambda s: str(s.community_id))
    if not (args.comments and args.ratings):
        raise CommandError("provide --comments and --ratings, or --series")
    inputs.extend([Path(args.comments), Path(args.ratings)])
    comments, ratings = read_events(args.comments, args.ratings)
    communities = assemble_all(comments, ratings, args.missing.replace("-", "_"))
    for s in communities:
        for pid, prompt in s.imputed:
            log.warning("community %s: imputed rating for %s at prompt %d", s.community_id, pid, prompt)
    return communities


def _formats(args) -> set:
    return {"json", "csv"} if args.format == "all" else {args.format}


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = []
    communities = _load_communities(args, inputs)
    if any(s.n_prompts < 2 for s in communities):
        short = [s.community_id for s in communities if s.n_prompts < 2]
        raise CommandError(f"need >= 2 prompts per community; too few in {short}")

    errors = []
    per_community, tv_norm, ratings_avg, tv_raw = [], [], [], []
    for s in communities:
        tv = [total_variation(build_laplacian(g), r) for g, r in s.prompts]
        avg = [average_rating(r) for _, r in s.prompts]
        entry = {
            "community_id": s.community_id,
            "n": s.n,
            "total_variation": tv,
            "normalized_tv": None,
            "mean_rating": avg,
            "tv_trend": linear_trend(tv).to_dict(),
            "rating_trend": linear_trend(avg).to_dict(),
            "imputed": [list(cell) for cell in s.imputed],
            "errors": [],
        }
        try:
            ntv = normalize_series(tv).tolist()
        except ValueError as exc:
            msg = f"community {s.community_id}: normalization failed ({exc})"
            entry["errors"].append(msg)
            errors.append(msg)
        else:
            entry["normalized_tv"] = ntv
            entry["normalized_tv_trend"] = linear_trend(ntv).to_dict()
            tv_norm.append(ntv)
        per_community.append(entry)
        ratings_avg.append(avg)
        tv_raw.append(tv)

    lengths = {len(a) for a in ratings_avg}
    if len(lengths) != 1:
        raise CommandError(f"communities have different prompt counts {sorted(lengths)}")
    group = {
        "mean_rating": np.mean(ratings_avg, axis=0).tolist(),
        "rating_trend": group_average_trend(ratings_avg).to_dict(),
        "total_variation": np.mean(tv_raw, axis=0).tolist(),
        "raw_tv_trend": group_average_trend(tv_raw).to_dict(),
        "normalized_tv": np.mean(tv_norm, axis=0).tolist() if tv_norm else None,
        "tv_trend": group_average_trend(tv_norm).to_dict() if tv_norm else None,
        "tv_communities": [e["community_id"] for e in per_community if e["normalized_tv"]],
    }
    report = {"communities": per_community, "group": group, "errors": errors}

    fmts = _formats(args)
    if "json" in fmts:
        _dump_json(report, out / "analysis.json")
    if "csv" in fmts:
        with open(out / "analysis.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["community_id", "prompt", "total_variation", "normalized_tv", "mean_rating"])
            for e in per_community:
                ntv = e["normalized_tv"] or [""] * len(e["total_variation"])
                for t, row in enumerate(zip(e["total_variation"], ntv, e["mean_rating"]), start=1):
                    w.writerow([e["community_id"], t, *row])
            ntv = group["normalized_tv"] or [""] * len(group["mean_rating"])
            for t, row in enumerate(zip(group["total_variation"], ntv, group["mean_rating"]), start=1):
                w.writerow(["group_mean", t, *row])
    _write_manifest(out, "analyze", _config(args), args.seed, inputs)

    tv_trend = group["tv_trend"]
    if tv_trend:
        print(f"group normalized TV slope {tv_trend['slope']:+.4f} (p={tv_trend['p_value']:.3g})")
    rt = group["rating_trend"]
    print(f"group mean rating slope {rt['slope']:+.4f} (p={rt['p_value']:.3g})")
    for msg in errors:
        print(f"error: {msg}", file=sys.stderr)
    return 1 if errors else 0


def cmd_predict(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = []
    communities = _load_communities(args, inputs)
    reports = []
    for s in communities:
        target = s.n_prompts if args.target_prompt is None else args.target_prompt
        if target > s.n_prompts or target < 1:
            raise CommandError(f"community {s.community_id}: target prompt absent ({target})")
        if target < 3:
            raise CommandError(
                f"community {s.community_id}: need >= 3 prompts (2 for training plus the target)"
            )
        task = PredictionTask.from_series(s, target)
        try:
            reports.append(compare_models(task, args.features, args.lambda_grid, args.mu_grid))
        except (IllPosedFitError, ValueError) as exc:
            raise CommandError(f"community {s.community_id}: {exc}") from exc

    fmts = _formats(args)
    if "json" in fmts:
        _dump_json([r.to_dict() for r in reports], out / "predictions.json")
    if "csv" in fmts:
        with open(out / "predictions.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["community_id", "features", "lambda", "mu", "consensus_error", "baseline_error"])
            for r in reports:
                w.writerow([r.community_id, r.features, r.lam, r.mu, r.consensus_error, r.baseline_error])
    _write_manifest(out, "predict", _config(args), args.seed, inputs)
    for r in reports:
        print(f"{r.community_id}: consensus {100 * r.consensus_error:.2f}% "
              f"baseline {100 * r.baseline_error:.2f}% (lambda={r.lam:g}, mu={r.mu:g})")
    return 0


def _diffusion_config(args, **overrides) -> DiffusionConfig:
    fields = dict(
        edge_prob=args.edge_prob, c=args.c, drift_mean=args.drift_mean,
        drift_std=args.drift_std, r_min=args.rmin, r_max=args.rmax, seed=args.seed,
    )
    fields.update(overrides)
    return DiffusionConfig(**fields)


def cmd_simulate(args) -> int:
    config = _diffusion_config(
        args, n=args.n, horizon=args.horizon, realizations=args.realizations
    )
    problems = config.problems()
    if problems:
        raise CommandError("invalid configuration:\n  " + "\n  ".join(problems))
    try:
        stats = simulate(config, keep_traces=args.traces)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmts = _formats(args)
    if "csv" in fmts:
        with open(out / "trajectory.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["prompt", "mean_tv", "mean_normalized_tv", "mean_rating"])
            w.writerows(stats.to_rows())
    if "json" in fmts:
        _dump_json(
            {
                "config": config.to_dict(),
                "prompt": list(range(1, stats.horizon + 1)),
                "mean_tv": stats.total_variation.tolist(),
                "mean_normalized_tv": stats.normalized_tv.tolist(),
                "mean_rating": stats.mean_rating.tolist(),
            },
            out / "trajectory.json",
        )
    if args.traces:
        with open(out / "traces.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["realization", "prompt", "total_variation", "normalized_tv", "mean_rating"])
            tr = stats.traces
            for k in range(config.realizations):
                for t in range(config.horizon):
                    w.writerow([k, t + 1, tr["total_variation"][k, t],
                                tr["normalized_tv"][k, t], tr["mean_rating"][k, t]])
    _write_manifest(out, "simulate", _config(args), args.seed)
    print(f"final mean rating {stats.mean_rating[-1]:.4f}, "
          f"TV ratio {stats.total_variation[-1] / stats.total_variation[0]:.4g}")
    return 0


def cmd_generate(args) -> int:
    if args.prompts < 2:
        raise CommandError(f"need --prompts >= 2, got {args.prompts}")
    if not args.sizes or any(s < 1 for s in args.sizes):
        raise CommandError(f"--sizes must be positive integers, got {args.sizes}")
    config = _diffusion_config(args, horizon=args.prompts)
    problems = [p for p in replace(config, n=max(args.sizes)).problems()]
    if problems:
        raise CommandError("invalid configuration:\n  " + "\n  ".join(problems))
    try:
        communities = generate_synthetic_dataset(config, args.sizes, args.prompts, args.seed)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc

    out = Path(args.out)
    (out / "series").mkdir(parents=True, exist_ok=True)
    with open(out / "comments.csv", "w", newline="") as fh:
        write_comments_csv([e for s in communities for e in series_to_comment_events(s)], fh)
    for s in communities:
        write_series_json(s, out / "series" / f"{s.community_id}.json")
    _write_manifest(out, "generate", _config(args), args.seed)
    print(f"wrote {len(communities)} communities to {out}")
    return 0


def _config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peerskill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--format", choices=["json", "csv", "all"], default="all")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--comments", help="comments CSV")
    data.add_argument("--ratings", help="ratings CSV")
    data.add_argument("--series", nargs="+", help="series JSON files or directories")
    data.add_argument("--missing", choices=["error", "community-mean"], default="error")

    dyn = argparse.ArgumentParser(add_help=False)
    dflt = DiffusionConfig()
    dyn.add_argument("--edge-prob", type=float, default=dflt.edge_prob)
    dyn.add_argument("--c", type=float, default=dflt.c)
    dyn.add_argument("--drift-mean", type=float, default=dflt.drift_mean)
    dyn.add_argument("--drift-std", type=float, default=dflt.drift_std)
    dyn.add_argument("--rmin", type=float, default=dflt.r_min)
    dyn.add_argument("--rmax", type=float, default=dflt.r_max)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", parents=[common, data], help="total variation and rating trends")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predict", parents=[common, data], help="consensus vs OLS prediction errors")
    p.add_argument("--features", choices=["linear", "nonlinear"], default="linear")
    p.add_argument("--lambda-grid", type=_float_list, default=list(DEFAULT_LAMBDA_GRID))
    p.add_argument("--mu-grid", type=_float_list, default=list(DEFAULT_MU_GRID))
    p.add_argument("--target-prompt", type=int, default=None, help="defaults to the last prompt")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", parents=[common, dyn], help="Monte Carlo rating diffusion")
    p.add_argument("--n", type=int, default=dflt.n)
    p.add_argument("--horizon", type=int, default=dflt.horizon)
    p.add_argument("--realizations", type=int, default=dflt.realizations)
    p.add_argument("--traces", action="store_true", help="also write per-realization traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", parents=[common, dyn], help="synthetic dataset")
    p.add_argument("--sizes", type=_int_list, default=[26, 31, 26, 30, 22, 23])
    p.add_argument("--prompts", type=int, default=5)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, IngestError, MissingRatingsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
