"""Command line: sigl {estimate,sweep,ablate,parametric,mixup,eval}."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .baselines import SAS, USVT, write_matrix_csv
from .errors import SiglInputError
from .estimator import SiglConfig, save_result, sample_estimate
from .experiments import (METHODS, RESULT_FIELDS, SIGL, ResultRow, dataset_sizes, run_trial)
from .graphons import CATALOG_IDS, Graphon, Learned, Synthetic, discretize
from .gw import gw_distance
from .heatmap import write_heatmap
from .nn import SirenInr, load_json
from .rng import stream

log = logging.getLogger("sigl")

HEATMAP_RESOLUTION = 200


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _methods(text: str) -> list:
    out = [m.strip().lower() for m in str(text).split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    return out


def _graphon_id(text: str) -> int:
    try:
        gid = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"graphon id must be an integer, got {text!r}")
    if gid not in CATALOG_IDS:
        raise argparse.ArgumentTypeError(f"unknown graphon id {gid}; expected 1..13")
    return gid


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_common(p: argparse.ArgumentParser, trials: int) -> None:
    p.add_argument("--config", help="JSON file of flag defaults; command-line flags win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default runs/<command>)")
    p.add_argument("--trials", type=_positive, default=trials)
    p.add_argument("--resolution", type=_positive, default=1000, help="evaluation grid size R")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--timings", choices=("log", "csv"), default="log",
                   help="where measured wall times go: timings.csv only (log) or also results.csv")
    p.add_argument("--epochs-step1", type=int, default=100)
    p.add_argument("--epochs-step3", type=int, default=100)


def _add_estimation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graphon", type=_graphon_id, required=True)
    p.add_argument("--methods", type=_methods, default=list(METHODS))
    p.add_argument("--window", type=_positive, default=None, help="pooling window (default round(ln n))")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="TV weight for sas")
    p.add_argument("--aggregate", choices=("best", "mean"), default="best",
                   help="baseline score over the graphs of a trial")
    p.add_argument("--padding", choices=("nearest", "zero"), default="nearest")
    p.add_argument("--no-models", action="store_true", help="skip model files and heatmaps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigl", description="Graphon estimation with implicit neural representations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="single-graphon estimation trials")
    _add_common(p, 10)
    _add_estimation(p)
    p.add_argument("--offset", type=int, default=0, help="added to every graph size")

    p = sub.add_parser("sweep", help="estimation over node-count offsets")
    _add_common(p, 10)
    _add_estimation(p)
    p.add_argument("--offsets", type=_int_list, default=[0, 175, 325, 575, 825, 2000])

    p = sub.add_parser("ablate", help="vary the number of graphs or the pooling window")
    _add_common(p, 10)
    _add_estimation(p)
    p.add_argument("--axis", choices=("num_graphs", "window"), default="num_graphs")
    p.add_argument("--values", type=_int_list, default=None,
                   help="axis values (default 3..10 graphs, or windows 3,5,7)")

    p = sub.add_parser("parametric", help="fit one model to a parametric graphon family")
    _add_common(p, 3)
    p.add_argument("--family", choices=("mono", "sbm"), default="mono")
    p.add_argument("--alphas", type=_float_list, default=None)
    p.add_argument("--pretrain-graphon", type=_graphon_id, default=3)
    p.add_argument("--no-single", action="store_true", help="skip the per-alpha single-graphon reference")

    p = sub.add_parser("mixup", help="sample graphs from a mixture of two graphons")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--left", required=True, help="catalog id or path to a saved INR document")
    p.add_argument("--right", required=True, help="catalog id or path to a saved INR document")
    p.add_argument("--lambda", dest="lam", type=_float_list, default=[0.1, 0.2],
                   help="mixing weight, or lo,hi to draw it uniformly")
    p.add_argument("--count", type=_positive, default=10)
    p.add_argument("--sizes", type=_int_list, default=[75, 300], help="n_min,n_max")

    p = sub.add_parser("eval", help="GW distance between two saved grids (CSV)")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("grid_a")
    p.add_argument("grid_b")
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    # the config is read before the real parse so it can satisfy required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((t for t in rest if t in COMMANDS), None)
    if known.config and command:
        try:
            with open(known.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {known.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
        sp = sub.choices[command]
        acts = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest == "lambda":
                dest = "lam"
            if dest not in acts or dest in ("config", "help"):
                parser.error(f"unknown config key {key!r} for {command}")
            act = acts[dest]
            try:
                if isinstance(value, list) and act.type in (_int_list, _float_list, _methods):
                    value = act.type(",".join(str(v) for v in value))
                elif act.type is not None and isinstance(value, (str, int, float)) and not isinstance(value, bool):
                    value = act.type(str(value)) if act.type in (_int_list, _float_list, _methods) else act.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                parser.error(f"config key {key!r}: {exc}")
            if act.choices is not None and value not in act.choices:
                parser.error(f"config key {key!r}: {value!r} is not one of {sorted(act.choices)}")
            defaults[dest] = value
            act.required = False
        sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _setup_out(args) -> str:
    out = args.out or os.path.join("runs", args.command)
    os.makedirs(out, exist_ok=True)
    handler = logging.FileHandler(os.path.join(out, "run.log"), mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)
    log.propagate = False
    return out


def _write_results(path: str, rows, include_time: bool) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow(r.cells(include_time))


def _write_timings(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "graphon_id", "trial", "n_max", "offset", "wall_time_seconds"])
        for r in rows:
            w.writerow([r.method, r.graphon_id, r.trial, r.n_max, "" if r.offset is None else r.offset,
                        repr(r.wall_time_seconds)])


def _sigl_config(args) -> SiglConfig:
    return SiglConfig(epochs_step1=args.epochs_step1, epochs_step3=args.epochs_step3)


def _trial_job(job: dict):
    """One (setting, trial) unit; returns result rows or raises."""
    args = job["args"]
    spec = Synthetic(args.graphon)
    outcomes = run_trial(spec, job["trial"], args.seed, job["methods"], job["offset"], job["num_graphs"],
                         job["window"], args.resolution, args.lam, args.aggregate, args.padding,
                         _sigl_config(args))
    n_max = max(dataset_sizes(job["offset"], job["num_graphs"]))
    rows = []
    for o in outcomes:
        label = o.method + job["suffix"]
        rows.append(ResultRow(label, str(args.graphon), job["trial"], n_max, job["offset_col"],
                              float(o.gw_error), float(o.wall_time), o.tau, o.eps_tr))
        if not args.no_models:
            mdir = os.path.join(job["out"], "models", f"{label}_trial{job['trial']:02d}{job['tag']}")
            os.makedirs(mdir, exist_ok=True)
            if o.method == SIGL:
                save_result(o.result, mdir)
                est = sample_estimate(o.result.inr, HEATMAP_RESOLUTION).values
            else:
                write_matrix_csv(o.estimate, os.path.join(mdir, f"{o.method}.csv"))
                est = o.estimate
            write_heatmap(est, os.path.join(mdir, "estimate.svg"), f"{label} trial {job['trial']}")
    return rows


def _run_jobs(jobs, workers: int):
    results, failed = {}, []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = {i: ex.submit(_trial_job, j) for i, j in enumerate(jobs)}
            for i, f in futures.items():
                try:
                    results[i] = f.result()
                except Exception as exc:  # report and continue with the other trials
                    failed.append((jobs[i], exc))
    else:
        for i, j in enumerate(jobs):
            try:
                results[i] = _trial_job(j)
            except Exception as exc:
                failed.append((j, exc))
    rows = [r for i in sorted(results) for r in results[i]]
    return rows, failed


def _estimation_command(args, settings) -> int:
    """settings: list of (offset, num_graphs, window, suffix, offset_col, tag)."""
    out = _setup_out(args)
    log.info("command=%s graphon=%s trials=%d seed=%d", args.command, args.graphon, args.trials, args.seed)
    if not args.no_models:
        write_heatmap(discretize(Synthetic(args.graphon), HEATMAP_RESOLUTION).values,
                      os.path.join(out, "true_graphon.svg"), f"graphon {args.graphon}")
    jobs = []
    for offset, num_graphs, window, suffix, offset_col, tag in settings:
        for trial in range(args.trials):
            jobs.append(dict(args=args, trial=trial, methods=args.methods, offset=offset, num_graphs=num_graphs,
                             window=window, suffix=suffix, offset_col=offset_col, tag=tag, out=out))
    rows, failed = _run_jobs(jobs, args.workers)
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (order.get(r.method.split("@")[0], 99), r.method,
                             -1 if r.offset is None else r.offset, r.trial))
    _write_results(os.path.join(out, "results.csv"), rows, args.timings == "csv")
    _write_timings(os.path.join(out, "timings.csv"), rows)
    for r in rows:
        log.info("done method=%s trial=%d offset=%s gw=%.6f time=%.3fs", r.method, r.trial, r.offset,
                 r.gw_error, r.wall_time_seconds)
    if failed:
        idx = sorted({j["trial"] for j, _ in failed})
        for j, exc in failed:
            log.error("trial %d failed: %s", j["trial"], exc)
        print(f"failed trials: {','.join(str(i) for i in idx)}", file=sys.stderr)
        for j, exc in failed:
            print(f"  trial {j['trial']} (offset {j['offset']}): {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_estimate(args) -> int:
    return _estimation_command(args, [(args.offset, 10, args.window, "", args.offset, "")])


def cmd_sweep(args) -> int:
    if not args.offsets:
        raise SiglInputError("--offsets must list at least one offset")
    return _estimation_command(args, [(o, 10, args.window, "", o, f"_off{o}") for o in args.offsets])


def cmd_ablate(args) -> int:
    if args.axis == "num_graphs":
        values = args.values or list(range(3, 11))
        settings = [(0, v, args.window, f"@graphs={v}", 0, f"_g{v}") for v in values]
    else:
        values = args.values or [3, 5, 7]
        settings = [(0, 10, v, f"@window={v}", 0, f"_w{v}") for v in values]
    return _estimation_command(args, settings)


def cmd_parametric(args) -> int:
    from .parametric import default_alphas, pretrain_sorter, run_family_trial, z_alpha_correlation

    out = _setup_out(args)
    alphas = args.alphas or list(default_alphas(args.family))
    cfg = _sigl_config(args)
    log.info("parametric family=%s alphas=%s trials=%d", args.family, alphas, args.trials)
    sorter = pretrain_sorter(Synthetic(args.pretrain_graphon), cfg, seed=args.seed)
    rows, groups, scatter, timing = [], [], [], []
    failed = []
    for trial in range(args.trials):
        try:
            res = run_family_trial(args.family, sorter, alphas, seed=args.seed * 1000 + trial, config=cfg,
                                   R=args.resolution, single=not args.no_single)
        except Exception as exc:
            failed.append((trial, exc))
            continue
        for i, a in enumerate(alphas):
            gid = f"{args.family}:{a!r}"
            rows.append(ResultRow("sigl-family", gid, trial, None, None, res.grouped_error[i], res.wall_time))
            if res.single_error:
                rows.append(ResultRow("sigl-single", gid, trial, None, None, res.single_error[i]))
            groups.append([trial, repr(a), repr(res.mean_z[i]), repr(res.grouped_error[i]),
                           repr(res.single_error[i]) if res.single_error else ""])
        scatter += [[trial, repr(a), repr(z)] for a, z in res.test_z]
    rows.sort(key=lambda r: (r.method, r.trial))
    _write_results(os.path.join(out, "results.csv"), rows, args.timings == "csv")
    _write_timings(os.path.join(out, "timings.csv"), [r for r in rows if r.wall_time_seconds is not None])
    with open(os.path.join(out, "groups.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "alpha", "mean_z", "grouped_gw_error", "single_gw_error"])
        w.writerows(groups)
    with open(os.path.join(out, "z_scatter.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "alpha", "z"])
        w.writerows(scatter)
    if groups:
        mz = [float(np.mean([float(g[2]) for g in groups if float(g[1]) == a])) for a in alphas]
        log.info("spearman(alpha, mean z) = %.4f", z_alpha_correlation(alphas, mz))
    if failed:
        print(f"failed trials: {','.join(str(t) for t, _ in failed)}", file=sys.stderr)
        for t, exc in failed:
            print(f"  trial {t}: {exc}", file=sys.stderr)
        return 1
    return 0


def _load_graphon(text: str) -> tuple[Graphon, str]:
    try:
        return Synthetic(int(text)), str(int(text))
    except ValueError:
        pass
    return Learned(SirenInr.from_dict(load_json(text))), os.path.basename(text)


def cmd_mixup(args) -> int:
    from .mixup import MixupRecipe, export_augmented, generate_augmented

    out = _setup_out(args)
    left, lname = _load_graphon(args.left)
    right, rname = _load_graphon(args.right)
    if len(args.lam) == 1:
        lam = args.lam[0]
    elif len(args.lam) == 2:
        lo, hi = args.lam
        if not 0.0 <= lo <= hi <= 1.0:
            raise SiglInputError("--lambda range must satisfy 0 <= lo <= hi <= 1")
        lam = float(lo + (hi - lo) * stream(args.seed, 53).random())
    else:
        raise SiglInputError("--lambda takes one value or a lo,hi range")
    if len(args.sizes) != 2:
        raise SiglInputError("--sizes takes n_min,n_max")
    recipe = MixupRecipe(lam, left, right, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    samples = generate_augmented(recipe, args.count, args.sizes, args.seed)
    export_augmented(samples, os.path.join(out, "graphs"))
    gid = f"{lname}+{rname}@{lam!r}"
    rows = [ResultRow("mixup", gid, i, g.n) for i, (g, _) in enumerate(samples)]
    _write_results(os.path.join(out, "results.csv"), rows, False)
    log.info("mixup lambda=%r count=%d", lam, args.count)
    return 0


def _read_grid(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            g = np.array([[float(v) for v in row] for row in csv.reader(fh) if row])
    except (OSError, ValueError) as exc:
        raise SiglInputError(f"cannot read grid {path}: {exc}") from exc
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise SiglInputError(f"{path} does not hold a square matrix")
    return g


def cmd_eval(args) -> int:
    a, b = _read_grid(args.grid_a), _read_grid(args.grid_b)
    d = gw_distance(a, b, seed=args.seed).distance
    print(repr(d))
    if args.out:
        _setup_out(args)
        _write_results(os.path.join(args.out, "results.csv"),
                       [ResultRow("eval", f"{os.path.basename(args.grid_a)}|{os.path.basename(args.grid_b)}",
                                  0, max(a.shape[0], b.shape[0]), None, d)], False)
    return 0


COMMANDS = {"estimate": cmd_estimate, "sweep": cmd_sweep, "ablate": cmd_ablate,
            "parametric": cmd_parametric, "mixup": cmd_mixup, "eval": cmd_eval}


def main(argv: Optional[list] = None) -> int:
    args = _parse(argv)
    try:
        return COMMANDS[args.command](args)
    except SiglInputError as exc:
        print(f"sigl {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
