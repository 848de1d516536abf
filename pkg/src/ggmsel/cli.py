"""Command-line front end: simulate, fit, select, eval, report.

Options can come from a JSON config file (--config); explicit flags win over
config values, which win over built-in defaults.  Exit codes: 0 success,
2 invalid configuration or input, 3 runtime failure (e.g. the solver failed
on every grid point).  All output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import io
from .errors import GGMError, InvalidGrid
from .estimator import GLASSO, MB, fit_path
from .evalharness import default_grid, mean_table, rank_table, run_scenarios
from .netstats import stats_record
from .selector import AIC, BIC, METHODS, SubsampleConfig, select_all
from .simgen import PRESETS, SimSpec, generate_replicate, preset_spec

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    with open(path) as handle:
        cfg = json.load(handle)
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object")
    return cfg


def _opt(args, cfg: dict, key: str, default):
    """Flag value if given, else config value, else the default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    return cfg.get(key, default)


def _build_grid(args, cfg: dict, n: int) -> np.ndarray:
    base = default_grid(n)
    gmin = float(_opt(args, cfg, "grid_min", base[0]))
    gmax = float(_opt(args, cfg, "grid_max", base[-1]))
    count = int(_opt(args, cfg, "grid_count", base.size))
    if count < 2:
        raise ValueError("grid count must be at least 2")
    if not gmin < gmax:
        raise ValueError("grid min must be below grid max")
    return np.linspace(gmin, gmax, count)


def _parse_methods(raw: str) -> list:
    if raw in (None, "", "all"):
        return list(METHODS)
    methods = [tok.strip() for tok in raw.split(",") if tok.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; valid: {', '.join(METHODS)}")
    return methods


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    preset = _opt(args, cfg, "preset", None)
    spec_path = _opt(args, cfg, "spec", None)
    seed = int(_opt(args, cfg, "seed", 0))
    n = _opt(args, cfg, "n", None)
    reps = int(_opt(args, cfg, "reps", 1))
    out = _opt(args, cfg, "out", "sim_out")

    if preset:
        spec = preset_spec(preset, n=int(n) if n is not None else 100, seed=seed)
    elif spec_path:
        raw = io.read_json(spec_path)
        if n is not None:
            raw["n"] = int(n)
        if getattr(args, "seed", None) is not None or "seed" not in raw:
            raw["seed"] = seed
        spec = SimSpec(**raw)
    else:
        raise ValueError("simulate needs --preset or --spec "
                         f"(presets: {', '.join(sorted(PRESETS))})")

    os.makedirs(out, exist_ok=True)
    io.write_json(os.path.join(out, "spec.json"), asdict(spec))
    manifest = {"spec": asdict(spec), "replicates": reps, "files": []}
    for rep in range(reps):
        gt, x = generate_replicate(spec, rep)
        names = {
            "edges": f"truth_edges_{rep:03d}.tsv",
            "precision": f"precision_{rep:03d}.tsv",
            "clusters": f"clusters_{rep:03d}.tsv",
            "data": f"data_{rep:03d}.csv",
        }
        io.write_edges_tsv(os.path.join(out, names["edges"]), gt.graph.adjacency)
        io.write_matrix_tsv(os.path.join(out, names["precision"]), gt.omega)
        io.write_clusters_tsv(os.path.join(out, names["clusters"]),
                              gt.cluster_assignment)
        io.write_data_csv(os.path.join(out, names["data"]), x)
        manifest["files"].append({"replicate": rep, "delta": gt.delta,
                                  "edges_true": int(gt.graph.adjacency.sum() // 2),
                                  **names})
    io.write_json(os.path.join(out, "manifest.json"), manifest)
    print(f"simulate: wrote {reps} replicate(s) of {spec.topology} "
          f"p={spec.p} n={spec.n} to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    path_in = _opt(args, cfg, "input", None)
    if not path_in:
        raise ValueError("fit needs --input")
    estimator = _opt(args, cfg, "estimator", GLASSO)
    if estimator not in (GLASSO, MB):
        raise ValueError("estimator must be 'glasso' or 'mb'")
    tol = float(_opt(args, cfg, "tol", 1e-4))
    out = _opt(args, cfg, "out", "fit_out")
    x = io.read_data(path_in)
    grid = _build_grid(args, cfg, x.shape[0])

    path = fit_path(x, grid, method=estimator, tol=tol,
                    penalize_diagonal=bool(_opt(args, cfg, "penalize_diagonal",
                                                False)),
                    mb_rule=_opt(args, cfg, "mb_rule", "or"))
    usable = sum(est is not None for est in path.estimates)
    for k, msg in sorted(path.errors.items()):
        print(f"warning: grid point {k} (lambda={grid[k]:.4f}) failed: {msg}",
              file=sys.stderr)
    if usable == 0:
        print("error: estimation failed on every grid point", file=sys.stderr)
        return EXIT_RUNTIME

    os.makedirs(out, exist_ok=True)
    files = []
    converged = []
    for k in range(grid.size):
        est = path.estimates[k]
        if est is None:
            files.append(None)
            converged.append(None)
            continue
        name = f"edges_{k:03d}.tsv"
        matrix = est.omega if estimator == GLASSO else est
        io.write_edges_tsv(os.path.join(out, name), matrix)
        files.append(name)
        converged.append(bool(est.converged) if estimator == GLASSO else True)
    io.write_json(os.path.join(out, "metadata.json"), {
        "estimator": estimator, "grid": grid, "p": x.shape[1], "n": x.shape[0],
        "tol": tol, "options": path.options, "files": files,
        "converged": converged,
        "errors": {str(k): v for k, v in path.errors.items()},
    })
    print(f"fit: {estimator} on {x.shape[0]}x{x.shape[1]} data, "
          f"{usable}/{grid.size} grid points -> {out}")
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _load_config(args)
    path_in = _opt(args, cfg, "input", None)
    if not path_in:
        raise ValueError("select needs --input")
    estimator = _opt(args, cfg, "estimator", GLASSO)
    if estimator not in (GLASSO, MB):
        raise ValueError("estimator must be 'glasso' or 'mb'")
    methods = _parse_methods(_opt(args, cfg, "methods", "all"))
    if estimator == MB and (AIC in methods or BIC in methods):
        print("error: AIC/BIC require GLasso precision estimates; "
              "drop them or use --estimator glasso", file=sys.stderr)
        return EXIT_VALIDATION
    seed = int(_opt(args, cfg, "seed", 0))
    out = _opt(args, cfg, "out", "select_out")
    x = io.read_data(path_in)
    grid = _build_grid(args, cfg, x.shape[0])
    sub_cfg = SubsampleConfig(
        t=int(_opt(args, cfg, "subsamples", 50)),
        size=_opt(args, cfg, "subsample_size", None),
        seed=seed)

    report = select_all(
        x, grid, methods, estimator=estimator, cfg=sub_cfg,
        q=float(_opt(args, cfg, "q", 2.0)),
        beta=float(_opt(args, cfg, "beta", 0.05)),
        linkage=_opt(args, cfg, "linkage", "wpgma"),
        pc_variant=_opt(args, cfg, "pc_variant", "forward"),
        tol=float(_opt(args, cfg, "tol", 1e-4)),
        penalize_diagonal=bool(_opt(args, cfg, "penalize_diagonal", False)),
        mb_rule=_opt(args, cfg, "mb_rule", "or"),
        jobs=int(_opt(args, cfg, "jobs", 1)))

    for k, msg in sorted(report.path.errors.items()):
        print(f"warning: grid point {k} (lambda={grid[k]:.4f}) failed: {msg}",
              file=sys.stderr)
    if all(est is None for est in report.path.estimates):
        print("error: estimation failed on every grid point", file=sys.stderr)
        return EXIT_RUNTIME

    os.makedirs(out, exist_ok=True)
    io.write_json(os.path.join(out, "report.json"),
                  io.report_record(report, estimator, x.shape[1], x.shape[0]))
    literal_eta = bool(_opt(args, cfg, "literal_eta", False))
    io.write_jsonl(os.path.join(out, "netstats.jsonl"),
                   (stats_record(grid[k], adj, literal_eta=literal_eta)
                    for k in range(grid.size)
                    if (adj := report.path.adjacency(k)) is not None))

    for name in methods:
        curve = report.curves.get(name)
        if curve is None:
            print(f"{name}: failed ({report.errors.get(name, 'unknown error')})",
                  file=sys.stderr)
            continue
        if curve.selected_index is not None:
            adj = report.path.adjacency(curve.selected_index)
            io.write_edges_tsv(os.path.join(out, f"selected_{name}.tsv"), adj)
            edges = int(adj.sum() // 2)
            extra = f" edges={edges}"
        else:
            extra = ""
        flag_str = f" flags={','.join(curve.flags)}" if curve.flags else ""
        lam_str = ("none" if curve.selected_lambda is None
                   else f"{curve.selected_lambda:.4f}")
        print(f"{name}: lambda={lam_str}{extra}{flag_str}")
    return EXIT_OK


def _eval_files(args, cfg) -> int:
    truth_dir = _opt(args, cfg, "truth_dir", None)
    select_dir = _opt(args, cfg, "select_dir", None)
    rep = int(_opt(args, cfg, "rep", 0))
    out = _opt(args, cfg, "out", "eval_out")
    spec = io.read_json(os.path.join(truth_dir, "spec.json"))
    report = io.read_json(os.path.join(select_dir, "report.json"))
    if int(spec["p"]) != int(report["p"]):
        print(f"error: ground truth has p={spec['p']} but the report has "
              f"p={report['p']}", file=sys.stderr)
        return EXIT_VALIDATION
    p = int(spec["p"])
    truth_adj = io.read_edges_tsv(
        os.path.join(truth_dir, f"truth_edges_{rep:03d}.tsv"), p)

    from .evalharness import network_stat_errors, recovery

    rows = []
    for name, block in sorted(report["methods"].items()):
        sel_path = os.path.join(select_dir, f"selected_{name}.tsv")
        if block.get("selected_lambda") is None or not os.path.exists(sel_path):
            continue
        est_adj = io.read_edges_tsv(sel_path, p)
        score = recovery(est_adj, truth_adj)
        errs = network_stat_errors(est_adj, truth_adj)
        rows.append({"method": name, "lambda": block["selected_lambda"],
                     "tp": score.tp, "fp": score.fp, "fn": score.fn,
                     "tn": score.tn, "tdr": score.tdr,
                     **{f"err_{key}": val for key, val in errs.items()}})
    import pandas as pd

    frame = pd.DataFrame(rows).set_index("method")
    os.makedirs(out, exist_ok=True)
    with io.atomic_open(os.path.join(out, "recovery.csv")) as handle:
        frame.to_csv(handle)
    print(frame.to_string())
    return EXIT_OK


def _eval_suite(args, cfg) -> int:
    presets = [tok.strip() for tok in
               str(_opt(args, cfg, "presets", "p50-hubs")).split(",") if tok.strip()]
    n_list = [int(tok) for tok in
              str(_opt(args, cfg, "n_list", "100")).split(",") if tok.strip()]
    reps = int(_opt(args, cfg, "reps", 10))
    seed = int(_opt(args, cfg, "seed", 0))
    estimator = _opt(args, cfg, "estimator", GLASSO)
    methods = _parse_methods(_opt(args, cfg, "methods", "all"))
    if estimator == MB and (AIC in methods or BIC in methods):
        print("error: AIC/BIC require GLasso precision estimates", file=sys.stderr)
        return EXIT_VALIDATION
    jobs = int(_opt(args, cfg, "jobs", 1))
    t_subsamples = int(_opt(args, cfg, "subsamples", 50))
    out = _opt(args, cfg, "out", "eval_out")

    specs = [(preset, _spec_with_n(preset, n, seed))
             for preset in presets for n in n_list]
    records = run_scenarios(specs, reps, methods=methods, estimator=estimator,
                            jobs=jobs, t_subsamples=t_subsamples)
    os.makedirs(out, exist_ok=True)
    io.write_jsonl(os.path.join(out, "records.jsonl"), records)
    written = ["records.jsonl"]
    for metric in ("mse_dissim", "mse_precision", "err_harmonic", "err_ac",
                   "err_estrada", "err_ad", "err_degree"):
        table = rank_table(records, metric)
        if table.empty:
            continue
        name = f"rank_{metric}.csv"
        with io.atomic_open(os.path.join(out, name)) as handle:
            table.to_csv(handle)
        written.append(name)
    for metric in ("tdr", "lambda"):
        table = mean_table(records, metric)
        if table.empty:
            continue
        name = f"mean_{metric}.csv"
        with io.atomic_open(os.path.join(out, name)) as handle:
            table.to_csv(handle)
        written.append(name)
    print(f"eval: {len(records)} replicate records -> {out} "
          f"({', '.join(written)})")
    return EXIT_OK


def _spec_with_n(preset: str, n: int, seed: int) -> SimSpec:
    return preset_spec(preset, n=n, seed=seed)


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    truth_dir = _opt(args, cfg, "truth_dir", None)
    select_dir = _opt(args, cfg, "select_dir", None)
    if (truth_dir is None) != (select_dir is None):
        raise ValueError("file-mode eval needs both --truth-dir and --select-dir")
    if truth_dir is not None:
        return _eval_files(args, cfg)
    return _eval_suite(args, cfg)


def cmd_report(args) -> int:
    cfg = _load_config(args)
    path_in = _opt(args, cfg, "input", None)
    if not path_in:
        raise ValueError("report needs --input (a select or eval output dir)")
    out = _opt(args, cfg, "out", None) or path_in

    from . import report as report_mod

    if os.path.exists(os.path.join(path_in, "report.json")):
        files = report_mod.render_select_report(path_in, out)
    elif os.path.exists(os.path.join(path_in, "records.jsonl")):
        files = report_mod.render_eval_report(path_in, out)
    else:
        raise ValueError(f"{path_in} holds neither report.json nor records.jsonl")
    print("report: wrote " + ", ".join(files))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggmsel",
        description="Sparse conditional-dependence graphs with "
                    "network-characteristic penalty selection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="top-level seed (default 0)")

    def grid_flags(sp):
        sp.add_argument("--grid-min", dest="grid_min", type=float)
        sp.add_argument("--grid-max", dest="grid_max", type=float)
        sp.add_argument("--grid-count", dest="grid_count", type=int)
        sp.add_argument("--estimator", choices=(GLASSO, MB))
        sp.add_argument("--tol", type=float)
        sp.add_argument("--penalize-diagonal", dest="penalize_diagonal",
                        action="store_true", default=None)
        sp.add_argument("--mb-rule", dest="mb_rule", choices=("or", "and"))

    sp = sub.add_parser("simulate", help="generate synthetic ground truth + data")
    common(sp)
    sp.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    sp.add_argument("--spec", help="SimSpec JSON file (alternative to --preset)")
    sp.add_argument("--n", type=int, help="sample size")
    sp.add_argument("--reps", type=int, help="number of replicates (default 1)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit the penalty path on a data matrix")
    common(sp)
    sp.add_argument("--input", help="CSV/TSV data matrix (rows = observations)")
    grid_flags(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("select", help="fit + run penalty selection methods")
    common(sp)
    sp.add_argument("--input", help="CSV/TSV data matrix (rows = observations)")
    grid_flags(sp)
    sp.add_argument("--methods",
                    help="comma list of pc,amse,agnes,stars,aic,bic (default all)")
    sp.add_argument("--subsamples", type=int, help="subsample count T (default 50)")
    sp.add_argument("--subsample-size", dest="subsample_size", type=int,
                    help="override the per-method subsample size rules")
    sp.add_argument("--beta", type=float, help="StARS instability bound (default 0.05)")
    sp.add_argument("--q", type=float, help="A-MSE deviation exponent (default 2)")
    sp.add_argument("--pc-variant", dest="pc_variant",
                    choices=("forward", "backward"))
    sp.add_argument("--linkage", choices=("wpgma", "upgma"))
    sp.add_argument("--literal-eta", dest="literal_eta", action="store_true",
                    default=None,
                    help="shared-neighbor counts without the adjacency term "
                         "in the exported statistics")
    sp.add_argument("--jobs", type=int, help="threads for subsample refits")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("eval", help="score selections against ground truth")
    common(sp)
    sp.add_argument("--truth-dir", dest="truth_dir",
                    help="simulate output dir (file mode)")
    sp.add_argument("--select-dir", dest="select_dir",
                    help="select output dir (file mode)")
    sp.add_argument("--rep", type=int, help="replicate index in file mode")
    sp.add_argument("--presets", help="comma list of presets (suite mode)")
    sp.add_argument("--n-list", dest="n_list", help="comma list of sample sizes")
    sp.add_argument("--reps", type=int, help="replicates per scenario")
    sp.add_argument("--methods", help="comma list of methods (default all)")
    sp.add_argument("--estimator", choices=(GLASSO, MB))
    sp.add_argument("--subsamples", type=int)
    sp.add_argument("--jobs", type=int, help="threads across replicates")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("report", help="render figures + summary tables")
    common(sp)
    sp.add_argument("--input", help="select or eval output directory")
    sp.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (ValueError, InvalidGrid, OSError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GGMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 — last-resort runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
