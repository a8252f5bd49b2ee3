"""Command-line front end: simulate, analyze, evaluate, theory.

Every command takes an optional flat JSON config file; flags given on the
command line override file values, which override built-in defaults. All
outputs land under --out together with a manifest listing the files and a
hash of the effective configuration, and reruns with the same inputs write
byte-identical artifacts.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import importlib.resources
import json
import os
import sys
from dataclasses import replace

import jsonschema

from . import eval as eval_mod
from . import indexing, synth, theory, wgc
from .nar import NarConfig, derive_model_seed, fit
from .series import (
    SeriesError,
    SplitSpec,
    WindowSpec,
    difference_to_stationary,
    load_csv,
    save_csv,
    windows,
)

__all__ = ["main", "build_parser"]


class ConfigError(ValueError):
    """Bad command configuration (maps to exit code 2)."""


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a flat JSON object")
    for key, value in doc.items():
        if isinstance(value, (dict,)):
            raise ConfigError(f"config key {key!r} is nested; the file must stay flat")
    return doc


def _resolve(ns: argparse.Namespace, file_cfg: dict, key: str, default):
    """Precedence: explicit flag, then config file, then default."""
    flag = getattr(ns, key, None)
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _parse_lag(raw) -> "int | str":
    if raw is None or raw == "random":
        return "random"
    try:
        return int(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"lag must be 'random' or an integer; got {raw!r}") from exc


def _parse_int_list(raw, key: str) -> list[int]:
    if isinstance(raw, (list, tuple)):
        return [int(v) for v in raw]
    try:
        return [int(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma-separated integer list") from exc


def _parse_float_list(raw, key: str) -> list[float]:
    if isinstance(raw, (list, tuple)):
        return [float(v) for v in raw]
    try:
        return [float(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma-separated number list") from exc


def _config_hash(effective: dict) -> str:
    canon = json.dumps(effective, sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _write_manifest(out_dir: str, command: str, effective: dict, files: list[str]) -> None:
    manifest = {
        "command": command,
        "config_hash": _config_hash(effective),
        "config": effective,
        "files": sorted(files),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(ns: argparse.Namespace, file_cfg: dict) -> str:
    out = _resolve(ns, file_cfg, "out", None)
    if not out:
        raise ConfigError("an output directory is required (--out DIR)")
    os.makedirs(out, exist_ok=True)
    return out


def _nar_config(ns: argparse.Namespace, file_cfg: dict, seed: int) -> NarConfig:
    return NarConfig(
        lag_order=int(_resolve(ns, file_cfg, "lag_order", 10)),
        hidden_units=int(_resolve(ns, file_cfg, "hidden_units", 16)),
        learning_rate=float(_resolve(ns, file_cfg, "learning_rate", 0.01)),
        max_epochs=int(_resolve(ns, file_cfg, "max_epochs", 500)),
        seed=seed,
    )


def _indexing_config(ns: argparse.Namespace, file_cfg: dict) -> indexing.IndexingConfig:
    return indexing.IndexingConfig(
        phi_learning_rate=float(_resolve(ns, file_cfg, "phi_learning_rate", 0.05)),
        phi_steps_per_outer=int(_resolve(ns, file_cfg, "phi_steps_per_outer", 1)),
        outer_max_iters=int(_resolve(ns, file_cfg, "outer_max_iters", 50)),
        converge_tol=float(_resolve(ns, file_cfg, "converge_tol", 1e-3)),
        regularizer=str(_resolve(ns, file_cfg, "regularizer", "off")),
    )


def cmd_simulate(ns: argparse.Namespace) -> int:
    file_cfg = _load_config_file(ns.config)
    kind = str(_resolve(ns, file_cfg, "kind", "ar"))
    if kind not in ("ar", "nar"):
        raise ConfigError(f"kind must be 'ar' or 'nar'; got {kind!r}")
    t_len = int(_resolve(ns, file_cfg, "T", 1000))
    lag = _parse_lag(_resolve(ns, file_cfg, "lag", "random"))
    seed = int(_resolve(ns, file_cfg, "seed", 0))
    out = _ensure_out(ns, file_cfg)

    if kind == "ar":
        noise = float(_resolve(ns, file_cfg, "noise_scale", 0.02))
        impulse_prob = float(_resolve(ns, file_cfg, "impulse_prob", 0.05))
        config = synth.ArSimConfig(
            T=t_len, lag=lag, noise_scale=noise, impulse_prob=impulse_prob, seed=seed
        )
        series, truth = synth.gen_ar(config)
        effective = {
            "kind": kind,
            "T": t_len,
            "lag": lag,
            "noise_scale": noise,
            "impulse_prob": impulse_prob,
            "seed": seed,
        }
    else:
        noise = float(_resolve(ns, file_cfg, "noise_scale", 1.0))
        config = synth.NarSimConfig(T=t_len, lag=lag, noise_scale=noise, seed=seed)
        series, truth = synth.gen_nar(config)
        effective = {
            "kind": kind,
            "T": t_len,
            "lag": lag,
            "noise_scale": noise,
            "seed": seed,
        }

    save_csv(series, os.path.join(out, "series.csv"))
    synth.save_ground_truth(truth, os.path.join(out, "truth.json"))
    _write_manifest(out, "simulate", effective, ["series.csv", "truth.json"])
    print(f"wrote series.csv and truth.json to {out}")
    return 0


def cmd_analyze(ns: argparse.Namespace) -> int:
    file_cfg = _load_config_file(ns.config)
    input_path = _resolve(ns, file_cfg, "input", None)
    if not input_path:
        raise ConfigError("an input CSV is required (--input FILE)")
    if not os.path.exists(input_path):
        raise ConfigError(f"input file not found: {input_path}")
    method = str(_resolve(ns, file_cfg, "method", "naive"))
    if method not in ("naive", "dwgc"):
        raise ConfigError(f"method must be 'naive' or 'dwgc'; got {method!r}")
    window_len = int(_resolve(ns, file_cfg, "window_len", 30))
    stride = _resolve(ns, file_cfg, "stride", None)
    stride = int(stride) if stride is not None else None
    train_fraction = float(_resolve(ns, file_cfg, "train_fraction", 0.3))
    epsilon = float(_resolve(ns, file_cfg, "epsilon", 1.0))
    alpha = float(_resolve(ns, file_cfg, "alpha", 6.0 / 5.0))
    seed = int(_resolve(ns, file_cfg, "seed", 0))
    max_diff_order = int(_resolve(ns, file_cfg, "max_diff_order", 2))
    time_column = bool(_resolve(ns, file_cfg, "time_column", False))
    out = _ensure_out(ns, file_cfg)

    series = load_csv(input_path, time_column=time_column)
    if series.n_channels < 2:
        raise ConfigError("analysis needs at least 2 channels")
    stat = difference_to_stationary(series, max_order=max_diff_order)
    nar_config = _nar_config(ns, file_cfg, seed)
    ntr = SplitSpec(train_fraction).train_size(stat.series.length, nar_config.lag_order)
    spec = WindowSpec(k=window_len, stride=stride, origin=ntr)
    pairs = [
        (t, s)
        for t in range(series.n_channels)
        for s in range(series.n_channels)
        if t != s
    ]

    effective = {
        "input": str(input_path),
        "method": method,
        "window_len": window_len,
        "stride": spec.stride,
        "train_fraction": train_fraction,
        "epsilon": epsilon,
        "alpha": alpha,
        "seed": seed,
        "max_diff_order": max_diff_order,
        "time_column": time_column,
        "lag_order": nar_config.lag_order,
        "hidden_units": nar_config.hidden_units,
        "learning_rate": nar_config.learning_rate,
        "max_epochs": nar_config.max_epochs,
    }

    files = ["results.csv"]
    if method == "naive":
        self_models = {}
        cause_models = {}
        for tgt in sorted({t for t, _ in pairs}):
            cfg = replace(nar_config, seed=derive_model_seed(seed, tgt, False))
            self_models[tgt] = fit(stat.series, tgt, None, (0, ntr), cfg)
        for tgt, src in sorted(pairs):
            cfg = replace(nar_config, seed=derive_model_seed(seed, tgt, True))
            cause_models[(tgt, src)] = fit(stat.series, tgt, src, (0, ntr), cfg)
        results = wgc.scan(stat.series, pairs, spec, epsilon, self_models, cause_models)
        wgc.results_to_csv(results, os.path.join(out, "results.csv"))
    else:
        idx_config = _indexing_config(ns, file_cfg)
        effective["phi_learning_rate"] = idx_config.phi_learning_rate
        effective["outer_max_iters"] = idx_config.outer_max_iters
        run = indexing.run_dwgc(
            stat.series,
            pairs,
            spec,
            nar_config,
            idx_config,
            epsilon,
            train_size=ntr,
            alpha=alpha,
        )
        wgc.results_to_csv(run.window_results, os.path.join(out, "results.csv"))
        indexing.write_phi_csv(
            run.phi, stat.series.channel_names, os.path.join(out, "phi.csv")
        )
        indexing.write_point_links_csv(
            run.point_links, stat.series.channel_names, os.path.join(out, "links.csv")
        )
        indexing.write_trace_jsonl(run.trace, os.path.join(out, "trace.jsonl"))
        files += ["phi.csv", "links.csv", "trace.jsonl"]

    _write_manifest(out, "analyze", effective, files)
    n_causal = (
        sum(1 for r in results if r.causal)
        if method == "naive"
        else sum(1 for r in run.window_results if r.causal)
    )
    print(f"analyzed {series.n_channels} channels; {n_causal} causal window-pairs")
    return 0


_METHOD_ALIASES = {"naive": "naive_dwgc", "naive_dwgc": "naive_dwgc", "dwgc": "dwgc"}


def _load_report_schema() -> dict:
    text = (
        importlib.resources.files("dwgc")
        .joinpath("schemas/report.schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def cmd_evaluate(ns: argparse.Namespace) -> int:
    file_cfg = _load_config_file(ns.config)
    dataset = str(_resolve(ns, file_cfg, "dataset", "ar"))
    if dataset not in ("ar", "nar"):
        raise ConfigError(f"dataset must be 'ar' or 'nar'; got {dataset!r}")
    methods_raw = _resolve(ns, file_cfg, "methods", "naive")
    methods = []
    for tok in str(methods_raw).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok not in _METHOD_ALIASES:
            raise ConfigError(f"unknown method {tok!r} (use naive and/or dwgc)")
        methods.append(_METHOD_ALIASES[tok])
    if not methods:
        raise ConfigError("at least one method is required")
    lengths = _parse_int_list(_resolve(ns, file_cfg, "lengths", "10,20,30,100"), "lengths")
    n_seeds = int(_resolve(ns, file_cfg, "seeds", 20))
    if n_seeds < 1:
        raise ConfigError("seeds must be >= 1")
    jobs = int(_resolve(ns, file_cfg, "jobs", 1))
    epsilon = float(_resolve(ns, file_cfg, "epsilon", 1.0))
    train_fraction = float(_resolve(ns, file_cfg, "train_fraction", 0.3))
    t_len = int(_resolve(ns, file_cfg, "T", 1000))
    lag = _parse_lag(_resolve(ns, file_cfg, "lag", "random"))
    out = _ensure_out(ns, file_cfg)

    if dataset == "ar":
        data_config = synth.ArSimConfig(T=t_len, lag=lag)
    else:
        data_config = synth.NarSimConfig(T=t_len, lag=lag)
    nar_config = _nar_config(ns, file_cfg, 0)
    idx_config = _indexing_config(ns, file_cfg)

    reports = []
    texts = []
    for method in methods:
        report = eval_mod.sweep(
            data_config,
            method=method,
            window_lengths=tuple(lengths),
            n_seeds=n_seeds,
            nar_config=nar_config,
            indexing_config=idx_config,
            epsilon=epsilon,
            train_fraction=train_fraction,
            jobs=jobs,
        )
        reports.append(report)
        texts.append(eval_mod.report_to_text(report))

    doc = {"reports": [eval_mod.report_to_dict(r) for r in reports]}
    jsonschema.validate(doc, _load_report_schema())
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n\n".join(texts) + "\n")

    effective = {
        "dataset": dataset,
        "methods": ",".join(methods),
        "lengths": lengths,
        "seeds": n_seeds,
        "jobs": jobs,
        "epsilon": epsilon,
        "train_fraction": train_fraction,
        "T": t_len,
        "lag": lag,
    }
    _write_manifest(out, "evaluate", effective, ["report.json", "report.txt"])
    print("\n\n".join(texts))
    return 0


def cmd_theory(ns: argparse.Namespace) -> int:
    file_cfg = _load_config_file(ns.config)
    lengths = _parse_int_list(_resolve(ns, file_cfg, "lengths", "10,20,30,100"), "lengths")
    n_seeds = int(_resolve(ns, file_cfg, "seeds", 20))
    if n_seeds < 1:
        raise ConfigError("seeds must be >= 1")
    n_samples = int(_resolve(ns, file_cfg, "n_samples", 10000))
    sigma0s = _parse_float_list(_resolve(ns, file_cfg, "sigma0s", "0.5,1.0"), "sigma0s")
    t_len = int(_resolve(ns, file_cfg, "T", 1000))
    lag = _parse_lag(_resolve(ns, file_cfg, "lag", "random"))
    jobs = int(_resolve(ns, file_cfg, "jobs", 1))
    seed = int(_resolve(ns, file_cfg, "seed", 0))
    epsilon = float(_resolve(ns, file_cfg, "epsilon", 1.0))
    train_fraction = float(_resolve(ns, file_cfg, "train_fraction", 0.3))
    out = _ensure_out(ns, file_cfg)

    ar_config = synth.ArSimConfig(T=t_len, lag=lag)
    nar_config = _nar_config(ns, file_cfg, 0)
    result = eval_mod.theorem1_check(
        ar_config,
        window_lengths=tuple(lengths),
        n_seeds=n_seeds,
        nar_config=nar_config,
        epsilon=epsilon,
        train_fraction=train_fraction,
        jobs=jobs,
    )
    eval_mod.theorem1_to_json(result, os.path.join(out, "theorem1.json"))
    eval_mod.scatter_to_csv(result, os.path.join(out, "theorem1_scatter.csv"))

    summaries = theory.grid_summary(lengths, sigma0s, n_samples=n_samples, seed=seed)
    theory.write_grid_json(summaries, os.path.join(out, "cross_term.json"))

    effective = {
        "lengths": lengths,
        "seeds": n_seeds,
        "n_samples": n_samples,
        "sigma0s": sigma0s,
        "T": t_len,
        "lag": lag,
        "jobs": jobs,
        "seed": seed,
        "epsilon": epsilon,
        "train_fraction": train_fraction,
    }
    _write_manifest(
        out,
        "theory",
        effective,
        ["theorem1.json", "theorem1_scatter.csv", "cross_term.json"],
    )
    trend = eval_mod.theorem1_nondecreasing_within_se(result)
    print(f"P(F>1) per k: {result.p_hat}; non-decreasing within 1 SE: {trend}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwgc",
        description=(
            "Window-level Granger causality: simulate benchmark series, scan "
            "windows for causal pairs, sweep evaluation tables, and run the "
            "supporting statistical checks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file; flags override it")
    common.add_argument("-o", "--out", help="output directory (required)")

    sim = sub.add_parser(
        "simulate",
        parents=[common],
        help="generate a benchmark series with ground-truth impulse times",
    )
    sim.add_argument("--kind", choices=["ar", "nar"], help="generator (default: ar)")
    sim.add_argument("--T", type=int, help="series length (default: 1000)")
    sim.add_argument("--lag", help="coupling lag 1..9 or 'random' (default: random)")
    sim.add_argument("--seed", type=int, help="generator seed (default: 0)")
    sim.add_argument(
        "--noise-scale",
        dest="noise_scale",
        type=float,
        help="noise std (default: 0.02 for ar, 1.0 for nar)",
    )
    sim.add_argument(
        "--impulse-prob",
        dest="impulse_prob",
        type=float,
        help="per-(channel,time) impulse probability, ar only (default: 0.05)",
    )
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser(
        "analyze",
        parents=[common],
        help="scan a CSV for window-level causality (naive F-test or full index loop)",
    )
    ana.add_argument("--input", help="input CSV, rows = time, columns = channels")
    ana.add_argument(
        "--method",
        choices=["naive", "dwgc"],
        help="naive = windowed F-test only; dwgc = with index optimization (default: naive)",
    )
    ana.add_argument(
        "--window-len",
        dest="window_len",
        type=int,
        help="window length in samples, e.g. one month of daily data (default: 30)",
    )
    ana.add_argument("--stride", type=int, help="window stride (default: window length)")
    ana.add_argument(
        "--train-fraction",
        dest="train_fraction",
        type=float,
        help="leading fraction used for training (default: 0.3)",
    )
    ana.add_argument(
        "--epsilon",
        type=float,
        help="F-ratio detection threshold (default: 1.0)",
    )
    ana.add_argument(
        "--alpha",
        type=float,
        help="scaling-function constant in h(x) = alpha - tanh(x) (default: 1.2 = 6/5)",
    )
    ana.add_argument("--seed", type=int, help="base seed for model fits (default: 0)")
    ana.add_argument("--lag-order", dest="lag_order", type=int, help="lags per channel (default: 10)")
    ana.add_argument("--hidden-units", dest="hidden_units", type=int, help="hidden width (default: 16)")
    ana.add_argument("--learning-rate", dest="learning_rate", type=float, help="trainer step size (default: 0.01)")
    ana.add_argument("--max-epochs", dest="max_epochs", type=int, help="trainer epoch cap (default: 500)")
    ana.add_argument(
        "--phi-learning-rate",
        dest="phi_learning_rate",
        type=float,
        help="index step size (default: 0.05)",
    )
    ana.add_argument(
        "--outer-max-iters",
        dest="outer_max_iters",
        type=int,
        help="cap on alternating iterations (default: 50)",
    )
    ana.add_argument(
        "--max-diff-order",
        dest="max_diff_order",
        type=int,
        help="max differencing order for stationarity (default: 2)",
    )
    ana.add_argument(
        "--time-column",
        dest="time_column",
        action="store_const",
        const=True,
        help="treat the leftmost CSV column as timestamps and drop it",
    )
    ana.set_defaults(func=cmd_analyze)

    ev = sub.add_parser(
        "evaluate",
        parents=[common],
        help="recall/accuracy sweep over seeds and window lengths",
    )
    ev.add_argument("--dataset", choices=["ar", "nar"], help="benchmark family (default: ar)")
    ev.add_argument("--methods", help="comma list of naive,dwgc (default: naive)")
    ev.add_argument("--lengths", help="comma list of window lengths (default: 10,20,30,100)")
    ev.add_argument("--seeds", type=int, help="number of seeds, 0..n-1 (default: 20)")
    ev.add_argument("--jobs", type=int, help="parallel workers (default: 1)")
    ev.add_argument("--epsilon", type=float, help="F-ratio detection threshold (default: 1.0)")
    ev.add_argument(
        "--train-fraction",
        dest="train_fraction",
        type=float,
        help="leading training fraction (default: 0.3)",
    )
    ev.add_argument("--T", type=int, help="series length per seed (default: 1000)")
    ev.add_argument("--lag", help="coupling lag 1..9 or 'random' (default: random)")
    ev.add_argument("--lag-order", dest="lag_order", type=int, help="lags per channel (default: 10)")
    ev.add_argument(
        "--outer-max-iters",
        dest="outer_max_iters",
        type=int,
        help="cap on alternating iterations for dwgc (default: 50)",
    )
    ev.set_defaults(func=cmd_evaluate)

    th = sub.add_parser(
        "theory",
        parents=[common],
        help="empirical F-trend table plus noise cross-term summaries",
    )
    th.add_argument("--lengths", help="comma list of window lengths (default: 10,20,30,100)")
    th.add_argument("--seeds", type=int, help="number of data seeds (default: 20)")
    th.add_argument(
        "--n-samples",
        dest="n_samples",
        type=int,
        help="Monte Carlo draws per grid cell (default: 10000)",
    )
    th.add_argument("--sigma0s", help="comma list of residual stds (default: 0.5,1.0)")
    th.add_argument("--T", type=int, help="series length per seed (default: 1000)")
    th.add_argument("--lag", help="coupling lag 1..9 or 'random' (default: random)")
    th.add_argument("--jobs", type=int, help="parallel workers (default: 1)")
    th.add_argument("--seed", type=int, help="Monte Carlo seed (default: 0)")
    th.add_argument("--epsilon", type=float, help="F-ratio detection threshold (default: 1.0)")
    th.add_argument(
        "--train-fraction",
        dest="train_fraction",
        type=float,
        help="leading training fraction (default: 0.3)",
    )
    th.set_defaults(func=cmd_theory)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, SeriesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
