"""Command-line driver: ``latentdd {generate,fit,evaluate,plot,sweep-gamma}``.

Every subcommand reads an optional ``--config`` file of ``key = value`` lines;
flags named after the config keys override it. Each run writes a JSON
manifest recording the resolved config, its hash, the seeds and the outputs.
"""
import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataset import export_csv, load_dataset, sample_case1, sample_case2, save_dataset
from .decompose import export_segments_csv, export_sweep_csv, gamma_sweep
from .errors import ConfigError, LatentDDError
from .ipca import total_evr
from .manifold import export_curve_csv, export_edges_csv
from .mlp import PRESETS, DomainMLPRegressor, ELUNetRegressor, MlpConfig
from .predict import (ErrorReport, evaluate, fit_predictor, format_table,
                      load_predictor, per_domain_to_csv, reports_to_csv,
                      save_predictor)

log = logging.getLogger("latentdd")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(cfg, command, outputs, extra=None, elapsed=None):
    out = Path(cfg.out_dir)
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": cfg.digest(),
        "config": cfg.to_text().splitlines(),
        "seeds": cfg.seeds(),
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    if elapsed is not None:
        manifest["elapsed_seconds"] = elapsed
    path = out / f"manifest_{command.replace('-', '_')}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _path(arg, cfg, default):
    return Path(arg) if arg else Path(cfg.out_dir) / default


def _predictor_params(cfg, **overrides):
    params = dict(reducer="ipca", evr_floor=cfg.evr_floor,
                  fallback_drop=cfg.fallback_drop, radius_factor=cfg.radius_factor,
                  gamma=cfg.gamma, min_points_per_domain=cfg.min_points_per_domain,
                  inverse_mode=cfg.inverse_mode, k_nn=cfg.k_nn)
    params.update(overrides)
    return params


def _check_target_dim(cfg, p):
    if cfg.target_dim == 1:
        return
    if cfg.target_dim >= p:
        raise ConfigError(
            f"target_dim={cfg.target_dim} leaves all {p} input features unreduced; "
            "the reduced cloud would not be a planar curve (degenerate pipeline)")
    raise ConfigError("the manifold pipeline needs target_dim = 1")


# subcommands -----------------------------------------------------------------

def cmd_generate(cfg, args):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.case == 1:
        train = sample_case1(cfg.n_train, cfg.seed_train, cfg.M)
        test = sample_case1(cfg.n_test, cfg.seed_test, cfg.M, reference=train)
    else:
        train = sample_case2(cfg.n_train, cfg.M, cfg.k, cfg.seed_train)
        test = sample_case2(cfg.n_test, cfg.M, cfg.k, cfg.seed_test, reference=train)
    outputs = []
    for name, ds in (("train", train), ("test", test)):
        save_dataset(ds, out / f"{name}.ldd")
        export_csv(ds, out / f"{name}.csv")
        outputs += [out / f"{name}.ldd", out / f"{name}.csv"]
        log.info("%s: n=%d p=%d q=%d", name, ds.n, ds.p, ds.q)
    shapes = {"train": [train.n, train.p, train.q], "test": [test.n, test.p, test.q]}
    return outputs, {"shapes": shapes}


def cmd_fit(cfg, args):
    train = load_dataset(_path(args.train, cfg, "train.ldd"))
    _check_target_dim(cfg, train.p)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred = fit_predictor(train, **_predictor_params(cfg))
    sm, dec = pred.manifold_, pred.decomposition_

    evr = pred.proj_x_.evr_report()
    for step, dim, ratio in evr:
        log.info("iPCA x step %d: kept %d, EVR %.4f", step, dim, ratio)
    log.info("turning points: %d, jumps: %d, branches: %d",
             len(sm.turning_points), sm.source.jumps, len(sm.branches))
    sweep = gamma_sweep(sm, cfg.gammas, cfg.min_points_per_domain)
    for g, eps, n_raw, n_dom in sweep:
        log.info("gamma %g: epsilon %.4g, %d segments, %d domains", g, eps, n_raw, n_dom)

    outputs = [out / "predictor.ldd", out / "gamma_sweep.csv", out / "curve.csv",
               out / "edges.csv", out / "segments.csv"]
    save_predictor(pred, outputs[0])
    export_sweep_csv(sweep, outputs[1])
    export_curve_csv(sm, outputs[2])
    export_edges_csv(pred.edges_, outputs[3])
    export_segments_csv(dec, sm, outputs[4])
    extra = {
        "evr_x": [list(r) for r in evr], "evr_x_total": total_evr(evr),
        "turning_points": len(sm.turning_points), "jumps": int(sm.source.jumps),
        "domains": len(dec), "epsilon": dec.epsilon,
        "gamma_sweep": [list(r) for r in sweep],
    }
    if pred.proj_y_ is not None:
        extra["evr_y"] = [list(r) for r in pred.proj_y_.evr_report()]
    return outputs, extra


def _mlp_configs(cfg, n_domains):
    preset = PRESETS[cfg.mlp_preset]
    epochs = preset["epochs"] if cfg.mlp_epochs < 0 else cfg.mlp_epochs
    full = MlpConfig(preset["layer_sizes"], "elu", preset["full_lr"],
                     preset["batch_size"], epochs, cfg.mlp_seed)
    lrs = preset["domain_lrs"]
    sizes = preset.get("domain_batch_sizes",
                       (preset.get("domain_batch_size", preset["batch_size"]),))
    per = [MlpConfig(preset["layer_sizes"], "elu", lrs[min(i, len(lrs) - 1)],
                     sizes[min(i, len(sizes) - 1)], epochs, cfg.mlp_seed)
           for i in range(n_domains)]
    return full, per


def run_benchmark(cfg, pred, train, test):
    """Score every selected method on ``test``; returns a list of reports."""
    methods = cfg.method_list()
    X, Y = train.raw()
    reports = []
    interp = [m for m in ("pinv", "complement") if m in methods]
    if train.q == 1 and interp:
        # a scalar output is never reduced, so both inverses coincide
        interp = interp[:1]
    for mode in interp:
        pred.set_params(inverse_mode=mode if train.q > 1 else pred.inverse_mode)
        name = "interp-ipca" if train.q == 1 else f"interp-{mode}"
        reports.append(evaluate(pred, test, cfg.metric, name))
    pred.set_params(inverse_mode=cfg.inverse_mode)
    if "pca" in methods:
        pca = fit_predictor(train, **_predictor_params(cfg, reducer="pca"))
        reports.append(evaluate(pca, test, cfg.metric, "interp-pca"))
    full_cfg, domain_cfgs = _mlp_configs(cfg, len(pred.decomposition_))
    if "mlp" in methods:
        net = ELUNetRegressor(full_cfg.layer_sizes, full_cfg.learning_rate,
                              full_cfg.batch_size, full_cfg.epochs, full_cfg.seed).fit(X, Y)
        reports.append(evaluate(net, test, cfg.metric, "mlp-full"))
    if "domain-mlp" in methods:
        nets = DomainMLPRegressor(pred, tuple(domain_cfgs), min_points=2).fit(X, Y)
        rep = evaluate(nets, test, cfg.metric, "mlp-domain")
        reports.append(rep)
        reports.append(ErrorReport("mlp-domain-weighted", rep.weighted_error, float("nan"),
                                   [], rep.weighted_error, rep.inference_time_seconds,
                                   rep.errors))
    return reports


def cmd_evaluate(cfg, args):
    pred = load_predictor(_path(args.predictor, cfg, "predictor.ldd"))
    train = load_dataset(_path(args.train, cfg, "train.ldd"))
    test = load_dataset(_path(args.test, cfg, "test.ldd"))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_benchmark(cfg, pred, train, test)
    title = "Relative error" if cfg.metric == "relative_l2" else "L-inf error"
    table = format_table(reports, title)
    table += "UMAP rows left blank: UMAP reduction is out of scope.\n"
    print(table, end="")
    outputs = [out / "benchmark.csv", out / "per_domain.csv", out / "benchmark.txt"]
    reports_to_csv(reports, outputs[0])
    per_domain_to_csv(reports, outputs[1])
    outputs[2].write_text(table)
    timings = {r.method: r.inference_time_seconds for r in reports}
    return outputs, {"inference_time_seconds": timings}


def _cloud(pred):
    """Reduced ``(x~, y~)`` points in training-row order."""
    curve = pred.manifold_.source
    cloud = np.empty_like(curve.points)
    cloud[curve.order] = curve.points
    return cloud


def cmd_plot(cfg, args):
    from .plotting import (plot_curve, plot_prediction, plot_stretched,
                           plot_triangulation)
    pred = load_predictor(_path(args.predictor, cfg, "predictor.ldd"))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sm = pred.manifold_
    outputs = [
        plot_triangulation(_cloud(pred), pred.edges_, out / "triangulation.svg"),
        plot_curve(sm.source, out / "curve.svg"),
        plot_stretched(sm, out / "stretched.svg", pred.decomposition_),
    ]
    test_path = _path(args.test, cfg, "test.ldd")
    if args.test or test_path.exists():
        X, Y = load_dataset(test_path).raw()
        outputs.append(plot_prediction(Y, pred.predict(X), out / "prediction.svg"))
    return outputs, {}


def cmd_sweep_gamma(cfg, args):
    pred_path = _path(args.predictor, cfg, "predictor.ldd")
    if args.predictor or (not args.train and pred_path.exists()):
        pred = load_predictor(pred_path)
    else:
        pred = fit_predictor(load_dataset(_path(args.train, cfg, "train.ldd")),
                             **_predictor_params(cfg))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = gamma_sweep(pred.manifold_, cfg.gammas, cfg.min_points_per_domain)
    print("gamma    epsilon      segments  domains")
    for g, eps, n_raw, n_dom in rows:
        print(f"{g:<8g} {eps:<12.5g} {n_raw:<9d} {n_dom}")
    path = out / "gamma_sweep.csv"
    export_sweep_csv(rows, path)
    return [path], {"gamma_sweep": [list(r) for r in rows]}


COMMANDS = {
    "generate": (cmd_generate, "sample train/test datasets"),
    "fit": (cmd_fit, "fit the latent manifold predictor"),
    "evaluate": (cmd_evaluate, "benchmark the selected methods on the test set"),
    "plot": (cmd_plot, "write SVG figures of a fitted predictor"),
    "sweep-gamma": (cmd_sweep_gamma, "domain count for each gamma"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="latentdd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
        if name in ("fit", "evaluate", "sweep-gamma"):
            p.add_argument("--train", help="training dataset (default OUT_DIR/train.ldd)")
        if name in ("evaluate", "plot"):
            p.add_argument("--test", help="test dataset (default OUT_DIR/test.ldd)")
        if name in ("evaluate", "plot", "sweep-gamma"):
            p.add_argument("--predictor", help="predictor file (default OUT_DIR/predictor.ldd)")
        group = p.add_argument_group("configuration overrides")
        for f in fields(RunConfig):
            group.add_argument("--" + f.name.replace("_", "-"), dest=f"cfg_{f.name}",
                               metavar=f.name.upper())
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    overrides = [(k[4:], v) for k, v in vars(args).items()
                 if k.startswith("cfg_") and v is not None]
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, overrides)
        t0 = time.perf_counter()
        outputs, extra = func(cfg, args)
        write_manifest(cfg, args.command, outputs, extra, time.perf_counter() - t0)
    except (LatentDDError, ValueError, OSError) as exc:
        print(f"latentdd {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0
