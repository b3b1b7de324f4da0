"""Command-line front door.

Subcommands
-----------
generate    write a synthetic RCS dataset plus its truth record
estimate    run the estimation pipeline (epd | ap | mean) on a dataset
sweep-c     reuse one fit batch across several scaling factors
metrics     compare an accepted-params CSV against a truth CSV

Every run writes its resolved configuration (all seeds pinned) next to the
outputs, so re-running from that file reproduces the outputs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 runtime estimation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import accept, metrics, plots, reporting
from .config import RunConfig, dump_resolved_config, load_run_config, resolve_seeds
from .errors import ConfigurationError, EpdError, EstimationError
from .metrics import MetricsError
from .rcs_data import (
    generate_synthetic,
    load_params_csv,
    load_rcs_csv,
    save_rcs_csv,
    save_truth_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(cfg: RunConfig, model, out: Path | None):
    """Dataset from csv or synthetic spec; synthetic runs also persist the truth."""
    if cfg.csv_path:
        return load_rcs_csv(cfg.csv_path, model=model), None
    data, truth = generate_synthetic(cfg.build_synthetic_spec(model))
    if out is not None:
        save_truth_csv(truth, out / "truth_params.csv")
    return data, truth


def cmd_generate(cfg: RunConfig, out: Path) -> int:
    model = cfg.build_model()
    if cfg.synthetic is None:
        raise ConfigurationError("generate requires a dataset.synthetic section")
    data, truth = generate_synthetic(cfg.build_synthetic_spec(model))
    save_rcs_csv(data, out / "rcs_data.csv")
    save_truth_csv(truth, out / "truth_params.csv")
    dump_resolved_config(cfg, out / "resolved_config.yaml")
    sizes = ", ".join(str(s) for s in data.pool_sizes)
    print(f"wrote {out / 'rcs_data.csv'} ({data.n_times} times, pool sizes {sizes})")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig, out: Path) -> int:
    model = cfg.build_model()
    data, _ = _load_dataset(cfg, model, out)
    y0 = None if cfg.y0 is None else np.asarray(cfg.y0, dtype=float)

    if cfg.method == "mean":
        _, estimate = accept.run_mean_baseline(
            data, model, y0=y0, fit_config=cfg.fit, integrator=cfg.integrator
        )
    else:
        c = 0.0 if cfg.method == "ap" else cfg.c
        estimate = accept.run_epd(
            data,
            model,
            cfg.n_trajectories,
            c,
            resample_seed=cfg.seeds["resample"],
            gate_seed=cfg.seeds["gate"],
            y0=y0,
            fit_config=cfg.fit,
            integrator=cfg.integrator,
            jobs=cfg.jobs,
        )
        estimate.config["method"] = cfg.method

    dump_resolved_config(cfg, out / "resolved_config.yaml")
    reporting.write_accepted_csv(estimate, out / "accepted_params.csv")
    reporting.write_records_csv(estimate, out / "acceptance_records.csv")
    summary = reporting.write_run_summary(estimate, out / "run_summary.yaml")

    if estimate.n_accepted == 0:
        print("no accepted parameters; loss quantiles:", summary["loss_quantiles"], file=sys.stderr)
        raise EstimationError("no accepted parameters")

    if cfg.plots:
        plots.save_histograms(estimate.accepted_params, estimate.param_names, out)
        plots.save_pair_scatters(estimate.accepted_params, estimate.param_names, out)
    print(
        f"accepted {estimate.n_accepted} of {len(estimate.records)} fits "
        f"-> {out / 'accepted_params.csv'}"
    )
    return EXIT_OK


def cmd_sweep_c(cfg: RunConfig, out: Path, c_values) -> int:
    if not c_values:
        raise ConfigurationError("sweep-c needs at least one C value")
    model = cfg.build_model()
    data, _ = _load_dataset(cfg, model, out)
    y0 = None if cfg.y0 is None else np.asarray(cfg.y0, dtype=float)

    # one fit batch, re-gated per C
    from .fit import fit_trajectories
    from .rcs_data import align_to_model
    from .resample import sample_trajectories

    bound_data = align_to_model(data, model)
    trajectories = sample_trajectories(bound_data, cfg.n_trajectories, cfg.seeds["resample"])
    fits = fit_trajectories(
        model, trajectories, y0=y0, cfg=cfg.fit, integrator=cfg.integrator, jobs=cfg.jobs
    )

    dump_resolved_config(cfg, out / "resolved_config.yaml")
    rows = []
    for c in c_values:
        estimate = accept.apply_acceptance(
            fits, c, cfg.seeds["gate"], model.param_names, {"model": model.name, "c": c}
        )
        tag = ("%g" % c).replace(".", "_")
        scatter_path = out / f"accept_prob_C{tag}.csv"
        probs = np.array([rec.accept_prob for rec in estimate.records])
        all_params = np.array([f.params for f in fits])
        with open(scatter_path, "w", newline="") as fh:
            import csv as _csv

            writer = _csv.writer(fh)
            writer.writerow(["trajectory_index", *model.param_names, "accept_prob", "accepted"])
            for rec, f in zip(estimate.records, fits):
                writer.writerow(
                    [rec.trajectory_index]
                    + ["%.17g" % v for v in f.params]
                    + ["%.17g" % rec.accept_prob, int(rec.accepted)]
                )
        if cfg.plots:
            plots.save_accept_scatters(all_params, probs, model.param_names, out, f"C{tag}")
        mode_counts = []
        for j in range(model.n_params):
            if estimate.n_accepted >= 5:
                n_modes, _ = metrics.count_modes(estimate.accepted_params[:, j])
                mode_counts.append(str(n_modes))
            else:
                mode_counts.append("")  # too few accepted samples to count
        rows.append([c, estimate.n_accepted, *mode_counts])

    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["c", "accepted_count"] + [f"modes_{n}" for n in model.param_names])
        writer.writerows(rows)
    print(f"swept {len(c_values)} scaling factors -> {out / 'sweep_summary.csv'}")
    return EXIT_OK


def cmd_metrics(estimate_path, truth_path, out: Path, make_plots=True) -> int:
    for p in (estimate_path, truth_path):
        if not Path(p).exists():
            raise ConfigurationError(f"file not found: {p}")
    est_names, est_params = load_params_csv(estimate_path)
    true_names, true_params = load_params_csv(truth_path)
    if est_names != true_names:
        raise ConfigurationError(
            f"parameter sets differ: estimate has {list(est_names)}, truth has {list(true_names)}"
        )
    summaries = metrics.summarize_samples(est_params, true_params, est_names)
    reporting.write_marginal_summary_csv(summaries, out / "marginal_summary.csv")
    reporting.write_summary_yaml(summaries, out / "marginal_summary.yaml")
    if make_plots:
        plots.save_marginal_comparisons(est_params, true_params, est_names, out)
    for s in summaries:
        print(
            f"{s.param_name}: W1={s.wasserstein1:.6g} KS={s.ks_stat:.4f} modes={s.mode_count}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epdkit",
        description="Estimate ODE parameter distributions from repeated cross-sectional data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run config (YAML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override all seeds")
        p.add_argument("--jobs", type=int, default=None, help="parallel fit workers")

    p_gen = sub.add_parser("generate", help="write a synthetic RCS dataset")
    add_common(p_gen)

    p_est = sub.add_parser("estimate", help="run the estimation pipeline")
    add_common(p_est)
    p_est.add_argument("--method", choices=["epd", "ap", "mean"], default=None,
                       help="override the configured method")

    p_sweep = sub.add_parser("sweep-c", help="re-gate one fit batch at several C values")
    add_common(p_sweep)
    p_sweep.add_argument("--c-values", default="0,1,100,10000",
                         help="comma-separated scaling factors")

    p_met = sub.add_parser("metrics", help="compare accepted params against truth")
    p_met.add_argument("--estimate", required=True, help="accepted-params CSV")
    p_met.add_argument("--truth", required=True, help="truth-params CSV")
    p_met.add_argument("--out", required=True, help="output directory")
    p_met.add_argument("--no-plots", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "metrics":
            return cmd_metrics(args.estimate, args.truth, _outdir(args.out),
                               make_plots=not args.no_plots)

        cfg = load_run_config(args.config)
        resolve_seeds(cfg, args.seed)
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if getattr(args, "method", None):
            cfg.method = args.method
        out = _outdir(args.out)

        if args.command == "generate":
            return cmd_generate(cfg, out)
        if args.command == "estimate":
            return cmd_estimate(cfg, out)
        if args.command == "sweep-c":
            c_values = [float(v) for v in str(args.c_values).split(",") if v.strip() != ""]
            return cmd_sweep_c(cfg, out, c_values)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MetricsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EpdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
