"""Command-line pipeline: simulate, init, fit, evaluate, tune-cdelta,
atlas-sparsity.

Every command is deterministic given its config (the --seed flag overrides
the config seed) and exits nonzero with a one-line diagnostic on error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as iadl_io
from . import synthgen
from .evaluation import FULL_SOURCE, TIME_COURSE, atlas_fbn_sparsity, match_and_score
from .hrf import (
    build_regressor,
    canonical_hrf,
    canonical_params,
    estimate_c_delta,
    sample_hrf,
    task_time_course,
)
from .initializer import InitConfig, initialize
from .solver import run_iadl
from .types import (
    CoefficientMatrix,
    ConstraintSpec,
    DataMatrix,
    Dictionary,
    SourceSet,
    TaskTimeCourses,
)


def _load_config(args) -> iadl_io.ExperimentConfig:
    config = iadl_io.load_config(args.config)
    if args.seed is not None:
        config = iadl_io.ExperimentConfig(
            **{**config.__dict__, "seed": int(args.seed)}
        )
    return config


def _task_courses_canonical(config) -> np.ndarray:
    """Task time courses under the canonical response (the knowledge handed
    to the solver, regardless of the subject response in the data)."""
    ds = config.dataset
    h = canonical_hrf(ds.tr)
    cols = []
    for cond in config.resolved_conditions():
        u = build_regressor(cond, ds.n_times, ds.tr)
        cols.append(task_time_course(u, h))
    return np.column_stack(cols) if cols else np.zeros((ds.n_times, 0))


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    ds_cfg = config.dataset
    if ds_cfg.hrf_spread > 0:
        subject_hrf = sample_hrf(rng, ds_cfg.hrf_spread)
    else:
        subject_hrf = canonical_params()
    builder = synthgen.mini_benchmark if ds_cfg.recipe == "mini" else synthgen.full_benchmark
    dataset = builder(rng, snr_db=ds_cfg.snr_db, hrf_params=subject_hrf)

    iadl_io.save_matrix(dataset.x.values, out / "x.iadl")
    iadl_io.save_matrix(dataset.truth.time_courses, out / "true_courses.iadl")
    iadl_io.save_matrix(dataset.truth.spatial_maps, out / "true_maps.iadl")
    iadl_io.save_matrix(_task_courses_canonical(config), out / "task_courses.iadl")
    meta = {
        "recipe": ds_cfg.recipe,
        "grid": list(dataset.grid),
        "tr": ds_cfg.tr,
        "snr_db": ds_cfg.snr_db,
        "seed": config.seed,
        "kinds": list(dataset.truth.kinds),
        "assisted_indices": list(dataset.assisted_indices),
        "noise_sigma": dataset.noise_sigma,
        "subject_hrf": subject_hrf.__dict__,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    iadl_io.write_manifest(
        out,
        ["x.iadl", "true_courses.iadl", "true_maps.iadl", "task_courses.iadl", "meta.json"],
    )
    print(f"wrote {ds_cfg.recipe} dataset to {out}")
    return 0


def _resolve_c_delta(config) -> float:
    if config.c_delta != "auto":
        return float(config.c_delta)
    ds = config.dataset
    return estimate_c_delta(
        config.resolved_conditions(),
        ds.n_times,
        ds.tr,
        reference=canonical_params(),
        alternate=config.alternate_hrf(),
    )


def _load_fit_inputs(config, data_dir, blind):
    data_dir = Path(data_dir)
    x = DataMatrix(iadl_io.load_matrix(data_dir / "x.iadl"), tr=config.dataset.tr)
    if blind:
        delta = TaskTimeCourses.empty(x.n_times)
    else:
        delta = TaskTimeCourses(iadl_io.load_matrix(data_dir / "task_courses.iadl"))
    spec = ConstraintSpec(
        phi=config.resolve_phis(x.n_voxels),
        c_delta=_resolve_c_delta(config),
        c_d=config.c_d,
        epsilon=config.epsilon,
    )
    return x, delta, spec


def _write_init_bundle(out, d0, s0):
    iadl_io.save_matrix(d0.values, out / "init_dict.iadl")
    iadl_io.save_matrix(s0.values, out / "init_coef.iadl")


def cmd_init(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x, delta, spec = _load_fit_inputs(config, args.data, args.blind)
    init_cfg = InitConfig(**{**config.init.__dict__, "rng_seed": config.seed})
    d0, s0 = initialize(x, config.k, delta, spec, init_cfg)
    _write_init_bundle(out, d0, s0)
    iadl_io.write_manifest(out, ["init_dict.iadl", "init_coef.iadl"])
    print(f"wrote starting point to {out}")
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x, delta, spec = _load_fit_inputs(config, args.data, args.blind)

    init_cfg = InitConfig(**{**config.init.__dict__, "rng_seed": config.seed})
    d_start = s_start = None
    if args.init_dir:
        init_dir = Path(args.init_dir)
        d_start = Dictionary(
            iadl_io.load_matrix(init_dir / "init_dict.iadl"),
            assisted_count=delta.n_courses,
        )
        s_start = CoefficientMatrix(iadl_io.load_matrix(init_dir / "init_coef.iadl"))
    d0, s0 = initialize(x, config.k, delta, spec, init_cfg, d0=d_start, s0=s_start)

    result = run_iadl(x, d0, s0, delta, spec, config.solver)

    iadl_io.save_matrix(result.dictionary.values, out / "fitted_dict.iadl")
    iadl_io.save_matrix(result.coefficients.values, out / "fitted_maps.iadl")
    trace = result.trace
    lines = ["iteration,objective,max_violation"]
    for i, (obj, viol) in enumerate(
        zip(trace.objective, trace.constraint_violation_max), start=1
    ):
        lines.append(f"{i},{obj:.12g},{viol:.6g}")
    (out / "trace.csv").write_text("\n".join(lines) + "\n")

    resolved = {
        "k": config.k,
        "assisted_count": delta.n_courses,
        "phi": [float(v) for v in spec.phi],
        "c_delta": spec.c_delta,
        "c_d": spec.c_d,
        "epsilon": spec.epsilon,
        "seed": config.seed,
        "blind": bool(args.blind),
        "solver": config.solver.__dict__,
        "init": init_cfg.__dict__,
        "iterations_run": trace.iterations_run,
        "stop_reason": trace.stop_reason,
        "final_objective": float(trace.objective[-1]),
        "data_checksum": iadl_io.sha256_file(Path(args.data) / "x.iadl"),
    }
    (out / "resolved.json").write_text(json.dumps(resolved, indent=2) + "\n")
    iadl_io.write_manifest(
        out, ["fitted_dict.iadl", "fitted_maps.iadl", "trace.csv", "resolved.json"]
    )
    print(
        f"fit finished after {trace.iterations_run} iterations "
        f"({trace.stop_reason}); objective {trace.objective[-1]:.6g}"
    )
    return 0


def cmd_evaluate(args) -> int:
    truth_dir = Path(args.truth)
    fit_dir = Path(args.fit)
    iadl_io.verify_manifest(truth_dir)
    iadl_io.verify_manifest(fit_dir)

    truth_manifest = iadl_io.read_manifest(truth_dir)
    resolved = json.loads((fit_dir / "resolved.json").read_text())
    if resolved["data_checksum"] != truth_manifest["checksums"]["x.iadl"]:
        raise ValueError(
            "fit was produced from different data than this truth bundle"
        )

    meta = json.loads((truth_dir / "meta.json").read_text())
    truth = SourceSet(
        time_courses=iadl_io.load_matrix(truth_dir / "true_courses.iadl"),
        spatial_maps=iadl_io.load_matrix(truth_dir / "true_maps.iadl"),
        kinds=tuple(meta["kinds"]),
    )
    est_d = Dictionary(
        iadl_io.load_matrix(fit_dir / "fitted_dict.iadl"),
        assisted_count=int(resolved["assisted_count"]),
    )
    est_s = CoefficientMatrix(iadl_io.load_matrix(fit_dir / "fitted_maps.iadl"))
    p = tuple(meta["assisted_indices"])[: est_d.assisted_count]

    reports = {
        FULL_SOURCE: (match_and_score(truth, est_d, est_s, p, FULL_SOURCE), truth.kinds),
        TIME_COURSE: (match_and_score(truth, est_d, est_s, p, TIME_COURSE), truth.kinds),
    }
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    iadl_io.save_metrics(reports, out_path)
    full = reports[FULL_SOURCE][0].summaries
    print(
        f"mean r (full source): assisted {full.get('assisted_full', float('nan')):.4f}, "
        f"brain {full['brain_full']:.4f}, all {full['all_full']:.4f}"
    )
    return 0


def cmd_tune_cdelta(args) -> int:
    config = _load_config(args)
    value = _resolve_c_delta(
        iadl_io.ExperimentConfig(**{**config.__dict__, "c_delta": "auto"})
    )
    print(f"{value:.10g}")
    return 0


def cmd_atlas_sparsity(args) -> int:
    print(f"{atlas_fbn_sparsity(args.thetas):.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iadl",
        description="Constrained dictionary learning pipeline: simulate, "
        "initialize, fit, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("init", help="compute and store a starting point")
    add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--blind", action="store_true", help="no assisted atoms")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("fit", help="run the solver")
    add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--blind", action="store_true", help="no assisted atoms")
    p.add_argument("--init-dir", default=None, help="saved starting point to reuse")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a fit against ground truth")
    p.add_argument("--truth", required=True, help="dataset directory")
    p.add_argument("--fit", required=True, help="fit output directory")
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune-cdelta", help="print the estimated similarity radius")
    add_common(p, needs_out=False)
    p.set_defaults(func=cmd_tune_cdelta)

    p = sub.add_parser("atlas-sparsity", help="network sparsity from region values")
    p.add_argument("thetas", nargs="+", type=float, help="per-region sparsity %%")
    p.set_defaults(func=cmd_atlas_sparsity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # single-line diagnostic, nonzero exit
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
