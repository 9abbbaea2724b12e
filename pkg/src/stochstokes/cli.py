"""Command line driver.

Each subcommand loads a configuration (file or named preset, with flag and
environment overrides), echoes the effective configuration into the output
directory, runs one study, writes its artifacts, and finishes with a
``manifest.json`` recording seed, configuration hash, code version,
timestamps and wall time.  Timestamps live only in the manifest; data
artifacts stay byte-identical across reruns of the same configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import experiment
from .config import (
    ConfigError,
    config_hash,
    emit_config,
    parse_config,
    preset,
    preset_names,
)
from .stochastic import ito_isometry_check
from .vtkio import write_fields_vtk

SEED_ENV = "STOCH_STOKES_SEED"

DEFAULT_PRESETS = {
    "temporal": "test1-desk",
    "balanced": "test1-balanced-desk",
    "fixed-h": "test1-fixedh-desk",
    "cavity": "cavity-desk",
    "infsup": "test1-desk",
    "isometry": "test1-desk",
}

ISOMETRY_Z_LIMIT = 5.0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stochstokes",
        description="Mixed finite element studies for stochastic Stokes flow.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument(
        "--preset",
        choices=preset_names(),
        help="named configuration (default depends on the subcommand)",
    )
    common.add_argument("--seed", type=int, help="override the seed")
    common.add_argument(
        "--np", type=int, dest="n_p", help="override the realization count"
    )
    common.add_argument("--threads", type=int, help="override the worker count")
    common.add_argument("--out", help="override the output directory")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "temporal",
        parents=[common],
        help="time-refinement errors against a fine-step reference path",
    )
    sub.add_parser(
        "balanced",
        parents=[common],
        help="joint (k, h) refinement against the finest pair",
    )
    sub.add_parser(
        "fixed-h",
        parents=[common],
        help="decreasing k on a fixed coarse mesh, with degradation diagnostics",
    )
    sub.add_parser(
        "cavity",
        parents=[common],
        help="driven-cavity ensemble: mean fields and sample realizations",
    )
    sub.add_parser(
        "infsup",
        parents=[common],
        help="discrete inf-sup constant of the velocity/pressure pair",
    )
    iso = sub.add_parser(
        "isometry",
        parents=[common],
        help="Monte Carlo check of the noise increment variance identity",
    )
    iso.add_argument(
        "--samples", type=int, default=10000, help="number of Wiener samples"
    )
    return parser


def _load_config(args):
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = preset(args.preset or DEFAULT_PRESETS[args.command])
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    elif SEED_ENV in os.environ:
        try:
            cfg = replace(cfg, seed=int(os.environ[SEED_ENV]))
        except ValueError:
            raise ConfigError(
                f"environment variable {SEED_ENV}="
                f"'{os.environ[SEED_ENV]}' is not an integer"
            ) from None
    if args.n_p is not None:
        cfg = replace(cfg, n_p=args.n_p)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg.validate()


def _git_describe():
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if res.returncode == 0 and res.stdout.strip():
            return res.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def _print_summary(study, result):
    for stat in sorted(result.rates):
        report = result.rates[stat]
        print(
            f"{study} {stat}: slope {report.slope:.3f}"
            f" (residual {report.residual:.3f})"
        )
    for key, val in sorted(result.diagnostics.items()):
        print(f"{study} {key}: {val}")


def _extra_rows(study, entries, cfg):
    """Rows for scalar outputs that are not level statistics."""
    rows = []
    for stat, value in entries:
        rows.append(
            {
                "study": study,
                "k": "",
                "h": cfg.h,
                "n_p": "",
                "statistic": stat,
                "value": value,
                "ci_low": "",
                "ci_high": "",
                "seed": cfg.seed,
            }
        )
    return rows


def _cmd_temporal(cfg, out, digest, outputs, args):
    result = experiment.run_temporal_study(cfg)
    experiment.write_study_csv(
        out / "temporal.csv", "temporal", result, cfg.seed, digest
    )
    outputs.append("temporal.csv")
    _print_summary("temporal", result)
    return 0


def _cmd_balanced(cfg, out, digest, outputs, args):
    result = experiment.run_balanced_study(cfg)
    experiment.write_study_csv(
        out / "balanced.csv", "balanced", result, cfg.seed, digest
    )
    outputs.append("balanced.csv")
    _print_summary("balanced", result)
    return 0


def _cmd_fixed_h(cfg, out, digest, outputs, args):
    result = experiment.run_fixed_h_k_sweep(cfg)
    experiment.write_study_csv(
        out / "fixed_h.csv", "fixed_h", result, cfg.seed, digest
    )
    outputs.append("fixed_h.csv")
    _print_summary("fixed_h", result)
    return 0


def _cmd_cavity(cfg, out, digest, outputs, args):
    result = experiment.run_cavity_demo(cfg)
    stamp = f"seed={cfg.seed} config=sha256:{digest}"
    write_fields_vtk(
        result.space,
        out / "cavity_mean.vtk",
        velocity=result.mean_u,
        pressure=result.mean_p,
        title=f"cavity mean | {stamp}",
    )
    outputs.append("cavity_mean.vtk")
    for i, (u, p) in enumerate(result.samples):
        name = f"cavity_sample_{i}.vtk"
        write_fields_vtk(
            result.space,
            out / name,
            velocity=u,
            pressure=p,
            title=f"cavity sample {i} | {stamp}",
        )
        outputs.append(name)
    print(
        f"cavity: {cfg.n_p} realizations,"
        f" max |div u| = {result.diagnostics['max_div_inf']:.3e}"
    )
    return 0


def _cmd_infsup(cfg, out, digest, outputs, args):
    disc = experiment.build_discretization(cfg, cfg.h, [])
    est = experiment.estimate_discrete_infsup(
        disc.system, disc.space, tol=cfg.solver_tol
    )
    rows = _extra_rows("infsup", [("gamma", est.gamma)], cfg)
    text = experiment.format_csv(rows, cfg.seed, digest)
    (out / "infsup.csv").write_text(text, encoding="utf-8")
    outputs.append("infsup.csv")
    print(
        f"infsup: gamma_h = {est.gamma:.6f}"
        f" ({est.iterations} iterations, residual {est.residual:.2e})"
    )
    return 0


def _cmd_isometry(cfg, out, digest, outputs, args):
    disc = experiment.build_discretization(cfg, cfg.h, [])
    report = ito_isometry_check(
        disc.system, disc.basis, cfg.T, args.samples, cfg.seed
    )
    rows = _extra_rows(
        "isometry",
        [
            ("sample_mean", report["sample_mean"]),
            ("analytic", report["analytic"]),
            ("stderr", report["stderr"]),
            ("z_score", report["z_score"]),
            ("n_samples", report["n_samples"]),
        ],
        cfg,
    )
    text = experiment.format_csv(rows, cfg.seed, digest)
    (out / "isometry.csv").write_text(text, encoding="utf-8")
    outputs.append("isometry.csv")
    print(
        f"isometry: mean {report['sample_mean']:.6f}"
        f" vs analytic {report['analytic']:.6f},"
        f" z = {report['z_score']:.3f}"
    )
    if abs(report["z_score"]) > ISOMETRY_Z_LIMIT:
        print(
            f"isometry: |z| exceeds {ISOMETRY_Z_LIMIT}; variance identity violated",
            file=sys.stderr,
        )
        return 1
    return 0


_RUNNERS = {
    "temporal": _cmd_temporal,
    "balanced": _cmd_balanced,
    "fixed-h": _cmd_fixed_h,
    "cavity": _cmd_cavity,
    "infsup": _cmd_infsup,
    "isometry": _cmd_isometry,
}


def _run(args):
    cfg = _load_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    header = f"# seed = {cfg.seed}\n# config = sha256:{digest}\n"
    (out / "config.ini").write_text(header + emit_config(cfg), encoding="utf-8")
    outputs = ["config.ini"]

    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    partial = False
    error = None
    code = 0
    try:
        code = _RUNNERS[args.command](cfg, out, digest, outputs, args)
    except Exception as err:  # record partial runs in the manifest
        partial = True
        error = f"{type(err).__name__}: {err}"
        code = 1
    wall = time.perf_counter() - t0

    manifest = {
        "command": args.command,
        "seed": int(cfg.seed),
        "config": f"sha256:{digest}",
        "git_describe": _git_describe(),
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": wall,
        "outputs": outputs,
        "partial": partial,
    }
    if error is not None:
        manifest["error"] = error
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
