"""Command-line interface: fit CSV data, denoise PGM images, run the
bundled experiments.

Every report embeds the resolved run manifest so a run can be reproduced
from the report alone; all numeric output uses full round-trip precision
and the only non-deterministic line (the timestamp) is isolated so byte
comparisons of repeated runs stay meaningful.

Exit codes: 0 ok, 2 no-convergence (reports still written), 3 input error.
"""

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .denoise import (DenoiseConfig, NoiseSpec, denoise_detail, inject_noise,
                      psnr)
from .exceptions import MewfitError, NoConvergence, PgmError
from .experiments import SCENARIO_NAMES, Scenario, run as run_scenario
from .maxent import FitConfig, mem_fit, uniform_baseline
from .model import RawDataset, adapt, residuals, unscale
from .outliers import detect
from .pgm import read_pgm, write_pgm

ENV_PREFIX = "MEWFIT_"

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INPUT_ERROR = 3


def _fmt(x):
    """Full round-trip decimal form, locale-independent."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


class InputError(Exception):
    pass


def _env_default(name, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise InputError(f"bad value {raw!r} for {ENV_PREFIX}{name.upper()}")


def _add_fit_flags(sub):
    sub.add_argument("--degree", type=int,
                     default=_env_default("degree", int, 1),
                     help="polynomial degree (default 1)")
    sub.add_argument("--reduce", type=float,
                     default=_env_default("reduce", float, 100.0),
                     help="mse reduction factor r >= 1 (default 100)")
    sub.add_argument("--stages", type=int,
                     default=_env_default("stages", int, None),
                     help="continuation stages (default: one per decade of r)")
    sub.add_argument("--tol", type=float,
                     default=_env_default("tol", float, 1e-12),
                     help="outer-loop convergence tolerance")
    sub.add_argument("--max-iter", type=int,
                     default=_env_default("max_iter", int, 2000),
                     help="outer-loop iteration cap per stage")
    sub.add_argument("--weight-floor", type=float,
                     default=_env_default("weight_floor", float, 1e-300),
                     help="weights below this are flushed to zero")
    sub.add_argument("--beta-max", type=float,
                     default=_env_default("beta_max", float, 1e12),
                     help="multiplier cap")
    sub.add_argument("--threshold", type=float,
                     default=_env_default("threshold", float, None),
                     help="outlier weight threshold (default 1e-3/n)")


def _fit_config(args):
    return FitConfig(
        degree=args.degree,
        reduction_factor=args.reduce,
        continuation_steps=args.stages,
        outer_tol=args.tol,
        outer_max_iter=args.max_iter,
        weight_floor=args.weight_floor,
        beta_max=args.beta_max,
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mewfit",
        description="Maximal-entropy weighted least-squares fitting tools")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit X,Y data from a CSV file")
    fit.add_argument("csv_in", help="CSV with two numeric columns X,Y")
    _add_fit_flags(fit)
    fit.add_argument("--out-dir", default=_env_default("out_dir", str, "."),
                     help="directory for report files")

    dn = subs.add_parser("denoise", help="denoise a PGM image")
    dn.add_argument("pgm_in", help="input image, P2 or P5, maxval 255")
    dn.add_argument("--window", type=int,
                    default=_env_default("window", int, 15))
    dn.add_argument("--win-degree", type=int,
                    default=_env_default("win_degree", int, 3))
    dn.add_argument("--schedule", default=_env_default("schedule", str, "2,5,10,20"),
                    help="comma-separated ascending reduction factors")
    dn.add_argument("--weight-tol", type=float,
                    default=_env_default("weight_tol", float, 1e-3))
    dn.add_argument("--sweep", default=_env_default("sweep", str, "alternating"),
                    choices=("alternating", "rows-then-columns",
                             "columns-then-rows"))
    dn.add_argument("--max-passes", type=int,
                    default=_env_default("max_passes", int, 4))
    dn.add_argument("--inject", default=None, metavar="P,ALPHA,SEED",
                    help="corrupt the input first (noise probability, safety "
                         "factor, seed)")
    dn.add_argument("--truth", default=None,
                    help="reference PGM for scoring")
    dn.add_argument("--out-dir", default=_env_default("out_dir", str, "."))

    exp = subs.add_parser("experiment", help="run a bundled scenario")
    exp.add_argument("name", help=f"one of: {', '.join(SCENARIO_NAMES)}")
    exp.add_argument("--seed", type=int,
                     default=_env_default("seed", int, None))
    exp.add_argument("--out-dir", default=_env_default("out_dir", str, "."))
    return parser


@dataclass
class Manifest:
    subcommand: str
    inputs: dict
    settings: dict

    def lines(self):
        out = [f"tool: mewfit {__version__}",
               f"subcommand: {self.subcommand}"]
        for key, value in self.inputs.items():
            out.append(f"input.{key}: {value}")
        for key in sorted(self.settings):
            out.append(f"config.{key}: {_fmt(self.settings[key])}")
        return out


def _write_report(path, manifest, body_lines):
    with open(path, "w") as fh:
        fh.write("# mewfit report\n")
        for line in manifest.lines():
            fh.write(line + "\n")
        # isolated so diffs of repeated runs can skip exactly one line
        fh.write("timestamp: "
                 + datetime.now(timezone.utc).isoformat() + "\n")
        fh.write("\n")
        for line in body_lines:
            fh.write(line + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_xy_csv(path):
    xs, ys = [], []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}")
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            if len(row) < 2:
                raise InputError(f"{path}:{lineno}: expected two columns")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue    # header row
                raise InputError(
                    f"{path}:{lineno}: non-numeric values {row[:2]!r}")
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise InputError(f"{path}: need at least 2 data rows")
    return np.array(xs), np.array(ys)


def _polynomial_lines(label, coeffs):
    return [f"{label}.a{k}: {_fmt(float(c))}" for k, c in enumerate(coeffs)]


def _fit_body(raw, data, uw_model, mse_uw, result, report):
    state = result.state
    lines = [f"n: {raw.n}", f"mse_uw: {_fmt(mse_uw)}"]
    lines += _polynomial_lines("uw.adapted", uw_model.coeffs)
    lines += _polynomial_lines("uw.unscaled", unscale(uw_model, data.scale).coeffs)
    lines += [
        f"target_mse: {_fmt(result.trace[0].mse / result.config.reduction_factor)}",
        f"achieved_mse: {_fmt(state.mse)}",
        f"beta: {_fmt(state.beta)}",
        f"entropy: {_fmt(state.entropy)}",
        f"log_partition: {_fmt(state.log_partition)}",
        f"beta_capped: {state.capped}",
        f"converged: {result.converged}",
        f"iterations: {result.iterations}",
        f"outliers: {report.n_outliers}",
        f"outlier_threshold: {_fmt(report.threshold)}",
    ]
    lines += _polynomial_lines("mew.adapted", result.model.coeffs)
    lines += _polynomial_lines("mew.unscaled",
                               unscale(result.model, data.scale).coeffs)
    return lines


def _weights_rows(raw, data, result, report):
    e = residuals(result.model, data)
    p = result.state.weights
    for i in range(raw.n):
        yield (i + 1, raw.x[i], raw.y[i], data.x[i], data.y[i],
               float(e[i]), float(p[i]), int(report.outlier[i]))


def cmd_fit(args):
    x, y = _read_xy_csv(args.csv_in)
    try:
        raw = RawDataset(x, y)
        data = adapt(raw)
    except MewfitError as exc:
        raise InputError(f"{args.csv_in}: {exc}")
    config = _fit_config(args)
    uw_model, mse_uw = uniform_baseline(data, config.degree)
    exit_code = EXIT_OK
    try:
        result = mem_fit(data, config)
    except NoConvergence as exc:
        if exc.result is None:
            raise
        result = exc.result
        exit_code = EXIT_NO_CONVERGENCE
    report = detect(result, args.threshold)

    os.makedirs(args.out_dir, exist_ok=True)
    manifest = Manifest("fit", {"csv": args.csv_in}, {
        "degree": config.degree, "reduce": config.reduction_factor,
        "stages": result.config.continuation_steps,
        "tol": config.outer_tol, "max_iter": config.outer_max_iter,
        "weight_floor": config.weight_floor, "beta_max": config.beta_max,
        "threshold": report.threshold,
    })
    _write_report(os.path.join(args.out_dir, "report.txt"), manifest,
                  _fit_body(raw, data, uw_model, mse_uw, result, report))
    _write_csv(os.path.join(args.out_dir, "weights.csv"),
               ("i", "X", "Y", "x", "y", "e", "p", "outlier"),
               _weights_rows(raw, data, result, report))
    _write_csv(os.path.join(args.out_dir, "trace.csv"),
               ("stage", "r", "mse", "entropy", "beta"),
               ((k, t.r, t.mse, t.entropy, t.beta)
                for k, t in enumerate(result.trace)))
    return exit_code


def _parse_inject(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError("--inject expects P,ALPHA,SEED")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"bad --inject value {text!r}")


def cmd_denoise(args):
    try:
        img = read_pgm(args.pgm_in)
    except (PgmError, OSError) as exc:
        raise InputError(f"{args.pgm_in}: {exc}")
    truth = mask = None
    if args.truth:
        try:
            truth = read_pgm(args.truth)
        except (PgmError, OSError) as exc:
            raise InputError(f"{args.truth}: {exc}")
    settings = {
        "window": args.window, "win_degree": args.win_degree,
        "schedule": args.schedule, "weight_tol": args.weight_tol,
        "sweep": args.sweep, "max_passes": args.max_passes,
    }
    if args.inject:
        prob, safety, seed = _parse_inject(args.inject)
        try:
            spec = NoiseSpec(prob, safety, seed)
        except ValueError as exc:
            raise InputError(str(exc))
        if truth is None:
            truth = img
        img, mask = inject_noise(img, spec)
        settings["inject"] = args.inject
    try:
        schedule = tuple(float(s) for s in args.schedule.split(","))
        cfg = DenoiseConfig(window=args.window, degree=args.win_degree,
                            mse_schedule=schedule, weight_tol=args.weight_tol,
                            sweep_order=args.sweep, max_passes=args.max_passes)
    except ValueError as exc:
        raise InputError(str(exc))
    clean, flagged, weight_min = denoise_detail(img, cfg)

    os.makedirs(args.out_dir, exist_ok=True)
    write_pgm(os.path.join(args.out_dir, "noisy.pgm"), img)
    write_pgm(os.path.join(args.out_dir, "clean.pgm"), clean)
    rows = []
    for i, j in zip(*np.nonzero(flagged)):
        rows.append((int(i), int(j), float(img[i, j]), float(clean[i, j]),
                     float(weight_min[i, j])))
    _write_csv(os.path.join(args.out_dir, "flags.csv"),
               ("i", "j", "old", "new", "weight"), rows)

    body = [f"rows: {img.shape[0]}", f"cols: {img.shape[1]}",
            f"flagged: {int(flagged.sum())}"]
    if truth is not None:
        body.append(f"psnr_in: {_fmt(psnr(img, truth))}")
        body.append(f"psnr_out: {_fmt(psnr(clean, truth))}")
    if mask is not None:
        tp = int((flagged & mask).sum())
        fp = int((flagged & ~mask).sum())
        body += [f"noise_pixels: {int(mask.sum())}",
                 f"true_positives: {tp}", f"false_positives: {fp}",
                 f"sensitivity: {_fmt(tp / max(int(mask.sum()), 1))}",
                 f"false_positive_rate: "
                 f"{_fmt(fp / max(int((~mask).sum()), 1))}"]
    manifest = Manifest("denoise", {"pgm": args.pgm_in}, settings)
    _write_report(os.path.join(args.out_dir, "report.txt"), manifest, body)
    return EXIT_OK


def cmd_experiment(args):
    try:
        scenario = Scenario(args.name, seed=args.seed)
    except MewfitError as exc:
        raise InputError(str(exc))
    out_dir = os.path.join(args.out_dir, scenario.name)
    os.makedirs(out_dir, exist_ok=True)
    bundle = run_scenario(scenario)
    manifest = Manifest("experiment", {"scenario": scenario.name},
                        {"seed": scenario.seed})
    if scenario.name == "image-denoise":
        write_pgm(os.path.join(out_dir, "truth.pgm"), bundle.truth)
        write_pgm(os.path.join(out_dir, "noisy.pgm"), bundle.noisy)
        write_pgm(os.path.join(out_dir, "clean.pgm"), bundle.clean)
        body = [
            f"rows: {bundle.truth.shape[0]}",
            f"cols: {bundle.truth.shape[1]}",
            f"noise_pixels: {int(bundle.mask.sum())}",
            f"flagged: {int(bundle.flagged.sum())}",
            f"psnr_noisy: {_fmt(bundle.psnr_noisy)}",
            f"psnr_clean: {_fmt(bundle.psnr_clean)}",
            f"sensitivity: {_fmt(bundle.sensitivity)}",
            f"specificity: {_fmt(bundle.specificity)}",
        ]
        _write_report(os.path.join(out_dir, "report.txt"), manifest, body)
        return EXIT_OK

    raw, data, result = bundle.raw, bundle.result.data, bundle.result
    _write_report(os.path.join(out_dir, "report.txt"), manifest,
                  _fit_body(raw, data, bundle.uw_model, bundle.mse_uw,
                            result, bundle.outliers))
    _write_csv(os.path.join(out_dir, "weights.csv"),
               ("i", "X", "Y", "x", "y", "e", "p", "outlier"),
               _weights_rows(raw, data, result, bundle.outliers))
    _write_csv(os.path.join(out_dir, "trace.csv"),
               ("stage", "r", "mse", "entropy", "beta"),
               ((k, t.r, t.mse, t.entropy, t.beta)
                for k, t in enumerate(result.trace)))
    _write_csv(os.path.join(out_dir, "history.csv"),
               ("r", "entropy") + tuple(f"p{i+1}" for i in range(raw.n)),
               ((row.r, row.entropy) + tuple(float(v) for v in row.weights)
                for row in bundle.history))
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def main(argv=None):
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 means no-convergence here
        return EXIT_OK if not exc.code else EXIT_INPUT_ERROR
    handlers = {"fit": cmd_fit, "denoise": cmd_denoise,
                "experiment": cmd_experiment}
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
