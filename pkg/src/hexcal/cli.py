"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 validity warning (legs out of range),
3 insufficient data.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import tables
from .calibration import (OUT_OF_RANGE, OUTLIER, CalibrationDataset, PoseObservation,
                          detect_outliers, filter_workspace, fit_model, model_from_text,
                          model_to_text, predict)
from .config import load_geometry, load_scenario, reference_geometry
from .dh import chain_rows_table, extract_all_chains
from .errors import ConfigError, EmptyInput, HexcalError, InsufficientData, SingularPose
from .geometry import HOME, PoseVector
from .kinematics import forward_kinematics, inverse_kinematics
from .metrics import (build_report, dataset_errors, render_report, report_from_csv,
                      report_from_errors, report_to_csv)
from .simulator import VERIFY_STREAM, build_dataset, generate_random_poses, perturb_geometry

log = logging.getLogger("hexcal")

EXIT_OK, EXIT_INPUT, EXIT_INVALID, EXIT_INSUFFICIENT = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _geometry(args):
    if args.geometry:
        return load_geometry(args.geometry)
    return reference_geometry()


def _scenario(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _scenario_targets(scenario):
    return generate_random_poses(scenario.pose_count, scenario.geometry, scenario.seed)


def cmd_ik(args) -> int:
    geom = _geometry(args)
    legs = inverse_kinematics(PoseVector(*args.pose), geom)
    for i, length in enumerate(legs):
        print(f"leg {i}: {length:.6f}")
    print(f"valid: {'true' if legs.valid else 'false'}")
    return EXIT_OK if legs.valid else EXIT_INVALID


def cmd_fk(args) -> int:
    geom = _geometry(args)
    guess = PoseVector(*args.guess) if args.guess else HOME
    pose = forward_kinematics(np.array(args.legs), geom, guess=guess)
    for name, value in zip(("x", "y", "z", "alpha", "beta", "gamma"), pose.as_array()):
        print(f"{name}: {value:.9f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    targets = _scenario_targets(scenario)
    truth = perturb_geometry(scenario.geometry, scenario.perturbation)
    ds = build_dataset(targets, scenario.geometry, truth, scenario.noise, workers=args.jobs)
    text = tables.dataset_to_csv(ds)
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _prepare_dataset(ds: CalibrationDataset, geom) -> CalibrationDataset:
    out_of_bounds = [i for i in ds.out_of_bounds_targets(geom) if i not in ds.excluded]
    for pose_id in out_of_bounds:
        log.warning("excluding pose %d: target outside pose bounds", pose_id)
    ds = ds.exclude(out_of_bounds, OUT_OF_RANGE)
    flagged = detect_outliers(ds, geom)
    for pose_id, det in flagged:
        log.warning("excluding pose %d: near-singular target (normalized |det J| = %.3e)",
                    pose_id, det)
    return ds.exclude([pid for pid, _ in flagged], OUTLIER)


def cmd_calibrate(args) -> int:
    geom = _geometry(args)
    ds = tables.dataset_from_csv(_read(args.dataset))
    ds = _prepare_dataset(ds, geom)
    usable = ds.usable()
    if len(usable) < 2:
        log.error("only %d usable observations after exclusion; need 2", len(usable))
        return EXIT_INSUFFICIENT

    if args.model_in:
        model = model_from_text(_read(args.model_in))
    else:
        model = fit_model(ds, geom, args.option, workers=args.jobs)
    targets = {o.pose_id: o.target for o in usable}
    predicted = predict(model, sorted(targets.items()), geom, workers=args.jobs)
    kept, dropped = filter_workspace(predicted, geom)
    for pose_id, _, reason in dropped:
        log.warning("dropping prediction for pose %d: %s", pose_id, reason)
    log.info("option %d: %d observations, %d excluded, %d predictions kept, %d dropped",
             model.option, len(ds), len(ds.excluded), len(kept), len(dropped))

    out = Path(args.output or ".")
    baseline = build_report(ds)
    _write(out / "model.yaml", model_to_text(model))
    _write(out / "predictions.csv", tables.predictions_to_csv(targets, kept, dropped))
    _write(out / "report.csv", report_to_csv(baseline))
    _write(out / "report.txt", render_report(baseline, "Uncompensated errors"))
    _write(out / "errors_abs.csv", tables.errors_to_csv(dataset_errors(ds), absolute=True))
    if args.dh_audit:
        rows = []
        for obs in usable:
            rows += chain_rows_table(obs.pose_id, extract_all_chains(obs.target, geom))
        _write(out / "dh_chains.csv", tables.dh_rows_to_csv(rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = _scenario(args)
    rows = tables.predictions_from_csv(_read(args.predictions))
    targets = {i: t for i, t in enumerate(_scenario_targets(scenario), start=1)}
    for pose_id, target, *_ in rows:
        if pose_id not in targets:
            raise InputError(f"pose {pose_id} is not part of the scenario")
        if not np.allclose(target.as_array(), targets[pose_id].as_array(), rtol=0, atol=1e-6):
            raise InputError(f"pose {pose_id}: target differs from the scenario's target")
    active = [(pid, pred) for pid, _, pred, dropped, _ in rows if not dropped]
    if not active:
        raise InputError("no kept predictions to verify")

    truth = perturb_geometry(scenario.geometry, scenario.perturbation)
    remeasured = build_dataset([p for _, p in active], scenario.geometry, truth, scenario.noise,
                               workers=args.jobs, stream=VERIFY_STREAM,
                               pose_ids=[pid for pid, _ in active])
    ds = CalibrationDataset(
        [PoseObservation(o.pose_id, targets[o.pose_id], o.measured)
         for o in remeasured.observations], remeasured.excluded)
    baseline = report_from_csv(_read(args.baseline)) if args.baseline else None
    report = build_report(ds, baseline)
    out = Path(args.output or ".")
    _write(out / "verify_report.csv", report_to_csv(report))
    _write(out / "verify_report.txt", render_report(report, "Compensated errors"))
    _write(out / "verify_errors_abs.csv", tables.errors_to_csv(dataset_errors(ds), absolute=True))
    sys.stdout.write(render_report(report, "Compensated errors"))
    return EXIT_OK


def cmd_report(args) -> int:
    text = _read(args.input)
    header = tables.sniff_header(text)
    if header == tables.DATASET_HEADER:
        errors = dataset_errors(tables.dataset_from_csv(text))
    elif header == tables.ERROR_HEADER:
        errors = tables.errors_from_csv(text)
    else:
        raise InputError(f"{args.input}: neither a dataset CSV nor an error CSV")
    if not errors:
        raise InputError(f"{args.input}: no usable rows")
    baseline = report_from_csv(_read(args.baseline)) if args.baseline else None
    report = report_from_errors(np.stack([e for _, e in errors]), baseline)
    rendered = render_report(report)
    sys.stdout.write(rendered)
    if args.output:
        out = Path(args.output)
        _write(out / "report.txt", rendered)
        _write(out / "report.csv", report_to_csv(report))
        _write(out / "errors_abs.csv", tables.errors_to_csv(errors, absolute=True))
    return EXIT_OK


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--geometry", metavar="FILE", default=default,
                        help="geometry YAML (default: bundled reference platform)")
    parser.add_argument("--seed", type=int, default=default,
                        help="override the scenario's pose-generation seed")
    parser.add_argument("--output", metavar="PATH", default=default,
                        help="output file (simulate) or directory (other commands)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hexcal", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ik", parents=[common], help="leg lengths for a pose")
    p.add_argument("pose", type=float, nargs=6, metavar=("X", "Y", "Z", "ALPHA", "BETA", "GAMMA"))
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("fk", parents=[common], help="pose for six leg lengths")
    p.add_argument("legs", type=float, nargs=6, metavar="L")
    p.add_argument("--guess", type=float, nargs=6, metavar="V")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("simulate", parents=[common], help="simulate a measurement dataset")
    p.add_argument("scenario")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="fit a compensation option")
    p.add_argument("dataset")
    p.add_argument("--option", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--model-in", metavar="FILE", help="apply a saved model instead of fitting")
    p.add_argument("--dh-audit", action="store_true", help="also write dh_chains.csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("verify", parents=[common], help="re-measure predicted poses")
    p.add_argument("predictions")
    p.add_argument("--scenario", required=True)
    p.add_argument("--baseline", metavar="REPORT_CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common], help="error report from a dataset/error CSV")
    p.add_argument("input")
    p.add_argument("--baseline", metavar="REPORT_CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InsufficientData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (InputError, ConfigError, tables.TableError, EmptyInput, SingularPose,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HexcalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
