"""Command-line front door.

Subcommands: run, noise, extrapolate, validate, serve. The ``run`` exit code
is the product: 0 = REALISTIC, 3 = UNREALISTIC, so shell pipelines can branch
on feasibility. Other exits: 1 usage, 2 data error, 4 internal.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from snoopy import _backend, datamodel, estimator, noise, study
from snoopy.errors import SnoopyError

EXIT_REALISTIC = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UNREALISTIC = 3
EXIT_INTERNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="snoopy",
                     description="Feasibility studies from precomputed embeddings")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a feasibility study from a manifest")
    p_run.add_argument("manifest", type=Path)
    p_run.add_argument("--json", type=Path, default=None,
                       help="write the machine-readable result here")
    p_run.add_argument("--curves-out", type=Path, default=None,
                       help="write per-arm curves as CSV (arm, n_consumed, "
                            "err_1nn, ber_estimate)")
    p_run.add_argument("--window", type=int, default=10,
                       help="extrapolation fit window (curve points)")

    p_noise = sub.add_parser("noise", help="inject label noise into an SNPL file")
    p_noise.add_argument("labels", type=Path)
    p_noise.add_argument("--rho", type=float, default=None,
                         help="uniform noise level in [0, 1]")
    p_noise.add_argument("--transition", type=Path, default=None,
                         help="JSON transition matrix {C, t}")
    p_noise.add_argument("--seed", type=int, default=0)
    p_noise.add_argument("--out", type=Path, required=True)

    p_ex = sub.add_parser("extrapolate",
                          help="fit a convergence curve and project samples to target")
    p_ex.add_argument("curves", type=Path, help="CSV from run --curves-out")
    p_ex.add_argument("--target", type=float, required=True)
    p_ex.add_argument("--classes", type=int, required=True)
    p_ex.add_argument("--n-current", type=int, required=True)
    p_ex.add_argument("--arm", default=None,
                      help="arm to fit when the CSV holds several")
    p_ex.add_argument("--window", type=int, default=10)
    p_ex.add_argument("--kappa", type=float, default=5.0)

    p_val = sub.add_parser("validate", help="validate a manifest and its files")
    p_val.add_argument("manifest", type=Path)

    p_serve = sub.add_parser("serve", help="start the HTTP session service")
    p_serve.add_argument("--port", type=int, default=8750)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", type=Path,
                         default=os.environ.get("SNOOPY_DATA_DIR"))
    p_serve.add_argument("--static-dir", type=Path, default=None,
                         help="serve dashboard assets from this directory")
    return parser


def _write_curves_csv(path: Path, outcome: study.StudyOutcome) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm", "n_consumed", "err_1nn", "ber_estimate"])
        for tid, arm in sorted(outcome.arms.items()):
            for p in arm.state.curve:
                writer.writerow([tid, p.n_consumed,
                                 repr(p.err_1nn), repr(p.ber_estimate)])


def _print_report(outcome: study.StudyOutcome) -> None:
    res = outcome.result
    print(f"verdict:   {res.verdict}")
    print(f"aggregate: {res.aggregate:.6f}  (winner: {res.winner})")
    print(f"target:    {res.target_accuracy:.4f}  gap: {res.gap:+.6f}")
    print("per-arm estimates:")
    for e in sorted(res.per_arm, key=lambda e: e.value):
        print(f"  {e.transformation_id:24s} err={e.err_1nn:.6f} "
              f"estimate={e.value:.6f} n={e.n_used}")
    run = outcome.run
    print(f"scheduler: {run.strategy} budget={run.budget} pulls={run.total_pulls} "
          f"tangent_breaks={run.tangent_break_count}")
    if outcome.fit is not None:
        print(f"extrapolation: alpha={outcome.fit.alpha:.4f} "
              f"intercept={outcome.fit.intercept:.4f} "
              f"residual={outcome.fit.residual:.2e}")
    if outcome.projection is not None:
        p = outcome.projection
        if p.status == "OK":
            print(f"samples to target: {p.needed}")
        else:
            print(f"samples to target: {p.status}"
                  + (f" (nominal {p.needed})" if p.needed is not None else ""))


def _cmd_run(args) -> int:
    manifest = datamodel.load_manifest(args.manifest)
    labels = datamodel.load_study_labels(manifest)
    outcome = study.run_study(manifest, labels, extrapolation_window=args.window)
    if args.json:
        args.json.write_text(json.dumps(outcome.to_dict(), indent=2))
    if args.curves_out:
        _write_curves_csv(args.curves_out, outcome)
    _print_report(outcome)
    return (EXIT_REALISTIC if outcome.result.verdict == estimator.REALISTIC
            else EXIT_UNREALISTIC)


def _cmd_noise(args) -> int:
    if (args.rho is None) == (args.transition is None):
        print("snoopy noise: exactly one of --rho / --transition is required",
              file=sys.stderr)
        return EXIT_USAGE
    labels = datamodel.read_label_file(args.labels)
    if args.rho is not None:
        noisy = noise.inject_uniform_noise(labels, args.rho, args.seed)
    else:
        tm = noise.TransitionMatrix.from_dict(
            json.loads(args.transition.read_text()))
        noisy = noise.inject_class_noise(labels, tm, args.seed)
    datamodel.write_label_file(args.out, noisy)
    changed = (noisy.labels != labels.labels).mean()
    print(f"wrote {args.out} ({len(noisy)} labels, realized flip fraction "
          f"{changed:.4f})")
    return 0


def _read_curves_csv(path: Path, arm: str | None):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append((rec["arm"], int(rec["n_consumed"]),
                         float(rec["err_1nn"]), float(rec["ber_estimate"])))
    if not rows:
        raise SnoopyError(f"{path}: no curve rows")
    arms = sorted({r[0] for r in rows})
    if arm is None:
        if len(arms) > 1:
            raise SnoopyError(f"{path} holds arms {arms}; pick one with --arm")
        arm = arms[0]
    elif arm not in arms:
        raise SnoopyError(f"arm {arm!r} not in {arms}")
    from snoopy.engine import CurvePoint

    return [CurvePoint(n, e, b) for a, n, e, b in rows if a == arm]


def _cmd_extrapolate(args) -> int:
    curve = _read_curves_csv(args.curves, args.arm)
    fit = estimator.fit_loglinear(curve, window=args.window)
    projection = estimator.samples_to_target(
        fit, args.target, args.classes, args.n_current, kappa=args.kappa)
    print(f"alpha={fit.alpha:.6f} intercept={fit.intercept:.6f} "
          f"fit_points={fit.fit_points} residual={fit.residual:.3e}")
    if projection.status == "OK":
        print(f"needed={projection.needed}")
    else:
        print(projection.status
              + (f" (nominal needed={projection.needed})"
                 if projection.needed is not None else ""))
    return 0


def _cmd_validate(args) -> int:
    manifest = datamodel.load_manifest(args.manifest)
    print(f"manifest OK: {len(manifest.transformations)} transformation(s), "
          f"n_train={manifest.n_train}, n_test={manifest.n_test}, "
          f"strategy={manifest.strategy.value}, "
          f"target={manifest.target_accuracy}")
    return 0


def _cmd_serve(args) -> int:
    from snoopy import service

    data_dir = args.data_dir or Path("snoopy-data")
    service.serve(data_dir, port=args.port, host=args.host,
                  static_dir=args.static_dir)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _backend.set_threads()
    handlers = {
        "run": _cmd_run,
        "noise": _cmd_noise,
        "extrapolate": _cmd_extrapolate,
        "validate": _cmd_validate,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except SnoopyError as exc:
        print(f"snoopy {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"snoopy {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"snoopy {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
