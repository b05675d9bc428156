"""Command-line interface.

Subcommands: register (one-shot landmark registration), simulate (Monte Carlo
study with CSV/JSON/figure reports), phantom (generate the synthetic scenario),
serve (HTTP session service), report (recompute a summary from a CSV).

Exit codes: 0 success, 1 usage, 2 degenerate configuration or parse failure,
3 I/O failure. With --quiet, stdout is machine-parseable JSON; otherwise a
human-readable table is printed. VENTRONAV_SEED overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path

from .errors import (
    DegenerateConfiguration,
    EmptyMesh,
    IncompleteCorrespondence,
    IoError,
    ParseError,
    ScaleOutOfBounds,
    TooFewPoints,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_IO = 3

DEFAULT_SEED = 1234


class _UsageExit(Exception):
    def __init__(self, message: str):
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is exit 1
    def error(self, message):
        raise _UsageExit(message)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("VENTRONAV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageExit(f"VENTRONAV_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


def _emit(args, payload: dict, human: str):
    if args.quiet:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def build_parser() -> _Parser:
    parser = _Parser(prog="ventronav", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default {DEFAULT_SEED}, or VENTRONAV_SEED)")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file with default flag values")
    parser.add_argument("--output", type=Path, default=None,
                        help="output directory for reports")
    parser.add_argument("--quiet", action="store_true",
                        help="machine-parseable JSON on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="fit the patient-to-image transform from landmark files")
    p.add_argument("--model-landmarks", required=True, type=Path)
    p.add_argument("--world-landmarks", required=True, type=Path)
    p.add_argument("--scale-mode", choices=("estimated", "fixed"), default="estimated")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("simulate", help="Monte Carlo study over a scenario")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--noise-profile", default=None,
                   help="named profile (calibrated, zero) or JSON path; "
                        "default: the scenario's noise model")
    p.add_argument("--noise-scale", type=float, default=1.0,
                   help="multiply all noise magnitudes")
    p.add_argument("--picks-per-landmark", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phantom", help="generate the synthetic phantom scenario")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--params", type=Path, default=None)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", action="append", type=Path, default=[],
                   help="extra scenario files to serve (repeatable)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="recompute summary and figures from a trials CSV")
    p.add_argument("--in", dest="in_csv", required=True, type=Path)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def cmd_register(args) -> int:
    from .io import load_landmarks
    from .registration import estimate_similarity

    model = load_landmarks(args.model_landmarks)
    world = load_landmarks(args.world_landmarks)
    result = estimate_similarity(model, world, scale_mode=args.scale_mode)
    payload = result.to_dict()
    if args.quiet:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        lines = [
            f"scale        {result.transform.scale:.6f}",
            f"rmse         {result.rmse:.6f} mm",
            f"condition    {result.condition.classification} "
            f"(ratio {result.condition.condition_ratio:.2e})",
            "rotation     " + "; ".join(
                " ".join(f"{v: .6f}" for v in row)
                for row in result.transform.rotation.as_matrix()),
            "translation  " + " ".join(f"{v:.4f}" for v in result.transform.translation),
            "residuals [mm]",
        ]
        lines += [f"  {lid.value:22s} {r:.4f}" for lid, r in result.residuals.items()]
        print("\n".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .io import Scenario, write_report
    from .montecarlo import run_study
    from .noise_profiles import resolve_noise_profile

    if args.trials < 1:
        raise _UsageExit("--trials must be >= 1")
    scenario = Scenario.load(args.scenario)
    noise = scenario.noise if args.noise_profile is None \
        else resolve_noise_profile(args.noise_profile)
    if args.noise_scale != 1.0:
        noise = noise.scaled(args.noise_scale)
    seed = _resolve_seed(args)
    results = run_study(scenario, args.trials, seed, noise=noise,
                        picks_per_landmark=args.picks_per_landmark,
                        workers=args.workers)
    out_dir = args.output or Path("ventronav-report")
    summary = write_report(results, out_dir, figures=not args.no_figures)
    human = "\n".join([
        f"trials       {summary['n_trials']}",
        f"seed         {seed}",
        f"rmse [mm]    mean {summary['rmse_mm']['mean']:.3f}  "
        f"sd {summary['rmse_mm']['sd']:.3f}  p95 {summary['rmse_mm']['p95']:.3f}",
        f"tre  [mm]    mean {summary['tre_mm']['mean']:.3f}  "
        f"sd {summary['tre_mm']['sd']:.3f}  p95 {summary['tre_mm']['p95']:.3f}",
        f"tre < {summary['tre_threshold_mm']:g} mm  "
        f"{summary['fraction_tre_below_threshold']:.1%} of trials",
        f"report       {out_dir}",
    ])
    _emit(args, {"summary": summary, "output": str(out_dir), "seed": seed}, human)
    return EXIT_OK


def cmd_phantom(args) -> int:
    from .io import generate_phantom, load_params

    params = load_params(args.params) if args.params else None
    scenario = generate_phantom(args.out, params)
    payload = {"scenario": str(Path(args.out) / "scenario.json"),
               "name": scenario.name,
               "entry_to_target_mm": scenario.metadata["entry_to_target_mm"]}
    _emit(args, payload,
          f"wrote {payload['scenario']} (entry to target "
          f"{payload['entry_to_target_mm']:.1f} mm)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_default_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        probe.close()
    app = create_default_app(extra_scenarios=args.scenario)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_report(args) -> int:
    from .io import render_figures, summarize_csv
    from .io.scenario import canonical_json

    summary = summarize_csv(args.in_csv)
    out_dir = args.output or Path(args.in_csv).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(canonical_json(summary), encoding="utf-8")
    if not args.no_figures:
        render_figures(args.in_csv, out_dir)
    _emit(args, {"summary": summary, "output": str(out_dir)},
          f"summary recomputed from {args.in_csv} into {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # --config supplies defaults; parse it first so flags still win
        if "--config" in argv:
            cfg_path = argv[argv.index("--config") + 1]
            with open(cfg_path, "r", encoding="utf-8") as fh:
                parser.set_defaults(**json.load(fh))
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageExit as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, EmptyMesh, DegenerateConfiguration, ScaleOutOfBounds,
            IncompleteCorrespondence, TooFewPoints, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IoError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
