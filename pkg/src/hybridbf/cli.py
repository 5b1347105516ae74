"""Command-line front end for the experiment runner and asymptotic probe.

Configuration precedence: built-in preset < --config JSON file < explicit
flags. Exit codes: 0 success, 2 invalid specification, 3 infeasible at
every sweep point, 4 I/O failure.
"""

import argparse
import json
import sys
from typing import List, Optional

from .errors import InvalidInputError
from .harness import (SCHEMES, SWEEP_AXES, ExperimentSpec, emit,
                      run_asymptotic_probe, run_experiment)
from .joint import SolverOptions
from .model import SystemConfig

PRESETS = {
    # experiment defaults mirroring the simulated setup: K=2 pairs,
    # Nt=64 / Nr=16 antennas, 4 RF chains, 4 streams, 10-path clustered channel
    "paper": dict(K=2, Nt=64, Nr=16, Nt_rf=4, Nr_rf=4, Ns=4,
                  channel_model="mmwave", paths=10, trials=100),
    "desk": dict(K=2, Nt=64, Nr=16, Nt_rf=4, Nr_rf=4, Ns=4,
                 channel_model="mmwave", paths=10, trials=25),
}


def _parse_values(text: str) -> tuple:
    out = []
    for token in text.split(","):
        token = token.strip()
        try:
            out.append(int(token))
        except ValueError:
            out.append(float(token))
    return tuple(out)


def build_spec(args) -> ExperimentSpec:
    """Merge preset, config file and flags into an ExperimentSpec."""
    settings = dict(PRESETS[args.preset])
    settings.update(scheme="mm-alt-opt", sweep="snr_db",
                    values=(-10, -5, 0, 5, 10), seed=0, P=1.0, sigma2=1.0,
                    solver={}, record_timing=False)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        system = file_cfg.pop("system", {})
        settings.update(system)
        settings.update(file_cfg)
    for flag, key in (("scheme", "scheme"), ("sweep", "sweep"),
                      ("trials", "trials"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            settings[key] = value
    if args.values is not None:
        settings["values"] = _parse_values(args.values)
    if args.timing:
        settings["record_timing"] = True
    config = SystemConfig.uniform(
        K=int(settings["K"]), Nt=int(settings["Nt"]), Nr=int(settings["Nr"]),
        Nt_rf=int(settings["Nt_rf"]), Nr_rf=int(settings["Nr_rf"]),
        Ns=int(settings["Ns"]), P=float(settings.get("P", 1.0)),
        sigma2=float(settings.get("sigma2", 1.0)))
    options = SolverOptions(**settings.get("solver", {}))
    return ExperimentSpec(
        scheme=settings["scheme"], config=config,
        channel_model=settings["channel_model"], paths=int(settings["paths"]),
        sweep_axis=settings["sweep"], sweep_values=tuple(settings["values"]),
        trials=int(settings["trials"]), seed=int(settings["seed"]),
        options=options, record_timing=bool(settings["record_timing"]))


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment description")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--sweep", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="records.csv", help="output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (breaks byte-level reproducibility)")
    p.add_argument("--workers", type=int, default=None,
                   help="thread count (default: HYBRIDBF_WORKERS or 1)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridbf",
        description="Hybrid transceiver design sweeps over MIMO interference channels")
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="run a Monte-Carlo experiment")
    _add_run_flags(run_p)
    probe_p = sub.add_parser("probe", help="asymptotic orthogonality/leakage probe")
    probe_p.add_argument("--model", choices=("rayleigh", "mmwave"), default="rayleigh")
    probe_p.add_argument("--nt", default="32,64,128,256,512",
                         help="comma-separated increasing antenna counts")
    probe_p.add_argument("--paths", type=int, default=10)
    probe_p.add_argument("--trials", type=int, default=25)
    probe_p.add_argument("--seed", type=int, default=0)
    probe_p.add_argument("--out", default="probe.csv")
    probe_p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _run(args) -> int:
    try:
        spec = build_spec(args)
    except (InvalidInputError, ValueError, KeyError) as exc:
        print(f"invalid experiment specification: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 4
    records = run_experiment(spec, workers=args.workers)
    if all(r.skipped for r in records):
        reasons = {r.skip_reason for r in records}
        print("experiment infeasible at every sweep point:", file=sys.stderr)
        for reason in sorted(reasons):
            print(f"  {reason}", file=sys.stderr)
        return 3
    try:
        emit(records, args.out, args.format)
    except OSError as exc:
        print(exc, file=sys.stderr)
        return 4
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _probe(args) -> int:
    try:
        nt_list = [int(v) for v in args.nt.split(",")]
        rows = run_asymptotic_probe(args.model, nt_list, args.trials, args.seed,
                                    paths=args.paths)
    except (InvalidInputError, ValueError) as exc:
        print(f"invalid probe specification: {exc}", file=sys.stderr)
        return 2
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            if args.format == "csv":
                fh.write("n_t,corr_median,leakage_median\n")
                for r in rows:
                    fh.write(f"{r.n_t},{r.corr_median!r},{r.leakage_median!r}\n")
            else:
                json.dump([r.__dict__ for r in rows], fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        print(f"cannot write probe output: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {len(rows)} probe rows to {args.out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("run", "probe", "-h", "--help"):
        argv.insert(0, "run")
    args = make_parser().parse_args(argv)
    if args.command == "probe":
        return _probe(args)
    return _run(args)


if __name__ == "__main__":
    raise SystemExit(main())
