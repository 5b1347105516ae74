"""Experiment runner: seeded Monte-Carlo sweeps and asymptotic probes.

Every trial owns a keyed random stream derived from (seed, sweep index,
trial), and the channel stream does not depend on the scheme, so different
schemes at the same sweep point consume identical channel draws (paired
comparisons). Trials run serially or in a thread pool with bit-identical
results either way; records are canonically ordered before emission.
"""

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .digital import (bdzf_full_digital, bdzf_precoder, slnr_full_digital,
                      wmmse_full_digital)
from .errors import InfeasibleError, InvalidInputError
from .fit import bdzf_hybrid, iterative_pp_fit, make_fit_problem, slnr_hybrid
from .joint import SolverOptions, mm_alt_opt, two_stage_pp
from .metrics import leakage_norm, sum_rate
from .model import ChannelSet, RngSpec, SystemConfig, gen_mmwave, gen_rayleigh
from .partial import partial_mm_alt_opt

SCHEMES = ("fd-wmmse", "fd-bdzf", "fd-slnr", "mm-alt-opt", "two-stage-pp",
           "hybrid-bdzf", "hybrid-slnr", "partial-tx", "partial-txrx")

SWEEP_AXES = ("snr_db", "n_rf", "n_t", "k_users")

CSV_HEADER = ("scheme,sweep_axis,sweep_value,trial,seed,sum_rate_bits,"
              "outer_iterations,converged,wall_time_ms")


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte-Carlo experiment: a scheme swept over one axis."""

    scheme: str
    config: SystemConfig
    channel_model: str = "mmwave"
    paths: int = 10
    sweep_axis: str = "snr_db"
    sweep_values: Tuple[float, ...] = (0.0,)
    trials: int = 25
    seed: int = 0
    options: SolverOptions = field(default_factory=SolverOptions)
    record_timing: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if self.channel_model not in ("rayleigh", "mmwave"):
            raise InvalidInputError(f"unknown channel model {self.channel_model!r}")
        if self.sweep_axis not in SWEEP_AXES:
            raise InvalidInputError(f"unknown sweep axis {self.sweep_axis!r}")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if len(self.sweep_values) == 0:
            raise InvalidInputError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
            raise InvalidInputError("sweep values must be strictly increasing")


@dataclass
class SimRecord:
    """Outcome of one (scheme, sweep value, trial) cell."""

    scheme: str
    sweep_axis: str
    sweep_value: float
    trial: int
    seed: int
    sum_rate_bits: float
    per_pair_rates: List[float]
    outer_iterations: int
    converged: bool
    wall_time_ms: float = 0.0
    skipped: bool = False
    skip_reason: str = ""


def config_at(spec: ExperimentSpec, value) -> SystemConfig:
    """Base configuration with one sweep axis applied.

    SNR sweeps fix sigma2 = 1 and set P = 10^(SNR/10); the dimension sweeps
    replicate the first pair's dimensions.
    """
    c = spec.config
    if spec.sweep_axis == "snr_db":
        P = 10.0 ** (float(value) / 10.0)
        return SystemConfig(c.Nt, c.Nr, c.Nt_rf, c.Nr_rf, c.Ns,
                            (P,) * c.K, (1.0,) * c.K)
    if spec.sweep_axis == "n_rf":
        v = int(value)
        return SystemConfig(c.Nt, c.Nr, (v,) * c.K, (v,) * c.K, c.Ns, c.P, c.sigma2)
    if spec.sweep_axis == "n_t":
        v = int(value)
        return SystemConfig((v,) * c.K, c.Nr, c.Nt_rf, c.Nr_rf, c.Ns, c.P, c.sigma2)
    K = int(value)
    return SystemConfig.uniform(K=K, Nt=c.Nt[0], Nr=c.Nr[0], Nt_rf=c.Nt_rf[0],
                                Nr_rf=c.Nr_rf[0], Ns=c.Ns[0], P=c.P[0],
                                sigma2=c.sigma2[0])


def feasibility_reason(scheme: str, config: SystemConfig, channel_model: str,
                       paths: int) -> Optional[str]:
    """Reason a scheme cannot run at this configuration, or None."""
    if scheme in ("fd-bdzf", "hybrid-bdzf"):
        for k in range(config.K):
            leak = 0
            for i in range(config.K):
                if i == k:
                    continue
                rank = config.Nr[i] if channel_model == "rayleigh" \
                    else min(config.Nr[i], paths)
                leak += rank
            if config.Nt[k] - leak < config.Ns[k]:
                return (f"BD-ZF infeasible for pair {k}: null-space dimension "
                        f"{config.Nt[k] - leak} < Ns={config.Ns[k]}")
    return None


def _draw_channels(spec: ExperimentSpec, config: SystemConfig,
                   value_idx: int, trial: int) -> ChannelSet:
    stream = 2 * (value_idx * spec.trials + trial)
    rng = RngSpec(spec.seed, stream).generator()
    if spec.channel_model == "rayleigh":
        return gen_rayleigh(config, rng)
    return gen_mmwave(config, spec.paths, rng)


def _solver_rng(spec: ExperimentSpec, value_idx: int, trial: int) -> np.random.Generator:
    stream = 2 * (value_idx * spec.trials + trial) + 1
    return RngSpec(spec.seed, stream).generator()


def solve_scheme(scheme: str, config: SystemConfig, channels: ChannelSet,
                 opts: SolverOptions, rng: Optional[np.random.Generator] = None):
    """Run one scheme; returns (state, outer_iterations, converged)."""
    if scheme == "fd-wmmse":
        state, trace = wmmse_full_digital(config, channels, eps_obj=opts.eps_obj,
                                          max_iter=opts.max_outer)
        return state, trace.iterations, trace.converged
    if scheme == "fd-bdzf":
        return bdzf_full_digital(config, channels), 0, True
    if scheme == "fd-slnr":
        return slnr_full_digital(config, channels), 0, True
    if scheme == "mm-alt-opt":
        state, trace = mm_alt_opt(config, channels, opts, rng)
        return state, trace.iterations, trace.converged
    if scheme == "two-stage-pp":
        state, trace = two_stage_pp(config, channels, opts)
        return state, trace.iterations, trace.converged
    if scheme == "hybrid-bdzf":
        return bdzf_hybrid(config, channels, opts), 0, True
    if scheme == "hybrid-slnr":
        return slnr_hybrid(config, channels, opts), 0, True
    if scheme == "partial-tx":
        state, trace = partial_mm_alt_opt(config, channels, opts,
                                          layout_tx_only=True, rng=rng)
        return state, trace.iterations, trace.converged
    state, trace = partial_mm_alt_opt(config, channels, opts,
                                      layout_tx_only=False, rng=rng)
    return state, trace.iterations, trace.converged


def _run_cell(spec: ExperimentSpec, value_idx: int, trial: int) -> SimRecord:
    value = spec.sweep_values[value_idx]
    base = dict(scheme=spec.scheme, sweep_axis=spec.sweep_axis,
                sweep_value=value, trial=trial, seed=spec.seed)
    try:
        config = config_at(spec, value)
    except InvalidInputError as exc:
        return SimRecord(**base, sum_rate_bits=0.0, per_pair_rates=[],
                         outer_iterations=0, converged=False,
                         skipped=True, skip_reason=str(exc))
    reason = feasibility_reason(spec.scheme, config, spec.channel_model, spec.paths)
    if reason is not None:
        return SimRecord(**base, sum_rate_bits=0.0, per_pair_rates=[],
                         outer_iterations=0, converged=False,
                         skipped=True, skip_reason=reason)
    channels = _draw_channels(spec, config, value_idx, trial)
    rng = _solver_rng(spec, value_idx, trial)
    t0 = time.perf_counter()
    try:
        state, iters, converged = solve_scheme(spec.scheme, config, channels,
                                               spec.options, rng)
    except InfeasibleError as exc:
        return SimRecord(**base, sum_rate_bits=0.0, per_pair_rates=[],
                         outer_iterations=0, converged=False,
                         skipped=True, skip_reason=str(exc))
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    report = sum_rate(config, channels, state)
    return SimRecord(**base, sum_rate_bits=report.sum_rate,
                     per_pair_rates=list(report.rates),
                     outer_iterations=iters, converged=converged,
                     wall_time_ms=elapsed_ms if spec.record_timing else 0.0)


def run_experiment(spec: ExperimentSpec,
                   workers: Optional[int] = None) -> List[SimRecord]:
    """All (sweep value, trial) cells of the experiment, canonically ordered.

    ``workers`` defaults to the HYBRIDBF_WORKERS environment variable (1 if
    unset); results are identical regardless of parallelism.
    """
    if workers is None:
        workers = int(os.environ.get("HYBRIDBF_WORKERS", "1"))
    cells = [(v, t) for v in range(len(spec.sweep_values))
             for t in range(spec.trials)]
    if workers <= 1:
        records = [_run_cell(spec, v, t) for v, t in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda c: _run_cell(spec, *c), cells))
    order = {v: j for j, v in enumerate(spec.sweep_values)}
    records.sort(key=lambda r: (order[r.sweep_value], r.trial))
    return records


# ---------------------------------------------------------------------------
# asymptotic-orthogonality probe

@dataclass
class ProbeRow:
    n_t: int
    corr_median: float
    leakage_median: float


def run_asymptotic_probe(channel_model: str, Nt_list: Sequence[int], trials: int,
                         seed: int, paths: int = 10) -> List[ProbeRow]:
    """Channel-correlation and hybrid BD-ZF leakage medians versus Nt.

    The correlation metric is ||H_ik H_kk^H||_F / Nt over all ordered cross
    pairs; the leakage metric is the worst cross-pair residual of the
    phase-projection-fitted BD-ZF precoder.
    """
    if any(b <= a for a, b in zip(Nt_list, Nt_list[1:])):
        raise InvalidInputError("Nt_list must be strictly increasing")
    rows = []
    for j, Nt in enumerate(Nt_list):
        config = SystemConfig.uniform(K=2, Nt=int(Nt), Nr=16, Nt_rf=4, Nr_rf=4, Ns=4)
        corrs, leaks = [], []
        for t in range(trials):
            rng = RngSpec(seed, j * trials + t).generator()
            channels = gen_rayleigh(config, rng) if channel_model == "rayleigh" \
                else gen_mmwave(config, paths, rng)
            for k in range(config.K):
                for i in range(config.K):
                    if i == k:
                        continue
                    corrs.append(float(np.linalg.norm(
                        channels.H[i][k] @ channels.H[k][k].conj().T)) / Nt)
                target = bdzf_precoder(config, channels, k)
                problem = make_fit_problem(target, config.Nt_rf[k], config.P[k])
                F_A, F_D = iterative_pp_fit(problem)
                leaks.append(leakage_norm(channels, k, F_A @ F_D))
        rows.append(ProbeRow(n_t=int(Nt), corr_median=float(np.median(corrs)),
                             leakage_median=float(np.median(leaks)) if leaks else 0.0))
    return rows


# ---------------------------------------------------------------------------
# output

def _fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def emit(records: List[SimRecord], path: str, fmt: str = "csv") -> None:
    """Write records as CSV (fixed column schema) or JSON (all fields)."""
    if fmt not in ("csv", "json"):
        raise InvalidInputError(f"unknown output format {fmt!r}")
    try:
        if fmt == "csv":
            lines = [CSV_HEADER]
            for r in records:
                lines.append(",".join([
                    r.scheme, r.sweep_axis, _fmt_number(r.sweep_value),
                    str(r.trial), str(r.seed), _fmt_number(r.sum_rate_bits),
                    str(r.outer_iterations), _fmt_number(r.converged),
                    _fmt_number(r.wall_time_ms)]))
            text = "\n".join(lines) + "\n"
        else:
            payload = [r.__dict__ for r in records]
            text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def load_csv(path: str) -> List[SimRecord]:
    """Parse a CSV written by :func:`emit` (round-trips the CSV columns)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            value = row["sweep_value"]
            out.append(SimRecord(
                scheme=row["scheme"], sweep_axis=row["sweep_axis"],
                sweep_value=int(value) if "." not in value and "e" not in value
                else float(value),
                trial=int(row["trial"]), seed=int(row["seed"]),
                sum_rate_bits=float(row["sum_rate_bits"]), per_pair_rates=[],
                outer_iterations=int(row["outer_iterations"]),
                converged=row["converged"] == "true",
                wall_time_ms=float(row["wall_time_ms"])))
    return out
