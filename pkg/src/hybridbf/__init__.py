"""Hybrid analog/digital transceiver designs for K-user MIMO interference channels.

Solvers: joint WMMSE alternating optimization with MM phase updates, a
decoupled two-stage phase-projection design, BD-ZF and SLNR-Max fitted
hybrid designs, partially-connected variants, and the fully-digital
baselines they are measured against. A seeded Monte-Carlo harness sweeps
SNR, RF-chain count, antenna count and user count.
"""

from .digital import (bdzf_full_digital, bdzf_precoder, gevd,
                      mmse_full_digital_combiner, null_space_basis,
                      slnr_full_digital, slnr_precoder, waterfill,
                      wmmse_full_digital)
from .errors import (DimensionError, HybridBFError, InfeasibleError,
                     InvalidInputError, NumericalError)
from .fit import (PrecoderFitProblem, bdzf_hybrid, iterative_pp_fit,
                  make_fit_problem, mm_hybrid_combiner, slnr_hybrid,
                  unconstrained_analog)
from .harness import (ExperimentSpec, ProbeRow, SimRecord, emit, load_csv,
                      run_asymptotic_probe, run_experiment, solve_scheme)
from .joint import (AltOptTrace, SolverOptions, mm_alt_opt, two_stage_pp)
from .metrics import (MseReport, RateReport, leakage_norm, mse_matrices, slnr,
                      sum_rate, tx_power)
from .mm import MMTrace, UnitModulusQP, lambda_max_bound, mm_solve, mm_step
from .model import (ChannelSet, FullDigitalState, HybridState, PathCluster,
                    RngSpec, SystemConfig, check_feasibility, gen_mmwave,
                    gen_rayleigh, random_unit_modulus, steering_vector)
from .partial import (PartialLayout, assemble_partial_combiner_qp,
                      assemble_partial_precoder_qp, make_layout,
                      partial_mm_alt_opt)

__version__ = "0.1.0"
