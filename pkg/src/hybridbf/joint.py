"""Joint hybrid WMMSE design via MM-based alternating optimization.

The solver works on the substituted digital precoder Ft_D (so the power
constraint is Tr(Ft_D Ft_D^H) <= P) and treats the analog precoder under
the large-array surrogate F_A / sqrt(Nt). Analog stages are unit-modulus
QPs handed to the MM engine. Also provides the decoupled two-stage design
that fixes the analog stages at phase projections of the channel's
singular vectors and alternates only the digital blocks.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .digital import power_constrained_wmmse_precoder
from .linalg import herm, hermitian_sqrt, solve_hpd, svd_fixed, unvec, vec
from .metrics import pairwise_mse, wmmse_objective
from .mm import MMTrace, UnitModulusQP, mm_solve
from .model import ChannelSet, HybridState, SystemConfig, random_unit_modulus


@dataclass
class SolverOptions:
    """Convergence controls for the alternating solvers.

    ``eps_obj`` is a relative tolerance on the objective change; ``max_outer``
    caps outer alternation rounds and ``max_inner`` the MM sub-iterations.
    """

    eps_obj: float = 1e-4
    max_outer: int = 100
    max_inner: int = 50
    init_mode: str = "two-stage-pp"  # or "random-phase"

    def __post_init__(self):
        if self.eps_obj <= 0:
            raise ValueError("eps_obj must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.init_mode not in ("two-stage-pp", "random-phase"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class AltOptTrace:
    """Objective after each outer round plus per-block inner MM traces."""

    outer_objectives: List[float] = field(default_factory=list)
    inner_precoder: List[List[MMTrace]] = field(default_factory=list)
    inner_combiner: List[List[MMTrace]] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.outer_objectives)


@dataclass
class JointState:
    """Working state of the alternating solvers.

    ``Ft_D`` is the substituted digital precoder; the reportable digital
    precoder is recovered at the end as (F_A^H F_A)^{-1/2} Ft_D.
    """

    F_A: List[np.ndarray]
    Ft_D: List[np.ndarray]
    G_A: List[np.ndarray]
    G_D: List[np.ndarray]
    W: List[np.ndarray]


def effective_precoders(state: JointState, config: SystemConfig) -> List[np.ndarray]:
    """Composite precoders under the F_A / sqrt(Nt) surrogate."""
    return [state.F_A[k] @ state.Ft_D[k] / np.sqrt(config.Nt[k])
            for k in range(config.K)]


def surrogate_objective(state: JointState, channels: ChannelSet,
                        config: SystemConfig) -> float:
    """WMMSE objective evaluated with the large-array surrogate precoders."""
    C = effective_precoders(state, config)
    combiners = [state.G_A[k] @ state.G_D[k] for k in range(config.K)]
    Es = pairwise_mse(config, channels, C, combiners)
    return wmmse_objective(Es, state.W, list(config.Ns))


def initial_state(config: SystemConfig, channels: ChannelSet, mode: str,
                  rng: Optional[np.random.Generator] = None) -> JointState:
    """Starting point: phase-projected channel singular vectors or random phases."""
    F_A, G_A, Ft_D, G_D, W = [], [], [], [], []
    for k in range(config.K):
        Nt, Nr = config.Nt[k], config.Nr[k]
        n_trf, n_rrf, Ns = config.Nt_rf[k], config.Nr_rf[k], config.Ns[k]
        if mode == "two-stage-pp":
            U, _, Vh = svd_fixed(channels.H[k][k], full_matrices=True)
            F_A.append(np.exp(1j * np.angle(Vh.conj().T[:, :n_trf])))
            G_A.append(np.exp(1j * np.angle(U[:, :n_rrf])))
        else:
            if rng is None:
                raise ValueError("random-phase initialization needs an rng")
            F_A.append(random_unit_modulus(Nt, n_trf, rng))
            G_A.append(random_unit_modulus(Nr, n_rrf, rng))
        Ft = np.zeros((n_trf, Ns), dtype=complex)
        Ft[:Ns, :] = np.eye(Ns)
        Ft_D.append(np.sqrt(config.P[k] / Ns) * Ft)
        G_D.append(np.zeros((n_rrf, Ns), dtype=complex))
        W.append(np.eye(Ns, dtype=complex))
    return JointState(F_A=F_A, Ft_D=Ft_D, G_A=G_A, G_D=G_D, W=W)


# ---------------------------------------------------------------------------
# block updates

def update_digital_combiner(state: JointState, channels: ChannelSet,
                            config: SystemConfig,
                            composites: Optional[List[np.ndarray]] = None
                            ) -> List[np.ndarray]:
    """Per-pair Wiener filter on the analog-combined observation."""
    C = composites if composites is not None else effective_precoders(state, config)
    out = []
    for k in range(config.K):
        GA = state.G_A[k]
        J = [GA.conj().T @ channels.H[k][i] @ C[i] for i in range(config.K)]
        Q_inv = config.sigma2[k] * (GA.conj().T @ GA)
        for Ji in J:
            Q_inv = Q_inv + Ji @ Ji.conj().T
        out.append(solve_hpd(Q_inv, J[k]))
    return out


def update_weights(state: JointState, channels: ChannelSet,
                   config: SystemConfig,
                   composites: Optional[List[np.ndarray]] = None
                   ) -> List[np.ndarray]:
    """W_k = E_k^{-1} with the surrogate MSE matrices."""
    C = composites if composites is not None else effective_precoders(state, config)
    combiners = [state.G_A[k] @ state.G_D[k] for k in range(config.K)]
    Es = pairwise_mse(config, channels, C, combiners)
    return [herm(np.linalg.inv(E)) for E in Es]


def update_digital_precoder(state: JointState, channels: ChannelSet,
                            config: SystemConfig,
                            eff_analog: Optional[List[np.ndarray]] = None
                            ) -> List[np.ndarray]:
    """Power-constrained quadratic solve for the substituted digital precoders.

    ``eff_analog`` is the effective analog precoder per pair; defaults to
    the fully-connected surrogate F_A / sqrt(Nt).
    """
    if eff_analog is None:
        eff_analog = [state.F_A[k] / np.sqrt(config.Nt[k]) for k in range(config.K)]
    out = []
    for k in range(config.K):
        L_list = [state.G_D[i].conj().T @ state.G_A[i].conj().T
                  @ channels.H[i][k] @ eff_analog[k]
                  for i in range(config.K)]
        out.append(power_constrained_wmmse_precoder(L_list, state.W, k, config.P[k]))
    return out


def _weight_factor(W: np.ndarray) -> np.ndarray:
    """Factor R with W = R R^H (Cholesky, eigen fallback for PSD W)."""
    try:
        return np.linalg.cholesky(herm(W))
    except np.linalg.LinAlgError:
        return hermitian_sqrt(W)


def _precoder_factors(state: JointState, channels: ChannelSet,
                      config: SystemConfig, k: int,
                      col_scale: np.ndarray) -> List[tuple]:
    """Low-rank factors (C_i, L_i) with the quadratic matrix
    sum_i kron(C_i C_i^H, L_i L_i^H)."""
    Ft = state.Ft_D[k]
    out = []
    for i in range(config.K):
        M = channels.H[i][k].conj().T @ state.G_A[i] @ state.G_D[i]
        C_i = col_scale[:, np.newaxis] * Ft.conj()
        L_i = M @ _weight_factor(state.W[i])
        out.append((C_i, L_i))
    return out


def analog_precoder_qp(state: JointState, channels: ChannelSet,
                       config: SystemConfig, k: int,
                       col_scale: Optional[np.ndarray] = None) -> UnitModulusQP:
    """Quadratic form of the objective in vec(F_A_k).

    ``col_scale`` holds the per-column scaling of the effective analog
    precoder (1/sqrt(Nt) everywhere for the fully-connected surrogate;
    per-block values for partially-connected layouts).
    """
    n_trf = config.Nt_rf[k]
    if col_scale is None:
        col_scale = np.full(n_trf, 1.0 / np.sqrt(config.Nt[k]))
    A = np.zeros((config.Nt[k] * n_trf,) * 2, dtype=complex)
    for C_i, L_i in _precoder_factors(state, channels, config, k, col_scale):
        A = A + np.kron(C_i @ C_i.conj().T, L_i @ L_i.conj().T)
    Ft = state.Ft_D[k]
    M_kk = channels.H[k][k].conj().T @ state.G_A[k] @ state.G_D[k]
    a = vec(M_kk @ state.W[k] @ Ft.conj().T @ np.diag(col_scale))
    return UnitModulusQP(A=herm(A), a=a)


def _precoder_lam_max(state: JointState, channels: ChannelSet,
                      config: SystemConfig, k: int,
                      col_scale: np.ndarray) -> float:
    """Exact lam_max of the precoder quadratic matrix via its thin factor."""
    cols = [np.kron(C_i, L_i)
            for C_i, L_i in _precoder_factors(state, channels, config, k, col_scale)]
    V = np.hstack(cols)
    return float(max(np.linalg.eigvalsh(herm(V.conj().T @ V))[-1], 0.0))


def _combiner_parts(state: JointState, channels: ChannelSet,
                    config: SystemConfig, k: int,
                    composites: List[np.ndarray]):
    """Received covariance, weighted digital Gram and linear term of the
    combiner QP: A = kron(Wg^T, R), linear term d."""
    R = config.sigma2[k] * np.eye(config.Nr[k], dtype=complex)
    for i in range(config.K):
        Hc = channels.H[k][i] @ composites[i]
        R = R + Hc @ Hc.conj().T
    GD, W = state.G_D[k], state.W[k]
    Wg = herm(GD @ W @ GD.conj().T)
    d = vec(channels.H[k][k] @ composites[k] @ W @ GD.conj().T)
    return herm(R), Wg, d


def analog_combiner_qp(state: JointState, channels: ChannelSet,
                       config: SystemConfig, k: int,
                       composites: Optional[List[np.ndarray]] = None) -> UnitModulusQP:
    """Quadratic form of the objective in vec(G_A_k).

    ``composites`` are the effective transmit precoders; defaults to the
    fully-connected surrogate.
    """
    if composites is None:
        composites = effective_precoders(state, config)
    R, Wg, d = _combiner_parts(state, channels, config, k, composites)
    return UnitModulusQP(A=herm(np.kron(Wg.T, R)), a=d)


def update_analog_precoder(state: JointState, channels: ChannelSet,
                           config: SystemConfig, opts: SolverOptions
                           ) -> Tuple[List[np.ndarray], List[MMTrace]]:
    """MM descent on each pair's analog precoder (problems are independent)."""
    out, traces = [], []
    for k in range(config.K):
        col_scale = np.full(config.Nt_rf[k], 1.0 / np.sqrt(config.Nt[k]))
        qp = analog_precoder_qp(state, channels, config, k, col_scale)
        lam = _precoder_lam_max(state, channels, config, k, col_scale)
        x0 = vec(state.F_A[k])
        x, tr = mm_solve(qp, x0, eps_obj=opts.eps_obj, max_iter=opts.max_inner,
                         lam=lam)
        out.append(unvec(x, config.Nt[k], config.Nt_rf[k]))
        traces.append(tr)
    return out, traces


def update_analog_combiner(state: JointState, channels: ChannelSet,
                           config: SystemConfig, opts: SolverOptions
                           ) -> Tuple[List[np.ndarray], List[MMTrace]]:
    """MM descent on each pair's analog combiner."""
    out, traces = [], []
    composites = effective_precoders(state, config)
    for k in range(config.K):
        R, Wg, d = _combiner_parts(state, channels, config, k, composites)
        qp = UnitModulusQP(A=herm(np.kron(Wg.T, R)), a=d)
        # lam_max(kron(A, B)) = lam_max(A) lam_max(B) for PSD factors
        lam = float(max(np.linalg.eigvalsh(Wg)[-1], 0.0)
                    * max(np.linalg.eigvalsh(R)[-1], 0.0))
        x0 = vec(state.G_A[k])
        x, tr = mm_solve(qp, x0, eps_obj=opts.eps_obj, max_iter=opts.max_inner,
                         lam=lam)
        out.append(unvec(x, config.Nr[k], config.Nr_rf[k]))
        traces.append(tr)
    return out, traces


# ---------------------------------------------------------------------------
# solvers

def _finalize(state: JointState, config: SystemConfig) -> HybridState:
    """Recover F_D = (F_A^H F_A)^{-1/2} Ft_D; transmit power is preserved."""
    F_D = []
    for k in range(config.K):
        gram = state.F_A[k].conj().T @ state.F_A[k]
        F_D.append(hermitian_sqrt(gram, inverse=True) @ state.Ft_D[k])
    return HybridState(F_A=[f.copy() for f in state.F_A], F_D=F_D,
                       G_A=[g.copy() for g in state.G_A],
                       G_D=[g.copy() for g in state.G_D],
                       W=[w.copy() for w in state.W])


def mm_alt_opt(config: SystemConfig, channels: ChannelSet,
               opts: Optional[SolverOptions] = None,
               rng: Optional[np.random.Generator] = None
               ) -> Tuple[HybridState, AltOptTrace]:
    """Joint hybrid WMMSE design: alternate digital combiner, weights,
    digital precoder, then MM passes on analog precoder and combiner."""
    opts = opts or SolverOptions()
    if min(config.Nt) < 16:
        warnings.warn("large-array surrogate is crude for Nt < 16",
                      RuntimeWarning, stacklevel=2)
    state = initial_state(config, channels, opts.init_mode, rng)
    trace = AltOptTrace()
    prev = None
    for _ in range(opts.max_outer):
        state.G_D = update_digital_combiner(state, channels, config)
        state.W = update_weights(state, channels, config)
        state.Ft_D = update_digital_precoder(state, channels, config)
        state.F_A, tr_f = update_analog_precoder(state, channels, config, opts)
        state.G_A, tr_g = update_analog_combiner(state, channels, config, opts)
        trace.inner_precoder.append(tr_f)
        trace.inner_combiner.append(tr_g)
        obj = surrogate_objective(state, channels, config)
        trace.outer_objectives.append(obj)
        if prev is not None and abs(obj - prev) <= opts.eps_obj * (1.0 + abs(prev)):
            trace.converged = True
            break
        prev = obj
    return _finalize(state, config), trace


def two_stage_pp(config: SystemConfig, channels: ChannelSet,
                 opts: Optional[SolverOptions] = None
                 ) -> Tuple[HybridState, AltOptTrace]:
    """Decoupled design: analog stages fixed at phase projections of the
    direct channel's singular vectors, digital blocks alternated to
    convergence."""
    opts = opts or SolverOptions()
    state = initial_state(config, channels, "two-stage-pp", None)
    trace = AltOptTrace()
    prev = None
    for _ in range(opts.max_outer):
        state.G_D = update_digital_combiner(state, channels, config)
        state.W = update_weights(state, channels, config)
        state.Ft_D = update_digital_precoder(state, channels, config)
        obj = surrogate_objective(state, channels, config)
        trace.outer_objectives.append(obj)
        if prev is not None and abs(obj - prev) <= opts.eps_obj * (1.0 + abs(prev)):
            trace.converged = True
            break
        prev = obj
    return _finalize(state, config), trace
