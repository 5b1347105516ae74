"""Low-complexity separate hybrid designs fitted to fully-digital targets.

A hybrid precoder is fitted to a BD-ZF or SLNR-Max target by alternating
phase projection, a diagonal gain update and a unitary Procrustes rotation
(all exact block minimizers of the fit distance), followed by the
closed-form digital precoder that restores full transmit power. The
matching hybrid combiner minimizes the covariance-weighted distance to the
Wiener filter, alternating a closed-form digital step with MM phase
updates.
"""

import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .digital import bdzf_precoder, slnr_precoder
from .errors import InfeasibleError, InvalidInputError
from .joint import SolverOptions
from .linalg import herm, solve_hpd, svd_fixed, unvec, vec
from .metrics import pairwise_mse
from .mm import UnitModulusQP, mm_solve
from .model import ChannelSet, HybridState, SystemConfig


@dataclass
class PrecoderFitProblem:
    """Fully-digital target, its left singular basis and the power budget."""

    target: np.ndarray
    U_target: np.ndarray
    P: float


def make_fit_problem(target: np.ndarray, n_rf: int, P: float) -> PrecoderFitProblem:
    if np.linalg.norm(target) == 0.0:
        raise InvalidInputError("cannot fit a zero precoder target")
    U, _, _ = svd_fixed(target, full_matrices=True)
    return PrecoderFitProblem(target=target, U_target=U[:, :n_rf], P=float(P))


def unconstrained_analog(target: np.ndarray, n_rf: int,
                         diag: Optional[np.ndarray] = None,
                         rot: Optional[np.ndarray] = None) -> np.ndarray:
    """Optimal analog precoder without the phase constraint: U ``diag`` ``rot``.

    The diagonal gains and the rotation are free parameters of the fit;
    both default to identity.
    """
    prob = make_fit_problem(target, n_rf, P=1.0)
    if diag is None:
        diag = np.eye(n_rf)
    if rot is None:
        rot = np.eye(n_rf)
    return prob.U_target @ diag @ rot


def iterative_pp_fit(problem: PrecoderFitProblem, max_iter: int = 100,
                     eps: float = 1e-9,
                     objective_history: Optional[List[float]] = None
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Fit (F_A, F_D) to the target: phase projection / diagonal / rotation
    cycles on the analog stage, then the power-normalizing digital stage.

    The composed transmit power equals the budget exactly by construction.
    Pass a list as ``objective_history`` to record the fit distance per cycle.
    """
    U = problem.U_target
    n_rf = U.shape[1]
    lam = np.ones(n_rf)
    rot = np.eye(n_rf, dtype=complex)
    F_A = np.exp(1j * np.angle(U))
    prev = None
    converged = False
    for _ in range(max_iter):
        F_A = np.exp(1j * np.angle(U @ (lam[:, np.newaxis] * rot)))
        lam = np.real(np.diag(rot @ F_A.conj().T @ U))
        U_a, _, V_ah = svd_fixed(F_A.conj().T @ U @ np.diag(lam))
        rot = (U_a @ V_ah).conj().T
        obj = float(np.linalg.norm(U @ (lam[:, np.newaxis] * rot) - F_A) ** 2)
        if objective_history is not None:
            objective_history.append(obj)
        if prev is not None and abs(obj - prev) <= eps * (1.0 + abs(prev)):
            converged = True
            break
        prev = obj
    if not converged and max_iter > 1:
        warnings.warn("precoder fit stopped at max_iter without converging",
                      RuntimeWarning, stacklevel=2)
    # constrained-optimal digital stage for the fitted analog matrix:
    # F_D = c (F_A^H F_A)^{-1} F_A^H T with c restoring full power; for
    # F_A^H F_A ~ Nt I this reduces to the matched-filter form, and
    # Tr(F_A F_D F_D^H F_A^H) = P exactly either way
    gram = herm(F_A.conj().T @ F_A)
    X = solve_hpd(gram, F_A.conj().T @ problem.target)
    scale = np.sqrt(problem.P / np.trace(X.conj().T @ gram @ X).real)
    return F_A, scale * X


def mm_hybrid_combiner(config: SystemConfig, channels: ChannelSet,
                       precoders: List[np.ndarray], k: int,
                       opts: Optional[SolverOptions] = None,
                       objective_history: Optional[List[float]] = None
                       ) -> Tuple[np.ndarray, np.ndarray]:
    """Hybrid MMSE combiner for pair k given all composed precoders.

    Minimizes || R_y^{1/2} (G_hat - G_A G_D) ||_F^2 where G_hat is the
    fully-digital Wiener filter, alternating the closed-form digital step
    with MM phase updates. Pass a list as ``objective_history`` to record
    the weighted distance per outer round.
    """
    opts = opts or SolverOptions()
    Nr, n_rrf = config.Nr[k], config.Nr_rf[k]
    R = config.sigma2[k] * np.eye(Nr, dtype=complex)
    for i in range(config.K):
        Hc = channels.H[k][i] @ precoders[i]
        R = R + Hc @ Hc.conj().T
    R = herm(R)
    G_hat = solve_hpd(R, channels.H[k][k] @ precoders[k])
    U, _, _ = svd_fixed(channels.H[k][k], full_matrices=True)
    G_A = np.exp(1j * np.angle(U[:, :n_rrf]))
    G_D = np.zeros((n_rrf, config.Ns[k]), dtype=complex)

    def objective() -> float:
        Delta = G_hat - G_A @ G_D
        return float(np.trace(Delta.conj().T @ R @ Delta).real)

    prev = None
    for _ in range(opts.max_outer):
        G_D = solve_hpd(G_A.conj().T @ R @ G_A, G_A.conj().T @ R @ G_hat,
                        warn_context="hybrid combiner digital step")
        qp = UnitModulusQP(A=herm(np.kron((G_D @ G_D.conj().T).T, R)),
                           a=vec(R @ G_hat @ G_D.conj().T))
        x, _ = mm_solve(qp, vec(G_A), eps_obj=opts.eps_obj, max_iter=opts.max_inner)
        G_A = unvec(x, Nr, n_rrf)
        obj = objective()
        if objective_history is not None:
            objective_history.append(obj)
        if prev is not None and abs(obj - prev) <= opts.eps_obj * (1.0 + abs(prev)):
            break
        prev = obj
    G_D = solve_hpd(G_A.conj().T @ R @ G_A, G_A.conj().T @ R @ G_hat,
                    warn_context="hybrid combiner digital step")
    if objective_history is not None:
        objective_history.append(objective())
    return G_A, G_D


def _fitted_hybrid(config: SystemConfig, channels: ChannelSet, targets,
                   opts: Optional[SolverOptions]) -> HybridState:
    opts = opts or SolverOptions()
    F_A, F_D = [], []
    for k in range(config.K):
        problem = make_fit_problem(targets[k], config.Nt_rf[k], config.P[k])
        Fa, Fd = iterative_pp_fit(problem, max_iter=opts.max_outer)
        F_A.append(Fa)
        F_D.append(Fd)
    composed = [F_A[k] @ F_D[k] for k in range(config.K)]
    G_A, G_D = [], []
    for k in range(config.K):
        Ga, Gd = mm_hybrid_combiner(config, channels, composed, k, opts)
        G_A.append(Ga)
        G_D.append(Gd)
    combiners = [G_A[k] @ G_D[k] for k in range(config.K)]
    Es = pairwise_mse(config, channels, composed, combiners)
    W = [herm(np.linalg.inv(E)) for E in Es]
    return HybridState(F_A=F_A, F_D=F_D, G_A=G_A, G_D=G_D, W=W)


def bdzf_hybrid(config: SystemConfig, channels: ChannelSet,
                opts: Optional[SolverOptions] = None) -> HybridState:
    """Hybrid transceivers fitted to the fully-digital BD-ZF precoders."""
    try:
        targets = [bdzf_precoder(config, channels, k) for k in range(config.K)]
    except InfeasibleError as exc:
        raise InfeasibleError(f"{exc} -- consider the SLNR variant, which has "
                              f"no antenna-count restriction") from exc
    return _fitted_hybrid(config, channels, targets, opts)


def slnr_hybrid(config: SystemConfig, channels: ChannelSet,
                opts: Optional[SolverOptions] = None) -> HybridState:
    """Hybrid transceivers fitted to the fully-digital SLNR-Max precoders."""
    targets = [slnr_precoder(config, channels, k) for k in range(config.K)]
    return _fitted_hybrid(config, channels, targets, opts)
