"""Fully-digital reference designs and their shared primitives.

Provides the iterative WMMSE upper bound, the closed-form BD-ZF precoder
with water-filled power loading, the SLNR-maximizing precoder via a
generalized eigendecomposition, the fully-digital MMSE combiner, and the
power-constrained WMMSE precoder solve reused by the hybrid designs.
"""

from typing import List, Optional, Tuple

import numpy as np

from .errors import InfeasibleError, InvalidInputError
from .linalg import eigh_desc, herm, require_hermitian, solve_hpd, svd_fixed
from .metrics import pairwise_mse, wmmse_objective
from .mm import MMTrace
from .model import ChannelSet, FullDigitalState, SystemConfig


def waterfill(gains: np.ndarray, sigma2: float, P: float) -> np.ndarray:
    """Water-filling allocation f_s = max(nu - sigma2/g_s, 0) with sum f = P.

    ``gains`` are the squared effective channel gains per stream. The water
    level is found by bisection to |sum f - P| <= 1e-10 P. Streams with zero
    gain receive zero power; all-zero gains are rejected.
    """
    gains = np.asarray(gains, dtype=float)
    if P <= 0:
        raise InvalidInputError("power budget must be positive")
    active = gains > 0
    if not np.any(active):
        raise InvalidInputError("water-filling needs at least one positive gain")
    floor = np.full_like(gains, np.inf)
    floor[active] = sigma2 / gains[active]

    def total(level: float) -> float:
        return float(np.sum(np.maximum(level - floor[active], 0.0)))

    lo, hi = 0.0, P + float(np.min(floor[active]))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) > P:
            hi = mid
        else:
            lo = mid
        if abs(total(mid) - P) <= 1e-12 * P:
            lo = hi = mid
            break
    level = 0.5 * (lo + hi)
    f = np.maximum(level - floor, 0.0)
    f[~active] = 0.0
    return f


def null_space_basis(H_stack: np.ndarray, Nt: int) -> np.ndarray:
    """Orthonormal basis of the right null space of the stacked leakage rows.

    ``H_stack`` is (sum of leakage rows) x Nt; an empty stack returns the
    identity. Numerical rank uses the standard max(dim) * eps * s_max cut.
    """
    if H_stack.size == 0 or H_stack.shape[0] == 0:
        return np.eye(Nt, dtype=complex)
    if H_stack.shape[1] != Nt:
        raise InvalidInputError(
            f"leakage stack has {H_stack.shape[1]} columns, expected Nt={Nt}")
    U, s, Vh = np.linalg.svd(H_stack, full_matrices=True)
    tol = max(H_stack.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank >= Nt:
        raise InfeasibleError(
            f"no null space: leakage rank {rank} >= Nt={Nt} "
            f"(need Nt > total leakage rank)")
    return Vh[rank:].conj().T


def bdzf_precoder(config: SystemConfig, channels: ChannelSet, k: int) -> np.ndarray:
    """Block-diagonalization ZF precoder for pair k with water-filled loading.

    Projects onto the joint null space of all cross channels out of
    transmitter k, then eigen-precodes the projected direct channel.
    """
    Nt, Ns = config.Nt[k], config.Ns[k]
    stacks = [channels.H[i][k] for i in range(config.K) if i != k]
    H_stack = np.vstack(stacks) if stacks else np.zeros((0, Nt), dtype=complex)
    basis = null_space_basis(H_stack, Nt)
    L_k = basis.shape[1]
    if L_k < Ns:
        raise InfeasibleError(
            f"pair {k}: null-space dimension {L_k} < Ns={Ns} "
            f"(need Nt - leakage rank >= Ns)")
    U_t, s_t, Vh_t = svd_fixed(channels.H[k][k] @ basis)
    gains = np.zeros(Ns)
    m = min(Ns, s_t.size)
    gains[:m] = s_t[:m] ** 2
    f = waterfill(gains, config.sigma2[k], config.P[k])
    V1 = Vh_t[:Ns].conj().T if Vh_t.shape[0] >= Ns else np.hstack(
        [Vh_t.conj().T, np.zeros((L_k, Ns - Vh_t.shape[0]), dtype=complex)])
    return basis @ (V1 * np.sqrt(f)[np.newaxis, :])


def gevd(A: np.ndarray, B: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Generalized EVD of the pencil (A, B): T^H A T diagonal, T^H B T = I.

    A must be Hermitian PSD and B Hermitian PD; columns of T are ordered by
    non-increasing generalized eigenvalue.
    """
    A = require_hermitian(A, name="pencil numerator")
    B = require_hermitian(B, name="pencil denominator")
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("pencil denominator is not positive definite") from exc
    Y = np.linalg.solve(L, A)
    C = herm(np.linalg.solve(L, Y.conj().T).conj().T)
    vals, vecs = eigh_desc(C)
    T = np.linalg.solve(L.conj().T, vecs)
    return T, np.diag(vals)


def slnr_precoder(config: SystemConfig, channels: ChannelSet, k: int) -> np.ndarray:
    """SLNR-maximizing precoder: top generalized eigenvectors of the
    signal/leakage pencil, scaled to full transmit power."""
    Nt, Ns = config.Nt[k], config.Ns[k]
    A = channels.H[k][k].conj().T @ channels.H[k][k]
    B = (config.Nr[k] * config.sigma2[k] / config.P[k]) * np.eye(Nt, dtype=complex)
    for i in range(config.K):
        if i == k:
            continue
        B = B + channels.H[i][k].conj().T @ channels.H[i][k]
    T, _ = gevd(A, B)
    T1 = T[:, :Ns]
    scale = np.sqrt(config.P[k] / float(np.trace(T1.conj().T @ T1).real))
    return scale * T1


def mmse_full_digital_combiner(config: SystemConfig, channels: ChannelSet,
                               precoders: List[np.ndarray], k: int) -> np.ndarray:
    """Wiener combiner R_y^-1 H_kk F_k for receiver k."""
    R_y = config.sigma2[k] * np.eye(config.Nr[k], dtype=complex)
    for i in range(config.K):
        Hf = channels.H[k][i] @ precoders[i]
        R_y = R_y + Hf @ Hf.conj().T
    return solve_hpd(R_y, channels.H[k][k] @ precoders[k])


def power_constrained_wmmse_precoder(L_list: List[np.ndarray],
                                     W_list: List[np.ndarray],
                                     k: int, P: float) -> np.ndarray:
    """Minimize sum_i Tr(F^H L_i^H W_i L_i F) - 2 Re Tr(W_k L_k F) s.t. Tr(F F^H) <= P.

    ``L_i`` is the effective channel from this transmitter to receiver i
    (Ns_i x n). The dual variable of the power constraint is zero when the
    unconstrained solution is feasible, else found by bisection on the
    monotone power curve sum_m qq_m / (lam_m + beta)^2.
    """
    n = L_list[0].shape[1]
    A = np.zeros((n, n), dtype=complex)
    for L_i, W_i in zip(L_list, W_list):
        A = A + L_i.conj().T @ W_i @ L_i
    lam, U = eigh_desc(A)
    lam = np.clip(lam, 0.0, None)
    Q = U.conj().T @ L_list[k].conj().T @ W_list[k]
    qq = np.sum(np.abs(Q) ** 2, axis=1)

    def power(beta: float) -> float:
        denom = (lam + beta) ** 2
        if beta == 0.0 and np.any((lam <= 0) & (qq > 0)):
            return np.inf
        safe = denom > 0
        return float(np.sum(qq[safe] / denom[safe]))

    beta = 0.0
    if power(0.0) > P:
        hi = float(np.sqrt(np.sum(qq) / P))
        lo = 0.0
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            p_mid = power(mid)
            if p_mid > P:
                lo = mid
            else:
                hi = mid
            if abs(p_mid - P) <= 1e-10 * P:
                break
        beta = hi
    denom = lam + beta
    coeff = np.divide(1.0, denom, out=np.zeros_like(denom), where=denom > 0)
    return U @ (Q * coeff[:, np.newaxis])


def wmmse_full_digital(config: SystemConfig, channels: ChannelSet,
                       init: Optional[FullDigitalState] = None,
                       eps_obj: float = 1e-6,
                       max_iter: int = 200) -> Tuple[FullDigitalState, MMTrace]:
    """Iterative fully-digital WMMSE design (the hybrid schemes' upper bound).

    Alternates Wiener combiners, inverse-MSE weights and the
    power-constrained precoder solve until the objective stalls.
    """
    K = config.K
    if init is not None:
        F = [Fk.copy() for Fk in init.F]
    else:
        F = []
        for k in range(K):
            _, _, Vh = svd_fixed(channels.H[k][k])
            Ns = config.Ns[k]
            V1 = Vh[:Ns].conj().T
            F.append(np.sqrt(config.P[k] / Ns) * V1)
    G = [np.zeros((config.Nr[k], config.Ns[k]), dtype=complex) for k in range(K)]
    W = [np.eye(config.Ns[k], dtype=complex) for k in range(K)]
    trace = MMTrace()
    prev = None
    for it in range(1, max_iter + 1):
        G = [mmse_full_digital_combiner(config, channels, F, k) for k in range(K)]
        Es = pairwise_mse(config, channels, F, G)
        W = [herm(np.linalg.inv(E)) for E in Es]
        for k in range(K):
            L_list = [G[i].conj().T @ channels.H[i][k] for i in range(K)]
            F[k] = power_constrained_wmmse_precoder(L_list, W, k, config.P[k])
        Es = pairwise_mse(config, channels, F, G)
        obj = wmmse_objective(Es, W, list(config.Ns))
        trace.objectives.append(obj)
        trace.iterations = it
        if prev is not None and abs(obj - prev) <= eps_obj * (1.0 + abs(prev)):
            trace.converged = True
            break
        prev = obj
    return FullDigitalState(F=F, G=G, W=W), trace


def _closed_form_state(config: SystemConfig, channels: ChannelSet,
                       precoder_fn) -> FullDigitalState:
    K = config.K
    F = [precoder_fn(config, channels, k) for k in range(K)]
    G = [mmse_full_digital_combiner(config, channels, F, k) for k in range(K)]
    Es = pairwise_mse(config, channels, F, G)
    W = [herm(np.linalg.inv(E)) for E in Es]
    return FullDigitalState(F=F, G=G, W=W)


def bdzf_full_digital(config: SystemConfig, channels: ChannelSet) -> FullDigitalState:
    """BD-ZF precoders with MMSE combiners for all pairs."""
    return _closed_form_state(config, channels, bdzf_precoder)


def slnr_full_digital(config: SystemConfig, channels: ChannelSet) -> FullDigitalState:
    """SLNR-Max precoders with MMSE combiners for all pairs."""
    return _closed_form_state(config, channels, slnr_precoder)
