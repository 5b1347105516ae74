"""Performance functionals: sum rate, MSE matrices, SLNR, leakage, power.

All metrics compose the actual analog/digital matrices; no large-array
approximation enters here, so reported rates are honest even when a solver
optimized an approximate objective. Rates are in bits/s/Hz (base-2 logs);
the WMMSE objective uses natural logs.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import NumericalError
from .linalg import herm, logdet_hpd
from .model import ChannelSet, SystemConfig


@dataclass
class RateReport:
    rates: List[float]

    @property
    def sum_rate(self) -> float:
        return float(sum(self.rates))


@dataclass
class MseReport:
    E: List[np.ndarray]
    wmmse_objective: float


def _interference_cov(config: SystemConfig, channels: ChannelSet,
                      precoders: List[np.ndarray], k: int) -> np.ndarray:
    """sigma^2 I + sum_{i != k} H_ki F_i F_i^H H_ki^H at receiver k."""
    R = config.sigma2[k] * np.eye(config.Nr[k], dtype=complex)
    for i in range(config.K):
        if i == k:
            continue
        Hf = channels.H[k][i] @ precoders[i]
        R = R + Hf @ Hf.conj().T
    return R


def composed_rates(config: SystemConfig, channels: ChannelSet,
                   precoders: List[np.ndarray],
                   combiners: List[np.ndarray]) -> RateReport:
    """Per-pair rates log2 det(I + T T^H R^-1) given composed matrices."""
    rates = []
    for k in range(config.K):
        C = combiners[k]
        T = C.conj().T @ channels.H[k][k] @ precoders[k]
        if np.linalg.norm(T) == 0.0:
            rates.append(0.0)
            continue
        R = C.conj().T @ _interference_cov(config, channels, precoders, k) @ C
        R = herm(R)
        vals = np.linalg.eigvalsh(R)
        if vals[-1] <= 0:
            raise NumericalError(f"pair {k}: interference-plus-noise covariance is zero")
        if vals[0] <= 0 or vals[-1] / max(vals[0], 1e-300) > 1e12:
            R = R + (1e-12 * np.trace(R).real / R.shape[0]) * np.eye(R.shape[0])
        # log det(I + T T^H R^-1) = logdet(R + T T^H) - logdet(R), both HPD
        rate = (logdet_hpd(R + T @ T.conj().T) - logdet_hpd(R)) / np.log(2.0)
        rates.append(max(float(rate), 0.0))
    return RateReport(rates=rates)


def sum_rate(config: SystemConfig, channels: ChannelSet, state) -> RateReport:
    """Achievable rates of a hybrid or fully-digital state."""
    K = config.K
    precoders = [state.precoder(k) for k in range(K)]
    combiners = [state.combiner(k) for k in range(K)]
    return composed_rates(config, channels, precoders, combiners)


def pairwise_mse(config: SystemConfig, channels: ChannelSet,
                 precoders: List[np.ndarray],
                 combiners: List[np.ndarray]) -> List[np.ndarray]:
    """Per-pair MSE matrices E_k for given composed precoders/combiners."""
    Es = []
    for k in range(config.K):
        C = combiners[k]
        X = C.conj().T @ channels.H[k][k] @ precoders[k]
        Ns = config.Ns[k]
        E = (X - np.eye(Ns)) @ (X - np.eye(Ns)).conj().T
        for i in range(config.K):
            if i == k:
                continue
            Y = C.conj().T @ channels.H[k][i] @ precoders[i]
            E = E + Y @ Y.conj().T
        E = E + config.sigma2[k] * (C.conj().T @ C)
        Es.append(herm(E))
    return Es


def wmmse_objective(Es: List[np.ndarray], Ws: List[np.ndarray],
                    Ns: List[int]) -> float:
    """sum_k (Tr(W_k E_k) - ln det W_k - Ns_k)."""
    obj = 0.0
    for E, W, n in zip(Es, Ws, Ns):
        obj += float(np.trace(W @ E).real) - logdet_hpd(W) - n
    return obj


def mse_matrices(config: SystemConfig, channels: ChannelSet, state) -> MseReport:
    """Per-pair MSE matrices and the WMMSE objective at the state's weights."""
    K = config.K
    precoders = [state.precoder(k) for k in range(K)]
    combiners = [state.combiner(k) for k in range(K)]
    Es = pairwise_mse(config, channels, precoders, combiners)
    obj = wmmse_objective(Es, state.W, list(config.Ns))
    return MseReport(E=Es, wmmse_objective=obj)


def slnr(config: SystemConfig, channels: ChannelSet, k: int, F_k: np.ndarray) -> float:
    """Signal-to-leakage-plus-noise ratio of transmitter k's precoder.

    Leakage is measured at the other receivers through H[i][k]; the noise
    term contributes sigma^2 per stream.
    """
    num = float(np.linalg.norm(channels.H[k][k] @ F_k) ** 2)
    den = config.sigma2[k] * F_k.shape[1]
    for i in range(config.K):
        if i == k:
            continue
        den += float(np.linalg.norm(channels.H[i][k] @ F_k) ** 2)
    return num / den


def leakage_norm(channels: ChannelSet, k: int, F_composed: np.ndarray) -> float:
    """max over i != k of ||H[i][k] F||_F; zero when there is a single pair."""
    worst = 0.0
    for i in range(channels.K):
        if i == k:
            continue
        worst = max(worst, float(np.linalg.norm(channels.H[i][k] @ F_composed)))
    return worst


def tx_power(state, k: int) -> float:
    """Composed transmit power Tr(F_A F_D F_D^H F_A^H)."""
    F = state.precoder(k)
    return float(np.trace(F @ F.conj().T).real)
