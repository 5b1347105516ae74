"""System configuration, channel generation and transceiver state containers.

Channels are drawn from a counter-based Philox generator keyed by
``(seed, stream)`` so that every trial owns an independent stream and
parallel execution reproduces serial results bit-for-bit.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DimensionError, InvalidInputError


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class SystemConfig:
    """Per-pair dimensions and budgets of a K-user MIMO interference channel.

    All fields are tuples of length K: transmit/receive antenna counts,
    RF-chain counts, stream counts, transmit power and noise variance
    (both linear).
    """

    Nt: Tuple[int, ...]
    Nr: Tuple[int, ...]
    Nt_rf: Tuple[int, ...]
    Nr_rf: Tuple[int, ...]
    Ns: Tuple[int, ...]
    P: Tuple[float, ...]
    sigma2: Tuple[float, ...]

    def __post_init__(self):
        K = len(self.Nt)
        if K < 1:
            raise InvalidInputError("need at least one transmit-receive pair")
        for name in ("Nr", "Nt_rf", "Nr_rf", "Ns", "P", "sigma2"):
            if len(getattr(self, name)) != K:
                raise InvalidInputError(f"{name} must have length K={K}")
        for k in range(K):
            if not (self.Ns[k] <= self.Nt_rf[k] <= self.Nt[k]):
                raise InvalidInputError(
                    f"pair {k}: need Ns <= Nt_rf <= Nt, got "
                    f"{self.Ns[k]}, {self.Nt_rf[k]}, {self.Nt[k]}")
            if not (self.Ns[k] <= self.Nr_rf[k] <= self.Nr[k]):
                raise InvalidInputError(
                    f"pair {k}: need Ns <= Nr_rf <= Nr, got "
                    f"{self.Ns[k]}, {self.Nr_rf[k]}, {self.Nr[k]}")
            if self.P[k] <= 0 or self.sigma2[k] <= 0:
                raise InvalidInputError(f"pair {k}: P and sigma2 must be positive")

    @property
    def K(self) -> int:
        return len(self.Nt)

    @classmethod
    def uniform(cls, K: int, Nt: int, Nr: int, Nt_rf: int, Nr_rf: int, Ns: int,
                P: float = 1.0, sigma2: float = 1.0) -> "SystemConfig":
        """Same dimensions and budgets for every pair."""
        return cls(
            Nt=(Nt,) * K, Nr=(Nr,) * K, Nt_rf=(Nt_rf,) * K, Nr_rf=(Nr_rf,) * K,
            Ns=(Ns,) * K, P=(float(P),) * K, sigma2=(float(sigma2),) * K)

    def with_power(self, P: float) -> "SystemConfig":
        return SystemConfig(self.Nt, self.Nr, self.Nt_rf, self.Nr_rf, self.Ns,
                            (float(P),) * self.K, self.sigma2)


@dataclass(frozen=True)
class RngSpec:
    """Keyed random stream: identical (seed, stream) gives identical draws."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[np.uint64(self.seed), np.uint64(self.stream)]))


# ---------------------------------------------------------------------------
# channels

@dataclass(frozen=True)
class PathCluster:
    """Geometry of one clustered channel: per-path complex gain, AOA, AOD."""

    alpha: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray

    @property
    def L(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class ChannelSet:
    """K x K grid of channel matrices; ``H[k][i]`` maps transmitter i to receiver k."""

    H: Tuple[Tuple[np.ndarray, ...], ...]
    model: str = "rayleigh"
    paths: Optional[Tuple[Tuple[PathCluster, ...], ...]] = None

    @property
    def K(self) -> int:
        return len(self.H)

    def cross_norm(self) -> float:
        """Frobenius norm over all cross-pair channels (0 when K=1)."""
        total = 0.0
        for k in range(self.K):
            for i in range(self.K):
                if i != k:
                    total += float(np.linalg.norm(self.H[k][i]) ** 2)
        return float(np.sqrt(total))


def _freeze(A: np.ndarray) -> np.ndarray:
    A.setflags(write=False)
    return A


def _cn_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0,1) entries: two independent real N(0, 1/2) components."""
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def steering_vector(N: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA steering vector, entry n = e^{-j pi n sin(angle)} / sqrt(N)."""
    if N < 1:
        raise DimensionError(f"array size must be >= 1, got {N}")
    n = np.arange(N)
    return np.exp(-1j * np.pi * n * np.sin(angle)) / np.sqrt(N)


def gen_rayleigh(config: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """i.i.d. CN(0,1) channel matrices for every (receiver, transmitter) pair."""
    K = config.K
    H = tuple(
        tuple(_freeze(_cn_matrix(config.Nr[k], config.Nt[i], rng)) for i in range(K))
        for k in range(K))
    return ChannelSet(H=H, model="rayleigh")


def gen_mmwave(config: SystemConfig, L: int, rng: np.random.Generator) -> ChannelSet:
    """Clustered geometric channels with L paths per (k, i) link.

    H[k][i] = sqrt(Nr_k Nt_i / L) * sum_l alpha_l a_r(theta_l) a_t(psi_l)^H with
    alpha ~ CN(0,1) and angles uniform on [0, 2pi).
    """
    if L < 1:
        raise InvalidInputError(f"path count must be >= 1, got {L}")
    K = config.K
    rows: List[Tuple[np.ndarray, ...]] = []
    path_rows: List[Tuple[PathCluster, ...]] = []
    for k in range(K):
        row = []
        prow = []
        for i in range(K):
            alpha = _cn_matrix(L, 1, rng)[:, 0]
            theta = rng.uniform(0.0, 2.0 * np.pi, L)
            psi = rng.uniform(0.0, 2.0 * np.pi, L)
            Ar = np.stack([steering_vector(config.Nr[k], t) for t in theta], axis=1)
            At = np.stack([steering_vector(config.Nt[i], p) for p in psi], axis=1)
            Hki = np.sqrt(config.Nr[k] * config.Nt[i] / L) * (
                (Ar * alpha[np.newaxis, :]) @ At.conj().T)
            row.append(_freeze(Hki))
            cl = PathCluster(alpha=_freeze(alpha), aoa=_freeze(theta), aod=_freeze(psi))
            prow.append(cl)
        rows.append(tuple(row))
        path_rows.append(tuple(prow))
    return ChannelSet(H=tuple(rows), model="mmwave", paths=tuple(path_rows))


def random_unit_modulus(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix of unit-modulus entries with uniform random phases."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"shape must be positive, got ({rows}, {cols})")
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (rows, cols)))


# ---------------------------------------------------------------------------
# transceiver states

@dataclass
class HybridState:
    """Per-pair hybrid precoders/combiners and WMMSE weights.

    ``F_A[k]`` is Nt x Nt_rf with unit-modulus entries (on its support when a
    mask is present, as in partially-connected designs), ``F_D[k]`` is
    Nt_rf x Ns, and analogously for the receive side. ``tx_mask``/``rx_mask``
    are boolean support patterns; ``None`` means fully connected.
    """

    F_A: List[np.ndarray]
    F_D: List[np.ndarray]
    G_A: List[np.ndarray]
    G_D: List[np.ndarray]
    W: List[np.ndarray]
    tx_mask: Optional[List[np.ndarray]] = None
    rx_mask: Optional[List[np.ndarray]] = None

    @property
    def K(self) -> int:
        return len(self.F_A)

    def precoder(self, k: int) -> np.ndarray:
        return self.F_A[k] @ self.F_D[k]

    def combiner(self, k: int) -> np.ndarray:
        return self.G_A[k] @ self.G_D[k]


@dataclass
class FullDigitalState:
    """Per-pair fully-digital precoders F, combiners G and WMMSE weights W."""

    F: List[np.ndarray]
    G: List[np.ndarray]
    W: List[np.ndarray]

    @property
    def K(self) -> int:
        return len(self.F)

    def precoder(self, k: int) -> np.ndarray:
        return self.F[k]

    def combiner(self, k: int) -> np.ndarray:
        return self.G[k]


def check_feasibility(config: SystemConfig, state, unit_tol: float = 1e-12,
                      power_rtol: float = 1e-9) -> List[str]:
    """Return a list of violated feasibility constraints (empty when feasible).

    Checks entrywise unit modulus of the analog stages (support-aware),
    exact zeros off support, transmit power, and W Hermitian positive definite.
    Fully-digital states are checked for power and W only.
    """
    problems: List[str] = []
    for k in range(config.K):
        Fk = state.precoder(k)
        power = float(np.trace(Fk @ Fk.conj().T).real)
        if power > config.P[k] * (1.0 + power_rtol):
            problems.append(f"pair {k}: transmit power {power:.6g} exceeds {config.P[k]}")
        W = state.W[k]
        if np.linalg.norm(W - W.conj().T) > 1e-8 * (np.linalg.norm(W) + 1e-300):
            problems.append(f"pair {k}: W not Hermitian")
        elif np.linalg.eigvalsh(0.5 * (W + W.conj().T)).min() <= 0:
            problems.append(f"pair {k}: W not positive definite")
        if not isinstance(state, HybridState):
            continue
        for name, A, masks in (("F_A", state.F_A[k], state.tx_mask),
                               ("G_A", state.G_A[k], state.rx_mask)):
            mask = None if masks is None else masks[k]
            if mask is None:
                if np.max(np.abs(np.abs(A) - 1.0)) > unit_tol:
                    problems.append(f"pair {k}: {name} not unit-modulus")
            else:
                on = np.abs(A[mask])
                if on.size and np.max(np.abs(on - 1.0)) > unit_tol:
                    problems.append(f"pair {k}: {name} not unit-modulus on support")
                if np.any(A[~mask] != 0):
                    problems.append(f"pair {k}: {name} has nonzero off-support entries")
    return problems
