"""Partially-connected hybrid designs: block-diagonal analog stages.

Each RF chain drives a disjoint antenna subarray, so vec(F_A) is supported
on one contiguous run per column. The analog updates become unit-modulus
QPs over just the support entries, and because F_A^H F_A equals the
diagonal of subarray sizes exactly, the solver optimizes the true WMMSE
objective with no large-array approximation.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .joint import (AltOptTrace, JointState, SolverOptions, analog_combiner_qp,
                    analog_precoder_qp, initial_state, surrogate_objective,
                    update_digital_combiner, update_digital_precoder,
                    update_weights)
from .linalg import unvec, vec
from .metrics import pairwise_mse, wmmse_objective
from .mm import UnitModulusQP, mm_solve
from .model import ChannelSet, HybridState, SystemConfig


@dataclass(frozen=True)
class PartialLayout:
    """Subarray sizes per transmit and receive RF chain of one pair."""

    tx_blocks: Tuple[int, ...]
    rx_blocks: Tuple[int, ...]

    def __post_init__(self):
        for blocks in (self.tx_blocks, self.rx_blocks):
            if any(b < 1 for b in blocks):
                raise InvalidInputError("subarray sizes must be >= 1")


def _split(N: int, n_rf: int) -> Tuple[int, ...]:
    if n_rf > N:
        raise InvalidInputError(f"cannot split {N} antennas over {n_rf} RF chains")
    base = N // n_rf
    sizes = [base] * (n_rf - 1)
    sizes.append(N - (n_rf - 1) * base)
    return tuple(sizes)


def make_layout(config: SystemConfig, k: int) -> PartialLayout:
    """Floor split: first n_rf - 1 subarrays of size floor(N / n_rf), the
    last absorbs the remainder."""
    return PartialLayout(tx_blocks=_split(config.Nt[k], config.Nt_rf[k]),
                         rx_blocks=_split(config.Nr[k], config.Nr_rf[k]))


def support_blocks(blocks: Tuple[int, ...]) -> List[np.ndarray]:
    """Index runs of each subarray inside vec(A) for an N x n_rf matrix."""
    N = sum(blocks)
    out = []
    offset = 0
    for col, b in enumerate(blocks):
        start = col * N + offset
        out.append(np.arange(start, start + b))
        offset += b
    return out


def support_indices(blocks: Tuple[int, ...]) -> np.ndarray:
    return np.concatenate(support_blocks(blocks))


def support_mask(blocks: Tuple[int, ...]) -> np.ndarray:
    """Boolean N x n_rf mask of the block-diagonal support."""
    N, n_rf = sum(blocks), len(blocks)
    mask = np.zeros((N, n_rf), dtype=bool)
    offset = 0
    for col, b in enumerate(blocks):
        mask[offset:offset + b, col] = True
        offset += b
    return mask


def embed_support(x: np.ndarray, blocks: Tuple[int, ...]) -> np.ndarray:
    """Place the stacked subarray vector into a block-diagonal matrix."""
    N, n_rf = sum(blocks), len(blocks)
    full = np.zeros(N * n_rf, dtype=complex)
    full[support_indices(blocks)] = x
    return unvec(full, N, n_rf)


def _col_scale(blocks: Tuple[int, ...]) -> np.ndarray:
    """Per-column scaling 1/sqrt(subarray size) of the effective analog stage."""
    return 1.0 / np.sqrt(np.array(blocks, dtype=float))


def exact_composites(state: JointState, config: SystemConfig,
                     layouts: List[PartialLayout]) -> List[np.ndarray]:
    """F_A diag(1/sqrt(b)) Ft_D per pair; exact because F_A^H F_A = diag(b)."""
    out = []
    for k in range(config.K):
        s = _col_scale(layouts[k].tx_blocks)
        out.append((state.F_A[k] * s[np.newaxis, :]) @ state.Ft_D[k])
    return out


def assemble_partial_precoder_qp(state: JointState, channels: ChannelSet,
                                 config: SystemConfig, k: int,
                                 layout: PartialLayout) -> UnitModulusQP:
    """Restrict the analog-precoder quadratic form to the subarray support.

    The full form is built with the exact per-block column scaling, then
    sliced at the support indices of vec(F_A).
    """
    qp = analog_precoder_qp(state, channels, config, k,
                            col_scale=_col_scale(layout.tx_blocks))
    blocks = support_blocks(layout.tx_blocks)
    idx = np.concatenate(blocks)
    return UnitModulusQP(A=qp.A[np.ix_(idx, idx)], a=qp.a[idx], blocks=blocks)


def assemble_partial_combiner_qp(state: JointState, channels: ChannelSet,
                                 config: SystemConfig, k: int,
                                 layout: PartialLayout,
                                 composites: Optional[List[np.ndarray]] = None
                                 ) -> UnitModulusQP:
    """Restrict the analog-combiner quadratic form to the subarray support.

    ``composites`` defaults to the exact block-diagonal composites under the
    canonical floor-split layouts.
    """
    if composites is None:
        layouts = [make_layout(config, i) for i in range(config.K)]
        composites = exact_composites(state, config, layouts)
    qp = analog_combiner_qp(state, channels, config, k, composites)
    blocks = support_blocks(layout.rx_blocks)
    idx = np.concatenate(blocks)
    return UnitModulusQP(A=qp.A[np.ix_(idx, idx)], a=qp.a[idx], blocks=blocks)


def partial_mm_alt_opt(config: SystemConfig, channels: ChannelSet,
                       opts: Optional[SolverOptions] = None,
                       layout_tx_only: bool = False,
                       rng: Optional[np.random.Generator] = None
                       ) -> Tuple[HybridState, AltOptTrace]:
    """MM-based alternating optimization under block-diagonal analog stages.

    ``layout_tx_only`` keeps the receiver fully connected. The traced
    objective is the true WMMSE objective (the block structure makes the
    substituted analog precoder exact).
    """
    opts = opts or SolverOptions()
    layouts = [make_layout(config, k) for k in range(config.K)]
    state = initial_state(config, channels, opts.init_mode, rng)
    tx_masks = [support_mask(layouts[k].tx_blocks) for k in range(config.K)]
    rx_masks = None if layout_tx_only else \
        [support_mask(layouts[k].rx_blocks) for k in range(config.K)]
    for k in range(config.K):
        state.F_A[k] = np.where(tx_masks[k], state.F_A[k], 0.0)
        if rx_masks is not None:
            state.G_A[k] = np.where(rx_masks[k], state.G_A[k], 0.0)

    def objective() -> float:
        C = exact_composites(state, config, layouts)
        combiners = [state.G_A[k] @ state.G_D[k] for k in range(config.K)]
        Es = pairwise_mse(config, channels, C, combiners)
        return wmmse_objective(Es, state.W, list(config.Ns))

    trace = AltOptTrace()
    prev = None
    for _ in range(opts.max_outer):
        C = exact_composites(state, config, layouts)
        state.G_D = update_digital_combiner(state, channels, config, composites=C)
        state.W = update_weights(state, channels, config, composites=C)
        eff_analog = [state.F_A[k] * _col_scale(layouts[k].tx_blocks)[np.newaxis, :]
                      for k in range(config.K)]
        state.Ft_D = update_digital_precoder(state, channels, config,
                                             eff_analog=eff_analog)

        tr_f = []
        for k in range(config.K):
            qp = assemble_partial_precoder_qp(state, channels, config, k, layouts[k])
            x0 = vec(state.F_A[k])[support_indices(layouts[k].tx_blocks)]
            x, tr = mm_solve(qp, x0, eps_obj=opts.eps_obj, max_iter=opts.max_inner)
            state.F_A[k] = embed_support(x, layouts[k].tx_blocks)
            tr_f.append(tr)
        trace.inner_precoder.append(tr_f)

        C = exact_composites(state, config, layouts)
        tr_g = []
        for k in range(config.K):
            if layout_tx_only:
                qp = analog_combiner_qp(state, channels, config, k, C)
                x0 = vec(state.G_A[k])
                x, tr = mm_solve(qp, x0, eps_obj=opts.eps_obj,
                                 max_iter=opts.max_inner)
                state.G_A[k] = unvec(x, config.Nr[k], config.Nr_rf[k])
            else:
                qp = assemble_partial_combiner_qp(state, channels, config, k,
                                                  layouts[k], C)
                x0 = vec(state.G_A[k])[support_indices(layouts[k].rx_blocks)]
                x, tr = mm_solve(qp, x0, eps_obj=opts.eps_obj,
                                 max_iter=opts.max_inner)
                state.G_A[k] = embed_support(x, layouts[k].rx_blocks)
            tr_g.append(tr)
        trace.inner_combiner.append(tr_g)

        obj = objective()
        trace.outer_objectives.append(obj)
        if prev is not None and abs(obj - prev) <= opts.eps_obj * (1.0 + abs(prev)):
            trace.converged = True
            break
        prev = obj

    F_D = []
    for k in range(config.K):
        s = _col_scale(layouts[k].tx_blocks)
        F_D.append(s[:, np.newaxis] * state.Ft_D[k])
    return HybridState(F_A=state.F_A, F_D=F_D, G_A=state.G_A, G_D=state.G_D,
                       W=state.W, tx_mask=tx_masks, rx_mask=rx_masks), trace
