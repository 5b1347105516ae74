"""Majorization-minimization solver for unit-modulus quadratic programs.

Minimizes x^H A x - 2 Re{a^H x} subject to |x_q| = 1 for all q. Each step
majorizes the quadratic term with lam_max(A) * I, leaving a linear problem
whose exact minimizer is a phase vector; the objective therefore never
increases. This single kernel backs the analog precoder/combiner updates of
the joint, fitted and partially-connected designs.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .linalg import herm, require_hermitian


@dataclass
class UnitModulusQP:
    """Quadratic objective over a unit-modulus vector.

    ``A`` is Hermitian PSD, ``a`` the linear term. ``blocks`` optionally
    records the index blocks of a partially-connected problem whose matrix
    and vector have already been restricted to the support.
    """

    A: np.ndarray
    a: np.ndarray
    blocks: Optional[List[np.ndarray]] = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def objective(self, x: np.ndarray) -> float:
        quad = np.real(x.conj() @ (self.A @ x))
        lin = 2.0 * np.real(self.a.conj() @ x)
        return float(quad - lin)


@dataclass
class MMTrace:
    """Objective per iteration; non-increasing within 1e-9 relative."""

    objectives: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def lambda_max_bound(A: np.ndarray, exact_threshold: int = 4096,
                     power_tol: float = 1e-6, max_power_iter: int = 500) -> float:
    """Upper bound on lam_max of a Hermitian matrix.

    Exact Hermitian eigensolve up to ``exact_threshold``; beyond that, power
    iteration (safeguard-inflated so the bound stays valid) capped by the
    Gershgorin row-sum bound.
    """
    A = require_hermitian(A, name="quadratic matrix")
    n = A.shape[0]
    if n <= exact_threshold:
        return float(np.linalg.eigvalsh(A)[-1])
    gersh = float(np.max(np.sum(np.abs(A), axis=1)))
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_power_iter):
        y = A @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam_new = float(np.real(x.conj() @ y))
        x = y / norm
        if abs(lam_new - lam) <= power_tol * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam = lam_new
    # power iteration approaches lam_max from below; inflate, then cap
    return min(lam * (1.0 + 1e-4) + 1e-12, gersh)


def mm_step(qp: UnitModulusQP, x_prev: np.ndarray,
            lam: Optional[float] = None) -> np.ndarray:
    """One majorized update: x = -exp(j arg((A - lam I) x_prev - a)).

    arg(0) is taken as 0 so the update is total.
    """
    if lam is None:
        lam = lambda_max_bound(qp.A)
    a_tilde = qp.A @ x_prev - lam * x_prev - qp.a
    return -np.exp(1j * np.angle(a_tilde))


def mm_solve(qp: UnitModulusQP, x0: np.ndarray, eps_obj: float = 1e-4,
             max_iter: int = 200,
             lam: Optional[float] = None) -> Tuple[np.ndarray, MMTrace]:
    """Iterate :func:`mm_step` until the relative objective change is small.

    Stops when |f_l - f_{l-1}| <= eps_obj * (1 + |f_{l-1}|); hitting
    ``max_iter`` returns the last (best) iterate with ``converged=False``.
    Callers that know lam_max(A) (e.g. from Kronecker structure) may pass
    any valid upper bound as ``lam``.
    """
    if np.max(np.abs(np.abs(x0) - 1.0)) > 1e-9:
        raise InvalidInputError("x0 must be entrywise unit-modulus")
    if lam is None:
        lam = lambda_max_bound(qp.A)
    x = x0.astype(complex)
    trace = MMTrace(objectives=[qp.objective(x)])
    for it in range(1, max_iter + 1):
        x = mm_step(qp, x, lam)
        f = qp.objective(x)
        prev = trace.objectives[-1]
        trace.objectives.append(f)
        trace.iterations = it
        if abs(f - prev) <= eps_obj * (1.0 + abs(prev)):
            trace.converged = True
            break
    return x, trace
