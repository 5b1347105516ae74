import numpy as np
import pytest

from hybridbf import (InvalidInputError, UnitModulusQP, lambda_max_bound,
                      mm_solve, mm_step)

from conftest import make_rng, random_hermitian_psd


def random_qp(n: int, rng: np.random.Generator) -> UnitModulusQP:
    A = random_hermitian_psd(n, rng)
    a = (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return UnitModulusQP(A=A, a=a)


def random_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def grid_search_2d(qp: UnitModulusQP, step_deg: float = 1.0) -> float:
    """Exhaustive phase-grid minimum for n=2 problems (independent oracle)."""
    phis = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    p1, p2 = np.meshgrid(phis, phis, indexing="ij")
    x1, x2 = np.exp(1j * p1), np.exp(1j * p2)
    A, a = qp.A, qp.a
    quad = (A[0, 0].real + A[1, 1].real
            + 2 * np.real(np.conj(x1) * A[0, 1] * x2))
    lin = 2 * np.real(np.conj(a[0]) * x1 + np.conj(a[1]) * x2)
    return float(np.min(quad - lin))


class TestLambdaMaxBound:
    def test_diagonal(self):
        assert lambda_max_bound(np.diag([3.0, 1.0]).astype(complex)) == pytest.approx(3.0)

    def test_identity(self):
        assert lambda_max_bound(np.eye(5, dtype=complex)) == pytest.approx(1.0)

    def test_matches_dense_eigensolver(self):
        rng = make_rng(11)
        for _ in range(20):
            A = random_hermitian_psd(5, rng)
            exact = np.linalg.eigvalsh(A)[-1]
            assert lambda_max_bound(A) == pytest.approx(exact, rel=1e-8)

    def test_power_iteration_path_upper_bounds(self):
        rng = make_rng(12)
        A = random_hermitian_psd(60, rng)
        exact = np.linalg.eigvalsh(A)[-1]
        bound = lambda_max_bound(A, exact_threshold=10)
        assert bound >= exact - 1e-9 * np.linalg.norm(A)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            lambda_max_bound(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


class TestMMStep:
    def test_scalar_linear_objective(self):
        qp = UnitModulusQP(A=np.zeros((1, 1), dtype=complex),
                           a=np.array([1.0 + 0j]))
        x = mm_step(qp, np.array([1.0 + 0j]))
        # global optimum of -2Re(a^H x) is e^{j arg a}
        assert x[0] == pytest.approx(1.0)

    def test_identity_quadratic_aligns_phase(self):
        rng = make_rng(13)
        n = 4
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        qp = UnitModulusQP(A=np.eye(n, dtype=complex), a=a)
        x = mm_step(qp, random_phases(n, rng))
        assert np.allclose(x, np.exp(1j * np.angle(a)))

    def test_keeps_unit_modulus(self):
        rng = make_rng(14)
        qp = random_qp(6, rng)
        x = mm_step(qp, random_phases(6, rng))
        assert np.max(np.abs(np.abs(x) - 1.0)) < 1e-12

    def test_majorizer_tangency(self):
        # g(x|x) = f(x): the surrogate touches the objective at the expansion point
        rng = make_rng(15)
        qp = random_qp(5, rng)
        x = random_phases(5, rng)
        lam = lambda_max_bound(qp.A)
        a_t = qp.A @ x - lam * x - qp.a
        g = (lam * np.vdot(x, x).real + 2 * np.real(np.vdot(x, a_t))
             + np.real(np.vdot(x, (lam * np.eye(5) - qp.A) @ x)))
        # surrogate includes the constant 2Re(x^H x_prev) terms folded into a_t
        f = qp.objective(x)
        assert g == pytest.approx(f, rel=1e-9, abs=1e-9)

    def test_fixed_two_by_two_matches_grid(self):
        qp = UnitModulusQP(A=np.array([[2.0, 1j], [-1j, 2.0]]),
                           a=np.array([1.0 + 0j, 1.0 + 0j]))
        x, trace = mm_solve(qp, np.array([1.0 + 0j, 1.0 + 0j]),
                            eps_obj=1e-12, max_iter=500)
        assert trace.objectives[-1] <= grid_search_2d(qp) + 1e-3


class TestMMSolve:
    def test_constant_objective_converges_immediately(self):
        n = 3
        qp = UnitModulusQP(A=np.eye(n, dtype=complex), a=np.zeros(n, dtype=complex))
        x0 = np.ones(n, dtype=complex)
        x, trace = mm_solve(qp, x0)
        assert trace.converged
        assert trace.iterations == 1
        assert qp.objective(x) == pytest.approx(qp.objective(x0))

    def test_scalar_phase_alignment(self):
        qp = UnitModulusQP(A=np.zeros((1, 1), dtype=complex),
                           a=np.array([-2.0j]))
        x, trace = mm_solve(qp, np.array([1.0 + 0j]))
        assert x[0] == pytest.approx(-1.0j)
        assert trace.objectives[-1] == pytest.approx(-4.0)

    def test_reaches_fixed_point(self):
        rng = make_rng(16)
        qp = random_qp(3, rng)
        x, trace = mm_solve(qp, random_phases(3, rng), eps_obj=1e-15, max_iter=5000)
        assert trace.objectives[-1] <= trace.objectives[0]
        diffs = np.diff(trace.objectives)
        assert np.all(diffs <= 1e-9 * (1 + np.abs(trace.objectives[:-1])))
        lam = lambda_max_bound(qp.A)
        assert np.linalg.norm(x - mm_step(qp, x, lam)) <= 1e-6

    def test_rejects_infeasible_start(self):
        qp = random_qp(2, make_rng(17))
        with pytest.raises(InvalidInputError):
            mm_solve(qp, np.array([0.5 + 0j, 1.0 + 0j]))

    def test_max_iter_flagged(self):
        rng = make_rng(18)
        qp = random_qp(8, rng)
        _, trace = mm_solve(qp, random_phases(8, rng), eps_obj=1e-300, max_iter=3)
        assert not trace.converged
        assert trace.iterations == 3

    def test_monotone_on_random_instances(self):
        rng = make_rng(19)
        for _ in range(40):
            n = int(rng.integers(1, 32))
            qp = random_qp(n, rng)
            _, trace = mm_solve(qp, random_phases(n, rng), eps_obj=1e-9,
                                max_iter=100)
            objs = np.array(trace.objectives)
            assert np.all(np.diff(objs) <= 1e-9 * (1 + np.abs(objs[:-1])))

    def test_two_variable_grid_oracle_sample(self):
        rng = make_rng(20)
        hits = 0
        for _ in range(20):
            qp = random_qp(2, rng)
            _, trace = mm_solve(qp, random_phases(2, rng), eps_obj=1e-12,
                                max_iter=500)
            if trace.objectives[-1] <= grid_search_2d(qp) + 1e-3:
                hits += 1
        assert hits >= 18
