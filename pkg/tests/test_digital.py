import numpy as np
import pytest

from hybridbf import (ChannelSet, InfeasibleError, InvalidInputError,
                      SystemConfig, bdzf_precoder, gen_mmwave, gen_rayleigh,
                      gevd, leakage_norm, mmse_full_digital_combiner,
                      null_space_basis, slnr, slnr_precoder, sum_rate,
                      waterfill, wmmse_full_digital)
from hybridbf.digital import power_constrained_wmmse_precoder
from hybridbf.metrics import pairwise_mse

from conftest import make_rng, random_complex, random_hermitian_psd


def waterfill_kkt_residuals(gains, sigma2, P, f):
    """Independent KKT check: recover the water level from any active stream
    and verify stationarity, complementarity and the power budget."""
    active = f > 0
    level = (f + sigma2 / gains)[active][0]
    r_budget = abs(np.sum(f) - P)
    r_active = np.max(np.abs(f[active] - (level - sigma2 / gains[active])))
    inactive = ~active & (gains > 0)
    r_inactive = 0.0
    if np.any(inactive):
        r_inactive = max(0.0, np.max(level - sigma2 / gains[inactive]))
    return r_budget, r_active, r_inactive


class TestWaterfill:
    def test_single_stream_gets_all_power(self):
        f = waterfill(np.array([2.5]), 1.0, 3.0)
        assert f[0] == pytest.approx(3.0, abs=1e-9)

    def test_equal_gains_split_evenly(self):
        f = waterfill(np.full(4, 2.0), 1.0, 2.0)
        assert np.allclose(f, 0.5, atol=1e-9)

    def test_three_stream_kkt(self):
        gains = np.array([4.0, 1.0, 0.25])
        f = waterfill(gains, 1.0, 2.0)
        r_budget, r_active, r_inactive = waterfill_kkt_residuals(gains, 1.0, 2.0, f)
        assert r_budget <= 1e-9
        assert r_active <= 1e-9
        assert r_inactive <= 1e-9

    def test_random_instances_kkt(self):
        rng = make_rng(40)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            gains = rng.uniform(0.05, 10.0, n)
            sigma2 = rng.uniform(0.1, 4.0)
            P = rng.uniform(0.2, 10.0)
            f = waterfill(gains, sigma2, P)
            residuals = waterfill_kkt_residuals(gains, sigma2, P, f)
            assert max(residuals) <= 1e-9

    def test_all_zero_gains_rejected(self):
        with pytest.raises(InvalidInputError):
            waterfill(np.zeros(3), 1.0, 1.0)


class TestNullSpaceBasis:
    def test_single_direction(self):
        H = np.array([[1.0 + 0j, 0.0]])
        B = null_space_basis(H, 2)
        assert B.shape == (2, 1)
        assert abs(B[1, 0]) == pytest.approx(1.0)
        assert abs(B[0, 0]) <= 1e-12

    def test_zero_stack_full_identity(self):
        B = null_space_basis(np.zeros((0, 4), dtype=complex), 4)
        assert np.allclose(B, np.eye(4))

    def test_random_stack_residuals(self):
        rng = make_rng(41)
        H = random_complex(4, 16, rng)
        B = null_space_basis(H, 16)
        assert B.shape == (16, 12)
        assert np.linalg.norm(B.conj().T @ B - np.eye(12)) <= 1e-10
        assert np.linalg.norm(H @ B) <= 1e-10 * np.linalg.norm(H)

    def test_full_rank_rejected(self):
        rng = make_rng(42)
        with pytest.raises(InfeasibleError):
            null_space_basis(random_complex(5, 4, rng), 4)


class TestBdzf:
    def test_exact_nulling_and_power(self):
        cfg = SystemConfig.uniform(K=2, Nt=64, Nr=16, Nt_rf=4, Nr_rf=4, Ns=4,
                                   P=2.0)
        ch = gen_rayleigh(cfg, make_rng(43))
        for k in range(2):
            F = bdzf_precoder(cfg, ch, k)
            assert leakage_norm(ch, k, F) <= 1e-9 * ch.cross_norm() * np.linalg.norm(F)
            power = np.trace(F @ F.conj().T).real
            assert power == pytest.approx(2.0, rel=1e-9)

    def test_single_user_is_eigen_precoding(self):
        # empty leakage: water-filled eigenmodes of the direct channel
        cfg = SystemConfig.uniform(K=1, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2,
                                   P=4.0, sigma2=0.5)
        ch = gen_rayleigh(cfg, make_rng(44))
        F = bdzf_precoder(cfg, ch, 0)
        s = np.linalg.svd(ch.H[0][0], compute_uv=False)
        f = waterfill(s[:2] ** 2, 0.5, 4.0)
        capacity = np.sum(np.log2(1.0 + s[:2] ** 2 * f / 0.5))
        _, sv, Vh = np.linalg.svd(ch.H[0][0])
        achieved = np.linalg.svd(ch.H[0][0] @ F, compute_uv=False)
        rate = np.sum(np.log2(1.0 + achieved ** 2 / 0.5))
        assert rate == pytest.approx(capacity, rel=1e-9)

    def test_zero_cross_equals_single_user(self):
        cfg2 = SystemConfig.uniform(K=2, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2)
        rng = make_rng(45)
        H00 = random_complex(4, 8, rng)
        H11 = random_complex(4, 8, rng)
        Z = np.zeros((4, 8), dtype=complex)
        ch2 = ChannelSet(H=((H00, Z), (Z, H11)))
        cfg1 = SystemConfig.uniform(K=1, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2)
        ch1 = ChannelSet(H=((H00,),))
        F2 = bdzf_precoder(cfg2, ch2, 0)
        F1 = bdzf_precoder(cfg1, ch1, 0)
        g2 = np.linalg.svd(H00 @ F2, compute_uv=False)
        g1 = np.linalg.svd(H00 @ F1, compute_uv=False)
        assert np.allclose(g2, g1, rtol=1e-9)

    def test_infeasible_dimensions(self):
        cfg = SystemConfig.uniform(K=2, Nt=4, Nr=4, Nt_rf=2, Nr_rf=2, Ns=2)
        ch = gen_rayleigh(cfg, make_rng(46))
        with pytest.raises(InfeasibleError):
            bdzf_precoder(cfg, ch, 0)


class TestGevd:
    def test_diagonal_pencil(self):
        T, S = gevd(np.diag([4.0, 1.0]).astype(complex), np.eye(2, dtype=complex))
        assert np.allclose(np.diag(S), [4.0, 1.0])
        assert np.allclose(np.abs(T), np.eye(2), atol=1e-12)

    def test_identical_pencil(self):
        rng = make_rng(47)
        A = random_hermitian_psd(4, rng) + 0.5 * np.eye(4)
        T, S = gevd(A, A)
        assert np.allclose(np.diag(S), 1.0)
        assert np.linalg.norm(T.conj().T @ A @ T - np.eye(4)) <= 1e-9

    def test_random_pencil_residuals(self):
        rng = make_rng(48)
        for _ in range(20):
            A = random_hermitian_psd(6, rng)
            B = random_hermitian_psd(6, rng) + 0.3 * np.eye(6)
            T, S = gevd(A, B)
            assert np.linalg.norm(T.conj().T @ B @ T - np.eye(6)) <= 1e-9
            D = T.conj().T @ A @ T
            assert np.linalg.norm(D - np.diag(np.diag(D))) <= 1e-9
            assert np.all(np.diff(np.diag(S).real) <= 1e-12)

    def test_indefinite_b_rejected(self):
        with pytest.raises(InvalidInputError):
            gevd(np.eye(2, dtype=complex), -np.eye(2, dtype=complex))


class TestSlnrPrecoder:
    def test_scalar_no_interference(self):
        cfg = SystemConfig.uniform(K=2, Nt=1, Nr=1, Nt_rf=1, Nr_rf=1, Ns=1)
        ch = ChannelSet(H=((np.array([[2.0 + 0j]]), np.array([[0.0j]])),
                           (np.array([[0.0j]]), np.array([[2.0 + 0j]]))))
        F = slnr_precoder(cfg, ch, 0)
        assert abs(F[0, 0]) == pytest.approx(1.0)
        assert slnr(cfg, ch, 0, F) == pytest.approx(4.0)

    def test_aligns_with_top_singular_vector_when_isolated(self):
        cfg = SystemConfig.uniform(K=2, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=1)
        rng = make_rng(49)
        H00 = random_complex(4, 8, rng)
        H11 = random_complex(4, 8, rng)
        Z = np.zeros((4, 8), dtype=complex)
        ch = ChannelSet(H=((H00, Z), (Z, H11)))
        F = slnr_precoder(cfg, ch, 0)
        _, _, Vh = np.linalg.svd(H00)
        v = Vh[0].conj()
        cos = abs(np.vdot(v, F[:, 0])) / np.linalg.norm(F[:, 0])
        assert cos >= 1.0 - 1e-8

    def test_beats_random_precoders(self):
        cfg = SystemConfig.uniform(K=2, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2)
        ch = gen_rayleigh(cfg, make_rng(50))
        F = slnr_precoder(cfg, ch, 0)
        best = slnr(cfg, ch, 0, F)
        rng = make_rng(51)
        for _ in range(100):
            R = random_complex(8, 2, rng)
            R *= np.sqrt(cfg.P[0]) / np.linalg.norm(R)
            assert slnr(cfg, ch, 0, R) <= best * (1 + 1e-9)

    def test_full_power(self):
        cfg = SystemConfig.uniform(K=2, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2, P=3.0)
        ch = gen_rayleigh(cfg, make_rng(52))
        F = slnr_precoder(cfg, ch, 0)
        assert np.trace(F @ F.conj().T).real == pytest.approx(3.0, rel=1e-9)


class TestMmseCombiner:
    def test_scalar_value(self):
        cfg = SystemConfig.uniform(K=1, Nt=1, Nr=1, Nt_rf=1, Nr_rf=1, Ns=1)
        ch = ChannelSet(H=((np.array([[1.0 + 0j]]),),))
        G = mmse_full_digital_combiner(cfg, ch, [np.array([[1.0 + 0j]])], 0)
        assert G[0, 0] == pytest.approx(0.5)

    def test_noise_dominated_limit(self):
        cfg = SystemConfig.uniform(K=1, Nt=4, Nr=4, Nt_rf=2, Nr_rf=2, Ns=2,
                                   sigma2=1e12)
        ch = gen_rayleigh(cfg, make_rng(53))
        F = random_complex(4, 2, make_rng(54))
        G = mmse_full_digital_combiner(cfg, ch, [F], 0)
        assert np.max(np.abs(G)) <= 1e-9

    def test_local_optimality(self):
        cfg = SystemConfig.uniform(K=2, Nt=6, Nr=4, Nt_rf=3, Nr_rf=3, Ns=2)
        ch = gen_rayleigh(cfg, make_rng(55))
        rng = make_rng(56)
        F = [random_complex(6, 2, rng) for _ in range(2)]
        G = [mmse_full_digital_combiner(cfg, ch, F, k) for k in range(2)]
        base = np.trace(pairwise_mse(cfg, ch, F, G)[0]).real
        for _ in range(20):
            delta = random_complex(4, 2, rng)
            delta *= 1e-3 / np.linalg.norm(delta)
            G_pert = [G[0] + delta, G[1]]
            perturbed = np.trace(pairwise_mse(cfg, ch, F, G_pert)[0]).real
            assert perturbed >= base - 1e-12


class TestPowerConstrainedPrecoder:
    def test_inactive_constraint(self):
        L = [np.array([[1.0 + 0j]])]
        W = [np.array([[1.0 + 0j]])]
        F = power_constrained_wmmse_precoder(L, W, 0, P=2.0)
        assert F[0, 0] == pytest.approx(1.0)

    def test_active_constraint_scalar(self):
        L = [np.array([[1.0 + 0j]])]
        W = [np.array([[1.0 + 0j]])]
        F = power_constrained_wmmse_precoder(L, W, 0, P=0.25)
        assert abs(F[0, 0]) == pytest.approx(0.5, abs=1e-9)

    def test_kkt_stationarity(self):
        rng = make_rng(57)
        for _ in range(20):
            L = [random_complex(2, 4, rng) for _ in range(3)]
            W = [random_hermitian_psd(2, rng) + 0.2 * np.eye(2) for _ in range(3)]
            P = 0.5
            F = power_constrained_wmmse_precoder(L, W, 1, P)
            power = np.trace(F @ F.conj().T).real
            assert power <= P * (1 + 1e-9)
            A = sum(Li.conj().T @ Wi @ Li for Li, Wi in zip(L, W))
            grad_no_beta = A @ F - L[1].conj().T @ W[1]
            if power < P * (1 - 1e-6):
                assert np.linalg.norm(grad_no_beta) <= 1e-8
            else:
                # gradient collinear with F: A F + beta F = L^H W
                beta = -np.vdot(F, grad_no_beta).real / power
                assert beta >= -1e-9
                assert np.linalg.norm(grad_no_beta + beta * F) <= 1e-8


def test_wmmse_upper_bounds_hybrid_schemes():
    # the fully-digital WMMSE solution dominates every hybrid design on
    # average over matched channel draws
    from hybridbf import (SolverOptions, bdzf_hybrid, mm_alt_opt,
                          partial_mm_alt_opt, slnr_hybrid, two_stage_pp)
    cfg = SystemConfig.uniform(K=2, Nt=16, Nr=4, Nt_rf=2, Nr_rf=2, Ns=2)
    opts = SolverOptions(eps_obj=1e-5, max_outer=150)
    sums = {name: 0.0 for name in
            ("fd", "mm", "ts", "zf", "sl", "ptx", "ptxrx")}
    for t in range(50):
        ch = gen_mmwave(cfg, 10, make_rng(140, t))
        fd, _ = wmmse_full_digital(cfg, ch)
        sums["fd"] += sum_rate(cfg, ch, fd).sum_rate
        sums["mm"] += sum_rate(cfg, ch, mm_alt_opt(cfg, ch, opts)[0]).sum_rate
        sums["ts"] += sum_rate(cfg, ch, two_stage_pp(cfg, ch, opts)[0]).sum_rate
        sums["zf"] += sum_rate(cfg, ch, bdzf_hybrid(cfg, ch, opts)).sum_rate
        sums["sl"] += sum_rate(cfg, ch, slnr_hybrid(cfg, ch, opts)).sum_rate
        sums["ptx"] += sum_rate(
            cfg, ch, partial_mm_alt_opt(cfg, ch, opts, layout_tx_only=True)[0]
        ).sum_rate
        sums["ptxrx"] += sum_rate(
            cfg, ch, partial_mm_alt_opt(cfg, ch, opts)[0]).sum_rate
    for name, total in sums.items():
        assert sums["fd"] >= total, f"fd-wmmse beaten by {name}"


class TestWmmseFullDigital:
    def test_single_user_reaches_waterfilled_capacity(self):
        cfg = SystemConfig.uniform(K=1, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=4,
                                   P=100.0, sigma2=1.0)
        ch = gen_rayleigh(cfg, make_rng(58))
        state, trace = wmmse_full_digital(cfg, ch, eps_obj=1e-10, max_iter=500)
        s = np.linalg.svd(ch.H[0][0], compute_uv=False)
        f = waterfill(s ** 2, 1.0, 100.0)
        capacity = np.sum(np.log2(1.0 + s ** 2 * f))
        rate = sum_rate(cfg, ch, state).sum_rate
        assert rate >= 0.98 * capacity

    def test_zero_channels(self):
        Z = np.zeros((4, 8), dtype=complex)
        ch = ChannelSet(H=((Z, Z), (Z, Z)))
        cfg = SystemConfig.uniform(K=2, Nt=8, Nr=4, Nt_rf=4, Nr_rf=4, Ns=2)
        state, trace = wmmse_full_digital(cfg, ch)
        assert sum_rate(cfg, ch, state).sum_rate == 0.0
        assert np.ptp(trace.objectives) <= 1e-12

    def test_monotone_objective_and_convergence(self):
        cfg = SystemConfig.uniform(K=2, Nt=16, Nr=4, Nt_rf=2, Nr_rf=2, Ns=2)
        converged = 0
        for t in range(20):
            ch = gen_mmwave(cfg, 10, make_rng(59, t))
            state, trace = wmmse_full_digital(cfg, ch, eps_obj=1e-6,
                                              max_iter=200)
            objs = np.array(trace.objectives)
            assert np.all(np.diff(objs) <= 1e-8 * (1 + np.abs(objs[:-1])))
            converged += trace.converged
            power = np.trace(state.F[0] @ state.F[0].conj().T).real
            assert power <= cfg.P[0] * (1 + 1e-9)
        assert converged >= 19
