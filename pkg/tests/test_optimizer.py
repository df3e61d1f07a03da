import math

import numpy as np
import pytest

from qsd.closed_form import (
    helstrom_bound,
    srm_error_circulant,
    symmetric_min_error,
)
from qsd.coupling import feasibility_residual, success_probability
from qsd.ensembles import gram_binary, gram_psk, gram_symmetric, spectral_factor
from qsd.errors import ValidationError
from qsd.optimizer import (
    OptimizeResult,
    PskParams,
    SolverConfig,
    objective_gradient,
    optimize_general,
    psk3_solve,
    psk4_solve,
    psk_coupling,
)


def random_isometry(rng, rank, n):
    m = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    q, _ = np.linalg.qr(m)
    return q.conj().T


def tangent_project(v, d):
    x = d @ v.conj().T
    return d - 0.5 * (x + x.conj().T) @ v


class TestSolverConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.max_iters == 2000
        assert cfg.grad_tol == 1e-10
        assert cfg.step_init == 0.1
        assert cfg.restarts == 8
        assert cfg.rank_tol == 1e-12

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"max_iters": 0},
            {"grad_tol": 0.0},
            {"step_init": -1.0},
            {"restarts": 0},
            {"rank_tol": 0.0},
            {"seed": -1},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValidationError):
            SolverConfig(**kwargs)


class TestOptimizeGeneral:
    def test_binary_unequal_priors(self):
        res = optimize_general(gram_binary(0.6, 0.25), SolverConfig(restarts=2))
        assert res.converged
        assert abs(res.p_error - helstrom_bound(0.25, 0.6)) <= 1e-7

    def test_symmetric_four_states(self):
        res = optimize_general(gram_symmetric(4, 0.5), SolverConfig(restarts=2))
        assert res.converged
        assert abs(res.p_error - symmetric_min_error(4, 0.5)) <= 1e-6

    def test_identity_gram_immediate(self):
        res = optimize_general(gram_symmetric(3, 0.0), SolverConfig(restarts=1))
        assert res.converged
        assert res.p_error <= 1e-12
        assert len(res.objective_trace) == 1

    def test_complex_binary_overlap(self):
        z = 0.55 * np.exp(2.1j)
        res = optimize_general(gram_binary(z, 0.35), SolverConfig(restarts=2))
        assert res.converged
        assert abs(res.p_error - helstrom_bound(0.35, z)) <= 1e-7

    def test_rank_deficient_edge(self):
        res = optimize_general(gram_symmetric(3, -0.5), SolverConfig(restarts=2))
        assert res.converged
        assert abs(res.p_error - symmetric_min_error(3, -0.5)) <= 1e-7

    def test_coupling_feasible_and_error_consistent(self):
        res = optimize_general(gram_psk(3, 0.7), SolverConfig(restarts=2))
        assert feasibility_residual(res.coupling) <= 1e-8
        assert abs(res.p_error - (1.0 - success_probability(res.coupling))) <= 1e-12

    def test_trace_nondecreasing(self):
        res = optimize_general(gram_binary(0.8, 0.15), SolverConfig(restarts=3))
        trace = res.objective_trace
        assert all(b >= a for a, b in zip(trace, trace[1:]))

    def test_deterministic(self):
        cfg = SolverConfig(restarts=4, seed=99)
        a = optimize_general(gram_psk(4, 0.6), cfg)
        b = optimize_general(gram_psk(4, 0.6), cfg)
        assert a.p_error == b.p_error
        assert np.array_equal(a.coupling.c, b.coupling.c)
        assert a.objective_trace == b.objective_trace


class TestObjectiveGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(314)
        h = 1e-6
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(2, 5))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            g = m @ m.conj().T
            d = np.sqrt(np.diag(g).real)
            g = g / np.outer(d, d)
            g = 0.5 * (g + g.conj().T)
            np.fill_diagonal(g, 1.0)
            from qsd.ensembles import Ensemble

            pr = rng.random(n)
            pr /= pr.sum()
            ens = Ensemble(n, g, pr)
            sf = spectral_factor(ens)
            v = random_isometry(rng, sf.rank, n)
            grad = objective_gradient(ens, v)
            b = sf.factor

            def f(mat):
                diag = np.einsum("ij,ji->i", b, mat)
                return float(np.dot(pr, np.abs(diag) ** 2))

            for _ in range(3):
                direction = tangent_project(
                    v, rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)
                )
                fd = (f(v + h * direction) - f(v - h * direction)) / (2 * h)
                analytic = float(np.sum(grad.conj() * direction).real)
                rel = abs(fd - analytic) / max(abs(fd), 1e-12)
                worst = max(worst, rel)
        assert worst < 1e-5

    def test_zero_at_binary_optimum(self):
        from qsd.coupling import binary_optimal_coupling

        ens = gram_binary(0.6, 0.25)
        sf = spectral_factor(ens)
        target = binary_optimal_coupling(0.25, 0.6)
        v = np.linalg.solve(sf.factor, target.c)
        assert np.max(np.abs(v @ v.conj().T - np.eye(2))) <= 1e-10
        grad = objective_gradient(ens, v)
        assert np.linalg.norm(grad) <= 1e-8

    def test_rejects_non_isometry(self):
        ens = gram_symmetric(3, 0.3)
        bad = np.full((3, 3), 0.5, dtype=complex)
        with pytest.raises(Exception):
            objective_gradient(ens, bad)


class TestPsk3:
    def test_zero_intensity(self):
        params, p_err = psk3_solve(0.0)
        assert p_err == pytest.approx(2 / 3, abs=1e-12)
        assert params.p == pytest.approx(1 / 3, abs=1e-12)

    def test_oracle_agreement_midrange(self):
        _, p_err = psk3_solve(0.5)
        assert abs(p_err - srm_error_circulant(gram_psk(3, 0.5))) <= 1e-8

    def test_near_orthogonal(self):
        _, p_err = psk3_solve(5.0)
        assert p_err < 1e-3
        assert abs(p_err - srm_error_circulant(gram_psk(3, 5.0))) <= 1e-8

    def test_params_satisfy_row_structure(self):
        params, _ = psk3_solve(0.8)
        assert abs(params.p + 2 * params.r - 1.0) <= 1e-10
        assert abs(params.u**2 + params.v**2 - params.r) <= 1e-10
        assert params.r_prime is None

    def test_coupling_feasible(self):
        params, p_err = psk3_solve(1.2)
        c = psk_coupling(3, 1.2, params)
        assert feasibility_residual(c) <= 1e-8
        assert abs((1.0 - success_probability(c)) - p_err) <= 1e-10

    def test_deterministic(self):
        a = psk3_solve(0.37)
        b = psk3_solve(0.37)
        assert a[1] == b[1]
        assert a[0] == b[0]


class TestPsk4:
    def test_zero_intensity(self):
        params, p_err = psk4_solve(0.0)
        assert p_err == pytest.approx(3 / 4, abs=1e-12)
        assert params.r_prime == pytest.approx(0.25, abs=1e-12)

    def test_oracle_agreement_unit_intensity(self):
        _, p_err = psk4_solve(1.0)
        assert abs(p_err - srm_error_circulant(gram_psk(4, 1.0))) <= 1e-8

    def test_general_optimizer_agreement(self):
        _, p_err = psk4_solve(0.25)
        res = optimize_general(gram_psk(4, 0.25), SolverConfig(restarts=3))
        assert abs(p_err - res.p_error) <= 1e-6

    def test_params_satisfy_row_structure(self):
        params, _ = psk4_solve(0.9)
        assert abs(params.p + 2 * params.r + params.r_prime - 1.0) <= 1e-10
        assert abs(params.u**2 + params.v**2 - params.r) <= 1e-10

    def test_coupling_feasible(self):
        params, p_err = psk4_solve(0.6)
        c = psk_coupling(4, 0.6, params)
        assert feasibility_residual(c) <= 1e-8
        assert abs((1.0 - success_probability(c)) - p_err) <= 1e-10

    def test_deterministic(self):
        a = psk4_solve(1.4)
        b = psk4_solve(1.4)
        assert a[1] == b[1]


class TestPskParamsValidation:
    def test_row_norm_enforced(self):
        with pytest.raises(ValidationError):
            PskParams(p=0.5, r=0.4, theta1=0.0, u=math.sqrt(0.4), v=0.0)

    def test_u_v_consistency_enforced(self):
        with pytest.raises(ValidationError):
            PskParams(p=0.5, r=0.25, theta1=0.0, u=0.1, v=0.0)

    def test_valid_ternary(self):
        PskParams(p=0.5, r=0.25, theta1=0.0, u=0.5, v=0.0)
