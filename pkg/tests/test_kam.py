import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamlab.hamiltonian import FrequencyVector, HamiltonianPoly, diagonal
from kamlab.indices import ModeSet, MultiIndex
from kamlab.kam import (
    CounterTermDivergence,
    FrequencyMapDivergence,
    KamSchedule,
    KamState,
    LieSeriesDivergence,
    NotNormalFormError,
    ball_points,
    conjugacy_audit,
    decay_exponents,
    draw_frequencies,
    fit_decay_offset,
    flow,
    holder_diagnostic,
    kam_step,
    lie_series,
    lie_transform,
    run_kam,
    sample_trajectory,
    solve_counterterm,
    solve_frequency_map,
    torus_residual,
)
from kamlab.small_divisors import DiophParams, ResonanceBudget
from kamlab.torus import CenteredPoly, CounterTerm, TorusData, to_centered
from polys import random_hamiltonian

MS = ModeSet()
SCHEDULE = KamSchedule()
PARAMS = DiophParams()
OMEGA, W = draw_frequencies(MS, PARAMS, ResonanceBudget(MS, 8), seed=0)
TORUS = TorusData.power_law(MS, SCHEDULE.torus_radius, SCHEDULE.p_inf)
NU = {j: OMEGA[j] for j in MS.tangential}


def mono(alpha, beta, c=1.0, degree_cap=8):
    key = (tuple(sorted(alpha.items())), tuple(sorted(beta.items())))
    return HamiltonianPoly.from_terms({key: c}, MS, degree_cap=degree_cap)


def centered(alpha, beta, c):
    return to_centered(mono(alpha, beta, c), TORUS, 6, 2)


class TestSchedule:
    def test_closed_forms(self):
        s = KamSchedule(r0=1.0, rho=0.4, p0=2.0, delta=0.6)
        r = s.r0
        for n in range(6):
            assert s.r(n) == pytest.approx(r)
            r -= 3 * s.rho_n(n)
        assert sum(3 * s.rho_n(n) for n in range(200)) == pytest.approx(s.rho)
        assert s.r_inf == pytest.approx(s.r0 - s.rho)
        assert s.p_inf == pytest.approx(s.p0 + s.delta)
        assert s.p(4000) == pytest.approx(s.p_inf, abs=1e-3)
        assert s.chi == 1.5

    def test_raw_sequence_overshoots(self):
        s = KamSchedule(delta=1.0, normalize_delta=False)
        assert s.p_inf == pytest.approx(s.p0 + 1.5)

    def test_monotone(self):
        rs = [SCHEDULE.r(n) for n in range(8)]
        ps = [SCHEDULE.p(n) for n in range(8)]
        assert all(a > b for a, b in zip(rs, rs[1:]))
        assert all(a < b for a, b in zip(ps, ps[1:]))

    def test_rejects_large_rho(self):
        with pytest.raises(ValueError):
            KamSchedule(r0=1.0, rho=0.6)


class TestLieSeries:
    H = mono({1: 1, 3: 1}, {2: 2})

    def test_zero_generator(self):
        assert lie_transform(self.H, HamiltonianPoly(MS)).allclose(self.H)

    def test_action_generator_by_hand(self):
        c = 0.1
        S = HamiltonianPoly.quadratic(MS, {1: c})
        two = lie_series(self.H, S, order_cap=2).result
        assert two.coefficient({1: 1, 3: 1}, {2: 2}) == pytest.approx(1 + 1j * c - c * c / 2, rel=1e-15)
        full = lie_transform(self.H, S)
        assert full.coefficient({1: 1, 3: 1}, {2: 2}) == pytest.approx(np.exp(1j * c), rel=1e-13)

    def test_rejects_constant_generator(self):
        with pytest.raises(ValueError):
            lie_transform(self.H, HamiltonianPoly(MS, const=1.0))

    def test_divergence(self):
        with pytest.raises(LieSeriesDivergence):
            lie_transform(self.H, HamiltonianPoly.quadratic(MS, {1: 10.0}))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_inverse_flow(self, seed):
        rng = np.random.default_rng(seed)
        H = random_hamiltonian(MS, rng, 4, 4)
        S = random_hamiltonian(MS, rng, 3, 4) * 0.01
        forward = lie_series(H, S)
        back = lie_series(forward.result, S * -1.0)
        tail = max(forward.tail, back.tail)
        assert (back.result - H).max_abs() <= max(10 * tail, 1e-14 * H.max_abs())


class TestCountertermSolve:
    def test_identity_solve(self):
        rhs = np.linspace(-1, 1, len(MS.modes))
        assert np.array_equal(solve_counterterm(np.zeros((33, 33)), rhs, TORUS).lam, rhs)

    def test_zero_rhs(self):
        M = np.full((33, 33), 0.01)
        assert not solve_counterterm(M, np.zeros(33), TORUS).lam.any()

    def test_contraction_required(self):
        with pytest.raises(CounterTermDivergence):
            solve_counterterm(np.eye(33), np.ones(33), TORUS)

    def test_dense_solve(self):
        rng = np.random.default_rng(0)
        M = rng.uniform(-1, 1, (33, 33)) / 100
        rhs = rng.normal(size=33)
        lam = solve_counterterm(M, rhs, TORUS).lam
        assert np.allclose(lam + M @ lam, rhs, rtol=0, atol=1e-14)


class TestStep:
    def test_normal_form_is_fixed(self):
        G = centered({1: 1, 5: 1}, {3: 2}, 1e-3)
        nxt = kam_step(KamState.initial(G, SCHEDULE, PARAMS.gamma), OMEGA, SCHEDULE, PARAMS)
        assert len(nxt.generators[0]) == 0
        assert nxt.counterterm.norm() == 0
        assert (nxt.G - G).max_abs() == 0

    def test_single_monomial(self):
        eps = 1e-4
        G = centered({1: 1, 3: 1}, {2: 2}, eps)
        start = KamState.initial(G, SCHEDULE, PARAMS.gamma)
        nxt = kam_step(start, OMEGA, SCHEDULE, PARAMS)
        S = nxt.generators[0]
        divisor = OMEGA[1] + OMEGA[3] - 2 * OMEGA[2]
        assert list(S.terms.values()) == [pytest.approx(eps / (1j * divisor), rel=1e-14)]
        assert nxt.counterterm.norm() == 0
        assert nxt.eps <= start.eps**2

    def test_action_term_fixes_counterterm(self):
        key = tuple(MultiIndex(x) for x in ({1: 1}, {}, {}, {}, {}))
        G = CenteredPoly.from_terms(TORUS, {key: 3.0}, size_cap=6, max_degree=2)
        nxt = kam_step(KamState.initial(G, SCHEDULE, PARAMS.gamma), OMEGA, SCHEDULE, PARAMS)
        assert nxt.counterterm.as_dict() == {1: pytest.approx(-3.0)}
        assert nxt.eps == 0

    def test_diagonal_converges_without_steps(self):
        empty = CenteredPoly(TORUS, size_cap=6, max_degree=2)
        res = run_kam(empty, OMEGA, SCHEDULE, PARAMS)
        assert res.state.n == 0 and res.converged


class TestDecayAudits:
    def test_exponents(self):
        assert decay_exponents([1e-4, 1e-8, 1e-20]) == [pytest.approx(2.0)]
        assert decay_exponents([1e-4]) == []

    def test_offset(self):
        eps = [1e-4, 1e-6]
        c = fit_decay_offset(eps)
        assert math.log(1e-6) <= 1.5 * math.log(1e-4) + c + 1e-12


class TestFlow:
    def test_action_flow_is_rotation(self):
        c = 0.3
        S = HamiltonianPoly.quadratic(MS, {1: c, 5: -c})
        pts = ball_points(MS, 0.5, 2.0, 3, seed=1)
        out = flow(S, pts)
        i1, i5 = MS.index[1], MS.index[5]
        assert np.allclose(out[:, i1], np.exp(1j * c) * pts[:, i1], rtol=1e-12, atol=0)
        assert np.allclose(out[:, i5], np.exp(-1j * c) * pts[:, i5], rtol=1e-12, atol=0)

    def test_ball_points_respect_weights(self):
        pts = ball_points(MS, 0.3, 2.0, 20, seed=0)
        w = np.maximum(1, np.abs(np.array(MS.modes))) ** 2.0
        assert np.all(np.abs(pts) * w <= 0.3 + 1e-15)


class TestFrequencyMap:
    def test_zero_counterterm(self):
        fm = solve_frequency_map(lambda om: CounterTerm.zero(TORUS), NU, W, MS)
        for j in MS.normal:
            assert fm.omega[j] == j * j + W.get(j, 0.0)
        for j in MS.tangential:
            assert fm.V[j] == pytest.approx(NU[j] - j * j)
            assert fm.omega[j] == NU[j]
        assert fm.residual == 0

    def test_constant_counterterm(self):
        lam = CounterTerm(TORUS, np.linspace(-1e-3, 1e-3, 33))
        fm = solve_frequency_map(lambda om: lam, NU, W, MS)
        assert fm.steps[-1] == 0 and fm.iterations <= 2
        for j in MS.normal:
            assert fm.omega[j] == pytest.approx(j * j + W.get(j, 0.0) - lam[j], abs=1e-15)
        assert max(abs(v + lam[j]) for j, v in fm.shift(W).items()) <= 1e-12

    def test_expanding_map_rejected(self):
        squares = np.array(MS.modes, dtype=float) ** 2

        def lam(om: FrequencyVector):
            return CounterTerm(TORUS, 2 * (om.values - squares) + 1e-3)

        with pytest.raises(FrequencyMapDivergence):
            solve_frequency_map(lam, NU, W, MS)

    def test_missing_tangential_frequency(self):
        with pytest.raises(ValueError):
            solve_frequency_map(lambda om: CounterTerm.zero(TORUS), {1: 1.0}, W, MS)


class TestTorusResidual:
    def test_diagonal(self):
        assert torus_residual(diagonal(OMEGA), OMEGA, TORUS) == 0

    def test_square_of_action_vanishes(self):
        key = tuple(MultiIndex(x) for x in ({1: 2}, {}, {}, {}, {}))
        N = CenteredPoly.from_terms(TORUS, {key: 1.0})
        assert torus_residual(N, OMEGA, TORUS) <= 1e-15
        single = CenteredPoly.from_terms(TORUS, {tuple(MultiIndex(x) for x in ({1: 1}, {}, {}, {}, {})): 1.0})
        assert torus_residual(single, OMEGA, TORUS, check_normal_form=False) > 0

    def test_not_normal(self):
        with pytest.raises(NotNormalFormError):
            torus_residual(diagonal(OMEGA) + mono({1: 1, 3: 1}, {2: 2}, 0.1), OMEGA, TORUS)


class TestTrajectory:
    def test_single_mode_rotation(self):
        torus = TorusData(MS, {2: 0.04})
        t = np.linspace(0, 3, 7)
        x = np.linspace(0, 2 * np.pi, 5)
        u = sample_trajectory(torus, OMEGA, None, t, x)
        expected = 0.2 * np.exp(1j * (OMEGA[2] * t[:, None] + 2 * x[None, :]))
        assert np.allclose(u, expected, rtol=1e-14, atol=0)

    def test_initial_time_is_torus_point(self):
        phases = np.random.default_rng(0).uniform(0, 2 * np.pi, len(MS.tangential))
        u = sample_trajectory(TORUS, OMEGA, phases, np.zeros(1), np.zeros(1))
        assert u[0, 0] == pytest.approx(TORUS.point(phases).sum(), rel=1e-14)

    def test_holder_trend(self):
        exps = [holder_diagnostic(TorusData.power_law(MS, 1.0, p), OMEGA).exponent for p in (0.5, 1.0, 1.5)]
        assert exps[0] < exps[1] < exps[2]


class TestNlsRun:
    def test_first_step_is_quadratic(self, nls_run):
        eps = nls_run.result.eps_history
        assert eps[1] <= eps[0] ** 1.4

    def test_regression_final_eps(self, nls_run):
        eps = nls_run.result.eps_history
        assert eps[-1] <= 1e-12 or nls_run.result.state.n < 4

    def test_conjugacy_discriminates(self, nls_run):
        res = nls_run.result
        report = conjugacy_audit(res, nls_run.seed.nonlinearity, n_points=4, seed=3)
        assert report.relative <= 1e-8
        # without the transformation the same comparison fails by orders of magnitude
        res_identity = replace(res, state=replace(res.state, generators=[]))
        unflowed = conjugacy_audit(res_identity, nls_run.seed.nonlinearity, n_points=4, seed=3)
        assert unflowed.max_error > 100 * report.max_error

    def test_frequency_map_regression(self, frequency_run):
        fm = frequency_run.fmap
        assert fm.iterations <= 20 and fm.residual < 1e-12
