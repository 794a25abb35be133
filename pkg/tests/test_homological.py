import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamlab.hamiltonian import FrequencyVector, HamiltonianPoly
from kamlab.homological import (
    KernelTermError,
    NonDiophantineError,
    apply_Lw,
    invert_Lw,
    sample_range_polys,
    single_term_ratio,
    solve_homological,
    solver_norm_audit,
)
from kamlab.indices import ModeSet, MultiIndex
from kamlab.kam import draw_frequencies
from kamlab.small_divisors import DiophParams, ResonanceBudget, k0_supremum
from kamlab.torus import TorusData, project_kernel, to_centered

MS = ModeSet()
SQUARES = FrequencyVector.squares(MS)
PARAMS = DiophParams()
B8 = ResonanceBudget(MS, 8)


def mono(alpha, beta, c=1.0):
    key = (tuple(sorted(alpha.items())), tuple(sorted(beta.items())))
    return HamiltonianPoly.from_terms({key: c}, MS)


@pytest.fixture(scope="module")
def omega():
    return draw_frequencies(MS, PARAMS, B8, seed=0)[0]


@pytest.fixture(scope="module")
def samples(omega):
    return sample_range_polys(omega, B8, 60, seed=4)


class TestLieDerivative:
    def test_kernel_is_annihilated(self):
        H = HamiltonianPoly.quadratic(MS, {1: 1.0, 3: 2.0}) + mono({1: 2}, {1: 2})
        assert len(apply_Lw(project_kernel(H, "K"), SQUARES)) == 0

    def test_single_monomial(self):
        out = apply_Lw(mono({3: 1, 5: 1}, {4: 2}, 1.5), SQUARES)
        assert out.coefficient({3: 1, 5: 1}, {4: 2}) == pytest.approx(3j)

    def test_matches_bracket_with_diagonal(self, samples, omega):
        D = HamiltonianPoly.quadratic(MS, omega.values, degree_cap=64)
        for G in samples[:10]:
            assert (apply_Lw(G, omega) - D.bracket(G)).max_abs() <= 1e-12 * max(G.max_abs(), 1)

    def test_works_on_centered_form(self, omega):
        torus = TorusData.power_law(MS, 0.1, 2.0)
        G = mono({3: 1, 5: 1, 1: 1}, {4: 2, 1: 1})
        C = to_centered(G, torus)
        assert (to_centered(apply_Lw(G, omega), torus) - apply_Lw(C, omega)).max_abs() <= 1e-14


class TestSolver:
    def test_hand_division(self):
        sol = solve_homological(mono({3: 1, 5: 1}, {4: 2}), SQUARES, PARAMS)
        assert sol.F.coefficient({3: 1, 5: 1}, {4: 2}) == pytest.approx(-0.5j)
        assert sol.min_divisor == pytest.approx(2)

    def test_kernel_term_rejected(self):
        with pytest.raises(KernelTermError) as err:
            solve_homological(mono({1: 2}, {1: 2}) + mono({3: 1, 5: 1}, {4: 2}), SQUARES, PARAMS)
        assert err.value.key == (MultiIndex({1: 2}), MultiIndex({1: 2}))

    def test_non_diophantine_rejected(self):
        values = SQUARES.values.copy()
        values[MS.index[4]] += 1 - 1e-7
        with pytest.raises(NonDiophantineError) as err:
            solve_homological(mono({3: 1, 5: 1}, {4: 2}), FrequencyVector(MS, values), PARAMS)
        assert err.value.ell.norm1 == 4

    def test_empty_input(self, omega):
        sol = solve_homological(HamiltonianPoly(MS), omega, PARAMS)
        assert sol.norm_ratio == 0 and len(sol.F) == 0

    def test_round_trip(self, samples, omega):
        for G in samples:
            F = invert_Lw(G, omega, PARAMS)
            assert (apply_Lw(F, omega) - G).max_abs() <= 1e-12 * G.max_abs()
            assert (invert_Lw(apply_Lw(G, omega), omega, PARAMS) - G).max_abs() <= 1e-12 * G.max_abs()

    def test_single_term_closed_form(self, omega):
        alpha, beta = {3: 1, 5: 1}, {4: 2}
        for delta in (0.1, 0.4, 0.8):
            sol = solve_homological(mono(alpha, beta, 0.7), omega, PARAMS, delta)
            expected = single_term_ratio(alpha, beta, omega, delta)
            assert sol.norm_ratio == pytest.approx(expected, rel=1e-12)
            assert sol.norm_ratio <= k0_supremum(delta, PARAMS, B8, omega).measured_sup / PARAMS.gamma

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 59), st.floats(0.05, 0.45))
    def test_ratio_shrinks_with_delta(self, samples, omega, idx, delta):
        G = samples[idx]
        small = solve_homological(G, omega, PARAMS, delta).norm_ratio
        large = solve_homological(G, omega, PARAMS, 2 * delta).norm_ratio
        assert large <= small * (1 + 1e-12)


def test_norm_audit_has_no_violations(omega):
    rows = solver_norm_audit(omega, PARAMS, B8, n_samples=100, seed=2)
    assert [r["delta"] for r in rows] == [0.1, 0.2, 0.4, 0.8]
    for r in rows:
        assert r["violations"] == 0
        assert r["worst_ratio"] <= r["bound"]
