import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamlab.hamiltonian import (
    FrequencyVector,
    HamiltonianPoly,
    NonlinearityModel,
    NormParams,
    build_nls,
    diagonal,
    evaluate_and_field,
    f_majorant,
    lipschitz_norm,
    nls_quadrature,
    poisson_bracket,
    weighted_norm,
)
from kamlab.indices import ModeSet, is_admissible_pair
from polys import random_hamiltonian

MS = ModeSet()
QUARTIC = build_nls(NonlinearityModel((1.0,)), None, MS, 4)


def mono(alpha, beta, c=1.0, ms=MS, degree_cap=8):
    key = (tuple(sorted(alpha.items())), tuple(sorted(beta.items())))
    return HamiltonianPoly.from_terms({key: c}, ms, degree_cap=degree_cap)


class TestBuildNls:
    def test_zero_nonlinearity_is_quadratic(self):
        H = build_nls(NonlinearityModel(()), None, MS, 4)
        expected = diagonal(FrequencyVector.squares(MS), 4)
        assert H.allclose(expected)

    def test_quartic_coefficients(self):
        assert QUARTIC.coefficient({3: 2}, {3: 2}) == pytest.approx(0.5)
        assert QUARTIC.coefficient({1: 1, 5: 1}, {1: 1, 5: 1}) == pytest.approx(2.0)
        assert QUARTIC.coefficient({1: 1, 3: 1}, {2: 2}) == pytest.approx(1.0)

    def test_rejects_potential_outside_box(self):
        with pytest.raises(ValueError):
            build_nls(NonlinearityModel((1.0,)), {3: 0.7}, MS, 4)

    def test_rejects_odd_cap(self):
        with pytest.raises(ValueError):
            build_nls(NonlinearityModel((1.0,)), None, MS, 5)

    @pytest.mark.parametrize("coeffs", [(1.0,), (1.0, -1.0)])
    def test_matches_quadrature(self, coeffs):
        model = NonlinearityModel(coeffs)
        V = {0: 0.2, 3: -0.1}
        H = build_nls(model, V, MS, 2 * (len(coeffs) + 1))
        rng = np.random.default_rng(11)
        for _ in range(20):
            sup = rng.choice(MS.modes, size=3, replace=False)
            u = {int(j): complex(*rng.normal(size=2)) * 0.4 for j in sup}
            assert evaluate_and_field(H, u)[0].real == pytest.approx(nls_quadrature(model, V, MS, u), rel=1e-10)

    def test_is_real_and_admissible(self):
        assert QUARTIC.is_real()
        for alpha, beta in QUARTIC.terms:
            assert is_admissible_pair(alpha, beta)


class TestBracket:
    def test_self_bracket_vanishes(self):
        assert len(poisson_bracket(QUARTIC, QUARTIC)) == 0

    def test_eigenrelation_with_diagonal(self):
        omega = FrequencyVector.from_offsets(MS, {1: 0.1, 2: -0.2, 3: 0.05})
        M = mono({1: 1, 3: 1}, {2: 2}, 2.0)
        out = diagonal(omega).bracket(M)
        expected = 1j * (omega[1] + omega[3] - 2 * omega[2]) * 2.0
        assert out.coefficient({1: 1, 3: 1}, {2: 2}) == pytest.approx(expected, rel=1e-14)
        assert len(out) == 1

    def test_action_bracket_by_hand(self):
        out = mono({1: 1}, {1: 1}).bracket(mono({1: 1, 3: 1}, {2: 2}))
        assert out.coefficient({1: 1, 3: 1}, {2: 2}) == pytest.approx(1j)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_closure_reality_antisymmetry(self, seed):
        rng = np.random.default_rng(seed)
        F = random_hamiltonian(MS, rng, 4, 4)
        G = random_hamiltonian(MS, rng, 4, 4)
        FG, GF = F.bracket(G), G.bracket(F)
        assert (FG + GF).max_abs() <= 1e-12 * max(FG.max_abs(), 1)
        assert FG.is_real(1e-12)
        for alpha, beta in FG.terms:
            assert is_admissible_pair(alpha, beta)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_jacobi(self, seed):
        rng = np.random.default_rng(seed)
        F, G, K = (random_hamiltonian(MS, rng, 3, 4, degree_cap=12) for _ in range(3))
        parts = [F.bracket(G.bracket(K)), G.bracket(K.bracket(F)), K.bracket(F.bracket(G))]
        scale = sum(P.max_abs() for P in parts) + F.max_abs() * G.max_abs() * K.max_abs()
        assert (parts[0] + parts[1] + parts[2]).max_abs() <= 1e-12 * scale


class TestNorms:
    def test_quadratic_isometry(self):
        lam = {1: 0.3, -7: -1.2, 4: 0.5}
        H = HamiltonianPoly.quadratic(MS, lam)
        for r, p in [(1, 1), (0.3, 2.5), (5, 1.1)]:
            assert weighted_norm(H, NormParams(r, p)) == pytest.approx(1.2, rel=1e-15)

    def test_single_monomial_by_hand(self):
        assert weighted_norm(mono({1: 1, 3: 1}, {2: 2}), NormParams(1, 1)) == pytest.approx(3 / 16)

    def test_zero(self):
        assert weighted_norm(HamiltonianPoly(MS), NormParams(1, 1)) == 0.0

    def test_constant_has_no_norm(self):
        assert weighted_norm(HamiltonianPoly(MS, const=3.0), NormParams(1, 1)) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.1, 2.0),
        st.floats(0.0, 1.0),
        st.floats(1.01, 3.0),
        st.floats(0.0, 1.0),
    )
    def test_monotone_in_r_and_p(self, seed, r, rho, p, delta):
        H = random_hamiltonian(MS, np.random.default_rng(seed), 5, 6)
        assert weighted_norm(H, NormParams(r, p + delta)) <= weighted_norm(H, NormParams(r + rho, p)) * (1 + 1e-12)

    def test_lipschitz_constant_family(self):
        samples = [np.zeros(3), np.ones(3)]
        assert lipschitz_norm(lambda w: QUARTIC, samples, 0.1, NormParams(1, 1)) == pytest.approx(
            weighted_norm(QUARTIC, NormParams(1, 1))
        )

    def test_lipschitz_linear_family(self):
        samples = [np.array([0.1]), np.array([0.3]), np.array([0.25])]

        def fam(w):
            return HamiltonianPoly.quadratic(MS, {1: float(w[0])})

        assert lipschitz_norm(fam, samples, 0.01, NormParams(1, 1)) == pytest.approx(0.3 + 0.01)

    def test_lipschitz_needs_two_samples(self):
        with pytest.raises(ValueError):
            lipschitz_norm(lambda w: QUARTIC, [np.zeros(1)], 0.1, NormParams(1, 1))

    def test_lipschitz_empty_family(self):
        assert lipschitz_norm(lambda w: HamiltonianPoly(MS), [np.zeros(1), np.ones(1)], 0.1, NormParams(1, 1)) == 0


class TestEvaluation:
    def test_quadratic_value_and_field(self):
        value, field = evaluate_and_field(HamiltonianPoly.quadratic(MS, {1: 1.0}), {1: 2})
        assert value == pytest.approx(4)
        assert field[MS.index[1]] == pytest.approx(-2j)

    def test_origin(self):
        value, field = evaluate_and_field(QUARTIC, {})
        assert value == 0 and not np.any(field)

    def test_json_round_trip(self):
        H = random_hamiltonian(MS, np.random.default_rng(2), 6, 6)
        assert HamiltonianPoly.from_json(H.to_json()).allclose(H)


@pytest.mark.parametrize(
    "coeffs, radius, expected",
    [((1.0,), 1.0, 1.0), ((1.0, -1.0), 0.5, 0.75), ((), 1.0, 0.0)],
)
def test_f_majorant(coeffs, radius, expected):
    assert f_majorant(NonlinearityModel(coeffs, radius)) == pytest.approx(expected)
