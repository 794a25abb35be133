import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamlab.hamiltonian import FrequencyVector
from kamlab.indices import ModeSet, SignedIndexVector, quad_moment
from kamlab.kam import draw_frequencies
from kamlab.small_divisors import (
    DiophParams,
    ResonanceBudget,
    aux_lemma_validators,
    analytic_measure_bound,
    default_normal_map,
    dioph_weight,
    fit_k0_constant,
    k0_dc_bound,
    k0_supremum,
    measure_estimate,
    resonance_set,
    slab_measure_sum,
    tangential_only,
    verify_dc,
)

MS = ModeSet()
B4 = ResonanceBudget(MS, 4)
B8 = ResonanceBudget(MS, 8)
ELL = SignedIndexVector({3: 1, 5: 1, 4: -2})


@pytest.fixture(scope="module")
def omega():
    return draw_frequencies(MS, DiophParams(), B8, seed=0)[0]


class TestWeights:
    def test_hand_value(self):
        assert dioph_weight(ELL, DiophParams(0.01, 2)) == pytest.approx(0.01 / 289, rel=1e-15)

    def test_normal_support_gives_gamma(self):
        assert dioph_weight({3: 1, 5: -1}, DiophParams(0.02, 3)) == 0.02

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            dioph_weight(SignedIndexVector.unit(1) - SignedIndexVector.unit(1), DiophParams())

    def test_params_validated(self):
        with pytest.raises(ValueError):
            DiophParams(gamma=0.7)
        with pytest.raises(ValueError):
            DiophParams(tau=1.0)


class TestEnumeration:
    def test_small_budget_is_empty(self):
        assert len(resonance_set(ResonanceBudget(MS, 2))) == 0

    def test_budget_four(self):
        res = resonance_set(B4)
        assert ELL in set(res.vectors())
        assert not tangential_only(res).any()

    def test_prefiltered_vector(self):
        ell = SignedIndexVector({1: 2, 4: 1, 2: -3})
        assert abs(quad_moment(ell)) == ell.norm1
        assert ell in set(resonance_set(ResonanceBudget(MS, 6), "none").vectors())
        assert ell not in set(resonance_set(ResonanceBudget(MS, 6)).vectors())

    @pytest.mark.parametrize("l_max", [4, 6, 8])
    def test_parity_and_completion_counts(self, l_max):
        res = resonance_set(ResonanceBudget(MS, l_max), "none")
        n1 = res.norm1
        assert np.all(n1 % 2 == 0) and np.all(n1 >= 4)
        k_norm = np.abs(res.ks).sum(axis=1)
        assert np.all(res.completions_per_k <= 36 * (k_norm + 2))

    def test_recombination(self):
        res = resonance_set(B8)
        assert np.array_equal(res.recombine(), res.ells)

    def test_conservation(self):
        res = resonance_set(B8, "none")
        modes = np.array(MS.modes)
        assert not res.ells.sum(axis=1).any()
        assert not (res.ells @ modes).any()


class TestDiophantine:
    def test_squares_pass_single_vector(self):
        sq = FrequencyVector.squares(MS)
        assert abs(sq.dot(ELL)) == 2 >= dioph_weight(ELL, DiophParams())

    def test_squares_fail_on_budget(self):
        report = verify_dc(FrequencyVector.squares(MS), DiophParams(), B8)
        assert not report.ok
        assert report.worst_divisor == 0

    def test_empty_budget_is_vacuous(self):
        report = verify_dc(FrequencyVector.squares(MS), DiophParams(), ResonanceBudget(MS, 2))
        assert report.ok and report.n_checked == 0

    def test_random_draw_is_diophantine(self, omega):
        report = verify_dc(omega, DiophParams(), B8)
        assert report.ok and report.worst_ratio >= 1
        assert omega.in_box()


class TestK0:
    def test_empty_budget(self, omega):
        audit = k0_supremum(0.5, DiophParams(), ResonanceBudget(MS, 2), omega)
        assert audit.empty and audit.measured_sup == 0

    @pytest.mark.parametrize("delta", [0.1, 0.2, 0.4, 0.8, 0.99])
    def test_witness_recomputes(self, omega, delta):
        audit = k0_supremum(delta, DiophParams(), B8, omega)
        assert audit.recompute() == pytest.approx(audit.measured_sup, rel=1e-12)

    def test_dc_ceiling(self, omega):
        for delta in (0.1, 0.4, 0.8):
            audit = k0_supremum(delta, DiophParams(), B8, omega)
            assert audit.measured_sup <= k0_dc_bound(delta, DiophParams(), B8) * (1 + 1e-12)

    def test_delta_range(self, omega):
        with pytest.raises(ValueError):
            k0_supremum(1.0, DiophParams(), B8, omega)

    def test_fitted_constant_dominates(self, omega):
        audits = [k0_supremum(d, DiophParams(), B8, omega) for d in (0.1, 0.2, 0.4, 0.8)]
        c = fit_k0_constant(audits)
        for a in audits:
            assert math.log(a.measured_sup) <= c / a.delta * math.log(1 / a.delta) ** 2 + 1e-12


class TestMeasure:
    W = {j: 0.25 for j in MS.normal}

    def test_zero_samples(self):
        with pytest.raises(ValueError):
            measure_estimate(DiophParams(), B8, 0, 0)

    def test_empty_resonance_set(self):
        assert measure_estimate(DiophParams(), ResonanceBudget(MS, 2), 100, 0).excluded == 0

    def test_analytic_bound_baseline(self):
        assert analytic_measure_bound(DiophParams(), B4) == pytest.approx(2.9267832383225776, rel=1e-12)

    def test_slab_sum_is_linear_in_gamma(self):
        omap = default_normal_map(MS, self.W)
        vals = [slab_measure_sum(DiophParams(g), B8, omap) / g for g in (0.1, 0.05, 0.025)]
        assert vals[0] > 0
        # the inclusion-exclusion law loses a few digits to cancellation
        assert max(vals) - min(vals) <= 1e-6 * vals[0]

    def test_monte_carlo_matches_slab_oracle(self):
        omap = default_normal_map(MS, self.W)
        params = DiophParams(0.5)
        report = measure_estimate(params, B8, 200_000, 3, omap)
        exact = slab_measure_sum(params, B8, omap)
        assert report.ci[0] <= exact <= report.ci[1]

    def test_halving_gamma_halves_fraction(self):
        omap = default_normal_map(MS, self.W)
        big = measure_estimate(DiophParams(0.5), B8, 200_000, 5, omap)
        small = measure_estimate(DiophParams(0.25), B8, 200_000, 5, omap)
        assert small.excluded <= big.excluded
        assert small.ci[0] <= big.excluded_fraction / 2 <= small.ci[1]


class TestAuxiliaryInequalities:
    def test_single_term(self):
        for x1 in (2.0, 10.0, 1e3):
            assert x1 / math.sqrt(x1) <= math.sqrt(x1) + 4 / math.sqrt(x1)

    def test_log_versus_linear_point(self):
        delta = math.exp(-4)
        y = 4 * math.exp(4) * 4
        assert -delta * y + math.log1p(y * y) <= 0

    def test_sum_over_product_counterexample_for_small_exponent(self):
        a, x = 0.1, [100.0, 100.0]
        lhs = sum(x) / math.prod(v**a for v in x)
        assert lhs > x[0] ** (1 - a) + 2 / (a * x[0] ** a)

    def test_validators_hold_for_exponents_from_half(self):
        report = aux_lemma_validators(20_000, seed=1, a_range=(0.5, 1.0))
        assert report["passed"], report

    @settings(max_examples=200)
    @given(
        st.floats(0.5, 0.999),
        st.lists(st.floats(2.0, 1e4), min_size=1, max_size=10),
    )
    def test_sum_over_product_property(self, a, xs):
        x = sorted(xs, reverse=True)
        lhs = sum(x) * math.exp(-a * sum(math.log(v) for v in x))
        assert lhs <= x[0] ** (1 - a) + 2 / (a * x[0] ** a) + 1e-12

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            aux_lemma_validators(0, 0)
