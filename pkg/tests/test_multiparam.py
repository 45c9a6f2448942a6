"""Decoupler search, Trotter bias accounting, and per-parameter estimation."""

import numpy as np
import pytest

from dqc1m import dense
from dqc1m.bayes import ZoomPolicy
from dqc1m.errors import PreconditionError
from dqc1m.measurement import NoiseModel
from dqc1m.multiparam import (
    MultiHamiltonian,
    TrotterPlan,
    decoupled_term,
    estimate_all,
    gamma_std,
    inflated_delta,
    measured_epsilon,
    required_slices,
    select_decoupler,
    select_probe,
    trotterized_measurement_mean,
)
from dqc1m.pauli import PauliProduct, PauliSum, commutes, decouple_hamiltonian

P = PauliProduct.from_string

TWO_PARAM = MultiHamiltonian.from_entries(
    2, [(0.3, "ZI"), (0.7, "IX")], prior_means=[0.3, 0.7])
# non-commuting couplings: the product formula has a real bias here
NONCOMM = MultiHamiltonian.from_entries(
    2, [(0.3, "ZI"), (0.7, "XI")], prior_means=[0.3, 0.7])


class TestSelectDecoupler:
    def test_two_param_example(self):
        sigma = select_decoupler(TWO_PARAM, 0)
        assert commutes(sigma, P("ZI"))
        assert not commutes(sigma, P("IX"))
        survived = decouple_hamiltonian(TWO_PARAM.to_sum(), sigma)
        assert survived == PauliSum.from_strings(2, [(0.3, "ZI")])

    def test_single_param_identity(self):
        h = MultiHamiltonian.from_entries(2, [(0.4, "ZZ")], prior_means=[0.4])
        assert select_decoupler(h, 0).is_identity

    def test_same_qubit_couplings(self):
        h = MultiHamiltonian.from_entries(
            2, [(0.5, "ZI"), (0.8, "XI")], prior_means=[0.5, 0.8])
        sigma = select_decoupler(h, 0)
        assert commutes(sigma, P("ZI")) and not commutes(sigma, P("XI"))

    def test_exact_decoupling_dense(self, rng):
        for nu in range(TWO_PARAM.parameter_count):
            sigma = select_decoupler(TWO_PARAM, nu)
            theta_nu, sigma_nu = decoupled_term(TWO_PARAM, sigma)
            got = dense.to_matrix(decouple_hamiltonian(TWO_PARAM.to_sum(), sigma))
            want = theta_nu * dense.to_matrix(sigma_nu)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_impossible_case_reports_blockers(self):
        # the target is the product of the other three couplings, so the
        # commutation parities cannot all be satisfied at once
        h = MultiHamiltonian.from_entries(
            2, [(0.1, "ZI"), (0.2, "IZ"), (0.3, "XX"), (0.4, "YY")],
            prior_means=[0.1, 0.2, 0.3, 0.4])
        with pytest.raises(PreconditionError, match="no single-product decoupler"):
            select_decoupler(h, 3)


class TestProbe:
    def test_anticommutes(self):
        for s in ("ZI", "IX", "YY", "XZ"):
            probe = select_probe(P(s))
            assert probe.weight == 1
            assert not commutes(probe, P(s))


class TestTrotterBias:
    PLAN = TrotterPlan(order=2, slices=32, decoupler=P("ZI"))

    def test_bias_bounded_by_epsilon(self, rng):
        probe = select_probe(P("ZI"))
        for _ in range(25):
            t = float(rng.uniform(0.2, 3.0))
            mean, gamma = trotterized_measurement_mean(NONCOMM, self.PLAN, probe, t)
            eps = measured_epsilon(NONCOMM, self.PLAN, t)
            assert abs(gamma) <= eps + 1e-12

    def test_large_q_limit(self):
        plan = TrotterPlan(order=2, slices=10_000, decoupler=P("ZI"))
        probe = select_probe(P("ZI"))
        _, gamma = trotterized_measurement_mean(NONCOMM, plan, probe, 0.5)
        assert abs(gamma) < 1e-8

    def test_commuting_case_zero_bias(self):
        h = MultiHamiltonian.from_entries(2, [(0.4, "ZZ")], prior_means=[0.4])
        plan = TrotterPlan(order=2, slices=3,
                           decoupler=PauliProduct.identity(2))
        probe = select_probe(P("ZZ"))
        _, gamma = trotterized_measurement_mean(h, plan, probe, 1.2)
        assert abs(gamma) < 1e-12

    def test_gamma_formulas(self):
        assert gamma_std(1e-3, 0.5) == pytest.approx(5e-4)
        assert inflated_delta(1e-3, 5e-4) == pytest.approx(1.118e-3, rel=1e-3)
        assert inflated_delta(1e-3, 0.0) == 1e-3
        assert inflated_delta(1e-3, 1e-5) >= 1e-3


class TestRequiredSlices:
    def test_budget_met_minimally(self):
        sigma = select_decoupler(NONCOMM, 0)
        q = required_slices(NONCOMM, sigma, 2.0, 2, 1e-3)
        assert q > 1
        # the guaranteed budget is met at q and the measured bias obeys it
        assert measured_epsilon(NONCOMM, TrotterPlan(2, q, sigma), 2.0) <= 1e-3

    @pytest.mark.parametrize("order,exponent", [(2, 2.0), (3, 1.5)])
    def test_slice_scaling_exponent(self, order, exponent):
        # q = O(T^(p/(p-1))) at fixed bias budget
        sigma = select_decoupler(NONCOMM, 0)
        times = [4.0, 8.0, 16.0, 32.0]
        qs = [required_slices(NONCOMM, sigma, t, order, 0.05) for t in times]
        slope = np.polyfit(np.log(times), np.log(qs), 1)[0]
        assert slope == pytest.approx(exponent, rel=0.15)


class TestEstimateAll:
    def test_two_parameters_recovered(self):
        pol = ZoomPolicy(c=10.0, c_prime=10.0, delta=1e-3,
                         target_precision=1e-5, theta_floor=0.05, max_steps=40)
        noise = NoiseModel(delta=1e-3, seed=21)
        recs = estimate_all(TWO_PARAM, TrotterPlan(order=2, slices=512), pol, noise)
        assert [r.nu for r in recs] == [0, 1]
        for rec, (theta_nu, _) in zip(recs, TWO_PARAM.terms):
            assert rec.converged
            assert abs(rec.theta_hat - theta_nu) < 5e-5
            assert rec.steps[-1].delta_gamma is not None
            assert rec.total_slices == 512 * len(rec.steps)

    def test_single_param_reduction(self):
        # P = 1 with huge q matches the exact single-parameter statistics
        h = MultiHamiltonian.from_entries(2, [(0.7, "ZI")], prior_means=[0.7])
        pol = ZoomPolicy(c=10.0, c_prime=10.0, delta=1e-3,
                         target_precision=1e-5, theta_floor=0.05, max_steps=40)
        noise = NoiseModel(delta=1e-3, seed=33)
        rec = estimate_all(h, TrotterPlan(order=3, slices=4096), pol, noise)[0]
        assert rec.converged
        assert abs(rec.theta_hat - 0.7) < 5e-5

    def test_coverage_with_inflation(self):
        pol = ZoomPolicy(c=10.0, c_prime=10.0, delta=1e-3,
                         target_precision=1e-4, theta_floor=0.05, max_steps=40)
        hits = total = 0
        for i in range(60):
            noise = NoiseModel(delta=1e-3, seed=400 + i)
            recs = estimate_all(NONCOMM, TrotterPlan(order=2, slices=2048),
                                pol, noise, trial_index=i)
            for r in recs:
                total += 1
                hits += r.covered
        assert hits / total >= 0.90
