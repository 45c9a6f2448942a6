"""Search-oracle signal separation and the exponential-resource bound."""

import math

import numpy as np
import pytest

from dqc1m.errors import PreconditionError, ResourceLimitError
from dqc1m.measurement import NoiseModel
from dqc1m.search import (
    SearchInstance,
    ancilla_z_mean,
    detection_resources,
    haar_unitary,
    separation_bound,
    signal_separation,
)


class TestInstances:
    def test_validation(self):
        with pytest.raises(PreconditionError):
            SearchInstance.identity_chain(3, 9, 1.0, 2)
        with pytest.raises(PreconditionError):
            SearchInstance.identity_chain(3, 0, 0.0, 2)
        with pytest.raises(ResourceLimitError):
            SearchInstance.identity_chain(11, 0, 1.0, 2)

    def test_haar_unitary_is_unitary(self, rng):
        u = haar_unitary(16, rng)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-10)


class TestSeparation:
    def test_identity_chain_zero(self):
        inst = SearchInstance.identity_chain(4, 3, 1.0, 5)
        assert signal_separation(inst) == pytest.approx(0.0, abs=1e-14)

    def test_trivial_oracle_phase(self):
        # theta = 2 pi makes the oracle the identity: both arms agree
        inst = SearchInstance.random_chain(4, 3, 2 * math.pi, 3, seed=5)
        assert signal_separation(inst) < 1e-12

    def test_monotone_in_q_identity_chain(self):
        seps = [signal_separation(SearchInstance.identity_chain(4, 1, 1.0, q))
                for q in (1, 2, 4, 8)]
        assert all(b >= a for a, b in zip(seps, seps[1:]))

    def test_bound_on_random_interleaves(self):
        for n, q in ((3, 2), (4, 4), (5, 3)):
            for seed in range(20):
                inst = SearchInstance.random_chain(n, 1, 1.3, q, seed=seed)
                assert signal_separation(inst) <= separation_bound(inst) + 1e-12

    def test_saturating_chain_meets_bound(self):
        for n in (3, 4, 6):
            q = 2 ** (n - 2)
            inst = SearchInstance.saturating_chain(n, 1, math.pi, q)
            sep = signal_separation(inst)
            assert sep <= separation_bound(inst) + 1e-12
            assert sep >= 0.9 * separation_bound(inst)

    def test_saturating_chain_q_cap(self):
        with pytest.raises(PreconditionError):
            SearchInstance.saturating_chain(3, 0, math.pi, 8)

    def test_z_mean_identity_arm(self):
        # no oracle, identity interleave: the ancilla stays in |0>
        inst = SearchInstance.identity_chain(3, 0, 1.0, 2)
        assert ancilla_z_mean(inst, False) == pytest.approx(1.0, abs=1e-14)


class TestResources:
    def test_noiseless_limit(self):
        inst = SearchInstance.saturating_chain(4, 1, math.pi, 4)
        j, total = detection_resources(inst, NoiseModel(delta=1e-12))
        assert j == 1 and total == 4

    def test_strict_inequality(self):
        inst = SearchInstance.saturating_chain(4, 1, math.pi, 4)
        sep = signal_separation(inst)
        noise = NoiseModel(delta=2 * sep)
        j, _ = detection_resources(inst, noise)
        assert noise.effective_delta / math.sqrt(j) < sep
        assert noise.effective_delta / math.sqrt(j - 1) >= sep

    def test_zero_separation_unreachable(self):
        inst = SearchInstance.identity_chain(4, 1, 1.0, 3)
        with pytest.raises(PreconditionError, match="zero signal"):
            detection_resources(inst, NoiseModel(delta=0.1))

    def test_exponential_scaling_slope(self):
        # Q ~ 2^n against the saturating family: N grows like 2^n exactly
        noise = NoiseModel(delta=0.8, seed=0)
        ns = range(4, 9)
        logs = []
        for n in ns:
            inst = SearchInstance.saturating_chain(n, 1, math.pi, 2 ** (n - 2))
            _, total = detection_resources(inst, noise)
            logs.append(math.log2(total))
        slope = np.polyfit(list(ns), logs, 1)[0]
        assert slope == pytest.approx(1.0, abs=0.15)
