"""Stochastic model of a DQC1 experiment.

A single run of the trace circuit returns the exact normalized-trace mean
plus Gaussian noise of standard deviation delta (delta/sqrt(K) after K
repetitions).  Samples are never truncated to [-1, 1]: the Bayesian updates
downstream assume an unbounded normal likelihood, and truncation would bias
them.  Every draw is addressed by (seed, key) via counter-based streams, so
campaigns are reproducible on any thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import dense
from .errors import PreconditionError
from .pauli import PauliSum, su2_effective_rate
from .streams import keyed_normal


@dataclass(frozen=True)
class NoiseModel:
    """Per-run output noise of the DQC1 circuit.

    delta: standard deviation of one run's normalized-trace estimate.
    repetitions: K averaged repetitions per run (std shrinks by sqrt(K)).
    seed: base entropy for the keyed sample streams.
    """

    delta: float
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (self.delta > 0):
            raise PreconditionError(f"delta must be positive, got {self.delta}")
        if self.repetitions < 1 or int(self.repetitions) != self.repetitions:
            raise PreconditionError(
                f"repetitions must be a positive integer, got {self.repetitions}"
            )

    @property
    def effective_delta(self) -> float:
        """Std of a K-averaged run: delta / sqrt(K)."""
        return self.delta / math.sqrt(self.repetitions)


@dataclass(frozen=True)
class CosSinEstimate:
    """Noisy estimates of cos(2 theta T) and, optionally, sin(2 theta T)."""

    cos_hat: float
    sin_hat: Optional[float]
    effective_delta: float


def sample_trace_estimate(true_mean: float, noise: NoiseModel,
                          key: tuple = ()) -> float:
    """One noisy normalized-trace reading: true_mean + N(0, (delta/sqrt(K))^2).

    Identical (noise.seed, key) always reproduces the same value; the result
    is deliberately not clipped to [-1, 1].
    """
    if abs(true_mean) > 1 + 1e-9:
        raise PreconditionError(
            f"normalized-trace mean must lie in [-1, 1], got {true_mean}"
        )
    return true_mean + keyed_normal(noise.seed, tuple(key), noise.effective_delta)


def combined_cos_delta(h1: PauliSum, noise: NoiseModel) -> float:
    """Propagated std of the cosine estimate built from L^2 independent runs.

    cos(2 theta T) = (2^n / d) * sum_{mu,mu'} e_mu e_mu' tr[...]/2^n with
    d = tr[H_1^2], so independent per-run noise combines to
    (delta/sqrt(K)) * (2^n / d) * sqrt(sum (e_mu e_mu')^2).
    """
    coeffs = h1.coefficients
    sq = sum(c * c for c in coeffs)
    if sq == 0:
        raise PreconditionError("H_1 must be a nonzero Pauli sum")
    quad = math.sqrt(sum((a * b) ** 2 for a in coeffs for b in coeffs))
    return noise.effective_delta * quad / sq


def estimate_cos_sin(h0: PauliSum, h1: PauliSum, h2: PauliSum,
                     theta_true: float, t: float, noise: NoiseModel,
                     want_sin: bool = False, key: tuple = ()) -> CosSinEstimate:
    """Simulate the DQC1 estimation of cos(2 theta T) (and sin) for the
    su(2) triple (H_0, H_1, H_2) under H = theta H_0.

    Each of the L^2 terms of the expansion is sampled with independent noise,
    exactly as if every trace were produced by its own circuit run; with
    single-product H_1 and H_2 this reduces to one (or two) runs.
    theta_true is hidden ground truth used only to compute circuit means.
    The estimated angle is 2 (e theta) T with e the effective rotation rate
    of the (H_0, H_1, H_2) decomposition (e = 1 for a strict triple).
    """
    su2_effective_rate(h0, h1, h2)  # precondition: valid probe pair
    w = dense.evolve(h0, theta_true * t)
    d = h1.schmidt_norm
    dim = 2 ** h0.n
    key = tuple(key)

    def combined(target: PauliSum, base_term: int) -> float:
        total = 0.0
        idx = base_term
        for c1, p1 in h1.terms:
            m1 = dense.to_matrix(p1)
            for c2, p2 in target.terms:
                mean = dense.heisenberg_trace(w, m1, dense.to_matrix(p2)).normalized.real
                x = sample_trace_estimate(mean, noise, key + (idx,))
                total += c1 * c2 * x * dim
                idx += 1
        return total / d

    cos_hat = combined(h1, 0)
    sin_hat = -combined(h2, h1.term_count ** 2) if want_sin else None
    return CosSinEstimate(cos_hat=cos_hat, sin_hat=sin_hat,
                          effective_delta=combined_cos_delta(h1, noise))
