"""Multi-parameter estimation by dynamical decoupling.

Each coupling theta_nu sigma_nu of H = sum_nu theta_nu sigma_nu is isolated
by conjugation-averaging (H + sigma H sigma)/2 with a Pauli gate sigma that
commutes with sigma_nu and anticommutes with every other term.  The
decoupled evolution is realized as a Suzuki-Trotter product of available
gates; the product-formula bias gamma inflates the measurement noise to
Delta' = sqrt(Delta^2 + Delta_gamma^2) and the single-parameter zoom
estimator runs unchanged on top.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from . import bayes, dense, measurement
from .errors import PreconditionError
from .pauli import PauliProduct, PauliSum, decouple_hamiltonian
from .records import RunRecord


@dataclass(frozen=True)
class MultiHamiltonian:
    """H = sum_nu theta_nu sigma_nu with per-parameter prior means."""

    n: int
    terms: tuple          # tuple[(float, PauliProduct), ...]
    prior_means: tuple    # tuple[float, ...], each in (0, pi)

    @classmethod
    def from_entries(cls, n: int, entries: Sequence, prior_means: Sequence):
        terms = []
        seen = set()
        for theta_nu, prod in entries:
            if isinstance(prod, str):
                prod = PauliProduct.from_string(prod)
            if not prod.is_phase_free:
                raise PreconditionError(f"coupling product {prod} must be phase-free")
            key = (prod.z_mask, prod.x_mask)
            if key in seen:
                raise PreconditionError(f"duplicate coupling product {prod.letters()}")
            seen.add(key)
            terms.append((float(theta_nu), prod))
        priors = tuple(float(v) for v in prior_means)
        if len(priors) != len(terms):
            raise PreconditionError("one prior mean required per coupling")
        for v in priors:
            if not (0 < v < math.pi):
                raise PreconditionError(f"prior mean {v:g} outside (0, pi)")
        return cls(n, tuple(terms), priors)

    @property
    def parameter_count(self) -> int:
        return len(self.terms)

    def to_sum(self) -> PauliSum:
        return PauliSum.from_terms(self.n, self.terms)


@dataclass(frozen=True)
class TrotterPlan:
    """Product-formula choice for one decoupled evolution."""

    order: int
    slices: int
    decoupler: Optional[PauliProduct] = None
    gamma_std: float = 0.0

    def __post_init__(self):
        if self.order not in (2, 3):
            raise PreconditionError(f"unsupported product-formula order {self.order}")
        if self.slices < 1 or int(self.slices) != self.slices:
            raise PreconditionError(f"slice count must be a positive integer, got {self.slices}")


def _candidate_products(n: int, budget: int):
    """Yield phase-free products in increasing weight order, up to a budget."""
    count = 0
    for weight in range(n + 1):
        for positions in itertools.combinations(range(n), weight):
            for letters in itertools.product("XYZ", repeat=weight):
                x = z = 0
                for pos, ch in zip(positions, letters):
                    if ch in ("X", "Y"):
                        x |= 1 << pos
                    if ch in ("Y", "Z"):
                        z |= 1 << pos
                yield PauliProduct(n, x, z, 0)
                count += 1
                if count >= budget:
                    return


def select_decoupler(h: MultiHamiltonian, nu: int,
                     budget: int = 4 ** 9) -> PauliProduct:
    """Lowest-weight Pauli gate commuting with sigma_nu and anticommuting
    with every other coupling term."""
    if not (0 <= nu < h.parameter_count):
        raise PreconditionError(f"parameter index {nu} out of range")
    target = h.terms[nu][1]
    others = [p for i, (_, p) in enumerate(h.terms) if i != nu]
    for cand in _candidate_products(h.n, budget):
        if not cand.commutes_with(target):
            continue
        if all(not cand.commutes_with(p) for p in others):
            return cand
    blockers = ", ".join(p.letters() for p in others)
    raise PreconditionError(
        f"no single-product decoupler found for term {target.letters()} "
        f"against {{{blockers}}} within the search budget"
    )


def select_probe(sigma_nu: PauliProduct) -> PauliProduct:
    """A weight-1 product anticommuting with sigma_nu (the su(2) partner seed)."""
    for k in range(sigma_nu.n):
        if sigma_nu.letter(k) != "I":
            other = "X" if sigma_nu.letter(k) != "X" else "Z"
            text = "".join(other if j == k else "I" for j in range(sigma_nu.n))
            return PauliProduct.from_string(text)
    raise PreconditionError("coupling product is the identity; nothing to probe")


def decoupled_term(h: MultiHamiltonian, sigma: PauliProduct):
    """(theta_nu, sigma_nu) surviving conjugation-averaging with sigma."""
    survived = decouple_hamiltonian(h.to_sum(), sigma)
    if survived.term_count != 1:
        raise PreconditionError(
            f"decoupler {sigma.letters()} leaves {survived.term_count} terms, expected 1"
        )
    return survived.terms[0]


def trotterized_measurement_mean(h: MultiHamiltonian, plan: TrotterPlan,
                                 sigma1: PauliProduct, t: float) -> tuple:
    """(mean, gamma): the exact circuit mean under the product-formula
    evolution, and its bias against cos(2 theta_nu t).

    gamma is ground truth available only in simulation; hardware would see
    mean = cos + gamma as one number.
    """
    if plan.decoupler is None:
        raise PreconditionError("plan needs a decoupler to build the product formula")
    theta_nu, _sigma_nu = decoupled_term(h, plan.decoupler)
    approx = dense.trotter_evolution(h.to_sum(), plan.decoupler, t,
                                     plan.slices, plan.order)
    m1 = dense.to_matrix(sigma1)
    mean = dense.heisenberg_trace(approx, m1, m1).normalized.real
    return mean, mean - math.cos(2 * theta_nu * t)


def measured_epsilon(h: MultiHamiltonian, plan: TrotterPlan, t: float) -> float:
    """The bias budget epsilon = 2 ||S_nu(T) - Sbar_nu(T)|| at this T."""
    return 2 * dense.trotter_error(h.to_sum(), plan.decoupler, t,
                                   plan.slices, plan.order)


def gamma_std(delta: float, eps: float) -> float:
    """Worst-case prior width of the Trotter bias: Delta_gamma = Delta * eps."""
    return delta * eps


def inflated_delta(delta: float, gamma: float) -> float:
    """Delta' = sqrt(Delta^2 + Delta_gamma^2) after marginalizing the bias."""
    return math.hypot(delta, gamma)


def required_slices(h: MultiHamiltonian, sigma: PauliProduct, t: float,
                    order: int, eps_budget: float, q_cap: int = 1 << 26) -> int:
    """Smallest slice count whose guaranteed bias budget is within eps_budget.

    Uses the subadditive bound eps(q) <= 2 q ||S(t/q) - Sbar(t/q)||, which
    decreases smoothly like 1/q^(p-1); the measured composed error can
    oscillate before the asymptotic regime and is unsafe to bisect on.
    """
    hsum = h.to_sum()
    exact_h = decouple_hamiltonian(hsum, sigma)

    def eps_bound(q: int) -> float:
        slice_err = dense.spectral_norm(
            dense.trotter_step(hsum, sigma, t / q, order)
            - dense.evolve(exact_h, t / q))
        return 2 * q * slice_err

    lo, hi = 0, 1
    while eps_bound(hi) > eps_budget:
        lo, hi = hi, hi * 2
        if hi > q_cap:
            raise PreconditionError(
                f"slice budget {q_cap} exceeded chasing eps <= {eps_budget:g}"
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid == 0 or eps_bound(mid) > eps_budget:
            lo = mid
        else:
            hi = mid
    return hi


def estimate_all(h: MultiHamiltonian, plan_per_nu: Union[TrotterPlan, Sequence],
                 policy: bayes.ZoomPolicy, noise,
                 trial_index: int = 0) -> list:
    """One adaptive run per coupling, with noise inflated by the Trotter bias.

    Returns one RunRecord per parameter, in term order.  Runs are
    statistically independent (disjoint sample streams) and could execute
    in parallel; they are driven sequentially here.
    """
    if abs(noise.effective_delta - policy.delta) > 1e-9 * policy.delta:
        raise PreconditionError(
            f"policy.delta = {policy.delta:g} must equal the noise model's "
            f"effective std {noise.effective_delta:g}"
        )
    plans = ([plan_per_nu] * h.parameter_count
             if isinstance(plan_per_nu, TrotterPlan) else list(plan_per_nu))
    if len(plans) != h.parameter_count:
        raise PreconditionError("one TrotterPlan required per coupling")
    records = []
    for nu, (theta_nu, sigma_nu) in enumerate(h.terms):
        plan = plans[nu]
        if plan.decoupler is None:
            plan = replace(plan, decoupler=select_decoupler(h, nu))
        sigma1 = select_probe(sigma_nu)
        extras: dict = {}

        def measure(state, _plan=plan, _sigma1=sigma1, _nu=nu):
            t_l = state.t_current
            mean, gamma = trotterized_measurement_mean(h, _plan, _sigma1, t_l)
            eps = measured_epsilon(h, _plan, t_l)
            g_std = gamma_std(policy.delta, eps)
            d_prime = inflated_delta(policy.delta, g_std)
            x = measurement.sample_trace_estimate(
                mean, noise, key=(trial_index, 1000 + _nu, state.step + 1))
            extras[state.step + 1] = (g_std, gamma)
            return x, d_prime

        state, total_time, converged = bayes.run_zoom_loop(
            h.prior_means[nu], policy, measure)
        steps = tuple(
            replace(r, q_slices=plan.slices,
                    delta_gamma=extras.get(r.step, (None, None))[0],
                    gamma=extras.get(r.step, (None, None))[1])
            for r in state.history
        )
        lo, hi = state.interval()
        records.append(RunRecord(
            mode="multiparam",
            trial=trial_index,
            theta_true=theta_nu,
            theta_hat=state.theta_hat,
            converged=converged,
            interval_lo=lo,
            interval_hi=hi,
            total_time=total_time,
            target_precision=policy.target_precision,
            steps=steps,
            total_slices=plan.slices * len(steps),
            nu=nu,
            outliers=sum(1 for r in steps if r.outlier),
        ))
    return records
