"""Black-box estimation: only integer powers of W_B = exp(-i H) are available.

Zooming multiplies the power by an integer base b each step; a known phase
compensation exp(-i phi H_0) (unit cost, always reducible to
phi in (-pi/2, pi/2]) re-centers the phase at pi/2 + 2 p pi where the cosine
is linearizable.  The update algebra mirrors the continuous case with the
time ratio replaced by b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import dense, measurement
from .errors import PreconditionError
from .pauli import PauliProduct, PauliSum, find_su2_partner
from .records import RunRecord, StepRecord
from .streams import keyed_normal

CI_FACTOR = 1.96


@dataclass(frozen=True)
class BlackBoxPolicy:
    """Zoom base and prior parameters for discrete-time estimation.

    b must be small enough that b * delta stays well inside the cosine's
    linear zone; the default pairing b = 8, delta = 1e-3 keeps
    b * delta = 8e-3 << 1.
    """

    b: int = 8
    delta: float = 1e-3
    c: float = 10.0
    target_precision: float = 1e-6
    max_steps: int = 40

    def __post_init__(self):
        problems = self.validation_errors()
        if problems:
            raise PreconditionError("; ".join(problems))

    def validation_errors(self) -> list:
        out = []
        if int(self.b) != self.b or self.b < 2:
            out.append(f"zoom base b must be an integer >= 2, got {self.b}")
        if not (self.delta > 0):
            out.append(f"delta must be positive, got {self.delta}")
        if not (self.c > 0):
            out.append(f"c must be positive, got {self.c}")
        if self.delta > 0 and self.c * self.delta > 0.1:
            out.append(f"c*delta = {self.c * self.delta:g} exceeds 0.1; prior too wide")
        if self.delta > 0 and self.b * self.delta > 0.1:
            out.append(f"b*delta = {self.b * self.delta:g} exceeds 0.1; zoom too coarse")
        if not (self.target_precision > 0):
            out.append(f"target precision must be positive, got {self.target_precision}")
        if self.max_steps < 1:
            out.append(f"max_steps must be >= 1, got {self.max_steps}")
        return out


@dataclass(frozen=True)
class DiscreteState:
    """State between black-box measurements.

    sigma is Sigma_l, the standard deviation of the 2 theta q_l estimator;
    q, phase_comp and winding describe the pending measurement, which
    satisfies 2 theta_hat q + 2 phi = pi/2 + 2 p pi exactly.
    """

    step: int
    theta_hat: float
    sigma: float
    q: int
    phase_comp: float
    winding: int
    history: tuple = ()

    @property
    def theta_std(self) -> float:
        return self.sigma / (2 * self.q)

    def interval(self) -> tuple:
        half = CI_FACTOR * self.theta_std
        return self.theta_hat - half, self.theta_hat + half


def init_discrete(theta0_hat: float, policy: BlackBoxPolicy) -> DiscreteState:
    """First measurement: one W_B use with compensation phi_1 = pi/4 - theta0."""
    if not (0 < theta0_hat < math.pi / 4):
        raise PreconditionError(
            f"prior mean {theta0_hat:g} outside (0, pi/4); re-center the prior "
            "before black-box estimation"
        )
    return DiscreteState(
        step=0,
        theta_hat=theta0_hat,
        sigma=policy.c * policy.delta,
        q=1,
        phase_comp=math.pi / 4 - theta0_hat,
        winding=0,
    )


def advance_discrete(state: DiscreteState, policy: BlackBoxPolicy) -> DiscreteState:
    """Multiply the power by b and solve the winding equation for (p, phi)."""
    q_next = policy.b * state.q
    total = 2 * state.theta_hat * q_next
    u = total - math.pi / 2
    p_next = math.floor((u + math.pi) / (2 * math.pi))
    phi_next = (math.pi / 2 + 2 * p_next * math.pi - total) / 2
    if not (-math.pi / 2 < phi_next <= math.pi / 2 + 1e-12):
        raise AssertionError(f"phase compensation {phi_next} escaped (-pi/2, pi/2]")
    return DiscreteState(
        step=state.step,
        theta_hat=state.theta_hat,
        sigma=state.sigma,
        q=q_next,
        phase_comp=phi_next,
        winding=p_next,
        history=state.history,
    )


def discrete_update(state: DiscreteState, y_l1: float, policy: BlackBoxPolicy,
                    measurement_delta: Optional[float] = None,
                    n_calls: Optional[int] = None) -> DiscreteState:
    """Conjugate update for the outcome y at the pending (q, phi, p) setting.

    omega = b Sigma_l / Delta (omega = c on the first step); then
    Sigma_{l+1} = omega/sqrt(1+omega^2) Delta < Delta and the point estimate
    moves by -omega^2/(1+omega^2) y inside the winding equation.
    """
    delta = policy.delta if measurement_delta is None else measurement_delta
    q_prev = state.history[-1].q if state.history else state.q
    omega = (state.q / q_prev) * state.sigma / delta
    gain = omega * omega / (1 + omega * omega)
    shrink = omega / math.sqrt(1 + omega * omega)
    center = math.pi / 2 + 2 * state.winding * math.pi
    beta_hat = center - gain * y_l1
    sigma_new = shrink * delta
    theta_hat = (beta_hat - 2 * state.phase_comp) / (2 * state.q)
    half = CI_FACTOR * sigma_new / (2 * state.q)
    rec = StepRecord(
        step=state.step + 1, t=float(state.q), p=state.winding,
        a=state.q / q_prev, x=y_l1, theta_hat=theta_hat, delta=sigma_new,
        interval_lo=theta_hat - half, interval_hi=theta_hat + half,
        q=state.q, phi=state.phase_comp, n_calls=n_calls,
        outlier=abs(y_l1) > 1 + 5 * delta,
    )
    return DiscreteState(
        step=state.step + 1,
        theta_hat=theta_hat,
        sigma=sigma_new,
        q=state.q,
        phase_comp=state.phase_comp,
        winding=state.winding,
        history=state.history + (rec,),
    )


def total_calls(policy: BlackBoxPolicy, k: int) -> int:
    """Black-box uses after k steps starting from q_1 = 1: (b^k - 1)/(b - 1)."""
    return (policy.b ** k - 1) // (policy.b - 1)


def run_power_estimation(mean_fn: Callable[[int, float], float],
                         theta0_hat: float, policy: BlackBoxPolicy, noise,
                         trial_index: int = 0, mode: str = "estimate-discrete",
                         theta_true: float = float("nan"),
                         count_exchanges: bool = False) -> RunRecord:
    """Generic driver: mean_fn(q, phi) returns the exact cosine mean of the
    circuit at power q with compensation phi; noise is added here."""
    eff = noise.effective_delta
    if abs(eff - policy.delta) > 1e-9 * max(eff, policy.delta):
        raise PreconditionError(
            f"policy.delta = {policy.delta:g} but the noise model gives an "
            f"effective std of {eff:g}; set policy.delta to match"
        )
    state = init_discrete(theta0_hat, policy)
    calls = 0
    converged = False
    while state.step < policy.max_steps:
        mean = mean_fn(state.q, state.phase_comp)
        y = measurement.sample_trace_estimate(
            mean, noise, key=(trial_index, state.step + 1, 0))
        calls += state.q
        state = discrete_update(state, y, policy, n_calls=calls)
        if state.theta_std <= policy.target_precision:
            converged = True
            break
        if state.theta_hat <= 0:
            break
        state = advance_discrete(state, policy)
    lo, hi = state.interval()
    return RunRecord(
        mode=mode,
        trial=trial_index,
        theta_true=theta_true,
        theta_hat=state.theta_hat,
        converged=converged,
        interval_lo=lo,
        interval_hi=hi,
        total_time=float(calls),
        target_precision=policy.target_precision,
        steps=state.history,
        n_calls=calls,
        exchanges_used=calls if count_exchanges else None,
        outliers=sum(1 for r in state.history if r.outlier),
    )


def run_discrete(h0: PauliSum, sigma1: PauliProduct, theta_true: float,
                 policy: BlackBoxPolicy, noise,
                 theta0_hat: Optional[float] = None,
                 trial_index: int = 0) -> RunRecord:
    """Black-box run with W_B = exp(-i theta H_0) realized densely.

    sigma1 must anticommute with exactly one term of H_0 (coefficient e_mu);
    the estimand is then the effective rotation rate e_mu * theta, and the
    compensation gate exp(-i (phi / e_mu) H_0) implements phase phi exactly.
    """
    mu, _sigma2 = find_su2_partner(h0, sigma1)
    e_mu = h0.terms[mu][0]
    theta_eff = e_mu * theta_true
    w_b = dense.evolve(h0, theta_true)
    m1 = dense.to_matrix(sigma1)

    def mean_fn(q: int, phi: float) -> float:
        w_a = np.linalg.matrix_power(w_b, q) @ dense.evolve(h0, phi / e_mu)
        return dense.heisenberg_trace(w_a, m1, m1).normalized.real

    if theta0_hat is None:
        z = keyed_normal(noise.seed, (trial_index, 0, 0), 1.0)
        theta0_hat = theta_eff + policy.c * policy.delta / 2 * z
    return run_power_estimation(
        mean_fn, theta0_hat, policy, noise,
        trial_index=trial_index, theta_true=theta_eff,
    )
