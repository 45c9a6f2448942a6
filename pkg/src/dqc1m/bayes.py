"""Adaptive Bayesian zoom-in estimation with continuous evolution time.

The estimator keeps the phase 2 theta T_l pinned near pi/2 modulo 2 pi by
solving 2 theta_hat_{l-1} T_l = pi/2 + 2 p_l pi exactly at each step,
linearizes the cosine there, and performs conjugate-normal updates.  The
scaled deviation contracts below the per-measurement noise after every
update, so precision improves as 1/T_l and the run stops once
Delta_l / (2 T_l) reaches the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

from . import measurement
from .errors import PreconditionError
from .pauli import PauliSum, su2_effective_rate
from .records import RunRecord, StepRecord
from .streams import keyed_normal

CI_FACTOR = 1.96  # nominal 95% credible interval


@dataclass(frozen=True)
class ZoomPolicy:
    """Schedule and prior parameters of the zoom-in estimator.

    c scales the prior width (prior std of the first phase is c*delta);
    c_prime caps the per-step time ratio; theta_floor is the smallest prior
    mean served by the cosine schedule directly (below it a sine-based
    bootstrap runs first).
    """

    c: float = 10.0
    c_prime: float = 10.0
    delta: float = 1e-3
    target_precision: float = 1e-6
    theta_floor: float = 0.05
    max_steps: int = 60

    def __post_init__(self):
        problems = self.validation_errors()
        if problems:
            raise PreconditionError("; ".join(problems))

    def validation_errors(self) -> list:
        out = []
        if not (self.delta > 0):
            out.append(f"delta must be positive, got {self.delta}")
        if not (self.c > 0):
            out.append(f"c must be positive, got {self.c}")
        if self.c_prime < self.c:
            out.append(f"c_prime ({self.c_prime}) must be >= c ({self.c})")
        if not (self.c_prime > 5):
            out.append(f"c_prime must exceed 5 for the zoom bound, got {self.c_prime}")
        if self.delta > 0 and self.c * self.delta > 0.1:
            out.append(f"c*delta = {self.c * self.delta:g} exceeds 0.1; prior too wide")
        if self.delta > 0 and self.c > 0:
            wrap = math.erfc(2 * math.pi / (self.c * self.delta * math.sqrt(2)))
            if wrap >= 1e-9:
                out.append(f"phase wrap-around probability {wrap:.2e} not negligible")
        if not (self.target_precision > 0):
            out.append(f"target precision must be positive, got {self.target_precision}")
        if not (self.theta_floor > 0):
            out.append(f"theta floor must be positive, got {self.theta_floor}")
        if self.max_steps < 1:
            out.append(f"max_steps must be >= 1, got {self.max_steps}")
        return out


@dataclass(frozen=True)
class EstimatorState:
    """Estimator state between measurements.

    t_current and winding describe the pending (or just consumed)
    measurement setting; scaled_dev is Delta_l, with Delta_0 = prior width.
    """

    step: int
    theta_hat: float
    scaled_dev: float
    t_current: float
    winding: int
    history: tuple = ()

    @property
    def theta_std(self) -> float:
        return self.scaled_dev / (2 * self.t_current)

    def interval(self) -> tuple:
        half = CI_FACTOR * self.theta_std
        return self.theta_hat - half, self.theta_hat + half


def init_schedule(theta0_hat: float, policy: ZoomPolicy,
                  prior_alpha_std: Optional[float] = None,
                  theta_floor: Optional[float] = None) -> EstimatorState:
    """First evolution time T_1 = pi / (4 theta0_hat), so 2 theta0_hat T_1 = pi/2.

    theta0_hat must lie in [theta_floor, pi); smaller prior means need the
    sine-based bootstrap (see run_estimation), larger ones a quadrant fix.
    prior_alpha_std overrides the default prior width c*delta of the first
    phase, and theta_floor overrides the policy's floor; the bootstrap
    handoff uses both, having already contracted the prior.
    """
    floor = policy.theta_floor if theta_floor is None else theta_floor
    if not (floor <= theta0_hat < math.pi):
        raise PreconditionError(
            f"prior mean {theta0_hat:g} outside [{floor:g}, pi); "
            "use the sin-based bootstrap for small priors, or re-center"
        )
    width = policy.c * policy.delta if prior_alpha_std is None else prior_alpha_std
    return EstimatorState(
        step=0,
        theta_hat=theta0_hat,
        scaled_dev=width,
        t_current=math.pi / (4 * theta0_hat),
        winding=0,
    )


def next_zoom(state: EstimatorState, policy: ZoomPolicy) -> tuple:
    """Largest admissible zoom: the biggest integer winding p with
    T(p) = (pi/2 + 2 p pi) / (2 theta_hat) at most c_prime * T_l.

    Returns (t_next, p_next, a_next); a_next > c_prime - 4 whenever the
    estimate did not move pathologically, since consecutive ratios differ
    by at most 4.
    """
    if state.theta_hat <= 0:
        raise PreconditionError(
            "estimate collapsed to a non-positive value; restart with the sin path"
        )
    budget = policy.c_prime * state.t_current
    p_max = math.floor((2 * state.theta_hat * budget - math.pi / 2) / (2 * math.pi))
    p_next = max(p_max, state.winding + 1)
    t_next = (math.pi / 2 + 2 * p_next * math.pi) / (2 * state.theta_hat)
    a_next = t_next / state.t_current
    if p_next > p_max and a_next > policy.c_prime * (1 + 1e-12):
        raise PreconditionError(
            f"no admissible winding: smallest ratio {a_next:g} exceeds "
            f"c_prime = {policy.c_prime:g}"
        )
    return t_next, p_next, a_next


def advance(state: EstimatorState, policy: ZoomPolicy) -> EstimatorState:
    """Move the state to the next measurement setting chosen by next_zoom."""
    t_next, p_next, _ = next_zoom(state, policy)
    return replace(state, t_current=t_next, winding=p_next)


def posterior_update(state: EstimatorState, x_l: float, policy: ZoomPolicy,
                     measurement_delta: Optional[float] = None) -> EstimatorState:
    """Conjugate-normal update for the measurement at the state's (T_l, p_l).

    With omega = a_l Delta_{l-1} / Delta (omega = c on the first step):
        alpha_hat = pi/2 + 2 p_l pi - omega^2/(1+omega^2) x_l
        Delta_l   = omega/sqrt(1+omega^2) * Delta
    Large |x_l| marks the step as an outlier but the update is still
    applied; later measurements correct it.
    """
    delta = policy.delta if measurement_delta is None else measurement_delta
    prev_t = state.history[-1].t if state.history else state.t_current
    a_l = state.t_current / prev_t
    omega = a_l * state.scaled_dev / delta
    shrink = omega / math.sqrt(1 + omega * omega)
    gain = omega * omega / (1 + omega * omega)
    center = math.pi / 2 + 2 * state.winding * math.pi
    alpha_hat = center - gain * x_l
    new_dev = shrink * delta
    theta_hat = alpha_hat / (2 * state.t_current)
    outlier = abs(x_l) > 1 + 5 * delta
    half = CI_FACTOR * new_dev / (2 * state.t_current)
    rec = StepRecord(
        step=state.step + 1, t=state.t_current, p=state.winding, a=a_l,
        x=x_l, theta_hat=theta_hat, delta=new_dev,
        interval_lo=theta_hat - half, interval_hi=theta_hat + half,
        outlier=outlier,
    )
    return EstimatorState(
        step=state.step + 1,
        theta_hat=theta_hat,
        scaled_dev=new_dev,
        t_current=state.t_current,
        winding=state.winding,
        history=state.history + (rec,),
    )


def linearization_error_bound(policy: ZoomPolicy) -> float:
    """Cubic-term bound (c' delta)^3 / 6 on |cos(alpha) + alpha'|."""
    return (policy.c_prime * policy.delta) ** 3 / 6


def run_zoom_loop(theta0_hat: float, policy: ZoomPolicy,
                  measure: Callable[[EstimatorState], tuple],
                  prior_alpha_std: Optional[float] = None,
                  theta_floor: Optional[float] = None) -> tuple:
    """Drive init -> (measure -> update -> zoom)* until the target precision.

    measure(state) returns (x_l, measurement_delta) for the state's pending
    setting.  Returns (final_state, total_time, converged).
    """
    state = init_schedule(theta0_hat, policy, prior_alpha_std=prior_alpha_std,
                          theta_floor=theta_floor)
    total_time = 0.0
    converged = False
    while state.step < policy.max_steps:
        x, meas_delta = measure(state)
        total_time += state.t_current
        state = posterior_update(state, x, policy, measurement_delta=meas_delta)
        if state.theta_std <= policy.target_precision:
            converged = True
            break
        if state.theta_hat <= 0:
            break  # collapsed estimate; report non-converged
        state = advance(state, policy)
    return state, total_time, converged


# -- sine-based bootstrap for small prior means --------------------------------


def _sin_bootstrap(theta0_hat: float, theta_std0: float, policy: ZoomPolicy,
                   measure_sin: Callable[[int, float], tuple]):
    """Contract a small prior by measuring sin(2 theta T') near phase zero.

    The phase 2 theta T' stays inside the sine's linear zone around 0 while
    T' grows by factors of at most c_prime; once the would-be cosine prior
    width 2 T_1 std_theta is small enough, control passes to the cosine
    pipeline.  Returns (theta_hat, theta_std, records, time_used).
    """
    delta = policy.delta
    # keep |2 theta T'| + spread below the cubic-error budget ~ 0.1 delta
    alpha_cap = max((1.2 * delta) ** (1 / 3) - policy.c_prime * delta, 8 * delta)
    width_cap = min(2.5 * policy.c_prime * delta, 0.25 * (0.6 * delta) ** (1 / 3))
    theta_hat, theta_std = theta0_hat, theta_std0
    t_prime = 1.0
    records = []
    time_used = 0.0
    for step in range(1, policy.max_steps + 1):
        x, meas_delta = measure_sin(step, t_prime)
        time_used += t_prime
        mean_alpha = 2 * theta_hat * t_prime
        s_alpha = 2 * theta_std * t_prime
        omega = s_alpha / meas_delta
        gain = omega * omega / (1 + omega * omega)
        alpha_hat = mean_alpha + gain * (x - mean_alpha)
        s_alpha = (omega / math.sqrt(1 + omega * omega)) * meas_delta
        theta_hat = alpha_hat / (2 * t_prime)
        theta_std = s_alpha / (2 * t_prime)
        half = CI_FACTOR * theta_std
        records.append(StepRecord(
            step=step, t=t_prime, p=0, a=0.0, x=x, theta_hat=theta_hat,
            delta=s_alpha, interval_lo=theta_hat - half,
            interval_hi=theta_hat + half,
        ))
        if theta_hat <= 0:
            # posterior wandered across zero; widen back onto the support
            theta_hat = max(theta_hat, theta_std / 2)
        handoff_width = 2 * (math.pi / (4 * theta_hat)) * theta_std
        if handoff_width <= width_cap:
            break
        t_next = min(policy.c_prime * t_prime, alpha_cap / (2 * theta_hat))
        if t_next <= t_prime * 1.01:
            break  # linear zone exhausted; hand off with a wider prior
        t_prime = t_next
    return theta_hat, theta_std, records, time_used


def draw_consistent_prior(theta_true: float, policy: ZoomPolicy, seed: int,
                          key: tuple) -> float:
    """Sample a prior mean whose implied prior is centered correctly.

    Solving theta0 = theta_true / (1 - 2 c delta z / pi) makes
    theta_true - theta0 exactly N(0, (c delta / (2 T_1))^2) with
    T_1 = pi / (4 theta0): the calibration convention of the estimator.
    """
    z = keyed_normal(seed, tuple(key), 1.0)
    denom = 1 - 2 * policy.c * policy.delta * z / math.pi
    if denom <= 0:  # astronomically unlikely under c*delta <= 0.1
        denom = 1e-3
    return theta_true / denom


def run_estimation(h0: PauliSum, h1: PauliSum, h2: PauliSum,
                   theta_true: float, policy: ZoomPolicy, noise,
                   theta0_hat: Optional[float] = None,
                   trial_index: int = 0) -> RunRecord:
    """Full adaptive run against the simulated DQC1 measurement.

    theta_true is hidden ground truth: it only enters through the circuit
    means.  The estimand is e * theta_true with e the triple's effective
    rotation rate (e = 1 for a strict su(2) triple); it must lie in (0, pi).
    If theta0_hat is omitted, a prior mean is drawn so that the estimator's
    calibration convention holds exactly.  Quadrant fixing for priors
    outside (0, pi) is a documented pre-step, not automatic.
    """
    rate = su2_effective_rate(h0, h1, h2)
    theta_eff = rate * theta_true
    if not (0 < theta_eff < math.pi):
        raise PreconditionError(
            f"effective angle must lie in (0, pi), got {theta_eff}"
        )
    eff = measurement.combined_cos_delta(h1, noise)
    if abs(eff - policy.delta) > 1e-9 * max(eff, policy.delta):
        raise PreconditionError(
            f"policy.delta = {policy.delta:g} but the triple/noise give an "
            f"effective measurement std of {eff:g}; set policy.delta to match"
        )
    if theta0_hat is None:
        theta0_hat = draw_consistent_prior(theta_eff, policy, noise.seed,
                                           (trial_index, 0, 0))

    def measure_cos(state: EstimatorState) -> tuple:
        est = measurement.estimate_cos_sin(
            h0, h1, h2, theta_true, state.t_current, noise,
            want_sin=False, key=(trial_index, state.step + 1),
        )
        return est.cos_hat, est.effective_delta

    boot_records: tuple = ()
    boot_time = 0.0
    if theta0_hat < policy.theta_floor:
        def measure_sin(step: int, t_prime: float) -> tuple:
            est = measurement.estimate_cos_sin(
                h0, h1, h2, theta_true, t_prime, noise,
                want_sin=True, key=(trial_index, policy.max_steps + step),
            )
            return est.sin_hat, est.effective_delta

        theta_std0 = (2 * policy.c * policy.delta / math.pi) * theta0_hat
        theta0_hat, theta_std, recs, boot_time = _sin_bootstrap(
            theta0_hat, theta_std0, policy, measure_sin)
        boot_records = tuple(recs)
        prior_alpha_std = 2 * (math.pi / (4 * theta0_hat)) * theta_std
        state, loop_time, converged = run_zoom_loop(
            theta0_hat, policy, measure_cos,
            prior_alpha_std=prior_alpha_std, theta_floor=0.0)
        total_time = boot_time + loop_time
    else:
        state, total_time, converged = run_zoom_loop(theta0_hat, policy, measure_cos)

    offset = len(boot_records)
    steps = boot_records + tuple(
        replace(r, step=r.step + offset) for r in state.history
    )
    lo, hi = state.interval()
    return RunRecord(
        mode="estimate-continuous",
        trial=trial_index,
        theta_true=theta_eff,
        theta_hat=state.theta_hat,
        converged=converged,
        interval_lo=lo,
        interval_hi=hi,
        total_time=total_time,
        target_precision=policy.target_precision,
        steps=steps,
        outliers=sum(1 for r in steps if r.outlier),
    )
