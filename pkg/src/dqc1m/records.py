"""Run records: the full trace of one estimation, scalars only."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class StepRecord:
    """One measurement step of an adaptive estimation."""

    step: int
    t: float                 # evolution time T_l (continuous) or q_l (discrete)
    p: int                   # winding number
    a: float                 # zoom ratio T_l / T_{l-1} (1.0 on the first step)
    x: float                 # measurement outcome
    theta_hat: float
    delta: float             # scaled deviation Delta_l (or Sigma_l)
    interval_lo: float
    interval_hi: float
    q: Optional[int] = None            # black-box power q_l
    phi: Optional[float] = None        # phase compensation phi_l
    n_calls: Optional[int] = None      # cumulative black-box calls
    q_slices: Optional[int] = None     # Trotter slices used at this step
    delta_gamma: Optional[float] = None
    gamma: Optional[float] = None      # measured Trotter bias (simulation only)
    outlier: bool = False


@dataclass
class RunRecord:
    """Everything one estimation run produced, ready for CSV."""

    mode: str
    trial: int
    theta_true: float
    theta_hat: float
    converged: bool
    interval_lo: float
    interval_hi: float
    total_time: float
    target_precision: float
    steps: tuple = ()
    n_calls: Optional[int] = None
    exchanges_used: Optional[int] = None
    total_slices: Optional[int] = None
    nu: Optional[int] = None
    outliers: int = 0

    @property
    def covered(self) -> bool:
        return self.interval_lo <= self.theta_true <= self.interval_hi

    @property
    def resource(self) -> float:
        """The mode's headline resource: calls/exchanges if counted, else time."""
        if self.exchanges_used is not None:
            return float(self.exchanges_used)
        if self.n_calls is not None:
            return float(self.n_calls)
        return self.total_time
