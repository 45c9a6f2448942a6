"""DQC1 (one-clean-qubit) parameter estimation at the quantum metrology limit."""

from .pauli import (
    PauliProduct,
    PauliSum,
    check_su2_triple,
    commutes,
    anticommutes,
    conjugate_by_rotation,
    decouple_hamiltonian,
    find_su2_partner,
    multiply,
)
from .dense import (
    TraceResult,
    dqc1_mean,
    evolve,
    heisenberg_trace,
    spectral_norm,
    to_matrix,
    trotter_error,
    trotter_evolution,
    trotter_step,
)
from .measurement import CosSinEstimate, NoiseModel, estimate_cos_sin, sample_trace_estimate
from .records import RunRecord, StepRecord
from .bayes import EstimatorState, ZoomPolicy, init_schedule, next_zoom, posterior_update, run_estimation
from .blackbox import BlackBoxPolicy, DiscreteState, discrete_update, init_discrete, run_discrete
from .multiparam import MultiHamiltonian, TrotterPlan, estimate_all, select_decoupler, trotterized_measurement_mean
from .frames import FrameMisalignment, ExchangeBudget, align, elementary_step, euler_step
from .search import SearchInstance, detection_resources, signal_separation

__version__ = "0.1.0"
