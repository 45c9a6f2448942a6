"""DQC1 ancilla-signal separation for the rank-1 phase search oracle.

Q calls to U_B = exp(i theta |S><S|) interleaved with arbitrary unitaries
move the ancilla z-expectation away from the U_B = 1 arm by at most
4Q / 2^(n+1), so detecting a marked state costs exponentially many calls:
no Grover speed-up exists inside DQC1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import PreconditionError, ResourceLimitError
from .streams import substream

MAX_SEARCH_QUBITS = 10  # probe size; the dense simulation adds one ancilla


@dataclass(frozen=True)
class SearchInstance:
    """One oracle-discrimination instance.

    interleave holds the Q+1 unitaries W_0..W_Q on the full ancilla+probe
    register; U_B acts on the probe only and is never controlled.
    """

    n: int
    s_index: int
    theta: float
    q_calls: int
    interleave: tuple  # tuple of (2^(n+1), 2^(n+1)) arrays

    def __post_init__(self):
        if self.n > MAX_SEARCH_QUBITS:
            raise ResourceLimitError(
                f"probe size {self.n} exceeds the dense cap {MAX_SEARCH_QUBITS}"
            )
        if not (0 <= self.s_index < 2 ** self.n):
            raise PreconditionError(f"marked index {self.s_index} out of range")
        if self.theta == 0:
            raise PreconditionError("oracle phase must be nonzero")
        if self.q_calls < 1:
            raise PreconditionError("need at least one oracle call")
        if len(self.interleave) != self.q_calls + 1:
            raise PreconditionError(
                f"need Q+1 = {self.q_calls + 1} interleaved unitaries, "
                f"got {len(self.interleave)}"
            )

    @classmethod
    def identity_chain(cls, n: int, s_index: int, theta: float, q_calls: int):
        dim = 2 ** (n + 1)
        eye = np.eye(dim, dtype=complex)
        return cls(n, s_index, theta, q_calls, tuple([eye] * (q_calls + 1)))

    @classmethod
    def random_chain(cls, n: int, s_index: int, theta: float, q_calls: int,
                     seed: int = 0):
        """Haar-random (seeded) interleaving unitaries to stress the bound."""
        rng = substream(seed, n, q_calls)
        ws = tuple(haar_unitary(2 ** (n + 1), rng) for _ in range(q_calls + 1))
        return cls(n, s_index, theta, q_calls, ws)

    @classmethod
    def saturating_chain(cls, n: int, s_index: int, theta: float, q_calls: int):
        """Interleave that nearly saturates the 4Q/2^(n+1) ceiling.

        Each oracle call is conjugated by an ancilla-controlled transposition
        that swaps a fresh unmarked basis state with |S>, so every call
        phases one new coherent branch; a Hadamard on the ancilla opens and
        closes the chain.  Requires q_calls <= 2^n - 1 distinct branches.
        """
        dim_p = 2 ** n
        if q_calls > dim_p - 1:
            raise PreconditionError(
                f"saturating chain supports at most 2^n - 1 = {dim_p - 1} calls"
            )
        dim = 2 * dim_p
        hadamard = np.kron(np.array([[1, 1], [1, -1]]) / math.sqrt(2),
                           np.eye(dim_p)).astype(complex)

        def ctrl_swap(k: int) -> np.ndarray:
            m = np.eye(dim, dtype=complex)
            a, b = dim_p + k, dim_p + s_index  # ancilla-|1> block
            m[[a, b]] = m[[b, a]]
            return m

        branches = [k for k in range(dim_p) if k != s_index][:q_calls]
        ws = [ctrl_swap(branches[0]) @ hadamard]
        for prev, nxt in zip(branches, branches[1:]):
            ws.append(ctrl_swap(nxt) @ ctrl_swap(prev))
        ws.append(hadamard @ ctrl_swap(branches[-1]))
        return cls(n, s_index, theta, q_calls, tuple(ws))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _final_block(inst: SearchInstance, oracle_on: bool) -> np.ndarray:
    """Propagate B with rho_0 = B B^dagger / 2^n, B = |0>_a tensor 1_n."""
    dim = 2 ** (inst.n + 1)
    half = dim // 2
    b = np.zeros((dim, half), dtype=complex)
    b[:half, :] = np.eye(half)
    phases = np.ones(dim, dtype=complex)
    if oracle_on:
        phase = np.exp(1j * inst.theta)
        phases[inst.s_index] = phase          # ancilla |0> branch
        phases[half + inst.s_index] = phase   # ancilla |1> branch
    b = inst.interleave[0] @ b
    for w in inst.interleave[1:]:
        b = phases[:, None] * b
        b = w @ b
    return b


def ancilla_z_mean(inst: SearchInstance, oracle_on: bool) -> float:
    """<sigma_z^a> of the final state for one arm."""
    b = _final_block(inst, oracle_on)
    half = b.shape[0] // 2
    probs = np.abs(b) ** 2
    return float((probs[:half].sum() - probs[half:].sum()) / half)


def signal_separation(inst: SearchInstance) -> float:
    """|<sigma_z^a>_(U_B=1) - <sigma_z^a>_(U_B=phase oracle)|, computed exactly."""
    return abs(ancilla_z_mean(inst, False) - ancilla_z_mean(inst, True))


def separation_bound(inst: SearchInstance) -> float:
    """The interleave-independent ceiling 4Q / 2^(n+1)."""
    return 4 * inst.q_calls / 2 ** (inst.n + 1)


def detection_resources(inst: SearchInstance, noise) -> tuple:
    """(J_needed, N_total): repetitions to resolve the separation, and the
    implied total oracle-call count J * Q."""
    sep = signal_separation(inst)
    if sep == 0:
        raise PreconditionError(
            "zero signal separation: this interleave cannot detect the oracle"
        )
    j = max(1, math.floor((noise.effective_delta / sep) ** 2) + 1)
    while noise.effective_delta / math.sqrt(j) >= sep:
        j += 1
    return j, j * inst.q_calls
