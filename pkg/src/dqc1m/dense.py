"""Dense-matrix ground truth for probes up to 12 qubits.

Everything the symbolic layer claims is checkable here: Kronecker
realizations of Pauli sums, Hermitian evolution by eigendecomposition,
Heisenberg-picture traces, DQC1 circuit means, Suzuki-Trotter product
approximants and their spectral-norm error.  All functions are pure;
eigensystems and product matrices are cached on the immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, PreconditionError, ResourceLimitError
from .pauli import PauliProduct, PauliSum, decouple_hamiltonian

MAX_QUBITS = 12  # dim 4096; one dense complex matrix ~268 MB transient

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

DenseOperator = np.ndarray


@dataclass(frozen=True)
class TraceResult:
    """A complex trace and its 2^-n normalization."""

    value: complex
    normalized: complex


def _check_cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise ResourceLimitError(
            f"{n} qubits exceeds the dense cap of {MAX_QUBITS}"
        )


@lru_cache(maxsize=512)
def _product_matrix(prod: PauliProduct) -> np.ndarray:
    out = np.array([[prod.phase]], dtype=complex)
    for k in range(prod.n):
        out = np.kron(out, PAULI_1Q[prod.letter(k)])
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def _sum_matrix(h: PauliSum) -> np.ndarray:
    dim = 2 ** h.n
    out = np.zeros((dim, dim), dtype=complex)
    for c, p in h.terms:
        out += c * _product_matrix(p)
    out.flags.writeable = False
    return out


def to_matrix(op: Union[PauliProduct, PauliSum]) -> DenseOperator:
    """Exact Kronecker-product realization (read-only array)."""
    _check_cap(op.n)
    if isinstance(op, PauliProduct):
        return _product_matrix(op)
    if isinstance(op, PauliSum):
        return _sum_matrix(op)
    raise TypeError(f"expected PauliProduct or PauliSum, got {type(op).__name__}")


@lru_cache(maxsize=32)
def _eigensystem(h: PauliSum):
    w, v = np.linalg.eigh(_sum_matrix(h))
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def evolve(h: PauliSum, theta_t: float) -> DenseOperator:
    """exp(-i * theta_t * H) for Hermitian H given as a Pauli sum.

    Single-product sums use the involution closed form
    cos(a) 1 - i sin(a) P; everything else goes through a cached
    eigendecomposition, which keeps the result unitary to ~1e-14.
    """
    _check_cap(h.n)
    if not math.isfinite(theta_t):
        raise PreconditionError(f"evolution angle must be finite, got {theta_t}")
    if h.term_count == 1:
        c, p = h.terms[0]
        a = theta_t * c
        dim = 2 ** h.n
        return math.cos(a) * np.eye(dim, dtype=complex) - 1j * math.sin(a) * _product_matrix(p)
    w, v = _eigensystem(h)
    phases = np.exp(-1j * theta_t * w)
    return (v * phases) @ v.conj().T


def _require_square_same(*mats: np.ndarray) -> int:
    dims = set()
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected square matrix, got shape {m.shape}")
        dims.add(m.shape[0])
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed matrix dimensions {sorted(dims)}")
    return dims.pop()


def heisenberg_trace(w: DenseOperator, a: DenseOperator, b: DenseOperator) -> TraceResult:
    """tr[W† A W B] and its 2^-n normalization."""
    dim = _require_square_same(w, a, b)
    value = complex(np.trace(w.conj().T @ a @ w @ b))
    return TraceResult(value=value, normalized=value / dim)


def unitarity_defect(u: np.ndarray) -> float:
    """max |U†U - 1| entrywise."""
    dim = _require_square_same(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(dim))))


def dqc1_mean(u: DenseOperator, atol: float = 1e-8) -> tuple:
    """Exact DQC1 ancilla expectations (<sigma_x>, <sigma_y>) = Re, Im of tr[U]/2^n."""
    dim = _require_square_same(u)
    defect = unitarity_defect(u)
    if defect > atol:
        raise PreconditionError(f"operator is not unitary (defect {defect:.3e})")
    t = complex(np.trace(u)) / dim
    return t.real, t.imag


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(m, 2))


def trotter_step(h: PauliSum, sigma: PauliProduct, eps_t: float,
                 order: int) -> DenseOperator:
    """One product-formula slice approximating the decoupled evolution.

    order 2:  E(t/2) S E(t/2) S          with E(t) = exp(-i H t), S the
    order 3:  E(t/4) S E(t/2) S E(t/4)   decoupling Pauli gate
    """
    if eps_t <= 0:
        raise PreconditionError(f"slice time must be positive, got {eps_t}")
    if order not in (2, 3):
        raise PreconditionError(f"unsupported product-formula order {order}")
    s = to_matrix(sigma)
    if order == 2:
        half = evolve(h, eps_t / 2)
        return half @ s @ half @ s
    quarter = evolve(h, eps_t / 4)
    half = evolve(h, eps_t / 2)
    return quarter @ s @ half @ s @ quarter


def trotter_evolution(h: PauliSum, sigma: PauliProduct, total_t: float,
                      q: int, order: int) -> DenseOperator:
    """q-fold composition of trotter_step slices over total time total_t."""
    if q < 1:
        raise PreconditionError(f"slice count must be >= 1, got {q}")
    step = trotter_step(h, sigma, total_t / q, order)
    return np.linalg.matrix_power(step, q)


def trotter_error(h: PauliSum, sigma: PauliProduct, total_t: float,
                  q: int, order: int) -> float:
    """Spectral-norm distance between the exact decoupled evolution and
    the q-slice product approximant."""
    exact = evolve(decouple_hamiltonian(h, sigma), total_t)
    approx = trotter_evolution(h, sigma, total_t, q, order)
    return spectral_norm(exact - approx)


# -- circuit-level simulation ------------------------------------------------
#
# The estimators only need normalized traces, but the probe-mixedness and
# gate-structure claims are about the actual (n+1)-qubit circuit, so a small
# density-matrix simulation of the ancilla + probe register is kept here.


@dataclass(frozen=True)
class CircuitGate:
    """A probe gate in a DQC1 circuit; ancilla-controlled or not."""

    unitary: np.ndarray
    controlled: bool = False
    pauli: bool = False
    label: str = ""


def dqc1_final_state(gates: Sequence[CircuitGate], n: int) -> np.ndarray:
    """Density matrix after H on the ancilla and the given probe gates.

    Initial state |0><0|_a ⊗ 1_n / 2^n, ancilla is the leading qubit.
    """
    _check_cap(n + 1)
    dim = 2 ** n
    rho = np.zeros((2 * dim, 2 * dim), dtype=complex)
    # After the Hadamard: |+><+| ⊗ 1/2^n.
    blk = np.eye(dim, dtype=complex) / (2 * dim)
    rho[:dim, :dim] = blk
    rho[:dim, dim:] = blk
    rho[dim:, :dim] = blk
    rho[dim:, dim:] = blk
    eye2 = np.eye(2, dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    for g in gates:
        if g.unitary.shape != (dim, dim):
            raise DimensionMismatchError(
                f"gate {g.label or '?'} has shape {g.unitary.shape}, expected {(dim, dim)}"
            )
        if g.controlled:
            full = np.kron(p0, np.eye(dim, dtype=complex)) + np.kron(p1, g.unitary)
        else:
            full = np.kron(eye2, g.unitary)
        rho = full @ rho @ full.conj().T
    return rho


def ancilla_expectations(rho: np.ndarray) -> tuple:
    """(<sigma_x>, <sigma_y>, <sigma_z>) of the leading (ancilla) qubit."""
    dim = rho.shape[0] // 2
    off = np.trace(rho[:dim, dim:])  # <0|rho|1> block trace
    sz = np.trace(rho[:dim, :dim]) - np.trace(rho[dim:, dim:])
    return float(2 * off.real), float(-2 * off.imag), float(sz.real)


def probe_reduced(rho: np.ndarray) -> np.ndarray:
    """Partial trace over the ancilla."""
    dim = rho.shape[0] // 2
    return rho[:dim, :dim] + rho[dim:, dim:]
