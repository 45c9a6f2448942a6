"""Shared builders: random Pauli objects and independent dense oracles.

The dense oracles here are built directly from numpy kron products so the
symbolic layer is checked against something it does not share code with.
"""

import numpy as np
import pytest

from dqc1m.pauli import PauliProduct, PauliSum

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_oracle(letters: str, phase: complex = 1.0) -> np.ndarray:
    """Independent Kronecker construction (qubit 0 leftmost)."""
    out = np.array([[phase]], dtype=complex)
    for ch in letters:
        out = np.kron(out, PAULI_MATS[ch])
    return out


def sum_oracle(h: PauliSum) -> np.ndarray:
    dim = 2 ** h.n
    out = np.zeros((dim, dim), dtype=complex)
    for c, p in h.terms:
        out += c * kron_oracle(p.letters(), p.phase)
    return out


def dense_commute(a: PauliProduct, b: PauliProduct) -> bool:
    ma = kron_oracle(a.letters())
    mb = kron_oracle(b.letters())
    return bool(np.max(np.abs(ma @ mb - mb @ ma)) < 1e-10)


def random_product(rng: np.random.Generator, n: int,
                   phase_free: bool = True) -> PauliProduct:
    x = int(rng.integers(0, 2 ** n))
    z = int(rng.integers(0, 2 ** n))
    phase = 0 if phase_free else int(rng.integers(0, 4))
    return PauliProduct(n, x, z, phase)


def shortcut_triple(rng: np.random.Generator, n: int, terms: int):
    """A commuting H_0 with one term anticommuting with a weight-1 probe.

    Terms are Z-type (mutually commuting); the target term gets a private
    qubit so that an X probe there clashes with it alone.  Returns
    (h0, sigma1, mu, e_mu).
    """
    assert terms < n
    private = int(rng.integers(0, n))
    masks = set()
    z_masks = []
    target = 1 << private
    other_bits = [b for b in range(n) if b != private]
    z_masks.append(target | sum(1 << b for b in other_bits
                                if rng.random() < 0.4))
    masks.add(z_masks[0])
    while len(z_masks) < terms:
        m = sum(1 << b for b in other_bits if rng.random() < 0.5)
        if m and m not in masks:
            masks.add(m)
            z_masks.append(m)
    coeffs = rng.uniform(0.3, 1.5, size=terms)
    entries = [(float(c), PauliProduct(n, 0, m, 0))
               for c, m in zip(coeffs, z_masks)]
    rng.shuffle(entries)
    h0 = PauliSum.from_terms(n, entries)
    sigma1 = PauliProduct(n, target, 0, 0)
    mu = next(i for i, (_, p) in enumerate(h0.terms)
              if not p.commutes_with(sigma1))
    return h0, sigma1, mu, h0.terms[mu][0]


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
