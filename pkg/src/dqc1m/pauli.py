"""Exact symbolic algebra of Pauli products and real Pauli sums.

Products are stored in the symplectic bitmask encoding: an x-mask, a z-mask
(bit k = qubit k) and a power-of-i phase.  Multiplication, commutation and
conjugation are bitwise and exact; no matrices are involved.  Sums keep
phase-free products with real coefficients in a canonical (z, x)-sorted
order, which makes equality, hashing and caching reliable.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Iterable

from .errors import DimensionMismatchError, PreconditionError

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_MASKS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASES = {0: 1, 1: 1j, 2: -1, 3: -1j}
_PHASE_PREFIXES = {"": 0, "+": 0, "-": 2, "i": 1, "+i": 1, "-i": 3}


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class PauliProduct:
    """An n-qubit tensor product of {I, X, Y, Z} with a phase in {±1, ±i}.

    The operator value is ``i**phase_exponent`` times the plain tensor of the
    letters encoded by (x_mask, z_mask); bit k of each mask belongs to
    qubit k, and string serializations put qubit 0 leftmost.
    """

    n: int
    x_mask: int
    z_mask: int
    phase_exponent: int = 0

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits outside the qubit range")
        if self.phase_exponent not in (0, 1, 2, 3):
            raise ValueError(f"phase exponent must be in 0..3, got {self.phase_exponent}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_string(cls, text: str) -> "PauliProduct":
        """Parse e.g. ``"ZZI"``, ``"-XY"`` or ``"-iZX"`` (qubit 0 leftmost)."""
        s = text.strip()
        prefix = ""
        for cand in ("-i", "+i", "i", "-", "+"):
            if s.startswith(cand) and len(s) > len(cand):
                prefix, s = cand, s[len(cand):]
                break
        if not s or any(ch not in _MASKS for ch in s):
            raise ValueError(f"invalid Pauli string {text!r}")
        x = z = 0
        for k, ch in enumerate(s):
            xb, zb = _MASKS[ch]
            x |= xb << k
            z |= zb << k
        return cls(len(s), x, z, _PHASE_PREFIXES[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliProduct":
        return cls(n, 0, 0, 0)

    # -- basic structure ---------------------------------------------------

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exponent]

    @property
    def is_phase_free(self) -> bool:
        return self.phase_exponent == 0

    @property
    def is_identity(self) -> bool:
        """True for the identity letters, regardless of phase."""
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return _popcount(self.x_mask | self.z_mask)

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)]

    def letters(self) -> str:
        return "".join(self.letter(k) for k in range(self.n))

    def to_string(self) -> str:
        prefix = {0: "", 1: "i", 2: "-", 3: "-i"}[self.phase_exponent]
        return prefix + self.letters()

    def __str__(self) -> str:
        return self.to_string()

    def without_phase(self) -> "PauliProduct":
        return PauliProduct(self.n, self.x_mask, self.z_mask, 0)

    # -- algebra -----------------------------------------------------------

    def _xz_exponent(self) -> int:
        # exponent e in the normal form i**e X^x Z^z (Y = i X Z per qubit)
        return (self.phase_exponent + _popcount(self.x_mask & self.z_mask)) % 4

    def __mul__(self, other: "PauliProduct") -> "PauliProduct":
        if not isinstance(other, PauliProduct):
            return NotImplemented
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot multiply products on {self.n} and {other.n} qubits"
            )
        e = self._xz_exponent() + other._xz_exponent()
        e += 2 * _popcount(self.z_mask & other.x_mask)  # Z past X swap
        x = self.x_mask ^ other.x_mask
        z = self.z_mask ^ other.z_mask
        phase_exp = (e - _popcount(x & z)) % 4
        return PauliProduct(self.n, x, z, phase_exp)

    def scaled_by_i(self, power: int) -> "PauliProduct":
        """The same letters with phase multiplied by i**power."""
        return PauliProduct(self.n, self.x_mask, self.z_mask,
                            (self.phase_exponent + power) % 4)

    def commutes_with(self, other: "PauliProduct") -> bool:
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot compare products on {self.n} and {other.n} qubits"
            )
        overlap = _popcount(self.x_mask & other.z_mask)
        overlap += _popcount(self.z_mask & other.x_mask)
        return overlap % 2 == 0

    def trace(self) -> complex:
        """Exact trace: phase * 2^n for identity letters, else 0."""
        if self.is_identity:
            return self.phase * (2 ** self.n)
        return 0j


def multiply(a: PauliProduct, b: PauliProduct) -> PauliProduct:
    """Exact operator product a·b with accumulated phase."""
    return a * b


def commutes(a: PauliProduct, b: PauliProduct) -> bool:
    """True iff [a, b] = 0.

    Phase factors never affect commutation, so both operands must be
    phase-free only to keep the predicate aligned with its use on
    Hamiltonian terms.
    """
    if not (a.is_phase_free and b.is_phase_free):
        raise PreconditionError("commutes() expects phase-free products")
    return a.commutes_with(b)


def anticommutes(a: PauliProduct, b: PauliProduct) -> bool:
    return not commutes(a, b)


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of distinct phase-free Pauli products.

    Hermitian by construction.  Terms are kept sorted by (z_mask, x_mask)
    so equal operators always compare and hash equal.
    """

    n: int
    terms: tuple  # tuple[(float, PauliProduct), ...]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable) -> "PauliSum":
        """Build from (coefficient, product) pairs.

        Phases ±1 fold into the coefficient; a residual ±i phase would make
        the sum non-Hermitian and is rejected.  Duplicate products merge.
        """
        acc: dict = {}
        for coeff, prod in terms:
            if prod.n != n:
                raise DimensionMismatchError(
                    f"term on {prod.n} qubits in a {n}-qubit sum"
                )
            c = float(coeff)
            if prod.phase_exponent == 2:
                c, prod = -c, prod.without_phase()
            elif prod.phase_exponent in (1, 3):
                raise PreconditionError(
                    f"imaginary phase on term {prod}; sum would not be Hermitian"
                )
            key = (prod.z_mask, prod.x_mask)
            acc[key] = acc.get(key, 0.0) + c
        kept = tuple(
            (c, PauliProduct(n, x, z, 0))
            for (z, x), c in sorted(acc.items())
            if c != 0.0
        )
        return cls(n, kept)

    @classmethod
    def from_strings(cls, n: int, entries: Iterable) -> "PauliSum":
        """Build from (coefficient, "LETTERS") pairs."""
        return cls.from_terms(
            n, ((c, PauliProduct.from_string(s)) for c, s in entries)
        )

    @classmethod
    def from_product(cls, prod: PauliProduct, coeff: float = 1.0) -> "PauliSum":
        return cls.from_terms(prod.n, [(coeff, prod)])

    @property
    def term_count(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> tuple:
        return tuple(c for c, _ in self.terms)

    @property
    def products(self) -> tuple:
        return tuple(p for _, p in self.terms)

    @property
    def schmidt_norm(self) -> float:
        """d = tr[H^2] = 2^n * sum of squared coefficients."""
        return (2 ** self.n) * sum(c * c for c, _ in self.terms)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum.from_terms(self.n, ((factor * c, p) for c, p in self.terms))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c:g}*{p.letters()}" for c, p in self.terms)

    def allclose(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        mine = {(p.z_mask, p.x_mask): c for c, p in self.terms}
        theirs = {(p.z_mask, p.x_mask): c for c, p in other.terms}
        for key in mine.keys() | theirs.keys():
            if abs(mine.get(key, 0.0) - theirs.get(key, 0.0)) > tol:
                return False
        return True


def _require_same_n(*ops) -> int:
    ns = {op.n for op in ops}
    if len(ns) != 1:
        raise DimensionMismatchError(f"mixed qubit counts {sorted(ns)}")
    return ns.pop()


def _commutator_coeffs(a: PauliSum, b: PauliSum) -> dict:
    """[A, B] as {(z, x): complex coefficient} over phase-free products."""
    out: dict = {}
    for ca, pa in a.terms:
        for cb, pb in b.terms:
            if pa.commutes_with(pb):
                continue
            prod = pa * pb  # [pa, pb] = 2 pa pb when they anticommute
            key = (prod.z_mask, prod.x_mask)
            out[key] = out.get(key, 0j) + 2.0 * ca * cb * _PHASES[prod.phase_exponent]
    return {k: v for k, v in out.items() if v != 0}


def check_su2_triple(h0: PauliSum, h1: PauliSum, h2: PauliSum,
                     tol: float = 1e-12) -> bool:
    """True iff [H_j, H_k] = 2i e_jkl H_l holds for all three cyclic pairs."""
    _require_same_n(h0, h1, h2)
    triple = (h0, h1, h2)
    for j in range(3):
        a, b, target = triple[j], triple[(j + 1) % 3], triple[(j + 2) % 3]
        comm = _commutator_coeffs(a, b)
        want = {(p.z_mask, p.x_mask): 2j * c for c, p in target.terms}
        for key in comm.keys() | want.keys():
            if abs(comm.get(key, 0j) - want.get(key, 0j)) > tol:
                return False
    return True


def su2_effective_rate(h0: PauliSum, h1: PauliSum, h2: PauliSum,
                       tol: float = 1e-12) -> float:
    """Rotation rate e with W†(T) H_1 W(T) = cos(2 e theta T) H_1 - sin(...) H_2
    under W = exp(-i theta H_0 T).

    Validated decomposition: H_0 = e G + R where [H_1, H_2] = 2i G,
    (G, H_1, H_2) closes su(2), and the spectator part R commutes with both
    H_1 and H_2.  The strict su(2) triple is the case e = 1, R = 0; the
    commuting-terms shortcut construction gives e = the anticommuting
    term's coefficient.
    """
    n = _require_same_n(h0, h1, h2)
    comm = _commutator_coeffs(h1, h2)
    g_terms = []
    for (z, x), v in comm.items():
        c = v / 2j
        if abs(c.imag) > tol:
            raise PreconditionError("[H_1, H_2]/2i is not Hermitian")
        g_terms.append((c.real, PauliProduct(n, x, z, 0)))
    g = PauliSum.from_terms(n, g_terms)
    if not g.terms:
        raise PreconditionError("H_1 and H_2 commute; no rotation generator")
    if not check_su2_triple(g, h1, h2, tol=max(tol, 1e-10)):
        raise PreconditionError("(G, H_1, H_2) does not close an su(2) algebra")
    g_coeffs = {(p.z_mask, p.x_mask): c for c, p in g.terms}
    h0_coeffs = {(p.z_mask, p.x_mask): c for c, p in h0.terms}
    if not h0_coeffs:
        raise PreconditionError("H_0 is the zero operator")
    rates = [h0_coeffs.get(k, 0.0) / c for k, c in g_coeffs.items()]
    scale = max(abs(c) for c in h0_coeffs.values())
    if max(rates) - min(rates) > tol * max(1.0, scale):
        raise PreconditionError(
            "H_0 is not proportional to the rotation generator on its support"
        )
    rate = sum(rates) / len(rates)
    if rate == 0.0:
        raise PreconditionError("H_0 does not act on the probe pair (rate 0)")
    rest = PauliSum.from_terms(
        n,
        list(h0.terms) + [(-rate * c, p) for c, p in g.terms],
    )
    for other in (h1, h2):
        residue = _commutator_coeffs(rest, other)
        if residue and max(abs(v) for v in residue.values()) > tol * max(1.0, scale):
            raise PreconditionError(
                "spectator part of H_0 fails to commute with the probe pair"
            )
    return rate


def find_su2_partner(h0: PauliSum, sigma1: PauliProduct):
    """Locate the one term of H_0 that anticommutes with sigma1 and return
    (its index, the third algebra member -i * term * sigma1).

    Requires all terms of H_0 to commute pairwise, and exactly one of them
    to anticommute with sigma1; the returned product then closes an su(2)
    triple with that term and sigma1.  The result carries a real sign
    (phase +1 or -1), never an imaginary phase.
    """
    _require_same_n(h0, PauliSum.from_product(sigma1))
    if not sigma1.is_phase_free:
        raise PreconditionError("sigma1 must be phase-free")
    products = h0.products
    clashes = [
        (i, j)
        for i in range(len(products))
        for j in range(i + 1, len(products))
        if not products[i].commutes_with(products[j])
    ]
    if clashes:
        pairs = ", ".join(f"({products[i].letters()}, {products[j].letters()})"
                          for i, j in clashes)
        raise PreconditionError(f"H_0 terms do not mutually commute: {pairs}")
    anti = [i for i, p in enumerate(products) if not p.commutes_with(sigma1)]
    if len(anti) != 1:
        names = ", ".join(products[i].letters() for i in anti) or "none"
        raise PreconditionError(
            f"need exactly one H_0 term anticommuting with {sigma1.letters()}, "
            f"found {len(anti)}: {names}"
        )
    mu = anti[0]
    sigma2 = (products[mu] * sigma1).scaled_by_i(3)  # -i * product
    if sigma2.phase_exponent not in (0, 2):
        raise AssertionError("partner construction produced an imaginary phase")
    return mu, sigma2


def decouple_hamiltonian(h: PauliSum, sigma: PauliProduct) -> PauliSum:
    """(H + sigma H sigma) / 2: keeps terms commuting with sigma, drops the rest."""
    _require_same_n(h, PauliSum.from_product(sigma))
    if not sigma.is_phase_free:
        raise PreconditionError("decoupler must be phase-free")
    return PauliSum.from_terms(
        h.n, ((c, p) for c, p in h.terms if p.commutes_with(sigma))
    )


def conjugate_by_rotation(h: PauliSum, axis: PauliProduct, alpha: float) -> PauliSum:
    """exp(-i alpha P) H exp(i alpha P) computed symbolically.

    Terms commuting with the phase-free product P are fixed; an
    anticommuting term sigma maps to cos(2a) sigma + i sin(2a) sigma P,
    which stays Hermitian with real coefficients.  Handy for building
    multi-term su(2) triples out of single-product ones.
    """
    _require_same_n(h, PauliSum.from_product(axis))
    if not axis.is_phase_free:
        raise PreconditionError("rotation axis must be phase-free")
    out = []
    c2, s2 = math.cos(2 * alpha), math.sin(2 * alpha)
    for c, p in h.terms:
        if p.commutes_with(axis):
            out.append((c, p))
        else:
            rotated = (p * axis).scaled_by_i(1)  # i * sigma * P, phase ±1
            out.append((c * c2, p))
            out.append((c * s2, rotated))
    return PauliSum.from_terms(h.n, out)
