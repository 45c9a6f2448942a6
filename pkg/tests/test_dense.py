"""Dense oracle checks: realizations, evolution, traces, product formulas."""

import math

import numpy as np
import pytest

from dqc1m import dense
from dqc1m.errors import DimensionMismatchError, PreconditionError, ResourceLimitError
from dqc1m.pauli import PauliProduct, PauliSum, decouple_hamiltonian

from conftest import kron_oracle, random_product, sum_oracle

P = PauliProduct.from_string


class TestToMatrix:
    def test_sigma_z(self):
        np.testing.assert_allclose(dense.to_matrix(P("Z")), np.diag([1, -1]))

    def test_identity_3q(self):
        np.testing.assert_allclose(
            dense.to_matrix(PauliProduct.identity(3)), np.eye(8))

    def test_sum_against_hand_kron(self):
        h = PauliSum.from_strings(2, [(0.5, "ZZ"), (0.5, "XX")])
        want = 0.5 * np.kron(kron_oracle("Z"), kron_oracle("Z")) \
            + 0.5 * np.kron(kron_oracle("X"), kron_oracle("X"))
        np.testing.assert_allclose(dense.to_matrix(h), want, atol=1e-15)

    def test_random_products(self, rng):
        for _ in range(25):
            p = random_product(rng, 3, phase_free=False)
            np.testing.assert_allclose(
                dense.to_matrix(p), kron_oracle(p.letters(), p.phase), atol=1e-15)

    def test_qubit_cap(self):
        with pytest.raises(ResourceLimitError):
            dense.to_matrix(PauliProduct.identity(13))


class TestEvolve:
    def test_diagonal_exponential(self):
        h = PauliSum.from_strings(1, [(1.0, "Z")])
        got = dense.evolve(h, math.pi / 2)
        np.testing.assert_allclose(
            got, np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]),
            atol=1e-12)

    def test_zero_angle_identity(self):
        h = PauliSum.from_strings(2, [(0.4, "ZX"), (0.6, "YY")])
        np.testing.assert_allclose(dense.evolve(h, 0.0), np.eye(4), atol=1e-12)

    def test_involution_fast_path_vs_eigh(self, rng):
        # single products: closed form against an explicit eigendecomposition
        for _ in range(20):
            p = random_product(rng, 3)
            if p.is_identity:
                continue
            a = float(rng.uniform(-2, 2))
            h = PauliSum.from_product(p, coeff=1.0)
            got = dense.evolve(h, a)
            w, v = np.linalg.eigh(sum_oracle(h))
            want = (v * np.exp(-1j * a * w)) @ v.conj().T
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_group_property(self, rng):
        h = PauliSum.from_strings(2, [(0.3, "ZI"), (0.7, "XX"), (0.2, "YZ")])
        for _ in range(10):
            a, b = rng.uniform(-3, 3, size=2)
            left = dense.evolve(h, float(a)) @ dense.evolve(h, float(b))
            np.testing.assert_allclose(
                left, dense.evolve(h, float(a + b)), atol=1e-9)

    def test_unitary(self):
        h = PauliSum.from_strings(3, [(0.5, "ZXI"), (0.25, "IYZ"), (1.0, "XXX")])
        u = dense.evolve(h, 1.7)
        assert dense.unitarity_defect(u) < 1e-10

    def test_nonfinite_angle_rejected(self):
        h = PauliSum.from_strings(1, [(1.0, "Z")])
        with pytest.raises(PreconditionError):
            dense.evolve(h, float("nan"))


class TestHeisenbergTrace:
    def test_identity_evolution(self, rng):
        p = random_product(rng, 2)
        m = dense.to_matrix(p)
        got = dense.heisenberg_trace(np.eye(4, dtype=complex), m, m)
        assert got.normalized == pytest.approx(1.0)

    def test_cos_closed_form(self):
        h0 = PauliSum.from_strings(2, [(1.0, "ZI"), (1.0, "IZ")])
        w = dense.evolve(h0, 0.3)
        m1 = dense.to_matrix(P("XI"))
        got = dense.heisenberg_trace(w, m1, m1).normalized
        assert got == pytest.approx(math.cos(0.6), abs=1e-12)

    def test_sin_closed_form(self):
        h0 = PauliSum.from_strings(2, [(1.0, "ZI"), (1.0, "IZ")])
        w = dense.evolve(h0, 0.3)
        got = dense.heisenberg_trace(
            w, dense.to_matrix(P("XI")), dense.to_matrix(P("YI"))).normalized
        assert got == pytest.approx(-math.sin(0.6), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dense.heisenberg_trace(np.eye(4), np.eye(2), np.eye(4))


class TestDqc1Mean:
    def test_identity(self):
        assert dense.dqc1_mean(np.eye(8, dtype=complex)) == (1.0, 0.0)

    def test_intro_signal(self):
        # <sigma_x> = cos(theta T)^n for the collective-field evolution
        for n in (2, 4):
            h = PauliSum.from_strings(n, [(0.3, "I" * k + "Z" + "I" * (n - k - 1))
                                          for k in range(n)])
            mx, my = dense.dqc1_mean(dense.evolve(h, 1.0))
            assert mx == pytest.approx(math.cos(0.3) ** n, abs=1e-12)
            assert my == pytest.approx(0.0, abs=1e-12)

    def test_heisenberg_setup(self):
        h0 = PauliSum.from_strings(2, [(1.0, "ZI"), (1.0, "IZ")])
        w = dense.evolve(h0, 0.3)
        m1 = dense.to_matrix(P("XI"))
        u = w.conj().T @ m1 @ w @ m1
        mx, my = dense.dqc1_mean(u)
        assert mx == pytest.approx(math.cos(0.6), abs=1e-10)
        assert my == pytest.approx(0.0, abs=1e-10)

    def test_nonunitary_rejected(self):
        with pytest.raises(PreconditionError):
            dense.dqc1_mean(np.diag([1.0, 0.5]).astype(complex))

    def test_magnitude_bounded(self, rng):
        for _ in range(20):
            h = PauliSum.from_terms(
                2, [(float(rng.uniform(-1, 1)), random_product(rng, 2))
                    for _ in range(3)])
            mx, my = dense.dqc1_mean(dense.evolve(h, float(rng.uniform(0, 5))))
            assert math.hypot(mx, my) <= 1 + 1e-9


NONCOMMUTING = PauliSum.from_strings(2, [(0.3, "ZI"), (0.7, "XI"), (0.4, "IZ")])
DECOUPLER = P("ZI")


class TestTrotter:
    def test_commuting_case_exact(self):
        h = PauliSum.from_strings(2, [(0.3, "ZI"), (0.7, "XX")])
        sigma = P("ZZ")  # commutes with every term
        step = dense.trotter_step(h, sigma, 0.37, order=2)
        np.testing.assert_allclose(step, dense.evolve(h, 0.37), atol=1e-12)

    @pytest.mark.parametrize("order,ratio", [(2, 4.0), (3, 8.0)])
    def test_slice_order_on_halving(self, order, ratio):
        exact = lambda t: dense.evolve(
            decouple_hamiltonian(NONCOMMUTING, DECOUPLER), t)
        e1 = dense.spectral_norm(
            dense.trotter_step(NONCOMMUTING, DECOUPLER, 0.05, order) - exact(0.05))
        e2 = dense.spectral_norm(
            dense.trotter_step(NONCOMMUTING, DECOUPLER, 0.025, order) - exact(0.025))
        assert e1 / e2 == pytest.approx(ratio, rel=0.25)

    def test_unsupported_order(self):
        with pytest.raises(PreconditionError):
            dense.trotter_step(NONCOMMUTING, DECOUPLER, 0.1, order=4)

    def test_error_vanishes_monotonically(self):
        errors = [dense.trotter_error(NONCOMMUTING, DECOUPLER, 1.0, q, 2)
                  for q in (4, 8, 16, 32, 64)]
        assert all(a > b for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-2

    def test_subadditive_in_q(self, rng):
        # ||A^q - B^q|| <= q ||A - B|| for unitaries
        for _ in range(10):
            t = float(rng.uniform(0.5, 2.0))
            q = int(rng.integers(2, 12))
            step_err = dense.spectral_norm(
                dense.trotter_step(NONCOMMUTING, DECOUPLER, t / q, 2)
                - dense.evolve(decouple_hamiltonian(NONCOMMUTING, DECOUPLER), t / q))
            assert dense.trotter_error(NONCOMMUTING, DECOUPLER, t, q, 2) \
                <= q * step_err + 1e-12

    @pytest.mark.parametrize("order,ratio", [(2, 2.0), (3, 4.0)])
    def test_composed_error_scaling(self, order, ratio):
        # eps^(p-1) scaling: doubling q reduces the composed error by 2^(p-1)
        e1 = dense.trotter_error(NONCOMMUTING, DECOUPLER, 1.0, 16, order)
        e2 = dense.trotter_error(NONCOMMUTING, DECOUPLER, 1.0, 32, order)
        assert e1 / e2 == pytest.approx(ratio, rel=0.2)


class TestCircuitSim:
    def test_trace_circuit_matches_formula(self, rng):
        # the simulated Fig-3 circuit reproduces Re tr[W' sigma W sigma']/2^n
        n = 3
        h = PauliSum.from_terms(
            n, [(float(rng.uniform(-1, 1)), random_product(rng, n))
                for _ in range(3)])
        w = dense.evolve(h, 0.9)
        s1, s2 = random_product(rng, n), random_product(rng, n)
        gates = [
            dense.CircuitGate(dense.to_matrix(s2), controlled=True, pauli=True),
            dense.CircuitGate(w),
            dense.CircuitGate(dense.to_matrix(s1), controlled=True, pauli=True),
        ]
        rho = dense.dqc1_final_state(gates, n)
        mx, my, _ = dense.ancilla_expectations(rho)
        trace = dense.heisenberg_trace(
            w, dense.to_matrix(s1), dense.to_matrix(s2)).normalized
        assert mx == pytest.approx(trace.real, abs=1e-10)

    def test_probe_stays_mixed(self, rng):
        n = 2
        h = PauliSum.from_terms(
            n, [(float(rng.uniform(-1, 1)), random_product(rng, n))
                for _ in range(2)])
        gates = [
            dense.CircuitGate(dense.to_matrix(random_product(rng, n)),
                              controlled=True, pauli=True),
            dense.CircuitGate(dense.evolve(h, 1.3)),
            dense.CircuitGate(dense.to_matrix(random_product(rng, n)),
                              controlled=True, pauli=True),
        ]
        rho = dense.dqc1_final_state(gates, n)
        np.testing.assert_allclose(
            dense.probe_reduced(rho), np.eye(4) / 4, atol=1e-12)

    def test_controlled_u_gives_trace(self, rng):
        n = 2
        h = PauliSum.from_terms(
            n, [(float(rng.uniform(-1, 1)), random_product(rng, n))
                for _ in range(2)])
        u = dense.evolve(h, 0.8)
        rho = dense.dqc1_final_state([dense.CircuitGate(u, controlled=True)], n)
        mx, my, _ = dense.ancilla_expectations(rho)
        t = np.trace(u) / 4
        assert mx == pytest.approx(t.real, abs=1e-12)
        assert my == pytest.approx(t.imag, abs=1e-12)
