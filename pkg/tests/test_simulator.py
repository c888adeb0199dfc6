import numpy as np
import pytest

import qderiv as qd
from qderiv.pauli import PauliSum, PauliTerm, to_dense_matrix
from qderiv.simulator import (
    Gate,
    NotAnObservableError,
    ParameterizedCircuit,
    apply_pauli_term,
    basis_state,
    run_batch,
    zero_state,
)


def _random_circuit(rng, n_qubits=3, n_rot=6):
    gates, slot = [], 0
    for _ in range(n_rot):
        kind = rng.choice(["ry", "rz"])
        gates.append(Gate(kind, (int(rng.integers(n_qubits)),), slot=slot))
        slot += 1
        if rng.random() < 0.5:
            a, b = rng.choice(n_qubits, size=2, replace=False)
            gates.append(Gate(rng.choice(["cnot", "cz"]), (int(a), int(b))))
    return ParameterizedCircuit(n_qubits, tuple(gates), slot)


class TestGateApplication:
    def test_empty_circuit_is_identity(self, rng):
        c = ParameterizedCircuit(2, (), 0)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        np.testing.assert_allclose(qd.bind_and_run(c, [], psi), psi)

    def test_x_flips_qubit_zero(self):
        c = ParameterizedCircuit(3, (Gate("x", (0,)),), 0)
        psi = qd.bind_and_run(c, [])
        assert np.argmax(np.abs(psi)) == 1

    def test_inverse_restores_input(self, rng):
        c = _random_circuit(rng)
        theta = rng.uniform(-np.pi, np.pi, c.n_slots)
        psi0 = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi0 /= np.linalg.norm(psi0)
        out = qd.bind_and_run(c, theta, psi0)
        back = qd.bind_and_run(c.inverse(), theta, out)
        np.testing.assert_allclose(back, psi0, atol=1e-10)

    def test_norm_preserved(self, rng):
        for _ in range(5):
            c = _random_circuit(rng)
            theta = rng.uniform(-np.pi, np.pi, c.n_slots)
            psi = qd.bind_and_run(c, theta)
            assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)

    def test_parameter_length_mismatch(self, rng):
        c = _random_circuit(rng)
        with pytest.raises(ValueError, match="slot count"):
            qd.bind_and_run(c, np.zeros(c.n_slots + 1))

    def test_batch_matches_sequential(self, rng):
        c = _random_circuit(rng)
        thetas = rng.uniform(-np.pi, np.pi, (7, c.n_slots))
        batch = run_batch(c, thetas)
        for i in range(7):
            np.testing.assert_allclose(
                batch[i], qd.bind_and_run(c, thetas[i]), atol=1e-12
            )

    def test_gate_validation(self):
        with pytest.raises(ValueError, match="outside"):
            ParameterizedCircuit(2, (Gate("x", (2,)),), 0)
        with pytest.raises(ValueError, match="slot"):
            ParameterizedCircuit(2, (Gate("x", (0,), slot=0),), 1)


def test_apply_pauli_term_matches_dense(rng):
    for letters in ("XYZ", "ZIY", "XXI"):
        term = PauliTerm(0.7 - 0.2j, letters)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        dense = to_dense_matrix(PauliSum(3, [term]))
        np.testing.assert_allclose(apply_pauli_term(psi, term), dense @ psi, atol=1e-12)


class TestReferenceCircuits:
    def test_jw_two_electrons(self):
        ref = qd.hf_reference_circuit(2, "jw", 4)
        psi = qd.bind_and_run(ref, [])
        assert np.argmax(np.abs(psi)) == 0b0011
        n_val = qd.expectation(qd.number_operator(4, "jw"), psi)
        assert n_val == pytest.approx(2.0, abs=1e-12)

    def test_bk_two_electrons(self):
        ref = qd.hf_reference_circuit(2, "bk", 4)
        psi = qd.bind_and_run(ref, [])
        n_val = qd.expectation(qd.number_operator(4, "bk"), psi)
        assert n_val == pytest.approx(2.0, abs=1e-12)

    def test_zero_electrons_empty_circuit(self):
        ref = qd.hf_reference_circuit(0, "jw", 3)
        assert ref.gates == ()
        np.testing.assert_allclose(qd.bind_and_run(ref, []), zero_state(3))


class TestAnsatz:
    def test_slot_count(self):
        assert qd.hea_ansatz(4, 1).n_slots == 16
        assert qd.hea_ansatz(4, 3).n_slots == 32
        assert qd.hea_ansatz(6, 2).n_slots == 36

    def test_zero_angles_reproduce_reference_energy(self, h2_bk_0p741):
        ref = qd.hf_reference_circuit(2, "bk", 4)
        circuit = ref.then(qd.hea_ansatz(4, 2))
        psi = qd.bind_and_run(circuit, np.zeros(circuit.n_slots))
        e_hf = qd.expectation(h2_bk_0p741, qd.bind_and_run(ref, []))
        assert qd.expectation(h2_bk_0p741, psi) == pytest.approx(e_hf, abs=1e-12)

    def test_tapered_ansatz_reaches_ground_energy(self, h2_tapered_system):
        sys_t = h2_tapered_system
        h = sys_t.hamiltonian()
        circuit = sys_t.reference.then(sys_t.ansatz)
        thetas = np.linspace(-np.pi, np.pi, 721).reshape(-1, 1)
        energies = qd.expectation(h, run_batch(circuit, thetas))
        assert energies.min() == pytest.approx(-1.137, abs=1.6e-3)
        assert energies.min() >= qd.ground_energy(h) - 1e-10

    def test_depth_validation(self):
        with pytest.raises(ValueError):
            qd.hea_ansatz(4, 0)


class TestExpectation:
    def test_z_on_zero_state(self):
        assert qd.expectation(PauliSum(1, [(1.0, "Z")]), zero_state(1)) == pytest.approx(1.0)

    def test_x_on_plus_state(self):
        plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
        assert qd.expectation(PauliSum(1, [(1.0, "X")]), plus) == pytest.approx(1.0)

    def test_rejects_complex_coefficients(self):
        with pytest.raises(NotAnObservableError):
            qd.expectation(PauliSum(1, [(1.0j, "X")]), zero_state(1))

    def test_variational_bound(self, h2_bk_0p741, rng):
        lam_min = qd.ground_energy(h2_bk_0p741)
        for _ in range(10):
            psi = rng.normal(size=16) + 1j * rng.normal(size=16)
            psi /= np.linalg.norm(psi)
            assert qd.expectation(h2_bk_0p741, psi) >= lam_min - 1e-10


class TestSampling:
    def test_sampled_tracks_exact_within_five_sigma(self, h2_bk_0p741):
        ref = qd.hf_reference_circuit(2, "bk", 4)
        circuit = ref.then(qd.hea_ansatz(4, 1))
        rng = np.random.default_rng(7)
        theta = rng.uniform(-0.8, 0.8, circuit.n_slots)
        exact = qd.expectation(h2_bk_0p741, qd.bind_and_run(circuit, theta))
        shots = 100_000
        sampled = qd.sampled_expectation(h2_bk_0p741, circuit, theta, shots, seed=11)
        sigma = h2_bk_0p741.abs_coeff_sum() / np.sqrt(shots)
        assert abs(sampled - exact) < 5 * sigma

    def test_sampled_deterministic_for_fixed_seed(self, h2_bk_0p741):
        ref = qd.hf_reference_circuit(2, "bk", 4)
        circuit = ref.then(qd.hea_ansatz(4, 1))
        theta = np.full(circuit.n_slots, 0.3)
        a = qd.sampled_expectation(h2_bk_0p741, circuit, theta, 2000, seed=5)
        b = qd.sampled_expectation(h2_bk_0p741, circuit, theta, 2000, seed=5)
        assert a == b

    def test_shot_error_shrinks_with_budget(self, h2_bk_0p741):
        # fixed-seed regression: mean |error| over a few streams per budget
        ref = qd.hf_reference_circuit(2, "bk", 4)
        circuit = ref.then(qd.hea_ansatz(4, 1))
        rng = np.random.default_rng(3)
        theta = rng.uniform(-0.8, 0.8, circuit.n_slots)
        exact = qd.expectation(h2_bk_0p741, qd.bind_and_run(circuit, theta))
        mean_errors = []
        for shots in (1_000, 10_000, 100_000):
            errs = []
            for seed in range(5):
                est = qd.sampled_expectation(
                    h2_bk_0p741, circuit, theta, shots, seed=1000 * seed + shots
                )
                err = abs(est - exact)
                assert err < 5 * h2_bk_0p741.abs_coeff_sum() / np.sqrt(shots)
                errs.append(err)
            mean_errors.append(np.mean(errs))
        assert mean_errors[1] < mean_errors[0]
        assert mean_errors[2] < mean_errors[1]


class TestOverlap:
    def test_identical_preparations(self, rng):
        c = _random_circuit(rng)
        theta = rng.uniform(-np.pi, np.pi, c.n_slots)
        assert qd.overlap_probability(c, theta, c, theta) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_basis_states(self):
        empty = ParameterizedCircuit(1, (), 0)
        flip = ParameterizedCircuit(1, (Gate("x", (0,)),), 0)
        assert qd.overlap_probability(empty, [], flip, []) == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_inner_product(self, rng):
        c1, c2 = _random_circuit(rng), _random_circuit(rng)
        t1 = rng.uniform(-np.pi, np.pi, c1.n_slots)
        t2 = rng.uniform(-np.pi, np.pi, c2.n_slots)
        direct = abs(np.vdot(qd.bind_and_run(c1, t1), qd.bind_and_run(c2, t2))) ** 2
        assert qd.overlap_probability(c1, t1, c2, t2) == pytest.approx(direct, abs=1e-10)

    def test_symmetric_in_arguments(self, rng):
        c1, c2 = _random_circuit(rng), _random_circuit(rng)
        t1 = rng.uniform(-np.pi, np.pi, c1.n_slots)
        t2 = rng.uniform(-np.pi, np.pi, c2.n_slots)
        ab = qd.overlap_probability(c1, t1, c2, t2)
        ba = qd.overlap_probability(c2, t2, c1, t1)
        assert ab == pytest.approx(ba, abs=1e-12)

    def test_sampled_counts_all_zeros(self, rng):
        c1, c2 = _random_circuit(rng), _random_circuit(rng)
        t1 = rng.uniform(-1, 1, c1.n_slots)
        t2 = rng.uniform(-1, 1, c2.n_slots)
        exact = qd.overlap_probability(c1, t1, c2, t2)
        sampled = qd.overlap_probability(c1, t1, c2, t2, shots=200_000, seed=9)
        assert sampled == pytest.approx(exact, abs=5.0 / np.sqrt(200_000))


class TestEngine:
    def test_requires_shots_for_sampled(self):
        with pytest.raises(ValueError, match="shot"):
            qd.Engine("sampled")

    def test_child_engines_are_deterministic(self):
        e = qd.Engine("sampled", shots=100, seed=3)
        assert e.child(1).seed == qd.Engine("sampled", 100, 3).child(1).seed
        assert e.child(1).seed != e.child(2).seed
