import numpy as np
import pytest

import qderiv as qd
from qderiv.fermion import ANNIHILATE, CREATE, FermionOperator
from qderiv.mappings import TaperingError, encoded_occupation_bits, z_only_qubits
from qderiv.pauli import to_dense_matrix

# Bravyi-Kitaev H2 term structure (letters indexed by qubit, qubit 0 first):
# the set printed in the source paper for the 4-qubit Hamiltonian, with the
# one non-Hermitian-consistent entry corrected to Y2 Z1 Y0.
BK_H2_LETTER_SET = {
    "IIII",            # I
    "ZIII",            # Z0
    "IZII",            # Z1
    "IIZI",            # Z2
    "ZZII",            # Z1 Z0
    "ZIZI",            # Z2 Z0
    "IZIZ",            # Z3 Z1
    "XZXI",            # X2 Z1 X0
    "YZYI",            # Y2 Z1 Y0
    "ZZZI",            # Z2 Z1 Z0
    "IZZZ",            # Z3 Z2 Z1
    "ZIZZ",            # Z3 Z2 Z0
    "XZXZ",            # Z3 X2 Z1 X0
    "YZYZ",            # Z3 Y2 Z1 Y0
    "ZZZZ",            # Z3 Z2 Z1 Z0
}


def test_jw_occupancy_identity():
    op = FermionOperator.from_term(((0, CREATE), (0, ANNIHILATE)))
    s = qd.jordan_wigner(op, n_modes=1)
    assert s.coefficient("I") == pytest.approx(0.5)
    assert s.coefficient("Z") == pytest.approx(-0.5)


def test_bk_h2_reproduces_printed_term_structure(h2_bk_0p741):
    assert h2_bk_0p741.letter_strings == BK_H2_LETTER_SET
    assert h2_bk_0p741.is_real()


def test_h2_ground_energy_at_equilibrium(h2_bk_0p741):
    assert qd.ground_energy(h2_bk_0p741) == pytest.approx(-1.137, abs=1e-3)


def _random_two_mode_hermitian(rng):
    op = FermionOperator()
    for factors in (
        ((0, CREATE), (0, ANNIHILATE)),
        ((1, CREATE), (1, ANNIHILATE)),
        ((0, CREATE), (1, ANNIHILATE)),
        ((0, CREATE), (1, CREATE), (1, ANNIHILATE), (0, ANNIHILATE)),
    ):
        op += FermionOperator.from_term(factors, rng.normal())
    return op + op.adjoint()


def test_jw_bk_isospectral_on_random_operators(rng):
    for _ in range(5):
        op = _random_two_mode_hermitian(rng)
        jw = np.linalg.eigvalsh(to_dense_matrix(qd.jordan_wigner(op, 2)))
        bk = np.linalg.eigvalsh(to_dense_matrix(qd.bravyi_kitaev(op, 2)))
        np.testing.assert_allclose(jw, bk, atol=1e-10)


def test_jw_bk_isospectral_on_h2(h2_so_0p741):
    so, _ = h2_so_0p741
    fop = qd.hamiltonian_from_integrals(so)
    jw = np.linalg.eigvalsh(to_dense_matrix(qd.jordan_wigner(fop)))
    bk = np.linalg.eigvalsh(to_dense_matrix(qd.bravyi_kitaev(fop)))
    np.testing.assert_allclose(jw, bk, atol=1e-10)


def test_bk_pads_to_power_of_two():
    op = FermionOperator.from_term(((5, CREATE), (5, ANNIHILATE)))
    s = qd.bravyi_kitaev(op, n_modes=6)
    assert s.n_qubits == 8


def test_hamiltonian_from_integrals_rejects_non_hermitian(h2_so_0p741):
    so, _ = h2_so_0p741
    bad = qd.SpinOrbitalIntegrals(
        one_body=np.triu(np.ones((4, 4)), k=1),
        two_body=so.two_body,
        constant=0.0,
        dipole=so.dipole,
        mu_nuc=so.mu_nuc,
        provenance="RHF",
    )
    with pytest.raises(ValueError, match="Hermitian"):
        qd.hamiltonian_from_integrals(bad)


class TestTapering:
    def test_h2_bk_tapers_to_eq24_structure(self, h2_bk_0p741):
        assert z_only_qubits(h2_bk_0p741) == [1, 3]
        reduced, tmap = qd.taper_ground_sector(h2_bk_0p741)
        assert reduced.n_qubits == 2
        assert reduced.letter_strings == {"II", "ZI", "IZ", "ZZ", "XX", "YY"}
        assert tmap.removed == (1, 3)
        assert qd.ground_energy(reduced) == pytest.approx(
            qd.ground_energy(h2_bk_0p741), abs=1e-10
        )

    def test_dimension_halves_per_removed_qubit(self, h2_bk_0p741):
        reduced, tmap = qd.taper_ground_sector(h2_bk_0p741)
        assert 2**reduced.n_qubits * 2 ** len(tmap.removed) == 2**h2_bk_0p741.n_qubits

    def test_taper_nothing_is_identity(self, h2_bk_0p741):
        same, tmap = qd.taper(h2_bk_0p741, sector=(), removed=[])
        assert tmap.removed == ()
        assert same.max_abs_coeff_diff(h2_bk_0p741) < 1e-15

    def test_wrong_sector_detected_by_oracle(self, h2_bk_0p741):
        good = qd.select_sector(h2_bk_0p741)
        bad = tuple(-v for v in good)
        reduced, _ = qd.taper(h2_bk_0p741, bad)
        assert abs(
            qd.ground_energy(reduced) - qd.ground_energy(h2_bk_0p741)
        ) > 1e-6

    def test_xy_qubit_not_taperable(self, h2_bk_0p741):
        with pytest.raises(TaperingError, match="not taperable"):
            qd.taper(h2_bk_0p741, sector=(1,), removed=[0])


class TestNumberOperator:
    def test_bk_four_modes_matches_canonical_form(self):
        n_op = qd.number_operator(4, "bk")
        # 2I - (Z0 + Z0Z1 + Z2 + Z1Z2Z3)/2; the printed source form has Z3 in
        # place of Z2, which fails [H, N] = 0 (see the acceptance suite).
        assert n_op.coefficient("IIII") == pytest.approx(2.0)
        for letters in ("ZIII", "ZZII", "IIZI", "IZZZ"):
            assert n_op.coefficient(letters) == pytest.approx(-0.5), letters
        assert len(n_op.terms) == 5

    def test_jw_n_modes_identity(self):
        n_op = qd.number_operator(4, "jw")
        assert n_op.coefficient("IIII") == pytest.approx(2.0)
        for q in range(4):
            letters = "".join("Z" if i == q else "I" for i in range(4))
            assert n_op.coefficient(letters) == pytest.approx(-0.5)

    def test_hf_state_is_number_eigenstate(self, h2_bk_0p741):
        ref = qd.hf_reference_circuit(2, "bk", 4)
        psi = qd.bind_and_run(ref, [])
        n_val = qd.expectation(qd.number_operator(4, "bk"), psi)
        assert n_val == pytest.approx(2.0, abs=1e-12)

    def test_hamiltonian_commutes_with_number_operator(self, h2_bk_0p741):
        n_op = qd.number_operator(4, "bk")
        comm = (h2_bk_0p741 @ n_op) - (n_op @ h2_bk_0p741)
        assert np.abs(to_dense_matrix(comm)).max() < 1e-10


def test_dipole_operator_expectation_matches_dense(h2_so_0p741):
    so, _ = h2_so_0p741
    mu_op = qd.dipole_operator(so, "bk", axis=2)
    assert mu_op.is_real()
    # one-body only: expectation on the HF state equals the occupied trace
    psi = qd.bind_and_run(qd.hf_reference_circuit(2, "bk", 4), [])
    dense = to_dense_matrix(mu_op)
    direct = np.real(np.conj(psi) @ dense @ psi)
    assert qd.expectation(mu_op, psi) == pytest.approx(direct, abs=1e-12)


def test_encoded_occupation_bits_bk():
    bits = encoded_occupation_bits([1, 1, 0, 0], "bk", 4)
    np.testing.assert_array_equal(bits, [1, 0, 0, 0])
    bits = encoded_occupation_bits([0, 0, 1, 1], "bk", 4)
    np.testing.assert_array_equal(bits, [0, 0, 1, 0])
