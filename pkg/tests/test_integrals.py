import numpy as np
import pytest
from scipy.integrate import quad

import qderiv as qd
from qderiv.integrals import (
    FieldRegimeError,
    RestrictedShellError,
    TransformError,
    boys_f0,
)

import oracles


def test_boys_limit_values():
    assert boys_f0(0.0) == pytest.approx(1.0, abs=1e-15)
    assert boys_f0(1.0) == pytest.approx(0.746824, abs=5e-7)


def test_boys_against_quadrature():
    # F0(t) = int_0^1 exp(-t u^2) du, evaluated independently
    for t in (1e-6, 1e-4, 0.03, 1.0, 7.5):
        ref, _ = quad(lambda u: np.exp(-t * u * u), 0.0, 1.0, epsabs=1e-14)
        assert boys_f0(t) == pytest.approx(ref, abs=1e-12)


def test_boys_series_matches_closed_form_at_switch():
    from scipy.special import erf

    t = 0.999e-4  # series branch
    closed = 0.5 * np.sqrt(np.pi / t) * erf(np.sqrt(t))
    assert boys_f0(t) == pytest.approx(closed, abs=1e-14)


def test_unit_self_overlap(h2_ints_0p7):
    _, ints = h2_ints_0p7
    np.testing.assert_allclose(np.diag(ints.overlap), 1.0, atol=1e-10)


def test_integrals_match_quadrature_oracle(h2_ints_0p7):
    # Frozen from the brute-force quadrature in oracles.py (H2/STO-3G, 0.7 A);
    # the live oracle is also evaluated to guard both sides against drift.
    _, ints = h2_ints_0p7
    f0, f1 = oracles.h2_functions(0.7)
    nuclei = [(1.0, f0.center), (1.0, f1.center)]
    checks = {
        ("overlap", (0, 1)): (oracles.overlap(f0, f1), 0.6860894500876428),
        ("kinetic", (0, 0)): (oracles.kinetic(f0, f0), 0.760031883566609),
        ("kinetic", (0, 1)): (oracles.kinetic(f0, f1), 0.26152956968986124),
        ("nuclear", (0, 0)): (
            oracles.nuclear_attraction(f0, f0, nuclei),
            -1.9076821218530238,
        ),
    }
    for (name, (i, j)), (live, frozen) in checks.items():
        engine = getattr(ints, name)[i, j]
        assert engine == pytest.approx(live, abs=1e-8), name
        assert engine == pytest.approx(frozen, abs=1e-8), name
    eri_0000 = oracles.electron_repulsion(f0, f0, f0, f0)
    assert ints.eri[0, 0, 0, 0] == pytest.approx(eri_0000, abs=1e-8)
    assert ints.eri[0, 0, 0, 0] == pytest.approx(0.7746059439199242, abs=1e-8)
    assert ints.eri[0, 1, 0, 1] == pytest.approx(
        oracles.electron_repulsion(f0, f1, f0, f1), abs=1e-8
    )


def test_eri_eightfold_symmetry(h2_ints_0p7):
    _, ints = h2_ints_0p7
    eri = ints.eri
    for perm in (
        eri.transpose(1, 0, 2, 3),
        eri.transpose(0, 1, 3, 2),
        eri.transpose(2, 3, 0, 1),
        eri.transpose(3, 2, 1, 0),
    ):
        np.testing.assert_allclose(eri, perm, atol=1e-12)


def test_core_matrices_symmetric_positive(h2_ints_0p7):
    _, ints = h2_ints_0p7
    for m in (ints.overlap, ints.kinetic, ints.nuclear):
        np.testing.assert_allclose(m, m.T, atol=1e-14)
    assert np.linalg.eigvalsh(ints.overlap).min() > 0


def test_rhf_h2_energy():
    mol = qd.molecule_from_arrays(["H", "H"], [(0, 0, 0), (0, 0, 0.735)])
    ints = qd.core_integrals(mol, qd.sto3g_basis(mol))
    c_mo, eps, e_rhf = qd.run_rhf(ints, 2)
    assert e_rhf == pytest.approx(-1.117, abs=1e-3)
    # orbitals S-orthonormal
    np.testing.assert_allclose(c_mo.T @ ints.overlap @ c_mo, np.eye(2), atol=1e-8)
    assert eps[0] < eps[1]


def test_rhf_is_variational_upper_bound(h2_so_0p741, h2_bk_0p741):
    _, e_rhf = h2_so_0p741
    e_fci = qd.ground_energy(h2_bk_0p741)
    assert e_rhf >= e_fci


def test_rhf_rejects_odd_electron_count(h2_ints_0p7):
    _, ints = h2_ints_0p7
    with pytest.raises(RestrictedShellError, match="[Ll]owdin"):
        qd.run_rhf(ints, 3)


def test_spin_orbital_structure(h2_so_0p741):
    so, _ = h2_so_0p741
    h1 = so.one_body
    np.testing.assert_allclose(h1, h1.T, atol=1e-12)
    # spin-forbidden blocks exactly zero (interleaved alpha/beta ordering)
    assert np.all(h1[0::2, 1::2] == 0.0)
    assert np.all(h1[1::2, 0::2] == 0.0)
    # a+_i a+_j a_k a_l tensor symmetric under (i<->j, k<->l) and Hermitian
    h2 = so.two_body
    np.testing.assert_allclose(h2, h2.transpose(1, 0, 3, 2), atol=1e-12)
    np.testing.assert_allclose(h2, h2.transpose(3, 2, 1, 0), atol=1e-12)


def test_identity_transform_passthrough():
    # Already-orthonormal fake integrals with the identity orbital matrix
    rng = np.random.default_rng(3)
    h = rng.normal(size=(2, 2))
    h = h + h.T
    eri = np.zeros((2, 2, 2, 2))
    ints = qd.IntegralSet(
        overlap=np.eye(2), kinetic=h, nuclear=np.zeros((2, 2)), eri=eri,
        dipole=np.zeros((3, 2, 2)), e_nuc=0.25, mu_nuc=np.zeros(3),
    )
    so = qd.spin_orbital_integrals(ints, np.eye(2))
    np.testing.assert_allclose(so.one_body[0::2, 0::2], h, atol=1e-14)
    assert so.constant == 0.25


def test_singular_orbital_matrix_rejected(h2_ints_0p7):
    _, ints = h2_ints_0p7
    with pytest.raises(TransformError):
        qd.spin_orbital_integrals(ints, np.ones((2, 2)))


def test_rhf_and_lowdin_orbitals_share_fci_spectrum(h2_ints_0p7):
    _, ints = h2_ints_0p7
    c_mo, _, _ = qd.run_rhf(ints, 2)
    h_rhf = qd.jordan_wigner(
        qd.hamiltonian_from_integrals(qd.spin_orbital_integrals(ints, c_mo))
    )
    h_low = qd.jordan_wigner(
        qd.hamiltonian_from_integrals(
            qd.spin_orbital_integrals(ints, qd.lowdin_orbitals(ints), "Lowdin")
        )
    )
    assert qd.ground_energy(h_rhf) == pytest.approx(qd.ground_energy(h_low), abs=1e-10)


def test_translation_invariance_of_energies():
    mol = qd.molecule_from_arrays(["H", "H"], [(0, 0, 0), (0, 0, 0.741)])
    moved = mol.translated((0.37, -1.2, 2.5))
    energies = []
    for m in (mol, moved):
        ints = qd.core_integrals(m, qd.sto3g_basis(m))
        c_mo, _, e_rhf = qd.run_rhf(ints, 2)
        h = qd.bravyi_kitaev(
            qd.hamiltonian_from_integrals(qd.spin_orbital_integrals(ints, c_mo))
        )
        energies.append((e_rhf, qd.ground_energy(h)))
    assert energies[0][0] == pytest.approx(energies[1][0], abs=1e-10)
    assert energies[0][1] == pytest.approx(energies[1][1], abs=1e-10)


class TestApplyField:
    def test_zero_field_is_identity(self, h2_so_0p741):
        so, _ = h2_so_0p741
        shifted = qd.apply_field(so, (0.0, 0.0, 0.0))
        np.testing.assert_array_equal(shifted.one_body, so.one_body)
        assert shifted.constant == so.constant

    def test_operator_derivative_is_exactly_linear(self, h2_so_0p741):
        so, _ = h2_so_0p741
        h = 0.004
        plus = qd.apply_field(so, (0, 0, h))
        minus = qd.apply_field(so, (0, 0, -h))
        fd = (plus.one_body - minus.one_body) / (2 * h)
        np.testing.assert_allclose(fd, -so.dipole[2], atol=1e-12)
        const_fd = (plus.constant - minus.constant) / (2 * h)
        assert const_fd == pytest.approx(so.mu_nuc[2], abs=1e-12)

    def test_linearity_of_operator_sums(self, h2_so_0p741):
        so, _ = h2_so_0p741
        f1, f2 = np.array([0, 0, 0.01]), np.array([0, 0, 0.03])
        lhs = qd.apply_field(so, f1).one_body + qd.apply_field(so, f2).one_body
        rhs = qd.apply_field(so, f1 + f2).one_body + so.one_body
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_regime_guard(self, h2_so_0p741):
        so, _ = h2_so_0p741
        with pytest.raises(FieldRegimeError):
            qd.apply_field(so, (0, 0, 0.2))
        qd.apply_field(so, (0, 0, 0.2), allow_strong=True)

    def test_positive_polarizability_from_fci(self, h2_so_0p741):
        so, _ = h2_so_0p741
        f = 0.001
        energies = []
        for fz in (f, 0.0, -f):
            h = qd.bravyi_kitaev(
                qd.hamiltonian_from_integrals(qd.apply_field(so, (0, 0, fz)))
            )
            energies.append(qd.ground_energy(h))
        assert energies[0] + energies[2] - 2 * energies[1] < 0
