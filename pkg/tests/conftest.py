import warnings

import numpy as np
import pytest

import qderiv as qd


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, label): acceptance criterion with a printed verdict"
    )


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" not in report.nodeid:
        return
    label = report.nodeid.split("::")[-1]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {verdict}  {label}", flush=True)


@pytest.fixture(autouse=True)
def _quiet_stale_warnings():
    # Unit tests drive many deliberately half-converged states; the staleness
    # warning is itself under test in test_derivatives.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", qd.derivatives.StaleStateWarning)
        warnings.simplefilter("ignore", qd.vqe.UnconvergedWarning)
        yield


@pytest.fixture(scope="session")
def h2_ints_0p7():
    mol = qd.molecule_from_arrays(["H", "H"], [(0, 0, 0), (0, 0, 0.7)])
    return mol, qd.core_integrals(mol, qd.sto3g_basis(mol))


@pytest.fixture(scope="session")
def h2_so_0p741():
    mol = qd.molecule_from_arrays(["H", "H"], [(0, 0, -0.3705), (0, 0, 0.3705)])
    ints = qd.core_integrals(mol, qd.sto3g_basis(mol))
    c_mo, _, e_rhf = qd.run_rhf(ints, 2)
    so = qd.spin_orbital_integrals(ints, c_mo)
    return so, e_rhf


@pytest.fixture(scope="session")
def h2_bk_0p741(h2_so_0p741):
    so, _ = h2_so_0p741
    return qd.bravyi_kitaev(qd.hamiltonian_from_integrals(so))


@pytest.fixture(scope="session")
def h2_tapered_system():
    return qd.h2_system(taper=True, bond_length=0.741)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
