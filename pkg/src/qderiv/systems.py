"""Concrete molecular systems: parameterized Hamiltonian families, reference
circuits, and ansatz choices for the hydrogen test systems.

H2 is parameterized by its bond length R (atoms at z = +-R/2, so the nuclear
charge center stays at the origin) and optionally by a uniform field
component F_z. The collinear H3 chain is parameterized by the two adjacent
bond lengths (R1, R2). H2 uses RHF orbitals; odd-electron H3 uses Lowdin
symmetric orthogonalization, whose FCI spectrum matches any orbital choice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivatives import HamiltonianFamily, SystemParameters
from .integrals import (
    IntegralSet,
    apply_field,
    core_integrals,
    lowdin_orbitals,
    run_rhf,
    spin_orbital_integrals,
)
from .mappings import (
    BRAVYI_KITAEV,
    JORDAN_WIGNER,
    dipole_operator,
    encode,
    encoded_occupation_bits,
    hamiltonian_from_integrals,
    number_operator,
    taper_ground_sector,
)
from .molecule import Molecule, molecule_from_arrays, sto3g_basis
from .pauli import PauliSum
from .simulator import (
    ParameterizedCircuit,
    hea_ansatz,
    hf_reference_circuit,
    reference_from_bits,
    tapered_ansatz,
)

AXES = {"x": 0, "y": 1, "z": 2}


def h2_molecule(r: float) -> Molecule:
    return molecule_from_arrays(["H", "H"], [(0.0, 0.0, -r / 2.0), (0.0, 0.0, r / 2.0)])


def h3_molecule(r1: float, r2: float) -> Molecule:
    return molecule_from_arrays(
        ["H", "H", "H"],
        [(0.0, 0.0, 0.0), (0.0, 0.0, r1), (0.0, 0.0, r1 + r2)],
    )


def _field_vector(params: SystemParameters) -> np.ndarray:
    f = np.zeros(3)
    for name in params.names:
        if name.startswith("F"):
            f[AXES[name[1:].lstrip("_").lower()]] = params[name]
    return f


@dataclass
class MolecularSystem:
    """Everything the application layer needs for one chemical system."""

    name: str
    family: HamiltonianFamily
    parameters: SystemParameters
    n_electrons: int
    encoding: str
    n_qubits: int
    reference: ParameterizedCircuit
    ansatz: ParameterizedCircuit
    coordinate_names: tuple[str, ...]
    tapered: bool = False

    def hamiltonian(self, params: SystemParameters | None = None) -> PauliSum:
        return self.family.build(params if params is not None else self.parameters)

    def spin_orbitals(self, params: SystemParameters | None = None):
        raise NotImplementedError

    def number_operator(self) -> PauliSum:
        if self.tapered:
            raise ValueError("number operator is not defined on the tapered register")
        return number_operator(self.n_qubits, self.encoding)


def _h2_spin_orbitals(params: SystemParameters):
    mol = h2_molecule(params["R"])
    ints = core_integrals(mol, sto3g_basis(mol))
    c_mo, _, e_hf = run_rhf(ints, mol.n_electrons)
    so = spin_orbital_integrals(ints, c_mo, provenance="RHF")
    f = _field_vector(params)
    if np.any(f != 0.0):
        so = apply_field(so, f)
    return so, e_hf


def _h3_spin_orbitals(params: SystemParameters):
    mol = h3_molecule(params["R1"], params["R2"])
    ints = core_integrals(mol, sto3g_basis(mol))
    so = spin_orbital_integrals(ints, lowdin_orbitals(ints), provenance="Lowdin")
    f = _field_vector(params)
    if np.any(f != 0.0):
        so = apply_field(so, f)
    return so, None


class H2System(MolecularSystem):
    def spin_orbitals(self, params=None):
        return _h2_spin_orbitals(params if params is not None else self.parameters)[0]

    def hf_energy(self, params: SystemParameters | None = None) -> float:
        return _h2_spin_orbitals(params if params is not None else self.parameters)[1]

    def dipole_operator(self, params: SystemParameters | None = None, axis: int = 2) -> PauliSum:
        if self.tapered:
            raise ValueError("dipole operator is not defined on the tapered register")
        so = self.spin_orbitals(params)
        return dipole_operator(so, self.encoding, axis)


class H3System(MolecularSystem):
    def spin_orbitals(self, params=None):
        return _h3_spin_orbitals(params if params is not None else self.parameters)[0]


def h2_system(
    mapping: str = BRAVYI_KITAEV,
    taper: bool = False,
    depth: int = 3,
    bond_length: float = 0.741,
    with_field: bool = False,
) -> H2System:
    """Four-qubit H2 (or its two-qubit tapered reduction) at the given bond
    length. Field coupling adds an F_z parameter; tapering and field coupling
    are mutually exclusive because the dipole breaks the Z2 symmetries."""
    if taper and with_field:
        raise ValueError("field coupling breaks the symmetries tapering removes")
    values = {"R": bond_length}
    if with_field:
        values["F_z"] = 0.0
    base = SystemParameters.build(**values)

    def builder(params: SystemParameters) -> PauliSum:
        so, _ = _h2_spin_orbitals(params)
        return encode(hamiltonian_from_integrals(so), mapping, so.n_modes)

    family = HamiltonianFamily(builder, base)
    n_electrons = 2
    if taper:
        full = family.build(base)
        _, taper_map = taper_ground_sector(full)
        family = HamiltonianFamily(builder, base, taper_map)
        bits = encoded_occupation_bits([1] * n_electrons, mapping, full.n_qubits)
        kept_bits = [int(bits[q]) for q in taper_map.keep]
        reference = reference_from_bits(kept_bits)
        ansatz = tapered_ansatz()
        n_qubits = len(taper_map.keep)
    else:
        n_qubits = family.n_qubits
        reference = hf_reference_circuit(n_electrons, mapping, n_qubits)
        ansatz = hea_ansatz(n_qubits, depth)
    return H2System(
        name="H2",
        family=family,
        parameters=base,
        n_electrons=n_electrons,
        encoding=mapping,
        n_qubits=n_qubits,
        reference=reference,
        ansatz=ansatz,
        coordinate_names=("R",),
        tapered=taper,
    )


def h3_system(
    mapping: str = JORDAN_WIGNER,
    depth: int = 6,
    r1: float = 0.9,
    r2: float = 0.9,
) -> H3System:
    """Collinear H3 with two bond-length coordinates; six qubits under
    Jordan-Wigner (Bravyi-Kitaev pads to eight)."""
    base = SystemParameters.build(R1=r1, R2=r2)

    def builder(params: SystemParameters) -> PauliSum:
        so, _ = _h3_spin_orbitals(params)
        return encode(hamiltonian_from_integrals(so), mapping, so.n_modes)

    family = HamiltonianFamily(builder, base)
    n_qubits = family.n_qubits
    reference = hf_reference_circuit(3, mapping, n_qubits)
    return H3System(
        name="H3",
        family=family,
        parameters=base,
        n_electrons=3,
        encoding=mapping,
        n_qubits=n_qubits,
        reference=reference,
        ansatz=hea_ansatz(n_qubits, depth),
        coordinate_names=("R1", "R2"),
    )


def mode_system(system: MolecularSystem, origin: SystemParameters, modes) -> MolecularSystem:
    """Reparameterize a system by displacements along unit mode vectors:
    eta(s) = origin + sum_k s_k * modes[k] over the coordinate names.

    The derived family shares the original builder (and taper map), so states
    remain comparable across the mode line.
    """
    modes = [np.asarray(m, dtype=float) for m in modes]
    coords = system.coordinate_names
    for m in modes:
        if m.shape != (len(coords),):
            raise ValueError("each mode needs one component per coordinate")
        if abs(np.linalg.norm(m) - 1.0) > 1e-9:
            raise ValueError("modes must be unit vectors")
    base = SystemParameters.build(**{f"s{k}": 0.0 for k in range(len(modes))})

    def builder(params: SystemParameters) -> PauliSum:
        target = origin
        for k, mode in enumerate(modes):
            s = params[f"s{k}"]
            for c, comp in zip(coords, mode):
                target = target.shifted(c, s * comp)
        return system.family._builder(target)

    family = HamiltonianFamily(builder, base, system.family.taper_map)
    return MolecularSystem(
        name=f"{system.name}-modes",
        family=family,
        parameters=base,
        n_electrons=system.n_electrons,
        encoding=system.encoding,
        n_qubits=system.n_qubits,
        reference=system.reference,
        ansatz=system.ansatz,
        coordinate_names=tuple(f"s{k}" for k in range(len(modes))),
        tapered=system.tapered,
    )
