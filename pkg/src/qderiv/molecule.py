"""Molecular geometry, XYZ parsing, and the hydrogen STO-3G basis.

Positions are stored in Angstrom at the user-facing boundary and converted
to Bohr internally; all energies are in Hartree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Conversion pinned for bit-level reproducibility.
ANGSTROM_PER_BOHR = 0.52917721092

# STO-3G hydrogen 1s shell (exponents in 1/Bohr^2, published contraction).
STO3G_H_EXPONENTS = (3.42525091, 0.62391373, 0.16885540)
STO3G_H_COEFFS = (0.15432897, 0.53532814, 0.44463454)

SUPPORTED_ELEMENTS = {"H": 1}


class XYZParseError(ValueError):
    """Malformed XYZ input; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsupportedElementError(ValueError):
    pass


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Molecule:
    """A point-charge nuclear frame: (symbol, Z, position/Angstrom) per atom."""

    atoms: tuple[tuple[str, int, tuple[float, float, float]], ...]
    charge: int = 0

    def __post_init__(self):
        if not self.atoms:
            raise GeometryError("molecule has no atoms")
        for symbol, z, pos in self.atoms:
            if z < 1:
                raise GeometryError(f"nuclear charge must be >= 1, got {z} for {symbol}")
            if not all(np.isfinite(pos)):
                raise GeometryError(f"non-finite position for {symbol}: {pos}")
        if self.n_electrons < 1:
            raise GeometryError(
                f"electron count must be >= 1, got {self.n_electrons} "
                f"(sum Z = {self.nuclear_charge}, charge = {self.charge})"
            )
        pos = self.positions
        for a in range(len(pos)):
            for b in range(a + 1, len(pos)):
                if np.linalg.norm(pos[a] - pos[b]) < 1e-6:
                    raise GeometryError(f"atoms {a} and {b} closer than 1e-6 Angstrom")

    @property
    def nuclear_charge(self) -> int:
        return sum(z for _, z, _ in self.atoms)

    @property
    def n_electrons(self) -> int:
        return self.nuclear_charge - self.charge

    @property
    def positions(self) -> np.ndarray:
        """Atom positions in Angstrom, shape (n_atoms, 3)."""
        return np.array([pos for _, _, pos in self.atoms], dtype=float)

    @property
    def positions_bohr(self) -> np.ndarray:
        return self.positions / ANGSTROM_PER_BOHR

    @property
    def charges(self) -> np.ndarray:
        return np.array([z for _, z, _ in self.atoms], dtype=float)

    def translated(self, shift) -> "Molecule":
        """Rigidly translate all atoms by `shift` (Angstrom)."""
        shift = np.asarray(shift, dtype=float)
        atoms = tuple(
            (sym, z, tuple(np.asarray(pos) + shift)) for sym, z, pos in self.atoms
        )
        return Molecule(atoms, self.charge)


def molecule_from_arrays(symbols, positions, charge: int = 0) -> Molecule:
    """Build a Molecule from parallel symbol/position sequences (Angstrom)."""
    atoms = []
    for sym, pos in zip(symbols, positions):
        if sym not in SUPPORTED_ELEMENTS:
            raise UnsupportedElementError(f"unsupported element: {sym!r} (only H)")
        atoms.append((sym, SUPPORTED_ELEMENTS[sym], tuple(float(x) for x in pos)))
    return Molecule(tuple(atoms), charge)


def parse_xyz(text: str) -> Molecule:
    """Parse XYZ-format text: count line, comment line, then 'Symbol x y z' rows.

    The net charge is read from a 'charge=k' token on the comment line
    (default 0). Coordinates are in Angstrom.
    """
    lines = text.splitlines()
    if not lines:
        raise XYZParseError("empty input", 1)
    try:
        n_atoms = int(lines[0].strip())
    except ValueError:
        raise XYZParseError(f"expected atom count, got {lines[0]!r}", 1) from None
    if n_atoms < 1:
        raise XYZParseError("atom count must be positive", 1)
    if len(lines) < 2 + n_atoms:
        raise XYZParseError(
            f"expected {n_atoms} atom lines, found {max(0, len(lines) - 2)}",
            len(lines) + 1,
        )

    charge = 0
    for token in lines[1].split():
        if token.startswith("charge="):
            try:
                charge = int(token[len("charge="):])
            except ValueError:
                raise XYZParseError(f"bad charge token {token!r}", 2) from None

    symbols, positions = [], []
    for i in range(n_atoms):
        lineno = 3 + i
        parts = lines[2 + i].split()
        if len(parts) != 4:
            raise XYZParseError(f"expected 'Symbol x y z', got {lines[2 + i]!r}", lineno)
        sym = parts[0]
        if sym not in SUPPORTED_ELEMENTS:
            raise UnsupportedElementError(f"unsupported element {sym!r} on line {lineno} (only H)")
        try:
            xyz = [float(p) for p in parts[1:]]
        except ValueError:
            raise XYZParseError(f"bad coordinate in {lines[2 + i]!r}", lineno) from None
        symbols.append(sym)
        positions.append(xyz)
    return molecule_from_arrays(symbols, positions, charge)


def nuclear_repulsion(mol: Molecule) -> float:
    """Point-charge repulsion sum_{A<B} Z_A Z_B / |R_A - R_B| in Hartree."""
    pos = mol.positions_bohr
    z = mol.charges
    energy = 0.0
    for a in range(len(z)):
        for b in range(a + 1, len(z)):
            r = np.linalg.norm(pos[a] - pos[b])
            if r < 1e-12:
                raise GeometryError(f"coincident atoms {a}, {b}")
            energy += z[a] * z[b] / r
    return energy


def nuclear_dipole(mol: Molecule, origin=None) -> np.ndarray:
    """Nuclear dipole sum_A Z_A (R_A - origin) in a.u. (Bohr * e).

    Default origin is the center of nuclear charge, which makes the result
    identically zero; pass an explicit origin (Bohr) to move it.
    """
    pos = mol.positions_bohr
    z = mol.charges
    if origin is None:
        origin = nuclear_charge_center(mol)
    origin = np.asarray(origin, dtype=float)
    return np.einsum("a,ax->x", z, pos - origin)


def nuclear_charge_center(mol: Molecule) -> np.ndarray:
    """Center of nuclear charge in Bohr; the dipole origin used throughout."""
    pos = mol.positions_bohr
    z = mol.charges
    return np.einsum("a,ax->x", z, pos) / z.sum()


@dataclass(frozen=True)
class BasisSet:
    """Contracted s-type Gaussian shells: (center index, ((exponent, coeff), ...))."""

    shells: tuple[tuple[int, tuple[tuple[float, float], ...]], ...]

    @property
    def n_functions(self) -> int:
        return len(self.shells)


def sto3g_basis(mol: Molecule) -> BasisSet:
    """One STO-3G 1s shell per atom. Only hydrogen is parameterized."""
    shells = []
    for i, (sym, _, _) in enumerate(mol.atoms):
        if sym != "H":
            raise UnsupportedElementError(f"no STO-3G parameters for {sym!r}")
        shells.append((i, tuple(zip(STO3G_H_EXPONENTS, STO3G_H_COEFFS))))
    return BasisSet(tuple(shells))
