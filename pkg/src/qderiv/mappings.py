"""Fermion-to-qubit encodings (Jordan-Wigner and Bravyi-Kitaev), symmetry
tapering, and the molecular operators built from spin-orbital integrals.

Qubit index equals spin-orbital index (interleaved alpha/beta). The
Bravyi-Kitaev transform uses the binary-tree update/parity/flip sets for a
power-of-two mode count and pads other counts up to the next power of two.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fermion import ANNIHILATE, CREATE, FermionOperator, one_body_operator
from .integrals import SpinOrbitalIntegrals
from .pauli import PauliSum, QubitCountError, ground_energy, identity_sum

JORDAN_WIGNER = "jw"
BRAVYI_KITAEV = "bk"


class TaperingError(ValueError):
    pass


def hamiltonian_from_integrals(so: SpinOrbitalIntegrals) -> FermionOperator:
    """sum h_ij a+_i a_j + sum h_ijkl a+_i a+_j a_k a_l + constant."""
    h1, h2 = so.one_body, so.two_body
    if np.abs(h1 - h1.conj().T).max() > 1e-10:
        raise ValueError("one-body integrals are not Hermitian")
    op = one_body_operator(h1)
    n = so.n_modes
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    c = h2[i, j, k, l]
                    if abs(c) > 1e-14:
                        op += FermionOperator.from_term(
                            ((i, CREATE), (j, CREATE), (k, ANNIHILATE), (l, ANNIHILATE)),
                            c,
                        )
    op += FermionOperator.constant(so.constant)
    return op


def _letters(n_qubits: int, assignments: dict[int, str]) -> str:
    letters = ["I"] * n_qubits
    for q, letter in assignments.items():
        letters[q] = letter
    return "".join(letters)


def _mode_count(op: FermionOperator, n_modes: int | None) -> int:
    n = op.n_modes
    if n_modes is not None:
        if n_modes < n:
            raise ValueError(f"n_modes={n_modes} below operator's {n}")
        n = n_modes
    return n


def jordan_wigner(op: FermionOperator, n_modes: int | None = None) -> PauliSum:
    """a+_j -> (X_j - iY_j)/2 * Z_{j-1} ... Z_0 and the conjugate for a_j."""
    n = _mode_count(op, n_modes)
    out = PauliSum(n)
    for factors, coeff in op.terms.items():
        acc = identity_sum(n, coeff)
        for mode, action in factors:
            zs = {q: "Z" for q in range(mode)}
            x_part = PauliSum(n, [(0.5, _letters(n, {**zs, mode: "X"}))])
            y_sign = -0.5j if action == CREATE else 0.5j
            y_part = PauliSum(n, [(y_sign, _letters(n, {**zs, mode: "Y"}))])
            acc = acc @ (x_part + y_part)
        out = out + acc
    return out.simplify()


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _bk_sets(n_qubits: int):
    """Update / parity / flip index sets from the binary indexed tree.

    Node q (0-based) corresponds to 1-based tree index q+1 storing the
    occupation parity of the mode block (q+1 - lowbit(q+1), q+1].
    """
    assert n_qubits & (n_qubits - 1) == 0, "power-of-two mode count required"

    def lowbit(i):
        return i & (-i)

    update, parity, flip = [], [], []
    for j in range(n_qubits):
        u = []
        i = j + 1
        i += lowbit(i)
        while i <= n_qubits:
            u.append(i - 1)
            i += lowbit(i)
        update.append(sorted(u))

        p = []
        i = j
        while i > 0:
            p.append(i - 1)
            i -= lowbit(i)
        parity.append(sorted(p))

        f = []
        i = j + 1
        b = lowbit(i)
        k = 1
        while k < b:
            f.append(i - k - 1)
            k *= 2
        flip.append(sorted(f))
    return update, parity, flip


def bravyi_kitaev(op: FermionOperator, n_modes: int | None = None) -> PauliSum:
    """Bravyi-Kitaev encoding via Majorana components:

    a_j   = (c_j + i d_j)/2,  a+_j = (c_j - i d_j)/2
    c_j   = X_{U(j)} X_j Z_{P(j)}
    d_j   = X_{U(j)} Y_j Z_{R(j)},  R(j) = P(j) \\ F(j)
    """
    n = _next_pow2(_mode_count(op, n_modes))
    update, parity, flip = _bk_sets(n)
    out = PauliSum(n)
    for factors, coeff in op.terms.items():
        acc = identity_sum(n, coeff)
        for mode, action in factors:
            ups = {q: "X" for q in update[mode]}
            c_letters = _letters(n, {**ups, **{q: "Z" for q in parity[mode]}, mode: "X"})
            remainder = sorted(set(parity[mode]) - set(flip[mode]))
            d_letters = _letters(n, {**ups, **{q: "Z" for q in remainder}, mode: "Y"})
            sign = -0.5j if action == CREATE else 0.5j
            acc = acc @ PauliSum(n, [(0.5, c_letters), (sign, d_letters)])
        out = out + acc
    return out.simplify()


def encode(op: FermionOperator, encoding: str, n_modes: int | None = None) -> PauliSum:
    if encoding == JORDAN_WIGNER:
        return jordan_wigner(op, n_modes)
    if encoding == BRAVYI_KITAEV:
        return bravyi_kitaev(op, n_modes)
    raise ValueError(f"unknown encoding {encoding!r}")


def encoded_occupation_bits(occupations, encoding: str, n_qubits: int) -> np.ndarray:
    """Qubit bit values encoding a fermionic occupation-number vector."""
    occ = np.zeros(n_qubits, dtype=int)
    occ[: len(occupations)] = np.asarray(occupations, dtype=int)
    if encoding == JORDAN_WIGNER:
        return occ
    if encoding == BRAVYI_KITAEV:
        if n_qubits & (n_qubits - 1) != 0:
            raise ValueError("BK occupation bits need a power-of-two qubit count")
        bits = np.zeros(n_qubits, dtype=int)
        for q in range(n_qubits):
            i = q + 1
            low = i & (-i)
            bits[q] = occ[i - low : i].sum() % 2
        return bits
    raise ValueError(f"unknown encoding {encoding!r}")


def number_operator(n_modes: int, encoding: str) -> PauliSum:
    """Encoding of sum_j a+_j a_j."""
    op = FermionOperator()
    for j in range(n_modes):
        op += FermionOperator.from_term(((j, CREATE), (j, ANNIHILATE)), 1.0)
    return encode(op, encoding, n_modes)


def dipole_operator(so: SpinOrbitalIntegrals, encoding: str, axis: int = 2) -> PauliSum:
    """Encoding of the one-body operator built from dipole integrals."""
    return encode(one_body_operator(so.dipole[axis]), encoding, so.n_modes)


@dataclass(frozen=True)
class TaperingMap:
    """Removal plan for qubits that appear only as I or Z."""

    removed: tuple[int, ...]            # removed qubit indices, ascending
    sector: tuple[int, ...]             # +-1 eigenvalue per removed qubit
    keep: tuple[int, ...]               # surviving qubits, ascending

    @property
    def n_original(self) -> int:
        return len(self.removed) + len(self.keep)

    def reindex(self, q: int) -> int:
        return self.keep.index(q)


def z_only_qubits(s: PauliSum) -> list[int]:
    """Qubits that appear only as I or Z in every term of s."""
    bad = set()
    for term in s.terms:
        for q, letter in enumerate(term.letters):
            if letter in "XY":
                bad.add(q)
    return [q for q in range(s.n_qubits) if q not in bad]


def taper(s: PauliSum, sector, removed=None) -> tuple[PauliSum, TaperingMap]:
    """Replace Z letters on removable qubits by the sector eigenvalues and
    reindex the survivors.

    `sector` is one +-1 per removed qubit; `removed` defaults to every
    I/Z-only qubit of s.
    """
    if removed is None:
        removed = z_only_qubits(s)
    removed = sorted(removed)
    sector = tuple(int(v) for v in sector)
    if len(sector) != len(removed):
        raise TaperingError(
            f"sector length {len(sector)} != removed count {len(removed)}"
        )
    if any(v not in (-1, 1) for v in sector):
        raise TaperingError("sector eigenvalues must be +-1")
    removable = set(z_only_qubits(s))
    for q in removed:
        if q not in removable:
            raise TaperingError(f"qubit {q} has X/Y occurrences; not taperable")
    keep = tuple(q for q in range(s.n_qubits) if q not in removed)
    eig = dict(zip(removed, sector))

    out = PauliSum(len(keep))
    for term in s.terms:
        coeff = term.coefficient
        letters = []
        for q, letter in enumerate(term.letters):
            if q in eig:
                if letter == "Z":
                    coeff *= eig[q]
            else:
                letters.append(letter)
        out.add_term("".join(letters), coeff)
    return out.simplify(), TaperingMap(tuple(removed), sector, keep)


def select_sector(s: PauliSum, removed=None, tol: float = 1e-10):
    """Enumerate eigenvalue assignments and keep the one whose reduced ground
    energy matches the full ground energy."""
    if removed is None:
        removed = z_only_qubits(s)
    removed = sorted(removed)
    if not removed:
        return ()
    full = ground_energy(s)
    best = None
    for mask in range(2 ** len(removed)):
        sector = tuple(1 - 2 * ((mask >> k) & 1) for k in range(len(removed)))
        reduced, _ = taper(s, sector, removed)
        if abs(ground_energy(reduced) - full) < tol:
            best = sector
            break
    if best is None:
        raise TaperingError("no sector reproduces the full ground energy")
    return best


def taper_ground_sector(s: PauliSum) -> tuple[PauliSum, TaperingMap]:
    """Taper every I/Z-only qubit in the ground-state sector."""
    removed = z_only_qubits(s)
    sector = select_sector(s, removed)
    return taper(s, sector, removed)
