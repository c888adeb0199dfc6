"""Pauli-string algebra: weighted sums of N-qubit Pauli operators.

Letter strings are indexed by qubit (letters[0] acts on qubit 0) and qubit 0
is the least significant bit of a computational basis index. Terms with
|coefficient| < PRUNE_TOL are dropped during simplification, and term order
is lexicographic in the letter string.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRUNE_TOL = 1e-12

DENSE_QUBIT_CAP = 16

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-qubit products: (a, b) -> (phase, letter) with a*b = phase * letter.
_PRODUCT = {}
for _a in "IXYZ":
    _PRODUCT[("I", _a)] = (1.0, _a)
    _PRODUCT[(_a, "I")] = (1.0, _a)
    _PRODUCT[(_a, _a)] = (1.0, "I")
_PRODUCT[("X", "Y")] = (1j, "Z")
_PRODUCT[("Y", "X")] = (-1j, "Z")
_PRODUCT[("Y", "Z")] = (1j, "X")
_PRODUCT[("Z", "Y")] = (-1j, "X")
_PRODUCT[("Z", "X")] = (1j, "Y")
_PRODUCT[("X", "Z")] = (-1j, "Y")


class QubitCountError(ValueError):
    pass


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    letters: str

    def __post_init__(self):
        if any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"bad Pauli letters {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def __repr__(self):
        return f"PauliTerm({self.coefficient!r}, {self.letters!r})"


def pauli_product(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Single-term product with accumulated phase in {+-1, +-i}."""
    if a.n_qubits != b.n_qubits:
        raise QubitCountError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    phase = a.coefficient * b.coefficient
    letters = []
    for la, lb in zip(a.letters, b.letters):
        ph, letter = _PRODUCT[(la, lb)]
        phase *= ph
        letters.append(letter)
    return PauliTerm(phase, "".join(letters))


class PauliSum:
    """Canonically ordered sum of PauliTerms over a fixed qubit count."""

    def __init__(self, n_qubits: int, terms=None):
        self.n_qubits = int(n_qubits)
        self._terms: dict[str, complex] = {}
        if terms:
            for t in terms:
                if isinstance(t, PauliTerm):
                    coeff, letters = t.coefficient, t.letters
                else:
                    coeff, letters = t
                self.add_term(letters, coeff)

    def add_term(self, letters: str, coeff: complex) -> None:
        if len(letters) != self.n_qubits:
            raise QubitCountError(
                f"term on {len(letters)} qubits added to {self.n_qubits}-qubit sum"
            )
        self._terms[letters] = self._terms.get(letters, 0.0) + complex(coeff)

    @property
    def terms(self) -> list[PauliTerm]:
        """Terms in canonical (lexicographic) order, already merged."""
        return [
            PauliTerm(c, s) for s, c in sorted(self._terms.items()) if abs(c) > 0
        ]

    def coefficient(self, letters: str) -> complex:
        return self._terms.get(letters, 0.0)

    @property
    def letter_strings(self) -> set[str]:
        return {s for s, c in self._terms.items() if abs(c) > PRUNE_TOL}

    def simplify(self) -> "PauliSum":
        """Merge duplicates and prune coefficients below PRUNE_TOL."""
        out = PauliSum(self.n_qubits)
        for s, c in self._terms.items():
            if abs(c) > PRUNE_TOL:
                out._terms[s] = c
        return out

    def __len__(self):
        return len(self.simplify()._terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise QubitCountError("qubit-count mismatch in sum")
        out = PauliSum(self.n_qubits)
        out._terms = dict(self._terms)
        for s, c in other._terms.items():
            out._terms[s] = out._terms.get(s, 0.0) + c
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (other * -1.0)

    def __mul__(self, scalar) -> "PauliSum":
        out = PauliSum(self.n_qubits)
        out._terms = {s: c * scalar for s, c in self._terms.items()}
        return out

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise QubitCountError("qubit-count mismatch in product")
        out = PauliSum(self.n_qubits)
        for sa, ca in self._terms.items():
            for sb, cb in other._terms.items():
                t = pauli_product(PauliTerm(ca, sa), PauliTerm(cb, sb))
                out._terms[t.letters] = out._terms.get(t.letters, 0.0) + t.coefficient
        return out.simplify()

    def __repr__(self):
        parts = [f"({c:+.6g})*{s}" for s, c in sorted(self._terms.items())]
        return f"PauliSum[{self.n_qubits}]({' + '.join(parts) or '0'})"

    def is_real(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def max_abs_coeff_diff(self, other: "PauliSum") -> float:
        keys = set(self._terms) | set(other._terms)
        return max(
            (abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) for k in keys),
            default=0.0,
        )

    def abs_coeff_sum(self) -> float:
        """sum_P |h_P| over non-identity terms; drives sampling-cost bounds."""
        ident = "I" * self.n_qubits
        return float(sum(abs(c) for s, c in self._terms.items() if s != ident))


def sum_simplify(s: PauliSum) -> PauliSum:
    return s.simplify()


def identity_sum(n_qubits: int, coeff=1.0) -> PauliSum:
    return PauliSum(n_qubits, [(coeff, "I" * n_qubits)])


def to_dense_matrix(s: PauliSum) -> np.ndarray:
    """Kronecker-assembled 2^N x 2^N matrix; the exact-diagonalization oracle.

    With qubit 0 as the least significant bit, letters[q] enters the Kronecker
    product from the right.
    """
    if s.n_qubits > DENSE_QUBIT_CAP:
        raise QubitCountError(f"dense oracle capped at {DENSE_QUBIT_CAP} qubits")
    dim = 2**s.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for term in s.simplify().terms:
        mat = np.array([[1.0]], dtype=complex)
        for letter in reversed(term.letters):
            mat = np.kron(mat, _PAULI_MATS[letter])
        out += term.coefficient * mat
    return out


def ground_energy(s: PauliSum) -> float:
    """Lowest eigenvalue of the dense matrix (FCI oracle for Hamiltonians)."""
    return float(np.linalg.eigvalsh(to_dense_matrix(s))[0])


def format_pauli_sum(s: PauliSum) -> str:
    """Serialize to plain-text lines 'coeff L L L ...', letters per qubit,
    qubit 0 first."""
    lines = []
    for term in s.simplify().terms:
        c = term.coefficient
        coeff = repr(c.real) if abs(c.imag) <= PRUNE_TOL else repr(c)
        lines.append(f"{coeff} {' '.join(term.letters)}")
    return "\n".join(lines)


def parse_pauli_sum(text: str, n_qubits: int | None = None) -> PauliSum:
    """Inverse of format_pauli_sum."""
    entries = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        coeff = complex(parts[0])
        letters = "".join(parts[1:])
        entries.append((coeff, letters))
    if not entries:
        raise ValueError("no terms found")
    n = n_qubits if n_qubits is not None else len(entries[0][1])
    return PauliSum(n, entries)
