"""Dense statevector simulation of parameterized circuits.

Basis convention: qubit 0 is the least significant bit of a computational
basis index, and a statevector is a complex array whose last axis has length
2^N. All gate kernels broadcast over leading axes, which lets the optimizer
evaluate batches of parameter shifts in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .mappings import encoded_occupation_bits
from .pauli import PauliSum, PauliTerm

SIMULATOR_QUBIT_CAP = 16

ROTATION_KINDS = ("ry", "rz")


class NotAnObservableError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """kind in {x, h, ry, rz, cnot, cz, pauli}; rotations may carry a
    parameter slot (angle = sign * theta[slot]) or a fixed angle."""

    kind: str
    qubits: tuple[int, ...]
    slot: int | None = None
    angle: float = 0.0
    sign: float = 1.0
    term: PauliTerm | None = None


@dataclass(frozen=True)
class ParameterizedCircuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_slots: int = 0
    depth: int | None = None

    def __post_init__(self):
        for g in self.gates:
            if any(q >= self.n_qubits or q < 0 for q in g.qubits):
                raise ValueError(f"gate {g.kind} targets qubit outside 0..{self.n_qubits - 1}")
            if g.slot is not None and g.kind not in ROTATION_KINDS:
                raise ValueError(f"gate kind {g.kind!r} cannot carry a parameter slot")
        referenced = {g.slot for g in self.gates if g.slot is not None}
        if referenced and referenced != set(range(self.n_slots)):
            raise ValueError("every parameter slot must be referenced at least once")

    def then(self, other: "ParameterizedCircuit") -> "ParameterizedCircuit":
        """Concatenate; the second circuit's slots are shifted after ours."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit-count mismatch in concatenation")
        shifted = tuple(
            replace(g, slot=g.slot + self.n_slots) if g.slot is not None else g
            for g in other.gates
        )
        return ParameterizedCircuit(
            self.n_qubits, self.gates + shifted, self.n_slots + other.n_slots, self.depth
        )

    def inverse(self) -> "ParameterizedCircuit":
        """Reversed gates with negated rotation angles; slots are preserved."""
        gates = tuple(
            replace(g, angle=-g.angle, sign=-g.sign) if g.kind in ROTATION_KINDS else g
            for g in reversed(self.gates)
        )
        return ParameterizedCircuit(self.n_qubits, gates, self.n_slots, self.depth)


@lru_cache(maxsize=None)
def _indices(n_qubits: int, qubit: int):
    idx = np.arange(2**n_qubits)
    i0 = idx[(idx >> qubit) & 1 == 0]
    return i0, i0 + (1 << qubit)


@lru_cache(maxsize=None)
def _flip_perm(n_qubits: int, mask: int):
    return np.arange(2**n_qubits) ^ mask


def _term_tables(term_letters: str):
    """(xmask, phase) with P|b> = phase[b] |b ^ xmask> for the Pauli string."""
    n = len(term_letters)
    idx = np.arange(2**n)
    xmask = 0
    phase = np.ones(2**n, dtype=complex)
    for q, letter in enumerate(term_letters):
        bit = (idx >> q) & 1
        if letter == "Z":
            phase = phase * (1.0 - 2.0 * bit)
        elif letter == "X":
            xmask |= 1 << q
        elif letter == "Y":
            xmask |= 1 << q
            phase = phase * (1j - 2j * bit)
    return xmask, phase


def apply_pauli_term(psi: np.ndarray, term: PauliTerm) -> np.ndarray:
    """Apply coefficient * Pauli string to the last axis of psi."""
    xmask, phase = _term_tables(term.letters)
    n = term.n_qubits
    perm = _flip_perm(n, xmask)
    return term.coefficient * (phase[perm] * psi[..., perm])


def _apply_gate(psi: np.ndarray, gate: Gate, theta: np.ndarray | None) -> np.ndarray:
    n = int(np.log2(psi.shape[-1]))
    kind = gate.kind
    if kind == "x":
        return psi[..., _flip_perm(n, 1 << gate.qubits[0])]
    if kind == "h":
        i0, i1 = _indices(n, gate.qubits[0])
        out = np.empty_like(psi)
        r = 1.0 / np.sqrt(2.0)
        out[..., i0] = r * (psi[..., i0] + psi[..., i1])
        out[..., i1] = r * (psi[..., i0] - psi[..., i1])
        return out
    if kind in ROTATION_KINDS:
        if gate.slot is None:
            ang = np.asarray(gate.angle)
        else:
            ang = gate.sign * np.asarray(theta)[..., gate.slot]
        half = np.expand_dims(ang / 2.0, -1) if np.ndim(ang) else ang / 2.0
        i0, i1 = _indices(n, gate.qubits[0])
        out = np.empty_like(psi)
        if kind == "ry":
            c, s = np.cos(half), np.sin(half)
            out[..., i0] = c * psi[..., i0] - s * psi[..., i1]
            out[..., i1] = s * psi[..., i0] + c * psi[..., i1]
        else:
            out[..., i0] = np.exp(-1j * half) * psi[..., i0]
            out[..., i1] = np.exp(1j * half) * psi[..., i1]
        return out
    if kind == "cnot":
        c, t = gate.qubits
        idx = np.arange(psi.shape[-1])
        perm = np.where((idx >> c) & 1 == 1, idx ^ (1 << t), idx)
        return psi[..., perm]
    if kind == "cz":
        a, b = gate.qubits
        idx = np.arange(psi.shape[-1])
        sign = 1.0 - 2.0 * (((idx >> a) & 1) & ((idx >> b) & 1))
        return psi * sign
    if kind == "pauli":
        return apply_pauli_term(psi, gate.term)
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def zero_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def bind_and_run(
    circuit: ParameterizedCircuit,
    theta=None,
    input_state: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the bound circuit gate by gate; norm is preserved."""
    theta = np.asarray(theta if theta is not None else [], dtype=float)
    if theta.ndim == 0:
        theta = theta.reshape(1)
    if theta.shape[-1] != circuit.n_slots:
        raise ValueError(
            f"parameter vector length {theta.shape[-1]} != slot count {circuit.n_slots}"
        )
    psi = zero_state(circuit.n_qubits) if input_state is None else np.asarray(
        input_state, dtype=complex
    )
    for gate in circuit.gates:
        psi = _apply_gate(psi, gate, theta)
    return psi


def run_batch(
    circuit: ParameterizedCircuit, thetas: np.ndarray, input_state: np.ndarray | None = None
) -> np.ndarray:
    """Run one circuit over a (B, n_slots) batch of parameter vectors.

    `input_state` may be a single statevector (shared by the whole batch) or
    a (B, 2^N) array pairing one input with each parameter row.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    base = zero_state(circuit.n_qubits) if input_state is None else np.asarray(
        input_state, dtype=complex
    )
    if base.ndim == 1:
        psi = np.broadcast_to(base, thetas.shape[:-1] + base.shape).copy()
    else:
        if base.shape[:-1] != thetas.shape[:-1]:
            raise ValueError("batched input states must match the parameter batch")
        psi = base.copy()
    for gate in circuit.gates:
        psi = _apply_gate(psi, gate, thetas)
    return psi


def hf_reference_circuit(n_electrons: int, encoding: str, n_qubits: int) -> ParameterizedCircuit:
    """X gates preparing the encoded occupation of the n_electrons lowest
    spin orbitals."""
    if n_electrons > n_qubits:
        raise ValueError("more electrons than qubits")
    occ = [1] * n_electrons
    bits = encoded_occupation_bits(occ, encoding, n_qubits)
    gates = tuple(Gate("x", (int(q),)) for q in np.nonzero(bits)[0])
    return ParameterizedCircuit(n_qubits, gates, 0)


def reference_from_bits(bits) -> ParameterizedCircuit:
    """X gates placing an explicit bit pattern (used by tapered systems)."""
    bits = np.asarray(bits, dtype=int)
    gates = tuple(Gate("x", (int(q),)) for q in np.nonzero(bits)[0])
    return ParameterizedCircuit(len(bits), gates, 0)


def hea_ansatz(n_qubits: int, depth: int = 1) -> ParameterizedCircuit:
    """Hardware-efficient ansatz: depth blocks of per-qubit Ry, Rz rotations
    followed by a linear CZ entangling chain, plus a final rotation layer.

    Slot count is 2 * n_qubits * (depth + 1). The diagonal entangler leaves
    computational-basis reference states unchanged, so an all-zeros parameter
    vector reproduces the reference energy exactly.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    gates: list[Gate] = []
    slot = 0
    for _ in range(depth):
        for q in range(n_qubits):
            gates.append(Gate("ry", (q,), slot=slot)); slot += 1
            gates.append(Gate("rz", (q,), slot=slot)); slot += 1
        for q in range(n_qubits - 1):
            gates.append(Gate("cz", (q, q + 1)))
    for q in range(n_qubits):
        gates.append(Gate("ry", (q,), slot=slot)); slot += 1
        gates.append(Gate("rz", (q,), slot=slot)); slot += 1
    return ParameterizedCircuit(n_qubits, tuple(gates), slot, depth=depth)


def tapered_ansatz() -> ParameterizedCircuit:
    """Two-qubit single-parameter circuit for the tapered bond-length
    Hamiltonian: Ry on qubit 1 entangled into qubit 0, spanning the
    {|01>, |10>} subspace that holds the ground state."""
    gates = (Gate("ry", (1,), slot=0), Gate("cnot", (1, 0)))
    return ParameterizedCircuit(2, gates, 1, depth=1)


def expectation(obs: PauliSum, psi: np.ndarray) -> float:
    """Exact <psi| obs |psi> as sum_P h_P <psi|P|psi>, canonical term order."""
    if not obs.is_real():
        raise NotAnObservableError("observable has complex coefficients")
    total = 0.0
    for term in obs.terms:
        xmask, phase = _term_tables(term.letters)
        perm = _flip_perm(obs.n_qubits, xmask)
        val = np.sum(np.conj(psi) * (phase[perm] * psi[..., perm]), axis=-1)
        total = total + term.coefficient.real * val.real
    return float(total) if np.ndim(total) == 0 else total


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def _rotate_to_z_basis(psi: np.ndarray, letters: str) -> np.ndarray:
    """Map each X/Y letter's measurement basis onto the computational basis."""
    n = len(letters)
    for q, letter in enumerate(letters):
        if letter not in "XY":
            continue
        i0, i1 = _indices(n, q)
        if letter == "Y":  # apply S-dagger first
            psi = psi.copy()
            psi[..., i1] = -1j * psi[..., i1]
        out = np.empty_like(psi)
        r = 1.0 / np.sqrt(2.0)
        out[..., i0] = r * (psi[..., i0] + psi[..., i1])
        out[..., i1] = r * (psi[..., i0] - psi[..., i1])
        psi = out
    return psi


@lru_cache(maxsize=None)
def _parity_signs(n_qubits: int, support_mask: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    pops = np.bitwise_count(idx & support_mask)
    return 1.0 - 2.0 * (pops % 2)


def sampled_expectation(
    obs: PauliSum,
    circuit: ParameterizedCircuit,
    theta,
    shots: int,
    seed: int,
) -> float:
    """Shot-based estimate: per-Pauli basis rotation, bitstring sampling, and
    the parity estimator sum_x (-1)^{sum_j x_j} P(x).

    Each non-identity term draws `shots` samples from its own counter-based
    stream (seed, term index), so results are reproducible bit for bit.
    """
    if not obs.is_real():
        raise NotAnObservableError("observable has complex coefficients")
    psi = bind_and_run(circuit, theta)
    total = 0.0
    ident = "I" * obs.n_qubits
    for t_index, term in enumerate(obs.terms):
        if term.letters == ident:
            total += term.coefficient.real
            continue
        rotated = _rotate_to_z_basis(psi, term.letters)
        probs = np.abs(rotated) ** 2
        probs = probs / probs.sum()
        rng = np.random.default_rng([seed, t_index])
        counts = rng.multinomial(shots, probs)
        support = 0
        for q, letter in enumerate(term.letters):
            if letter != "I":
                support |= 1 << q
        signs = _parity_signs(obs.n_qubits, support)
        total += term.coefficient.real * float(counts @ signs) / shots
    return total


def overlap_probability(
    circuit1: ParameterizedCircuit,
    theta1,
    circuit2: ParameterizedCircuit,
    theta2,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """|<0| U1^dag U2 |0>|^2 = |<psi1|psi2>|^2.

    Exact path computes the amplitude directly; the sampled path runs the
    concatenated circuit U1^dag U2 and counts all-zeros outcomes.
    """
    if circuit1.n_qubits != circuit2.n_qubits:
        raise ValueError("qubit-count mismatch")
    if shots is None:
        psi1 = bind_and_run(circuit1, theta1)
        psi2 = bind_and_run(circuit2, theta2)
        return float(np.abs(np.vdot(psi1, psi2)) ** 2)
    psi = bind_and_run(circuit2, theta2)
    psi = bind_and_run(circuit1.inverse(), theta1, input_state=psi)
    probs = np.abs(psi) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng([seed, 0])
    counts = rng.multinomial(shots, probs)
    return float(counts[0]) / shots


class Engine:
    """Expectation-value backend: exact statevector or seeded shot sampling."""

    def __init__(self, kind: str = "exact", shots: int | None = None, seed: int = 0):
        if kind not in ("exact", "sampled"):
            raise ValueError(f"unknown engine kind {kind!r}")
        if kind == "sampled" and not shots:
            raise ValueError("sampled engine requires a shot count")
        self.kind = kind
        self.shots = shots
        self.seed = seed
        self._counter = 0

    def child(self, tag: int) -> "Engine":
        """Independent engine with a derived seed (deterministic per tag)."""
        derived = int(np.random.SeedSequence([self.seed, tag]).generate_state(1)[0])
        return Engine(self.kind, self.shots, derived)

    def energy(self, obs: PauliSum, circuit: ParameterizedCircuit, theta) -> float:
        if self.kind == "exact":
            return expectation(obs, bind_and_run(circuit, theta))
        self._counter += 1
        derived = int(
            np.random.SeedSequence([self.seed, self._counter]).generate_state(1)[0]
        )
        return sampled_expectation(obs, circuit, theta, self.shots, derived)

    @property
    def expectation_tol(self) -> float:
        """Acceptance window for eigenvalue-style checks (e.g. particle count)."""
        return 1e-3 if self.kind == "exact" else 0.05


EXACT_ENGINE = Engine("exact")
