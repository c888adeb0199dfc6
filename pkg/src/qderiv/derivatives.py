"""Energy derivatives with respect to system parameters (geometry, field).

The Hamiltonian family maps named parameters to a PauliSum through the full
integrals -> operators -> encoding pipeline, with any tapering map frozen so
states at neighboring parameter values live in the same qubit space. Operator
derivatives are central differences applied coefficient-wise; energy
derivatives follow the Hellmann-Feynman route for first order and the
I + J split for second order, where the J term differences the optimized
state itself via one extra warm-started VQE run.
"""
from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .mappings import TaperingMap, taper
from .pauli import PauliSum
from .simulator import (
    Engine,
    EXACT_ENGINE,
    ParameterizedCircuit,
    apply_pauli_term,
    bind_and_run,
)
from .vqe import (
    OptimizerConfig,
    UnconvergedWarning,
    newton_polish,
    vqe_minimize,
    _full_gradient,
    _EnergyModel,
)

NUCLEAR_COORDINATE = "nuclear-coordinate"
FIELD_COMPONENT = "field-component"

DEFAULT_GEOMETRY_STEP = 1e-3   # Angstrom
DEFAULT_FIELD_STEP = 1e-3      # a.u.
DEFAULT_STATE_STEP = 1e-3      # d-eta for the J term


class StaleStateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SystemParameters:
    """Ordered, uniquely named parameter values.

    Each entry is (name, kind, value, unit); kinds are nuclear-coordinate
    (Angstrom) and field-component (a.u.).
    """

    entries: tuple[tuple[str, str, float, str], ...]

    def __post_init__(self):
        names = [e[0] for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        for name, kind, value, _ in self.entries:
            if kind not in (NUCLEAR_COORDINATE, FIELD_COMPONENT):
                raise ValueError(f"unknown parameter kind {kind!r} for {name}")
            if not np.isfinite(value):
                raise ValueError(f"non-finite value for parameter {name}")

    @classmethod
    def build(cls, **values) -> "SystemParameters":
        """Geometry parameters by default; names starting with 'F' are fields."""
        entries = []
        for name, value in values.items():
            if name.startswith("F"):
                entries.append((name, FIELD_COMPONENT, float(value), "au"))
            else:
                entries.append((name, NUCLEAR_COORDINATE, float(value), "angstrom"))
        return cls(tuple(entries))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e[0] for e in self.entries)

    def kind(self, name: str) -> str:
        return self.entries[self._index(name)][1]

    def unit(self, name: str) -> str:
        return self.entries[self._index(name)][3]

    def _index(self, name: str) -> int:
        for i, e in enumerate(self.entries):
            if e[0] == name:
                return i
        raise KeyError(name)

    def __getitem__(self, name: str) -> float:
        return self.entries[self._index(name)][2]

    def value_dict(self) -> dict[str, float]:
        return {e[0]: e[2] for e in self.entries}

    def with_value(self, name: str, value: float) -> "SystemParameters":
        i = self._index(name)
        entries = list(self.entries)
        entries[i] = (entries[i][0], entries[i][1], float(value), entries[i][3])
        return SystemParameters(tuple(entries))

    def shifted(self, name: str, delta: float) -> "SystemParameters":
        return self.with_value(name, self[name] + delta)

    def key(self) -> tuple:
        return tuple((e[0], e[2]) for e in self.entries)


class HamiltonianFamily:
    """Deterministic builder from SystemParameters to a PauliSum.

    An optional tapering map, fixed at construction, is applied identically at
    every parameter value so differenced operators stay comparable. Built
    operators are memoized on exact parameter values.
    """

    def __init__(
        self,
        builder,
        base: SystemParameters,
        taper_map: TaperingMap | None = None,
        cache_size: int = 256,
    ):
        self._builder = builder
        self.base = base
        self.taper_map = taper_map
        self._cache: OrderedDict[tuple, PauliSum] = OrderedDict()
        self._cache_size = cache_size

    def build(self, params: SystemParameters | None = None) -> PauliSum:
        params = params if params is not None else self.base
        key = params.key()
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        h = self._builder(params)
        if self.taper_map is not None:
            h, _ = taper(h, self.taper_map.sector, self.taper_map.removed)
        self._cache[key] = h
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return h

    @property
    def n_qubits(self) -> int:
        return self.build(self.base).n_qubits


def default_step(params: SystemParameters, name: str) -> float:
    return (
        DEFAULT_GEOMETRY_STEP
        if params.kind(name) == NUCLEAR_COORDINATE
        else DEFAULT_FIELD_STEP
    )


def dH(
    family: HamiltonianFamily,
    params: SystemParameters,
    name: str,
    step: float | None = None,
) -> PauliSum:
    """Central-difference operator derivative (H(eta+h) - H(eta-h)) / 2h,
    coefficient-wise on the canonical term union."""
    h = step if step is not None else default_step(params, name)
    if h <= 0:
        raise ValueError("step must be positive")
    plus = family.build(params.shifted(name, h))
    minus = family.build(params.shifted(name, -h))
    return ((plus - minus) * (0.5 / h)).simplify()


def d2H(
    family: HamiltonianFamily,
    params: SystemParameters,
    name_i: str,
    name_j: str,
    step: float | None = None,
) -> PauliSum:
    """Second operator derivative: three-point diagonal stencil or the
    four-point cross stencil for mixed pairs."""
    h = step if step is not None else default_step(params, name_i)
    if h <= 0:
        raise ValueError("step must be positive")
    if name_i == name_j:
        plus = family.build(params.shifted(name_i, h))
        minus = family.build(params.shifted(name_i, -h))
        center = family.build(params)
        return ((plus - 2.0 * center + minus) * (1.0 / h**2)).simplify()
    pp = family.build(params.shifted(name_i, h).shifted(name_j, h))
    pm = family.build(params.shifted(name_i, h).shifted(name_j, -h))
    mp = family.build(params.shifted(name_i, -h).shifted(name_j, h))
    mm = family.build(params.shifted(name_i, -h).shifted(name_j, -h))
    return ((pp - pm - mp + mm) * (1.0 / (4.0 * h**2))).simplify()


@dataclass
class OptimizedState:
    """A variationally optimized state: preparation circuit plus parameters."""

    circuit: ParameterizedCircuit
    theta: np.ndarray

    def statevector(self) -> np.ndarray:
        return bind_and_run(self.circuit, self.theta)


def _check_stale(
    family: HamiltonianFamily,
    params: SystemParameters,
    state: OptimizedState,
    engine: Engine,
    tol: float = 1e-3,
) -> None:
    if engine.kind != "exact" or state.circuit.n_slots == 0:
        return
    model = _EnergyModel(family.build(params), state.circuit, engine)
    grad = _full_gradient(model, np.asarray(state.theta, dtype=float), math.pi / 2)
    gnorm = float(np.linalg.norm(grad))
    if gnorm > tol:
        warnings.warn(
            f"state is not stationary at eta (|grad| = {gnorm:.2e}); "
            "Hellmann-Feynman values may be unreliable",
            StaleStateWarning,
            stacklevel=3,
        )


def first_order(
    family: HamiltonianFamily,
    params: SystemParameters,
    state: OptimizedState,
    name: str,
    step: float | None = None,
    engine: Engine = EXACT_ENGINE,
    check_stale: bool = True,
) -> float:
    """Hellmann-Feynman first derivative <psi(theta*)| dH/d eta_i |psi(theta*)>.

    Valid for any variationally stationary state, including the filtered
    subspace-search excited states.
    """
    if check_stale:
        _check_stale(family, params, state, engine)
    op = dH(family, params, name, step)
    return engine.energy(op, state.circuit, state.theta)


def matrix_element_real(
    op: PauliSum,
    state1: OptimizedState,
    state2: OptimizedState,
    engine: Engine = EXACT_ENGINE,
) -> float:
    """Re <psi1| op |psi2> for a real-coefficient operator.

    Exact path evaluates the statevector inner product directly. The sampled
    path estimates each |<0|U1^dag P U2|0>|^2 by counting all-zeros outcomes
    of the concatenated circuit and assigns the sign of the exact matrix
    element (real-amplitude convention: the overlap probe fixes magnitudes
    only, so signs come from the simulator and are cross-validated against
    the exact path in the test suite).
    """
    if not op.is_real():
        raise ValueError("operator must have real coefficients")
    psi1 = state1.statevector()
    psi2 = state2.statevector()
    if engine.kind == "exact":
        acc = np.zeros_like(psi2)
        for term in op.terms:
            acc = acc + apply_pauli_term(psi2, term)
        return float(np.vdot(psi1, acc).real)

    from .simulator import Gate, overlap_probability
    from .pauli import PauliTerm

    n = state2.circuit.n_qubits
    total = 0.0
    for t_index, term in enumerate(op.terms):
        exact_val = float(np.vdot(psi1, apply_pauli_term(psi2, _unit(term))).real)
        probe = ParameterizedCircuit(
            n, (Gate("pauli", tuple(range(n)), term=PauliTerm(1.0, term.letters)),), 0
        )
        prob = overlap_probability(
            state1.circuit,
            state1.theta,
            state2.circuit.then(probe),
            state2.theta,
            shots=engine.shots,
            seed=int(np.random.SeedSequence([engine.seed, t_index]).generate_state(1)[0]),
        )
        magnitude = abs(term.coefficient.real) * math.sqrt(max(prob, 0.0))
        total += math.copysign(magnitude, exact_val * term.coefficient.real)
    return total


def _unit(term):
    from .pauli import PauliTerm

    return PauliTerm(1.0, term.letters)


def second_order(
    family: HamiltonianFamily,
    params: SystemParameters,
    state: OptimizedState,
    name_i: str,
    name_j: str,
    step: float | None = None,
    d_eta: float = DEFAULT_STATE_STEP,
    opt: OptimizerConfig | None = None,
    engine: Engine = EXACT_ENGINE,
) -> float:
    """Second energy derivative as I + J:

    I = <psi| d2H/(d eta_i d eta_j) |psi>
    J = (2/d_eta) Re[ <psi| dH/d eta_j |psi_shifted> - <psi| dH/d eta_j |psi> ]

    where |psi_shifted> comes from one additional VQE optimization at
    eta + d_eta e_i, warm-started from theta* through the state's own
    preparation circuit. The J term divides by d_eta, so the warm-started run
    defaults to a near-machine energy tolerance.
    """
    if d_eta <= 0:
        raise ValueError("d_eta must be positive")
    op_i = d2H(family, params, name_i, name_j, step)
    term_i = engine.energy(op_i, state.circuit, state.theta)

    op_j = dH(family, params, name_j, step)
    j2 = engine.energy(op_j, state.circuit, state.theta)

    h_shifted = family.build(params.shifted(name_i, d_eta))
    opt = opt or OptimizerConfig(learning_rate=0.2, max_iterations=600, energy_tol=1e-14)
    result = vqe_minimize(
        h_shifted, state.circuit, None, opt=opt, engine=engine, theta0=state.theta
    )
    if not result.converged:
        warnings.warn(
            f"shifted-state optimization at {name_i} + {d_eta:g} did not converge",
            UnconvergedWarning,
            stacklevel=2,
        )
    theta_shifted = result.theta
    if engine.kind == "exact":
        # The J term divides the state difference by d_eta, amplifying any
        # optimizer residue a thousandfold; polish to machine stationarity.
        theta_shifted, _ = newton_polish(h_shifted, state.circuit, theta_shifted, engine)
    shifted_state = OptimizedState(state.circuit, theta_shifted)

    j1 = matrix_element_real(op_j, state, shifted_state, engine)
    return term_i + (2.0 / d_eta) * (j1 - j2)


def cost_estimate(h: PauliSum, n_eta: int, epsilon: float, order: int = 1) -> int:
    """Measurement-count scaling n^4 N_eta^order (sum_P |h_P|)^2 / eps^2.

    A planning figure (n = spin-orbital count, taken from the qubit count);
    it never controls simulator shot counts.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    n = h.n_qubits
    return int(math.ceil(n**4 * n_eta**order * h.abs_coeff_sum() ** 2 / epsilon**2))


@dataclass
class DerivativeReport:
    """First/second derivative values with the method metadata needed to
    reproduce them."""

    state_index: int
    first: dict = field(default_factory=dict)     # name -> value
    second: dict = field(default_factory=dict)    # (name_i, name_j) -> value
    units: dict = field(default_factory=dict)     # name -> unit string
    steps: dict = field(default_factory=dict)     # name -> finite-difference step
    d_eta: float = DEFAULT_STATE_STEP
    engine_kind: str = "exact"
    shots: int | None = None
    seed: int | None = None
    notes: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"state_index={self.state_index}", f"engine={self.engine_kind}"]
        if self.shots is not None:
            lines.append(f"shots={self.shots}")
        if self.seed is not None:
            lines.append(f"seed={self.seed}")
        lines.append(f"d_eta={self.d_eta!r}")
        for name, value in self.first.items():
            unit = self.units.get(name, "")
            lines.append(f"dE/d{name}={value!r} Ha/{unit}")
        for (ni, nj), value in self.second.items():
            ui, uj = self.units.get(ni, ""), self.units.get(nj, "")
            lines.append(f"d2E/d{ni}d{nj}={value!r} Ha/({ui}*{uj})")
        for name, h in self.steps.items():
            lines.append(f"step_{name}={h!r}")
        for note in self.notes:
            lines.append(f"note={note}")
        return "\n".join(lines)


def derivative_report(
    family: HamiltonianFamily,
    params: SystemParameters,
    state: OptimizedState,
    names=None,
    orders=(1,),
    step: float | None = None,
    d_eta: float = DEFAULT_STATE_STEP,
    engine: Engine = EXACT_ENGINE,
    state_index: int = 0,
    opt: OptimizerConfig | None = None,
) -> DerivativeReport:
    """Evaluate the requested derivatives for every named parameter."""
    names = list(names) if names is not None else list(params.names)
    report = DerivativeReport(
        state_index=state_index,
        d_eta=d_eta,
        engine_kind=engine.kind,
        shots=engine.shots,
        seed=engine.seed if engine.kind == "sampled" else None,
    )
    for name in names:
        h = step if step is not None else default_step(params, name)
        report.steps[name] = h
        report.units[name] = params.unit(name)
        report.first[name] = first_order(family, params, state, name, h, engine)
    if 2 in orders:
        for a in range(len(names)):
            for b in range(a, len(names)):
                val = second_order(
                    family,
                    params,
                    state,
                    names[a],
                    names[b],
                    step,
                    d_eta,
                    opt=opt,
                    engine=engine,
                )
                report.second[(names[a], names[b])] = val
    return report
