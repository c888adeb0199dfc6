"""Variational minimization: parameter-shift derivatives in circuit space,
gradient-descent and SPSA optimizers, and the weighted subspace-search
solver for excited states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum
from .simulator import (
    Engine,
    EXACT_ENGINE,
    Gate,
    ParameterizedCircuit,
    ROTATION_KINDS,
    basis_state,
    bind_and_run,
    expectation,
    run_batch,
)


class UnconvergedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "gradient-descent"        # or "spsa"
    learning_rate: float = 0.1
    shift: float = math.pi / 2
    max_iterations: int = 2000
    energy_tol: float = 1e-7
    tol_window: int = 5
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_stability: float = 10.0
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gradient-descent", "spsa"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0 < self.shift < math.pi:
            raise ValueError("shift must lie in (0, pi)")
        if self.energy_tol <= 0:
            raise ValueError("energy tolerance must be positive")


@dataclass
class VQEResult:
    theta: np.ndarray
    energy: float
    trace: list                 # (theta copy, energy) per iteration
    converged: bool
    evaluations: int

    def __post_init__(self):
        if self.trace:
            assert self.energy <= min(e for _, e in self.trace) + 1e-12


class _EnergyModel:
    """Batched energy evaluator for one circuit/observable pair.

    The exact path runs shifted parameter vectors through the simulator in a
    single batch and contracts against a precomputed dense observable when
    the register is small; the sampled path defers to the engine one vector
    at a time.
    """

    DENSE_LIMIT = 10

    def __init__(self, obs: PauliSum, circuit: ParameterizedCircuit, engine: Engine):
        if not obs.is_real():
            raise ValueError("observable must have real coefficients")
        self.obs = obs
        self.circuit = circuit
        self.engine = engine
        self.evaluations = 0
        self._dense = None
        if engine.kind == "exact" and obs.n_qubits <= self.DENSE_LIMIT:
            from .pauli import to_dense_matrix

            self._dense = to_dense_matrix(obs)

    def _exact_values(self, psi: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return np.einsum("...i,ij,...j->...", np.conj(psi), self._dense, psi).real
        return np.asarray(expectation(self.obs, psi))

    def single(self, theta: np.ndarray) -> float:
        self.evaluations += 1
        if self.engine.kind == "exact":
            psi = bind_and_run(self.circuit, theta)
            return float(self._exact_values(psi))
        return self.engine.energy(self.obs, self.circuit, theta)

    def batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        self.evaluations += thetas.shape[0]
        if self.engine.kind == "exact":
            psi = run_batch(self.circuit, thetas)
            return np.atleast_1d(self._exact_values(psi))
        return np.array([self.engine.energy(self.obs, self.circuit, t) for t in thetas])


def _check_slot(circuit: ParameterizedCircuit, j: int) -> None:
    if not 0 <= j < circuit.n_slots:
        raise IndexError(f"slot {j} out of range for {circuit.n_slots} slots")
    kinds = {g.kind for g in circuit.gates if g.slot == j}
    if not kinds <= set(ROTATION_KINDS):
        raise ValueError(f"slot {j} is not carried by a rotation gate")


def parameter_shift_gradient(
    circuit: ParameterizedCircuit,
    theta,
    obs: PauliSum,
    j: int,
    shift: float = math.pi / 2,
    engine: Engine = EXACT_ENGINE,
) -> float:
    """(<H>_{theta_j+s} - <H>_{theta_j-s}) / (2 sin s); exact at s = pi/2
    for gates generated by half Pauli rotations."""
    _check_slot(circuit, j)
    theta = np.asarray(theta, dtype=float)
    model = _EnergyModel(obs, circuit, engine)
    shifts = np.zeros((2, theta.size))
    shifts[0, j], shifts[1, j] = shift, -shift
    e_plus, e_minus = model.batch(theta + shifts)
    return float((e_plus - e_minus) / (2.0 * math.sin(shift)))


def parameter_shift_hessian(
    circuit: ParameterizedCircuit,
    theta,
    obs: PauliSum,
    i: int,
    j: int,
    shift1: float = math.pi / 2,
    shift2: float = math.pi / 2,
    engine: Engine = EXACT_ENGINE,
) -> float:
    """Four-point double-shift rule; shifts add when i == j, reducing to the
    diagonal double-shift value."""
    _check_slot(circuit, i)
    _check_slot(circuit, j)
    theta = np.asarray(theta, dtype=float)
    model = _EnergyModel(obs, circuit, engine)
    combos = []
    for s1 in (shift1, -shift1):
        for s2 in (shift2, -shift2):
            d = np.zeros(theta.size)
            d[i] += s1
            d[j] += s2
            combos.append(theta + d)
    e_pp, e_pm, e_mp, e_mm = model.batch(np.array(combos))
    return float(
        (e_pp - e_pm - e_mp + e_mm) / (4.0 * math.sin(shift1) * math.sin(shift2))
    )


def _full_gradient(model: _EnergyModel, theta: np.ndarray, shift: float) -> np.ndarray:
    k = theta.size
    shifts = np.zeros((2 * k, k))
    shifts[np.arange(k), np.arange(k)] = shift
    shifts[k + np.arange(k), np.arange(k)] = -shift
    energies = model.batch(theta + shifts)
    return (energies[:k] - energies[k:]) / (2.0 * math.sin(shift))


def _converged(energies: list, tol: float, window: int) -> bool:
    if len(energies) < window + 1:
        return False
    recent = energies[-(window + 1):]
    return all(abs(recent[t + 1] - recent[t]) < tol for t in range(window))


def polish_cost(batch_cost, theta, max_iterations: int = 8, gtol: float = 1e-11):
    """Drive an already-optimized parameter vector to machine stationarity.

    Damped Newton steps on the parameter-shift gradient/Hessian of an
    arbitrary batched cost, with the pseudo-inverse absorbing the flat
    directions of over-parameterized ansaetze. Used where a derivative
    formula divides by a small step and gradient descent's energy-window
    stopping leaves too much residue.
    """
    theta = np.asarray(theta, dtype=float).copy()
    k = theta.size
    shift = math.pi / 2
    value = float(batch_cost(theta[None, :])[0])

    def gradient(th):
        shifts = np.zeros((2 * k, k))
        shifts[np.arange(k), np.arange(k)] = shift
        shifts[k + np.arange(k), np.arange(k)] = -shift
        vals = batch_cost(th + shifts)
        return (vals[:k] - vals[k:]) / (2.0 * math.sin(shift))

    def hessian(th):
        pairs = [(i, j) for i in range(k) for j in range(i, k)]
        combos = np.empty((4 * len(pairs), k))
        row = 0
        for i, j in pairs:
            for s1 in (shift, -shift):
                for s2 in (shift, -shift):
                    combos[row] = th
                    combos[row, i] += s1
                    combos[row, j] += s2
                    row += 1
        vals = batch_cost(combos).reshape(len(pairs), 4)
        hess = np.zeros((k, k))
        denom = 4.0 * math.sin(shift) ** 2
        for (i, j), (pp, pm, mp, mm) in zip(pairs, vals):
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / denom
        return hess

    for _ in range(max_iterations):
        grad = gradient(theta)
        if float(np.max(np.abs(grad))) < gtol:
            break
        step = np.linalg.pinv(hessian(theta), rcond=1e-10, hermitian=True) @ grad
        scale = 1.0
        for _ in range(8):
            cand = theta - scale * step
            v_cand = float(batch_cost(cand[None, :])[0])
            if v_cand <= value + 1e-15:
                theta, value = cand, v_cand
                break
            scale *= 0.5
        else:
            break
    return theta, value


def refine_cost(batch_cost, theta, gtol: float = 1e-10, max_iterations: int = 3000):
    """Quasi-Newton (BFGS) minimization of a batched cost, with the gradient
    from parameter-shift evaluations. Scales to wide ansaetze where explicit
    Newton Hessians are too expensive; seeks minima, so do not use it where a
    saddle of the cost is the intended target."""
    from scipy.optimize import minimize as _scipy_minimize

    theta = np.asarray(theta, dtype=float)
    k = theta.size
    shift = math.pi / 2
    shifts = np.zeros((2 * k, k))
    shifts[np.arange(k), np.arange(k)] = shift
    shifts[k + np.arange(k), np.arange(k)] = -shift

    def fun(th):
        return float(batch_cost(th[None, :])[0])

    def jac(th):
        vals = batch_cost(th + shifts)
        return (vals[:k] - vals[k:]) / (2.0 * math.sin(shift))

    result = _scipy_minimize(
        fun, theta, jac=jac, method="BFGS",
        options={"maxiter": max_iterations, "gtol": gtol},
    )
    out = np.asarray(result.x, dtype=float)
    value = float(result.fun)
    if value > fun(theta):
        return theta.copy(), fun(theta)
    return out, value


def newton_polish(
    obs: PauliSum,
    circuit: ParameterizedCircuit,
    theta,
    engine: Engine = EXACT_ENGINE,
    gtol: float = 1e-10,
):
    """Refine an optimized energy to machine stationarity (minimum-seeking)."""
    model = _EnergyModel(obs, circuit, engine)
    return refine_cost(model.batch, theta, gtol)


def descend_to_minimum(
    batch_cost,
    theta,
    max_escapes: int = 12,
    kick: float = 0.35,
    curvature_tol: float = 1e-7,
):
    """Walk the stationary-point network downhill to a local minimum.

    Newton polish converges to the nearest stationary point, which for these
    layered ansaetze is frequently a saddle (the reference configuration is
    one). Whenever the polished point has a direction of negative curvature,
    step along that eigenvector (both signs, keeping the better), re-polish,
    and repeat until the Hessian is non-negative. Fully deterministic.
    """
    theta = np.asarray(theta, dtype=float).copy()
    k = theta.size
    shift = math.pi / 2

    def hessian(th):
        pairs = [(i, j) for i in range(k) for j in range(i, k)]
        combos = np.empty((4 * len(pairs), k))
        row = 0
        for i, j in pairs:
            for s1 in (shift, -shift):
                for s2 in (shift, -shift):
                    combos[row] = th
                    combos[row, i] += s1
                    combos[row, j] += s2
                    row += 1
        vals = batch_cost(combos).reshape(len(pairs), 4)
        hess = np.zeros((k, k))
        denom = 4.0 * math.sin(shift) ** 2
        for (i, j), (pp, pm, mp, mm) in zip(pairs, vals):
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / denom
        return hess

    theta, value = polish_cost(batch_cost, theta)
    for _ in range(max_escapes):
        evals, evecs = np.linalg.eigh(hessian(theta))
        if evals[0] > -curvature_tol:
            break
        direction = evecs[:, 0]
        candidates = []
        for sign in (1.0, -1.0):
            cand, v = polish_cost(batch_cost, theta + sign * kick * direction)
            candidates.append((v, cand))
        v_new, theta_new = min(candidates, key=lambda t: t[0])
        if v_new >= value - 1e-14:
            break
        theta, value = theta_new, v_new
    return theta, value


def vqe_minimize(
    obs: PauliSum,
    ansatz: ParameterizedCircuit,
    reference: ParameterizedCircuit | None = None,
    opt: OptimizerConfig | None = None,
    engine: Engine = EXACT_ENGINE,
    theta0=None,
) -> VQEResult:
    """Minimize <psi(theta)|obs|psi(theta)> over the ansatz parameters.

    The reported energy is the best value seen along the trace, which keeps
    the variational bound E* >= lambda_min(obs) on the exact engine. An
    exhausted iteration budget yields converged=False, not an exception.
    """
    opt = opt or OptimizerConfig()
    circuit = reference.then(ansatz) if reference is not None else ansatz
    if circuit.n_slots < 1:
        raise ValueError("ansatz must expose at least one parameter slot")
    model = _EnergyModel(obs, circuit, engine)
    theta = (
        np.zeros(circuit.n_slots)
        if theta0 is None
        else np.asarray(theta0, dtype=float).copy()
    )

    trace = []
    energies = []
    if opt.kind == "gradient-descent":
        for _ in range(opt.max_iterations):
            grad = _full_gradient(model, theta, opt.shift)
            theta = theta - opt.learning_rate * grad
            e = model.single(theta)
            trace.append((theta.copy(), e))
            energies.append(e)
            if _converged(energies, opt.energy_tol, opt.tol_window):
                break
    else:
        rng = np.random.default_rng(opt.seed)
        for k in range(opt.max_iterations):
            a_k = opt.spsa_a / (k + 1 + opt.spsa_stability) ** opt.spsa_alpha
            c_k = opt.spsa_c / (k + 1) ** opt.spsa_gamma
            delta = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
            e_plus, e_minus = model.batch(
                np.stack([theta + c_k * delta, theta - c_k * delta])
            )
            ghat = (e_plus - e_minus) / (2.0 * c_k) * delta
            theta = theta - a_k * ghat
            e = model.single(theta)
            trace.append((theta.copy(), e))
            energies.append(e)
            if _converged(energies, opt.energy_tol, opt.tol_window):
                break

    converged = _converged(energies, opt.energy_tol, opt.tol_window)
    best_theta, best_e = min(trace, key=lambda te: te[1])
    return VQEResult(
        theta=best_theta.copy(),
        energy=float(best_e),
        trace=trace,
        converged=converged,
        evaluations=model.evaluations,
    )


@dataclass(frozen=True)
class SSVQEConfig:
    """Weighted subspace search over k mutually orthogonal basis inputs."""

    k: int
    weights: tuple[float, ...] = ()
    initial_states: tuple[int, ...] = ()   # computational-basis indices
    repeats: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        weights = self.weights or tuple(0.5**i for i in range(self.k))
        if len(weights) != self.k:
            raise ValueError("need one weight per state")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if any(weights[i] <= weights[i + 1] for i in range(self.k - 1)):
            raise ValueError("weights must be strictly decreasing")
        object.__setattr__(self, "weights", tuple(weights))
        states = self.initial_states or tuple(range(self.k))
        if len(set(states)) != self.k:
            raise ValueError("initial basis states must be pairwise orthogonal")
        object.__setattr__(self, "initial_states", tuple(states))


@dataclass
class SSVQEState:
    """One subspace-search output: the shared unitary applied to one input."""

    input_index: int
    circuit: ParameterizedCircuit   # input prep + shared ansatz
    theta: np.ndarray
    energy: float

    def statevector(self) -> np.ndarray:
        return bind_and_run(self.circuit, self.theta)


def _input_circuit(n_qubits: int, index: int) -> ParameterizedCircuit:
    gates = tuple(Gate("x", (q,)) for q in range(n_qubits) if (index >> q) & 1)
    return ParameterizedCircuit(n_qubits, gates, 0)


def ssvqe_minimize(
    obs: PauliSum,
    ansatz: ParameterizedCircuit,
    cfg: SSVQEConfig,
    opt: OptimizerConfig | None = None,
    engine: Engine = EXACT_ENGINE,
    theta0=None,
    descend: bool = False,
) -> list[SSVQEState]:
    """Minimize L(theta) = sum_i w_i <psi_i'(theta)|obs|psi_i'(theta)> over a
    single shared parameter vector.

    The optimization restarts `repeats` times from seeded perturbations and
    the run with the lowest L wins; returned states are sorted by energy with
    ties broken by input-bitstring value. With descend=True the winner is
    additionally walked through negative-curvature escapes to a local
    minimum of L; leave it off when a saddle of L is the wanted target, as in
    the particle-sector workflows where lower-L optima mix particle sectors.
    """
    opt = opt or OptimizerConfig()
    if cfg.k > 2**ansatz.n_qubits:
        raise ValueError("k exceeds the Hilbert-space dimension")
    if max(cfg.initial_states) >= 2**ansatz.n_qubits:
        raise ValueError("initial state index outside the Hilbert space")
    weights = np.array(cfg.weights)
    inputs = np.stack([basis_state(ansatz.n_qubits, b) for b in cfg.initial_states])

    def cost_terms(theta: np.ndarray) -> np.ndarray:
        if engine.kind == "exact":
            thetas = np.broadcast_to(theta, (cfg.k, theta.size))
            psi = run_batch(ansatz, thetas, inputs)
            return np.asarray(expectation(obs, psi))
        return np.array(
            [
                engine.energy(obs, _input_circuit(ansatz.n_qubits, b).then(ansatz), theta)
                for b in cfg.initial_states
            ]
        )

    if engine.kind == "exact":
        dense = None
        if obs.n_qubits <= _EnergyModel.DENSE_LIMIT:
            from .pauli import to_dense_matrix

            dense = to_dense_matrix(obs)

        def batch_cost(thetas: np.ndarray) -> np.ndarray:
            thetas = np.atleast_2d(thetas)
            big = np.repeat(thetas, cfg.k, axis=0)
            start = np.tile(inputs, (thetas.shape[0], 1))
            psi = run_batch(ansatz, big, start)
            if dense is not None:
                vals = np.einsum("bi,ij,bj->b", np.conj(psi), dense, psi).real
            else:
                vals = np.asarray(expectation(obs, psi))
            return vals.reshape(thetas.shape[0], cfg.k) @ weights

    else:
        circuits = [
            _input_circuit(ansatz.n_qubits, b).then(ansatz) for b in cfg.initial_states
        ]

        def batch_cost(thetas: np.ndarray) -> np.ndarray:
            thetas = np.atleast_2d(thetas)
            return np.array(
                [
                    sum(w * engine.energy(obs, c, t) for w, c in zip(weights, circuits))
                    for t in thetas
                ]
            )

    best = None
    for repeat in range(cfg.repeats):
        seed = int(np.random.SeedSequence([opt.seed, repeat]).generate_state(1)[0])
        r_opt = OptimizerConfig(**{**opt.__dict__, "seed": seed})
        if theta0 is not None:
            start = np.asarray(theta0, dtype=float)
        elif repeat == 0:
            start = np.zeros(ansatz.n_slots)
        else:
            rng = np.random.default_rng(seed)
            start = rng.uniform(-0.2, 0.2, ansatz.n_slots)
        result = _minimize_weighted(batch_cost, ansatz.n_slots, r_opt, start)
        if best is None or result[1] < best[1]:
            best = result
    if engine.kind == "exact":
        if descend:
            best = descend_to_minimum(batch_cost, best[0])
        else:
            best = polish_cost(batch_cost, best[0])
    theta, _ = best

    term_energies = cost_terms(theta)
    states = [
        SSVQEState(
            input_index=b,
            circuit=_input_circuit(ansatz.n_qubits, b).then(ansatz),
            theta=theta.copy(),
            energy=float(term_energies[i]),
        )
        for i, b in enumerate(cfg.initial_states)
    ]
    states.sort(key=lambda s: (s.energy, s.input_index))
    return states


def _minimize_weighted(batch_cost, n_slots, opt, theta0):
    """Shared-parameter weighted minimization; returns (theta, best cost)."""
    theta = np.asarray(theta0, dtype=float).copy()
    costs = []
    best = (theta.copy(), float(batch_cost(theta)[0]))
    if opt.kind == "gradient-descent":
        for _ in range(opt.max_iterations):
            shifts = np.zeros((2 * n_slots, n_slots))
            shifts[np.arange(n_slots), np.arange(n_slots)] = opt.shift
            shifts[n_slots + np.arange(n_slots), np.arange(n_slots)] = -opt.shift
            vals = batch_cost(theta + shifts)
            grad = (vals[:n_slots] - vals[n_slots:]) / (2.0 * math.sin(opt.shift))
            theta = theta - opt.learning_rate * grad
            c = float(batch_cost(theta)[0])
            costs.append(c)
            if c < best[1]:
                best = (theta.copy(), c)
            if _converged(costs, opt.energy_tol, opt.tol_window):
                break
    else:
        rng = np.random.default_rng(opt.seed)
        for k in range(opt.max_iterations):
            a_k = opt.spsa_a / (k + 1 + opt.spsa_stability) ** opt.spsa_alpha
            c_k = opt.spsa_c / (k + 1) ** opt.spsa_gamma
            delta = rng.integers(0, 2, size=n_slots) * 2.0 - 1.0
            vals = batch_cost(np.stack([theta + c_k * delta, theta - c_k * delta]))
            ghat = (vals[0] - vals[1]) / (2.0 * c_k) * delta
            theta = theta - a_k * ghat
            c = float(batch_cost(theta)[0])
            costs.append(c)
            if c < best[1]:
                best = (theta.copy(), c)
            if _converged(costs, opt.energy_tol, opt.tol_window):
                break
    return best


def particle_filter(
    states: list[SSVQEState],
    number_op: PauliSum,
    target: int,
    engine: Engine = EXACT_ENGINE,
) -> list[SSVQEState]:
    """Keep states whose particle-number expectation matches the target
    within the engine's tolerance (1e-3 exact, 0.05 sampled)."""
    kept = []
    for state in states:
        n_val = engine.energy(number_op, state.circuit, state.theta)
        if abs(n_val - target) < engine.expectation_tol:
            kept.append(state)
    return kept
