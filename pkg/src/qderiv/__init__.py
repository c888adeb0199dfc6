"""qderiv: statevector-VQE energy derivatives for small molecular systems.

The pipeline runs geometry -> STO-3G integrals -> fermionic operators ->
qubit encodings (Jordan-Wigner / Bravyi-Kitaev) -> dense statevector VQE,
then differentiates the optimized energy with respect to nuclear coordinates
and applied fields to drive geometry optimization, molecular response
properties, transition-state search, and excited-state derivative curves.
"""

__version__ = "0.1.0"

from .molecule import (
    Molecule,
    BasisSet,
    parse_xyz,
    molecule_from_arrays,
    nuclear_repulsion,
    nuclear_dipole,
    sto3g_basis,
)
from .integrals import (
    IntegralSet,
    SpinOrbitalIntegrals,
    apply_field,
    boys_f0,
    core_integrals,
    lowdin_orbitals,
    run_rhf,
    spin_orbital_integrals,
)
from .fermion import FermionOperator
from .pauli import (
    PauliSum,
    PauliTerm,
    format_pauli_sum,
    ground_energy,
    parse_pauli_sum,
    pauli_product,
    sum_simplify,
    to_dense_matrix,
)
from .mappings import (
    BRAVYI_KITAEV,
    JORDAN_WIGNER,
    TaperingMap,
    bravyi_kitaev,
    dipole_operator,
    hamiltonian_from_integrals,
    jordan_wigner,
    number_operator,
    select_sector,
    taper,
    taper_ground_sector,
)
from .simulator import (
    Engine,
    Gate,
    ParameterizedCircuit,
    bind_and_run,
    expectation,
    hea_ansatz,
    hf_reference_circuit,
    overlap_probability,
    sampled_expectation,
    tapered_ansatz,
)
from .vqe import (
    OptimizerConfig,
    SSVQEConfig,
    SSVQEState,
    VQEResult,
    parameter_shift_gradient,
    parameter_shift_hessian,
    particle_filter,
    ssvqe_minimize,
    vqe_minimize,
)
from .derivatives import (
    DerivativeReport,
    HamiltonianFamily,
    OptimizedState,
    SystemParameters,
    cost_estimate,
    d2H,
    dH,
    derivative_report,
    first_order,
    matrix_element_real,
    second_order,
)
from .systems import MolecularSystem, h2_system, h3_system, mode_system
from .applications import (
    OptimizationTrajectory,
    ReactionSpec,
    ResponseReport,
    TransitionStateResult,
    energy_surface,
    excited_derivative_curves,
    geometry_optimize,
    h2h_reaction,
    pes_scan,
    response_properties,
    response_scan,
    second_derivative_test,
    sector_eigenvalues,
    solve_ground,
    transition_state_search,
)
