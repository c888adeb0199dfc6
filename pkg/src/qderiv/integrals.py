"""Closed-form s-Gaussian integrals, restricted Hartree-Fock, and the
spin-orbital integral tensors that feed operator construction.

All quantities are in Hartree atomic units. Contracted functions are
renormalized to unit self-overlap, so diag(S) = 1 exactly up to roundoff.

Formulas for s-type primitives g_a(r) = exp(-alpha |r - A|^2):
    p = alpha + beta,  mu = alpha*beta/p,  P = (alpha*A + beta*B)/p
    S_ab   = (pi/p)^{3/2} exp(-mu R_AB^2)
    T_ab   = mu (3 - 2 mu R_AB^2) S_ab
    V_ab^C = -Z_C (2 pi / p) exp(-mu R_AB^2) F0(p |P - C|^2)
    (ab|cd) = 2 pi^{5/2} / (p q sqrt(p+q)) exp(-mu R_AB^2) exp(-nu R_CD^2)
              * F0(p q / (p+q) |P - Q|^2)
with the Boys function F0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .molecule import (
    BasisSet,
    Molecule,
    nuclear_charge_center,
    nuclear_dipole,
    nuclear_repulsion,
)


class BasisError(ValueError):
    pass


class ScfConvergenceError(RuntimeError):
    """SCF did not reach the fixed point; carries the last density matrix."""

    def __init__(self, message: str, density: np.ndarray):
        super().__init__(message)
        self.density = density


class RestrictedShellError(ValueError):
    pass


class TransformError(ValueError):
    pass


class FieldRegimeError(ValueError):
    pass


def boys_f0(t):
    """Boys function F0(t) = (1/2) sqrt(pi/t) erf(sqrt(t)).

    A Maclaurin series is used below t = 1e-4 to avoid the 0/0 form at
    coincident centers: F0(t) = 1 - t/3 + t^2/10 - t^3/42 + t^4/216 - ...
    """
    t = np.asarray(t, dtype=float)
    small = t < 1e-4
    ts = np.where(small, t, 1.0)  # placeholder to keep sqrt happy
    series = 1.0 - ts / 3.0 + ts**2 / 10.0 - ts**3 / 42.0 + ts**4 / 216.0
    tb = np.where(small, 1.0, t)
    closed = 0.5 * np.sqrt(np.pi / tb) * erf(np.sqrt(tb))
    out = np.where(small, series, closed)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IntegralSet:
    """AO-basis integral tensors plus nuclear constants.

    Dipole matrices are position integrals <i| r - R_cnc |j> relative to the
    center of nuclear charge, and mu_nuc is the nuclear dipole about the same
    origin (hence identically zero; kept for the field-coupling contract).
    """

    overlap: np.ndarray           # (n, n)
    kinetic: np.ndarray           # (n, n)
    nuclear: np.ndarray           # (n, n)
    eri: np.ndarray               # (n, n, n, n), chemists' notation (ij|kl)
    dipole: np.ndarray            # (3, n, n)
    e_nuc: float
    mu_nuc: np.ndarray            # (3,)

    @property
    def n_functions(self) -> int:
        return self.overlap.shape[0]

    @property
    def core(self) -> np.ndarray:
        return self.kinetic + self.nuclear


def _primitive_norms(exponents: np.ndarray) -> np.ndarray:
    return (2.0 * exponents / np.pi) ** 0.75


def _contracted(shell, center_bohr):
    """Expand one shell to (exponents, normalized coefficients, center)."""
    alphas = np.array([a for a, _ in shell], dtype=float)
    coeffs = np.array([c for _, c in shell], dtype=float) * _primitive_norms(alphas)
    # Renormalize the contraction to exact unit self-overlap.
    p = alphas[:, None] + alphas[None, :]
    s = (np.pi / p) ** 1.5
    norm2 = coeffs @ s @ coeffs
    return alphas, coeffs / np.sqrt(norm2), center_bohr


def core_integrals(mol: Molecule, basis: BasisSet) -> IntegralSet:
    """Evaluate S, T, V, (ij|kl), dipole matrices, and nuclear constants."""
    nbf = basis.n_functions
    pos = mol.positions_bohr
    for ci, _ in basis.shells:
        if ci >= len(mol.atoms):
            raise BasisError(f"shell center index {ci} outside molecule")

    funcs = [_contracted(shell, pos[ci]) for ci, shell in basis.shells]
    origin = nuclear_charge_center(mol)
    charges = mol.charges

    S = np.zeros((nbf, nbf))
    T = np.zeros((nbf, nbf))
    V = np.zeros((nbf, nbf))
    D = np.zeros((3, nbf, nbf))

    for i, (ai, ci, A) in enumerate(funcs):
        for j, (aj, cj, B) in enumerate(funcs):
            if j < i:
                continue
            p = ai[:, None] + aj[None, :]
            mu = ai[:, None] * aj[None, :] / p
            rab2 = float(np.dot(A - B, A - B))
            kab = np.exp(-mu * rab2)
            w = ci[:, None] * cj[None, :]
            s_prim = (np.pi / p) ** 1.5 * kab
            S[i, j] = np.sum(w * s_prim)
            T[i, j] = np.sum(w * mu * (3.0 - 2.0 * mu * rab2) * s_prim)
            # Gaussian product centers, shape (npi, npj, 3)
            P = (ai[:, None, None] * A + aj[None, :, None] * B) / p[:, :, None]
            v = np.zeros_like(p)
            for C, z in zip(pos, charges):
                rpc2 = np.sum((P - C) ** 2, axis=2)
                v -= z * (2.0 * np.pi / p) * kab * boys_f0(p * rpc2)
            V[i, j] = np.sum(w * v)
            for ax in range(3):
                D[ax, i, j] = np.sum(w * (P[:, :, ax] - origin[ax]) * s_prim)
            S[j, i], T[j, i], V[j, i] = S[i, j], T[i, j], V[i, j]
            D[:, j, i] = D[:, i, j]

    eri = np.zeros((nbf, nbf, nbf, nbf))
    for i, (ai, ci, A) in enumerate(funcs):
        for j, (aj, cj, B) in enumerate(funcs):
            p = ai[:, None] + aj[None, :]
            kab = np.exp(-(ai[:, None] * aj[None, :] / p) * float(np.dot(A - B, A - B)))
            P = (ai[:, None, None] * A + aj[None, :, None] * B) / p[:, :, None]
            wij = ci[:, None] * cj[None, :]
            for k, (ak, ck, C) in enumerate(funcs):
                for l, (al, cl, Dc) in enumerate(funcs):
                    q = ak[:, None] + al[None, :]
                    kcd = np.exp(
                        -(ak[:, None] * al[None, :] / q) * float(np.dot(C - Dc, C - Dc))
                    )
                    Q = (ak[:, None, None] * C + al[None, :, None] * Dc) / q[:, :, None]
                    wkl = ck[:, None] * cl[None, :]
                    rpq2 = np.sum(
                        (P[:, :, None, None, :] - Q[None, None, :, :, :]) ** 2, axis=4
                    )
                    pq = p[:, :, None, None] * q[None, None, :, :]
                    psum = p[:, :, None, None] + q[None, None, :, :]
                    val = (
                        2.0 * np.pi**2.5 / (pq * np.sqrt(psum))
                        * kab[:, :, None, None] * kcd[None, None, :, :]
                        * boys_f0(pq / psum * rpq2)
                    )
                    eri[i, j, k, l] = np.einsum(
                        "ij,kl,ijkl->", wij, wkl, val
                    )

    return IntegralSet(
        overlap=S,
        kinetic=T,
        nuclear=V,
        eri=eri,
        dipole=D,
        e_nuc=nuclear_repulsion(mol),
        mu_nuc=nuclear_dipole(mol, origin),
    )


def _fix_column_signs(c: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive.

    Eigensolvers return columns up to sign; derivative pipelines difference
    Hamiltonian coefficients across geometries, so the orbital gauge must be
    continuous.
    """
    c = c.copy()
    for k in range(c.shape[1]):
        idx = int(np.argmax(np.abs(c[:, k])))
        if c[idx, k] < 0:
            c[:, k] = -c[:, k]
    return c


def run_rhf(
    ints: IntegralSet,
    n_electrons: int,
    max_cycles: int = 200,
    conv_tol: float = 1e-8,
):
    """Restricted Hartree-Fock by damping-free Roothaan iteration.

    Returns (mo_coefficients, orbital_energies, total_energy). Convergence is
    measured by the max-norm of the FDS - SDF commutator.
    """
    if n_electrons % 2 != 0:
        raise RestrictedShellError(
            f"restricted HF needs an even electron count, got {n_electrons}; "
            "use lowdin_orbitals for the open-shell path"
        )
    n_occ = n_electrons // 2
    S, H = ints.overlap, ints.core
    eri = ints.eri

    s_vals, s_vecs = np.linalg.eigh(S)
    if s_vals.min() <= 1e-10:
        raise TransformError("overlap matrix is not positive definite")
    X = s_vecs @ np.diag(s_vals**-0.5) @ s_vecs.T

    def diagonalize(F):
        e, cp = np.linalg.eigh(X.T @ F @ X)
        return e, _fix_column_signs(X @ cp)

    eps, C = diagonalize(H)
    P = 2.0 * C[:, :n_occ] @ C[:, :n_occ].T
    for _ in range(max_cycles):
        G = np.einsum("ls,mnsl->mn", P, eri) - 0.5 * np.einsum("ls,mlsn->mn", P, eri)
        F = H + G
        err = np.abs(F @ P @ S - S @ P @ F).max()
        eps, C = diagonalize(F)
        P_new = 2.0 * C[:, :n_occ] @ C[:, :n_occ].T
        if err < conv_tol:
            e_elec = 0.5 * np.sum(P_new * (H + F))
            return C, eps, e_elec + ints.e_nuc
        P = P_new
    raise ScfConvergenceError(f"SCF not converged in {max_cycles} cycles", P)


def lowdin_orbitals(ints: IntegralSet) -> np.ndarray:
    """Symmetric orthogonalization S^{-1/2}: orbital matrix for open shells.

    The FCI spectrum of the resulting qubit Hamiltonian is invariant to this
    orbital choice, which sidesteps open-shell SCF entirely.
    """
    s_vals, s_vecs = np.linalg.eigh(ints.overlap)
    if s_vals.min() <= 1e-10:
        raise TransformError("overlap matrix is not positive definite")
    return s_vecs @ np.diag(s_vals**-0.5) @ s_vecs.T


@dataclass(frozen=True)
class SpinOrbitalIntegrals:
    """One- and two-body integrals over interleaved (alpha, beta) spin orbitals.

    two_body[i, j, k, l] multiplies a+_i a+_j a_k a_l and equals
    (1/2) (i l | j k) in chemists' notation with spin deltas applied.
    The dipole tensor keeps the same one-body spin structure for each axis.
    """

    one_body: np.ndarray          # (2n, 2n)
    two_body: np.ndarray          # (2n, 2n, 2n, 2n)
    constant: float
    dipole: np.ndarray            # (3, 2n, 2n)
    mu_nuc: np.ndarray            # (3,)
    provenance: str               # "RHF" | "Lowdin"

    @property
    def n_modes(self) -> int:
        return self.one_body.shape[0]


def _to_spin_one_body(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[0::2, 0::2] = h
    out[1::2, 1::2] = h
    return out


def spin_orbital_integrals(
    ints: IntegralSet, orbitals: np.ndarray, provenance: str = "RHF"
) -> SpinOrbitalIntegrals:
    """Transform AO integrals to the given orbital basis and expand to spin
    orbitals with interleaved (alpha, beta) ordering."""
    C = np.asarray(orbitals, dtype=float)
    n = ints.n_functions
    if C.shape != (n, n) or abs(np.linalg.det(C)) < 1e-10:
        raise TransformError("orbital matrix must be square and non-singular")

    h_mo = C.T @ ints.core @ C
    eri_mo = np.einsum(
        "mp,nq,lr,ks,mnlk->pqrs", C, C, C, C, ints.eri, optimize=True
    )
    d_mo = np.einsum("mp,nq,xmn->xpq", C, C, ints.dipole, optimize=True)

    n_so = 2 * n
    h1 = _to_spin_one_body(h_mo)
    d1 = np.stack([_to_spin_one_body(d_mo[ax]) for ax in range(3)])

    # two_body[i,j,k,l] = 1/2 (il|jk) with spin(i)=spin(l), spin(j)=spin(k).
    h2 = np.zeros((n_so, n_so, n_so, n_so))
    spatial = np.arange(n_so) // 2
    spin = np.arange(n_so) % 2
    for i in range(n_so):
        for j in range(n_so):
            for k in range(n_so):
                for l in range(n_so):
                    if spin[i] == spin[l] and spin[j] == spin[k]:
                        h2[i, j, k, l] = 0.5 * eri_mo[
                            spatial[i], spatial[l], spatial[j], spatial[k]
                        ]
    return SpinOrbitalIntegrals(
        one_body=h1,
        two_body=h2,
        constant=ints.e_nuc,
        dipole=d1,
        mu_nuc=ints.mu_nuc.copy(),
        provenance=provenance,
    )


def apply_field(
    so: SpinOrbitalIntegrals, field, allow_strong: bool = False
) -> SpinOrbitalIntegrals:
    """Couple a uniform electric field F (a.u.): h -> h - F.D and
    constant -> constant + F.mu_nuc, exactly linear in F.

    Fields beyond 0.1 a.u. leave the perturbative regime the Taylor expansion
    of E(F) assumes; raise unless explicitly overridden.
    """
    F = np.asarray(field, dtype=float)
    if F.shape != (3,):
        raise ValueError("field must be a 3-vector in a.u.")
    if np.linalg.norm(F) > 0.1 and not allow_strong:
        raise FieldRegimeError(
            f"|F| = {np.linalg.norm(F):.3g} a.u. exceeds the 0.1 a.u. regime guard"
        )
    h = so.one_body - np.einsum("x,xij->ij", F, so.dipole)
    const = so.constant + float(F @ so.mu_nuc)
    return SpinOrbitalIntegrals(
        one_body=h,
        two_body=so.two_body,
        constant=const,
        dipole=so.dipole,
        mu_nuc=so.mu_nuc,
        provenance=so.provenance,
    )
