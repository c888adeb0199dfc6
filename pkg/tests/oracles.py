"""Brute-force quadrature reference for s-Gaussian integrals.

Deliberately independent of the closed-form engine: overlaps, kinetic and
dipole pieces come from dense 1-D grids per axis, while nuclear attraction
and electron repulsion use spherical quadrature around the singular center
(the Jacobian absorbs the 1/r), with the electron-repulsion inner integral
replaced by the electrostatic potential of a Gaussian charge, erf(sqrt(q) u)/u.
Only linear (z-axis) molecules are supported, which covers every test system.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from qderiv.molecule import ANGSTROM_PER_BOHR


def _axis_grid(centers, exponents, n=6001, pad=10.0):
    lo = min(centers) - pad / np.sqrt(min(exponents))
    hi = max(centers) + pad / np.sqrt(min(exponents))
    return np.linspace(lo, hi, n)


class ContractedS:
    """One normalized contracted s function: exponents, coefficients, center."""

    def __init__(self, shell, center_bohr):
        self.alphas = np.array([a for a, _ in shell])
        raw = np.array([c for _, c in shell]) * (2.0 * self.alphas / np.pi) ** 0.75
        self.center = np.asarray(center_bohr, dtype=float)
        norm2 = self._self_overlap(raw)
        self.coeffs = raw / np.sqrt(norm2)

    def _self_overlap(self, coeffs):
        x = _axis_grid([self.center[2]], self.alphas)
        total = 0.0
        for ai, ci in zip(self.alphas, coeffs):
            for aj, cj in zip(self.alphas, coeffs):
                line = np.trapezoid(
                    np.exp(-(ai + aj) * (x - self.center[2]) ** 2), x
                )
                plane = np.pi / (ai + aj)
                total += ci * cj * line * plane
        return total

    def value(self, points):
        r2 = np.sum((points - self.center) ** 2, axis=-1)
        return sum(c * np.exp(-a * r2) for a, c in zip(self.alphas, self.coeffs))


def overlap(f1: ContractedS, f2: ContractedS) -> float:
    total = 0.0
    for a, ca in zip(f1.alphas, f1.coeffs):
        for b, cb in zip(f2.alphas, f2.coeffs):
            val = 1.0
            for ax in range(3):
                x = _axis_grid([f1.center[ax], f2.center[ax]], [a, b])
                val *= np.trapezoid(
                    np.exp(-a * (x - f1.center[ax]) ** 2 - b * (x - f2.center[ax]) ** 2), x
                )
            total += ca * cb * val
    return total


def kinetic(f1: ContractedS, f2: ContractedS) -> float:
    """(1/2) integral grad(f1).grad(f2) by axiswise moment quadrature."""
    total = 0.0
    for a, ca in zip(f1.alphas, f1.coeffs):
        for b, cb in zip(f2.alphas, f2.coeffs):
            i00, i11 = [], []
            for ax in range(3):
                x = _axis_grid([f1.center[ax], f2.center[ax]], [a, b])
                gg = np.exp(-a * (x - f1.center[ax]) ** 2 - b * (x - f2.center[ax]) ** 2)
                i00.append(np.trapezoid(gg, x))
                i11.append(
                    np.trapezoid((x - f1.center[ax]) * (x - f2.center[ax]) * gg, x)
                )
            term = 0.0
            for ax in range(3):
                others = [i00[o] for o in range(3) if o != ax]
                term += i11[ax] * others[0] * others[1]
            total += ca * cb * 0.5 * 4.0 * a * b * term
    return total


def dipole_z(f1: ContractedS, f2: ContractedS, origin_z: float) -> float:
    total = 0.0
    for a, ca in zip(f1.alphas, f1.coeffs):
        for b, cb in zip(f2.alphas, f2.coeffs):
            val = 1.0
            for ax in range(3):
                x = _axis_grid([f1.center[ax], f2.center[ax]], [a, b])
                gg = np.exp(-a * (x - f1.center[ax]) ** 2 - b * (x - f2.center[ax]) ** 2)
                if ax == 2:
                    val *= np.trapezoid((x - origin_z) * gg, x)
                else:
                    val *= np.trapezoid(gg, x)
            total += ca * cb * val
    return total


def _spherical_points(center, r_max, n_r=220, n_mu=160):
    """Product quadrature over a ball around `center` (axially symmetric
    integrands only; the phi integral contributes 2 pi)."""
    xr, wr = leggauss(n_r)
    r = 0.5 * r_max * (xr + 1.0)
    wr = 0.5 * r_max * wr
    mu, wmu = leggauss(n_mu)
    rr, mm = np.meshgrid(r, mu, indexing="ij")
    z = center[2] + rr * mm
    rho = rr * np.sqrt(np.maximum(1.0 - mm**2, 0.0))
    pts = np.stack([rho, np.zeros_like(rho), z], axis=-1)
    weights = 2.0 * np.pi * np.outer(wr, wmu)
    return pts, rr, weights


def nuclear_attraction(f1, f2, nuclei) -> float:
    """-sum_C Z_C integral f1 f2 / |r - C|, radial Jacobian removing the pole."""
    total = 0.0
    span = max(np.linalg.norm(f1.center - f2.center), 1.0)
    r_max = span + 12.0 / np.sqrt(min(f1.alphas.min(), f2.alphas.min()))
    for z_charge, center in nuclei:
        pts, rr, w = _spherical_points(np.asarray(center), r_max)
        vals = f1.value(pts) * f2.value(pts) * rr  # r^2 dr / r = r dr
        total -= z_charge * np.sum(vals * w)
    return total


def electron_repulsion(f1, f2, f3, f4) -> float:
    """(f1 f2 | f3 f4) via the Gaussian-charge potential of the ket pair."""
    total = 0.0
    for c, cc in zip(f3.alphas, f3.coeffs):
        for d, cd in zip(f4.alphas, f4.coeffs):
            q = c + d
            Q = (c * f3.center + d * f4.center) / q
            kcd = np.exp(-c * d / q * float(np.sum((f3.center - f4.center) ** 2)))
            span = max(
                np.linalg.norm(f1.center - Q), np.linalg.norm(f2.center - Q), 1.0
            )
            r_max = span + 12.0 / np.sqrt(min(f1.alphas.min(), f2.alphas.min(), q))
            pts, rr, w = _spherical_points(Q, r_max)
            u = rr
            pot = np.where(u > 1e-12, erf(np.sqrt(q) * u) / np.maximum(u, 1e-12),
                           2.0 * np.sqrt(q / np.pi))
            vals = f1.value(pts) * f2.value(pts) * pot * rr**2
            total += cc * cd * kcd * (np.pi / q) ** 1.5 * np.sum(vals * w)
    return total


def h2_functions(separation_angstrom: float):
    from qderiv.molecule import STO3G_H_COEFFS, STO3G_H_EXPONENTS

    shell = tuple(zip(STO3G_H_EXPONENTS, STO3G_H_COEFFS))
    r = separation_angstrom / ANGSTROM_PER_BOHR
    f0 = ContractedS(shell, (0.0, 0.0, 0.0))
    f1 = ContractedS(shell, (0.0, 0.0, r))
    return f0, f1
