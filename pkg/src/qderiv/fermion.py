"""Fermionic ladder-operator sums with normal-ordered canonical form.

A term is a tuple of (mode, action) factors, action 1 for creation and 0 for
annihilation, applied left to right as written.
"""
from __future__ import annotations

import numpy as np

CREATE, ANNIHILATE = 1, 0


class FermionOperator:
    """Weighted sum of products of fermionic creation/annihilation operators."""

    def __init__(self, terms=None):
        # terms: {((mode, action), ...): coefficient}
        self.terms: dict[tuple, complex] = {}
        if terms:
            for factors, coeff in dict(terms).items():
                self._add(tuple(factors), complex(coeff))

    def _add(self, factors: tuple, coeff: complex) -> None:
        if abs(coeff) == 0.0:
            return
        self.terms[factors] = self.terms.get(factors, 0.0) + coeff
        if abs(self.terms[factors]) < 1e-15:
            del self.terms[factors]

    @classmethod
    def from_term(cls, factors, coeff=1.0) -> "FermionOperator":
        return cls({tuple(factors): coeff})

    @classmethod
    def constant(cls, value) -> "FermionOperator":
        return cls({(): value})

    @property
    def n_modes(self) -> int:
        return 1 + max(
            (idx for factors in self.terms for idx, _ in factors), default=-1
        )

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        out = FermionOperator(self.terms)
        for factors, coeff in other.terms.items():
            out._add(factors, coeff)
        return out

    def __mul__(self, scalar) -> "FermionOperator":
        return FermionOperator({f: c * scalar for f, c in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other * -1.0

    def adjoint(self) -> "FermionOperator":
        out = FermionOperator()
        for factors, coeff in self.terms.items():
            flipped = tuple((idx, 1 - action) for idx, action in reversed(factors))
            out._add(flipped, np.conj(coeff))
        return out

    def normal_ordered(self) -> "FermionOperator":
        """Rewrite with creations first (descending mode), then annihilations
        (descending mode), using {a_i, a+_j} = delta_ij."""
        out = FermionOperator()
        for factors, coeff in self.terms.items():
            _normal_order_term(list(factors), coeff, out)
        return out

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = (self - self.adjoint()).normal_ordered()
        return all(abs(c) <= tol for c in diff.terms.values())

    def __repr__(self):
        def fmt(factors):
            if not factors:
                return "1"
            return " ".join(f"a{'+' if a else ''}_{i}" for i, a in factors)

        parts = [f"({c:+.6g}) {fmt(f)}" for f, c in sorted(self.terms.items())]
        return f"FermionOperator({' + '.join(parts) or '0'})"


def _normal_order_term(factors: list, coeff: complex, out: FermionOperator) -> None:
    """Bubble one product into canonical order, accumulating into `out`."""
    i = 0
    while i < len(factors) - 1:
        (m1, a1), (m2, a2) = factors[i], factors[i + 1]
        if a1 == ANNIHILATE and a2 == CREATE:
            # a_m1 a+_m2 = delta - a+_m2 a_m1
            if m1 == m2:
                _normal_order_term(factors[:i] + factors[i + 2:], coeff, out)
            factors[i], factors[i + 1] = factors[i + 1], factors[i]
            coeff = -coeff
            i = max(i - 1, 0)
        elif a1 == a2 and m1 == m2:
            return  # a a or a+ a+ on the same mode vanishes
        elif a1 == a2 and m1 < m2:
            factors[i], factors[i + 1] = factors[i + 1], factors[i]
            coeff = -coeff
            i = max(i - 1, 0)
        else:
            i += 1
    out._add(tuple(factors), coeff)


def one_body_operator(h: np.ndarray, tol: float = 1e-14) -> FermionOperator:
    """sum_ij h_ij a+_i a_j for a Hermitian matrix h."""
    h = np.asarray(h)
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise ValueError("one-body matrix must be Hermitian")
    op = FermionOperator()
    n = h.shape[0]
    for i in range(n):
        for j in range(n):
            if abs(h[i, j]) > tol:
                op._add(((i, CREATE), (j, ANNIHILATE)), h[i, j])
    return op
