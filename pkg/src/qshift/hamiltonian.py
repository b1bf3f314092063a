"""Grouped Hamiltonians ``H = sum_i h_i H_i`` and the transverse-field Ising chain."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from .linalg import SpectralGenerator, check_hermitian, numeric_policy

MAX_QUBITS = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; character 0 acts on the most significant qubit."""
    label = label.upper()
    if not label or any(c not in PAULI_MATRICES for c in label):
        raise ValueError(f"invalid Pauli string {label!r}")
    if len(label) > MAX_QUBITS:
        raise ValueError(f"Pauli string on {len(label)} qubits exceeds cap {MAX_QUBITS}")
    return reduce(np.kron, (PAULI_MATRICES[c] for c in label))


def paulis_commute(a: str, b: str) -> bool:
    anti = sum(1 for x, y in zip(a.upper(), b.upper()) if x != "I" and y != "I" and x != y)
    return anti % 2 == 0


@dataclass(frozen=True, eq=False)
class HermitianTerm:
    label: str
    weight: float
    operator: np.ndarray = field(repr=False)
    pauli_summands: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"term {self.label!r}: weight must be positive, got {self.weight}")
        op = check_hermitian(self.operator, f"term {self.label!r}")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)
        if self.pauli_summands is not None:
            summands = tuple(s.upper() for s in self.pauli_summands)
            object.__setattr__(self, "pauli_summands", summands)
            for i, a in enumerate(summands):
                for b in summands[i + 1 :]:
                    if not paulis_commute(a, b):
                        raise ValueError(f"term {self.label!r}: summands {a} and {b} do not commute")
            total = sum(pauli_matrix(s) for s in summands)
            if total.shape != op.shape or np.max(np.abs(total - op)) > numeric_policy().structural_tol:
                raise ValueError(f"term {self.label!r}: Pauli summands do not reproduce the operator")

    @classmethod
    def from_paulis(cls, label: str, weight: float, paulis: Sequence[str]) -> "HermitianTerm":
        paulis = tuple(paulis)
        if not paulis:
            raise ValueError(f"term {label!r} has no Pauli summands")
        return cls(label, float(weight), sum(pauli_matrix(p) for p in paulis), paulis)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @cached_property
    def spectral(self) -> SpectralGenerator:
        return SpectralGenerator(self.operator)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    terms: tuple[HermitianTerm, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("Hamiltonian needs at least one term")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise ValueError(f"term dimensions differ: {sorted(dims)}")

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    @property
    def lam(self) -> float:
        """Sum of term weights (lambda)."""
        return float(np.sum(self.weights))

    @property
    def big_lambda(self) -> float:
        """Largest term weight (Lambda)."""
        return float(np.max(self.weights))

    @cached_property
    def spectral(self) -> SpectralGenerator:
        return SpectralGenerator(total_matrix(self))


def build_tfim(n_qubits: int, J: float, h: float) -> Hamiltonian:
    """Open-boundary transverse-field Ising chain as two grouped terms.

    Term 0 holds all ``Z_i Z_{i+1}`` bonds with weight ``J``; term 1 holds all
    ``X_i`` fields with weight ``h``.
    """
    if not (2 <= n_qubits <= MAX_QUBITS):
        raise ValueError(f"n_qubits must be in [2, {MAX_QUBITS}], got {n_qubits}")
    if not (J > 0 and h > 0):
        raise ValueError(f"couplings must be positive, got J={J}, h={h}")
    bonds = ["I" * i + "ZZ" + "I" * (n_qubits - i - 2) for i in range(n_qubits - 1)]
    fields = ["I" * i + "X" + "I" * (n_qubits - i - 1) for i in range(n_qubits)]
    return Hamiltonian(
        (
            HermitianTerm.from_paulis("ZZ", J, bonds),
            HermitianTerm.from_paulis("X", h, fields),
        )
    )


def sum_z(n_qubits: int) -> np.ndarray:
    """Total magnetization ``sum_i Z_i``."""
    return sum(pauli_matrix("I" * i + "Z" + "I" * (n_qubits - i - 1)) for i in range(n_qubits))


def total_matrix(H: Hamiltonian) -> np.ndarray:
    return sum(t.weight * t.operator for t in H.terms)


def term_unitary(H: Hamiltonian, i: int, theta: float) -> np.ndarray:
    """``exp(-i theta H_i)`` for the unit-scale generator of term ``i`` (0-based)."""
    if not 0 <= i < H.L:
        raise IndexError(f"term index {i} out of range for L={H.L}")
    return H.terms[i].spectral.expm(theta)
