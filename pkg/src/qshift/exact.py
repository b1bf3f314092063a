"""Exact time evolution and seeded Haar-random initial states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import MAX_QUBITS, Hamiltonian
from .linalg import check_hermitian, check_state


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    label: str
    operator: np.ndarray = field(repr=False)

    def __post_init__(self):
        op = check_hermitian(self.operator, f"observable {self.label!r}")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


def random_state(n_qubits: int, seed: int) -> np.ndarray:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    rng = make_rng(seed)
    dim = 2**n_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return amps / np.linalg.norm(amps)


def evolve_state(H: Hamiltonian, psi: np.ndarray, t: float) -> np.ndarray:
    return H.spectral.apply(t, psi)


def exact_expectation(H: Hamiltonian, Q: ObservableSpec, psi, t: float) -> float:
    """``<psi| e^{iHt} Q e^{-iHt} |psi>``."""
    if Q.dim != H.dim:
        raise ValueError(f"dimension mismatch: H {H.dim} vs Q {Q.dim}")
    psi = check_state(psi, H.dim)
    phi = evolve_state(H, psi, t)
    return float(np.vdot(phi, Q.operator @ phi).real)
