"""Dense complex linear algebra for small quantum systems.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  Hermitian
exponentials go through an eigendecomposition, which is exact up to round-off
for the dimensions handled here (at most 2**12).
"""

from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class NumericPolicy:
    structural_tol: float = 1e-12
    compositional_tol: float = 1e-10
    max_dim: int = 4096
    prune_tol: float = 1e-14
    solver_tol: float = 1e-10


_POLICY = NumericPolicy()


def numeric_policy() -> NumericPolicy:
    return _POLICY


@contextlib.contextmanager
def override_policy(**changes) -> Iterator[NumericPolicy]:
    """Temporarily replace fields of the global numeric policy."""
    global _POLICY
    previous = _POLICY
    _POLICY = dataclasses.replace(previous, **changes)
    try:
        yield _POLICY
    finally:
        _POLICY = previous


def _as_square(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] > numeric_policy().max_dim:
        raise ValueError(f"{name} dimension {m.shape[0]} exceeds cap {numeric_policy().max_dim}")
    return m


def hermiticity_defect(a) -> float:
    m = np.asarray(a)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitarity_defect(u) -> float:
    m = np.asarray(u)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), ord=2))


def check_hermitian(a, name: str = "matrix", tol: float | None = None) -> np.ndarray:
    m = _as_square(a, name)
    tol = numeric_policy().structural_tol if tol is None else tol
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValueError(f"{name} is not Hermitian (max |A - A^dag| = {defect:.3e})")
    return m


def check_state(psi, dim: int | None = None) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"state must be a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"state dimension {v.shape[0]} does not match operator dimension {dim}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > numeric_policy().structural_tol:
        raise ValueError(f"state is not normalized (norm = {norm!r})")
    return v


class SpectralGenerator:
    """Cached eigendecomposition of a Hermitian matrix.

    ``expm(theta)`` returns ``exp(-i theta A)``; repeated calls with different
    angles reuse the decomposition.
    """

    def __init__(self, a):
        self.matrix = check_hermitian(a, "generator")
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(self.matrix)
        self._vh = self.eigenvectors.conj().T

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expm(self, theta: float) -> np.ndarray:
        phases = np.exp(-1j * theta * self.eigenvalues)
        return (self.eigenvectors * phases) @ self._vh

    def apply(self, theta: float, psi: np.ndarray) -> np.ndarray:
        """Return ``exp(-i theta A) @ psi`` without forming the unitary."""
        phases = np.exp(-1j * theta * self.eigenvalues)
        return self.eigenvectors @ (phases * (self._vh @ psi))


def hermitian_expm(a, theta: float) -> np.ndarray:
    """Return ``exp(-i * theta * a)`` for Hermitian ``a``."""
    return SpectralGenerator(a).expm(theta)


def conjugate_observable(u, q) -> np.ndarray:
    """Heisenberg-picture conjugation ``U^dag Q U``."""
    u = _as_square(u, "unitary")
    q = _as_square(q, "observable")
    if u.shape != q.shape:
        raise ValueError(f"dimension mismatch: U {u.shape} vs Q {q.shape}")
    out = u.conj().T @ q @ u
    # symmetrize away round-off so the Hermitian tag holds exactly
    return 0.5 * (out + out.conj().T)


def expectation(q, psi) -> float:
    """Real expectation value ``<psi|Q|psi>``."""
    q = _as_square(q, "observable")
    v = check_state(psi, q.shape[0])
    raw = np.vdot(v, q @ v)
    if abs(raw.imag) > numeric_policy().compositional_tol * max(1.0, abs(raw.real)):
        raise ValueError(f"expectation has imaginary part {raw.imag:.3e}; observable not Hermitian?")
    return float(raw.real)
