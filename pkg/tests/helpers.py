"""Independent oracles shared by the test modules.

Nothing here calls into the package's series machinery: Taylor coefficients
come from a discrete Cauchy integral over exponentials built with scipy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from qshift.hamiltonian import Hamiltonian, HermitianTerm


def random_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = a + a.conj().T
    return norm * h / np.linalg.norm(h, 2)


def random_hamiltonian(n_qubits: int, L: int, rng: np.random.Generator) -> Hamiltonian:
    dim = 2**n_qubits
    weights = rng.uniform(0.2, 1.5, size=L)
    return Hamiltonian(tuple(HermitianTerm(f"H{k}", float(w), random_hermitian(dim, rng)) for k, w in enumerate(weights)))


def random_unit_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def taylor_coefficients(f, max_order: int, radius: float = 0.5, points: int = 64) -> list[np.ndarray]:
    """Taylor coefficients at 0 of an entire matrix-valued ``f`` via the trapezoid rule on a circle."""
    zs = radius * np.exp(2j * np.pi * np.arange(points) / points)
    values = np.array([f(z) for z in zs])
    out = []
    for n in range(max_order + 1):
        weights = np.exp(-2j * np.pi * n * np.arange(points) / points) / points / radius**n
        out.append(np.tensordot(weights, values, axes=1))
    return out


def conjugated(gens_and_angles, q: np.ndarray):
    """``z -> U(z)^{-1} Q U(z)`` analytically continued, ``U(z) = prod_k exp(-i z a_k G_k)`` left to right."""

    def f(z):
        u = np.eye(q.shape[0], dtype=complex)
        u_inv = np.eye(q.shape[0], dtype=complex)
        for g, a in gens_and_angles:
            u = u @ expm(-1j * z * a * g)
            u_inv = expm(1j * z * a * g) @ u_inv
        return u_inv @ q @ u

    return f


def pauli(label: str) -> np.ndarray:
    """Kronecker product built directly from 2x2 blocks (first char = most significant)."""
    single = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
    }
    out = np.array([[1.0 + 0j]])
    for c in label:
        out = np.kron(out, single[c])
    return out
