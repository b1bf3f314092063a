"""qDRIFT baseline: i.i.d. draws with probability ``h_i / lambda``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exact import ObservableSpec
from .hamiltonian import Hamiltonian
from .linalg import check_state
from .protocol import MAX_ENUMERATED_PATHS, apply_circuit, circuit_expectation, shot_average


@dataclass(frozen=True)
class QdriftParams:
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")


def qdrift_distribution(H: Hamiltonian) -> np.ndarray:
    return H.weights / H.lam


def qdrift_ensemble_expectation(H: Hamiltonian, Q: ObservableSpec, psi, t: float, params: QdriftParams) -> float:
    """Exact ensemble average via N applications of the averaged Heisenberg channel."""
    psi = check_state(psi, H.dim)
    probs = qdrift_distribution(H)
    angle = t * H.lam / params.N
    gates = [term.spectral.expm(angle) for term in H.terms]
    q = np.array(Q.operator, dtype=complex)
    for _ in range(params.N):
        q = sum(p * (v.conj().T @ q @ v) for p, v in zip(probs, gates))
    return float(np.vdot(psi, q @ psi).real)


def qdrift_enumerated_moments(H: Hamiltonian, Q: ObservableSpec, psi, t: float, params: QdriftParams) -> dict[str, float]:
    """Mean and variance of a single-circuit sample by explicit sequence enumeration."""
    if H.L**params.N > MAX_ENUMERATED_PATHS:
        raise ValueError(f"L^N = {H.L}^{params.N} exceeds the enumeration guard {MAX_ENUMERATED_PATHS}")
    psi = check_state(psi, H.dim)
    probs = qdrift_distribution(H)
    angle = t * H.lam / params.N
    mean = second = 0.0
    for seq in itertools.product(range(H.L), repeat=params.N):
        p = float(np.prod(probs[list(seq)]))
        f = circuit_expectation(H, Q, psi, seq, angle)
        mean += p * f
        second += p * f * f
    return {"mean": mean, "variance": max(second - mean**2, 0.0)}


def qdrift_sample(
    H: Hamiltonian,
    Q: ObservableSpec,
    psi,
    t: float,
    params: QdriftParams,
    rng: np.random.Generator,
    shots: int | None = None,
    n_samples: int | None = None,
):
    """Draw qDRIFT circuit samples.

    Returns a float when ``n_samples`` is None, otherwise an array of
    ``n_samples`` values.  Circuit expectations are memoized per sequence.
    """
    psi = check_state(psi, H.dim)
    count = 1 if n_samples is None else n_samples
    seqs = rng.choice(H.L, size=(count, params.N), p=qdrift_distribution(H))
    angle = t * H.lam / params.N
    memo: dict[tuple[int, ...], float] = {}
    out = np.empty(count)
    for k, row in enumerate(seqs):
        seq = tuple(int(a) for a in row)
        if shots is None:
            if seq not in memo:
                memo[seq] = circuit_expectation(H, Q, psi, seq, angle)
            out[k] = memo[seq]
        else:
            out[k] = shot_average(Q, apply_circuit(H, seq, angle, psi), shots, rng)
    return float(out[0]) if n_samples is None else out
