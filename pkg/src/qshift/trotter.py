"""First- and second-order product formulas with folding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import ObservableSpec, exact_expectation
from .hamiltonian import Hamiltonian
from .linalg import check_state


@dataclass(frozen=True)
class FormulaSpec:
    order: int = 1
    folds: int = 1

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.folds < 1:
            raise ValueError(f"folds must be >= 1, got {self.folds}")


def trotter_unitary(H: Hamiltonian, spec: FormulaSpec, t: float) -> np.ndarray:
    """Folded product formula ``(V(t/N))^N``.

    Order 1 is ``prod_{i=1..L} exp(-i h_i H_i t/N)`` (written left to right).
    Order 2 is the symmetric splitting ``prod_{i=1..L} prod_{i=L..1}`` with each
    factor at ``t/(2N)``.
    """
    dt = t / spec.folds
    forward = [term.spectral.expm(term.weight * (dt if spec.order == 1 else dt / 2)) for term in H.terms]
    step = np.eye(H.dim, dtype=complex)
    for v in forward:
        step = step @ v
    if spec.order == 2:
        for v in reversed(forward):
            step = step @ v
    return np.linalg.matrix_power(step, spec.folds)


def formula_error(H: Hamiltonian, Q: ObservableSpec, psi, spec: FormulaSpec, t: float) -> float:
    psi = check_state(psi, H.dim)
    phi = trotter_unitary(H, spec, t) @ psi
    approx = float(np.vdot(phi, Q.operator @ phi).real)
    return abs(approx - exact_expectation(H, Q, psi, t))
