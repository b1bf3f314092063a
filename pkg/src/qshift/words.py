"""Taylor coefficients of Heisenberg conjugation, indexed by words of term indices.

A word ``w = (w_1, ..., w_k)`` stands for the nested commutator
``Comm(w, Q) = [H_{w_k}, ..., [H_{w_2}, [H_{w_1}, Q]]...]``; ``w[0]`` is the
innermost letter.  A series ``{w: c_w}`` represents the operator
``sum_w (i t)^{|w|} c_w Comm(w, Q)``.

Slot lists describe a product of exponentials read left to right as a matrix
product, ``U = V_{slots[0]} V_{slots[1]} ... V_{slots[-1]}`` with
``V_a = exp(-i * scale * t * H_a)``.  Then ``slots[0]`` sits next to ``Q`` in
``U^dag Q U`` and supplies the innermost commutator letters, while
``slots[-1]`` is the first gate to act on the state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .exact import ObservableSpec
from .hamiltonian import Hamiltonian
from .linalg import numeric_policy

MAX_ORDER = 8
MAX_COMMUTATOR_LENGTH = 6

Word = tuple[int, ...]


@dataclass(frozen=True)
class WordSeries:
    coeffs: dict[Word, float] = field(repr=False)
    max_order: int

    def __post_init__(self):
        tol = numeric_policy().prune_tol
        pruned = {w: float(c) for w, c in self.coeffs.items() if abs(c) >= tol}
        pruned.setdefault((), 0.0)
        object.__setattr__(self, "coeffs", pruned)

    def __getitem__(self, word) -> float:
        return self.coeffs.get(tuple(word), 0.0)

    def words(self, length: int | None = None) -> list[Word]:
        return [w for w in self.coeffs if length is None or len(w) == length]


def all_words(L: int, max_order: int) -> Iterator[Word]:
    """Every word over ``range(L)`` of length 0..max_order, shortest first."""
    for k in range(max_order + 1):
        yield from itertools.product(range(L), repeat=k)


def _check_order(max_order: int) -> None:
    if not 0 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must be in [0, {MAX_ORDER}], got {max_order}")


def conjugation_coefficients(slots: Sequence[int], angle_scale: float, max_order: int) -> WordSeries:
    """Word coefficients of ``U^dag Q U`` for the slot product ``U``.

    ``c_w = angle_scale^|w| * sum prod_j 1/n_j!`` over all ways of writing
    ``w = slots[0]^{n_1} slots[1]^{n_2} ...``.  Built slot by slot as a
    truncated product of exponentials in the free algebra: each step extends
    every prefix accumulated so far by a run of the next slot's letter.
    """
    _check_order(max_order)
    if any(a < 0 for a in slots):
        raise ValueError(f"slot indices must be non-negative, got {list(slots)}")
    series: dict[Word, float] = {(): 1.0}
    for a in slots:
        grown: dict[Word, float] = {}
        for prefix, c in series.items():
            room = max_order - len(prefix)
            for n in range(room + 1):
                w = prefix + (a,) * n
                grown[w] = grown.get(w, 0.0) + c / math.factorial(n)
        series = grown
    coeffs = {w: c * angle_scale ** len(w) for w, c in series.items()}
    return WordSeries(coeffs, max_order)


def target_coefficients(H: Hamiltonian, tau_ratio: float, max_order: int) -> WordSeries:
    """Word coefficients of ``exp(i tau t H) Q exp(-i tau t H)``."""
    _check_order(max_order)
    h = H.weights
    coeffs = {
        w: tau_ratio ** len(w) * float(np.prod(h[list(w)])) / math.factorial(len(w))
        for w in all_words(H.L, max_order)
    }
    return WordSeries(coeffs, max_order)


def realize_commutator(word: Sequence[int], H: Hamiltonian, Q: ObservableSpec) -> np.ndarray:
    """Dense ``[H_{w_k}, ..., [H_{w_1}, Q]...]`` with unit-scale generators."""
    if len(word) > MAX_COMMUTATOR_LENGTH:
        raise ValueError(f"word length {len(word)} exceeds cap {MAX_COMMUTATOR_LENGTH}")
    out = np.array(Q.operator, dtype=complex)
    for a in word:
        g = H.terms[a].operator
        out = g @ out - out @ g
    return out


def series_operator(series: WordSeries, H: Hamiltonian, Q: ObservableSpec, order: int) -> np.ndarray:
    """Order-``order`` Taylor coefficient (in t) of the operator a series represents."""
    out = np.zeros((H.dim, H.dim), dtype=complex)
    for w in series.words(order):
        out += series[w] * realize_commutator(w, H, Q)
    return (1j) ** order * out
