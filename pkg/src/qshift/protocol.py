"""Adaptive quasi-probability sampling of product circuits (qSHIFT).

Each round draws a word of ``s_p`` term indices.  Its signed coefficients are
the solution of a linear system that forces the branch-averaged conjugated
observable to agree with ``exp(i tau t H) Q exp(-i tau t H)`` through order
``t^r``, where ``tau`` is the fraction of the ``N`` operators drawn so far.
The round's word is prepended to the circuit (``V_S <- V_s V_S``), so in the
slot convention of :mod:`qshift.words` the newest draws sit next to ``Q``.

Term indices are 0-based throughout the library.
"""

from __future__ import annotations

import itertools
import threading
import warnings
import weakref
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exact import ObservableSpec, exact_expectation
from .hamiltonian import Hamiltonian
from .linalg import SpectralGenerator, check_state, numeric_policy
from .words import Word, all_words, conjugation_coefficients, target_coefficients

MAX_SYSTEM_COLUMNS = 10**5
MAX_ENUMERATED_PATHS = 10**6


class SolverError(RuntimeError):
    """A round system could not be solved to the residual tolerance."""

    def __init__(self, message: str, *, round: int | None = None, history: Word = (), residual: float | None = None):
        super().__init__(message)
        self.round = round
        self.history = tuple(history)
        self.residual = residual


@dataclass(frozen=True)
class ProtocolParams:
    N: int
    r: int | None = None
    schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.schedule is not None:
            sched = tuple(int(s) for s in self.schedule)
            object.__setattr__(self, "schedule", sched)
            if not sched or any(s < 1 for s in sched) or sum(sched) != self.N:
                raise ValueError(f"schedule {sched} must have entries >= 1 summing to N={self.N}")
            if self.r is not None and self.r < 1:
                raise ValueError(f"r must be >= 1, got {self.r}")
        else:
            if self.r is None or self.r < 1:
                raise ValueError(f"r must be >= 1, got {self.r}")
            if self.N % self.r:
                raise ValueError(f"N={self.N} is not a multiple of r={self.r}")

    @property
    def rounds(self) -> tuple[int, ...]:
        """Number of draws in each round."""
        if self.schedule is not None:
            return self.schedule
        return (self.r,) * (self.N // self.r)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def drawn_before(self, round: int) -> int:
        return sum(self.rounds[: round - 1])


@dataclass(frozen=True)
class RoundContext:
    """Adaptive state at the start of round ``round`` (1-based).

    ``history`` lists every previously drawn term index in draw order.
    """

    round: int
    history: Word = ()

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(int(a) for a in self.history))
        if self.round < 1:
            raise ValueError(f"round must be >= 1, got {self.round}")

    @property
    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for a in self.history:
            out[a] = out.get(a, 0) + 1
        return out

    def validate(self, params: ProtocolParams, L: int) -> None:
        if self.round > params.n_rounds:
            raise ValueError(f"round {self.round} exceeds the {params.n_rounds} rounds of {params}")
        expected = params.drawn_before(self.round)
        if len(self.history) != expected:
            raise ValueError(f"round {self.round} needs a history of {expected} draws, got {len(self.history)}")
        if any(not 0 <= a < L for a in self.history):
            raise ValueError(f"history {self.history} has indices outside [0, {L})")

    def round_words(self, params: ProtocolParams) -> list[Word]:
        """Split the history into the words drawn in each earlier round."""
        out, pos = [], 0
        for size in params.rounds[: self.round - 1]:
            out.append(self.history[pos : pos + size])
            pos += size
        return out

    def advance(self, word: Sequence[int]) -> "RoundContext":
        return RoundContext(self.round + 1, self.history + tuple(word))


def circuit_slots(params: ProtocolParams, round_words: Sequence[Sequence[int]]) -> Word:
    """Slot list (left-to-right matrix product) for words drawn in rounds 1..p."""
    slots: Word = ()
    for word in round_words:
        slots = tuple(word) + slots
    return slots


@dataclass(frozen=True)
class LinearSystem:
    rows: list[Word]
    cols: list[Word]
    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    context: RoundContext | None = None


def assemble_round_system(H: Hamiltonian, params: ProtocolParams, ctx: RoundContext) -> LinearSystem:
    ctx.validate(params, H.L)
    size = params.rounds[ctx.round - 1]
    if H.L**size > MAX_SYSTEM_COLUMNS:
        raise ValueError(f"L^r = {H.L}^{size} exceeds the tractability guard {MAX_SYSTEM_COLUMNS}")
    previous = ctx.round_words(params)
    rows = list(all_words(H.L, size))
    cols = list(itertools.product(range(H.L), repeat=size))
    step = H.lam / params.N
    row_index = {w: k for k, w in enumerate(rows)}
    A = np.zeros((len(rows), len(cols)))
    for j, s in enumerate(cols):
        series = conjugation_coefficients(circuit_slots(params, [*previous, s]), 1.0, size)
        for w, c in series.coeffs.items():
            A[row_index[w], j] = c * step ** len(w)
    fraction = (params.drawn_before(ctx.round) + size) / params.N
    target = target_coefficients(H, fraction, size)
    b = np.array([target[w] for w in rows])
    return LinearSystem(rows, cols, A, b, ctx)


@dataclass(frozen=True)
class QuasiDistribution:
    words: tuple[Word, ...]
    p: np.ndarray = field(repr=False)
    residual: float = 0.0
    rank: int | None = None
    context: RoundContext | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p[np.abs(p) < numeric_policy().prune_tol] = 0.0
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "words", tuple(tuple(w) for w in self.words))

    @property
    def coeffs(self) -> dict[Word, float]:
        return dict(zip(self.words, self.p.tolist()))

    @property
    def Z(self) -> float:
        return float(np.sum(np.abs(self.p)))

    def __getitem__(self, word) -> float:
        return self.coeffs[tuple(word)]


def solve_round(system: LinearSystem, tol: float | None = None) -> QuasiDistribution:
    """Least-squares solve with a residual gate (SVD-based, rank revealing)."""
    tol = numeric_policy().solver_tol if tol is None else tol
    p, _, rank, _ = np.linalg.lstsq(system.A, system.b, rcond=None)
    residual = float(np.linalg.norm(system.A @ p - system.b))
    ctx = system.context
    if residual > tol:
        raise SolverError(
            f"round system residual {residual:.3e} exceeds {tol:.1e}"
            + (f" (round {ctx.round}, history {ctx.history})" if ctx else ""),
            round=ctx.round if ctx else None,
            history=ctx.history if ctx else (),
            residual=residual,
        )
    if rank < len(system.cols):
        warnings.warn(f"round system has rank {rank} < {len(system.cols)} unknowns; using minimum-norm solution")
    return QuasiDistribution(tuple(system.cols), p, residual, int(rank), ctx)


@dataclass(frozen=True)
class SamplingView:
    words: tuple[Word, ...]
    q: np.ndarray
    Z: float
    signs: np.ndarray


def quasi_normalize(dist: QuasiDistribution) -> SamplingView:
    Z = dist.Z
    return SamplingView(dist.words, np.abs(dist.p) / Z, Z, np.sign(dist.p))


def closed_form(variant: str, H: Hamiltonian, ctx: RoundContext | None = None) -> QuasiDistribution:
    """Hand-derived two-term distributions, kept as test oracles for the solver.

    ``variant`` is one of ``C1_round1``, ``C1_round2``, ``C2``, ``C3_round2``,
    ``C4``.  The round-2 variants read the first draw from ``ctx.history``.
    """
    if H.L != 2:
        raise ValueError(f"closed forms exist only for L=2, got L={H.L}")
    h, lam = H.weights, H.lam

    def first_draw() -> int:
        if ctx is None or ctx.round != 2 or len(ctx.history) != 1:
            raise ValueError(f"{variant} needs a round-2 context with one prior draw")
        return ctx.history[0]

    if variant == "C1_round1":
        return QuasiDistribution(((0,), (1,)), h / lam, context=ctx)
    if variant == "C1_round2":
        i = first_draw()
        j = 1 - i
        p = {(i,): (h[i] - h[j]) / lam, (j,): 2 * h[j] / lam}
    elif variant == "C2":
        h1, h2 = h
        p = {
            (0, 0): h1 * (h1 - h2) / lam**2,
            (0, 1): 2 * h1 * h2 / lam**2,
            (1, 0): 2 * h1 * h2 / lam**2,
            (1, 1): h2 * (h2 - h1) / lam**2,
        }
    elif variant == "C3_round2":
        i = first_draw()
        j = 1 - i
        c = 0.5 * (3 / lam) ** 2
        p = {
            (i, i): c * (9 * h[i] ** 2 + 2 * lam**2 - 9 * lam * h[i]) / 9,
            (j, j): c * (3 * h[j] ** 2 - lam * h[j]) / 3,
            (i, j): c * h[i] * h[j],
            (j, i): c * (h[i] * h[j] - 2 / 3 * lam * h[j]),
        }
    elif variant == "C4":
        a = 3 * h / lam
        p = {}
        for i in (0, 1):
            j = 1 - i
            p[(i, i, i)] = a[i] ** 3 / 6 - a[i] ** 2 / 2 + a[i] / 3
            p[(i, j, j)] = a[i] * a[j] ** 2 / 6 - a[i] * a[j] / 4
            p[(i, i, j)] = a[i] ** 2 * a[j] / 6 - a[i] * a[j] / 4
            p[(i, j, i)] = a[i] ** 2 * a[j] / 6
    else:
        raise ValueError(f"unknown closed-form variant {variant!r}")
    words = tuple(sorted(p))
    return QuasiDistribution(words, np.array([p[w] for w in words]), context=ctx)


class DistributionCache:
    """Memoized round distributions for one ``(H, params)`` pair, keyed by ordered history.

    Lookups are lock-free; insertion happens under a lock so concurrent
    readers never see a half-built entry.
    """

    def __init__(self, H: Hamiltonian, params: ProtocolParams):
        self.H = H
        self.params = params
        self._store: dict[Word, QuasiDistribution] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def get(self, ctx: RoundContext) -> QuasiDistribution:
        dist = self._store.get(ctx.history)
        if dist is None:
            dist = solve_round(assemble_round_system(self.H, self.params, ctx))
            with self._lock:
                dist = self._store.setdefault(ctx.history, dist)
        return dist


_CACHES: "weakref.WeakKeyDictionary[Hamiltonian, dict[ProtocolParams, DistributionCache]]" = weakref.WeakKeyDictionary()


def distribution_cache(H: Hamiltonian, params: ProtocolParams) -> DistributionCache:
    per_h = _CACHES.setdefault(H, {})
    if params not in per_h:
        per_h[params] = DistributionCache(H, params)
    return per_h[params]


@dataclass(frozen=True)
class SampledPath:
    words: tuple[Word, ...]
    weight: float
    circuit: Word
    probability: float = 1.0
    signed_p: float = 1.0


def draw_path(H: Hamiltonian, params: ProtocolParams, rng: np.random.Generator) -> SampledPath:
    cache = distribution_cache(H, params)
    ctx = RoundContext(1)
    words, weight, prob, signed = [], 1.0, 1.0, 1.0
    for _ in range(params.n_rounds):
        dist = cache.get(ctx)
        view = quasi_normalize(dist)
        k = int(rng.choice(len(view.words), p=view.q))
        words.append(view.words[k])
        weight *= view.Z * view.signs[k]
        prob *= view.q[k]
        signed *= dist.p[k]
        ctx = ctx.advance(view.words[k])
    return SampledPath(tuple(words), weight, circuit_slots(params, words), prob, signed)


def enumerate_paths(H: Hamiltonian, params: ProtocolParams) -> list[SampledPath]:
    """Every branch of the adaptive tree with nonzero coefficient."""
    if H.L**params.N > MAX_ENUMERATED_PATHS:
        raise ValueError(f"L^N = {H.L}^{params.N} exceeds the enumeration guard {MAX_ENUMERATED_PATHS}")
    cache = distribution_cache(H, params)
    paths: list[SampledPath] = []

    def walk(ctx: RoundContext, words: list[Word], weight: float, prob: float, signed: float) -> None:
        if ctx.round > params.n_rounds:
            paths.append(SampledPath(tuple(words), weight, circuit_slots(params, words), prob, signed))
            return
        dist = cache.get(ctx)
        view = quasi_normalize(dist)
        for k, w in enumerate(view.words):
            if dist.p[k] == 0.0:
                continue
            walk(ctx.advance(w), [*words, w], weight * view.Z * view.signs[k], prob * view.q[k], signed * dist.p[k])

    walk(RoundContext(1), [], 1.0, 1.0, 1.0)
    return paths


def apply_circuit(H: Hamiltonian, slots: Sequence[int], angle: float, psi: np.ndarray) -> np.ndarray:
    """``U psi`` for ``U = V_{slots[0]} ... V_{slots[-1]}``, ``V_a = exp(-i angle H_a)``."""
    out = psi
    for a in reversed(slots):
        out = H.terms[a].spectral.apply(angle, out)
    return out


def circuit_expectation(H: Hamiltonian, Q: ObservableSpec, psi, slots: Sequence[int], angle: float) -> float:
    phi = apply_circuit(H, slots, angle, psi)
    return float(np.vdot(phi, Q.operator @ phi).real)


def _observable_spectrum(Q: ObservableSpec) -> SpectralGenerator:
    spec = getattr(Q, "_spectrum", None)
    if spec is None:
        spec = SpectralGenerator(Q.operator)
        object.__setattr__(Q, "_spectrum", spec)
    return spec


def shot_average(Q: ObservableSpec, phi: np.ndarray, shots: int, rng: np.random.Generator) -> float:
    """Average of ``shots`` projective measurements of ``Q`` in its eigenbasis."""
    spec = _observable_spectrum(Q)
    probs = np.abs(spec.eigenvectors.conj().T @ phi) ** 2
    probs /= probs.sum()
    counts = rng.multinomial(shots, probs)
    return float(counts @ spec.eigenvalues / shots)


def _measure(H, Q, psi, slots, angle, shots, rng) -> float:
    if shots is None:
        return circuit_expectation(H, Q, psi, slots, angle)
    return shot_average(Q, apply_circuit(H, slots, angle, psi), shots, rng)


def run_protocol_sample(
    H: Hamiltonian,
    Q: ObservableSpec,
    psi,
    t: float,
    params: ProtocolParams,
    rng: np.random.Generator,
    shots: int | None = None,
) -> float:
    """One signed estimator sample: path weight times the measured value.

    ``shots=None`` evaluates the exact circuit expectation; an integer draws
    that many projective measurements instead.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    psi = check_state(psi, H.dim)
    path = draw_path(H, params, rng)
    return path.weight * _measure(H, Q, psi, path.circuit, t * H.lam / params.N, shots, rng)


def sample_protocol(
    H: Hamiltonian,
    Q: ObservableSpec,
    psi,
    t: float,
    params: ProtocolParams,
    n_samples: int,
    rng: np.random.Generator,
    shots: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n_samples`` estimator samples in batch.

    Samples sharing a history are drawn together round by round, and circuit
    values are computed once per distinct path.  Returns ``(samples, weights)``.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    psi = check_state(psi, H.dim)
    cache = distribution_cache(H, params)
    histories: list[Word] = [()] * n_samples
    weights = np.ones(n_samples)
    for round_no in range(1, params.n_rounds + 1):
        groups: dict[Word, list[int]] = {}
        for idx, hist in enumerate(histories):
            groups.setdefault(hist, []).append(idx)
        for hist in sorted(groups):
            members = groups[hist]
            view = quasi_normalize(cache.get(RoundContext(round_no, hist)))
            picks = rng.choice(len(view.words), size=len(members), p=view.q)
            for idx, k in zip(members, picks):
                histories[idx] = hist + view.words[k]
                weights[idx] *= view.Z * view.signs[k]
    angle = t * H.lam / params.N
    values = np.empty(n_samples)
    memo: dict[Word, float] = {}
    for idx, hist in enumerate(histories):
        slots = circuit_slots(params, _split(hist, params.rounds))
        if shots is None:
            if slots not in memo:
                memo[slots] = circuit_expectation(H, Q, psi, slots, angle)
            values[idx] = memo[slots]
        else:
            values[idx] = shot_average(Q, apply_circuit(H, slots, angle, psi), shots, rng)
    return weights * values, weights


def _split(history: Word, sizes: Iterable[int]) -> list[Word]:
    out, pos = [], 0
    for size in sizes:
        out.append(history[pos : pos + size])
        pos += size
    return out


def exact_ensemble_expectation(H: Hamiltonian, Q: ObservableSpec, psi, t: float, params: ProtocolParams) -> float:
    """Noiseless ensemble average: sum over all paths of signed weight times expectation."""
    psi = check_state(psi, H.dim)
    angle = t * H.lam / params.N
    return float(sum(p.signed_p * circuit_expectation(H, Q, psi, p.circuit, angle) for p in enumerate_paths(H, params)))


def exact_estimator_moments(H: Hamiltonian, Q: ObservableSpec, psi, t: float, params: ProtocolParams) -> dict[str, float]:
    """Exact mean, variance and mean |weight| of the sampled estimator, by enumeration."""
    psi = check_state(psi, H.dim)
    angle = t * H.lam / params.N
    mean = second = z_mean = z_sq = 0.0
    for path in enumerate_paths(H, params):
        f = circuit_expectation(H, Q, psi, path.circuit, angle)
        mean += path.probability * path.weight * f
        second += path.probability * (path.weight * f) ** 2
        z_mean += path.probability * abs(path.weight)
        z_sq += path.probability * path.weight**2
    return {"mean": mean, "variance": max(second - mean**2, 0.0), "Z_mean": z_mean, "z_product_mean_square": z_sq}


def algorithmic_error(H: Hamiltonian, Q: ObservableSpec, psi, t: float, params: ProtocolParams) -> float:
    return abs(exact_expectation(H, Q, psi, t) - exact_ensemble_expectation(H, Q, psi, t, params))
