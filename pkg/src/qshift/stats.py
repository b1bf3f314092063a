"""Power-law fits, sample statistics and complexity-formula evaluation."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

NOISE_FLOOR = 1e-12
MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EstimateSummary:
    mean: float
    variance: float
    count: int
    z_product_mean_square: float | None = None

    @property
    def standard_error(self) -> float:
        return float(np.sqrt(self.variance / self.count))


def power_law_fit(points: Iterable[Sequence[float]], noise_floor: float = NOISE_FLOOR) -> FitResult:
    """Least-squares line through ``(ln t, ln error)``.

    Points with ``error < noise_floor`` are dropped before fitting.
    """
    pts = np.asarray([(float(t), float(e)) for t, e in points])
    if pts.size == 0:
        raise ValueError("no points to fit")
    if np.any(pts[:, 0] <= 0):
        raise ValueError("all t must be positive")
    pts = pts[pts[:, 1] >= noise_floor]
    if len(pts) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} points above the noise floor, got {len(pts)}")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    ss_res = float(np.sum((y - design @ (slope, intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), float(intercept), min(max(r2, 0.0), 1.0), (float(pts[0, 0]), float(pts[-1, 0])), len(pts))


def empirical_variance(samples, weights=None) -> EstimateSummary:
    """Mean and unbiased variance of estimator samples.

    ``weights`` (path weights) only feed the ``z_product_mean_square`` statistic.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    zms = None if weights is None else float(np.mean(np.asarray(weights, dtype=float) ** 2))
    return EstimateSummary(float(x.mean()), float(x.var(ddof=1)), int(x.size), zms)


def qshift_variance_prediction(Z_total: float, q_expectation: float) -> float:
    """Leading-order single-round estimator variance ``(Z^2 - 1) <Q>^2``."""
    if Z_total < 1 - 1e-10:
        raise ValueError(f"Z must be >= 1, got {Z_total}")
    return max(Z_total**2 - 1.0, 0.0) * q_expectation**2


def sampling_complexity_report(
    protocol: str,
    *,
    lam: float,
    t: float,
    epsilon: float,
    N: int | None = None,
    r: int | None = None,
    L: int | None = None,
    big_lambda: float | None = None,
    Z: float | None = None,
    q_expectation: float | None = None,
    h_norm: float | None = None,
    order: int | None = None,
) -> dict:
    """Evaluate the asymptotic gate/sampling complexity expressions for a protocol.

    Constants hidden in the O(.) are set to one; values are for comparison only.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    inputs = {k: v for k, v in locals().items() if v is not None}
    out: dict = {"inputs": inputs}
    if protocol == "trotter":
        k = order or 1
        if L is None or big_lambda is None:
            raise ValueError("trotter report needs L and big_lambda")
        if k == 1:
            gate = L**3 * (big_lambda * t) ** 2 / epsilon
        elif k == 2:
            gate = L**2.5 * (big_lambda * t) ** 1.5 / epsilon**0.5
        elif k % 2 == 0:
            kk = k // 2
            gate = L ** (2 + 1 / (2 * kk)) * (big_lambda * t) ** (1 + 1 / (2 * kk)) / epsilon ** (1 / (2 * kk))
        else:
            raise ValueError(f"unsupported Trotter order {k}")
        out.update(gate_complexity=gate, sampling_complexity=1.0, branch="deterministic")
    elif protocol == "qdrift":
        if N is None:
            raise ValueError("qdrift report needs N")
        out.update(
            gate_complexity=(lam * t) ** 2 / epsilon,
            sampling_complexity=(lam * t / N) ** 2 / epsilon**2,
            branch="qdrift",
        )
    elif protocol == "qshift":
        if r is None or Z is None:
            raise ValueError("qshift report needs r and Z")
        gate = (lam * t) ** (1 + 1 / r) / epsilon ** (1 / r)
        if Z > 1 + 1e-12:
            if q_expectation is None:
                raise ValueError("qshift report with Z > 1 needs q_expectation")
            sampling, branch = (Z**2 - 1) * q_expectation**2 / epsilon**2, "Z>1"
        else:
            if h_norm is None:
                raise ValueError("qshift report with Z = 1 needs h_norm")
            sampling, branch = h_norm**2 * t**2 / epsilon**2, "Z=1"
        out.update(gate_complexity=gate, sampling_complexity=sampling, branch=branch)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return out
