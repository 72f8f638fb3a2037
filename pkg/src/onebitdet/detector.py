"""Likelihood-ratio detector on adjacent sign agreements.

Under H1 the conditional probability that bit ``i+1`` agrees with bit ``i`` is
``c_i = a_i + (1 - 2 a_i) p_hat``, where ``p_hat`` is twice the positive-quadrant
probability of two adjacent noisy active samples and ``a_i`` collects the mass
of the inactive and the active-then-inactive transitions.  Under H0 every
agreement has probability 1/2.  The log-likelihood statistic sums ``ln c_i`` over
agreements and ``ln(1 - c_i)`` over disagreements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLog, LengthTooShort, PriorOutOfRange, ValidationError
from .model import ModelParams, state_prob_sequence
from .orthant import orthant2, pair_correlation

C_CLIP = 1e-12


@dataclass(frozen=True)
class DetectorCoeffs:
    p_hat: float
    a: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "c"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_parts(cls, p_hat: float, a) -> "DetectorCoeffs":
        a = np.asarray(a, dtype=float)
        c = np.clip(a + (1.0 - 2.0 * a) * p_hat, C_CLIP, 1.0 - C_CLIP)
        return cls(p_hat=float(p_hat), a=a, c=c)

    @property
    def log_c(self) -> np.ndarray:
        return np.log(self.c)

    @property
    def log_1mc(self) -> np.ndarray:
        return np.log1p(-self.c)

    # Per-term log-likelihood ratios against the H0 value 1/2.  The statistic is
    # their sum minus (N - 1) ln 2, which keeps corr = 0 exactly at the threshold.
    @property
    def gain_agree(self) -> np.ndarray:
        return np.log(2.0 * self.c)

    @property
    def gain_disagree(self) -> np.ndarray:
        return np.log(2.0 * (1.0 - self.c))

    @property
    def offset(self) -> float:
        return self.c.shape[0] * math.log(2.0)

    def perturbed(self, p_hat_factor: float = 1.0, a_factor: float = 1.0) -> "DetectorCoeffs":
        """Coefficients with ``p_hat`` and every ``a_i`` scaled by the given factors."""
        p_hat = min(1.0 - C_CLIP, max(C_CLIP, self.p_hat * p_hat_factor))
        return DetectorCoeffs.from_parts(p_hat, np.clip(self.a * a_factor, 0.0, 1.0))


@dataclass(frozen=True)
class DetectionResult:
    statistic: float
    threshold: float
    decision: str


def agreement_sequence(r) -> np.ndarray:
    """1 where adjacent bits are equal, 0 where they differ."""
    r = np.asarray(r)
    if r.ndim != 1 or r.shape[0] < 2:
        raise LengthTooShort("need at least two bits to form an agreement")
    return (r[1:] == r[:-1]).astype(np.int8)


def detector_coeffs(params: ModelParams) -> DetectorCoeffs:
    p_hat = 2.0 * orthant2(pair_correlation(params))
    p0 = state_prob_sequence(params)[:-1]
    a = 0.5 * p0 + 0.5 * params.p10 * (1.0 - p0)
    return DetectorCoeffs.from_parts(p_hat, a)


def statistic(e, coeffs: DetectorCoeffs) -> float:
    e = np.asarray(e)
    if e.shape != coeffs.c.shape:
        raise ValidationError(
            f"agreement sequence has length {e.shape[0]}, coefficients {coeffs.c.shape[0]}")
    terms = np.where(e == 1, coeffs.c, 1.0 - coeffs.c)
    if np.any(terms <= 0.0):
        raise DegenerateLog("non-positive per-term probability in the statistic")
    return float(np.sum(np.log(2.0 * terms))) - coeffs.offset


def threshold(prior_h0: float, n: int) -> float:
    if not (0.0 < prior_h0 < 1.0):
        raise PriorOutOfRange(f"prior of H0 must lie strictly inside (0, 1), got {prior_h0!r}")
    return math.log(prior_h0 / (1.0 - prior_h0)) - (n - 1) * math.log(2.0)


def detect(r, params: ModelParams, coeffs: DetectorCoeffs | None = None) -> DetectionResult:
    """Decide H1 when the statistic strictly exceeds the prior threshold."""
    r = np.asarray(r)
    if r.shape != (params.n,):
        raise ValidationError(f"bit vector has shape {r.shape}, expected ({params.n},)")
    if not np.all(np.isin(r, (-1, 1))):
        raise ValidationError("bits must be -1 or +1")
    if coeffs is None:
        coeffs = detector_coeffs(params)
    t = statistic(agreement_sequence(r), coeffs)
    th = threshold(params.prior_h0, params.n)
    return DetectionResult(statistic=t, threshold=th, decision="H1" if t > th else "H0")
