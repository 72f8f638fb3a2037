"""Closed-form performance of the agreement detector.

Under H0 the agreements are i.i.d. fair coins, so the statistic's mean and
variance are plain sums.  Under H1 the agreements are dependent and the
variance needs ``P(e_i = a, e_j = b | H1)`` for every pair ``i != j``.

Those pair probabilities are computed by conditioning on the hidden states
inside the window that the two agreements touch.  Given the states, the noisy
samples ``z = s + n`` are jointly Gaussian with a block structure (one block per
active run), so each sign event is a sum of orthant probabilities.  Two
within-run correlation structures are supported:

``"tridiagonal"``
    Only adjacent active samples are correlated (``corr * sigma1**2``).  This
    is the structure assumed by the closed-form analysis.
``"ar"``
    Active samples in the same run have covariance ``sigma1**2 * corr**lag``,
    which is what the default signal generator produces.

For ``j - i >= 3`` the states between ``i + 1`` and ``j`` enter only through a
power of the transition matrix (plus, for ``"ar"``, the probability that the
run bridges the whole gap).  Every pair probability is linear in the inactive
probability ``p_{i,0}`` of the left index, so one conditional table per gap
covers all index pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .detector import DetectorCoeffs, detector_coeffs
from .errors import DegenerateVariance, IndexOutOfRange, NegativeVariance, ValidationError
from .model import ModelParams, state_prob_sequence, transition_matrix
from .orthant import orthant_probability

STRUCTURES = ("tridiagonal", "ar")

# contributions below this are dropped from the bridged-run correction
_BRIDGE_CUTOFF = 1e-16


def q_function(x: float | np.ndarray):
    """Upper tail of the standard normal distribution."""
    return special.ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(special.ndtr(-x))


def q_inverse(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise ValidationError(f"tail probability must lie in (0, 1), got {p!r}")
    return float(-special.ndtri(p))


@dataclass(frozen=True)
class NullMoments:
    mu0: float
    var0: float

    @property
    def std0(self) -> float:
        return math.sqrt(self.var0)


@dataclass(frozen=True)
class AltMoments:
    mu1: float
    var1: float

    @property
    def std1(self) -> float:
        return math.sqrt(self.var1)


@dataclass(frozen=True)
class PairJointProbs:
    p00: float
    p01: float
    p10: float
    p11: float

    def as_array(self) -> np.ndarray:
        """2x2 array indexed ``[e_i, e_j]``."""
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])


@dataclass(frozen=True)
class EventChainTerms:
    p_tilde: float
    p_tilde_prime: float
    p_bar: float


def null_moments(coeffs: DetectorCoeffs) -> NullMoments:
    lc, l1c = coeffs.log_c, coeffs.log_1mc
    # same excess-over-log(1/2) form as the statistic, so corr=0 gives mu0 == t exactly
    mu0 = 0.5 * float(np.sum(coeffs.gain_agree + coeffs.gain_disagree)) - coeffs.offset
    var0 = 0.25 * float(np.sum((lc - l1c) ** 2))
    return NullMoments(mu0=mu0, var0=var0)


def _step_or_q(th: float, mean: float, var: float) -> float:
    if var <= 0.0:
        return 1.0 if th < mean else 0.0
    return q_function((th - mean) / math.sqrt(var))


def pfa_theoretical(th: float, m: NullMoments) -> float:
    return _step_or_q(th, m.mu0, m.var0)


def pd_theoretical(th: float, m: AltMoments) -> float:
    return _step_or_q(th, m.mu1, m.var1)


def threshold_for_pfa(target_pfa: float, m: NullMoments) -> float:
    if m.var0 <= 0.0:
        raise DegenerateVariance("null variance is zero; no threshold attains a given p_fa")
    return m.mu0 + m.std0 * q_inverse(target_pfa)


def _window_cov(params: ModelParams, positions, states, runs, structure: str) -> np.ndarray:
    """Covariance of the noisy samples at ``positions`` given their states.

    ``runs[k]`` labels the active run that coordinate ``k`` belongs to, or is
    ``None`` for an inactive coordinate.
    """
    dim = len(positions)
    noise = params.noise_std ** 2
    s1 = params.sigma1 ** 2
    cov = np.zeros((dim, dim))
    for k in range(dim):
        cov[k, k] = (s1 if states[k] else params.sigma0 ** 2) + noise
        for l in range(k + 1, dim):
            if runs[k] is None or runs[k] != runs[l]:
                continue
            lag = abs(positions[l] - positions[k])
            if structure == "ar":
                cov[k, l] = cov[l, k] = s1 * params.corr ** lag
            elif lag == 1:
                cov[k, l] = cov[l, k] = params.corr * s1
    return cov


def _contiguous_runs(states) -> list:
    runs, label = [], 0
    for k, st in enumerate(states):
        if not st:
            runs.append(None)
            continue
        if k > 0 and states[k - 1]:
            runs.append(runs[-1])
        else:
            label += 1
            runs.append(label)
    return runs


def _event_table(cov: np.ndarray, left: tuple, right: tuple) -> np.ndarray:
    """``table[a, b] = P(e_left = a, e_right = b)`` for z ~ N(0, cov).

    ``left`` and ``right`` are coordinate pairs whose sign agreement defines
    each event; they may share a coordinate.
    """
    dim = cov.shape[0]
    table = np.zeros((2, 2))
    for signs in itertools.product((1, -1), repeat=dim):
        if signs[0] == -1:
            continue  # central symmetry: P(signs) = P(-signs)
        a = int(signs[left[0]] == signs[left[1]])
        b = int(signs[right[0]] == signs[right[1]])
        table[a, b] += 2.0 * orthant_probability(cov, signs)
    return table


class PairModel:
    """Joint agreement probabilities under H1 for one parameter set.

    ``table(gap)`` returns an array ``X[s, a, b]`` holding
    ``P(e_i = a, e_{i+gap} = b | state_i = s)``.
    """

    def __init__(self, params: ModelParams, structure: str = "tridiagonal"):
        if structure not in STRUCTURES:
            raise ValidationError(f"unknown correlation structure {structure!r}")
        self.params = params
        self.structure = structure
        self.trans = transition_matrix(params)
        self.p_inactive = state_prob_sequence(params)
        self._tables: dict[int, np.ndarray] = {}
        self._pair_agree = self._adjacent_agreement()

    def _adjacent_agreement(self) -> np.ndarray:
        q = np.empty((2, 2))
        for s, t in itertools.product((0, 1), repeat=2):
            cov = _window_cov(self.params, (0, 1), (s, t),
                              _contiguous_runs((s, t)), self.structure)
            q[s, t] = _event_table(cov, (0, 1), (0, 1))[1, 1]
        return q

    def marginal_given_state(self) -> np.ndarray:
        """``P(e_i = 1 | state_i = s)``, indexed by ``s``."""
        return np.einsum("st,st->s", self.trans, self._pair_agree)

    def _contiguous_table(self, gap: int) -> np.ndarray:
        length = gap + 2
        positions = tuple(range(length))
        out = np.zeros((2, 2, 2))
        for first in (0, 1):
            for rest in itertools.product((0, 1), repeat=length - 1):
                states = (first,) + rest
                weight = 1.0
                for k in range(1, length):
                    weight *= self.trans[states[k - 1], states[k]]
                if weight == 0.0:
                    continue
                cov = _window_cov(self.params, positions, states,
                                  _contiguous_runs(states), self.structure)
                out[first] += weight * _event_table(cov, (0, 1), (gap, gap + 1))
        return out

    def _separated_table(self, gap: int) -> np.ndarray:
        t = self.trans
        middle = np.linalg.matrix_power(t, gap - 1)
        q = self._pair_agree
        qa = np.stack([1.0 - q, q])  # qa[a, s, t] = P(e = a | states s, t)
        # independent blocks: sum over (s1, s2, s3) of T[s0,s1] M[s1,s2] T[s2,s3] qa[a,s0,s1] qa[b,s2,s3]
        left = np.einsum("xy,axy->xay", t, qa)            # [s0, a, s1]
        right = np.einsum("zw,bzw->bz", t, qa)            # [b, s2]
        out = np.einsum("xay,yz,bz->xab", left, middle, right)
        if self.structure == "ar":
            out += self._bridge_correction(gap, qa)
        return out

    def _bridge_correction(self, gap: int, qa: np.ndarray) -> np.ndarray:
        """Extra mass when one active run spans both agreement pairs."""
        p = self.params
        stay = (1.0 - p.p10) ** (gap - 1)
        out = np.zeros((2, 2, 2))
        if stay * p.corr ** (gap - 1) < _BRIDGE_CUTOFF:
            return out
        positions = (0, 1, gap, gap + 1)
        for s0, s3 in itertools.product((0, 1), repeat=2):
            weight = self.trans[s0, 1] * stay * self.trans[1, s3]
            if weight == 0.0:
                continue
            states = (s0, 1, 1, s3)
            runs = tuple(1 if st else None for st in states)
            cov = _window_cov(p, positions, states, runs, self.structure)
            joint = _event_table(cov, (0, 1), (2, 3))
            indep = np.outer(qa[:, s0, 1], qa[:, 1, s3])
            out[s0] += weight * (joint - indep)
        return out

    def table(self, gap: int) -> np.ndarray:
        if gap < 1:
            raise ValidationError(f"gap must be positive, got {gap}")
        if gap not in self._tables:
            self._tables[gap] = (self._contiguous_table(gap) if gap <= 2
                                 else self._separated_table(gap))
        return self._tables[gap]

    def pair(self, i: int, j: int) -> PairJointProbs:
        """Joint agreement probabilities for 1-based agreement indices ``i != j``."""
        last = self.params.n - 1
        if not (1 <= i <= last and 1 <= j <= last) or i == j:
            raise IndexOutOfRange(f"need distinct indices in [1, {last}], got ({i}, {j})")
        swap = j < i
        lo, hi = (j, i) if swap else (i, j)
        p0 = self.p_inactive[lo - 1]
        x = self.table(hi - lo)
        probs = p0 * x[0] + (1.0 - p0) * x[1]
        if swap:
            probs = probs.T
        return PairJointProbs(p00=probs[0, 0], p01=probs[0, 1], p10=probs[1, 0], p11=probs[1, 1])

    def marginals(self) -> np.ndarray:
        """``P(e_i = 1 | H1)`` for i = 1..n-1."""
        m = self.marginal_given_state()
        p0 = self.p_inactive[:-1]
        return p0 * m[0] + (1.0 - p0) * m[1]


def pair_joint_probs(i: int, j: int, params: ModelParams, coeffs: DetectorCoeffs | None = None,
                     structure: str = "tridiagonal") -> PairJointProbs:
    """``P(e_i = a, e_j = b | H1)`` for one index pair.

    ``coeffs`` is accepted for interface symmetry with the moment functions;
    the probabilities depend on the model alone.
    """
    return PairModel(params, structure).pair(i, j)


def event_chain_terms(params: ModelParams) -> EventChainTerms:
    """Orthant probabilities of fully active 3- and 4-sample windows.

    ``p_tilde`` is P(-, +, -) and ``p_tilde_prime`` is P(+, -, +) on the
    trivariate tridiagonal covariance; ``p_bar`` is P(-, +, -, +) on the
    quadrivariate one.
    """
    c3 = _window_cov(params, (0, 1, 2), (1, 1, 1), (1, 1, 1), "tridiagonal")
    c4 = _window_cov(params, (0, 1, 2, 3), (1, 1, 1, 1), (1, 1, 1, 1), "tridiagonal")
    return EventChainTerms(
        p_tilde=orthant_probability(c3, (-1, 1, -1)),
        p_tilde_prime=orthant_probability(c3, (1, -1, 1)),
        p_bar=orthant_probability(c4, (-1, 1, -1, 1)),
    )


def alt_moments(params: ModelParams, coeffs: DetectorCoeffs | None = None,
                structure: str = "tridiagonal", model: PairModel | None = None) -> AltMoments:
    """Mean and variance of the statistic under H1.

    The per-term log weights come from ``coeffs`` (which may be perturbed away
    from the model); the agreement probabilities always come from ``params``.
    The variance is accumulated as a sum of covariances,
    ``sum_i Var(t_i) + 2 sum_{i<j} Cov(t_i, t_j)``, which equals
    ``E{t^2} - mu1^2`` without the cancellation of two large numbers.
    """
    if coeffs is None:
        coeffs = detector_coeffs(params)
    if model is None:
        model = PairModel(params, structure)
    n_terms = params.n - 1
    if coeffs.c.shape[0] != n_terms:
        raise ValidationError("coefficients do not match the model length")
    lc, l1c = coeffs.log_c, coeffs.log_1mc
    delta = lc - l1c
    m = model.marginals()
    mu1 = float(np.sum(m * coeffs.gain_agree + (1.0 - m) * coeffs.gain_disagree)) - coeffs.offset

    var = float(np.sum(m * (1.0 - m) * delta ** 2))
    p0 = model.p_inactive
    cross = 0.0
    for gap in range(1, n_terms):
        x = model.table(gap)
        lo = np.arange(n_terms - gap)
        p11 = p0[lo] * x[0, 1, 1] + (1.0 - p0[lo]) * x[1, 1, 1]
        cov = p11 - m[lo] * m[lo + gap]
        cross += float(np.sum(cov * delta[lo] * delta[lo + gap]))
    var += 2.0 * cross
    if var < 0.0:
        if var < -1e-9:
            raise NegativeVariance(f"H1 variance came out negative ({var:.3e})")
        var = 0.0
    return AltMoments(mu1=mu1, var1=var)


@dataclass(frozen=True)
class TheorySummary:
    null: NullMoments
    alt: AltMoments
    threshold: float
    pfa: float
    pd: float


def theory(params: ModelParams, structure: str = "tridiagonal",
           coeffs: DetectorCoeffs | None = None, th: float | None = None) -> TheorySummary:
    """Moments and operating point at the prior threshold (or at ``th``)."""
    from .detector import threshold as prior_threshold

    if coeffs is None:
        coeffs = detector_coeffs(params)
    null = null_moments(coeffs)
    alt = alt_moments(params, coeffs, structure)
    if th is None:
        th = prior_threshold(params.prior_h0, params.n)
    return TheorySummary(null=null, alt=alt, threshold=th,
                         pfa=pfa_theoretical(th, null), pd=pd_theoretical(th, alt))
