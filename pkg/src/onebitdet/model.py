"""Markovian Bernoulli-Gaussian signal model.

Each sample of the signal is either *inactive* (zero-mean Gaussian, small std
``sigma0``) or *active* (zero-mean Gaussian, std ``sigma1``).  The labels follow
a two-state first-order Markov chain, so active samples cluster into blocks.
Adjacent active samples are correlated with coefficient ``corr``.

State labels are stored as ``int8``: 0 = inactive, 1 = active.  Bits are stored
as ``int8`` in {-1, +1}.

Random draws for one observation are taken from a single generator in a fixed
order: ``n`` uniforms for the states, ``n`` standard normals for the signal and
``n`` standard normals for the noise.  The compiled and pure-Python simulation
kernels consume exactly this layout, so a trial seed reproduces the same bits
whichever path generated them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Union

import numpy as np

from .errors import RejectedCovariance, ValidationError

INACTIVE = 0
ACTIVE = 1

GENERATION_MODES = ("ar", "tridiagonal")

SeedLike = Union[int, np.random.Generator]


@dataclass(frozen=True)
class ModelParams:
    p10_init: float
    p01: float
    p10: float
    sigma0: float
    sigma1: float
    corr: float
    noise_std: float
    n: int
    prior_h0: float = 0.5

    def __post_init__(self):
        for name in ("p10_init", "p01", "p10", "prior_h0"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0) or math.isnan(value):
                raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
        for name in ("sigma0", "sigma1", "noise_std"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ValidationError(f"{name} must be positive and finite, got {value!r}")
        if not (0.0 <= self.corr < 1.0):
            raise ValidationError(f"corr must lie in [0, 1), got {self.corr!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def default_params(corr: float = 0.7, snr_db: float | None = -5.0, **overrides) -> ModelParams:
    """The fixed simulation setting used throughout the experiments.

    With ``snr_db`` given, ``noise_std`` is solved from the SNR definition.
    """
    base = dict(p10_init=0.95, p01=0.01 / 0.9, p10=0.1, sigma0=0.01, sigma1=1.0,
                corr=corr, noise_std=1.0, n=1000, prior_h0=0.5)
    base.update(overrides)
    params = ModelParams(**base)
    if snr_db is not None:
        params = params.replace(noise_std=noise_std_for_snr(params, snr_db))
    return params


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_generator(seed: int, k: int) -> np.random.Generator:
    """Generator for trial ``k`` of an experiment seeded with ``seed``.

    Uses the ``SeedSequence`` spawn-key tree, so trial ``k`` is reproducible
    independent of how many other trials run or in which order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def transition_matrix(params: ModelParams) -> np.ndarray:
    """Row-stochastic matrix, rows/columns ordered (inactive, active)."""
    return np.array([[1.0 - params.p01, params.p01],
                     [params.p10, 1.0 - params.p10]])


def transition_matrix_power(params: ModelParams, k: int) -> np.ndarray:
    if k < 0:
        raise ValidationError(f"power must be non-negative, got {k}")
    return np.linalg.matrix_power(transition_matrix(params), int(k))


def state_prob_sequence(params: ModelParams) -> np.ndarray:
    """Marginal probability of the inactive state at every index 1..n."""
    t = transition_matrix(params)
    out = np.empty(params.n)
    row = np.array([params.p10_init, 1.0 - params.p10_init])
    for i in range(params.n):
        out[i] = row[0]
        row = row @ t
    return np.clip(out, 0.0, 1.0)


def states_from_uniforms(params: ModelParams, u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    states = np.empty(n, dtype=np.int8)
    states[0] = ACTIVE if u[0] >= params.p10_init else INACTIVE
    for i in range(1, n):
        if states[i - 1] == INACTIVE:
            states[i] = ACTIVE if u[i] < params.p01 else INACTIVE
        else:
            states[i] = INACTIVE if u[i] < params.p10 else ACTIVE
    return states


def sample_states(params: ModelParams, rng_seed: SeedLike) -> np.ndarray:
    rng = as_generator(rng_seed)
    return states_from_uniforms(params, rng.random(params.n))


def active_runs(states: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` index ranges of maximal active runs."""
    padded = np.concatenate(([0], (np.asarray(states) == ACTIVE).astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def signal_from_normals(params: ModelParams, states: np.ndarray, w: np.ndarray,
                        mode: str = "ar") -> np.ndarray:
    if mode not in GENERATION_MODES:
        raise ValidationError(f"unknown generation mode {mode!r}")
    states = np.asarray(states)
    if states.shape != w.shape:
        raise ValidationError("states and draws must have equal length")
    s = params.sigma0 * w
    r = params.corr
    for start, stop in active_runs(states):
        seg = w[start:stop]
        if mode == "ar":
            innov = params.sigma1 * math.sqrt(1.0 - r * r)
            run = np.empty_like(seg)
            run[0] = params.sigma1 * seg[0]
            for k in range(1, len(seg)):
                run[k] = r * run[k - 1] + innov * seg[k]
        else:
            m = stop - start
            cov = params.sigma1 ** 2 * (np.eye(m) + r * (np.eye(m, k=1) + np.eye(m, k=-1)))
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise RejectedCovariance(
                    f"active run of length {m} at index {start} has a non positive "
                    f"definite tridiagonal covariance (corr={r})") from None
            run = chol @ seg
        s[start:stop] = run
    return s


def sample_signal(params: ModelParams, states: np.ndarray, rng_seed: SeedLike,
                  mode: str = "ar") -> np.ndarray:
    """Draw a signal given its state sequence.

    ``mode="ar"`` runs a first-order autoregression inside each active run,
    which matches the adjacent moment ``corr * sigma1**2`` for any ``corr < 1``.
    ``mode="tridiagonal"`` samples each run from the exact tridiagonal
    covariance and raises ``RejectedCovariance`` when a run is too long for it
    to be positive definite.
    """
    if len(states) != params.n:
        raise ValidationError(f"states have length {len(states)}, expected {params.n}")
    rng = as_generator(rng_seed)
    return signal_from_normals(params, states, rng.standard_normal(params.n), mode)


def sign_bits(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, 1, -1).astype(np.int8)


def observe(params: ModelParams, hypothesis: str, rng_seed: SeedLike,
            mode: str = "ar") -> np.ndarray:
    """One-bit observation of noise alone (``"H0"``) or signal plus noise (``"H1"``).

    Both hypotheses consume the same draws; under H0 the state and signal draws
    are simply discarded.
    """
    if hypothesis not in ("H0", "H1"):
        raise ValidationError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    rng = as_generator(rng_seed)
    states = sample_states(params, rng)
    w = rng.standard_normal(params.n)
    noise = params.noise_std * rng.standard_normal(params.n)
    if hypothesis == "H0":
        return sign_bits(noise)
    return sign_bits(signal_from_normals(params, states, w, mode) + noise)


def mean_signal_power(params: ModelParams) -> float:
    p0 = state_prob_sequence(params)
    return params.sigma1 ** 2 + (params.sigma0 ** 2 - params.sigma1 ** 2) * p0.sum() / params.n


def snr_db(params: ModelParams) -> float:
    return 10.0 * math.log10(mean_signal_power(params) / params.noise_std ** 2)


def noise_std_for_snr(params: ModelParams, target_snr_db: float) -> float:
    """Noise std that puts ``params`` at ``target_snr_db`` (its own ``noise_std`` is ignored)."""
    if not math.isfinite(target_snr_db):
        raise ValidationError(f"target SNR must be finite, got {target_snr_db!r}")
    return math.sqrt(mean_signal_power(params) / 10.0 ** (target_snr_db / 10.0))
