"""Seeded Monte-Carlo experiments.

Seeding: trial ``k`` under hypothesis ``h`` (0 for H0, 1 for H1) draws from
``SeedSequence(seed, spawn_key=(h, k))``, so any trial can be regenerated on its
own and results do not depend on block size or execution order.  Sweep points
of one experiment share the seed, i.e. they reuse the same underlying draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis, kernels
from .detector import DetectorCoeffs, agreement_sequence, detector_coeffs
from .errors import ValidationError
from .model import GENERATION_MODES, ModelParams, observe, default_params

HYPOTHESES = ("H0", "H1")
BLOCK = 256
ORACLE_BLOCK = 1 << 16


@dataclass(frozen=True)
class Perturbation:
    name: str
    p_hat_factor: float = 1.0
    a_factor: float = 1.0


DEFAULT_PERTURBATIONS = (
    Perturbation("baseline"),
    Perturbation("p_hat+10%", p_hat_factor=1.1),
    Perturbation("p_hat-10%", p_hat_factor=0.9),
    Perturbation("a+10%", a_factor=1.1),
    Perturbation("a-10%", a_factor=0.9),
)


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams = field(default_factory=default_params)
    trials_per_point: int = 10_000
    seed: int = 20240101
    generation_mode: str = "ar"
    snr_db: float | None = -5.0
    corr_grid: tuple = (0.4, 0.55, 0.7, 0.85)
    snr_grid_db: tuple = (-10.0, -7.5, -5.0, -2.5, 0.0)
    param_perturbations: tuple = DEFAULT_PERTURBATIONS
    fixed_pfa: float = 0.3
    roc_points: int = 49
    output_path: str = "results"
    theory_structure: str | None = None

    def __post_init__(self):
        if self.trials_per_point < 1:
            raise ValidationError("trials_per_point must be at least 1")
        if self.generation_mode not in GENERATION_MODES:
            raise ValidationError(f"unknown generation mode {self.generation_mode!r}")
        if not self.corr_grid or not self.snr_grid_db or not self.param_perturbations:
            raise ValidationError("sweep grids must be non-empty")
        if any(not (0.0 <= c < 1.0) for c in self.corr_grid):
            raise ValidationError("corr grid values must lie in [0, 1)")
        if not (0.0 < self.fixed_pfa < 1.0):
            raise ValidationError("fixed_pfa must lie in (0, 1)")
        if self.roc_points < 1:
            raise ValidationError("roc_points must be at least 1")
        if self.theory_structure not in (None,) + analysis.STRUCTURES:
            raise ValidationError(f"unknown theory structure {self.theory_structure!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def resolved_params(self, corr: float | None = None, snr_db: float | None = None) -> ModelParams:
        """Base parameters with ``corr`` and SNR applied (SNR sets ``noise_std``)."""
        from .model import noise_std_for_snr

        params = self.params if corr is None else self.params.replace(corr=corr)
        target = self.snr_db if snr_db is None else snr_db
        if target is not None:
            params = params.replace(noise_std=noise_std_for_snr(params, target))
        return params


@dataclass
class TrialBatch:
    hypothesis: str
    seed: int
    params: ModelParams
    statistics: np.ndarray        # (trials, n_coeff_sets)
    agreement_counts: np.ndarray  # (trials,)

    def __len__(self) -> int:
        return self.statistics.shape[0]

    def column(self, k: int = 0) -> np.ndarray:
        return self.statistics[:, k]


def _trial_draws(seed: int, hyp_index: int, start: int, stop: int, n: int):
    u = np.empty((stop - start, n))
    w = np.empty_like(u)
    v = np.empty_like(u)
    for row, k in enumerate(range(start, stop)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(hyp_index, k)))
        u[row] = rng.random(n)
        w[row] = rng.standard_normal(n)
        v[row] = rng.standard_normal(n)
    return u, w, v


def trial_bits(params: ModelParams, hypothesis: str, seed: int, start: int, stop: int,
               mode: str = "ar") -> np.ndarray:
    """Bits of trials ``start..stop-1``, one row per trial."""
    h = HYPOTHESES.index(hypothesis)
    if mode == "tridiagonal" and hypothesis == "H1":
        rows = [observe(params, hypothesis,
                        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(h, k))),
                        mode=mode)
                for k in range(start, stop)]
        return np.array(rows, dtype=np.int8).reshape(stop - start, params.n)
    u, w, v = _trial_draws(seed, h, start, stop, params.n)
    if hypothesis == "H0":
        return kernels.h0_bits(params, v)
    return kernels.h1_bits(params, u, w, v)


def run_trials(config: ExperimentConfig, hypothesis: str,
               coeffs: DetectorCoeffs | list | None = None,
               params: ModelParams | None = None) -> TrialBatch:
    """Simulate ``config.trials_per_point`` statistics under one hypothesis.

    ``coeffs`` may be a list of coefficient sets; all are scored on the same
    bits and returned as columns.
    """
    if hypothesis not in HYPOTHESES:
        raise ValidationError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    params = config.resolved_params() if params is None else params
    if coeffs is None:
        coeffs = detector_coeffs(params)
    coeff_list = coeffs if isinstance(coeffs, (list, tuple)) else [coeffs]
    gain_a = np.stack([c.gain_agree for c in coeff_list])
    gain_d = np.stack([c.gain_disagree for c in coeff_list])
    offsets = np.array([c.offset for c in coeff_list])

    trials = config.trials_per_point
    stats = np.empty((trials, len(coeff_list)))
    counts = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, BLOCK):
        stop = min(trials, start + BLOCK)
        bits = trial_bits(params, hypothesis, config.seed, start, stop, config.generation_mode)
        stats[start:stop] = kernels.scores(bits, gain_a, gain_d) - offsets
        counts[start:stop] = np.count_nonzero(bits[:, 1:] == bits[:, :-1], axis=1)
    return TrialBatch(hypothesis=hypothesis, seed=config.seed, params=params,
                      statistics=stats, agreement_counts=counts)


def binomial_se(p, trials: int):
    return np.sqrt(np.asarray(p) * (1.0 - np.asarray(p)) / trials)


@dataclass
class RocCurve:
    threshold: np.ndarray
    pfa_emp: np.ndarray
    pfa_emp_se: np.ndarray
    pd_emp: np.ndarray
    pd_emp_se: np.ndarray
    pfa_theory: np.ndarray
    pd_theory: np.ndarray
    label: str = ""

    COLUMNS = ("threshold", "pfa_emp", "pfa_emp_se", "pd_emp", "pd_emp_se",
               "pfa_theory", "pd_theory")

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def __len__(self) -> int:
        return len(self.threshold)

    def auc(self) -> float:
        """Trapezoidal area under the empirical curve, endpoints included."""
        x = np.concatenate(([0.0], self.pfa_emp[::-1], [1.0]))
        y = np.concatenate(([0.0], self.pd_emp[::-1], [1.0]))
        order = np.lexsort((y, x))
        return float(np.trapezoid(y[order], x[order]))

    def pd_at(self, pfa) -> np.ndarray:
        """Empirical p_d linearly interpolated at the given false-alarm rates."""
        x = np.concatenate(([0.0], self.pfa_emp[::-1], [1.0]))
        y = np.concatenate(([0.0], self.pd_emp[::-1], [1.0]))
        order = np.lexsort((y, x))
        return np.interp(pfa, x[order], y[order])


@dataclass
class PowerCurve:
    snr_db: np.ndarray
    pd_emp: np.ndarray
    pd_emp_se: np.ndarray
    pd_theory: np.ndarray
    label: str = ""

    COLUMNS = ("snr_db", "pd_emp", "pd_emp_se", "pd_theory")

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def __len__(self) -> int:
        return len(self.snr_db)


def quantile_thresholds(h0: np.ndarray, h1: np.ndarray, points: int = 49) -> np.ndarray:
    pooled = np.concatenate([h0, h1])
    levels = np.linspace(0.02, 0.98, points) if points > 1 else np.array([0.5])
    return np.unique(np.quantile(pooled, levels))


def empirical_roc(h0: np.ndarray, h1: np.ndarray, thresholds=None,
                  null: analysis.NullMoments | None = None,
                  alt: analysis.AltMoments | None = None, label: str = "") -> RocCurve:
    """Empirical (and optionally theoretical) operating points, one per threshold.

    A trial counts as a detection when its statistic strictly exceeds the
    threshold.  Rows come out sorted by threshold.
    """
    h0 = np.asarray(h0, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    if h0.size == 0 or h1.size == 0:
        raise ValidationError("both batches must be non-empty")
    if thresholds is None:
        thresholds = quantile_thresholds(h0, h1)
    th = np.sort(np.asarray(thresholds, dtype=float))
    s0, s1 = np.sort(h0), np.sort(h1)
    pfa = 1.0 - np.searchsorted(s0, th, side="right") / s0.size
    pd = 1.0 - np.searchsorted(s1, th, side="right") / s1.size
    nan = np.full(th.shape, np.nan)
    pfa_th = nan if null is None else np.array([analysis.pfa_theoretical(t, null) for t in th])
    pd_th = nan if alt is None else np.array([analysis.pd_theoretical(t, alt) for t in th])
    return RocCurve(threshold=th, pfa_emp=pfa, pfa_emp_se=binomial_se(pfa, s0.size),
                    pd_emp=pd, pd_emp_se=binomial_se(pd, s1.size),
                    pfa_theory=pfa_th, pd_theory=pd_th, label=label)


def max_vertical_deviation(baseline: RocCurve, other: RocCurve) -> np.ndarray:
    """|p_d(other) - p_d(baseline)| at each of the baseline's false-alarm rates."""
    return np.abs(other.pd_at(baseline.pfa_emp) - baseline.pd_emp)


def _theory_structure(config: ExperimentConfig) -> str:
    """Correlation structure for theory columns; defaults to the one the generator produces."""
    return config.theory_structure or config.generation_mode


def _theory(params: ModelParams, coeffs: DetectorCoeffs, structure: str):
    null = analysis.null_moments(coeffs)
    alt = analysis.alt_moments(params, coeffs, structure)
    return null, alt


def roc_point(config: ExperimentConfig, params: ModelParams, label: str,
              with_theory: bool = True) -> tuple[RocCurve, RocCurve]:
    """Proposed-detector ROC and agreement-count baseline ROC at one parameter set."""
    coeffs = detector_coeffs(params)
    h0 = run_trials(config, "H0", coeffs, params)
    h1 = run_trials(config, "H1", coeffs, params)
    null, alt = _theory(params, coeffs, _theory_structure(config)) if with_theory else (None, None)
    curve = empirical_roc(h0.column(), h1.column(),
                          quantile_thresholds(h0.column(), h1.column(), config.roc_points),
                          null, alt, label=label)
    c0, c1 = h0.agreement_counts.astype(float), h1.agreement_counts.astype(float)
    base = empirical_roc(c0, c1, quantile_thresholds(c0, c1, config.roc_points),
                         label=f"agreement-count baseline {label}")
    return curve, base


def roc_sweep(config: ExperimentConfig, sweep: str = "corr", with_theory: bool = True):
    """ROC curves across ``corr_grid`` (``sweep="corr"``) or ``snr_grid_db`` (``sweep="snr"``).

    Returns a list of ``(sweep_value, proposed_curve, baseline_curve)``.
    """
    out = []
    if sweep == "corr":
        for corr in config.corr_grid:
            params = config.resolved_params(corr=corr)
            out.append((corr, *roc_point(config, params, f"corr={corr:g}", with_theory)))
    elif sweep == "snr":
        for snr in config.snr_grid_db:
            params = config.resolved_params(snr_db=snr)
            out.append((snr, *roc_point(config, params, f"snr={snr:g}dB", with_theory)))
    else:
        raise ValidationError(f"unknown sweep {sweep!r}")
    return out


def _pd_at_fixed_pfa(h0: np.ndarray, h1: np.ndarray, pfa: float) -> float:
    thr = np.quantile(h0, 1.0 - pfa)
    return float(np.mean(h1 > thr))


def power_function(config: ExperimentConfig, with_theory: bool = True) -> tuple[PowerCurve, PowerCurve]:
    """p_d at ``config.fixed_pfa`` across ``config.snr_grid_db``.

    The operating threshold at each SNR is the empirical ``1 - p_fa`` quantile of
    the H0 statistics.  Returns the proposed detector's curve and the
    agreement-count baseline's.
    """
    snrs = np.asarray(config.snr_grid_db, dtype=float)
    pd, pd_base, pd_th = [], [], []
    trials = config.trials_per_point
    for snr in snrs:
        params = config.resolved_params(snr_db=float(snr))
        coeffs = detector_coeffs(params)
        h0 = run_trials(config, "H0", coeffs, params)
        h1 = run_trials(config, "H1", coeffs, params)
        pd.append(_pd_at_fixed_pfa(h0.column(), h1.column(), config.fixed_pfa))
        pd_base.append(_pd_at_fixed_pfa(h0.agreement_counts, h1.agreement_counts, config.fixed_pfa))
        if with_theory:
            null, alt = _theory(params, coeffs, _theory_structure(config))
            if null.var0 > 0.0:
                th = analysis.threshold_for_pfa(config.fixed_pfa, null)
                pd_th.append(analysis.pd_theoretical(th, alt))
            else:
                pd_th.append(float("nan"))
        else:
            pd_th.append(float("nan"))
    pd, pd_base = np.array(pd), np.array(pd_base)
    return (PowerCurve(snrs, pd, binomial_se(pd, trials), np.array(pd_th),
                       label=f"proposed, pfa={config.fixed_pfa:g}"),
            PowerCurve(snrs, pd_base, binomial_se(pd_base, trials), np.full(len(snrs), np.nan),
                       label=f"agreement-count baseline, pfa={config.fixed_pfa:g}"))


def sensitivity_sweep(config: ExperimentConfig, with_theory: bool = True) -> dict[str, RocCurve]:
    """One ROC per perturbed detector, all scored on data from the unperturbed model."""
    params = config.resolved_params()
    base = detector_coeffs(params)
    perturbed = [base.perturbed(p.p_hat_factor, p.a_factor) for p in config.param_perturbations]
    h0 = run_trials(config, "H0", perturbed, params)
    h1 = run_trials(config, "H1", perturbed, params)
    out = {}
    structure = _theory_structure(config)
    for k, (pert, coeffs) in enumerate(zip(config.param_perturbations, perturbed)):
        null, alt = _theory(params, coeffs, structure) if with_theory else (None, None)
        x0, x1 = h0.column(k), h1.column(k)
        out[pert.name] = empirical_roc(x0, x1, quantile_thresholds(x0, x1, config.roc_points),
                                       null, alt, label=pert.name)
    return out


def agreement_count_baseline(r, k_threshold: float) -> str:
    """Naive comparator: decide H1 when the number of adjacent agreements exceeds ``k``."""
    return "H1" if int(np.sum(agreement_sequence(r))) > k_threshold else "H0"


@dataclass
class JointEventEstimate:
    probs: np.ndarray  # [a, b] = P(e_i = a, e_j = b)
    se: np.ndarray
    trials: int

    def as_pair(self) -> analysis.PairJointProbs:
        p = self.probs
        return analysis.PairJointProbs(p00=p[0, 0], p01=p[0, 1], p10=p[1, 0], p11=p[1, 1])


def _chain_states(params: ModelParams, u: np.ndarray) -> np.ndarray:
    """States (0/1) along axis 1 from uniforms, vectorized over rows."""
    states = np.empty(u.shape, dtype=np.int8)
    active = u[:, 0] >= params.p10_init
    states[:, 0] = active
    for i in range(1, u.shape[1]):
        active = np.where(active, u[:, i] >= params.p10, u[:, i] < params.p01)
        states[:, i] = active
    return states


def _window_signs(params: ModelParams, rng: np.random.Generator, states: np.ndarray,
                  positions: list[int]) -> np.ndarray:
    """Signs of the noisy samples at ``positions`` under the tridiagonal window model.

    Adjacent active positions are correlated by ``corr * sigma1**2``; nothing
    else is.  Trials are grouped by their state pattern and sampled through the
    Cholesky factor of that pattern's covariance.
    """
    m, dim = states.shape[0], len(positions)
    sub = states[:, positions]
    codes = sub @ (1 << np.arange(dim))
    z = rng.standard_normal((m, dim))
    out = np.empty((m, dim))
    noise = params.noise_std ** 2
    for code in np.unique(codes):
        pattern = [(int(code) >> k) & 1 for k in range(dim)]
        cov = np.diag([(params.sigma1 ** 2 if st else params.sigma0 ** 2) + noise for st in pattern])
        for k in range(dim):
            for l in range(k + 1, dim):
                if pattern[k] and pattern[l] and positions[l] - positions[k] == 1:
                    cov[k, l] = cov[l, k] = params.corr * params.sigma1 ** 2
        sel = codes == code
        out[sel] = z[sel] @ np.linalg.cholesky(cov).T
    return np.where(out >= 0.0, 1, -1)


def mc_joint_event_oracle(params: ModelParams, pairs, trials: int, seed: int,
                          hypothesis: str = "H1", structure: str = "tridiagonal"
                          ) -> dict[tuple[int, int], JointEventEstimate]:
    """Empirical joint frequencies of ``(e_i, e_j)`` with binomial standard errors.

    ``structure="tridiagonal"`` simulates the state chain and then only the
    noisy samples in each pair's window, drawn from the adjacent-only
    correlation model.  ``structure="ar"`` runs the full signal generator on the
    prefix up to ``j + 1``.  Under ``hypothesis="H0"`` the bits are pure noise.
    Indices are 1-based agreement indices.
    """
    if hypothesis not in HYPOTHESES:
        raise ValidationError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    pairs = [(int(i), int(j)) for i, j in pairs]
    for i, j in pairs:
        if not (1 <= i < params.n and 1 <= j < params.n) or i == j:
            raise ValidationError(f"invalid agreement index pair ({i}, {j})")
    length = max(max(i, j) for i, j in pairs) + 1
    counts = {pair: np.zeros((2, 2), dtype=np.int64) for pair in pairs}
    prefix = params.replace(n=max(length, 2))
    for b, start in enumerate(range(0, trials, ORACLE_BLOCK)):
        m = min(ORACLE_BLOCK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        u = rng.random((m, length))
        w = rng.standard_normal((m, length))
        v = rng.standard_normal((m, length))
        if hypothesis == "H0":
            bits = kernels.h0_bits(prefix, v)
        elif structure == "ar":
            bits = kernels.h1_bits(prefix, u, w, v)
        else:
            bits = None
            states = _chain_states(prefix, u)
        for i, j in pairs:
            if bits is not None:
                ei = bits[:, i - 1] == bits[:, i]
                ej = bits[:, j - 1] == bits[:, j]
            else:
                positions = sorted({i - 1, i, j - 1, j})
                signs = _window_signs(prefix, rng, states, positions)
                col = {p: k for k, p in enumerate(positions)}
                ei = signs[:, col[i - 1]] == signs[:, col[i]]
                ej = signs[:, col[j - 1]] == signs[:, col[j]]
            for a in (0, 1):
                for bb in (0, 1):
                    counts[(i, j)][a, bb] += np.count_nonzero((ei == a) & (ej == bb))
    out = {}
    for pair, c in counts.items():
        probs = c / trials
        out[pair] = JointEventEstimate(probs=probs, se=binomial_se(probs, trials), trials=trials)
    return out


def empirical_state_frequencies(params: ModelParams, indices, trials: int, seed: int) -> np.ndarray:
    """Fraction of inactive states at each 1-based index over seeded chain runs."""
    length = max(indices)
    total = np.zeros(len(indices))
    for b, start in enumerate(range(0, trials, ORACLE_BLOCK)):
        m = min(ORACLE_BLOCK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        states = _chain_states(params, rng.random((m, length)))
        total += np.count_nonzero(states[:, [k - 1 for k in indices]] == 0, axis=0)
    return total / trials
