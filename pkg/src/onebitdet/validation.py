"""Oracle suites: analytic results checked against brute-force Monte Carlo.

Each check returns a ``CheckResult``; ``max_z`` is the largest absolute
deviation measured in standard errors and a check passes when it stays below
``Z_LIMIT`` (plus any exact identities the check also asserts).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .detector import detector_coeffs
from .model import ModelParams, default_params
from .orthant import orthant_probability
from .simulator import mc_joint_event_oracle

Z_LIMIT = 3.0
DEFAULT_SEED = 7_340_113
_CHUNK = 1 << 20


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_z: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} (max |z| = {self.max_z:.2f})"


def random_tridiagonal_specs(dim: int, count: int, rng: np.random.Generator):
    """Random positive-definite tridiagonal covariances with random sign vectors."""
    specs = []
    while len(specs) < count:
        scale = rng.uniform(0.5, 2.0, dim)
        rho = rng.uniform(-0.6, 0.6, dim - 1)
        corr = np.eye(dim)
        corr[np.arange(dim - 1), np.arange(1, dim)] = rho
        corr[np.arange(1, dim), np.arange(dim - 1)] = rho
        if np.linalg.eigvalsh(corr)[0] <= 1e-3:
            continue
        cov = corr * np.sqrt(np.outer(scale, scale))
        signs = tuple(int(s) for s in rng.choice((-1, 1), dim))
        specs.append((cov, signs))
    return specs


def check_orthant_oracle(samples: int = 10_000_000, specs_per_dim: int = 20,
                         seed: int = DEFAULT_SEED, dims=(2, 3, 4)) -> CheckResult:
    """Kernel probabilities against sign-pattern frequencies of Gaussian draws.

    All specs of one dimension share the same standard-normal draws.
    """
    rng = np.random.default_rng(seed)
    zs = []
    for dim in dims:
        specs = random_tridiagonal_specs(dim, specs_per_dim, rng)
        factors = [np.linalg.cholesky(cov).T for cov, _ in specs]
        targets = [np.array(signs) > 0 for _, signs in specs]
        hits = np.zeros(len(specs))
        for start in range(0, samples, _CHUNK):
            z = rng.standard_normal((min(_CHUNK, samples - start), dim))
            for k, (factor, target) in enumerate(zip(factors, targets)):
                hits[k] += np.count_nonzero(np.all(((z @ factor) >= 0.0) == target, axis=1))
        for (cov, signs), h in zip(specs, hits):
            exact = orthant_probability(cov, signs)
            se = np.sqrt(exact * (1.0 - exact) / samples)
            zs.append((h / samples - exact) / se)
    worst = float(np.max(np.abs(zs)))
    return CheckResult("orthant kernel vs Monte Carlo", worst < Z_LIMIT, worst,
                       {"samples": samples, "specs": len(zs), "z": [float(v) for v in zs]})


INDEPENDENCE_PAIRS = ((5, 6), (5, 7), (5, 50))


def check_independence(params: ModelParams | None = None, trials: int = 100_000,
                       seed: int = DEFAULT_SEED + 1, pairs=INDEPENDENCE_PAIRS) -> CheckResult:
    """Under H0 every (e_i, e_j) cell has probability 1/4."""
    params = default_params() if params is None else params
    est = mc_joint_event_oracle(params, pairs, trials, seed, hypothesis="H0")
    worst = 0.0
    cells = {}
    for pair, e in est.items():
        se = np.sqrt(0.25 * 0.75 / trials)
        z = (e.probs - 0.25) / se
        worst = max(worst, float(np.max(np.abs(z))))
        cells[str(pair)] = e.probs.tolist()
    return CheckResult("H0 agreement independence", worst < Z_LIMIT, worst,
                       {"trials": trials, "cells": cells})


PAIR_GAPS = (1, 2, 3, 10)


def check_pair_probs(params: ModelParams | None = None, trials: int = 10_000_000,
                     seed: int = DEFAULT_SEED + 2, i: int = 10, gaps=PAIR_GAPS,
                     structure: str = "tridiagonal") -> CheckResult:
    """Exact H1 pair probabilities against the joint-event oracle of the same structure.

    Also asserts that cells sum to one and that marginals recover ``c_i``.
    """
    params = default_params() if params is None else params
    coeffs = detector_coeffs(params)
    model = analysis.PairModel(params, structure)
    pairs = [(i, i + g) for g in gaps]
    est = mc_joint_event_oracle(params, pairs, trials, seed, hypothesis="H1", structure=structure)
    worst, sum_err, marg_err = 0.0, 0.0, 0.0
    cells = {}
    for pair in pairs:
        exact = model.pair(*pair).as_array()
        sum_err = max(sum_err, abs(float(exact.sum()) - 1.0))
        marg_err = max(marg_err, abs(exact[1, :].sum() - coeffs.c[pair[0] - 1]),
                       abs(exact[:, 1].sum() - coeffs.c[pair[1] - 1]))
        se = np.sqrt(exact * (1.0 - exact) / trials)
        z = (est[pair].probs - exact) / se
        worst = max(worst, float(np.max(np.abs(z))))
        cells[str(pair)] = {"exact": exact.tolist(), "mc": est[pair].probs.tolist()}
    passed = worst < Z_LIMIT and sum_err < 1e-6 and marg_err < 1e-6
    return CheckResult(f"H1 pair probabilities ({structure})", passed, worst,
                       {"trials": trials, "sum_err": sum_err, "marginal_err": float(marg_err),
                        "cells": cells})


def run_all(params: ModelParams | None = None, scale: float = 1.0,
            seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """The three oracle suites; ``scale`` shrinks every sample count proportionally."""
    def n(k):
        return max(1000, int(k * scale))

    return [
        check_orthant_oracle(samples=n(10_000_000), seed=seed),
        check_independence(params, trials=n(100_000), seed=seed + 1),
        check_pair_probs(params, trials=n(10_000_000), seed=seed + 2, structure="tridiagonal"),
        check_pair_probs(params, trials=n(10_000_000), seed=seed + 3, structure="ar"),
    ]
