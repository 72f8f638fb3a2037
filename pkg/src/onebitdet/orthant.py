"""Zero-mean multivariate normal orthant probabilities, dimensions 1 to 4.

Covariances are accepted in raw variance units and normalized to correlations
internally.  A sign pattern is applied by flipping the sign of the matching
rows and columns, so every evaluation reduces to the positive orthant.

Kernels:

* dim 2: Sheppard's formula ``1/4 + asin(rho) / (2 pi)``.
* dim 3: the trivariate closed form ``1/8 + sum(asin(rho_ij)) / (4 pi)``.
* dim 4: Plackett's reduction.  Along the path ``R(t) = I + t (R - I)`` the
  derivative of the orthant probability with respect to ``rho_ij`` equals the
  bivariate density at the origin times the orthant probability of the other
  two coordinates conditioned on ``x_i = x_j = 0``.  That conditional pair is
  zero-mean, so Sheppard applies and the 4-D problem becomes a smooth 1-D
  integral over ``t in [0, 1]``.

Correlation matrices that are block diagonal are split into independent
components first, and the probability is the product over components.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import NotPositiveDefinite, ValidationError
from .model import ModelParams

_TWO_PI = 2.0 * math.pi
_QUAD_EPSABS = 1e-13


def pair_correlation(params: ModelParams) -> float:
    """Correlation of two adjacent noisy active samples."""
    s1 = params.sigma1 ** 2
    return params.corr * s1 / (s1 + params.noise_std ** 2)


def orthant2(rho: float) -> float:
    """P(X1 > 0, X2 > 0) for a standard bivariate normal with correlation ``rho``."""
    if not (-1.0 < rho < 1.0):
        raise ValidationError(f"correlation must lie in (-1, 1), got {rho!r}")
    return 0.25 + math.asin(rho) / _TWO_PI


def _orthant3(r12: float, r13: float, r23: float) -> float:
    return 0.125 + (math.asin(r12) + math.asin(r13) + math.asin(r23)) / (2.0 * _TWO_PI)


_PAIRS4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
_REST4 = {(i, j): tuple(k for k in range(4) if k not in (i, j)) for i, j in _PAIRS4}


def _plackett_integrand(t: float, r: tuple) -> float:
    total = 0.0
    for i, j in _PAIRS4:
        rij = r[i][j]
        if rij == 0.0:
            continue
        tr = t * rij
        det = 1.0 - tr * tr
        k, l = _REST4[(i, j)]
        aki, akj = t * r[k][i], t * r[k][j]
        ali, alj = t * r[l][i], t * r[l][j]
        # conditional covariance of (x_k, x_l) given x_i = x_j = 0
        skk = 1.0 - (aki * aki - 2.0 * tr * aki * akj + akj * akj) / det
        sll = 1.0 - (ali * ali - 2.0 * tr * ali * alj + alj * alj) / det
        skl = t * r[k][l] - (aki * ali - tr * (aki * alj + akj * ali) + akj * alj) / det
        rho_c = skl / math.sqrt(skk * sll)
        rho_c = min(1.0, max(-1.0, rho_c))
        density = 1.0 / (_TWO_PI * math.sqrt(det))
        total += rij * density * (0.25 + math.asin(rho_c) / _TWO_PI)
    return total


def _orthant4(r: tuple) -> float:
    value, _ = integrate.quad(_plackett_integrand, 0.0, 1.0, args=(r,),
                              epsabs=_QUAD_EPSABS, epsrel=1e-12, limit=200)
    return 0.0625 + value


@lru_cache(maxsize=65536)
def _positive_orthant(r: tuple) -> float:
    dim = len(r)
    if dim == 1:
        return 0.5
    if dim == 2:
        return 0.25 + math.asin(r[0][1]) / _TWO_PI
    if dim == 3:
        return _orthant3(r[0][1], r[0][2], r[1][2])
    if dim == 4:
        return _orthant4(r)
    raise ValidationError(f"orthant dimension must be at most 4, got {dim}")


def _components(corr: np.ndarray) -> list[list[int]]:
    dim = corr.shape[0]
    seen = [False] * dim
    groups = []
    for start in range(dim):
        if seen[start]:
            continue
        stack, group = [start], []
        seen[start] = True
        while stack:
            a = stack.pop()
            group.append(a)
            for b in range(dim):
                if not seen[b] and corr[a, b] != 0.0:
                    seen[b] = True
                    stack.append(b)
        groups.append(sorted(group))
    return groups


def _normalize_signs(signs: Sequence) -> tuple[int, ...]:
    out = []
    for s in signs:
        if s in ("+", 1, 1.0, True):
            out.append(1)
        elif s in ("-", -1, -1.0):
            out.append(-1)
        else:
            raise ValidationError(f"sign must be '+' or '-', got {s!r}")
    return tuple(out)


def correlation_from_cov(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValidationError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12, rtol=0.0):
        raise ValidationError("covariance must be symmetric")
    d = np.diag(cov)
    if np.any(d <= 0.0):
        raise ValidationError("covariance diagonal must be strictly positive")
    scale = np.sqrt(d)
    corr = cov / np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    try:
        np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance is not positive definite") from None
    return corr


def orthant_probability(cov, signs: Sequence) -> float:
    """Probability that every coordinate of N(0, cov) has its prescribed sign.

    ``signs[k]`` is ``'+'``/``+1`` for ``x_k > 0`` and ``'-'``/``-1`` for ``x_k < 0``.
    """
    corr = correlation_from_cov(cov)
    sg = np.array(_normalize_signs(signs), dtype=float)
    if sg.shape[0] != corr.shape[0]:
        raise ValidationError("sign pattern length must match covariance dimension")
    signed = corr * np.outer(sg, sg)
    prob = 1.0
    for group in _components(signed):
        sub = signed[np.ix_(group, group)]
        key = tuple(tuple(float(v) for v in row) for row in sub)
        prob *= _positive_orthant(key)
    return min(1.0, max(0.0, prob))


@dataclass(frozen=True)
class OrthantSpec:
    cov: tuple
    signs: tuple

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] not in (2, 3, 4):
            raise ValidationError("orthant dimension must be 2, 3 or 4")
        signs = _normalize_signs(self.signs)
        if len(signs) != cov.shape[0]:
            raise ValidationError("sign pattern length must match covariance dimension")
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in cov))
        object.__setattr__(self, "signs", signs)

    @property
    def dim(self) -> int:
        return len(self.signs)


def orthant(spec: OrthantSpec) -> float:
    return orthant_probability(spec.cov, spec.signs)


def orthant_all_patterns(cov) -> dict[tuple[int, ...], float]:
    """Orthant probability for each of the ``2**dim`` sign patterns."""
    dim = np.asarray(cov).shape[0]
    return {signs: orthant_probability(cov, signs)
            for signs in itertools.product((1, -1), repeat=dim)}


def tridiagonal_cov(dim: int, variance: float, offdiag: float) -> np.ndarray:
    return variance * np.eye(dim) + offdiag * (np.eye(dim, k=1) + np.eye(dim, k=-1))
