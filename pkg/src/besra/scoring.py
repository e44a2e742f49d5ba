"""Beta-family proper scoring rules for binary probability forecasts.

The family is indexed by a pair (alpha, beta) with alpha, beta > -1 and is
defined through the integrals

    S(p, y=0) = -integral_0^p c^alpha (1-c)^(beta-1) dc
    S(p, y=1) = -integral_p^1 c^(alpha-1) (1-c)^beta dc

Scores are always <= 0, with 0 attained only by a perfect forecast.
(0, 0) gives the logarithmic score, (1, 1) the Brier score, and unequal
parameters penalize false positives and false negatives asymmetrically,
which is what makes the family useful under label imbalance.

For alpha, beta > 0 the integrals reduce to regularized incomplete beta
functions and are evaluated through a continued-fraction expansion.  On
the family boundary (alpha = 0 or beta = 0) that identity is unavailable;
closed forms are used where they exist and adaptive quadrature otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.integrate import quad

__all__ = [
    "ScoreParams",
    "LOG_SCORE",
    "BRIER_SCORE",
    "regularized_incomplete_beta",
    "beta_score",
    "expected_score",
    "br_score",
]


@dataclass(frozen=True)
class ScoreParams:
    """One member of the scoring family; requires alpha > -1 and beta > -1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1.0 and self.beta > -1.0):
            raise ValueError(
                f"scoring family requires alpha > -1 and beta > -1, "
                f"got alpha={self.alpha}, beta={self.beta}"
            )


LOG_SCORE = ScoreParams(0.0, 0.0)
BRIER_SCORE = ScoreParams(1.0, 1.0)

# --------------------------------------------------------------------------
# Regularized incomplete beta function I_x(a, b).
#
# Continued fraction from Numerical Recipes (modified Lentz iteration).
# The symmetry I_x(a,b) = 1 - I_{1-x}(b,a) keeps the fraction in its
# fast-converging regime x < (a+1)/(a+b+2).

_CF_MAXITER = 500
_CF_EPS = 3e-16
_CF_TINY = 1e-300


@njit(cache=True)
def _betainc_cf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


@njit(cache=True)
def _betainc_scalar(x, a, b):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lnfront = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
               + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lnfront) * _betainc_cf(a, b, x) / a
    return 1.0 - math.exp(lnfront) * _betainc_cf(b, a, 1.0 - x) / b


@njit(cache=True)
def _betainc_into(x, a, b, out):
    for i in range(x.size):
        out[i] = _betainc_scalar(x[i], a, b)


def regularized_incomplete_beta(x, a: float, b: float):
    """Evaluate I_x(a, b) for a, b > 0 and x in [0, 1].

    Accepts a scalar or an ndarray of x values; absolute accuracy is
    around 1e-13.  Raises ValueError outside the domain (callers that
    need the family boundary a = 0 or b = 0 must use the alternative
    evaluation path in :func:`beta_score`).
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"incomplete beta requires a > 0 and b > 0, got a={a}, b={b}")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("incomplete beta requires x in [0, 1]")
    if arr.ndim == 0:
        return _betainc_scalar(float(arr), a, b)
    out = np.empty_like(arr)
    _betainc_into(arr.ravel(), float(a), float(b), out.reshape(-1))
    return out


# --------------------------------------------------------------------------
# The scoring family itself.


def _validate_probs(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return arr


def _boundary_quad(alpha: float, beta: float, p: float, y: int) -> float:
    # defining integral, adaptive quadrature; only reached when exactly one
    # of alpha, beta is zero and no elementary antiderivative exists
    if y == 1:
        val, _ = quad(lambda c: (1.0 - c) ** beta / c, p, 1.0,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
    else:
        val, _ = quad(lambda c: c ** alpha / (1.0 - c), 0.0, p,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
    return -val


def _beta_score_array(alpha: float, beta: float, p: np.ndarray, y: int) -> np.ndarray:
    if alpha > 0.0 and beta > 0.0:
        if y == 1:
            coef = math.exp(math.lgamma(alpha) + math.lgamma(beta + 1.0)
                            - math.lgamma(alpha + beta + 1.0))
            ib = np.empty_like(p)
            _betainc_into(np.ascontiguousarray(1.0 - p.ravel()), beta + 1.0, alpha,
                          ib.reshape(-1))
        else:
            coef = math.exp(math.lgamma(alpha + 1.0) + math.lgamma(beta)
                            - math.lgamma(alpha + beta + 1.0))
            ib = np.empty_like(p)
            _betainc_into(np.ascontiguousarray(p.ravel()), alpha + 1.0, beta,
                          ib.reshape(-1))
        return -coef * ib
    if alpha == 0.0 and beta == 0.0:
        # logarithmic score; diverges to -inf at the wrong-certainty boundary
        with np.errstate(divide="ignore"):
            return np.log(p) if y == 1 else np.log1p(-p)
    if alpha == 0.0:
        if y == 0:
            return -(1.0 - (1.0 - p) ** beta) / beta
        out = np.empty_like(p)
        flat = p.ravel()
        res = out.reshape(-1)
        for i, pi in enumerate(flat):
            res[i] = -math.inf if pi == 0.0 else _boundary_quad(alpha, beta, pi, 1)
        return out
    # beta == 0, alpha > 0
    if y == 1:
        return -(1.0 - p ** alpha) / alpha
    out = np.empty_like(p)
    flat = p.ravel()
    res = out.reshape(-1)
    for i, pi in enumerate(flat):
        res[i] = -math.inf if pi == 1.0 else _boundary_quad(alpha, beta, pi, 0)
    return out


def beta_score(params: ScoreParams, p, y: int, *, floor: float | None = None):
    """Score the forecast p for the binary outcome y under ``params``.

    ``p`` may be a scalar or an ndarray.  The result is <= 0, reaching 0
    only for a perfect forecast.  Members with alpha = 0 or beta = 0 can
    diverge at p in {0, 1}; the raw value is then ``-inf``.  Passing
    ``floor`` clamps p into [floor, 1 - floor] first, which keeps the
    score finite for downstream consumers that cannot handle infinities.

    Raises NotImplementedError for -1 < alpha < 0 or -1 < beta < 0: those
    family members are valid parameter choices but have no evaluation
    path here.
    """
    if params.alpha < 0.0 or params.beta < 0.0:
        raise NotImplementedError(
            "negative-parameter members (-1 < alpha < 0 or -1 < beta < 0) "
            "are not supported"
        )
    if y not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {y!r}")
    arr = _validate_probs(p)
    scalar = arr.ndim == 0
    arr = np.ascontiguousarray(np.atleast_1d(arr))
    if floor is not None:
        arr = np.clip(arr, floor, 1.0 - floor)
    out = _beta_score_array(params.alpha, params.beta, arr, int(y))
    return float(out[0]) if scalar else out


def expected_score(params: ScoreParams, p_report, q_true):
    """Expected score of reporting ``p_report`` when outcomes follow ``q_true``.

    Returns q*S(p,1) + (1-q)*S(p,0); by strict propriety the maximizer over
    p_report is q_true.  Zero-probability outcomes contribute zero even when
    the corresponding score diverges.
    """
    p = _validate_probs(p_report)
    q = _validate_probs(q_true)
    s1 = beta_score(params, p, 1)
    s0 = beta_score(params, p, 0)
    with np.errstate(invalid="ignore"):
        t1 = np.where(q == 0.0, 0.0, q * s1)
        t0 = np.where(q == 1.0, 0.0, (1.0 - q) * s0)
    out = t1 + t0
    return float(out) if out.ndim == 0 else out


def br_score(params: ScoreParams, p_vec, y_vec) -> float:
    """Binary-relevance aggregate: the summed per-label score of a forecast
    vector against a label vector."""
    p = np.atleast_1d(_validate_probs(p_vec))
    y = np.atleast_1d(np.asarray(y_vec))
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} probabilities vs {y.shape} labels")
    if p.size < 1:
        raise ValueError("need at least one label component")
    total = 0.0
    for pk, yk in zip(p, y):
        total += beta_score(params, float(pk), int(yk))
    return total
