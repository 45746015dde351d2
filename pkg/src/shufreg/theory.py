"""Closed-form moment generating function over cycle types, and related bounds.

For X with iid standard normal entries,
``E[exp(-t ||X b_star - Pi X b||^2)]`` depends on Pi only through its cycle
type and factors as ``prod_k (p^k - q^k)^(-n_k)``, where

    p = (sqrt(1 + 2t||b_star + b||^2) + sqrt(1 + 2t||b_star - b||^2)) / 2
    q = (sqrt(1 + 2t||b_star + b||^2) - sqrt(1 + 2t||b_star - b||^2)) / 2

so that p - q >= 1 and p > |q|.  All products are evaluated in log space;
``p^k - q^k`` goes through the factorization
(p - q) * p^(k-1) * (1 - (q/p)^k) / (1 - q/p), which never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .perm import CycleType

# validity threshold on sqrt(t)*||b_star|| for the upper bounds, and the
# base constant of the (c0 sqrt(t) ||b_star||)^(k-1) lower bound
MIN_SQRT_T_BETA = 5.0 * math.sqrt(2.0)
DEFAULT_C0 = 1.0 / 3.0
MIN_S = 10.0  # threshold on s = sqrt(2t)*||b_star|| for the per-k check

THRESHOLD_MODES = ("exact", "almost_exact")


class MgfValue(NamedTuple):
    """Log-space value plus its linear form (0.0 on underflow)."""

    log_value: float
    value: float


def _as_mgf_value(log_value: float) -> MgfValue:
    try:
        value = math.exp(log_value)
    except OverflowError:
        value = math.inf
    return MgfValue(log_value, value)


@dataclass(frozen=True)
class MgfParams:
    """Exponent parameter t and the coefficient pair (b_star, b)."""

    t: float
    beta_star: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if not self.t > 0:
            raise InvalidArgumentError(f"t must be positive, got {self.t}")
        bs = np.atleast_1d(np.asarray(self.beta_star, dtype=float))
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if bs.shape != b.shape:
            raise InvalidArgumentError("beta and beta_star must have the same dimension")
        object.__setattr__(self, "beta_star", bs)
        object.__setattr__(self, "beta", b)

    @cached_property
    def _pq(self) -> tuple[float, float]:
        plus = math.sqrt(1.0 + 2.0 * self.t * float(np.sum((self.beta_star + self.beta) ** 2)))
        minus = math.sqrt(1.0 + 2.0 * self.t * float(np.sum((self.beta_star - self.beta) ** 2)))
        return 0.5 * (plus + minus), 0.5 * (plus - minus)

    @property
    def p(self) -> float:
        return self._pq[0]

    @property
    def q(self) -> float:
        return self._pq[1]

    @property
    def beta_star_norm(self) -> float:
        return float(np.linalg.norm(self.beta_star))

    @property
    def s(self) -> float:
        """Rescaled coefficient norm sqrt(2t)*||b_star||."""
        return math.sqrt(2.0 * self.t) * self.beta_star_norm


def log_pk_minus_qk(p: float, q: float, k: int) -> float:
    """log(p^k - q^k) for p > |q|, p - q >= 1, without forming p^k."""
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if k == 1:
        return math.log(p - q)
    rho = q / p
    if rho > 0:
        log_ratio = math.log(-math.expm1(k * math.log(rho))) - math.log1p(-rho)
    else:
        log_ratio = math.log((1.0 - rho**k) / (1.0 - rho))
    return math.log(p - q) + (k - 1) * math.log(p) + log_ratio


def mgf_closed_form(ct: CycleType, params: MgfParams) -> MgfValue:
    """prod_k (p^k - q^k)^(-n_k), value in (0, 1]."""
    p, q = params.p, params.q
    log_value = -sum(nk * log_pk_minus_qk(p, q, k) for k, nk in ct.counts.items())
    return _as_mgf_value(log_value)


def mgf_upper_bound(ct: CycleType, params: MgfParams, c0: float = DEFAULT_C0,
                    min_sqrt_t_beta: float = MIN_SQRT_T_BETA) -> tuple[MgfValue, MgfValue]:
    """Two closed-form upper bounds on the MGF.

    The first uses exponent ``n - #cycles``, the weaker second
    ``(n - n_1)/2``; both share the fixed-point factor
    (1 + 2t||b - b_star||^2)^(-n_1/2) and require
    sqrt(t)*||b_star|| >= min_sqrt_t_beta.
    """
    scale = math.sqrt(params.t) * params.beta_star_norm
    if scale < min_sqrt_t_beta:
        raise DomainError(
            f"bounds require sqrt(t)*||beta_star|| >= {min_sqrt_t_beta:.6g}, got {scale:.6g}")
    dist_sq = float(np.sum((params.beta - params.beta_star) ** 2))
    n1 = ct.fixed_points
    log_fixed = -(n1 / 2.0) * math.log1p(2.0 * params.t * dist_sq)
    log_base = math.log(c0 * scale)
    log_fc = log_fixed - (ct.n - ct.total_cycles) * log_base
    log_n1 = log_fixed - ((ct.n - n1) / 2.0) * log_base
    return _as_mgf_value(log_fc), _as_mgf_value(log_n1)


@dataclass(frozen=True)
class PkqkWitness:
    """Evaluation of p^k - q^k against (s/3)^(k-1)."""

    holds: bool
    lhs: float
    rhs: float
    lhs_log: float
    rhs_log: float


def pkqk_lower_bound_check(k: int, params: MgfParams) -> PkqkWitness:
    """Check p^k - q^k >= (s/3)^(k-1), valid for s = sqrt(2t)||b_star|| >= 10."""
    if k < 2:
        raise InvalidArgumentError("the lower bound applies to cycle lengths k >= 2")
    s = params.s
    if s < MIN_S:
        raise DomainError(f"check requires s = sqrt(2t)*||beta_star|| >= {MIN_S}, got {s:.6g}")
    lhs_log = log_pk_minus_qk(params.p, params.q, k)
    rhs_log = (k - 1) * math.log(s / 3.0)
    return PkqkWitness(holds=lhs_log >= rhs_log,
                       lhs=_as_mgf_value(lhs_log).value,
                       rhs=_as_mgf_value(rhs_log).value,
                       lhs_log=lhs_log, rhs_log=rhs_log)


def net_cardinality_bound(r: float, delta: float, d: int, log: bool = False) -> float:
    """(1 + 2r/delta)^d, computed in log space (inf on overflow)."""
    if not r > 0 or not delta > 0:
        raise InvalidArgumentError("r and delta must be positive")
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    log_value = d * math.log1p(2.0 * r / delta)
    if log:
        return log_value
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def chi_square_tail_bounds(m: int, t: float) -> tuple[float, float]:
    """Deviation thresholds (m + 2*sqrt(m*t) + 2t, m - 2*sqrt(m*t)).

    A chi-square(m) variable exceeds the first or falls below the second
    with probability at most exp(-t) each.
    """
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if t < 0:
        raise InvalidArgumentError("t must be >= 0")
    root = 2.0 * math.sqrt(m * t)
    return (m + root + 2.0 * t, m - root)


@dataclass(frozen=True)
class ThresholdQuery:
    """Recovery-threshold request for sample size n with slack exponent epsilon."""

    n: int
    mode: str
    epsilon: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("n must be >= 2")
        if self.mode not in THRESHOLD_MODES:
            raise InvalidArgumentError(f"mode must be one of {THRESHOLD_MODES}")
        if self.epsilon < 0:
            raise InvalidArgumentError("epsilon must be >= 0")


def threshold_snr(query: ThresholdQuery) -> float:
    """Minimal SNR scaling: n^(4+eps) for exact, n^(2+eps) for almost exact."""
    base = 4.0 if query.mode == "exact" else 2.0
    return float(query.n) ** (base + query.epsilon)
