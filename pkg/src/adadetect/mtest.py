"""Multiple-testing primitives.

Step-up rejection rule, null-proportion estimators and their adaptive
step-up combination, plus the score-thresholding rule that is equivalent
to running the step-up rule on empirical p-values.

All functions are pure; result objects are frozen and hold read-only
arrays, so they are safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateEstimateError, InvalidInputError
from .validation import as_pvalues, as_scores, check_level, check_open_unit

__all__ = [
    "RejectionSet",
    "Pi0Estimate",
    "AdaptiveBHResult",
    "KnockoffResult",
    "bh_rejections",
    "storey_pi0",
    "quantile_pi0",
    "adaptive_bh",
    "fdp_hat",
    "knockoff_select",
]


#: One-sided relative slack on step-up and threshold comparisons.  Empirical
#: p-values live on the rational grid j/(ell+1) and the step-up cutoffs on
#: alpha*k/m; when the two are mathematically equal their float64 images can
#: differ by an ulp, and the boundary case must count as rejected (it is what
#: makes the exact-FDR identity hold when alpha*(ell+1)/m is an integer).
BOUNDARY_SLACK = 1e-12


def _readonly(a, dtype=None):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RejectionSet:
    """Outcome of a step-up rule.

    ``indices`` are 0-based positions into the p-value vector, sorted
    ascending; ``k_hat`` is the step-up count (always equal to
    ``len(indices)``); ``level_used`` is the level the rule actually ran at.
    """

    indices: np.ndarray
    k_hat: int
    level_used: float

    def __post_init__(self):
        object.__setattr__(self, "indices", _readonly(self.indices, dtype=np.intp))

    def as_set(self):
        return set(self.indices.tolist())


@dataclass(frozen=True)
class Pi0Estimate:
    """Null-proportion estimate; ``method`` is 'storey', 'quantile' or 'none'."""

    value: float
    method: str
    param: float | None = None


@dataclass(frozen=True)
class AdaptiveBHResult:
    rejections: RejectionSet
    pi0: Pi0Estimate
    degenerate: bool = False


@dataclass(frozen=True)
class KnockoffResult:
    """Score-threshold selection; ``threshold`` is +inf when nothing qualifies."""

    threshold: float
    fdp_hat_at_threshold: float
    rejections: RejectionSet


def bh_rejections(pvalues, alpha):
    """Step-up rule: reject {i : p_i <= alpha*k_hat/m} with
    k_hat = max{k : #{p_i <= alpha*k/m} >= k}.

    ``alpha`` may be 1.0 so that capped adaptive levels remain valid.
    O(m log m) by sorting; the rejection set depends only on the values, so
    ties at the cutoff are rejected together.
    """
    p = as_pvalues(pvalues)
    alpha = check_level(alpha, allow_one=True)
    m = p.size
    slack = 1.0 + BOUNDARY_SLACK
    p_sorted = np.sort(p)
    passes = p_sorted <= (alpha * np.arange(1, m + 1) / m) * slack
    hits = np.flatnonzero(passes)
    k_hat = int(hits[-1] + 1) if hits.size else 0
    if k_hat == 0:
        indices = np.array([], dtype=np.intp)
    else:
        indices = np.flatnonzero(p <= (alpha * k_hat / m) * slack)
    return RejectionSet(indices=indices, k_hat=k_hat, level_used=alpha)


def storey_pi0(pvalues, lam):
    """Null-proportion estimate (1 + #{p_i >= lam}) / (m*(1-lam))."""
    p = as_pvalues(pvalues)
    lam = check_open_unit(lam, "lambda")
    m = p.size
    value = (1.0 + np.count_nonzero(p >= lam)) / (m * (1.0 - lam))
    return Pi0Estimate(value=value, method="storey", param=lam)


def quantile_pi0(pvalues, k0):
    """Null-proportion estimate (m - k0 + 1) / (m*(1 - p_(k0))).

    ``p_(k0)`` is the k0-th smallest p-value.  Raises
    :class:`DegenerateEstimateError` when ``p_(k0) == 1``; callers wanting a
    total rule should treat that as an infinite estimate (zero rejections).
    """
    p = as_pvalues(pvalues)
    m = p.size
    k0 = int(k0)
    if not 1 <= k0 <= m:
        raise InvalidInputError(f"k0: must lie in [1, {m}], got {k0}")
    p_k0 = float(np.partition(p, k0 - 1)[k0 - 1])
    if p_k0 >= 1.0:
        raise DegenerateEstimateError(
            f"quantile estimator undefined: p_({k0}) = 1"
        )
    value = (m - k0 + 1) / (m * (1.0 - p_k0))
    return Pi0Estimate(value=value, method="quantile", param=k0)


def adaptive_bh(pvalues, alpha, pi0_method="none", storey_lambda=0.5, quantile_k0=None):
    """Step-up rule at the adaptive level min(1, alpha / pi0_hat).

    With ``pi0_method='none'`` this is exactly :func:`bh_rejections`.  A
    degenerate quantile estimate (p_(k0) = 1) is treated as pi0 = +inf:
    zero rejections, flagged rather than raised.
    """
    p = as_pvalues(pvalues)
    alpha = check_level(alpha)
    m = p.size
    if pi0_method == "none":
        pi0 = Pi0Estimate(value=1.0, method="none", param=None)
    elif pi0_method == "storey":
        pi0 = storey_pi0(p, storey_lambda)
    elif pi0_method == "quantile":
        k0 = int(np.ceil(m / 2)) if quantile_k0 is None else quantile_k0
        try:
            pi0 = quantile_pi0(p, k0)
        except DegenerateEstimateError:
            pi0 = Pi0Estimate(value=np.inf, method="quantile", param=int(k0))
            empty = RejectionSet(
                indices=np.array([], dtype=np.intp), k_hat=0, level_used=0.0
            )
            return AdaptiveBHResult(rejections=empty, pi0=pi0, degenerate=True)
    else:
        raise InvalidInputError(f"unknown pi0 method: {pi0_method!r}")
    level = min(1.0, alpha / pi0.value)
    return AdaptiveBHResult(rejections=bh_rejections(p, level), pi0=pi0)


def fdp_hat(t, null_scores, test_scores):
    """False-discovery-proportion estimate at score threshold ``t``:

        (m/(ell+1)) * (1 + #{null >= t}) / #{test >= t}

    Returns +inf when no test score reaches ``t`` so that threshold search
    can simply skip non-qualifying candidates.
    """
    null_s = as_scores(null_scores, "null_scores", allow_empty=True)
    test_s = as_scores(test_scores, "test_scores")
    hits = np.count_nonzero(test_s >= t)
    if hits == 0:
        return np.inf
    m = test_s.size
    ell = null_s.size
    return (m / (ell + 1.0)) * (1 + np.count_nonzero(null_s >= t)) / hits


def knockoff_select(null_scores, test_scores, alpha):
    """Reject test scores above t_hat = min{t observed : fdp_hat(t) <= alpha}.

    The candidate thresholds are the pooled observed scores (calibration and
    test).  On tie-free inputs the rejection set coincides exactly with the
    step-up rule applied to the empirical p-values at the same level.
    """
    null_s = as_scores(null_scores, "null_scores", allow_empty=True)
    test_s = as_scores(test_scores, "test_scores")
    alpha = check_level(alpha, allow_one=True)
    m = test_s.size
    ell = null_s.size
    candidates = np.concatenate([null_s, test_s])
    null_sorted = np.sort(null_s)
    test_sorted = np.sort(test_s)
    n_null_ge = ell - np.searchsorted(null_sorted, candidates, side="left")
    n_test_ge = m - np.searchsorted(test_sorted, candidates, side="left")
    with np.errstate(divide="ignore"):
        fdp = np.where(
            n_test_ge > 0,
            (m / (ell + 1.0)) * (1 + n_null_ge) / np.maximum(n_test_ge, 1),
            np.inf,
        )
    qualifying = fdp <= alpha * (1.0 + BOUNDARY_SLACK)
    if not qualifying.any():
        empty = RejectionSet(
            indices=np.array([], dtype=np.intp), k_hat=0, level_used=alpha
        )
        return KnockoffResult(
            threshold=np.inf, fdp_hat_at_threshold=np.inf, rejections=empty
        )
    pos = np.flatnonzero(qualifying)
    best = pos[np.argmin(candidates[pos])]
    t_hat = float(candidates[best])
    indices = np.flatnonzero(test_s >= t_hat)
    rejections = RejectionSet(
        indices=indices, k_hat=int(indices.size), level_used=alpha
    )
    return KnockoffResult(
        threshold=t_hat,
        fdp_hat_at_threshold=float(fdp[best]),
        rejections=rejections,
    )
