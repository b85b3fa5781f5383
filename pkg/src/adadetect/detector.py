"""Detection pipelines.

A run takes a null training sample split into (first_null, calib_null) plus
a test sample, fits a scorer on (first_null, mixed = calib_null + test),
turns scores into empirical p-values and applies the step-up rule at the
target level.  Adaptive variants first estimate the null proportion from
the empirical p-values; the cross-validated variant selects a scorer on a
surrogate problem carved out of the null sample.

Every run also computes the equivalent score-threshold selection and
asserts that the two rejection sets agree exactly.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone

from ._rng import derive_seed
from .conformal import break_ties, empirical_pvalues
from .exceptions import DegenerateEstimateError, InternalInvariantError, InvalidInputError
from .mtest import (
    Pi0Estimate,
    RejectionSet,
    bh_rejections,
    knockoff_select,
    quantile_pi0,
    storey_pi0,
)
from .scorers import PUClassifierScorer
from .validation import as_matrix, check_level, check_int_range

__all__ = [
    "SplitDataset",
    "DetectionReport",
    "split_nts",
    "run_adadetect",
    "run_storey_adadetect",
    "run_quantile_adadetect",
    "run_adadetect_cv",
    "AdaDetect",
]


def split_nts(nulls, k=None, ell=None, shuffle_seed=None):
    """Split the null sample into (first k rows, remaining ell rows).

    Exactly one of ``k`` and ``ell`` must be given; the split is the
    canonical input order unless ``shuffle_seed`` asks for a permutation.
    """
    nulls = as_matrix(nulls, "nulls", allow_empty=True)
    n = nulls.shape[0]
    if (k is None) == (ell is None):
        raise InvalidInputError("give exactly one of k and ell")
    if k is None:
        ell = check_int_range(ell, "ell", 0, n)
        k = n - ell
    else:
        k = check_int_range(k, "k", 0, n)
    if shuffle_seed is not None:
        from ._rng import derive_rng

        order = derive_rng(shuffle_seed, "nts-shuffle").permutation(n)
        nulls = nulls[order]
    return nulls[:k], nulls[k:]


@dataclass(frozen=True)
class SplitDataset:
    """The split null training sample plus the test sample."""

    first_null: np.ndarray
    calib_null: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        first = as_matrix(self.first_null, "first_null", allow_empty=True)
        d = first.shape[1] if first.shape[0] else None
        calib = as_matrix(self.calib_null, "calib_null", allow_empty=True,
                          n_features=d)
        if calib.shape[0]:
            d = calib.shape[1]
        test = as_matrix(self.test, "test", n_features=d)
        object.__setattr__(self, "first_null", first)
        object.__setattr__(self, "calib_null", calib)
        object.__setattr__(self, "test", test)

    @classmethod
    def from_samples(cls, nulls, test, k=None, ell=None, shuffle_seed=None):
        test = as_matrix(test, "test")
        if k is None and ell is None:
            ell = test.shape[0]  # recommended default: ell = m
        first, calib = split_nts(nulls, k=k, ell=ell, shuffle_seed=shuffle_seed)
        return cls(first_null=first, calib_null=calib, test=test)

    @property
    def k(self):
        return self.first_null.shape[0]

    @property
    def ell(self):
        return self.calib_null.shape[0]

    @property
    def m(self):
        return self.test.shape[0]

    @property
    def n_features(self):
        return self.test.shape[1]

    def mixed(self):
        return np.vstack([self.calib_null, self.test])


@dataclass(frozen=True)
class DetectionReport:
    """Everything a run produced, reproducible bit-exactly from its config."""

    rejections: RejectionSet
    pvalues: np.ndarray
    calib_scores: np.ndarray
    test_scores: np.ndarray
    threshold: float
    fdp_at_threshold: float
    config: dict
    pi0_estimate: Pi0Estimate | None = None
    warnings: tuple = ()
    chosen_index: int | None = None
    surrogate_rejections: tuple | None = None

    def to_dict(self):
        out = {
            "rejections": self.rejections.indices.tolist(),
            "k_hat": self.rejections.k_hat,
            "level_used": self.rejections.level_used,
            "threshold": self.threshold,
            "fdp_at_threshold": self.fdp_at_threshold,
            "pvalues": self.pvalues.tolist(),
            "calib_scores": self.calib_scores.tolist(),
            "test_scores": self.test_scores.tolist(),
            "config": self.config,
            "warnings": list(self.warnings),
        }
        if self.pi0_estimate is not None:
            out["pi0"] = {
                "value": self.pi0_estimate.value,
                "method": self.pi0_estimate.method,
                "param": self.pi0_estimate.param,
            }
        if self.chosen_index is not None:
            out["chosen_index"] = self.chosen_index
            out["surrogate_rejections"] = list(self.surrogate_rejections)
        return out


def _scorer_config(scorer):
    params = {}
    for key, value in scorer.get_params().items():
        if isinstance(value, (type(None), bool, int, float, str)):
            params[key] = value
        elif isinstance(value, (list, tuple, np.ndarray)):
            params[key] = np.asarray(value).tolist()
        else:
            params[key] = repr(value)
    return {"name": getattr(scorer, "scorer_name", type(scorer).__name__),
            "params": params}


def _definite(scores):
    """Collapse infinite sentinel scores onto finite values, keeping ranks."""
    s = np.asarray(scores, dtype=np.float64)
    if np.isnan(s).any():
        raise InvalidInputError("scorer produced NaN scores")
    finite = np.isfinite(s)
    if finite.all():
        return s
    out = s.copy()
    if finite.any():
        lo, hi = s[finite].min(), s[finite].max()
        gap = (hi - lo) + 1.0
        out[np.isposinf(s)] = hi + gap
        out[np.isneginf(s)] = lo - gap
    else:
        out[np.isposinf(s)] = 1.0
        out[np.isneginf(s)] = -1.0
    return out


def _fit_and_score(data, scorer, seed):
    fitted = clone(scorer)
    if "random_state" in fitted.get_params():
        fitted.set_params(random_state=derive_seed(seed, "scorer-fit"))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fitted.fit(data.first_null, data.mixed())
        calib_scores = (np.asarray(fitted.score_samples(data.calib_null), float)
                        if data.ell else np.zeros(0))
        test_scores = np.asarray(fitted.score_samples(data.test), float)
    notes = tuple(str(w.message) for w in caught)
    all_scores = _definite(np.concatenate([calib_scores, test_scores]))
    broken = break_ties(all_scores, seed=derive_seed(seed, "tie-break"))
    return fitted, broken[: data.ell], broken[data.ell:], notes


def _assert_knockoff_equivalence(calib_scores, test_scores, level, rejections):
    ko = knockoff_select(calib_scores, test_scores, level)
    if not np.array_equal(ko.rejections.indices, rejections.indices):
        raise InternalInvariantError(
            "score-threshold selection disagrees with the step-up rule"
        )
    return ko


def _build_report(data, rejections, pvalues, calib_scores, test_scores,
                  knockoff, config, pi0=None, notes=(), chosen_index=None,
                  surrogate_rejections=None):
    threshold = knockoff.threshold if knockoff is not None else np.inf
    fdp_at = knockoff.fdp_hat_at_threshold if knockoff is not None else np.inf
    return DetectionReport(
        rejections=rejections,
        pvalues=pvalues,
        calib_scores=calib_scores,
        test_scores=test_scores,
        threshold=threshold,
        fdp_at_threshold=fdp_at,
        config=config,
        pi0_estimate=pi0,
        warnings=tuple(notes),
        chosen_index=chosen_index,
        surrogate_rejections=surrogate_rejections,
    )


def run_adadetect(data, scorer, alpha, seed=0):
    """Plain pipeline: score, empirical p-values, step-up rule at ``alpha``."""
    alpha = check_level(alpha)
    _, calib_s, test_s, notes = _fit_and_score(data, scorer, seed)
    pvalues = empirical_pvalues(calib_s, test_s)
    rejections = bh_rejections(pvalues, alpha)
    ko = _assert_knockoff_equivalence(calib_s, test_s, alpha, rejections)
    config = {
        "variant": "adadetect",
        "alpha": alpha,
        "seed": int(seed),
        "scorer": _scorer_config(scorer),
        "k": data.k, "ell": data.ell, "m": data.m,
    }
    return _build_report(data, rejections, pvalues, calib_s, test_s, ko,
                         config, notes=notes)


def resolve_storey_K(ell, K=None, lam=None):
    """Admissible Storey grid point: lambda = K/(ell+1) with K in {2..ell}.

    A requested ``lam`` is snapped to the nearest admissible K.
    """
    if ell < 2:
        raise InvalidInputError("Storey variant needs ell >= 2")
    if K is not None and lam is not None:
        raise InvalidInputError("give at most one of K and lam")
    if K is None:
        lam = 0.5 if lam is None else check_level(lam)
        K = int(np.clip(round(lam * (ell + 1)), 2, ell))
    return check_int_range(K, "K", 2, ell)


def run_storey_adadetect(data, scorer, alpha, K=None, lam=None, seed=0):
    """Adaptive pipeline with the Storey estimator at lambda = K/(ell+1)."""
    alpha = check_level(alpha)
    K = resolve_storey_K(data.ell, K=K, lam=lam)
    lam_used = K / (data.ell + 1.0)
    _, calib_s, test_s, notes = _fit_and_score(data, scorer, seed)
    pvalues = empirical_pvalues(calib_s, test_s)
    pi0 = storey_pi0(pvalues, lam_used)
    level = min(1.0, alpha / pi0.value)
    rejections = bh_rejections(pvalues, level)
    ko = _assert_knockoff_equivalence(calib_s, test_s, level, rejections)
    config = {
        "variant": "storey-adadetect",
        "alpha": alpha,
        "K": int(K),
        "lambda": lam_used,
        "seed": int(seed),
        "scorer": _scorer_config(scorer),
        "k": data.k, "ell": data.ell, "m": data.m,
    }
    return _build_report(data, rejections, pvalues, calib_s, test_s, ko,
                         config, pi0=pi0, notes=notes)


def run_quantile_adadetect(data, scorer, alpha, k0=None, seed=0):
    """Adaptive pipeline with the quantile estimator at k0 (default ceil(m/2)).

    A degenerate estimate (p_(k0) = 1) yields zero rejections and a warning
    rather than an error.
    """
    alpha = check_level(alpha)
    k0 = int(np.ceil(data.m / 2)) if k0 is None else k0
    k0 = check_int_range(k0, "k0", 1, data.m)
    _, calib_s, test_s, notes = _fit_and_score(data, scorer, seed)
    pvalues = empirical_pvalues(calib_s, test_s)
    config = {
        "variant": "quantile-adadetect",
        "alpha": alpha,
        "k0": int(k0),
        "seed": int(seed),
        "scorer": _scorer_config(scorer),
        "k": data.k, "ell": data.ell, "m": data.m,
    }
    try:
        pi0 = quantile_pi0(pvalues, k0)
    except DegenerateEstimateError:
        pi0 = Pi0Estimate(value=np.inf, method="quantile", param=int(k0))
        empty = RejectionSet(indices=np.array([], dtype=np.intp), k_hat=0,
                             level_used=0.0)
        notes = notes + (f"quantile estimate degenerate (p_({k0}) = 1); "
                         "no rejections",)
        return _build_report(data, empty, pvalues, calib_s, test_s, None,
                             config, pi0=pi0, notes=notes)
    level = min(1.0, alpha / pi0.value)
    rejections = bh_rejections(pvalues, level)
    ko = _assert_knockoff_equivalence(calib_s, test_s, level, rejections)
    return _build_report(data, rejections, pvalues, calib_s, test_s, ko,
                         config, pi0=pi0, notes=notes)


def run_adadetect_cv(data, scorer_grid, alpha, s=None, cv_alpha=None, seed=0):
    """Scorer selection on a surrogate problem, then a plain run.

    The first ``s`` nulls play the surrogate first-null split, the remaining
    k - s nulls the surrogate calibration set, and the true mixed sample the
    surrogate test set.  The grid entry with the most surrogate rejections
    (ties to the lowest index) is refit on the original split.  Surrogate
    rejections are counted at ``cv_alpha`` (default: the final ``alpha``).
    """
    alpha = check_level(alpha)
    grid = list(scorer_grid)
    if not grid:
        raise InvalidInputError("scorer grid must be nonempty")
    if data.k == 0:
        raise InvalidInputError("cross-validation needs k >= 1")
    s = 3 * data.k // 4 if s is None else s
    s = check_int_range(s, "s", 0, data.k - 1)
    sel_alpha = alpha if cv_alpha is None else check_level(cv_alpha)

    surrogate = SplitDataset(
        first_null=data.first_null[:s],
        calib_null=data.first_null[s:],
        test=data.mixed(),
    )
    counts = []
    for i, candidate in enumerate(grid):
        rep = run_adadetect(surrogate, candidate, sel_alpha,
                            seed=derive_seed(seed, "cv-candidate", i))
        counts.append(rep.rejections.k_hat)
    chosen = int(np.argmax(counts))

    final = run_adadetect(data, grid[chosen], alpha, seed=seed)
    config = dict(final.config)
    config.update({
        "variant": "adadetect-cv",
        "s": int(s),
        "cv_alpha": sel_alpha,
        "grid": [_scorer_config(g) for g in grid],
    })
    return DetectionReport(
        rejections=final.rejections,
        pvalues=final.pvalues,
        calib_scores=final.calib_scores,
        test_scores=final.test_scores,
        threshold=final.threshold,
        fdp_at_threshold=final.fdp_at_threshold,
        config=config,
        warnings=final.warnings,
        chosen_index=chosen,
        surrogate_rejections=tuple(counts),
    )


class AdaDetect(BaseEstimator):
    """Estimator facade over the functional runners.

    >>> det = AdaDetect(scorer=PUClassifierScorer(), alpha=0.1)
    >>> mask = det.fit_predict(nulls, test)          # doctest: +SKIP

    ``pi0`` selects the variant: 'none' (plain), 'storey' or 'quantile'.
    ``k``/``ell`` fix the null split; both None means ell = len(test).
    After fitting, ``report_``, ``rejections_``, ``pvalues_`` and
    ``novelty_mask_`` hold the outcome.
    """

    def __init__(self, scorer=None, alpha=0.1, pi0="none", storey_K=None,
                 storey_lambda=None, quantile_k0=None, k=None, ell=None,
                 shuffle_seed=None, random_state=0):
        self.scorer = scorer
        self.alpha = alpha
        self.pi0 = pi0
        self.storey_K = storey_K
        self.storey_lambda = storey_lambda
        self.quantile_k0 = quantile_k0
        self.k = k
        self.ell = ell
        self.shuffle_seed = shuffle_seed
        self.random_state = random_state

    def fit(self, nulls, test):
        scorer = self.scorer if self.scorer is not None else PUClassifierScorer()
        data = SplitDataset.from_samples(
            nulls, test, k=self.k, ell=self.ell, shuffle_seed=self.shuffle_seed
        )
        seed = 0 if self.random_state is None else self.random_state
        if self.pi0 == "none":
            report = run_adadetect(data, scorer, self.alpha, seed=seed)
        elif self.pi0 == "storey":
            report = run_storey_adadetect(
                data, scorer, self.alpha, K=self.storey_K,
                lam=self.storey_lambda, seed=seed,
            )
        elif self.pi0 == "quantile":
            report = run_quantile_adadetect(
                data, scorer, self.alpha, k0=self.quantile_k0, seed=seed
            )
        else:
            raise InvalidInputError(f"unknown pi0 variant: {self.pi0!r}")
        self.data_ = data
        self.report_ = report
        self.rejections_ = report.rejections.indices
        self.pvalues_ = report.pvalues
        mask = np.zeros(data.m, dtype=bool)
        mask[self.rejections_] = True
        self.novelty_mask_ = mask
        return self

    def predict(self):
        """Boolean novelty mask over the fitted test rows."""
        return self.novelty_mask_

    def fit_predict(self, nulls, test):
        return self.fit(nulls, test).predict()
