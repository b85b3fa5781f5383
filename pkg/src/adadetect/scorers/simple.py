"""Non-adaptive scorers: fitting is a no-op, so permutation invariance is
trivial and the split sizes only govern the p-value resolution."""

import numpy as np

from ..exceptions import InvalidInputError
from ..validation import as_matrix, as_scores
from .base import BaseScorer

__all__ = ["ChiSquareScorer", "LinearScorer", "FixedScorer", "ConstantScorer"]


class ChiSquareScorer(BaseScorer):
    """Squared euclidean norm: score(z) = sum_j z_j^2."""

    scorer_name = "chi2"

    def fit(self, first_null, mixed):
        self._prepare_fit_inputs(first_null, mixed)
        return self

    def score_samples(self, X):
        X = self._ensure_dim(X)
        return np.einsum("nd,nd->n", X, X)

    def _ensure_dim(self, X):
        if not hasattr(self, "n_features_in_"):
            return as_matrix(X, "X", allow_empty=True)
        return self._check_eval_input(X)


class LinearScorer(BaseScorer):
    """Fixed linear score(z) = mu . z for a nonzero direction mu."""

    scorer_name = "linear"

    def __init__(self, mu=None):
        self.mu = mu

    def fit(self, first_null, mixed):
        self._prepare_fit_inputs(first_null, mixed)
        self._direction()
        return self

    def score_samples(self, X):
        mu = self._direction()
        if hasattr(self, "n_features_in_"):
            X = self._check_eval_input(X)
        else:
            X = as_matrix(X, "X", allow_empty=True, n_features=mu.size)
        if X.shape[1] != mu.size:
            raise InvalidInputError(
                f"mu has dimension {mu.size} but points have {X.shape[1]}"
            )
        return X @ mu

    def _direction(self):
        if self.mu is None:
            raise InvalidInputError("LinearScorer requires mu")
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        if mu.size == 0 or not np.isfinite(mu).all() or not np.any(mu != 0):
            raise InvalidInputError("mu must be a finite nonzero vector")
        return mu


class FixedScorer(BaseScorer):
    """Wrap a user-supplied score function; the function must be pure."""

    scorer_name = "fixed"

    def __init__(self, score_fn=None):
        self.score_fn = score_fn

    def fit(self, first_null, mixed):
        if self.score_fn is None:
            raise InvalidInputError("FixedScorer requires score_fn")
        self._prepare_fit_inputs(first_null, mixed)
        return self

    def score_samples(self, X):
        if self.score_fn is None:
            raise InvalidInputError("FixedScorer requires score_fn")
        X = as_matrix(X, "X", allow_empty=True)
        out = as_scores(np.asarray(self.score_fn(X)), "score_fn output",
                        allow_empty=True, allow_inf=True)
        if out.size != X.shape[0]:
            raise InvalidInputError(
                f"score_fn returned {out.size} scores for {X.shape[0]} points"
            )
        return out


class ConstantScorer(BaseScorer):
    """Scores every point identically; useful as an uninformative baseline."""

    scorer_name = "constant"

    def __init__(self, value=0.0):
        self.value = value

    def fit(self, first_null, mixed):
        self._prepare_fit_inputs(first_null, mixed)
        return self

    def score_samples(self, X):
        X = as_matrix(X, "X", allow_empty=True)
        return np.full(X.shape[0], float(self.value))
