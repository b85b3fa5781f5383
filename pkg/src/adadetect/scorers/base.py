"""Common scorer surface.

A scorer is fit on (first_null, mixed) and then maps points to real scores,
larger meaning more anomalous.  The hard correctness requirement is that the
fitted map is invariant, bit for bit, to permutations of ``mixed``: every
fit routine first puts the mixed sample into a canonical row order and draws
any randomness from a stream keyed by an order-invariant hash of the data,
so identical multisets produce identical fits.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .._rng import canonical_order
from ..exceptions import InvalidInputError
from ..validation import as_matrix

__all__ = ["BaseScorer"]


class BaseScorer(BaseEstimator):
    """fit(first_null, mixed) -> self; score_samples(X) -> (n,) scores."""

    scorer_name = "base"

    def fit(self, first_null, mixed):
        raise NotImplementedError

    def score_samples(self, X):
        raise NotImplementedError

    def fit_score(self, first_null, mixed, X):
        return self.fit(first_null, mixed).score_samples(X)

    # -- helpers shared by concrete scorers -------------------------------

    def _prepare_fit_inputs(self, first_null, mixed):
        """Validate both samples and return (first_null, mixed-canonical)."""
        pos = as_matrix(first_null, "first_null", allow_empty=True)
        unl = as_matrix(mixed, "mixed")
        if pos.shape[0] and pos.shape[1] != unl.shape[1]:
            raise InvalidInputError(
                "first_null and mixed must share the same dimension "
                f"({pos.shape[1]} != {unl.shape[1]})"
            )
        unl = np.ascontiguousarray(unl[canonical_order(unl)])
        self.n_features_in_ = unl.shape[1]
        return pos, unl

    def _check_eval_input(self, X):
        return as_matrix(X, "X", allow_empty=True, n_features=self.n_features_in_)
