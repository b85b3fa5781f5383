"""Empirical (rank-based) p-values from calibration and test scores.

The p-value of test score s against calibration scores S_1..S_ell is

    p = (1 + #{S_i > s}) / (ell + 1),

which lives on the grid {1/(ell+1), ..., 1}.  The count is strict, so ties
must be removed first; :func:`break_ties` does that with a deterministic,
seed-derived jitter confined to the tied entries.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng, multiset_hash
from .exceptions import InternalInvariantError
from .validation import as_scores

__all__ = ["ScoredSplit", "break_ties", "empirical_pvalues"]

#: Relative magnitude cap of the tie-breaking jitter.
TIE_EPS = 2.0 ** -40

_MAX_TIE_ATTEMPTS = 8


def break_ties(scores, seed=0):
    """Return a copy of ``scores`` with ties resolved by tiny jitter.

    Only entries participating in a tie are touched; everything else is
    bit-identical to the input.  The jitter magnitude stays below
    ``TIE_EPS * max(score range, 1)`` whenever float64 can represent that
    separation; for tied values whose float spacing is coarser it is raised
    to the smallest representable separation instead of failing.  All draws
    come from a stream keyed by the user seed and an order-invariant hash of
    the score multiset, so repeated runs on the same data give identical
    output.
    """
    s = np.array(as_scores(scores, "scores", allow_empty=True), dtype=np.float64)
    if s.size < 2:
        return s
    values, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    if counts.max() == 1:
        return s
    span = float(values[-1] - values[0])
    nominal = TIE_EPS * (span if span > 0 else 1.0)
    rng = derive_rng(seed, "tie-break", multiset_hash(s))
    tied_groups = np.flatnonzero(counts > 1)
    for _ in range(_MAX_TIE_ATTEMPTS):
        out = s.copy()
        for g in tied_groups:
            idx = np.flatnonzero(inverse == g)
            c = idx.size
            # the ladder gap 2*eps/(c+1) must exceed one ulp at this value
            # or the perturbed copies round back onto each other
            eps = max(nominal, float(np.spacing(abs(values[g]))) * (c + 1))
            # evenly spaced ladder strictly inside (-eps, eps): unlike iid
            # draws it cannot collide at float resolution even for large
            # groups; the random phase dodges cross-group collisions and the
            # shuffle assigns ranks exchangeably
            phase = rng.uniform(0.0, 1.0)
            offsets = ((np.arange(1, c + 1) + phase) / (c + 1.0)) * 2.0 - 1.0
            rng.shuffle(offsets)
            out[idx] = values[g] + eps * offsets
        if np.unique(out).size == out.size:
            return out
    raise InternalInvariantError("tie breaking failed to produce distinct scores")


@dataclass(frozen=True)
class ScoredSplit:
    """Calibration-null and test scores with ties already removed."""

    calib_scores: np.ndarray
    test_scores: np.ndarray
    seed: int = 0

    @classmethod
    def from_scores(cls, calib_scores, test_scores, seed=0):
        calib = as_scores(calib_scores, "calib_scores", allow_empty=True)
        test = as_scores(test_scores, "test_scores")
        broken = break_ties(np.concatenate([calib, test]), seed=seed)
        return cls(
            calib_scores=broken[: calib.size],
            test_scores=broken[calib.size :],
            seed=int(seed),
        )

    def pvalues(self):
        return empirical_pvalues(self.calib_scores, self.test_scores)


def empirical_pvalues(calib_scores, test_scores):
    """p_j = (1 + #{calibration scores > test score j}) / (ell + 1).

    Requires tie-free scores (see :func:`break_ties`); with ell = 0 every
    p-value degenerates to 1.
    """
    calib = as_scores(calib_scores, "calib_scores", allow_empty=True)
    test = as_scores(test_scores, "test_scores")
    combined = np.concatenate([calib, test])
    if np.unique(combined).size != combined.size:
        raise InternalInvariantError("tied scores reached empirical_pvalues")
    ell = calib.size
    calib_sorted = np.sort(calib)
    n_greater = ell - np.searchsorted(calib_sorted, test, side="right")
    return (1.0 + n_greater) / (ell + 1.0)
