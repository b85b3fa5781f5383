"""Density models and density-ratio scorers.

The density route estimates the calibration-time score as a ratio between
the mixed-sample density (fit on the calibration nulls plus the test
points) and the null density (fit on the first null split only).  Two
families are provided: a gaussian one (shrunk-covariance null, two-component
gaussian mixture for the mixed sample, fit by EM with random restarts) and
a histogram one on a common grid over the unit cube.
"""

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .._rng import canonical_order, derive_rng, derive_seed, multiset_hash
from ..exceptions import InvalidInputError
from ..validation import as_matrix, check_int_range
from .base import BaseScorer

__all__ = [
    "GaussianShrinkageDensity",
    "TwoComponentGaussianMixture",
    "HistogramDensity",
    "histogram_density",
    "OracleScorer",
    "DensityRatioScorer",
]

_LOG_2PI = np.log(2.0 * np.pi)

#: Hard cap on the total number of histogram cells (memory guard).
_MAX_CELLS = 1 << 24


class GaussianShrinkageDensity:
    """Single gaussian with covariance shrunk toward a scaled identity:

        Sigma_hat = (1 - shrinkage) * S + shrinkage * (tr S / d) * I

    with S the maximum-likelihood covariance.
    """

    def __init__(self, shrinkage=0.1):
        self.shrinkage = shrinkage

    def fit(self, X):
        X = as_matrix(X, "X")
        n, d = X.shape
        if n < d + 2:
            raise InvalidInputError(
                f"gaussian fit needs at least d + 2 = {d + 2} points, got {n}"
            )
        rho = float(self.shrinkage)
        if not 0.0 <= rho <= 1.0:
            raise InvalidInputError(f"shrinkage must lie in [0, 1], got {rho}")
        self.mean_ = X.mean(axis=0)
        diff = X - self.mean_
        S = diff.T @ diff / n
        target = (np.trace(S) / d) * np.eye(d)
        self.covariance_ = (1.0 - rho) * S + rho * target
        self._chol = np.linalg.cholesky(self.covariance_)
        self._log_det = 2.0 * np.log(np.diag(self._chol)).sum()
        return self

    def log_density(self, X):
        X = as_matrix(X, "X", allow_empty=True, n_features=self.mean_.size)
        d = self.mean_.size
        diff = X - self.mean_
        y = solve_triangular(self._chol, diff.T, lower=True)
        quad = np.einsum("dn,dn->n", y, y)
        return -0.5 * (d * _LOG_2PI + self._log_det + quad)


class TwoComponentGaussianMixture:
    """Two-component gaussian mixture fit by EM with random restarts.

    Restart initializations come from a stream keyed by the data multiset
    and ``random_state``; the highest-likelihood restart wins, ties going to
    the lowest restart index.  Full covariances with a trace-scaled ridge.
    """

    def __init__(self, n_restarts=100, max_iter=100, tol=1e-6, ridge=1e-6,
                 random_state=None):
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.ridge = ridge
        self.random_state = random_state

    def fit(self, X):
        X = as_matrix(X, "X")
        X = np.ascontiguousarray(X[canonical_order(X)])
        n, d = X.shape
        if n < d + 2:
            raise InvalidInputError(
                f"mixture fit needs at least d + 2 = {d + 2} points, got {n}"
            )
        n_restarts = check_int_range(self.n_restarts, "n_restarts", 1)
        max_iter = check_int_range(self.max_iter, "max_iter", 1)
        seed = 0 if self.random_state is None else self.random_state
        rng = derive_rng(seed, "gmm2-init", multiset_hash(X))
        ridge = float(self.ridge)
        eye = np.eye(d)

        start = X[rng.integers(0, n, size=(n_restarts, 2))].copy()
        S = np.atleast_2d(np.cov(X.T, bias=True)) if n > 1 else eye.copy()
        S = S + ridge * (np.trace(S) / d + 1.0) * eye
        means = start
        covs = np.broadcast_to(S, (n_restarts, 2, d, d)).copy()
        weights = np.full((n_restarts, 2), 0.5)

        best_ll = np.full(n_restarts, -np.inf)
        ll_prev = np.full(n_restarts, -np.inf)
        active = np.arange(n_restarts)
        n_iter = 0
        while active.size and n_iter < max_iter:
            n_iter += 1
            a = active
            inv = np.linalg.inv(covs[a])
            _, logdet = np.linalg.slogdet(covs[a])
            diff = X[None, None, :, :] - means[a][:, :, None, :]
            sol = np.matmul(diff, inv)
            quad = np.einsum("rcnd,rcnd->rcn", sol, diff)
            logp = (-0.5 * (d * _LOG_2PI + logdet[:, :, None] + quad)
                    + np.log(weights[a])[:, :, None])
            lse = logsumexp(logp, axis=1)
            ll = lse.sum(axis=1)
            resp = np.exp(logp - lse[:, None, :])
            counts = np.maximum(resp.sum(axis=2), 1e-10)
            w_new = counts / n
            m_new = np.matmul(resp, X) / counts[:, :, None]
            diff = X[None, None, :, :] - m_new[:, :, None, :]
            c_new = (np.matmul(diff.transpose(0, 1, 3, 2), diff * resp[:, :, :, None])
                     / counts[:, :, None, None])
            tr = np.einsum("rcii->rc", c_new) / d
            c_new = c_new + (ridge * (tr + 1.0))[:, :, None, None] * eye
            weights[a], means[a], covs[a] = w_new, m_new, c_new
            best_ll[a] = ll
            done = np.abs(ll - ll_prev[a]) <= self.tol * (1.0 + np.abs(ll))
            ll_prev[a] = ll
            active = a[~done]

        best = int(np.argmax(best_ll))
        self.weights_ = weights[best]
        self.means_ = means[best]
        self.covariances_ = covs[best]
        self.log_likelihood_ = float(best_ll[best])
        self.n_iter_ = n_iter
        chol = np.linalg.cholesky(self.covariances_)
        self._chol = chol
        self._log_det = 2.0 * np.log(np.einsum("cii->ci", chol)).sum(axis=1)
        return self

    def log_density(self, X):
        X = as_matrix(X, "X", allow_empty=True, n_features=self.means_.shape[1])
        d = self.means_.shape[1]
        parts = np.empty((2, X.shape[0]))
        for c in range(2):
            diff = X - self.means_[c]
            y = solve_triangular(self._chol[c], diff.T, lower=True)
            quad = np.einsum("dn,dn->n", y, y)
            parts[c] = (-0.5 * (d * _LOG_2PI + self._log_det[c] + quad)
                        + np.log(self.weights_[c]))
        return logsumexp(parts, axis=0)


class HistogramDensity:
    """Histogram density on a regular partition of [0, 1]^d.

    The partition has ``n_bins`` cells per axis, defaulting to
    ceil(n_total ** (1/(2+d))); the density on a cell is
    ``n_bins**d * count / n_total``, so the cell masses sum to one when
    ``n_total`` is the sample size.
    """

    def __init__(self, n_bins=None, n_total=None):
        self.n_bins = n_bins
        self.n_total = n_total

    def fit(self, X):
        X = as_matrix(X, "X")
        n, d = X.shape
        if (X < 0).any() or (X > 1).any():
            raise InvalidInputError("histogram points must lie in [0, 1]^d")
        n_total = n if self.n_total is None else check_int_range(
            self.n_total, "n_total", 1)
        if self.n_bins is None:
            n_bins = int(np.ceil(n_total ** (1.0 / (2.0 + d))))
        else:
            n_bins = check_int_range(self.n_bins, "n_bins", 1)
        if n_bins ** d > _MAX_CELLS:
            raise InvalidInputError(
                f"{n_bins}^{d} histogram cells exceed the {_MAX_CELLS} cap"
            )
        self.n_bins_ = n_bins
        self.n_features_ = d
        self._n_total = n_total
        counts = np.bincount(self._cell_index(X), minlength=n_bins ** d)
        self.cell_mass_ = counts / n_total
        return self

    def _cell_index(self, X):
        # points exactly at 1.0 belong to the last cell
        idx = np.minimum((X * self.n_bins_).astype(np.intp), self.n_bins_ - 1)
        flat = idx[:, 0]
        for j in range(1, self.n_features_):
            flat = flat * self.n_bins_ + idx[:, j]
        return flat

    def pdf(self, X):
        X = as_matrix(X, "X", allow_empty=True, n_features=self.n_features_)
        if (X < 0).any() or (X > 1).any():
            raise InvalidInputError("histogram points must lie in [0, 1]^d")
        scale = float(self.n_bins_) ** self.n_features_
        return self.cell_mass_[self._cell_index(X)] * scale

    def log_density(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(X))


def histogram_density(points, n_total=None, n_bins=None):
    """Fit a :class:`HistogramDensity` on points in [0, 1]^d."""
    return HistogramDensity(n_bins=n_bins, n_total=n_total).fit(points)


class OracleScorer(BaseScorer):
    """Score with known densities: x -> pi1*f1(x) / (pi0*f0(x) + pi1*f1(x)).

    ``null_logpdf`` and ``alt_logpdf`` map an (n, d) array to (n,) log
    densities.  Fitting is a no-op.
    """

    scorer_name = "oracle"

    def __init__(self, null_logpdf=None, alt_logpdf=None, pi1=0.5):
        self.null_logpdf = null_logpdf
        self.alt_logpdf = alt_logpdf
        self.pi1 = pi1

    def fit(self, first_null, mixed):
        self._check_config()
        self._prepare_fit_inputs(first_null, mixed)
        return self

    def score_samples(self, X):
        self._check_config()
        X = as_matrix(X, "X", allow_empty=True)
        pi1 = float(self.pi1)
        if pi1 == 0.0:
            return np.zeros(X.shape[0])
        if pi1 == 1.0:
            return np.ones(X.shape[0])
        log_alt = np.asarray(self.alt_logpdf(X), dtype=np.float64) + np.log(pi1)
        log_null = np.asarray(self.null_logpdf(X), dtype=np.float64) + np.log(1.0 - pi1)
        log_mix = np.logaddexp(log_null, log_alt)
        if np.isneginf(log_mix).any():
            raise InvalidInputError("oracle score undefined: zero mixture density")
        return np.exp(log_alt - log_mix)

    def _check_config(self):
        if self.null_logpdf is None or self.alt_logpdf is None:
            raise InvalidInputError("OracleScorer requires null_logpdf and alt_logpdf")
        pi1 = float(self.pi1)
        if not 0.0 <= pi1 <= 1.0:
            raise InvalidInputError(f"pi1 must lie in [0, 1], got {pi1}")


class DensityRatioScorer(BaseScorer):
    """Score x -> f_mixed(x) / f_null(x) with both densities estimated.

    family='gaussian': shrunk-covariance gaussian for the null, EM-fitted
    two-component gaussian mixture for the mixed sample.

    family='histogram': both densities are histograms on one common grid
    over [0, 1]^d after min-max rescaling; the ranges come from the first
    null split only, points outside are clipped onto the boundary, and the
    per-axis bin count is set from the mixed sample size.  Cells that are
    empty under the null density score +inf (most anomalous).
    """

    scorer_name = "density-ratio"

    def __init__(self, family="gaussian", shrinkage=0.1, n_restarts=100,
                 em_max_iter=100, em_tol=1e-6, ridge=1e-6, n_bins=None,
                 random_state=None):
        self.family = family
        self.shrinkage = shrinkage
        self.n_restarts = n_restarts
        self.em_max_iter = em_max_iter
        self.em_tol = em_tol
        self.ridge = ridge
        self.n_bins = n_bins
        self.random_state = random_state

    def fit(self, first_null, mixed):
        pos, unl = self._prepare_fit_inputs(first_null, mixed)
        if pos.shape[0] == 0:
            raise InvalidInputError(
                "DensityRatioScorer needs a nonempty first-null sample"
            )
        if self.family == "gaussian":
            self.null_model_ = GaussianShrinkageDensity(self.shrinkage).fit(pos)
            seed = 0 if self.random_state is None else self.random_state
            # key the restart stream on both samples so refits on permuted
            # mixed data are bit-identical
            em_seed = derive_seed(seed, "em-restarts", multiset_hash(pos))
            self.mixed_model_ = TwoComponentGaussianMixture(
                n_restarts=self.n_restarts,
                max_iter=self.em_max_iter,
                tol=self.em_tol,
                ridge=self.ridge,
                random_state=em_seed,
            ).fit(unl)
        elif self.family == "histogram":
            lo = pos.min(axis=0)
            hi = pos.max(axis=0)
            width = hi - lo
            width[width == 0] = 1.0
            self._lo, self._width = lo, width
            n_bins = self.n_bins
            if n_bins is None:
                d = pos.shape[1]
                n_bins = int(np.ceil(unl.shape[0] ** (1.0 / (2.0 + d))))
            self.null_model_ = HistogramDensity(n_bins=n_bins).fit(self._rescale(pos))
            self.mixed_model_ = HistogramDensity(n_bins=n_bins).fit(self._rescale(unl))
        else:
            raise InvalidInputError(f"unknown density family: {self.family!r}")
        return self

    def score_samples(self, X):
        X = self._check_eval_input(X)
        if self.family == "gaussian":
            log_ratio = self.mixed_model_.log_density(X) - self.null_model_.log_density(X)
            with np.errstate(over="ignore"):
                return np.exp(log_ratio)
        Xr = self._rescale(X)
        null_pdf = self.null_model_.pdf(Xr)
        mixed_pdf = self.mixed_model_.pdf(Xr)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(null_pdf > 0, mixed_pdf / np.maximum(null_pdf, 1e-300),
                           np.inf)
        return out

    def _rescale(self, X):
        return np.clip((X - self._lo) / self._width, 0.0, 1.0)
