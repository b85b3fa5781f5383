"""Monte-Carlo lab: synthetic data generators, FDR/TDR estimation over
replicates, the marginal Storey step-up baseline, and an empirical check of
the adaptive-level FDR bound via its least-favorable p-value distribution.
"""

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import beta as beta_dist
from scipy.stats import norm

from ._rng import derive_rng, derive_seed
from .detector import (
    SplitDataset,
    run_adadetect,
    run_adadetect_cv,
    run_quantile_adadetect,
    run_storey_adadetect,
)
from .exceptions import InvalidInputError
from .mtest import RejectionSet, adaptive_bh
from .scorers import LinearScorer, OracleScorer
from .validation import check_int_range, check_level

__all__ = [
    "GeneratorConfig",
    "GeneratedData",
    "MonteCarloReport",
    "BoundEstimate",
    "gen_dataset",
    "oracle_scorer_for",
    "linear_scorer_for",
    "adadetect_procedure",
    "marginal_storey_bh_procedure",
    "monte_carlo",
    "marginal_storey_bh",
    "sample_least_favorable",
    "verify_adaptive_bound",
]

_SETTINGS = ("gaussian-sparse", "equicorrelated", "beta")

#: Number of mean-shifted leading coordinates in the gaussian-sparse setting.
_SPARSE_COORDS = 5


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic-data setting and sizes.

    gaussian-sparse: nulls N(0, I_d); novelties N(mu, I_d) with mu equal to
        ``amplitude`` (default sqrt(2 log d)) on the first five coordinates.
    equicorrelated: Z_i = mu_i + sqrt(rho)*xi + sqrt(1-rho)*eps_i with one
        shared factor xi per replicate; novelty mean has norm ``amplitude``
        (default 3) spread evenly over coordinates.
    beta: first two coordinates Beta(5,5) for nulls vs Beta(1,3) for
        novelties, remaining coordinates uniform for both.
    """

    setting: str
    d: int
    n: int
    m: int
    m1: int
    amplitude: float | None = None
    rho: float = 0.0
    signal_coords: int = _SPARSE_COORDS
    seed: int = 0

    def __post_init__(self):
        if self.setting not in _SETTINGS:
            raise InvalidInputError(
                f"unknown setting {self.setting!r}; expected one of {_SETTINGS}"
            )
        check_int_range(self.d, "d", 1)
        check_int_range(self.n, "n", 0)
        check_int_range(self.m, "m", 1)
        check_int_range(self.m1, "m1", 0, self.m)
        check_int_range(self.signal_coords, "signal_coords", 1)
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def m0(self):
        return self.m - self.m1

    @property
    def pi0(self):
        return self.m0 / self.m

    def mean_shift(self):
        """Novelty mean vector (gaussian settings only)."""
        mu = np.zeros(self.d)
        if self.setting == "gaussian-sparse":
            amp = (np.sqrt(2.0 * np.log(self.d)) if self.amplitude is None
                   else float(self.amplitude))
            mu[: min(self.signal_coords, self.d)] = amp
        elif self.setting == "equicorrelated":
            amp = 3.0 if self.amplitude is None else float(self.amplitude)
            mu[:] = amp / np.sqrt(self.d)
        else:
            raise InvalidInputError("mean_shift undefined for the beta setting")
        return mu


@dataclass(frozen=True)
class GeneratedData:
    """One replicate: n null rows, m test rows, and the ground truth."""

    nulls: np.ndarray
    test: np.ndarray
    is_novelty: np.ndarray


def gen_dataset(cfg, seed=None):
    """Draw one replicate; novelties occupy the last m1 test rows."""
    rng = derive_rng(cfg.seed if seed is None else seed, "gen", cfg.setting)
    n, m, m0, d = cfg.n, cfg.m, cfg.m0, cfg.d
    if cfg.setting == "beta":
        nulls = rng.uniform(size=(n, d))
        test = rng.uniform(size=(m, d))
        sig = min(2, d)
        nulls[:, :sig] = rng.beta(5.0, 5.0, size=(n, sig))
        test[:m0, :sig] = rng.beta(5.0, 5.0, size=(m0, sig))
        test[m0:, :sig] = rng.beta(1.0, 3.0, size=(cfg.m1, sig))
    else:
        mu = cfg.mean_shift()
        if cfg.setting == "gaussian-sparse":
            z = rng.normal(size=(n + m, d))
        else:
            # the factor xi is shared by every point within the replicate
            xi = rng.normal(size=d)
            eps = rng.normal(size=(n + m, d))
            z = np.sqrt(cfg.rho) * xi + np.sqrt(1.0 - cfg.rho) * eps
        z[n + m0:] += mu
        nulls, test = z[:n], z[n:]
    is_novelty = np.zeros(m, dtype=bool)
    is_novelty[m0:] = True
    return GeneratedData(nulls=nulls, test=test, is_novelty=is_novelty)


def oracle_scorer_for(cfg):
    """Known-density scorer for iid settings (gaussian-sparse and beta)."""
    pi1 = cfg.m1 / cfg.m
    if cfg.setting == "gaussian-sparse":
        mu = cfg.mean_shift()

        def null_logpdf(x):
            return -0.5 * (x ** 2).sum(axis=1)

        def alt_logpdf(x):
            return -0.5 * ((x - mu) ** 2).sum(axis=1)

        return OracleScorer(null_logpdf=null_logpdf, alt_logpdf=alt_logpdf, pi1=pi1)
    if cfg.setting == "beta":
        sig = min(2, cfg.d)

        def null_logpdf(x):
            return beta_dist.logpdf(x[:, :sig], 5.0, 5.0).sum(axis=1)

        def alt_logpdf(x):
            return beta_dist.logpdf(x[:, :sig], 1.0, 3.0).sum(axis=1)

        return OracleScorer(null_logpdf=null_logpdf, alt_logpdf=alt_logpdf, pi1=pi1)
    raise InvalidInputError(
        "oracle scorer is only defined for iid settings; "
        "use a linear scorer for the equicorrelated setting"
    )


def linear_scorer_for(cfg):
    """Fixed score along the novelty mean direction."""
    return LinearScorer(mu=cfg.mean_shift())


@dataclass(frozen=True)
class MonteCarloReport:
    fdr_hat: float
    tdr_hat: float
    fdr_se: float
    tdr_se: float
    replicates: int
    fdp: np.ndarray | None = None
    tdp: np.ndarray | None = None


def adadetect_procedure(scorer, alpha, k=None, ell=None, variant="plain",
                        storey_K=None, storey_lambda=None, quantile_k0=None,
                        cv_grid=None, s=None):
    """Procedure factory for :func:`monte_carlo`.

    The returned callable maps (GeneratedData, seed) to the rejected test
    indices; ``k``/``ell`` follow :meth:`SplitDataset.from_samples` (both
    None means ell = m).
    """

    def run(data, seed):
        split = SplitDataset.from_samples(data.nulls, data.test, k=k, ell=ell)
        if variant == "plain":
            rep = run_adadetect(split, scorer, alpha, seed=seed)
        elif variant == "storey":
            rep = run_storey_adadetect(split, scorer, alpha, K=storey_K,
                                       lam=storey_lambda, seed=seed)
        elif variant == "quantile":
            rep = run_quantile_adadetect(split, scorer, alpha, k0=quantile_k0,
                                         seed=seed)
        elif variant == "cv":
            rep = run_adadetect_cv(split, cv_grid, alpha, s=s, seed=seed)
        else:
            raise InvalidInputError(f"unknown variant {variant!r}")
        return rep.rejections.indices

    return run


def marginal_storey_bh_procedure(mu, alpha, lam):
    """Baseline: gaussian upper-tail p-values of mu.Z, Storey-adaptive step-up."""
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    mu_norm = float(np.sqrt(mu @ mu))

    def run(data, seed):
        scores = data.test @ mu
        return marginal_storey_bh(scores, mu_norm, alpha, lam).indices

    return run


def _replicate_rates(cfg, procedure, seed, r):
    data = gen_dataset(cfg, seed=derive_seed(seed, "replicate", r))
    rejected = np.asarray(procedure(data, derive_seed(seed, "procedure", r)),
                          dtype=np.intp)
    m1 = int(data.is_novelty.sum())
    false = int((~data.is_novelty[rejected]).sum())
    fdp = false / max(1, rejected.size)
    tdp = (rejected.size - false) / max(1, m1)
    return fdp, tdp


def monte_carlo(cfg, procedure, replicates, seed=0, workers=1,
                keep_replicates=False):
    """Estimate FDR/TDR of a procedure over independent replicates.

    Per-replicate seeds derive injectively from ``seed`` and the replicate
    index, so results are identical for any ``workers`` value.  Standard
    errors are sample-SD / sqrt(R).
    """
    R = check_int_range(replicates, "replicates", 1)
    if workers == 1:
        rates = [_replicate_rates(cfg, procedure, seed, r) for r in range(R)]
    else:
        rates = Parallel(n_jobs=workers)(
            delayed(_replicate_rates)(cfg, procedure, seed, r) for r in range(R)
        )
    fdp = np.array([x[0] for x in rates])
    tdp = np.array([x[1] for x in rates])
    fdr_se = float(fdp.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0
    tdr_se = float(tdp.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0
    return MonteCarloReport(
        fdr_hat=float(fdp.mean()),
        tdr_hat=float(tdp.mean()),
        fdr_se=fdr_se,
        tdr_se=tdr_se,
        replicates=R,
        fdp=fdp if keep_replicates else None,
        tdp=tdp if keep_replicates else None,
    )


def marginal_storey_bh(test_scores, mu_norm, alpha, lam):
    """Storey-adaptive step-up on marginal gaussian p-values Phi_bar(s/|mu|)."""
    scores = np.asarray(test_scores, dtype=np.float64).reshape(-1)
    if not mu_norm > 0:
        raise InvalidInputError(f"mu_norm must be positive, got {mu_norm}")
    alpha = check_level(alpha)
    pvalues = norm.sf(scores / mu_norm)
    result = adaptive_bh(pvalues, alpha, pi0_method="storey", storey_lambda=lam)
    return result.rejections


# -- least-favorable p-value law and the adaptive-level bound ---------------


def _draw_other_nulls(rng, n_rows, ell, count):
    """Draw ``count`` coordinates per row from the discrete law F^U.

    Conditionally on the descending order statistics U_(1) > ... > U_(ell+1)
    of ell+1 fresh uniforms, each coordinate takes the value j/(ell+1) with
    cumulative probability 1 - U_(j+1) (and 1 at j = ell+1); sampling is by
    inverse transform on the grid.
    """
    u_desc = np.sort(rng.random(size=(n_rows, ell + 1)), axis=1)[:, ::-1]
    cdf = np.empty((n_rows, ell + 1))
    cdf[:, :ell] = 1.0 - u_desc[:, 1:]
    cdf[:, ell] = 1.0
    v = rng.random(size=(n_rows, count))
    idx = (cdf[:, None, :] < v[:, :, None]).sum(axis=2)
    return (idx + 1) / (ell + 1.0)


def sample_least_favorable(m, ell, h0_indices, i, seed=0):
    """One draw of the least-favorable p-value vector anchored at index ``i``.

    Coordinates outside ``h0_indices`` are 0, coordinate ``i`` is exactly
    1/(ell+1), and the remaining null coordinates are conditionally iid on
    the grid {1/(ell+1), ..., 1}.  Indices are 0-based.
    """
    m = check_int_range(m, "m", 1)
    ell = check_int_range(ell, "ell", 1)
    h0 = np.unique(np.asarray(h0_indices, dtype=np.intp))
    if h0.size and (h0.min() < 0 or h0.max() >= m):
        raise InvalidInputError("h0_indices out of range")
    i = int(i)
    if i not in h0:
        raise InvalidInputError(f"index {i} is not a null index")
    rng = derive_rng(seed, "least-favorable")
    p = np.zeros(m)
    p[i] = 1.0 / (ell + 1)
    others = h0[h0 != i]
    if others.size:
        p[others] = _draw_other_nulls(rng, 1, ell, others.size)[0]
    return p


@dataclass(frozen=True)
class BoundEstimate:
    estimate: float
    se: float
    m: int
    ell: int
    m0: int
    estimator: str
    param: int
    replicates: int

    @property
    def upper(self):
        return self.estimate + 3.0 * self.se


def verify_adaptive_bound(m, ell, m0, estimator, param, replicates, seed=0):
    """Monte-Carlo estimate of sum over null i of E[1/G(p')], p' least favorable.

    ``G`` is m times the null-proportion estimator: for 'storey',
    (1 + #{p_j >= K/(ell+1)}) / (1 - K/(ell+1)) with K in {2..ell}; for
    'quantile', (m - k0 + 1) / (1 - p_(k0)) with k0 in {1..m}.  For those
    admissible parameters the true sum is at most 1, which is what makes the
    adaptive procedures valid at their nominal level.
    """
    m = check_int_range(m, "m", 1)
    ell = check_int_range(ell, "ell", 1)
    m0 = check_int_range(m0, "m0", 0, m)
    R = check_int_range(replicates, "replicates", 2)
    if estimator == "storey":
        if ell < 2:
            raise InvalidInputError("storey bound needs ell >= 2")
        K = check_int_range(param, "K", 2, ell)
        lam = K / (ell + 1.0)
    elif estimator == "quantile":
        k0 = check_int_range(param, "k0", 1, m)
    else:
        raise InvalidInputError(f"unknown estimator {estimator!r}")

    if m0 == 0:
        return BoundEstimate(0.0, 0.0, m, ell, 0, estimator, int(param), R)

    rng = derive_rng(seed, "adaptive-bound", estimator, int(param), m, ell, m0)
    total = np.zeros(R)
    for _ in range(m0):
        # one independent draw per null index; both estimators are
        # label-symmetric, so the canonical coordinate layout suffices
        p = np.zeros((R, m))
        p[:, 0] = 1.0 / (ell + 1)
        if m0 > 1:
            p[:, 1:m0] = _draw_other_nulls(rng, R, ell, m0 - 1)
        if estimator == "storey":
            count = (p >= lam).sum(axis=1)
            g = (1.0 + count) / (1.0 - lam)
        else:
            p_k0 = np.partition(p, k0 - 1, axis=1)[:, k0 - 1]
            with np.errstate(divide="ignore"):
                g = np.where(p_k0 < 1.0, (m - k0 + 1) / (1.0 - p_k0), np.inf)
        total += 1.0 / g
    estimate = float(total.mean())
    se = float(total.std(ddof=1) / np.sqrt(R))
    return BoundEstimate(estimate, se, m, ell, m0, estimator, int(param), R)
