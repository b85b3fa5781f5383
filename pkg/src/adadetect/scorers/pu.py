"""Positive-unlabeled classification scorers.

The first null split plays the positive class (label -1) and the mixed
sample the unlabeled class (label +1); the fitted discriminant, read as the
predicted probability of the unlabeled class (or the signed margin for the
hinge learner), is the score.  The unlabeled-class loss terms carry weight
``lam``.

Training must be invariant to permutations of the mixed sample, so every
learner runs full-batch deterministic optimization on canonically ordered
data, and any randomness (network init, bootstrap draws) comes from a
stream keyed by an order-invariant hash of the training data.  Plain SGD
with shuffling would break this.
"""

import warnings

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from .._rng import derive_rng, multiset_hash
from ..exceptions import InvalidInputError
from ..validation import check_int_range
from .base import BaseScorer

__all__ = ["PUClassifierScorer"]

_LEARNERS = ("logistic", "mlp", "tree-ensemble", "linear-hinge")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class PUClassifierScorer(BaseScorer):
    """Scorer backed by a PU classifier.

    Parameters
    ----------
    learner : 'logistic', 'mlp', 'tree-ensemble' or 'linear-hinge'
    lam : relative weight of unlabeled-sample loss terms (default 1).
    l2 : ridge penalty on the weights of the gradient-descent learners.
    max_iter, tol : full-batch gradient descent budget and gradient-norm stop.
    learning_rate : step size; None picks a curvature-based default for the
        logistic/hinge learners and 0.1 for the mlp.
    hidden_units : width of the single ReLU hidden layer (mlp learner).
    n_trees, max_depth : bagged-tree ensemble shape (tree-ensemble learner).

    Degenerate training sets (no positives, or all points identical) yield a
    constant score of 0.5 with ``degenerate_ = True`` and a warning, never an
    error.
    """

    scorer_name = "pu-classifier"

    def __init__(self, learner="logistic", lam=1.0, l2=1e-4, max_iter=2000,
                 tol=1e-6, learning_rate=None, hidden_units=100, n_trees=100,
                 max_depth=10, random_state=None):
        self.learner = learner
        self.lam = lam
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.learning_rate = learning_rate
        self.hidden_units = hidden_units
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.random_state = random_state

    def fit(self, first_null, mixed):
        if self.learner not in _LEARNERS:
            raise InvalidInputError(
                f"unknown learner {self.learner!r}; expected one of {_LEARNERS}"
            )
        if float(self.lam) <= 0:
            raise InvalidInputError(f"lam must be positive, got {self.lam}")
        pos, unl = self._prepare_fit_inputs(first_null, mixed)
        self.degenerate_ = False
        train = np.vstack([pos, unl]) if pos.size else unl
        if pos.shape[0] == 0 or np.all(train == train[0]):
            reason = ("no positive examples" if pos.shape[0] == 0
                      else "all training points identical")
            warnings.warn(f"PU training degenerate ({reason}); "
                          "falling back to a constant score")
            self.degenerate_ = True
            return self
        seed = 0 if self.random_state is None else self.random_state
        rng = derive_rng(seed, "pu-fit", multiset_hash(pos), multiset_hash(unl))
        if self.learner == "tree-ensemble":
            self._fit_trees(pos, unl, rng)
        else:
            self._fit_gd(pos, unl, rng)
        return self

    def score_samples(self, X):
        X = self._check_eval_input(X)
        if self.degenerate_:
            return np.full(X.shape[0], 0.5)
        if self.learner == "tree-ensemble":
            votes = np.zeros(X.shape[0])
            for tree in self._trees:
                votes += tree.predict(X)
            return (votes + 1.0) / (len(self._trees) + 2.0)
        Z = (X - self._center) / self._scale
        if self.learner == "mlp":
            hidden = np.maximum(Z @ self._W1 + self._b1, 0.0)
            return _sigmoid(hidden @ self._w2 + self._b2)
        margin = Z @ self._w + self._b
        if self.learner == "linear-hinge":
            return margin
        return _sigmoid(margin)

    # -- gradient-descent learners -----------------------------------------

    def _fit_gd(self, pos, unl, rng):
        lam = float(self.lam)
        l2 = float(self.l2)
        max_iter = check_int_range(self.max_iter, "max_iter", 1)
        X = np.vstack([pos, unl])
        self._center = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        self._scale = scale
        Z = (X - self._center) / self._scale
        y = np.concatenate([np.zeros(len(pos)), np.ones(len(unl))])
        sw = np.concatenate([np.ones(len(pos)), np.full(len(unl), lam)])
        sw = sw / sw.sum()
        if self.learner == "logistic":
            self._fit_logistic(Z, y, sw, l2, max_iter)
        elif self.learner == "linear-hinge":
            self._fit_hinge(Z, y, sw, l2, max_iter)
        else:
            self._fit_mlp(Z, y, sw, l2, max_iter, rng)

    def _fit_logistic(self, Z, y, sw, l2, max_iter):
        n, d = Z.shape
        w = np.zeros(d)
        b = 0.0
        # smoothness bound of the weighted mean cross-entropy
        lips = 0.25 * float(sw @ (Z ** 2).sum(axis=1) + 1.0) + l2
        step = self.learning_rate if self.learning_rate is not None else 1.0 / lips
        tol2 = float(self.tol) ** 2
        for _ in range(max_iter):
            resid = sw * (_sigmoid(Z @ w + b) - y)
            grad_w = Z.T @ resid + l2 * w
            grad_b = resid.sum()
            if (grad_w @ grad_w) + grad_b ** 2 < tol2:
                break
            w -= step * grad_w
            b -= step * grad_b
        self._w, self._b = w, b

    def _fit_hinge(self, Z, y, sw, l2, max_iter):
        n, d = Z.shape
        a = np.where(y > 0, 1.0, -1.0)
        w = np.zeros(d)
        b = 0.0
        base = self.learning_rate
        if base is None:
            base = 1.0 / (0.5 * float(sw @ (Z ** 2).sum(axis=1) + 1.0) + l2)
        tol2 = float(self.tol) ** 2
        for it in range(max_iter):
            margin = a * (Z @ w + b)
            active = sw * np.where(margin < 1.0, -0.5 * a, 0.0)
            grad_w = Z.T @ active + l2 * w
            grad_b = active.sum()
            if (grad_w @ grad_w) + grad_b ** 2 < tol2:
                break
            step = base / np.sqrt(it + 1.0)
            w -= step * grad_w
            b -= step * grad_b
        self._w, self._b = w, b

    def _fit_mlp(self, Z, y, sw, l2, max_iter, rng):
        n, d = Z.shape
        h = check_int_range(self.hidden_units, "hidden_units", 1)
        W1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h))
        b1 = np.zeros(h)
        w2 = rng.normal(0.0, np.sqrt(1.0 / h), size=h)
        b2 = 0.0
        step = 0.1 if self.learning_rate is None else float(self.learning_rate)
        tol2 = float(self.tol) ** 2
        for _ in range(max_iter):
            hidden = np.maximum(Z @ W1 + b1, 0.0)
            resid = sw * (_sigmoid(hidden @ w2 + b2) - y)
            grad_w2 = hidden.T @ resid + l2 * w2
            grad_b2 = resid.sum()
            back = np.outer(resid, w2) * (hidden > 0)
            grad_W1 = Z.T @ back + l2 * W1
            grad_b1 = back.sum(axis=0)
            gnorm2 = ((grad_w2 @ grad_w2) + grad_b2 ** 2
                      + (grad_W1 ** 2).sum() + (grad_b1 @ grad_b1))
            if gnorm2 < tol2:
                break
            W1 -= step * grad_W1
            b1 -= step * grad_b1
            w2 -= step * grad_w2
            b2 -= step * grad_b2
        self._W1, self._b1, self._w2, self._b2 = W1, b1, w2, b2

    # -- bagged trees --------------------------------------------------------

    def _fit_trees(self, pos, unl, rng):
        n_trees = check_int_range(self.n_trees, "n_trees", 1)
        lam = float(self.lam)
        X = np.vstack([pos, unl])
        y = np.concatenate([np.zeros(len(pos)), np.ones(len(unl))])
        sw = np.concatenate([np.ones(len(pos)), np.full(len(unl), lam)])
        n_pos, n_unl = len(pos), len(unl)
        trees = []
        for _ in range(n_trees):
            # stratified bootstrap keeps both classes in every resample
            take = np.concatenate([
                rng.integers(0, n_pos, size=n_pos),
                n_pos + rng.integers(0, n_unl, size=n_unl),
            ])
            tree = DecisionTreeClassifier(
                max_depth=self.max_depth,
                random_state=int(rng.integers(0, 2 ** 31 - 1)),
            )
            tree.fit(X[take], y[take], sample_weight=sw[take])
            trees.append(tree)
        self._trees = trees
