"""Multivariate Bernoulli logistic regression.

Every natural parameter of a k-node multivariate Bernoulli is modeled as
a linear function of p covariates through the canonical link:

    f[tau](x) = c0[tau] + c1[tau] x_1 + ... + cp[tau] x_p,

one coefficient vector of length p+1 per nonempty subset tau, i.e.
(p+1)(2**k - 1) free parameters.  With k = 1 this is exactly logistic
regression.  The negative log likelihood is convex; fitting is damped
Newton with step halving on the exact gradient and Hessian, which for the
canonical link are sums over samples of moment mismatches and covariance
outer products of the interaction statistics.

Flattened gradient/Hessian layout: nonempty subsets in increasing mask
order, and within each subset the coefficients j = 0..p (intercept
first), so coordinate (tau, j) sits at (mask - 1) * (p + 1) + j.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import InitVar, dataclass

import numpy as np
from scipy.special import logsumexp

from .distribution import GeneralParams, NaturalParams, natural_to_general
from .errors import DimensionError, DivergenceError, SeparationError
from .lattice import check_dimension, subset_sum, superset_sum

SEPARATION_BOUND = 30.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """n observations of a binary outcome vector plus real covariates.

    outcomes is an (n, k) matrix with entries in {0, 1}; covariates is an
    (n, p) matrix of finite reals (p may be zero for intercept-only
    models).  Row order is preserved and meaningful only for
    reproducibility: the likelihood is permutation invariant.
    """

    outcomes: np.ndarray
    covariates: np.ndarray

    def __post_init__(self) -> None:
        y = np.ascontiguousarray(self.outcomes)
        x = np.ascontiguousarray(self.covariates, dtype=np.float64)
        if y.ndim != 2 or x.ndim != 2:
            raise DimensionError("outcomes and covariates must be 2-d arrays")
        if y.shape[0] != x.shape[0]:
            raise DimensionError(
                f"outcomes have {y.shape[0]} rows but covariates have {x.shape[0]}"
            )
        if y.shape[0] < 1:
            raise DimensionError("at least one observation is required")
        if y.shape[1] < 1:
            raise DimensionError("at least one outcome column is required")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("outcome entries must be 0 or 1")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        y = y.astype(np.uint8)
        masks = (y.astype(np.int64) @ (1 << np.arange(y.shape[1], dtype=np.int64)))
        object.__setattr__(self, "outcomes", _freeze(y))
        object.__setattr__(self, "covariates", _freeze(x))
        object.__setattr__(self, "_masks", _freeze(masks))

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def k(self) -> int:
        return self.outcomes.shape[1]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def masks(self) -> np.ndarray:
        """Outcome support masks, one int per row."""
        return self._masks


@dataclass(frozen=True)
class MvbGlmModel:
    """Coefficients of a multivariate Bernoulli logistic model.

    coef has shape (2**k, p+1); row `mask` holds the coefficient vector of
    subset `mask` with the intercept in column 0, and row 0 (the empty
    set) is pinned at zero.  converged/iterations/final_nll describe the
    fit that produced the model and are informational only.
    """

    k: int
    p: int
    coef: np.ndarray
    converged: bool = False
    iterations: int = 0
    final_nll: float = math.nan
    force_large: InitVar[bool] = False

    def __post_init__(self, force_large: bool) -> None:
        k = check_dimension(self.k, force_large=force_large)
        object.__setattr__(self, "k", k)
        if self.p < 0:
            raise DimensionError("covariate dimension must be nonnegative")
        c = np.ascontiguousarray(self.coef, dtype=np.float64)
        if c.shape != (1 << k, self.p + 1):
            raise DimensionError(
                f"expected coef shape {(1 << k, self.p + 1)}, got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if np.any(c[0] != 0.0):
            raise ValueError("the empty-set coefficient row must be zero")
        object.__setattr__(self, "coef", _freeze(c))

    @property
    def param_count(self) -> int:
        return (self.p + 1) * ((1 << self.k) - 1)

    def nonzero_count(self) -> int:
        """Number of exactly nonzero coefficients, intercepts included."""
        return int(np.count_nonzero(self.coef[1:]))


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the Newton solver."""

    gtol: float = 1e-8
    max_iter: int = 100
    standardize: bool = False
    force_large: bool = False


def _design(data: Dataset) -> np.ndarray:
    return np.hstack([np.ones((data.n, 1)), data.covariates])


def _sample_tables(coef: np.ndarray, x1: np.ndarray, masks: np.ndarray):
    """Per-sample S tables, log-partitions and the summed NLL."""
    fmat = x1 @ coef.T
    s = subset_sum(fmat)
    b = logsumexp(s, axis=1)
    nll = float(b.sum() - s[np.arange(len(masks)), masks].sum())
    return s, b, nll


def _expectations(s: np.ndarray, b: np.ndarray) -> np.ndarray:
    probs = np.exp(s - b[:, None])
    return superset_sum(probs)


def _indicators(masks: np.ndarray, n_subsets: int) -> np.ndarray:
    arr = np.arange(n_subsets, dtype=np.int64)
    return ((arr[None, :] & masks[:, None]) == arr[None, :]).astype(np.float64)


def _nll_value(coef: np.ndarray, x1: np.ndarray, masks: np.ndarray) -> float:
    return _sample_tables(coef, x1, masks)[2]


def _gradient_matrix(coef: np.ndarray, x1: np.ndarray, masks: np.ndarray) -> np.ndarray:
    s, b, _ = _sample_tables(coef, x1, masks)
    e = _expectations(s, b)
    bmat = _indicators(masks, coef.shape[0])
    return (e - bmat).T @ x1


def _hessian_matrix(coef: np.ndarray, x1: np.ndarray, masks: np.ndarray) -> np.ndarray:
    s, b, _ = _sample_tables(coef, x1, masks)
    e = _expectations(s, b)
    t = coef.shape[0]
    union = np.bitwise_or.outer(np.arange(t), np.arange(t))
    cov = e[:, union] - e[:, :, None] * e[:, None, :]
    h4 = np.einsum("ats,aj,am->tjsm", cov, x1, x1, optimize=True)
    d = (t - 1) * x1.shape[1]
    h = h4[1:, :, 1:, :].reshape(d, d)
    return (h + h.T) / 2.0


def _check_model_data(model: MvbGlmModel, data: Dataset) -> None:
    if model.k != data.k or model.p != data.p:
        raise DimensionError(
            f"model is (k={model.k}, p={model.p}) but data is (k={data.k}, p={data.p})"
        )


def linear_predictor(model: MvbGlmModel, x) -> NaturalParams:
    """Natural parameters at covariate vector x: f[tau] = c[tau] . (1, x)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.p,):
        raise DimensionError(f"expected {model.p} covariates, got shape {x.shape}")
    f = model.coef @ np.concatenate([[1.0], x])
    f[0] = 0.0
    return NaturalParams(model.k, f, force_large=True)


def negative_log_likelihood(model: MvbGlmModel, data: Dataset) -> float:
    """Sum over samples of b(f(x_i)) - S[support(y_i)](x_i)."""
    _check_model_data(model, data)
    return _nll_value(model.coef, _design(data), data.masks)


def nll_gradient(model: MvbGlmModel, data: Dataset) -> np.ndarray:
    """Exact gradient of the NLL in the flattened (tau, j) layout.

    Coordinate (tau, j) accumulates (E[B[tau]] at x_i - B[tau](y_i)) x_ij
    over samples, with x_i0 = 1 for the intercept.
    """
    _check_model_data(model, data)
    g = _gradient_matrix(model.coef, _design(data), data.masks)
    return g[1:].reshape(-1)


def nll_hessian(model: MvbGlmModel, data: Dataset) -> np.ndarray:
    """Exact Hessian of the NLL: per-sample interaction covariances scaled
    by covariate outer products.  Positive semi-definite by construction."""
    _check_model_data(model, data)
    return _hessian_matrix(model.coef, _design(data), data.masks)


def predict(model: MvbGlmModel, x) -> GeneralParams:
    """Outcome probabilities at covariate vector x."""
    return natural_to_general(linear_predictor(model, x))


def _solve_newton_step(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Newton direction -H^{-1} g via a linear solve, ridge-damping the
    Hessian just enough to make the system solvable and descending."""
    eye = np.eye(h.shape[0])
    for eps in (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2):
        try:
            step = np.linalg.solve(h + eps * eye, -g)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(step)) and float(g @ step) < 0.0:
            return step
    raise DivergenceError("divergence")


def _standardize(data: Dataset):
    x = data.covariates
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return Dataset(data.outcomes, (x - mean) / sd), mean, sd


def _destandardize_coef(coef: np.ndarray, mean: np.ndarray, sd: np.ndarray) -> np.ndarray:
    out = coef.copy()
    out[:, 1:] = coef[:, 1:] / sd[None, :]
    out[:, 0] = coef[:, 0] - out[:, 1:] @ mean
    out[0, :] = 0.0
    return out


def fit(data: Dataset, options: FitOptions | None = None) -> MvbGlmModel:
    """Maximum likelihood fit by safeguarded Newton iteration.

    Starts from zero coefficients (the NLL is convex so the start only
    affects iteration count), solves the Newton system without forming an
    inverse, halves the step until the NLL does not increase, and stops
    when the gradient max-norm drops below gtol or max_iter is reached.
    Raises SeparationError when coefficients run past the magnitude bound,
    the classic footprint of separable data.
    """
    opts = options or FitOptions()
    check_dimension(data.k, force_large=opts.force_large)
    if opts.standardize:
        work, mean, sd = _standardize(data)
    else:
        work, mean, sd = data, None, None

    t = 1 << work.k
    d = (t - 1) * (work.p + 1)
    if d > work.n:
        warnings.warn(
            f"fitting {d} parameters to {work.n} observations; "
            "the MLE may be ill-determined",
            stacklevel=2,
        )

    x1 = _design(work)
    masks = work.masks
    coef = np.zeros((t, work.p + 1))
    nll = _nll_value(coef, x1, masks)
    if not math.isfinite(nll):
        raise DivergenceError("divergence")

    converged = False
    iterations = 0
    for _ in range(opts.max_iter):
        grad = _gradient_matrix(coef, x1, masks)[1:].reshape(-1)
        if float(np.abs(grad).max()) < opts.gtol:
            converged = True
            break
        iterations += 1
        hess = _hessian_matrix(coef, x1, masks)
        step = _solve_newton_step(hess, grad)
        direction = np.vstack([np.zeros((1, work.p + 1)), step.reshape(t - 1, work.p + 1)])

        accepted = False
        scale = 1.0
        while scale >= 2.0**-60:
            cand = coef + scale * direction
            cand_nll = _nll_value(cand, x1, masks)
            if math.isfinite(cand_nll) and cand_nll <= nll:
                coef, nll = cand, cand_nll
                accepted = True
                break
            scale /= 2.0
        if not accepted:
            break
        if float(np.abs(coef).max()) > SEPARATION_BOUND:
            raise SeparationError("complete separation suspected")
    else:
        grad = _gradient_matrix(coef, x1, masks)[1:].reshape(-1)
        converged = bool(np.abs(grad).max() < opts.gtol)

    if opts.standardize:
        coef = _destandardize_coef(coef, mean, sd)
        nll = _nll_value(coef, _design(data), data.masks)
    return MvbGlmModel(
        data.k,
        data.p,
        coef,
        converged=converged,
        iterations=iterations,
        final_nll=nll,
        force_large=True,
    )
