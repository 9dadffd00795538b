"""L1-penalized multivariate Bernoulli logistic fitting and structure readout.

The penalized objective is the per-sample negative log likelihood plus a
weighted L1 penalty on the covariate coefficients,

    (1/n) NLL(c) + sum over tau of lambda[tau] * sum_{j>=1} |c_j[tau]|,

leaving intercepts unpenalized.  The solver is proximal gradient descent
(ISTA) with a backtracking line search: each accepted step soft-thresholds
the penalized coordinates, which is what produces exact zeros, and the
majorization test guarantees the objective never increases.  A returned
solution certifies itself through the KKT conditions: penalized zero
coordinates need |grad| <= lambda + ktol and active coordinates need
grad = -lambda * sign(c) within ktol, where grad is the smooth part's
gradient.

Scalar tuning runs a warm-started path over a log-spaced lambda grid from
the KKT kill threshold lambda_max downward, scoring each fit with AIC and
BIC where the degrees of freedom are approximated by the nonzero
coefficient count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DivergenceError
from .glm import (
    Dataset,
    FitOptions,
    MvbGlmModel,
    _design,
    _gradient_matrix,
    _nll_value,
    fit as fit_glm,
    linear_predictor,
)
from .lattice import SubsetIndex, check_dimension, mask_orders


@dataclass(frozen=True)
class PenaltySpec:
    """Per-subset L1 weights lambda[tau] >= 0 on the covariate coefficients."""

    k: int
    lam: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", int(self.k))
        lam = np.ascontiguousarray(self.lam, dtype=np.float64)
        if lam.shape != (1 << self.k,):
            raise DimensionError(
                f"expected {1 << self.k} penalty weights, got shape {lam.shape}"
            )
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("penalty weights must be finite and nonnegative")
        lam = lam.copy()
        lam[0] = 0.0
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)

    @classmethod
    def scalar(cls, value: float, k: int) -> "PenaltySpec":
        """One weight broadcast to every nonempty subset."""
        lam = np.full(1 << k, float(value))
        lam[0] = 0.0
        return cls(k, lam)

    @classmethod
    def from_map(cls, mapping: dict[SubsetIndex, float], k: int) -> "PenaltySpec":
        lam = np.zeros(1 << k)
        for tau, value in mapping.items():
            if tau.k != k:
                raise DimensionError(f"subset dimension {tau.k} does not match k={k}")
            if tau.mask == 0:
                raise DimensionError("the empty subset carries no penalty weight")
            lam[tau.mask] = float(value)
        return cls(k, lam)


@dataclass(frozen=True)
class L1Options:
    """Knobs for the proximal gradient solver."""

    ktol: float = 1e-6
    max_iter: int = 100_000
    init_step: float = 1.0
    backtrack: float = 0.5
    step_growth: float = 2.0
    force_large: bool = False


@dataclass(frozen=True)
class KktReport:
    """Stationarity certificate of an L1 solution.

    All three statistics must be <= ktol for the solution to be optimal:
    excess of |grad| over lambda on zero coordinates, |grad + lambda *
    sign(c)| on active coordinates, and |grad| on intercepts (their lambda
    is zero, so they fold into the same two rules).
    """

    ktol: float
    max_excess_zero: float
    max_residual_active: float
    satisfied: bool


@dataclass(frozen=True)
class PathScore:
    lam: float
    nll: float
    nonzero_count: int
    aic: float
    bic: float


@dataclass(frozen=True)
class PathResult:
    """A descending lambda grid with the fitted model and scores per point."""

    grid: np.ndarray
    models: list[MvbGlmModel]
    scores: list[PathScore]

    def best_index(self, criterion: str = "bic") -> int:
        if criterion not in ("aic", "bic"):
            raise ValueError("criterion must be 'aic' or 'bic'")
        values = [getattr(s, criterion) for s in self.scores]
        return int(np.argmin(values))


@dataclass(frozen=True)
class GraphStructure:
    """Active main effects, edges, and higher-order cliques of a model."""

    k: int
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    cliques: tuple[tuple[int, ...], ...]


def _threshold_matrix(pen: PenaltySpec, p: int) -> np.ndarray:
    """Per-coordinate penalty weights: lambda[tau] on covariate columns,
    zero on intercepts and on the empty-set row."""
    thr = np.zeros(((1 << pen.k), p + 1))
    thr[:, 1:] = pen.lam[:, None]
    thr[0, :] = 0.0
    return thr


def penalized_objective(model: MvbGlmModel, data: Dataset, pen: PenaltySpec) -> float:
    """(1/n) NLL plus the weighted L1 penalty on covariate coefficients."""
    if pen.k != model.k:
        raise DimensionError(f"penalty dimension {pen.k} does not match k={model.k}")
    nll = _nll_value(model.coef, _design(data), data.masks)
    penalty = float(np.abs(model.coef[:, 1:] * pen.lam[:, None]).sum())
    return nll / data.n + penalty


def _kkt_stats(grad: np.ndarray, coef: np.ndarray, thr: np.ndarray):
    zero = coef == 0.0
    excess_zero = np.maximum(np.abs(grad) - thr, 0.0)
    residual_active = np.abs(grad + thr * np.sign(coef))
    max_zero = float(excess_zero[zero].max()) if zero.any() else 0.0
    max_active = float(residual_active[~zero].max()) if (~zero).any() else 0.0
    return max_zero, max_active


def kkt_check(
    model: MvbGlmModel, data: Dataset, pen: PenaltySpec, ktol: float = 1e-6
) -> KktReport:
    """Evaluate the KKT conditions of the penalized objective at a model."""
    thr = _threshold_matrix(pen, model.p)
    grad = _gradient_matrix(model.coef, _design(data), data.masks) / data.n
    max_zero, max_active = _kkt_stats(grad[1:], model.coef[1:], thr[1:])
    return KktReport(
        ktol=ktol,
        max_excess_zero=max_zero,
        max_residual_active=max_active,
        satisfied=max_zero <= ktol and max_active <= ktol,
    )


def _soft_threshold(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fit_l1(
    data: Dataset,
    pen: PenaltySpec,
    options: L1Options | None = None,
    *,
    init: np.ndarray | None = None,
    trace: list | None = None,
) -> MvbGlmModel:
    """Minimize the penalized objective by ISTA with backtracking.

    Stops when the KKT certificate holds at ktol.  Soft-thresholding
    writes exact zeros, so the returned support needs no epsilon.  `init`
    warm-starts the coefficients; `trace`, when given a list, receives the
    objective value after every accepted step.
    """
    opts = options or L1Options()
    check_dimension(data.k, force_large=opts.force_large)
    if pen.k != data.k:
        raise DimensionError(f"penalty dimension {pen.k} does not match k={data.k}")

    t_subsets = 1 << data.k
    x1 = _design(data)
    masks = data.masks
    n = data.n
    thr = _threshold_matrix(pen, data.p)

    if init is None:
        coef = np.zeros((t_subsets, data.p + 1))
    else:
        coef = np.array(init, dtype=np.float64)
        if coef.shape != (t_subsets, data.p + 1):
            raise DimensionError("warm-start coefficients have the wrong shape")
        coef[0, :] = 0.0

    def smooth(c: np.ndarray) -> float:
        return _nll_value(c, x1, masks) / n

    def objective(c: np.ndarray, g_val: float) -> float:
        return g_val + float(np.abs(c * thr).sum())

    g_val = smooth(coef)
    if not math.isfinite(g_val):
        raise DivergenceError("divergence")
    step = opts.init_step
    converged = False
    iterations = 0

    for _ in range(opts.max_iter):
        grad = _gradient_matrix(coef, x1, masks) / n
        grad[0, :] = 0.0
        max_zero, max_active = _kkt_stats(grad[1:], coef[1:], thr[1:])
        if max_zero <= opts.ktol and max_active <= opts.ktol:
            converged = True
            break
        iterations += 1

        step = min(step * opts.step_growth, 1e8)
        while True:
            cand = _soft_threshold(coef - step * grad, step * thr)
            cand[0, :] = 0.0
            delta = cand - coef
            cand_g = smooth(cand)
            if not math.isfinite(cand_g):
                step *= opts.backtrack
                if step < 1e-18:
                    raise DivergenceError("divergence")
                continue
            quad = g_val + float((grad * delta).sum()) + float((delta * delta).sum()) / (
                2.0 * step
            )
            if cand_g <= quad + 1e-15:
                break
            step *= opts.backtrack
            if step < 1e-18:
                raise DivergenceError("divergence")
        coef, g_val = cand, cand_g
        if trace is not None:
            trace.append(objective(coef, g_val))

    nll = g_val * n
    return MvbGlmModel(
        data.k,
        data.p,
        coef,
        converged=converged,
        iterations=iterations,
        final_nll=nll,
        force_large=True,
    )


def _intercept_only_coef(data: Dataset, force_large: bool) -> np.ndarray:
    """Unpenalized intercept fit embedded into a (2**k, p+1) coefficient table."""
    base = Dataset(data.outcomes, np.zeros((data.n, 0)))
    m0 = fit_glm(base, FitOptions(force_large=force_large))
    coef = np.zeros((1 << data.k, data.p + 1))
    coef[:, 0] = m0.coef[:, 0]
    return coef


def lambda_max(data: Dataset, *, force_large: bool = False) -> float:
    """Smallest scalar penalty that keeps every covariate coefficient zero.

    By the KKT condition at the intercept-only optimum this is the
    max-norm of the smooth gradient over the penalized coordinates.
    """
    if data.p == 0:
        return 1.0
    coef = _intercept_only_coef(data, force_large)
    grad = _gradient_matrix(coef, _design(data), data.masks) / data.n
    value = float(np.abs(grad[1:, 1:]).max())
    return value if value > 0 else 1.0


def regularization_path(
    data: Dataset,
    grid_size: int = 50,
    options: L1Options | None = None,
    *,
    lambda_min_ratio: float = 1e-3,
) -> PathResult:
    """Warm-started scalar-lambda path with AIC/BIC scoring.

    Lays a log-spaced descending grid from lambda_max to
    lambda_max * lambda_min_ratio; each fit starts from the previous
    solution.  AIC = 2 NLL + 2 df and BIC = 2 NLL + log(n) df with df the
    nonzero coefficient count, intercepts included.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be at least 1")
    opts = options or L1Options()
    lam_hi = lambda_max(data, force_large=opts.force_large)
    if grid_size == 1:
        grid = np.array([lam_hi])
    else:
        grid = np.geomspace(lam_hi, lam_hi * lambda_min_ratio, grid_size)

    models: list[MvbGlmModel] = []
    scores: list[PathScore] = []
    init = _intercept_only_coef(data, opts.force_large)
    log_n = math.log(data.n)
    for lam in grid:
        model = fit_l1(data, PenaltySpec.scalar(float(lam), data.k), opts, init=init)
        init = model.coef
        df = model.nonzero_count()
        scores.append(
            PathScore(
                lam=float(lam),
                nll=model.final_nll,
                nonzero_count=df,
                aic=2.0 * model.final_nll + 2.0 * df,
                bic=2.0 * model.final_nll + log_n * df,
            )
        )
        models.append(model)
    return PathResult(grid=grid, models=models, scores=scores)


def extract_graph(
    model: MvbGlmModel, x=None, tol: float = 1e-8
) -> GraphStructure:
    """Read the graph structure off the natural parameters of a model.

    Evaluates f at covariate vector x (or at the intercepts when x is
    None) and keeps nodes with |f| > tol among singletons, edges among
    pairs, and cliques among subsets of order three or more.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    if x is None:
        f = model.coef[:, 0].copy()
        f[0] = 0.0
    else:
        f = linear_predictor(model, x).f
    orders = mask_orders(model.k)
    active = np.abs(f) > tol
    nodes = tuple(
        SubsetIndex(int(m), model.k).members()[0]
        for m in np.flatnonzero(active & (orders == 1))
    )
    edges = tuple(
        SubsetIndex(int(m), model.k).members()
        for m in np.flatnonzero(active & (orders == 2))
    )
    cliques = tuple(
        SubsetIndex(int(m), model.k).members()
        for m in np.flatnonzero(active & (orders >= 3))
    )
    return GraphStructure(model.k, nodes, edges, cliques)
