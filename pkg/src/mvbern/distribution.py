"""The multivariate Bernoulli distribution over k binary nodes.

Two equivalent parameterizations are supported:

* general parameters: the 2**k outcome probabilities p(y), stored in mask
  order (slot m = probability of the outcome whose support mask is m);
* natural parameters: the exponential-family coefficients f[tau], one per
  nonempty subset tau of {1..k}, with f[empty] pinned at 0.

The bridge between them runs through the subset-sum table
S[tau] = sum over tau0 subset of tau of f[tau0] and the log-partition
b(f) = log sum over all subsets of exp(S[tau]): the outcome with support
tau has probability exp(S[tau] - b).  Conversions, densities, moments,
marginals, conditionals, independence tests, the moment generating
function, and exact sampling are all computed by exact enumeration over
the 2**k outcomes, which is the point of a desk-scale model.

All objects are immutable after construction and all functions are pure;
sampling takes an explicit seed and never touches global state.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateDistributionError, DimensionError, NullEventError
from .lattice import (
    OutcomeVector,
    SubsetIndex,
    check_dimension,
    inverse_subset_sum,
    mask_orders,
    subset_sum,
    superset_sum,
)

NORMALIZATION_TOL = 1e-12
DEFAULT_INDEPENDENCE_TOL = 1e-8


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GeneralParams:
    """Outcome probabilities of a k-node binary vector, in mask order.

    probs[m] = P(Y = outcome with support mask m).  Entries must be
    nonnegative and sum to one within NORMALIZATION_TOL.  Zero entries are
    allowed; only the conversion to natural parameters requires strict
    positivity.
    """

    k: int
    probs: np.ndarray
    force_large: InitVar[bool] = False

    def __post_init__(self, force_large: bool) -> None:
        k = check_dimension(self.k, force_large=force_large)
        object.__setattr__(self, "k", k)
        p = np.ascontiguousarray(self.probs, dtype=np.float64)
        if p.shape != (1 << k,):
            raise DimensionError(
                f"expected {1 << k} probabilities for k={k}, got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("outcome probabilities must be finite")
        if np.any(p < 0.0):
            raise ValueError("outcome probabilities must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(
                f"outcome probabilities sum to {total!r}, not 1 within {NORMALIZATION_TOL}"
            )
        object.__setattr__(self, "probs", _freeze(p))

    def __getitem__(self, y: OutcomeVector) -> float:
        if y.k != self.k:
            raise DimensionError(f"dimension mismatch: k={y.k} vs k={self.k}")
        return float(self.probs[y.bits])


@dataclass(frozen=True)
class NaturalParams:
    """Natural parameters f[tau] of the log-linear representation.

    Stored as a dense table of length 2**k indexed by subset mask;
    f[0] (the empty set) is identically zero.
    """

    k: int
    f: np.ndarray
    force_large: InitVar[bool] = False

    def __post_init__(self, force_large: bool) -> None:
        k = check_dimension(self.k, force_large=force_large)
        object.__setattr__(self, "k", k)
        f = np.ascontiguousarray(self.f, dtype=np.float64)
        if f.shape != (1 << k,):
            raise DimensionError(
                f"expected {1 << k} natural parameters for k={k}, got shape {f.shape}"
            )
        if not np.all(np.isfinite(f)):
            raise ValueError("natural parameters must be finite")
        if f[0] != 0.0:
            raise ValueError("the empty-set natural parameter must be zero")
        object.__setattr__(self, "f", _freeze(f))

    def __getitem__(self, tau: SubsetIndex) -> float:
        if tau.k != self.k:
            raise DimensionError(f"dimension mismatch: k={tau.k} vs k={self.k}")
        return float(self.f[tau.mask])

    @classmethod
    def zeros(cls, k: int, *, force_large: bool = False) -> "NaturalParams":
        return cls(k, np.zeros(1 << k), force_large=force_large)


@dataclass(frozen=True)
class SFunctionTable:
    """Subset sums S[tau] of a natural parameter table; S[empty] = 0."""

    k: int
    s: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", int(self.k))
        s = np.ascontiguousarray(self.s, dtype=np.float64)
        if s.shape != (1 << self.k,):
            raise DimensionError(f"expected {1 << self.k} entries, got shape {s.shape}")
        if s[0] != 0.0:
            raise ValueError("S[empty] must be zero")
        object.__setattr__(self, "s", _freeze(s))

    def __getitem__(self, tau: SubsetIndex) -> float:
        if tau.k != self.k:
            raise DimensionError(f"dimension mismatch: k={tau.k} vs k={self.k}")
        return float(self.s[tau.mask])


@dataclass(frozen=True)
class MomentTable:
    """Mean and covariance of the interaction statistics B[tau](Y).

    mean[tau] = E[B[tau](Y)]; cov[tau1, tau2] = cov(B[tau1](Y), B[tau2](Y)).
    The empty set contributes the constant statistic 1, so mean[0] = 1 and
    row/column 0 of cov is zero.
    """

    k: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", int(self.k))
        n = 1 << self.k
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        cov = np.ascontiguousarray(self.cov, dtype=np.float64)
        if mean.shape != (n,) or cov.shape != (n, n):
            raise DimensionError("moment table shapes do not match the dimension")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "cov", _freeze(cov))


@dataclass(frozen=True)
class IndependenceReport:
    """Outcome of an independence test on natural parameters.

    violations holds (subset, f value) pairs sorted by |f| descending,
    ties broken by mask for determinism.
    """

    independent: bool
    violations: tuple[tuple[SubsetIndex, float], ...]
    tol: float


# --------------------------------------------------------------------------
# Parameter transformations
# --------------------------------------------------------------------------


def s_from_f(f: NaturalParams) -> SFunctionTable:
    """Subset-sum table S[tau] = sum over tau0 subset of tau of f[tau0]."""
    return SFunctionTable(f.k, subset_sum(f.f))


def log_partition(f: NaturalParams) -> float:
    """Normalizer b(f) = log sum over all 2**k subsets of exp(S[tau]).

    The empty set contributes exp(0) = 1.  Computed with a max-shifted
    log-sum-exp so large parameters cannot overflow.
    """
    return float(logsumexp(subset_sum(f.f)))


def natural_to_general(f: NaturalParams) -> GeneralParams:
    """Outcome probabilities exp(S[tau] - b(f)) for every support tau."""
    s = subset_sum(f.f)
    probs = np.exp(s - logsumexp(s))
    probs /= probs.sum()
    return GeneralParams(f.k, probs, force_large=True)


def general_to_natural(p: GeneralParams) -> NaturalParams:
    """Recover natural parameters from strictly positive outcome probabilities.

    Moebius inversion of log p over the subset lattice:
    f[tau] = sum over tau0 subset of tau of (-1)**(|tau| - |tau0|) log p(tau0),
    which equals the even/odd zero-count probability ratios in log space.
    Any zero probability leaves the log-ratios undefined.
    """
    if np.any(p.probs <= 0.0):
        raise DegenerateDistributionError(
            "degenerate distribution: natural parameters undefined"
        )
    f = inverse_subset_sum(np.log(p.probs))
    f[0] = 0.0
    return NaturalParams(p.k, f, force_large=True)


def log_density(f: NaturalParams, y: OutcomeVector) -> float:
    """log p(y) = S[support(y)] - b(f)."""
    if y.k != f.k:
        raise DimensionError(f"dimension mismatch: k={y.k} vs k={f.k}")
    s = subset_sum(f.f)
    return float(s[y.bits] - logsumexp(s))


# --------------------------------------------------------------------------
# Marginals and conditionals
# --------------------------------------------------------------------------


def _compress_masks(k: int, keep_mask: int) -> np.ndarray:
    """Map every k-dim outcome mask to its restriction on the kept coordinates."""
    positions = [j for j in range(k) if keep_mask >> j & 1]
    masks = np.arange(1 << k, dtype=np.int64)
    out = np.zeros_like(masks)
    for new_bit, pos in enumerate(positions):
        out |= ((masks >> pos) & 1) << new_bit
    return out


def marginal(p: GeneralParams, keep: SubsetIndex) -> GeneralParams:
    """Marginal distribution of the coordinates in `keep`.

    Sums the outcome probabilities over every configuration of the dropped
    coordinates; the result is itself a multivariate Bernoulli of
    dimension |keep|.
    """
    if keep.k != p.k:
        raise DimensionError(f"dimension mismatch: k={keep.k} vs k={p.k}")
    if keep.mask == 0:
        raise DimensionError("marginal requires a nonempty coordinate set")
    r = keep.order
    out = np.zeros(1 << r)
    np.add.at(out, _compress_masks(p.k, keep.mask), p.probs)
    return GeneralParams(r, out, force_large=True)


def conditional(
    p: GeneralParams,
    target: SubsetIndex,
    given: SubsetIndex,
    given_values: OutcomeVector,
) -> GeneralParams:
    """Distribution of the target coordinates given observed values.

    `given_values` has dimension |given| and is aligned with the ascending
    node order of `given`.  Coordinates outside target and given are
    marginalized out first; the restricted joint is then renormalized over
    the target configurations.
    """
    if target.k != p.k or given.k != p.k:
        raise DimensionError("target and given must share the distribution's dimension")
    if target.mask == 0 or given.mask == 0:
        raise DimensionError("target and given must be nonempty")
    if target.mask & given.mask:
        raise DimensionError("target and given must be disjoint")
    if given_values.k != given.order:
        raise DimensionError(
            f"given_values has dimension {given_values.k}, expected {given.order}"
        )

    union = SubsetIndex(target.mask | given.mask, p.k)
    joint = marginal(p, union)

    members = union.members()
    t_pos = [i for i, j in enumerate(members) if target.mask >> (j - 1) & 1]
    g_pos = [i for i, j in enumerate(members) if given.mask >> (j - 1) & 1]

    r = target.order
    out = np.zeros(1 << r)
    for t_bits in range(1 << r):
        m = 0
        for i, pos in enumerate(t_pos):
            m |= ((t_bits >> i) & 1) << pos
        for i, pos in enumerate(g_pos):
            m |= ((given_values.bits >> i) & 1) << pos
        out[t_bits] = joint.probs[m]
    denom = out.sum()
    if denom <= 0.0:
        raise NullEventError("conditioning on null event")
    return GeneralParams(r, out / denom, force_large=True)


# --------------------------------------------------------------------------
# Independence structure
# --------------------------------------------------------------------------


def _collect_violations(
    f: NaturalParams, candidate_masks: np.ndarray, tol: float
) -> IndependenceReport:
    vals = f.f[candidate_masks]
    bad = candidate_masks[np.abs(vals) > tol]
    order = sorted(bad.tolist(), key=lambda m: (-abs(float(f.f[m])), m))
    violations = tuple((SubsetIndex(m, f.k), float(f.f[m])) for m in order)
    return IndependenceReport(len(violations) == 0, violations, tol)


def independence_test_elementwise(
    f: NaturalParams, tol: float = DEFAULT_INDEPENDENCE_TOL
) -> IndependenceReport:
    """Test whether all k coordinates are mutually independent.

    Independence holds exactly when every interaction of order two or more
    vanishes, so the test flags each |f[tau]| > tol with |tau| >= 2.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    masks = np.flatnonzero(mask_orders(f.k) >= 2)
    return _collect_violations(f, masks, tol)


def independence_test_groups(
    f: NaturalParams,
    group_a: SubsetIndex,
    group_b: SubsetIndex,
    tol: float = DEFAULT_INDEPENDENCE_TOL,
) -> IndependenceReport:
    """Test independence of two disjoint blocks of coordinates.

    The blocks are independent exactly when every f[tau] with tau meeting
    both blocks vanishes; interactions inside a single block are free.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    if group_a.k != f.k or group_b.k != f.k:
        raise DimensionError("groups must share the distribution's dimension")
    if group_a.mask == 0 or group_b.mask == 0:
        raise DimensionError("groups must be nonempty")
    if group_a.mask & group_b.mask:
        raise DimensionError("groups must be disjoint")
    masks = np.arange(1 << f.k, dtype=np.int64)
    crossing = masks[(masks & group_a.mask) > 0]
    crossing = crossing[(crossing & group_b.mask) > 0]
    return _collect_violations(f, crossing, tol)


# --------------------------------------------------------------------------
# Moments, MGF, sampling
# --------------------------------------------------------------------------


def mgf(f: NaturalParams, mu) -> float:
    """Moment generating function E[exp(mu . Y)] evaluated at mu in R**k.

    Computed as sum over all subsets tau of exp(S[tau] - b(f)) times
    exp(sum of mu over tau); the empty set contributes exp(-b(f)), which
    makes mgf(f, 0) = 1.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (f.k,):
        raise DimensionError(f"expected {f.k} exponents, got shape {mu.shape}")
    s = subset_sum(f.f)
    masks = np.arange(1 << f.k, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(f.k)[None, :]) & 1).astype(np.float64)
    mu_sums = bits @ mu
    return float(np.exp(logsumexp(s + mu_sums) - logsumexp(s)))


def moments(f: NaturalParams) -> MomentTable:
    """Mean and covariance of all interaction statistics.

    mean[tau] is the superset sum of the outcome probabilities (the
    gradient of the log-partition), and
    cov[tau1, tau2] = mean[tau1 | tau2] - mean[tau1] mean[tau2]
    (its Hessian), using that a product of interaction statistics is the
    statistic of the union.
    """
    s = subset_sum(f.f)
    probs = np.exp(s - logsumexp(s))
    probs /= probs.sum()
    mean = np.clip(superset_sum(probs), 0.0, 1.0)
    mean[0] = 1.0
    masks = np.arange(1 << f.k, dtype=np.int64)
    union = np.bitwise_or.outer(masks, masks)
    cov = mean[union] - np.outer(mean, mean)
    cov[0, :] = 0.0
    cov[:, 0] = 0.0
    return MomentTable(f.k, mean, cov)


def sample(p: GeneralParams, n: int, seed: int) -> list[OutcomeVector]:
    """Draw n i.i.d. outcomes by inverse CDF over the outcome table.

    Uses numpy's PCG64 generator seeded with `seed`: u = Generator.random(n)
    and outcome m is the first mask whose cumulative probability exceeds u.
    The same seed always reproduces the same draws.
    """
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    masks = sample_masks(p, n, seed)
    return [OutcomeVector(int(m), p.k) for m in masks]


def sample_masks(p: GeneralParams, n: int, seed: int) -> np.ndarray:
    """Same as sample(), returning raw outcome masks."""
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(n)
    cdf = np.cumsum(p.probs)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, (1 << p.k) - 1).astype(np.int64)
