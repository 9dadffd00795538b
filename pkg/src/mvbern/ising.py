"""Ising model on {0,1} nodes and its overlap with the pairwise-truncated
multivariate Bernoulli.

The Ising log density is a quadratic form in the binary node values: a
symmetric matrix Theta holds main effects on the diagonal and pairwise
interactions off it, normalized by an exact sum over all 2**k
configurations.  Setting theta[j,j] = f[{j}] and theta[j,j'] = f[{j,j'}]
makes the Ising density identical to a multivariate Bernoulli whose
interactions of order three and higher vanish; the embedding refuses
parameters that carry any higher-order term.

Model sizes for a k-node graph: the multivariate Bernoulli spends
2**k - 1 parameters, the Ising model k(k+1)/2, and a multivariate
Gaussian k + k(k+1)/2 (mean plus covariance); the Gaussian appears here
only through that count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distribution import NaturalParams
from .errors import DimensionError, NotPairwiseRepresentableError
from .lattice import K_MAX, OutcomeVector, mask_orders

PAIRWISE_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class IsingParams:
    """Symmetric k x k interaction matrix; not necessarily positive
    semi-definite."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise DimensionError(f"theta must be square, got shape {theta.shape}")
        if not 1 <= theta.shape[0] <= K_MAX:
            raise DimensionError(f"dimension k={theta.shape[0]} outside [1, {K_MAX}]")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if not np.array_equal(theta, theta.T):
            raise ValueError("theta must be symmetric")
        object.__setattr__(self, "theta", _freeze(theta))

    @property
    def k(self) -> int:
        return self.theta.shape[0]


def _config_energies(theta: IsingParams) -> np.ndarray:
    """Quadratic form of every configuration, indexed by outcome mask."""
    k = theta.k
    masks = np.arange(1 << k, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(k)[None, :]) & 1).astype(np.float64)
    upper = np.triu(theta.theta, 1)
    return bits @ np.diag(theta.theta) + np.einsum("mi,ij,mj->m", bits, upper, bits)


def ising_log_partition(theta: IsingParams) -> float:
    """log Z(Theta): exact max-shifted sum over all 2**k configurations."""
    return float(logsumexp(_config_energies(theta)))


def ising_log_density(theta: IsingParams, y: OutcomeVector) -> float:
    """Log probability of one configuration under the Ising model."""
    if y.k != theta.k:
        raise DimensionError(f"dimension mismatch: k={y.k} vs k={theta.k}")
    energies = _config_energies(theta)
    return float(energies[y.bits] - logsumexp(energies))


def mvb_to_ising(f: NaturalParams) -> IsingParams:
    """Embed pairwise-only natural parameters as an Ising matrix.

    theta[j,j] = f[{j}] and theta[j,j'] = f[{j,j'}]; the two densities
    then agree pointwise.  Any interaction of order >= 3 above
    PAIRWISE_TOL is rejected.
    """
    orders = mask_orders(f.k)
    high = np.flatnonzero((orders >= 3) & (np.abs(f.f) > PAIRWISE_TOL))
    if high.size:
        raise NotPairwiseRepresentableError("not pairwise-representable")
    theta = np.zeros((f.k, f.k))
    for j in range(f.k):
        theta[j, j] = f.f[1 << j]
        for j2 in range(j + 1, f.k):
            theta[j, j2] = theta[j2, j] = f.f[(1 << j) | (1 << j2)]
    return IsingParams(theta)


def parameter_counts(k: int) -> tuple[int, int, int]:
    """Free-parameter counts (multivariate Bernoulli, Ising, Gaussian)."""
    if k < 1:
        raise DimensionError(f"dimension k={k} must be at least 1")
    return (2**k - 1, k * (k + 1) // 2, k + k * (k + 1) // 2)
