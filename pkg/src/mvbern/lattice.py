"""Bitmask subsets of {1..k}: indexing, enumeration, and lattice transforms.

A subset tau of the node set {1..k} is addressed by the integer whose bit
j-1 is set exactly when node j belongs to tau.  Dense tables indexed by
subsets use the mask itself as the array slot, so slot 0 is the empty set
and a table for dimension k has 2**k entries.  Everything in this module
is an immutable value or a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DimensionError

K_MAX = 20
K_SAFE = 15


def check_dimension(k: int, *, force_large: bool = False) -> int:
    """Validate a graph dimension before allocating 2**k lattice slots.

    Dimensions above K_SAFE are refused unless force_large is set; K_MAX
    is a hard cap because every dense table costs Theta(2**k).
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise DimensionError(f"dimension must be an integer, got {k!r}")
    k = int(k)
    if k < 1 or k > K_MAX:
        raise DimensionError(f"dimension k={k} outside [1, {K_MAX}]")
    if k > K_SAFE and not force_large:
        raise DimensionError(
            f"dimension k={k} exceeds the safety cap {K_SAFE}; "
            "pass force_large=True to allocate 2**k lattice slots"
        )
    return k


def _check_same_k(a, b) -> None:
    if a.k != b.k:
        raise DimensionError(f"dimension mismatch: k={a.k} vs k={b.k}")


@dataclass(frozen=True)
class SubsetIndex:
    """A subset of the node set {1..k}, encoded as a bitmask.

    The empty set (mask 0) is representable; it only ever appears
    internally, as slot 0 of dense parameter tables.
    """

    mask: int
    k: int

    def __post_init__(self) -> None:
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)):
            raise DimensionError(f"dimension must be an integer, got {self.k!r}")
        if self.k < 1 or self.k > K_MAX:
            raise DimensionError(f"dimension k={self.k} outside [1, {K_MAX}]")
        if not isinstance(self.mask, (int, np.integer)) or isinstance(self.mask, bool):
            raise DimensionError(f"mask must be an integer, got {self.mask!r}")
        if not 0 <= self.mask < (1 << self.k):
            raise DimensionError(f"mask {self.mask} out of range for k={self.k}")
        object.__setattr__(self, "mask", int(self.mask))
        object.__setattr__(self, "k", int(self.k))

    @property
    def order(self) -> int:
        """Number of nodes in the subset."""
        return self.mask.bit_count()

    def members(self) -> tuple[int, ...]:
        """1-based node indices, ascending."""
        return tuple(j + 1 for j in range(self.k) if self.mask >> j & 1)

    def is_empty(self) -> bool:
        return self.mask == 0

    @classmethod
    def from_members(cls, members, k: int) -> "SubsetIndex":
        mask = 0
        for j in members:
            if not 1 <= j <= k:
                raise DimensionError(f"node index {j} out of range for k={k}")
            bit = 1 << (j - 1)
            if mask & bit:
                raise DimensionError(f"duplicate node index {j}")
            mask |= bit
        return cls(mask, k)

    @classmethod
    def from_string(cls, text: str, k: int) -> "SubsetIndex":
        return parse_subset(text, k)

    def to_string(self) -> str:
        return format_subset(self)


@dataclass(frozen=True)
class OutcomeVector:
    """A binary outcome y in {0,1}**k encoded as a mask (bit j-1 = y_j)."""

    bits: int
    k: int

    def __post_init__(self) -> None:
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)):
            raise DimensionError(f"dimension must be an integer, got {self.k!r}")
        if self.k < 1 or self.k > K_MAX:
            raise DimensionError(f"dimension k={self.k} outside [1, {K_MAX}]")
        if not isinstance(self.bits, (int, np.integer)) or isinstance(self.bits, bool):
            raise DimensionError(f"bits must be an integer, got {self.bits!r}")
        if not 0 <= self.bits < (1 << self.k):
            raise DimensionError(f"bits {self.bits} out of range for k={self.k}")
        object.__setattr__(self, "bits", int(self.bits))
        object.__setattr__(self, "k", int(self.k))

    def values(self) -> tuple[int, ...]:
        """The outcome as a (y_1, ..., y_k) tuple."""
        return tuple(self.bits >> j & 1 for j in range(self.k))

    def support(self) -> SubsetIndex:
        """The set of coordinates that are one."""
        return SubsetIndex(self.bits, self.k)

    @classmethod
    def from_values(cls, values, k: int | None = None) -> "OutcomeVector":
        vals = list(values)
        if k is None:
            k = len(vals)
        if len(vals) != k:
            raise DimensionError(f"expected {k} outcome values, got {len(vals)}")
        bits = 0
        for j, v in enumerate(vals):
            if v not in (0, 1):
                raise DimensionError(f"outcome values must be 0 or 1, got {v!r}")
            bits |= int(v) << j
        return cls(bits, k)


def is_subset(a: SubsetIndex, b: SubsetIndex) -> bool:
    """Mask containment: every node of a is a node of b."""
    _check_same_k(a, b)
    return (a.mask & b.mask) == a.mask


def enumerate_supersets(tau: SubsetIndex) -> Iterator[SubsetIndex]:
    """Yield every superset of tau within {1..k}, in increasing mask order.

    Masked-increment loop; yields 2**(k - |tau|) subsets.
    """
    full = (1 << tau.k) - 1
    s = tau.mask
    while True:
        yield SubsetIndex(s, tau.k)
        if s == full:
            return
        s = (s + 1) | tau.mask


def interaction_statistic(tau: SubsetIndex, y: OutcomeVector) -> int:
    """Product of the y-coordinates indexed by tau: 1 iff tau lies in the
    support of y.  The empty product is 1."""
    if tau.k != y.k:
        raise DimensionError(f"dimension mismatch: k={tau.k} vs k={y.k}")
    return 1 if (tau.mask & y.bits) == tau.mask else 0


def format_subset(tau: SubsetIndex) -> str:
    """Comma-joined ascending 1-based node indices, e.g. "1,3".

    The empty set has no external notation and is rejected.
    """
    if tau.mask == 0:
        raise DimensionError("the empty subset has no external notation")
    return ",".join(str(j) for j in tau.members())


def parse_subset(text: str, k: int) -> SubsetIndex:
    """Parse "1,3"-style notation into a SubsetIndex of dimension k."""
    parts = [p.strip() for p in text.split(",")]
    if parts == [""]:
        raise DimensionError("empty subset string")
    try:
        members = [int(p) for p in parts]
    except ValueError:
        raise DimensionError(f"malformed subset string {text!r}") from None
    return SubsetIndex.from_members(members, k)


def mask_orders(k: int) -> np.ndarray:
    """Population count of every mask 0..2**k-1, as an int array."""
    masks = np.arange(1 << k, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(k)[None, :]) & 1
    return bits.sum(axis=1)


def _lattice_dim(n: int) -> int:
    k = n.bit_length() - 1
    if n <= 0 or (1 << k) != n:
        raise DimensionError(f"lattice table length {n} is not a power of two")
    return k


def _axis_slices(ndim: int, k: int, axis: int, value: int) -> tuple:
    lead = (slice(None),) * (ndim - 1)
    tail = tuple(value if i == axis else slice(None) for i in range(k))
    return lead + tail


def subset_sum(a: np.ndarray) -> np.ndarray:
    """Zeta transform along the last axis: out[m] = sum over s subset of m of a[s].

    O(k 2**k) per table; works on any leading batch shape.
    """
    arr = np.array(a, dtype=np.float64)
    k = _lattice_dim(arr.shape[-1])
    t = arr.reshape(arr.shape[:-1] + (2,) * k)
    for axis in range(k):
        lo = _axis_slices(arr.ndim, k, axis, 0)
        hi = _axis_slices(arr.ndim, k, axis, 1)
        t[hi] += t[lo]
    return arr


def inverse_subset_sum(a: np.ndarray) -> np.ndarray:
    """Moebius inversion of subset_sum: recovers x from out[m] = sum_{s<=m} x[s]."""
    arr = np.array(a, dtype=np.float64)
    k = _lattice_dim(arr.shape[-1])
    t = arr.reshape(arr.shape[:-1] + (2,) * k)
    for axis in range(k):
        lo = _axis_slices(arr.ndim, k, axis, 0)
        hi = _axis_slices(arr.ndim, k, axis, 1)
        t[hi] -= t[lo]
    return arr


def superset_sum(a: np.ndarray) -> np.ndarray:
    """Reverse zeta transform along the last axis: out[m] = sum over s superset of m of a[s]."""
    arr = np.array(a, dtype=np.float64)
    k = _lattice_dim(arr.shape[-1])
    t = arr.reshape(arr.shape[:-1] + (2,) * k)
    for axis in range(k):
        lo = _axis_slices(arr.ndim, k, axis, 0)
        hi = _axis_slices(arr.ndim, k, axis, 1)
        t[lo] += t[hi]
    return arr
