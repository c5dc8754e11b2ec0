"""Belief-function machinery over small frames of discernment.

Subsets of the frame are encoded as bitmasks: bit i set means the i-th
singleton is in the subset. Masses are stored densely over all 2**n
subsets, which is exact and fast for the tiny frames used here (the water
pipeline runs on n = 2).

Conventions:
  * mass functions are closed-world at construction (no mass on the empty
    set); only the conjunctive combination can move mass onto it,
  * belief excludes the empty set, so belief(omega) = 1 - m(empty),
  * the pignistic transform spreads each focal mass uniformly over its
    singletons, i.e. betP(A) = sum_B |B & A|/|B| * m(B) / (1 - m(empty)),
    which is additive over disjoint sets and sums to 1 on singletons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import UndefinedDistributionError

SUM_TOLERANCE = 1e-6
"""Constructor renormalizes when |sum - 1| is below this, rejects above."""


class Frame:
    """Ordered set of mutually exclusive singleton hypotheses."""

    __slots__ = ("names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not 1 <= len(names) <= 16:
            raise ValueError(f"frame size must be in [1, 16], got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError(f"frame names must be unique, got {names!r}")
        self.names = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def omega(self) -> int:
        """Bitmask of the full frame."""
        return (1 << self.size) - 1

    def subset(self, names: Iterable[str]) -> int:
        """Bitmask for a subset given by singleton names."""
        mask = 0
        for name in names:
            try:
                mask |= 1 << self._index[name]
            except KeyError:
                raise ValueError(f"unknown singleton {name!r} for frame {self.names}") from None
        return mask

    def names_of(self, subset: int) -> tuple[str, ...]:
        self.check_subset(subset)
        return tuple(n for i, n in enumerate(self.names) if subset >> i & 1)

    def check_subset(self, subset: int) -> None:
        if not isinstance(subset, (int, np.integer)) or not 0 <= subset <= self.omega:
            raise ValueError(f"subset {subset!r} out of range for frame of size {self.size}")

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Frame({self.names!r})"


class MassFunction:
    """Basic belief assignment over the subsets of a frame.

    `masses` maps subsets (bitmask ints, or iterables of singleton names)
    to non-negative reals summing to one. A near-one sum (within
    ``SUM_TOLERANCE``) is renormalized; anything further off is rejected.
    Mass on the empty set is rejected: conflict can only appear through
    :func:`combine_conjunctive`.
    """

    __slots__ = ("frame", "_masses")

    def __init__(self, frame: Frame, masses: Mapping):
        arr = np.zeros(1 << frame.size)
        for key, value in masses.items():
            subset = key if isinstance(key, (int, np.integer)) else frame.subset(key)
            frame.check_subset(subset)
            arr[subset] += float(value)
        if np.any(arr < 0.0):
            raise ValueError("masses must be non-negative")
        if arr[0] > 0.0:
            raise ValueError("mass on the empty set is not allowed at construction")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"masses must sum to 1 (got {total!r})")
        arr /= total
        self.frame = frame
        arr.setflags(write=False)
        self._masses = arr

    @classmethod
    def _raw(cls, frame: Frame, arr: np.ndarray) -> "MassFunction":
        """Internal constructor for combination results; skips validation."""
        m = object.__new__(cls)
        m.frame = frame
        arr.setflags(write=False)
        m._masses = arr
        return m

    @classmethod
    def vacuous(cls, frame: Frame) -> "MassFunction":
        return cls(frame, {frame.omega: 1.0})

    def mass(self, subset) -> float:
        subset = subset if isinstance(subset, (int, np.integer)) else self.frame.subset(subset)
        self.frame.check_subset(subset)
        return float(self._masses[subset])

    @property
    def masses(self) -> np.ndarray:
        """Dense read-only vector of length 2**n, indexed by bitmask."""
        return self._masses

    def focal(self) -> list[tuple[int, float]]:
        """Subsets carrying strictly positive mass."""
        return [(s, float(v)) for s, v in enumerate(self._masses) if v > 0.0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MassFunction)
            and self.frame == other.frame
            and np.array_equal(self._masses, other._masses)
        )

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{{{','.join(self.frame.names_of(s)) or ''}}}: {v:.6g}" for s, v in self.focal()
        )
        return f"MassFunction({parts})"


@dataclass(frozen=True)
class DecisionParams:
    """Parameters of the cardinality-weighted decision rule.

    The utility weight of a subset X is k_d * lam[X] / |X|**r. At r = 0
    every subset weighs the same and total ignorance wins; at r = 1 the
    rule reduces to the maximum pignistic singleton.
    """

    r: float = 0.1
    k_d: float = 1.0
    lam: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [0, 1], got {self.r}")
        if self.k_d <= 0.0:
            raise ValueError(f"k_d must be positive, got {self.k_d}")
        if any(v <= 0.0 for v in self.lam.values()):
            raise ValueError("lambda weights must be positive")

    def lam_of(self, subset: int) -> float:
        return float(self.lam.get(subset, 1.0))


def _bit_count(x: int) -> int:
    return bin(x).count("1")


def belief(m: MassFunction, a) -> float:
    """Total mass of the non-empty subsets contained in `a`."""
    a = a if isinstance(a, (int, np.integer)) else m.frame.subset(a)
    m.frame.check_subset(a)
    masses = m._masses
    total = 0.0
    for x in range(1, len(masses)):
        if x & ~a == 0:
            total += masses[x]
    return total


def plausibility(m: MassFunction, a) -> float:
    """Total mass of the subsets intersecting `a`."""
    a = a if isinstance(a, (int, np.integer)) else m.frame.subset(a)
    m.frame.check_subset(a)
    masses = m._masses
    total = 0.0
    for x in range(1, len(masses)):
        if x & a:
            total += masses[x]
    return total


def combine_conjunctive(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Unnormalized conjunctive rule; conflict accumulates on the empty set."""
    if m1.frame != m2.frame:
        raise ValueError("mass functions must share a frame")
    n = 1 << m1.frame.size
    out = np.zeros(n)
    a1, a2 = m1._masses, m2._masses
    for x in range(n):
        if a1[x] == 0.0:
            continue
        for y in range(n):
            if a2[y] == 0.0:
                continue
            out[x & y] += a1[x] * a2[y]
    return MassFunction._raw(m1.frame, out)


def combine_average(ms: list[MassFunction]) -> MassFunction:
    """Per-subset arithmetic mean; the idempotent rule for dependent sources."""
    if not ms:
        raise ValueError("need at least one mass function to average")
    frame = ms[0].frame
    if any(m.frame != frame for m in ms):
        raise ValueError("mass functions must share a frame")
    out = np.mean([m._masses for m in ms], axis=0)
    return MassFunction._raw(frame, out)


def pignistic(m: MassFunction, a) -> float:
    """Pignistic probability of `a` (see module docstring for the kernel)."""
    a = a if isinstance(a, (int, np.integer)) else m.frame.subset(a)
    m.frame.check_subset(a)
    masses = m._masses
    conflict = masses[0]
    if conflict >= 1.0:
        raise UndefinedDistributionError("total conflict: m(empty) = 1")
    total = 0.0
    for b in range(1, len(masses)):
        overlap = b & a
        if overlap:
            total += masses[b] * (_bit_count(overlap) / _bit_count(b))
    return total / (1.0 - conflict)


def appriou_decide(m: MassFunction, params: DecisionParams = DecisionParams()) -> int:
    """Subset maximizing the utility-weighted pignistic score.

    Ties go to the larger cardinality (the more cautious reading), then to
    the lowest bitmask.
    """
    best_subset = -1
    best_score = -np.inf
    best_card = -1
    for x in range(1, 1 << m.frame.size):
        card = _bit_count(x)
        weight = params.k_d * params.lam_of(x) / card**params.r
        score = weight * pignistic(m, x)
        if score > best_score or (score == best_score and card > best_card):
            best_subset, best_score, best_card = x, score, card
    return best_subset
