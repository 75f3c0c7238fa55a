"""Signature arrays: the nonnegative weights that define an M5 process.

The weight ``alpha[l, k - k_min, j]`` scales innovation ``Z[l, n - k, j]``
in the moving maximum of component ``j``.  Arrays are stored densely and
zero-based in every axis; the lag axis is offset by ``k_min``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-9


class SignatureError(ValueError):
    """Base class for invalid signature arrays."""


class NegativeWeight(SignatureError):
    pass


class BadNormalization(SignatureError):
    def __init__(self, j: int, total: float):
        self.j = j
        self.total = total
        super().__init__(f"weights of component j={j + 1} sum to {total!r}, expected 1")


class DeadPattern(SignatureError):
    pass


class ZeroColumn(SignatureError):
    pass


@dataclass(frozen=True, eq=False)
class SignatureArray:
    """Finite-support coefficient family ``alpha[l, k, j]``.

    Parameters
    ----------
    alpha : array_like, shape (L, k_max - k_min + 1, d)
        Nonnegative weights.
    k_min : int
        Lag of the first entry along axis 1.
    """

    alpha: np.ndarray
    k_min: int = 0

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 3 or 0 in a.shape:
            raise SignatureError(f"alpha must be a non-empty 3-d array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise SignatureError("alpha contains non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "k_min", int(self.k_min))

    @property
    def L(self) -> int:
        return self.alpha.shape[0]

    @property
    def window(self) -> int:
        return self.alpha.shape[1]

    @property
    def d(self) -> int:
        return self.alpha.shape[2]

    @property
    def k_max(self) -> int:
        return self.k_min + self.window - 1

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @classmethod
    def from_entries(cls, d, L, k_min, k_max, entries) -> "SignatureArray":
        """Build from ``(l, k, j, weight)`` quadruples with 1-based ``l`` and ``j``.

        Unlisted entries are zero.  Repeated coordinates are an error.
        """
        if k_max < k_min:
            raise SignatureError(f"k_max={k_max} < k_min={k_min}")
        alpha = np.zeros((L, k_max - k_min + 1, d))
        seen = set()
        for l, k, j, w in entries:
            if not (1 <= l <= L and k_min <= k <= k_max and 1 <= j <= d):
                raise SignatureError(f"entry (l={l}, k={k}, j={j}) outside declared dimensions")
            if (l, k, j) in seen:
                raise SignatureError(f"entry (l={l}, k={k}, j={j}) listed twice")
            seen.add((l, k, j))
            alpha[l - 1, k - k_min, j - 1] = w
        return cls(alpha, k_min)

    def entries(self):
        """Nonzero weights as 1-based ``(l, k, j, weight)`` quadruples."""
        out = []
        for l, ki, j in zip(*np.nonzero(self.alpha)):
            out.append((int(l) + 1, int(ki) + self.k_min, int(j) + 1, float(self.alpha[l, ki, j])))
        return out

    def columns(self, cols) -> "SignatureArray":
        """Sub-signature restricted to the 0-based components ``cols``.

        Patterns that carry no weight on the kept components are dropped,
        since they contribute nothing to any product over the support.
        """
        a = self.alpha[:, :, list(cols)]
        live = a.reshape(a.shape[0], -1).max(axis=1) > 0
        return SignatureArray(a[live], self.k_min)

    def __repr__(self):
        return f"SignatureArray(d={self.d}, L={self.L}, k=[{self.k_min}, {self.k_max}])"


def validate(raw: SignatureArray) -> SignatureArray:
    """Check the signature invariants and return ``raw`` unchanged.

    Raises
    ------
    NegativeWeight
        Some entry is below zero; the first offending (l, k, j) is reported.
    BadNormalization
        A component's weights do not sum to 1 within 1e-9.
    DeadPattern
        A pattern ``l`` has no positive weight anywhere.
    """
    a = raw.alpha
    neg = np.argwhere(a < 0)
    if len(neg):
        l, ki, j = neg[0]
        raise NegativeWeight(
            f"alpha[l={l + 1}, k={ki + raw.k_min}, j={j + 1}] = {a[l, ki, j]} is negative"
        )
    sums = a.sum(axis=(0, 1))
    for j, s in enumerate(sums):
        if abs(s - 1.0) > NORMALIZATION_TOL:
            raise BadNormalization(j, float(s))
    dead = np.flatnonzero(a.reshape(raw.L, -1).max(axis=1) <= 0)
    if len(dead):
        raise DeadPattern(f"pattern l={dead[0] + 1} has no positive weight")
    return raw


def normalize(raw: SignatureArray) -> SignatureArray:
    """Rescale every component so its weights sum to one."""
    a = raw.alpha
    if np.any(a < 0):
        raise NegativeWeight("cannot normalize an array with negative weights")
    sums = a.sum(axis=(0, 1))
    zero = np.flatnonzero(sums <= 0)
    if len(zero):
        raise ZeroColumn(f"component j={zero[0] + 1} has all-zero weights")
    out = np.empty_like(a)
    for j in range(a.shape[2]):
        out[:, :, j] = _unit_sum(a[:, :, j].ravel()).reshape(a.shape[:2])
    return SignatureArray(out, raw.k_min)


def _unit_sum(col):
    """Scale ``col`` so its exactly-rounded sum is 1.0.

    Plain division can leave the sum an ulp away from 1; the residual is
    pushed into the largest entry so that a second pass is a no-op.
    """
    col = col / math.fsum(col)
    i = int(np.argmax(col))
    for _ in range(8):
        s = math.fsum(col)
        if s == 1.0:
            break
        col[i] += 1.0 - s
    return col


def column_max_sum(sig: SignatureArray, j: int) -> float:
    """Sum over patterns of the largest lag weight of component ``j`` (0-based).

    For a valid signature this is the extremal index of the ``j``-th
    component sequence and lies in (0, 1].
    """
    if not 0 <= j < sig.d:
        raise IndexError(f"component index {j} out of range for d={sig.d}")
    return float(sig.alpha[:, :, j].max(axis=1).sum())
