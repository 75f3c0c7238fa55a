"""Exchangeable max-stable copulas used for the innovations and their attractor.

Every copula here is max-stable, so it is described completely by its
exponent function ``V(t) = -log C(exp(-t))`` on ``[0, inf]^d``, which is
1-homogeneous.  Working with ``V`` keeps long products of copula values in
log space without a round trip through ``exp``/``log``.

Samples are returned on the standard Frechet scale, ``z = -1 / log(u)``.
"""
from __future__ import annotations

import numpy as np

PLOD_TOL = 1e-12
MAX_STABLE_TOL = 1e-10


class DimensionMismatch(ValueError):
    pass


class BadIndices(ValueError):
    pass


def _as_points(u, d):
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (d,):
        raise DimensionMismatch(f"expected points of dimension {d}, got shape {u.shape}")
    return u


class Copula:
    """A d-variate copula with closed-form evaluation and a Frechet sampler."""

    kind = "abstract"

    def __init__(self, d: int):
        if int(d) < 1:
            raise ValueError(f"dimension must be positive, got {d}")
        self.d = int(d)

    def _exponent(self, t):
        raise NotImplementedError

    def exponent(self, t):
        """``-log C(exp(-t))`` for ``t`` in ``[0, inf]^d`` (last axis)."""
        t = _as_points(t, self.d)
        if np.any(t < 0):
            raise ValueError("exponent arguments must be nonnegative")
        return self._exponent(t)

    def log_evaluate(self, u):
        u = _as_points(u, self.d)
        with np.errstate(divide="ignore"):
            t = -np.log(u)
        return -self._exponent(t)

    def evaluate(self, u):
        """Copula value at ``u`` (points along the last axis)."""
        u = _as_points(u, self.d)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("copula arguments must lie in [0, 1]")
        return np.exp(self.log_evaluate(u))

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Draw vectors with standard Frechet margins and this copula.

        Returns shape ``(d,)`` when ``size`` is None, otherwise ``(*size, d)``.
        """
        shape = () if size is None else tuple(np.atleast_1d(size))
        return self._sample(rng, shape)

    def subcopula(self, j: int, j2: int) -> "Copula":
        """Bivariate margin of components ``j < j2`` (0-based)."""
        if not 0 <= j < j2 < self.d:
            raise BadIndices(f"need 0 <= j < j2 < {self.d}, got ({j}, {j2})")
        return self._with_dim(2)

    def margin(self, k: int) -> "Copula":
        """The same family in dimension ``k``; all kinds here are exchangeable."""
        return self._with_dim(k)

    def _with_dim(self, d):
        return type(self)(d)

    def to_config(self) -> dict:
        return {"kind": self.kind, "d": self.d}

    def __eq__(self, other):
        return type(other) is type(self) and other.to_config() == self.to_config()

    def __hash__(self):
        return hash(tuple(sorted(self.to_config().items())))

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.to_config().items() if k != "kind")
        return f"{type(self).__name__}({params})"


class Independence(Copula):
    kind = "independence"

    def _exponent(self, t):
        return np.sum(t, axis=-1)

    def _sample(self, rng, shape):
        u = rng.random((*shape, self.d))
        return -1.0 / np.log(u)


class Comonotone(Copula):
    """Upper Frechet-Hoeffding bound, ``min(u)``."""

    kind = "comonotone"

    def evaluate(self, u):
        u = _as_points(u, self.d)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("copula arguments must lie in [0, 1]")
        return np.min(u, axis=-1)

    def _exponent(self, t):
        return np.max(t, axis=-1)

    def _sample(self, rng, shape):
        z = -1.0 / np.log(rng.random(shape))
        return np.repeat(np.expand_dims(z, -1), self.d, axis=-1)


class Logistic(Copula):
    """Gumbel-Hougaard copula ``exp(-(sum_j (-log u_j)^alpha)^(1/alpha))``, alpha >= 1."""

    kind = "logistic"

    def __init__(self, d: int, alpha: float):
        super().__init__(d)
        alpha = float(alpha)
        if not (alpha >= 1 and np.isfinite(alpha)):
            raise ValueError(f"logistic dependence parameter must be >= 1, got {alpha}")
        self.alpha = alpha

    def _with_dim(self, d):
        return Logistic(d, self.alpha)

    def to_config(self):
        return {"kind": self.kind, "d": self.d, "alpha": self.alpha}

    def _exponent(self, t):
        # scaled alpha-norm; avoids overflow of t**alpha for large alpha
        t = np.asarray(t, dtype=float)
        m = np.max(t, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(m > 0, t / np.where(np.isinf(m), 1.0, m), 0.0)
            r = np.where(np.isinf(m), np.where(np.isinf(t), 1.0, 0.0), r)
            norm = np.sum(r**self.alpha, axis=-1) ** (1.0 / self.alpha)
        return m[..., 0] * norm

    def _sample(self, rng, shape):
        # Marshall-Olkin frailty: S positive stable with Laplace transform
        # exp(-s**r), r = 1/alpha; then u_j = exp(-(E_j/S)**r), z_j = (S/E_j)**r.
        r = 1.0 / self.alpha
        s = positive_stable(rng, r, shape)
        e = rng.standard_exponential((*shape, self.d))
        return (np.expand_dims(s, -1) / e) ** r


def positive_stable(rng: np.random.Generator, r: float, shape=()) -> np.ndarray:
    """Positive stable variables with Laplace transform ``exp(-s**r)``, 0 < r <= 1.

    Kanter's representation: with ``U ~ Uniform(0, pi)`` and ``W ~ Exp(1)``,
    ``S = sin(r U) / sin(U)**(1/r) * (sin((1 - r) U) / W)**((1 - r) / r)``.
    """
    if not 0 < r <= 1:
        raise ValueError(f"stability index must be in (0, 1], got {r}")
    shape = tuple(np.atleast_1d(shape)) if shape != () else ()
    if r == 1:
        return np.ones(shape)
    u = np.pi * rng.random(shape)
    w = rng.standard_exponential(shape)
    return (
        np.sin(r * u) / np.sin(u) ** (1.0 / r) * (np.sin((1.0 - r) * u) / w) ** ((1.0 - r) / r)
    )


KINDS = {"independence": Independence, "comonotone": Comonotone, "logistic": Logistic}


def from_config(spec: dict, d: int | None = None) -> Copula:
    """Build a copula from ``{kind: ..., alpha: ..., d: ...}``.

    ``d`` in the mapping must agree with the ``d`` argument when both are given.
    """
    spec = dict(spec)
    kind = str(spec.pop("kind", "")).lower()
    if kind not in KINDS:
        raise ValueError(f"unknown copula kind {kind!r}; expected one of {sorted(KINDS)}")
    cd = spec.pop("d", None)
    if cd is not None and d is not None and int(cd) != int(d):
        raise DimensionMismatch(f"copula d={cd} does not match model d={d}")
    dim = cd if cd is not None else d
    if dim is None:
        raise ValueError("copula dimension not given")
    if kind == "logistic":
        if "alpha" not in spec:
            raise ValueError("logistic copula needs 'alpha'")
        c = Logistic(dim, spec.pop("alpha"))
    else:
        c = KINDS[kind](dim)
    if spec:
        raise ValueError(f"unexpected copula parameters {sorted(spec)} for kind {kind!r}")
    return c


def evaluate(c: Copula, u) -> np.ndarray:
    return c.evaluate(u)


def subcopula(c: Copula, j: int, j2: int) -> Copula:
    return c.subcopula(j, j2)


def sample(c: Copula, rng: np.random.Generator, size=None) -> np.ndarray:
    return c.sample(rng, size)


def is_max_stable(c: Copula, n: int, grid, tol: float = MAX_STABLE_TOL):
    """Check ``C(u^(1/n))^n == C(u)`` on ``grid``.

    Returns ``(ok, max_deviation)``.
    """
    grid = _as_points(grid, c.d)
    lhs = c.evaluate(grid ** (1.0 / n)) ** n
    dev = float(np.max(np.abs(lhs - c.evaluate(grid))))
    return dev <= tol, dev


def check_plod(c: Copula, grid, tol: float = PLOD_TOL):
    """Check positive lower orthant dependence ``C(u) >= prod(u)`` on ``grid``.

    Returns ``(ok, worst_point)`` where ``worst_point`` minimizes ``C(u) - prod(u)``.
    """
    grid = np.atleast_2d(_as_points(grid, c.d))
    gap = c.evaluate(grid) - np.prod(grid, axis=-1)
    i = int(np.argmin(gap))
    return bool(gap[i] >= -tol), grid[i]
