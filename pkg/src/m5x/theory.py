"""Closed-form extreme-value quantities of an M5 process.

Products over the signature support are accumulated as sums of copula
exponents (``-log C``) with :func:`math.fsum`.  Component indices in this
module are 0-based; CSV and report output use 1-based names.

Besides the generic evaluators, the special closed forms for the
comonotone, independence and logistic attractors are implemented as
separate functions so that tests can compare the two routes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .copulas import Copula, DimensionMismatch, is_max_stable
from .signatures import SignatureArray, column_max_sum, validate


class DegenerateDenominator(ArithmeticError):
    pass


_STABILITY_GRID = np.array([[0.1, 0.5, 0.9], [0.3, 0.7, 0.2], [0.95, 0.05, 0.6]])


@dataclass(frozen=True)
class M5Model:
    """A signature together with the max-stable copula of the innovations.

    The innovation copula is taken max-stable, so it is also its own
    attractor and plays both roles in the formulas below.
    """

    sig: SignatureArray
    cstar: Copula

    def __post_init__(self):
        validate(self.sig)
        if self.cstar.d != self.sig.d:
            raise DimensionMismatch(f"copula d={self.cstar.d} but signature d={self.sig.d}")
        grid = np.resize(_STABILITY_GRID, (3, self.sig.d))
        ok, dev = is_max_stable(self.cstar, 5, grid)
        if not ok:
            raise ValueError(f"innovation copula is not max-stable (deviation {dev:g})")

    @property
    def d(self) -> int:
        return self.sig.d

    def pair(self, j: int, j2: int) -> "M5Model":
        """The bivariate sub-model of components ``j < j2``."""
        return M5Model(self.sig.columns([j, j2]), self.cstar.subcopula(j, j2))


def _fsum(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.float64(math.fsum(x))
    flat = x.reshape(-1, x.shape[-1])
    return np.array([math.fsum(row) for row in flat]).reshape(x.shape[:-1])


def _check_tau(tau, d, strict=True):
    tau = np.asarray(tau, dtype=float)
    if tau.shape[-1:] != (d,):
        raise DimensionMismatch(f"tau must have {d} components, got shape {tau.shape}")
    bad = ~np.isfinite(tau) | ((tau <= 0) if strict else (tau < 0))
    if np.any(bad):
        raise ValueError(f"tau entries must be {'strictly positive' if strict else 'nonnegative'} and finite")
    return tau


def _scaled(weights, t):
    """``weights * t`` broadcast over leading axes of ``t``; 0 * inf counts as 0."""
    t = np.asarray(t, dtype=float)[..., None, :]
    with np.errstate(invalid="ignore"):
        return np.where(weights > 0, weights * t, 0.0)


def _support_exponent(sig: SignatureArray, c: Copula, t) -> np.ndarray:
    """``sum_{l,k} V(alpha_lk * t)`` with ``V = -log C(exp(-.))``."""
    w = sig.alpha.reshape(-1, sig.d)
    return _fsum(c.exponent(_scaled(w, t)))


def _pattern_exponent(sig: SignatureArray, c: Copula, t) -> np.ndarray:
    """``sum_l V(max_k alpha_lk * t)``."""
    return _fsum(c.exponent(_scaled(sig.alpha.max(axis=1), t)))


# --- copulas of F_Y and of the i.i.d. limit -------------------------------------------


def copula_Y(m: M5Model, u) -> np.ndarray:
    """Copula of the stationary law: product of innovation-copula values at ``u**alpha``."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (m.d,):
        raise DimensionMismatch(f"expected points of dimension {m.d}, got shape {u.shape}")
    a = m.sig.alpha.reshape(-1, m.d)
    pts = u[..., None, :] ** a
    with np.errstate(divide="ignore"):
        logs = np.log(m.cstar.evaluate(pts))
    return np.exp(_fsum(logs))


def copula_hat(m: M5Model, u) -> np.ndarray:
    """Limiting copula of i.i.d. block maxima; exponent form over the support."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (m.d,):
        raise DimensionMismatch(f"expected points of dimension {m.d}, got shape {u.shape}")
    with np.errstate(divide="ignore"):
        t = -np.log(u)
    return np.exp(-_support_exponent(m.sig, m.cstar, t))


def limit_block_maxima(m: M5Model, tau) -> np.ndarray:
    """``lim P(M_n <= n / tau)``: product over patterns at the per-pattern max weights."""
    tau = _check_tau(tau, m.d)
    return np.exp(-_pattern_exponent(m.sig, m.cstar, tau))


def gamma_hat(m: M5Model, tau) -> np.ndarray:
    """``lim P(M_hat_n <= n / tau)`` for the associated i.i.d. sequence."""
    tau = _check_tau(tau, m.d)
    return np.exp(-_support_exponent(m.sig, m.cstar, tau))


def _theta(sig, c, tau):
    num = _pattern_exponent(sig, c, tau)
    den = _support_exponent(sig, c, tau)
    if np.any(den <= 1e-300):
        raise DegenerateDenominator("the model puts no mass on the thresholds tau")
    return num / den


def extremal_index(m: M5Model, tau) -> np.ndarray:
    """Multivariate extremal index ``theta(tau)``, homogeneous of order 0 in ``tau``."""
    tau = _check_tau(tau, m.d)
    th = _theta(m.sig, m.cstar, tau)
    assert np.all((th > 0) & (th <= 1 + 1e-12)), th
    return th


def marginal_extremal_index(m: M5Model, j: int) -> float:
    """Extremal index of the ``j``-th component sequence."""
    if not 0 <= j < m.d:
        raise IndexError(f"component index {j} out of range for d={m.d}")
    return column_max_sum(m.sig, j)


def marginal_indices(m: M5Model) -> np.ndarray:
    return np.array([marginal_extremal_index(m, j) for j in range(m.d)])


def copula_limit_C(m: M5Model, u) -> np.ndarray:
    """Copula of the limiting law of the dependent block maxima.

    ``C(u) = C_hat(u_j**(1/theta_j))**theta(-log u_j / theta_j)``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (m.d,):
        raise DimensionMismatch(f"expected points of dimension {m.d}, got shape {u.shape}")
    th = marginal_indices(m)
    flat = u.reshape(-1, m.d)
    out = np.empty(len(flat))
    for i, p in enumerate(flat):
        if np.any(p <= 0):
            out[i] = 0.0
        elif np.all(p >= 1):
            out[i] = 1.0
        else:
            tau = -np.log(p) / th
            out[i] = copula_hat(m, p ** (1.0 / th)) ** _theta(m.sig, m.cstar, tau)
    return out.reshape(u.shape[:-1]) if u.ndim > 1 else out[0]


# --- tail dependence and extremal coefficients ----------------------------------------


def _pair_indices(m, j, j2):
    if not 0 <= j < j2 < m.d:
        raise IndexError(f"need 0 <= j < j2 < {m.d}, got ({j}, {j2})")


def tail_dependence_hat(m: M5Model, j: int, j2: int) -> float:
    """Upper tail dependence of ``(j, j2)`` under the i.i.d. limit copula (and under F_Y)."""
    _pair_indices(m, j, j2)
    c2 = m.cstar.subcopula(j, j2)
    w = m.sig.alpha[:, :, [j, j2]].reshape(-1, 2)
    return float(2.0 - _fsum(c2.exponent(w)))


def tail_dependence_C(m: M5Model, j: int, j2: int) -> float:
    """Upper tail dependence of ``(j, j2)`` under the dependent-maxima limit copula."""
    _pair_indices(m, j, j2)
    th_j, th_j2 = marginal_extremal_index(m, j), marginal_extremal_index(m, j2)
    sub = m.pair(j, j2)
    theta_pair = float(extremal_index(sub, [1 / th_j, 1 / th_j2]))
    c2 = m.cstar.subcopula(j, j2)
    w = m.sig.alpha[:, :, [j, j2]].reshape(-1, 2) / np.array([th_j, th_j2])
    return float(2.0 - theta_pair * _fsum(c2.exponent(w)))


def tail_dependence_relation(m: M5Model, j: int, j2: int):
    """Both sides of the two identities linking the C and C_hat tail coefficients.

    Returns ``((lhs, rhs), (lhs, rhs))``.  The left sides come from
    :func:`tail_dependence_C`; the right sides are built from
    :func:`copula_hat` on the bivariate sub-model.
    """
    lhs = tail_dependence_C(m, j, j2)
    sub = m.pair(j, j2)
    th = np.array([marginal_extremal_index(m, j), marginal_extremal_index(m, j2)])
    theta_pair = float(_theta(sub.sig, sub.cstar, 1 / th))
    rhs_a = 2.0 + theta_pair * math.log(copula_hat(sub, np.exp(-1 / th)))
    c_hat_unit = copula_hat(sub, np.exp([-1.0, -1.0]))
    lam_hat = 2.0 + math.log(c_hat_unit)
    rhs_b = lam_hat + math.log(copula_hat(sub, np.exp(-theta_pair / th)) / c_hat_unit)
    return (lhs, float(rhs_a)), (lhs, float(rhs_b))


def extremal_coefficient(m: M5Model, which: str = "hat") -> float:
    """``eps`` with ``X(u, ..., u) = u**eps`` for ``X`` the hat or limiting copula."""
    if which == "hat":
        return float(-math.log(copula_hat(m, np.full(m.d, math.exp(-1.0)))))
    if which == "limiting":
        th = marginal_indices(m)
        theta = float(_theta(m.sig, m.cstar, 1 / th))
        return float(-theta * math.log(copula_hat(m, np.exp(-1 / th))))
    raise ValueError(f"which must be 'hat' or 'limiting', got {which!r}")


def converge_to_attractor(c: Copula, u, n_list) -> list[float]:
    """``|C^n(u^(1/n)) - C(u)|`` for each ``n``; the attractor of a max-stable C is C."""
    u = np.asarray(u, dtype=float)
    base = c.evaluate(u)
    return [float(abs(c.evaluate(u ** (1.0 / n)) ** n - base)) for n in n_list]


# --- special closed forms -------------------------------------------------------------


def smith_weissman_limit(sig: SignatureArray, tau) -> float:
    """Block-maxima limit for the comonotone attractor (M4 case)."""
    tau = np.asarray(tau, dtype=float)
    terms = [max(sig.alpha[l, k, j] * tau[j] for k in range(sig.window) for j in range(sig.d))
             for l in range(sig.L)]
    return math.exp(-math.fsum(terms))


def martins_ferreira_limit(sig: SignatureArray, tau) -> float:
    """Block-maxima limit for the independence attractor."""
    tau = np.asarray(tau, dtype=float)
    terms = [max(sig.alpha[l, k, j] for k in range(sig.window)) * tau[j]
             for j in range(sig.d) for l in range(sig.L)]
    return math.exp(-math.fsum(terms))


def comonotone_gamma_hat(sig: SignatureArray, tau) -> float:
    tau = np.asarray(tau, dtype=float)
    terms = [max(sig.alpha[l, k, j] * tau[j] for j in range(sig.d))
             for l in range(sig.L) for k in range(sig.window)]
    return math.exp(-math.fsum(terms))


def independence_gamma_hat(sig: SignatureArray, tau) -> float:
    return math.exp(-math.fsum(tau))


def logistic_extremal_index(sig: SignatureArray, alpha: float, tau) -> float:
    """Extremal index for the logistic attractor written out in closed form."""
    tau = np.asarray(tau, dtype=float)
    num = math.fsum(
        math.fsum((max(sig.alpha[l, k, j] for k in range(sig.window)) * tau[j]) ** alpha
                  for j in range(sig.d)) ** (1 / alpha)
        for l in range(sig.L)
    )
    den = math.fsum(
        math.fsum((sig.alpha[l, k, j] * tau[j]) ** alpha for j in range(sig.d)) ** (1 / alpha)
        for l in range(sig.L) for k in range(sig.window)
    )
    return num / den


def comonotone_lambda_hat(sig: SignatureArray, j: int, j2: int) -> float:
    a = sig.alpha
    return 2.0 - math.fsum(max(a[l, k, j], a[l, k, j2]) for l in range(sig.L) for k in range(sig.window))


def comonotone_lambda_c(sig: SignatureArray, j: int, j2: int) -> float:
    th_j, th_j2 = column_max_sum(sig, j), column_max_sum(sig, j2)
    mx = sig.alpha.max(axis=1)
    return 2.0 - math.fsum(max(mx[l, j] / th_j, mx[l, j2] / th_j2) for l in range(sig.L))


def lambda_comparison_margin(sig: SignatureArray, j: int, j2: int) -> float:
    """Difference whose sign decides whether lambda_C exceeds lambda_hat (comonotone case)."""
    a = sig.alpha
    th_j, th_j2 = column_max_sum(sig, j), column_max_sum(sig, j2)
    mx = a.max(axis=1)
    first = math.fsum(max(a[l, k, j], a[l, k, j2]) for l in range(sig.L) for k in range(sig.window))
    second = math.fsum(max(mx[l, j] / th_j, mx[l, j2] / th_j2) for l in range(sig.L))
    return first - second


# --- summary --------------------------------------------------------------------------


@dataclass
class TheorySummary:
    tau: np.ndarray
    theta_tau: float
    theta_j: np.ndarray
    lambda_hat: np.ndarray
    lambda_c: np.ndarray
    eps_hat: float
    eps_c: float
    gamma_hat: float
    gamma: float
    pairs: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return len(self.theta_j)

    def columns(self) -> list[str]:
        d = self.d
        cols = [f"tau_{j + 1}" for j in range(d)] + ["theta_tau"]
        cols += [f"theta_{j + 1}" for j in range(d)]
        cols += [f"lambda_hat_{j + 1}_{j2 + 1}" for j, j2 in self.pairs]
        cols += [f"lambda_c_{j + 1}_{j2 + 1}" for j, j2 in self.pairs]
        return cols + ["eps_hat", "eps_c", "gamma_hat", "gamma"]

    def row(self) -> list[float]:
        vals = list(self.tau) + [self.theta_tau] + list(self.theta_j)
        vals += [self.lambda_hat[j, j2] for j, j2 in self.pairs]
        vals += [self.lambda_c[j, j2] for j, j2 in self.pairs]
        return [float(v) for v in vals + [self.eps_hat, self.eps_c, self.gamma_hat, self.gamma]]

    def report(self) -> str:
        tau = ", ".join(f"{t:g}" for t in self.tau)
        lines = [f"tau = ({tau})",
                 f"  extremal index theta(tau)     {self.theta_tau:.10f}"]
        for j, t in enumerate(self.theta_j):
            lines.append(f"  marginal index theta_{j + 1:<9d}  {t:.10f}")
        for j, j2 in self.pairs:
            lines.append(f"  lambda_hat[{j + 1},{j2 + 1}]  {self.lambda_hat[j, j2]:.10f}"
                         f"   lambda_C[{j + 1},{j2 + 1}]  {self.lambda_c[j, j2]:.10f}")
        lines += [f"  extremal coefficient (hat)    {self.eps_hat:.10f}",
                  f"  extremal coefficient (limit)  {self.eps_c:.10f}",
                  f"  gamma_hat(tau)                {self.gamma_hat:.10f}",
                  f"  gamma(tau)                    {self.gamma:.10f}"]
        return "\n".join(lines)


def summarize(m: M5Model, tau) -> TheorySummary:
    tau = _check_tau(tau, m.d)
    pairs = list(combinations(range(m.d), 2))
    lam_hat = np.eye(m.d)
    lam_c = np.eye(m.d)
    for j, j2 in pairs:
        lam_hat[j, j2] = lam_hat[j2, j] = tail_dependence_hat(m, j, j2)
        lam_c[j, j2] = lam_c[j2, j] = tail_dependence_C(m, j, j2)
    return TheorySummary(
        tau=tau,
        theta_tau=float(extremal_index(m, tau)),
        theta_j=marginal_indices(m),
        lambda_hat=lam_hat,
        lambda_c=lam_c,
        eps_hat=extremal_coefficient(m, "hat"),
        eps_c=extremal_coefficient(m, "limiting"),
        gamma_hat=float(gamma_hat(m, tau)),
        gamma=float(limit_block_maxima(m, tau)),
        pairs=pairs,
    )


def check_summary(s: TheorySummary, tol: float = 1e-10) -> list[str]:
    """Hard invariants of a summary; returns a list of violations (empty when sound)."""
    bad = []
    if not 0 < s.theta_tau <= 1 + tol:
        bad.append(f"theta_tau={s.theta_tau} outside (0, 1]")
    if np.any((s.theta_j <= 0) | (s.theta_j > 1 + tol)):
        bad.append(f"theta_j={s.theta_j} outside (0, 1]")
    for name, lam in (("lambda_hat", s.lambda_hat), ("lambda_c", s.lambda_c)):
        if np.any((lam < -tol) | (lam > 1 + tol)):
            bad.append(f"{name} outside [0, 1]")
    for name, eps in (("eps_hat", s.eps_hat), ("eps_c", s.eps_c)):
        if not 1 - tol <= eps <= s.d + tol:
            bad.append(f"{name}={eps} outside [1, {s.d}]")
    if abs(s.gamma - s.gamma_hat**s.theta_tau) > tol:
        bad.append("gamma != gamma_hat ** theta_tau")
    return bad
