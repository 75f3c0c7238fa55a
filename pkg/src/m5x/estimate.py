"""Empirical counterparts of the closed forms, and the verification report."""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from . import theory
from .simulate import BOOTSTRAP, IID, TAIL, BlockMaxima, SimConfig, block_maxima, resolve_threads, sample_stationary, stream

Z_GATE = 4.0
MARGINAL_TAU = 1e-6
MIN_REPS = 100


class EmptyInput(ValueError):
    pass


class DegenerateProb(ArithmeticError):
    pass


class InsufficientTail(UserWarning):
    """A tail level had too few exceedances and was dropped."""


def empirical_limit_prob(maxima: BlockMaxima, tau, which: str = "dep", n: int | None = None):
    """Fraction of replications with ``M_{n,j} <= n / tau_j`` for all j.

    Returns ``(estimate, binomial_se)``.
    """
    if len(maxima) == 0:
        raise EmptyInput("no replications")
    if len(maxima) < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replications, got {len(maxima)}")
    arr = {"dep": maxima.m_dep, "iid": maxima.m_iid}.get(which)
    if arr is None:
        raise ValueError(f"which must be 'dep' or 'iid', got {which!r}")
    n = maxima.n if n is None else n
    tau = np.asarray(tau, dtype=float)
    hits = np.all(arr <= n / tau, axis=1)
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / len(hits))


def empirical_extremal_index(maxima: BlockMaxima, tau, n: int | None = None):
    """``log p_dep / log p_iid`` with a delta-method standard error."""
    p_dep, _ = empirical_limit_prob(maxima, tau, "dep", n)
    p_iid, _ = empirical_limit_prob(maxima, tau, "iid", n)
    for name, p in (("dep", p_dep), ("iid", p_iid)):
        if not 0 < p < 1:
            raise DegenerateProb(f"empirical {name} probability is {p}; resize n, reps or tau")
    r = len(maxima)
    ld, li = math.log(p_dep), math.log(p_iid)
    est = ld / li
    # var(log p) ~ (1 - p) / (r p); dep and iid draws are independent
    rel = (1 - p_dep) / (r * p_dep) / ld**2 + (1 - p_iid) / (r * p_iid) / li**2
    return est, abs(est) * math.sqrt(rel)


class TailLevel(NamedTuple):
    u: float
    estimate: float
    se: float
    exceedances: int


def _lower_box(order_x, order_y, m, size):
    """Indicator that both ordinal ranks are <= m."""
    in_x = np.zeros(size, dtype=bool)
    in_x[order_x[:m]] = True
    in_y = np.zeros(size, dtype=bool)
    in_y[order_y[:m]] = True
    return in_x & in_y


def _lambda_levels(x, y, ms):
    n = len(x)
    ox = np.argsort(x, kind="stable")
    oy = np.argsort(y, kind="stable")
    out = []
    for m in ms:
        count = int(np.count_nonzero(_lower_box(ox, oy, m, n)))
        out.append((2.0 - math.log(count / n) / math.log(m / n), n - count))
    return out


def empirical_tail_dependence(samples, j: int, j2: int, u_levels, n_boot: int = 200,
                              seed: int = 0, min_exceedances: int = 50,
                              min_samples: int = 10_000, threads: int | None = 1):
    """Upper tail dependence of columns ``j, j2`` at fixed levels.

    The estimate at level ``u`` is ``2 - log C_n(u, u) / log u`` with ``C_n``
    the empirical copula built from ordinal ranks; ``u`` is taken as the
    realized marginal fraction ``floor(u N) / N``.  Standard errors come from
    ``n_boot`` bootstrap resamples.

    A level is dropped, with an :class:`InsufficientTail` warning, when fewer
    than ``min_exceedances`` points have a rank above the level in at least
    one of the two coordinates.

    Returns a list of :class:`TailLevel`.
    """
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {n}")
    x, y = samples[:, j], samples[:, j2]
    levels = [float(u) for u in u_levels]
    if any(not 0 < u < 1 for u in levels):
        raise ValueError("tail levels must lie in (0, 1)")
    ms = [int(math.floor(u * n + 1e-9)) for u in levels]
    point = _lambda_levels(x, y, ms)

    def one(b):
        idx = stream(seed, BOOTSTRAP, b).integers(0, n, n)
        return [lam for lam, _ in _lambda_levels(x[idx], y[idx], ms)]

    workers = resolve_threads(threads)
    if workers == 1:
        boot = [one(b) for b in range(n_boot)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            boot = list(pool.map(one, range(n_boot)))
    boot = np.array(boot).reshape(n_boot, len(ms))

    out = []
    for i, (u, (lam, exc)) in enumerate(zip(levels, point)):
        if exc < min_exceedances:
            warnings.warn(f"level u={u}: only {exc} exceedances for pair ({j + 1}, {j2 + 1}); dropped",
                          InsufficientTail, stacklevel=2)
            continue
        se = float(np.std(boot[:, i], ddof=1)) if n_boot > 1 else math.nan
        out.append(TailLevel(u, lam, se, exc))
    return out


@dataclass
class Record:
    quantity: str
    context: str
    theoretical: float
    empirical: float
    se: float

    @property
    def z(self) -> float:
        diff = self.empirical - self.theoretical
        if self.se > 0:
            return diff / self.se
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)


@dataclass
class VerifyReport:
    records: list[Record] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    COLUMNS = ("quantity", "context", "theoretical", "empirical", "se", "z")

    def add(self, quantity, context, theoretical, empirical, se):
        self.records.append(Record(quantity, context, float(theoretical), float(empirical), float(se)))

    def find(self, quantity, context=None):
        return [r for r in self.records if r.quantity == quantity and (context is None or r.context == context)]

    def max_abs_z(self) -> float:
        return max((abs(r.z) for r in self.records), default=0.0)

    def passed(self, gate: float = Z_GATE) -> bool:
        return not self.failures and all(abs(r.z) <= gate for r in self.records)

    def rows(self):
        for r in self.records:
            yield [r.quantity, r.context, repr(r.theoretical), repr(r.empirical), repr(r.se), repr(r.z)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            w.writerows(self.rows())

    def render(self, gate: float = Z_GATE) -> str:
        lines = [f"{'quantity':<16} {'context':<28} {'theory':>12} {'empirical':>12} {'se':>10} {'z':>8}"]
        for r in self.records:
            flag = "" if abs(r.z) <= gate else "  FAIL"
            lines.append(f"{r.quantity:<16} {r.context:<28} {r.theoretical:12.6f} {r.empirical:12.6f}"
                         f" {r.se:10.6f} {r.z:8.3f}{flag}")
        lines += [f"invariant violated: {f}" for f in self.failures]
        lines += [f"warning: {w}" for w in self.warnings]
        lines.append(f"result: {'PASS' if self.passed(gate) else 'FAIL'} (max |z| = {self.max_abs_z():.3f}, gate {gate:g})")
        return "\n".join(lines)


def _ctx(name, values):
    return f"{name}=(" + ",".join(f"{v:g}" for v in values) + ")"


def verify(model: theory.M5Model, cfg: SimConfig, tau_list, u_levels, threads: int | None = 1,
           tail_samples: int = 100_000, n_boot: int = 200) -> VerifyReport:
    """Compare every closed form against simulation of the process."""
    rep = VerifyReport()
    bm = block_maxima(cfg, threads)
    for tau in tau_list:
        tau = np.asarray(tau, dtype=float)
        ctx = _ctx("tau", tau)
        summary = theory.summarize(model, tau)
        rep.failures += [f"{ctx}: {f}" for f in theory.check_summary(summary)]
        rep.add("limit_prob_dep", ctx, summary.gamma, *empirical_limit_prob(bm, tau, "dep"))
        rep.add("limit_prob_iid", ctx, summary.gamma_hat, *empirical_limit_prob(bm, tau, "iid"))
        rep.add("theta_tau", ctx, summary.theta_tau, *empirical_extremal_index(bm, tau))
    for j in range(model.d):
        tau = np.full(model.d, MARGINAL_TAU)
        tau[j] = 1.0
        rep.add("theta_j", f"j={j + 1}", theory.marginal_extremal_index(model, j),
                *empirical_extremal_index(bm, tau))
    if model.d > 1 and u_levels:
        ys = sample_stationary(model, stream(cfg.seed, TAIL), tail_samples)
        for j, j2 in combinations(range(model.d), 2):
            lam = theory.tail_dependence_hat(model, j, j2)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", InsufficientTail)
                levels = empirical_tail_dependence(ys, j, j2, u_levels, n_boot=n_boot,
                                                   seed=cfg.seed, threads=threads)
            rep.warnings += [str(w.message) for w in caught if issubclass(w.category, InsufficientTail)]
            for lv in levels:
                rep.add("lambda_hat", f"j={j + 1},j2={j2 + 1},u={lv.u:g}", lam, lv.estimate, lv.se)
    return rep
