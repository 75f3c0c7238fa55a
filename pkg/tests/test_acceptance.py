"""The nine acceptance criteria, one test each.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary, then asserts.
"""
import csv
import io
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import example_alpha, random_signature, record_acceptance
from m5x import theory as T
from m5x.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VERIFY, main
from m5x.copulas import Comonotone, Independence, Logistic, check_plod, is_max_stable
from m5x.estimate import empirical_extremal_index, empirical_limit_prob, empirical_tail_dependence
from m5x.signatures import SignatureArray
from m5x.simulate import SimConfig, block_maxima, sample_stationary, stream

ROOT = Path(__file__).resolve().parents[1]
GATE = 4.0


def random_sigs(seed=2024, count=25):
    rng = np.random.default_rng(seed)
    return [random_signature(rng) for _ in range(count)], rng


# --- 1. special-case algebra ----------------------------------------------------------


def test_criterion_1_special_case_algebra():
    t0 = time.perf_counter()
    sigs, rng = random_sigs()
    worst = 0.0
    for sig in sigs:
        tau = rng.uniform(0.1, 3.0, sig.d)
        alpha = 1.0 + 4.0 * rng.random()
        com = T.limit_block_maxima(T.M5Model(sig, Comonotone(sig.d)), tau)
        ind = T.limit_block_maxima(T.M5Model(sig, Independence(sig.d)), tau)
        lgt = T.extremal_index(T.M5Model(sig, Logistic(sig.d, alpha)), tau)
        worst = max(worst,
                    abs(com - T.smith_weissman_limit(sig, tau)),
                    abs(ind - T.martins_ferreira_limit(sig, tau)),
                    abs(lgt - T.logistic_extremal_index(sig, alpha, tau)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    record_acceptance(1, ok, f"max deviation {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 1s)")
    assert ok


# --- 2. cross-identities between the two tail coefficients ----------------------------


def test_criterion_2_tail_identities():
    t0 = time.perf_counter()
    sigs, rng = random_sigs()
    worst = 0.0
    for i, sig in enumerate(sigs):
        c = [Comonotone(sig.d), Independence(sig.d), Logistic(sig.d, 1.0 + 4.0 * rng.random())][i % 3]
        m = T.M5Model(sig, c)
        for j in range(sig.d):
            for j2 in range(j + 1, sig.d):
                for lhs, rhs in T.tail_dependence_relation(m, j, j2):
                    worst = max(worst, abs(lhs - rhs))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    record_acceptance(2, ok, f"max |lhs - rhs| {worst:.2e} (tol 1e-10), {elapsed:.2f}s (< 1s)")
    assert ok


# --- 3. extremal coefficient vs tail dependence ---------------------------------------


def test_criterion_3_eps_lambda_duality():
    sigs, rng = random_sigs()
    worst, count = 0.0, 0
    for i, sig in enumerate(sigs):
        c = [Comonotone(sig.d), Independence(sig.d), Logistic(sig.d, 1.0 + 4.0 * rng.random())][i % 3]
        m = T.M5Model(sig, c)
        for j in range(sig.d):
            for j2 in range(j + 1, sig.d):
                sub = m.pair(j, j2)
                worst = max(worst,
                            abs(T.extremal_coefficient(sub, "hat") - (2 - T.tail_dependence_hat(m, j, j2))),
                            abs(T.extremal_coefficient(sub, "limiting") - (2 - T.tail_dependence_C(m, j, j2))))
                count += 1
    ok = worst <= 1e-12
    record_acceptance(3, ok, f"{count} bivariate sub-models, max deviation {worst:.2e} (tol 1e-12)")
    assert ok


# --- 4. copula laws ---------------------------------------------------------------------


def _law_violations(fn, d, grid, tol_mono=1e-13, tol_margin=1e-12, tol_ms=1e-10, tol_plod=1e-12):
    bad = []
    base = np.asarray(fn(grid), dtype=float)
    if np.any((base < -tol_margin) | (base > 1 + tol_margin)):
        bad.append("range")
    ts = np.linspace(0, 1, 11)
    for j in range(d):
        pts = np.ones((len(ts), d))
        pts[:, j] = ts
        if np.max(np.abs(np.asarray(fn(pts)) - ts)) > tol_margin:
            bad.append(f"margin {j}")
        zero = grid.copy()
        zero[:, j] = 0.0
        if np.max(np.abs(np.asarray(fn(zero)))) > 0:
            bad.append(f"grounded {j}")
        bumped = grid.copy()
        bumped[:, j] = np.minimum(1, bumped[:, j] + 0.05)
        if np.any(np.asarray(fn(bumped)) < base - tol_mono):
            bad.append(f"monotone {j}")
    if np.any(base < grid.prod(axis=1) - tol_plod):
        bad.append("plod")
    for n in (2, 3, 10):
        if np.max(np.abs(np.asarray(fn(grid ** (1 / n))) ** n - base)) > tol_ms:
            bad.append(f"max-stable n={n}")
    return bad


def test_criterion_4_copula_laws():
    t0 = time.perf_counter()
    problems = []
    rng = np.random.default_rng(4)
    for d in (2, 3):
        grid = rng.uniform(1e-3, 1, (100, d))
        for c in (Independence(d), Comonotone(d), Logistic(d, 2.5)):
            problems += [f"{c!r}: {p}" for p in _law_violations(c.evaluate, d, grid)]
            ok, _ = check_plod(c, grid)
            ok_ms, _ = is_max_stable(c, 5, grid)
            if not (ok and ok_ms):
                problems.append(f"{c!r}: module checks")
            sig = random_signature(rng, d=d)
            m = T.M5Model(sig, c)
            for name, fn in (("C_hat", lambda u, m=m: T.copula_hat(m, u)),
                             ("C", lambda u, m=m: T.copula_limit_C(m, u))):
                problems += [f"{name}[{c!r}]: {p}" for p in _law_violations(fn, d, grid)]
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 5.0
    record_acceptance(4, ok, f"{len(problems)} violations {problems[:3]}, {elapsed:.2f}s (< 5s)")
    assert ok


# --- 5 and 6. Monte Carlo block maxima -----------------------------------------------------


@pytest.fixture(scope="module")
def example_run():
    m = T.M5Model(SignatureArray(example_alpha()), Comonotone(2))
    t0 = time.perf_counter()
    bm = block_maxima(SimConfig(m, n=1000, reps=10_000, seed=42), threads=0)
    return m, bm, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_5_block_maxima_limit(example_run):
    m, bm, elapsed = example_run
    target = math.exp(-0.9)
    assert T.limit_block_maxima(m, [1, 1]) == pytest.approx(target, rel=1e-15)
    p, se = empirical_limit_prob(bm, [1, 1], "dep")
    z = (p - target) / se
    ok = abs(z) <= GATE
    record_acceptance(5, ok, f"P = {p:.5f} +- {se:.5f} vs exp(-0.9) = {target:.5f}, z = {z:+.2f}, "
                             f"simulation {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_6_extremal_index(example_run):
    _, bm, _ = example_run
    parts = []
    ok = True
    for tau, target in (([1, 1], 0.9 / 1.4), ([1, 1e-6], 0.7), ([1e-6, 1], 0.8)):
        est, se = empirical_extremal_index(bm, tau)
        z = (est - target) / se
        ok &= abs(z) <= GATE
        parts.append(f"tau={tau}: {est:.4f} vs {target:.6f} (z = {z:+.2f})")
    record_acceptance(6, ok, "; ".join(parts))
    assert ok


# --- 7. Monte Carlo tail dependence -------------------------------------------------------


def _disjoint():
    a = np.zeros((2, 1, 2))
    a[0, 0, 0] = a[1, 0, 1] = 1.0
    return T.M5Model(SignatureArray(a), Independence(2))


def _identical():
    a = np.zeros((2, 2, 2))
    a[0, :, 0] = a[0, :, 1] = [0.3, 0.2]
    a[1, :, 0] = a[1, :, 1] = [0.5, 0.0]
    return T.M5Model(SignatureArray(a), Comonotone(2))


@pytest.mark.slow
def test_criterion_7_tail_dependence():
    cases = [
        ("comonotone example", T.M5Model(SignatureArray(example_alpha()), Comonotone(2)), 0.6),
        ("disjoint support", _disjoint(), 0.0),
        ("identical columns", _identical(), 1.0),
    ]
    ok, parts = True, []
    for i, (name, m, target) in enumerate(cases):
        assert T.tail_dependence_hat(m, 0, 1) == pytest.approx(target, abs=1e-15)
        ys = sample_stationary(m, stream(70 + i, 2), 100_000)
        (lv,) = empirical_tail_dependence(ys, 0, 1, [0.99], n_boot=200, seed=70 + i, threads=0)
        diff = lv.estimate - target
        good = abs(diff) <= GATE * lv.se if lv.se > 0 else diff == 0
        ok &= good
        parts.append(f"{name}: {lv.estimate:.4f} +- {lv.se:.4f} vs {target}")
    record_acceptance(7, ok, "; ".join(parts))
    assert ok


# --- 8. both signs of lambda_C - lambda_hat ----------------------------------------------------


def _frac_sig(col1, col2):
    a = np.zeros((2, 2, 2))
    a[:, :, 0] = [[float(x) for x in row] for row in col1]
    a[:, :, 1] = [[float(x) for x in row] for row in col2]
    return SignatureArray(a)


def _exact_difference(col1, col2):
    # rational oracle of lambda_C - lambda_hat for a comonotone innovation copula
    th1 = sum(max(row) for row in col1)
    th2 = sum(max(row) for row in col2)
    lam_hat = 2 - sum(max(col1[l][k], col2[l][k]) for l in range(2) for k in range(2))
    lam_c = 2 - sum(max(max(col1[l]) / th1, max(col2[l]) / th2) for l in range(2))
    return lam_c - lam_hat


F = Fraction
# found by a direct search over two-pattern, two-lag signatures
POSITIVE = ([[F(0), F(1, 3)], [F(2, 9), F(4, 9)]], [[F(2, 7), F(2, 7)], [F(3, 14), F(3, 14)]])
NEGATIVE = ([[F(0), F(0)], [F(4, 7), F(3, 7)]], [[F(0), F(3, 11)], [F(4, 11), F(4, 11)]])


def test_criterion_8_both_signs():
    ok, parts = True, []
    for name, (col1, col2), sign in (("positive", POSITIVE, 1), ("negative", NEGATIVE, -1)):
        sig = _frac_sig(col1, col2)
        m = T.M5Model(sig, Comonotone(2))
        diff = T.tail_dependence_C(m, 0, 1) - T.tail_dependence_hat(m, 0, 1)
        margin = T.lambda_comparison_margin(sig, 0, 1)
        exact = _exact_difference(col1, col2)
        good = (np.sign(diff) == sign and np.sign(margin) == sign
                and abs(diff - margin) <= 1e-12 and abs(diff - float(exact)) <= 1e-12)
        ok &= good
        parts.append(f"{name}: lambda_C - lambda_hat = {diff:+.6f} (exact {exact}), condition {margin:+.6f}")
    record_acceptance(8, ok, "; ".join(parts))
    assert ok


# --- 9. determinism and exit codes ---------------------------------------------------------


@pytest.mark.slow
def test_criterion_9_determinism_and_exit_codes(tmp_path, monkeypatch):
    import m5x.cli as cli
    from m5x.estimate import VerifyReport

    config = ROOT / "configs" / "comonotone_d2.yaml"
    codes, blobs = [], []
    for name in ("a", "b"):
        out = tmp_path / name
        codes.append(main(["--config", str(config), "--command", "verify", "--out", str(out), "--threads", "0"]))
        blobs.append(((out / "verify.csv").read_bytes(), (out / "verify_report.txt").read_bytes()))
    identical = blobs[0] == blobs[1]
    rows = list(csv.DictReader(io.StringIO(blobs[0][0].decode())))
    theta = [r for r in rows if (r["quantity"], r["context"]) == ("theta_tau", "tau=(1,1)")]
    theta_ok = len(theta) == 1 and float(theta[0]["theoretical"]) == pytest.approx(0.642857, abs=1e-6)

    bad = tmp_path / "bad.yaml"
    bad.write_text(config.read_text().replace("[1, 0, 1, 0.5]", "[1, 0, 1, -0.5]"))
    code_config = main(["--config", str(bad)])
    degenerate = tmp_path / "degenerate.yaml"
    degenerate.write_text(config.read_text().replace("sim: {n: 1000, reps: 10000, seed: 42}",
                                                     "sim: {n: 5, reps: 100}")
                          .replace("tau_list: [[1.0, 1.0], [2.0, 0.5]]", "tau_list: [[100.0, 100.0]]"))
    code_runtime = main(["--config", str(degenerate), "--command", "verify", "--out", str(tmp_path / "d")])

    def failing(*a, **k):
        rep = VerifyReport()
        rep.add("theta_tau", "tau=(1,1)", 0.5, 0.9, 0.01)
        return rep

    monkeypatch.setattr(cli, "verify", failing)
    code_verify = main(["--config", str(config), "--command", "verify", "--out", str(tmp_path / "f")])

    ok = (identical and theta_ok and codes == [EXIT_OK, EXIT_OK] and code_config == EXIT_CONFIG
          and code_runtime == EXIT_RUNTIME and code_verify == EXIT_VERIFY)
    record_acceptance(9, ok, f"byte-identical={identical}, verify exits {codes}, theta record ok={theta_ok}, "
                             f"config/runtime/verify-failure exits {code_config}/{code_runtime}/{code_verify}")
    assert ok
