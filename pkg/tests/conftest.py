import numpy as np
import pytest

from m5x.copulas import Comonotone, Independence, Logistic
from m5x.signatures import SignatureArray
from m5x.theory import M5Model


def example_alpha():
    # d=2, L=2, k in {0, 1}; column sums 0.5+0.3+0.2+0.0 and 0.4+0.1+0.1+0.4
    a = np.zeros((2, 2, 2))
    a[:, :, 0] = [[0.5, 0.3], [0.2, 0.0]]
    a[:, :, 1] = [[0.4, 0.1], [0.1, 0.4]]
    return a


def random_signature(rng, d=None, L=None, window=None, sparsity=0.3):
    """Random valid signature with d in {2,3}, L <= 4, window <= 5."""
    d = d or int(rng.integers(2, 4))
    L = L or int(rng.integers(1, 5))
    window = window or int(rng.integers(1, 6))
    while True:
        a = rng.random((L, window, d)) * (rng.random((L, window, d)) > sparsity)
        if np.all(a.sum(axis=(0, 1)) > 0) and np.all(a.reshape(L, -1).max(axis=1) > 0):
            break
    k_min = int(rng.integers(-2, 2))
    return SignatureArray(a / a.sum(axis=(0, 1)), k_min)


def random_models(seed, count, kinds=("comonotone", "independence", "logistic")):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        sig = random_signature(rng)
        kind = kinds[i % len(kinds)]
        if kind == "comonotone":
            c = Comonotone(sig.d)
        elif kind == "independence":
            c = Independence(sig.d)
        else:
            c = Logistic(sig.d, 1.0 + 4.0 * rng.random())
        out.append(M5Model(sig, c))
    return out


@pytest.fixture
def example_sig():
    return SignatureArray(example_alpha())


@pytest.fixture
def single_sig():
    return SignatureArray(np.ones((1, 1, 2)))


@pytest.fixture
def comonotone_model(example_sig):
    return M5Model(example_sig, Comonotone(2))


# acceptance criterion id -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def record_acceptance(cid, ok, detail):
    ACCEPTANCE[cid] = (bool(ok), detail)
    print(f"criterion {cid}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
