"""Sample paths and block maxima of M5 processes.

Each replication draws from its own random stream derived from
``(seed, purpose, replication)``, so results do not depend on how
replications are scheduled across threads.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .theory import M5Model

# stream purposes
PATH, IID, TAIL, BOOTSTRAP = 0, 1, 2, 3


class IndexCoverage(ValueError):
    pass


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, index)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("M5X_THREADS", "1") or 1)
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


@dataclass(frozen=True)
class SimConfig:
    model: M5Model
    n: int = 1000
    reps: int = 10000
    seed: int = 42

    def __post_init__(self):
        if self.n < 1 or self.reps < 1:
            raise ValueError(f"need n >= 1 and reps >= 1, got n={self.n}, reps={self.reps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass
class BlockMaxima:
    """Componentwise block maxima for all replications.

    ``m_dep[r]`` is the maximum of one path of length ``n``; ``m_iid[r]`` is
    the maximum of ``n`` independent draws from the stationary law.
    """

    m_dep: np.ndarray
    m_iid: np.ndarray
    n: int

    def __len__(self):
        return len(self.m_dep)

    def __getitem__(self, r):
        return self.m_dep[r], self.m_iid[r]


def gen_innovations(m: M5Model, n: int, rng: np.random.Generator) -> np.ndarray:
    """Innovations ``Z[l, i, j]`` for times ``1 - k_max + i``, covering ``Y_1 .. Y_n``.

    Shape is ``(L, n + k_max - k_min, d)``.
    """
    sig = m.sig
    return m.cstar.sample(rng, (sig.L, n + sig.window - 1))


def build_path(m: M5Model, innov: np.ndarray) -> np.ndarray:
    """``Y[t, j] = max_{l,k} alpha[l, k, j] * Z[l, t - k, j]`` for t = 1..n.

    Returns an ``(n, d)`` array; ``n`` is implied by the innovation length.
    """
    sig = m.sig
    K = sig.window
    if innov.ndim != 3 or innov.shape[0] != sig.L or innov.shape[2] != sig.d:
        raise IndexCoverage(f"innovations of shape {innov.shape} do not match {sig!r}")
    n = innov.shape[1] - K + 1
    if n < 1:
        raise IndexCoverage(f"need at least {K} innovation times, got {innov.shape[1]}")
    y = np.zeros((n, sig.d))
    for ki in range(K):
        # lag k = k_min + ki reads time index t0 + (K - 1 - ki)
        start = K - 1 - ki
        weighted = sig.alpha[:, ki, None, :] * innov[:, start:start + n, :]
        np.maximum(y, weighted.max(axis=0), out=y)
    return y


def sample_stationary(m: M5Model, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of ``Y`` from the stationary law, shape ``(size, d)``.

    Each draw uses its own full set of innovations.
    """
    sig = m.sig
    z = m.cstar.sample(rng, (size, sig.L, sig.window))
    return (sig.alpha * z).max(axis=(1, 2))


def simulate_path(m: M5Model, n: int, seed: int, rep: int) -> np.ndarray:
    """The path used for replication ``rep`` by :func:`block_maxima`."""
    return build_path(m, gen_innovations(m, n, stream(seed, PATH, rep)))


def _replicate(cfg: SimConfig, reps, m_dep, m_iid):
    for r in reps:
        m_dep[r] = simulate_path(cfg.model, cfg.n, cfg.seed, r).max(axis=0)
        m_iid[r] = sample_stationary(cfg.model, stream(cfg.seed, IID, r), cfg.n).max(axis=0)


def block_maxima(cfg: SimConfig, threads: int | None = 1) -> BlockMaxima:
    """Dependent and i.i.d. block maxima for ``cfg.reps`` replications."""
    d = cfg.model.d
    m_dep = np.empty((cfg.reps, d))
    m_iid = np.empty((cfg.reps, d))
    workers = resolve_threads(threads)
    if workers == 1:
        _replicate(cfg, range(cfg.reps), m_dep, m_iid)
    else:
        chunks = np.array_split(np.arange(cfg.reps), min(cfg.reps, 4 * workers))
        with ThreadPoolExecutor(workers) as pool:
            for f in [pool.submit(_replicate, cfg, c, m_dep, m_iid) for c in chunks]:
                f.result()
    return BlockMaxima(m_dep, m_iid, cfg.n)


def write_paths_csv(cfg: SimConfig, path, n_paths: int = 1) -> None:
    """Write the first ``n_paths`` replication paths as ``rep,t,j,value`` rows (1-based)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "t", "j", "value"])
        for r in range(min(n_paths, cfg.reps)):
            y = simulate_path(cfg.model, cfg.n, cfg.seed, r)
            for t, row in enumerate(y, start=1):
                for j, v in enumerate(row, start=1):
                    w.writerow([r + 1, t, j, repr(float(v))])


def write_maxima_csv(bm: BlockMaxima, path) -> None:
    """Write block maxima as ``rep,kind,j,value`` rows with kind ``dep`` or ``iid``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "kind", "j", "value"])
        for r in range(len(bm)):
            for kind, arr in (("dep", bm.m_dep), ("iid", bm.m_iid)):
                for j, v in enumerate(arr[r], start=1):
                    w.writerow([r + 1, kind, j, repr(float(v))])
