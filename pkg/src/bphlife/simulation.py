"""Exact simulation of the couple chain, used as an independent oracle.

Paths are simulated in fixed-size chunks, each with its own random stream
derived from ``(seed, chunk index)``. Path ``k`` is therefore the same
whatever the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from .model import BlockGenerator

__all__ = [
    "CouplePath",
    "CouplePaths",
    "MonteCarloEstimate",
    "simulate_paths",
    "estimate_functional",
    "survival_indicator",
    "discounted_joint_annuity",
    "simultaneous_indicator",
    "both_alive_indicator",
    "estimate_correlation",
]

CHUNK = 1 << 16
ABSORBED = -1


class CouplePath(NamedTuple):
    t_x: float
    t_y: float
    simultaneous: bool
    husband_bereaved: bool
    wife_bereaved: bool


@dataclass(frozen=True, eq=False)
class CouplePaths:
    """Simulated death times, one entry per path."""

    t_x: np.ndarray
    t_y: np.ndarray
    simultaneous: np.ndarray
    husband_bereaved: np.ndarray
    wife_bereaved: np.ndarray
    seed: int

    def __len__(self) -> int:
        return self.t_x.size

    def __getitem__(self, k: int) -> CouplePath:
        return CouplePath(float(self.t_x[k]), float(self.t_y[k]), bool(self.simultaneous[k]),
                          bool(self.husband_bereaved[k]), bool(self.wife_bereaved[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def head(self, m: int) -> CouplePaths:
        """The first ``m`` paths (all of them if fewer)."""
        return CouplePaths(self.t_x[:m], self.t_y[:m], self.simultaneous[:m],
                           self.husband_bereaved[:m], self.wife_bereaved[:m], self.seed)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float
    n_paths: int
    seed: int | None

    def test_se(self, reference: float, binomial: bool = False) -> float:
        """Standard error used when comparing against ``reference``.

        For a proportion the null-hypothesis binomial error is a floor, so
        a rare event with no observed hits is not an automatic failure.
        """
        if not binomial:
            return self.std_error
        null = math.sqrt(max(reference * (1.0 - reference), 0.0) / self.n_paths)
        return max(self.std_error, null)

    def z_score(self, reference: float, binomial: bool = False) -> float:
        diff = self.value - reference
        se = self.test_se(reference, binomial)
        if se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / se

    def agrees(self, reference: float, n_se: float = 4.0, binomial: bool = False) -> bool:
        return abs(self.z_score(reference, binomial)) <= n_se


class _JumpTable:
    """Per-state total rates and cumulative jump probabilities."""

    def __init__(self, gen: BlockGenerator):
        Q = gen.Q.tocsr()
        dim = gen.dim
        out_degree = np.diff(Q.indptr) - 1 + (gen.q > 0)  # drop diagonal, add exit
        width = int(out_degree.max())
        self.total = -Q.diagonal()
        self.targets = np.full((dim, width), ABSORBED, dtype=np.int64)
        self.cum = np.ones((dim, width))
        for s in range(dim):
            lo, hi = Q.indptr[s], Q.indptr[s + 1]
            cols, rates = Q.indices[lo:hi], Q.data[lo:hi]
            keep = cols != s
            cols, rates = list(cols[keep]), list(rates[keep])
            if gen.q[s] > 0:
                cols.append(ABSORBED)
                rates.append(gen.q[s])
            rates = np.asarray(rates)
            probs = np.cumsum(rates) / rates.sum()
            probs[-1] = 1.0
            self.targets[s, : len(cols)] = cols
            self.cum[s, : len(cols)] = probs
            # pad so a uniform draw never selects an unused slot
            self.cum[s, len(cols):] = 2.0
            self.targets[s, len(cols):] = cols[-1]
        L = gen.layout
        self.region = np.empty(dim, dtype=np.int8)
        self.region[L.joint_slice] = 0
        self.region[L.widower_slice] = 1
        self.region[L.widow_slice] = 2


def _simulate_chunk(table: _JumpTable, start: int, size: int, seed: int, chunk: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    t_x = np.full(size, np.nan)
    t_y = np.full(size, np.nan)
    simultaneous = np.zeros(size, dtype=bool)

    idx = np.arange(size)
    state = np.full(size, start, dtype=np.int64)
    clock = np.zeros(size)
    while idx.size:
        hold = rng.standard_exponential(idx.size) / table.total[state]
        clock += hold
        u = rng.random(idx.size)
        slot = (u[:, None] >= table.cum[state]).sum(axis=1)
        nxt = table.targets[state, slot]

        src = table.region[state]
        dst = np.where(nxt == ABSORBED, -1, table.region[np.maximum(nxt, 0)])
        # wife dies: joint -> widower, or widow -> absorbed
        wife_dies = ((src == 0) & (dst == 1)) | ((src == 2) & (dst == -1))
        husband_dies = ((src == 0) & (dst == 2)) | ((src == 1) & (dst == -1))
        shock = (src == 0) & (dst == -1)
        t_y[idx[wife_dies | shock]] = clock[wife_dies | shock]
        t_x[idx[husband_dies | shock]] = clock[husband_dies | shock]
        simultaneous[idx[shock]] = True

        alive = nxt != ABSORBED
        idx, state, clock = idx[alive], nxt[alive], clock[alive]
    return t_x, t_y, simultaneous


def simulate_paths(gen: BlockGenerator, n_paths: int, seed: int, workers: int = 1) -> CouplePaths:
    """Simulate ``n_paths`` independent couples from the start vector of ``gen``."""
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    start = int(np.flatnonzero(gen.pi)[0])
    if not np.isclose(gen.pi[start], 1.0):
        raise ValueError("simulation requires a point-mass start vector")
    table = _JumpTable(gen)
    sizes = [min(CHUNK, n_paths - lo) for lo in range(0, n_paths, CHUNK)]
    jobs = [(table, start, size, seed, c) for c, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _simulate_chunk(*a), jobs))
    else:
        parts = [_simulate_chunk(*a) for a in jobs]
    t_x = np.concatenate([p[0] for p in parts])
    t_y = np.concatenate([p[1] for p in parts])
    simultaneous = np.concatenate([p[2] for p in parts])
    return CouplePaths(
        t_x=t_x,
        t_y=t_y,
        simultaneous=simultaneous,
        husband_bereaved=(t_y < t_x),
        wife_bereaved=(t_x < t_y),
        seed=seed,
    )


Functional = Callable[[CouplePaths], np.ndarray]


def survival_indicator(tx_deadline: float, ty_deadline: float) -> Functional:
    return lambda paths: ((paths.t_x > tx_deadline) & (paths.t_y > ty_deadline)).astype(float)


def both_alive_indicator(t: float) -> Functional:
    return survival_indicator(t, t)


def discounted_joint_annuity(delta: float) -> Functional:
    """Present value of 1 per year paid continuously until the first death."""
    return lambda paths: -np.expm1(-delta * np.minimum(paths.t_x, paths.t_y)) / delta


def simultaneous_indicator(paths: CouplePaths) -> np.ndarray:
    return paths.simultaneous.astype(float)


def estimate_functional(paths: CouplePaths, functional: Functional) -> MonteCarloEstimate:
    values = np.asarray(functional(paths), dtype=float)
    n = values.size
    if n == 0:
        raise ValueError("no paths to average")
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloEstimate(value=float(values.mean()), std_error=se, n_paths=n, seed=paths.seed)


def estimate_correlation(paths: CouplePaths, n_boot: int = 200, seed: int = 0,
                         kendall_sample: int | None = 20_000) -> dict[str, MonteCarloEstimate]:
    """Pearson and Kendall correlation of the two death times with bootstrap errors.

    Kendall's tau is computed on the first ``kendall_sample`` paths (all
    of them when ``None``) to keep the bootstrap affordable.
    """
    n = len(paths)
    if n < 1000:
        raise ValueError(f"need at least 1000 paths, got {n}")
    x, y = paths.t_x, paths.t_y
    if np.std(x) == 0 or np.std(y) == 0:
        raise ValueError("degenerate sample: a death time has zero variance")
    rng = np.random.default_rng(seed)

    pearson = float(np.corrcoef(x, y)[0, 1])
    boots = np.empty(n_boot)
    for b in range(n_boot):
        k = rng.integers(0, n, n)
        boots[b] = np.corrcoef(x[k], y[k])[0, 1]

    m = n if kendall_sample is None else min(n, kendall_sample)
    xs, ys = x[:m], y[:m]
    kendall = float(stats.kendalltau(xs, ys).statistic)
    kboots = np.empty(n_boot)
    for b in range(n_boot):
        k = rng.integers(0, m, m)
        kboots[b] = stats.kendalltau(xs[k], ys[k]).statistic
    return {
        "pearson": MonteCarloEstimate(pearson, float(boots.std(ddof=1)), n, paths.seed),
        "kendall": MonteCarloEstimate(kendall, float(kboots.std(ddof=1)), m, paths.seed),
    }
