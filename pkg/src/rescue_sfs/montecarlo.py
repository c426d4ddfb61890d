"""Replicate orchestration, mergeable statistics, goodness-of-fit tests,
and theory-vs-empirics comparison reports.

Replicates are reproducible and worker-count independent: replicate r of a
run with master seed s uses the generator seeded by seed_for_replicate(s, r)
(a numpy SeedSequence spawn), chunk accumulators cover fixed contiguous
replicate ranges, and chunks merge in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from random import Random
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import chi2 as chi2_dist
from scipy.stats import kstest

from rescue_sfs.params import ModelParams
from rescue_sfs.simulator import dense_sfs, extract_sfs, run, window_counts

DEFAULT_CHUNK = 256
GEN_HIST_MAX = 64

SCALAR_FIELDS = ("ancestral_count", "z1_final", "total_mutations")


class IndexMismatchError(ValueError):
    """Empirical and theoretical index sets differ."""


class DegenerateSampleError(ValueError):
    """A goodness-of-fit sample is degenerate (all values equal)."""


def seed_for_replicate(master_seed: int, replicate: int) -> int:
    """Documented split function: 128-bit child seed for one replicate.

    Child r is numpy ``SeedSequence(master_seed, spawn_key=(r,))``; the
    four generated 32-bit words are packed into one integer.
    """
    words = np.random.SeedSequence(master_seed, spawn_key=(replicate,)).generate_state(4)
    out = 0
    for w in words:
        out = (out << 32) | int(w)
    return out


# ---------------------------------------------------------------------------
# Mergeable accumulators
# ---------------------------------------------------------------------------


@dataclass
class VectorStat:
    """Welford accumulator over fixed-length vectors, mergeable pairwise."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def zeros(cls, length: int) -> "VectorStat":
        return cls(0, np.zeros(length), np.zeros(length))

    def update(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "VectorStat") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n = other.n
            self.mean = other.mean.copy()
            self.m2 = other.m2.copy()
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        self.n = n

    def variance(self) -> np.ndarray:
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.n - 1)

    def sem(self) -> np.ndarray:
        return np.sqrt(self.variance() / self.n)


@dataclass(frozen=True)
class ReplicateStats:
    """Per-index sample statistics of one Monte Carlo experiment."""

    indices: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    count: int
    ci_halfwidth: np.ndarray

    @classmethod
    def from_vector_stat(cls, indices: Sequence[float], stat: VectorStat) -> "ReplicateStats":
        idx = np.asarray(indices, dtype=float)
        var = stat.variance()
        ci = 1.96 * np.sqrt(var / stat.n) if stat.n > 1 else np.full_like(var, np.nan)
        return cls(idx, stat.mean.copy(), var, stat.n, ci)

    def sem(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


# ---------------------------------------------------------------------------
# Replicate orchestration
# ---------------------------------------------------------------------------


@dataclass
class SfsAggregate:
    """Merged per-index, per-window, and scalar statistics over replicates.

    Index grids: SFS vectors run over i = 1..i_max; window vectors follow
    the configured ``windows`` lower edges, each window being the open
    interval (x e^(lambda1 t_obs), infinity); scalars follow SCALAR_FIELDS.
    ``onefounder_gen_hist[g]`` counts ancestral resistant cells at
    generation g among roots whose progeny produced exactly one of them
    (the final slot absorbs the tail).
    """

    params: ModelParams
    t_obs: float
    initial: tuple[int, int]
    seed: int
    i_max: int
    windows: tuple[float, ...]
    replicates: int = 0
    s: VectorStat = None  # type: ignore[assignment]
    sbar: VectorStat = None  # type: ignore[assignment]
    sunder: VectorStat = None  # type: ignore[assignment]
    window_s: VectorStat = None  # type: ignore[assignment]
    window_sbar: VectorStat = None  # type: ignore[assignment]
    window_sunder: VectorStat = None  # type: ignore[assignment]
    scalars: VectorStat = None  # type: ignore[assignment]
    onefounder_gen_hist: np.ndarray = field(
        default_factory=lambda: np.zeros(GEN_HIST_MAX + 1, dtype=np.int64)
    )

    def __post_init__(self) -> None:
        if self.s is None:
            self.s = VectorStat.zeros(self.i_max)
            self.sbar = VectorStat.zeros(self.i_max)
            self.sunder = VectorStat.zeros(self.i_max)
            nw = len(self.windows)
            self.window_s = VectorStat.zeros(nw)
            self.window_sbar = VectorStat.zeros(nw)
            self.window_sunder = VectorStat.zeros(nw)
            self.scalars = VectorStat.zeros(len(SCALAR_FIELDS))

    def merge(self, other: "SfsAggregate") -> None:
        self.replicates += other.replicates
        self.s.merge(other.s)
        self.sbar.merge(other.sbar)
        self.sunder.merge(other.sunder)
        self.window_s.merge(other.window_s)
        self.window_sbar.merge(other.window_sbar)
        self.window_sunder.merge(other.window_sunder)
        self.scalars.merge(other.scalars)
        self.onefounder_gen_hist += other.onefounder_gen_hist

    def stats(self, kind: str) -> ReplicateStats:
        """ReplicateStats for one of s/sbar/sunder over i = 1..i_max."""
        stat = {"s": self.s, "sbar": self.sbar, "sunder": self.sunder}[kind]
        return ReplicateStats.from_vector_stat(np.arange(1, self.i_max + 1), stat)

    def window_stats(self, kind: str) -> ReplicateStats:
        stat = {"s": self.window_s, "sbar": self.window_sbar, "sunder": self.window_sunder}[kind]
        return ReplicateStats.from_vector_stat(np.asarray(self.windows, dtype=float), stat)

    def scalar_stat(self, name: str) -> tuple[float, float]:
        """(mean, standard error) of one scalar field."""
        k = SCALAR_FIELDS.index(name)
        return float(self.scalars.mean[k]), float(self.scalars.sem()[k])


def _one_replicate(
    params: ModelParams,
    t_obs: float,
    initial: tuple[int, int],
    rep_seed: int,
    agg: SfsAggregate,
    lambda1: float,
    collect_generation_hist: bool,
) -> None:
    outcome = run(params, t_obs, initial=initial, rng=Random(rep_seed))
    record = extract_sfs(outcome)
    s, sbar, sunder = dense_sfs(record, agg.i_max)
    agg.s.update(np.asarray(s[1:], dtype=float))
    agg.sbar.update(np.asarray(sbar[1:], dtype=float))
    agg.sunder.update(np.asarray(sunder[1:], dtype=float))
    if agg.windows:
        ws, wb, wu = [], [], []
        for x in agg.windows:
            wc = window_counts(record, x, math.inf, lambda1)
            ws.append(wc.total)
            wb.append(wc.resistant_origin)
            wu.append(wc.sensitive_origin)
        agg.window_s.update(np.asarray(ws, dtype=float))
        agg.window_sbar.update(np.asarray(wb, dtype=float))
        agg.window_sunder.update(np.asarray(wu, dtype=float))
    agg.scalars.update(
        np.asarray(
            [len(outcome.ancestral), outcome.z1_final, record.total_mutations()], dtype=float
        )
    )
    if collect_generation_hist and outcome.ancestral:
        per_root: dict[int, list[int]] = {}
        for _t, gen, rid in outcome.ancestral:
            per_root.setdefault(rid, []).append(gen)
        hist = agg.onefounder_gen_hist
        for gens in per_root.values():
            if len(gens) == 1:
                hist[min(gens[0], GEN_HIST_MAX)] += 1
    agg.replicates += 1


def _run_chunk(args) -> SfsAggregate:
    (params, t_obs, initial, master_seed, start, stop, i_max, windows, collect_hist) = args
    lambda1 = params.b1 - params.d1
    agg = SfsAggregate(params, t_obs, initial, master_seed, i_max, tuple(windows))
    for r in range(start, stop):
        _one_replicate(
            params, t_obs, initial, seed_for_replicate(master_seed, r), agg, lambda1, collect_hist
        )
    return agg


def replicate_sfs(
    params: ModelParams,
    t_obs: float,
    replicates: int,
    seed: int,
    initial: tuple[int, int] | None = None,
    i_max: int = 130,
    windows: Sequence[float] = (),
    workers: int = 1,
    collect_generation_hist: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
) -> SfsAggregate:
    """Aggregate ``replicates`` independent runs.

    Deterministic given (params, t_obs, replicates, seed, i_max, windows,
    chunk_size) regardless of ``workers``: chunks cover fixed contiguous
    replicate ranges and merge in order.
    """
    if replicates < 2:
        raise ValueError(f"requires replicates >= 2, got {replicates}")
    if initial is None:
        initial = (params.n_init, 0)
    chunks = [
        (
            params,
            t_obs,
            initial,
            seed,
            start,
            min(start + chunk_size, replicates),
            i_max,
            tuple(windows),
            collect_generation_hist,
        )
        for start in range(0, replicates, chunk_size)
    ]
    total = SfsAggregate(params, t_obs, initial, seed, i_max, tuple(windows))
    if workers <= 1:
        for chunk in chunks:
            total.merge(_run_chunk(chunk))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for agg in pool.map(_run_chunk, chunks):
                total.merge(agg)
    return total


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GofResult:
    statistic: float
    pvalue: float
    dof: int
    bins: int


def gof_discrete(
    samples: Sequence[int], pmf: Callable[[int], float], min_expected: float = 5.0
) -> GofResult:
    """Chi-square test of integer samples (support 1, 2, ...) against a pmf,
    pooling the tail so every bin's expected count is >= min_expected."""
    data = np.asarray(samples, dtype=np.int64)
    if data.size < 2 or data.min() == data.max():
        raise DegenerateSampleError("need a non-degenerate sample")
    if data.min() < 1:
        raise ValueError("samples must be >= 1")
    n = data.size
    g_top = int(data.max())
    counts = np.bincount(data, minlength=g_top + 1)
    probs = np.array([pmf(g) for g in range(1, g_top + 1)])
    # choose the last unpooled bin: expected in every kept bin and in the
    # pooled tail must reach min_expected
    cut = 0
    for g in range(1, g_top + 1):
        if n * probs[g - 1] < min_expected:
            break
        cut = g
    while cut > 0 and n * (1.0 - probs[:cut].sum()) < min_expected:
        cut -= 1
    if cut < 1:
        raise DegenerateSampleError("sample too small for a pooled chi-square test")
    obs = np.append(counts[1 : cut + 1], counts[cut + 1 :].sum()).astype(float)
    exp = np.append(n * probs[:cut], n * (1.0 - probs[:cut].sum()))
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = obs.size - 1
    return GofResult(stat, float(chi2_dist.sf(stat, dof)), dof, obs.size)


def gof_geometric(samples: Sequence[int], x: float, min_expected: float = 5.0) -> GofResult:
    """Chi-square test against the geometric law x (1-x)^(g-1), g >= 1."""
    if not 0 < x < 1:
        raise ValueError(f"requires 0 < x < 1, got {x}")
    return gof_discrete(samples, lambda g: x * (1.0 - x) ** (g - 1), min_expected)


def gof_exponential(samples: Sequence[float], rate: float) -> GofResult:
    """One-sample Kolmogorov-Smirnov test against Exponential(rate)."""
    data = np.asarray(samples, dtype=float)
    if data.size < 2 or data.min() == data.max():
        raise DegenerateSampleError("need a non-degenerate sample")
    if rate <= 0:
        raise ValueError(f"requires rate > 0, got {rate}")
    res = kstest(data, "expon", args=(0.0, 1.0 / rate))
    return GofResult(float(res.statistic), float(res.pvalue), data.size, 0)


def gof_pooled_counts(
    observed: Sequence[float], expected: Sequence[float], min_expected: float = 5.0
) -> GofResult:
    """Chi-square on categorical counts, pooling low-expectation cells into
    the largest cell (used for the transition-rate table)."""
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape:
        raise IndexMismatchError("observed and expected shapes differ")
    big = int(np.argmax(exp))
    small = (exp < min_expected) & (np.arange(exp.size) != big)
    keep = ~small
    o = obs[keep].copy()
    e = exp[keep].copy()
    big_pos = int(np.flatnonzero(np.flatnonzero(keep) == big)[0])
    o[big_pos] += obs[small].sum()
    e[big_pos] += exp[small].sum()
    stat = float(((o - e) ** 2 / e).sum())
    dof = o.size - 1
    return GofResult(stat, float(chi2_dist.sf(stat, dof)), dof, o.size)


# ---------------------------------------------------------------------------
# Comparison reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    """Per-index empirics-vs-theory comparison with a pass/fail gate."""

    indices: np.ndarray
    empirical_mean: np.ndarray
    empirical_sem: np.ndarray
    theory: np.ndarray
    z_scores: np.ndarray
    rel_gaps: np.ndarray
    passed: np.ndarray
    mode: str
    threshold: float
    metadata: dict

    @property
    def pass_fraction(self) -> float:
        return float(np.mean(self.passed))

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def rows(self):
        for k in range(self.indices.size):
            yield (
                float(self.indices[k]),
                float(self.empirical_mean[k]),
                float(self.empirical_sem[k]),
                float(self.theory[k]),
                float(self.z_scores[k]),
                float(self.rel_gaps[k]),
                bool(self.passed[k]),
            )

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "threshold": self.threshold,
            "pass_fraction": self.pass_fraction,
            "all_passed": self.all_passed,
            "metadata": self.metadata,
            "rows": [
                {
                    "index": r[0],
                    "empirical_mean": r[1],
                    "empirical_sem": r[2],
                    "theory": r[3],
                    "z": r[4],
                    "rel_gap": r[5],
                    "passed": r[6],
                }
                for r in self.rows()
            ],
        }


def compare(
    stats: ReplicateStats,
    theory: Mapping[float, float] | Sequence[float],
    mode: str = "z-score",
    threshold: float = 3.0,
    metadata: dict | None = None,
) -> ComparisonReport:
    """Compare per-index empirical means against theory values.

    ``theory`` is either a mapping index -> value whose key set must equal
    the stats index set, or a sequence aligned with it.  ``mode`` is
    ``z-score`` (|mean - theory| <= threshold * SEM) or ``relative``
    (|mean - theory| <= threshold * |theory|).
    """
    if mode not in ("z-score", "relative"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(theory, Mapping):
        keys = sorted(theory)
        if len(keys) != stats.indices.size or any(
            not math.isclose(a, b) for a, b in zip(keys, stats.indices)
        ):
            raise IndexMismatchError(
                f"theory indices {keys} do not match empirical indices {stats.indices.tolist()}"
            )
        tvals = np.asarray([theory[k] for k in keys], dtype=float)
    else:
        tvals = np.asarray(theory, dtype=float)
        if tvals.size != stats.indices.size:
            raise IndexMismatchError(
                f"theory has {tvals.size} entries, empirics {stats.indices.size}"
            )
    sem = stats.sem()
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sem > 0, (stats.mean - tvals) / sem, np.inf * np.sign(stats.mean - tvals))
        z = np.where(stats.mean == tvals, 0.0, z)
        rel = np.where(tvals != 0, np.abs(stats.mean - tvals) / np.abs(tvals), np.inf)
        rel = np.where(stats.mean == tvals, 0.0, rel)
    passed = np.abs(z) <= threshold if mode == "z-score" else rel <= threshold
    return ComparisonReport(
        indices=stats.indices.copy(),
        empirical_mean=stats.mean.copy(),
        empirical_sem=sem,
        theory=tvals,
        z_scores=z,
        rel_gaps=rel,
        passed=passed,
        mode=mode,
        threshold=threshold,
        metadata=metadata or {},
    )
