"""Exact event-driven simulation of the two-type branching process with
genealogy and per-edge neutral mutation counts.

Divisions are simulated at the mechanism level: a sensitive division picks
two daughters, each independently resistant with probability gamma_n and
each receiving an independent neutral-mutation count of mean omega/2.  The
induced aggregate transition rates equal the five-row table

    (z0, z1) -> (z0+1, z1)    at (1-gamma_n)^2 b0 z0
    (z0, z1) -> (z0-1, z1)    at d0 z0
    (z0, z1) -> (z0,   z1+1)  at 2 gamma_n (1-gamma_n) b0 z0 + b1 z1
    (z0, z1) -> (z0-1, z1+2)  at gamma_n^2 b0 z0
    (z0, z1) -> (z0,   z1-1)  at d1 z1

which the simulator can verify per event in debug mode.

Mutations are stored as counts on genealogy edges; the site frequency
spectrum is extracted in one bottom-up pass counting living resistant
descendants per edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from rescue_sfs.params import ModelParams

SENSITIVE = 0
RESISTANT = 1

ORIGIN_ROOT = 0
ORIGIN_SENSITIVE_DIVISION = 1
ORIGIN_RESISTANT_DIVISION = 2

STATUS_ALIVE = 0
STATUS_DEAD = 1
STATUS_DIVIDED = 2

# rows of the aggregate transition table, keyed by (dz0, dz1)
EVENT_CLASSES = ((1, 0), (-1, 0), (0, 1), (-1, 2), (0, -1))
_CLASS_INDEX = {delta: k for k, delta in enumerate(EVENT_CLASSES)}


class PopulationCapError(RuntimeError):
    """The genealogy exceeded the configured safety cap."""


@dataclass
class SimOutcome:
    """Full genealogy forest of one run plus run-level counters.

    Node arrays are parallel; parents always precede children.  ``status``
    is the node's state at the observation time.
    """

    params: ModelParams
    t_obs: float
    parent: list[int]
    cell_type: list[int]
    origin: list[int]
    edge_mutations: list[int]
    birth_time: list[float]
    generation: list[int]
    root_id: list[int]
    status: list[int]
    n_roots: int
    z0_final: int
    z1_final: int
    event_counts: list[int]
    expected_class_weights: list[float] | None
    ancestral: list[tuple[float, int, int]]  # (birth time, generation, root id)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def alive_counts(self) -> tuple[int, int]:
        """(sensitive, resistant) alive counts recomputed from the forest."""
        z0 = z1 = 0
        for status, typ in zip(self.status, self.cell_type):
            if status == STATUS_ALIVE:
                if typ == SENSITIVE:
                    z0 += 1
                else:
                    z1 += 1
        return z0, z1


@dataclass
class SfsRecord:
    """Sparse site frequency spectrum with origin split.

    ``s[i]`` counts mutations carried by exactly i living resistant cells;
    ``s = s_resistant_origin + s_sensitive_origin`` index-wise.
    """

    s: dict[int, int]
    s_resistant_origin: dict[int, int]
    s_sensitive_origin: dict[int, int]
    t_obs: float
    z1_final: int

    def validate(self) -> None:
        keys = set(self.s) | set(self.s_resistant_origin) | set(self.s_sensitive_origin)
        for i in keys:
            if i < 1:
                raise ValueError(f"SFS index {i} < 1")
            total = self.s.get(i, 0)
            parts = self.s_resistant_origin.get(i, 0) + self.s_sensitive_origin.get(i, 0)
            if total != parts or total < 0:
                raise ValueError(f"origin split broken at i={i}: {total} != {parts}")

    def total_mutations(self) -> int:
        return sum(self.s.values())


@dataclass(frozen=True)
class WindowCounts:
    """Mutation counts inside one open carrier-count window."""

    total: int
    resistant_origin: int
    sensitive_origin: int


def _make_mutation_sampler(law: str, omega: float):
    """Per-daughter neutral mutation count sampler (mean omega/2)."""
    mean = omega / 2.0
    if mean == 0.0:
        return lambda rng_random: 0
    if law == "bernoulli":
        if mean > 1.0:
            raise ValueError("bernoulli mutation law requires omega <= 2")
        return lambda rng_random: 1 if rng_random() < mean else 0
    # Knuth's product-of-uniforms Poisson; fine for the small means used here
    limit = math.exp(-mean)

    def poisson(rng_random) -> int:
        k = 0
        prod = rng_random()
        while prod > limit:
            prod *= rng_random()
            k += 1
        return k

    return poisson


def run(
    params: ModelParams,
    t_obs: float,
    initial: tuple[int, int] | None = None,
    rng: Random | None = None,
    seed: int | None = None,
    max_cells: int = 5_000_000,
    track_rates: bool = False,
    debug_checks: bool = False,
) -> SimOutcome:
    """Simulate the process exactly up to ``t_obs``.

    ``initial`` is the starting (sensitive, resistant) population; it
    defaults to (n_init, 0).  Supply either an explicit ``rng`` or a
    ``seed``.  ``track_rates`` accumulates the per-event expected class
    probabilities of the five-row transition table (the chi-square oracle
    for rate faithfulness).  ``debug_checks`` asserts per-event population
    deltas against the table and forest consistency at the end.
    """
    if t_obs < 0:
        raise ValueError(f"requires t_obs >= 0, got {t_obs}")
    if rng is None:
        rng = Random(seed)
    if initial is None:
        initial = (params.n_init, 0)
    n0_init, n1_init = initial
    if n0_init < 0 or n1_init < 0 or n0_init + n1_init == 0:
        raise ValueError(f"initial population must be nonnegative and nonempty, got {initial}")

    b0, d0, b1, d1 = params.b0, params.d0, params.b1, params.d1
    gamma_n = params.gamma_n
    c0 = b0 + d0
    c1 = b1 + d1
    draw_muts = _make_mutation_sampler(params.mutation_law, params.omega)
    rand = rng.random
    expo = rng.expovariate

    parent: list[int] = []
    cell_type: list[int] = []
    origin: list[int] = []
    edge_mutations: list[int] = []
    birth_time: list[float] = []
    generation: list[int] = []
    root_id: list[int] = []
    status: list[int] = []
    alive0: list[int] = []
    alive1: list[int] = []
    for k in range(n0_init + n1_init):
        typ = SENSITIVE if k < n0_init else RESISTANT
        parent.append(-1)
        cell_type.append(typ)
        origin.append(ORIGIN_ROOT)
        edge_mutations.append(0)
        birth_time.append(0.0)
        generation.append(0)
        root_id.append(k)
        status.append(STATUS_ALIVE)
        (alive0 if typ == SENSITIVE else alive1).append(k)

    event_counts = [0, 0, 0, 0, 0]
    expected = [0.0, 0.0, 0.0, 0.0, 0.0] if track_rates else None
    ancestral: list[tuple[float, int, int]] = []

    t = 0.0
    while True:
        n0 = len(alive0)
        n1 = len(alive1)
        total = c0 * n0 + c1 * n1
        if total <= 0.0:
            break
        t += expo(total)
        if t >= t_obs:
            break
        if track_rates:
            sdiv = b0 * n0
            expected[0] += (1.0 - gamma_n) ** 2 * sdiv / total
            expected[1] += d0 * n0 / total
            expected[2] += (2.0 * gamma_n * (1.0 - gamma_n) * sdiv + b1 * n1) / total
            expected[3] += gamma_n**2 * sdiv / total
            expected[4] += d1 * n1 / total
        u = rand() * total
        if u < c0 * n0:
            if u < b0 * n0:
                # sensitive division
                j = int(rand() * n0)
                mother = alive0[j]
                alive0[j] = alive0[-1]
                alive0.pop()
                status[mother] = STATUS_DIVIDED
                g = generation[mother] + 1
                rid = root_id[mother]
                flips = 0
                for _ in (0, 1):
                    resistant = rand() < gamma_n
                    child = len(parent)
                    parent.append(mother)
                    origin.append(ORIGIN_SENSITIVE_DIVISION)
                    edge_mutations.append(draw_muts(rand))
                    birth_time.append(t)
                    generation.append(g)
                    root_id.append(rid)
                    status.append(STATUS_ALIVE)
                    if resistant:
                        flips += 1
                        cell_type.append(RESISTANT)
                        alive1.append(child)
                        ancestral.append((t, g, rid))
                    else:
                        cell_type.append(SENSITIVE)
                        alive0.append(child)
                delta = (1, 0) if flips == 0 else ((0, 1) if flips == 1 else (-1, 2))
                event_counts[_CLASS_INDEX[delta]] += 1
                if len(parent) > max_cells:
                    raise PopulationCapError(
                        f"genealogy exceeded max_cells={max_cells} at t={t:.4f} "
                        f"(z0={len(alive0)}, z1={len(alive1)})"
                    )
            else:
                # sensitive death
                j = int(rand() * n0)
                status[alive0[j]] = STATUS_DEAD
                alive0[j] = alive0[-1]
                alive0.pop()
                event_counts[1] += 1
        else:
            if u < c0 * n0 + b1 * n1:
                # resistant division
                j = int(rand() * n1)
                mother = alive1[j]
                alive1[j] = alive1[-1]
                alive1.pop()
                status[mother] = STATUS_DIVIDED
                g = generation[mother] + 1
                rid = root_id[mother]
                for _ in (0, 1):
                    child = len(parent)
                    parent.append(mother)
                    cell_type.append(RESISTANT)
                    origin.append(ORIGIN_RESISTANT_DIVISION)
                    edge_mutations.append(draw_muts(rand))
                    birth_time.append(t)
                    generation.append(g)
                    root_id.append(rid)
                    status.append(STATUS_ALIVE)
                    alive1.append(child)
                event_counts[2] += 1
                if len(parent) > max_cells:
                    raise PopulationCapError(
                        f"genealogy exceeded max_cells={max_cells} at t={t:.4f} "
                        f"(z0={len(alive0)}, z1={len(alive1)})"
                    )
            else:
                # resistant death
                j = int(rand() * n1)
                status[alive1[j]] = STATUS_DEAD
                alive1[j] = alive1[-1]
                alive1.pop()
                event_counts[4] += 1
        if debug_checks:
            _check_population(alive0, alive1, status, cell_type)

    outcome = SimOutcome(
        params=params,
        t_obs=t_obs,
        parent=parent,
        cell_type=cell_type,
        origin=origin,
        edge_mutations=edge_mutations,
        birth_time=birth_time,
        generation=generation,
        root_id=root_id,
        status=status,
        n_roots=n0_init + n1_init,
        z0_final=len(alive0),
        z1_final=len(alive1),
        event_counts=event_counts,
        expected_class_weights=expected,
        ancestral=ancestral,
    )
    if debug_checks:
        z0, z1 = outcome.alive_counts()
        if (z0, z1) != (outcome.z0_final, outcome.z1_final):
            raise AssertionError(
                f"forest/trajectory mismatch: forest ({z0},{z1}) vs tracked "
                f"({outcome.z0_final},{outcome.z1_final})"
            )
    return outcome


def _check_population(alive0, alive1, status, cell_type) -> None:
    z0 = sum(1 for i, s in enumerate(status) if s == STATUS_ALIVE and cell_type[i] == SENSITIVE)
    z1 = sum(1 for i, s in enumerate(status) if s == STATUS_ALIVE and cell_type[i] == RESISTANT)
    if z0 != len(alive0) or z1 != len(alive1):
        raise AssertionError("alive lists inconsistent with status array")


def event_class_probabilities(params: ModelParams, z0: int, z1: int) -> list[float]:
    """Instantaneous probabilities of the five transition classes."""
    gn = params.gamma_n
    rates = [
        (1.0 - gn) ** 2 * params.b0 * z0,
        params.d0 * z0,
        2.0 * gn * (1.0 - gn) * params.b0 * z0 + params.b1 * z1,
        gn**2 * params.b0 * z0,
        params.d1 * z1,
    ]
    total = sum(rates)
    if total <= 0:
        raise ValueError("empty population has no events")
    return [r / total for r in rates]


def extract_sfs(outcome: SimOutcome) -> SfsRecord:
    """Site frequency spectrum of the living resistant population.

    One bottom-up pass accumulates, for every genealogy edge, the number of
    living resistant cells descending from it (inclusive); an edge carrying
    m > 0 mutations adds m to the bucket of its descendant count, split by
    the type of the dividing mother.  Edges with zero living resistant
    descendants are discarded.
    """
    parent = outcome.parent
    status = outcome.status
    cell_type = outcome.cell_type
    muts = outcome.edge_mutations
    origin = outcome.origin
    n = len(parent)
    desc = [0] * n
    s: dict[int, int] = {}
    s_res: dict[int, int] = {}
    s_sen: dict[int, int] = {}
    for idx in range(n - 1, -1, -1):
        c = desc[idx]
        if status[idx] == STATUS_ALIVE and cell_type[idx] == RESISTANT:
            c += 1
            desc[idx] = c
        if c:
            p = parent[idx]
            if p >= 0:
                desc[p] += c
            m = muts[idx]
            if m:
                s[c] = s.get(c, 0) + m
                if origin[idx] == ORIGIN_RESISTANT_DIVISION:
                    s_res[c] = s_res.get(c, 0) + m
                else:
                    s_sen[c] = s_sen.get(c, 0) + m
    return SfsRecord(
        s=s,
        s_resistant_origin=s_res,
        s_sensitive_origin=s_sen,
        t_obs=outcome.t_obs,
        z1_final=outcome.z1_final,
    )


def window_counts(
    record: SfsRecord, x1: float, x2: float, lambda1: float
) -> WindowCounts:
    """Mutation counts with carrier number in the open window
    (x1 e^(lambda1 t_obs), x2 e^(lambda1 t_obs)); x2 may be inf."""
    if not 0 < x1 < x2:
        raise ValueError(f"requires 0 < x1 < x2, got x1={x1}, x2={x2}")
    scale = math.exp(lambda1 * record.t_obs)
    lo = x1 * scale
    hi = x2 * scale if x2 != math.inf else math.inf
    total = res = sen = 0
    for i, m in record.s.items():
        if lo < i < hi:
            total += m
    for i, m in record.s_resistant_origin.items():
        if lo < i < hi:
            res += m
    for i, m in record.s_sensitive_origin.items():
        if lo < i < hi:
            sen += m
    return WindowCounts(total, res, sen)


def ancestral_records(outcome: SimOutcome) -> list[tuple[float, int, int]]:
    """(birth time, generation, root id) of every ancestral resistant cell,
    in order of appearance."""
    return list(outcome.ancestral)


def dense_sfs(record: SfsRecord, i_max: int) -> tuple[list[int], list[int], list[int]]:
    """Dense (s, s_resistant_origin, s_sensitive_origin) vectors over
    1..i_max as length-(i_max+1) lists with slot 0 unused."""
    s = [0] * (i_max + 1)
    sr = [0] * (i_max + 1)
    ss = [0] * (i_max + 1)
    for i, m in record.s.items():
        if i <= i_max:
            s[i] = m
    for i, m in record.s_resistant_origin.items():
        if i <= i_max:
            sr[i] = m
    for i, m in record.s_sensitive_origin.items():
        if i <= i_max:
            ss[i] = m
    return s, sr, ss
