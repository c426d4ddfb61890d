"""Command-line entry point: simulate / theory / gw / compare / figures.

Every command resolves its configuration (config file plus overrides),
writes CSV outputs under --out-dir, and finishes with a manifest.json
listing each output file with its SHA-256 digest; re-running with the same
config and seed reproduces identical digests.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from random import Random

import numpy as np

import rescue_sfs
from rescue_sfs import gw_trees, montecarlo, simulator, theory
from rescue_sfs.params import (
    ConfigError,
    ModelParams,
    ObservationSpec,
    RunConfig,
    derive,
    derive_from_gamma_n,
    load_config,
    observation_time,
)

FORMULA_IDS = (
    "I",
    "hi",
    "kappa",
    "K",
    "L",
    "Kslope",
    "thm1",
    "thm2",
    "P",
    "Q",
    "gn",
    "tn",
    "tilde-gn",
    "tilde-tn",
    "anc-count",
    "anc-one",
    "anc-multi",
    "clone-sfs",
)

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

_OVERRIDE_FLOATS = ("b0", "d0", "b1", "d1", "omega", "gamma", "alpha", "t_mult", "t_abs")


@dataclass
class RunManifest:
    """Reproducibility record written next to every command's outputs."""

    command: str
    config: dict
    seed: int
    version: str
    started: float
    finished: float
    outputs: list[dict]

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)

def _fmt(x) -> str:
    """Shortest-roundtrip decimal form of a float for CSV cells."""
    return repr(float(x))

class _OutputSet:
    """Tracks files written by one command; removes them all on failure."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.paths: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.paths.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.paths:
            try:
                os.unlink(p)
            except FileNotFoundError:
                pass

    def manifest_entries(self) -> list[dict]:
        return [{"path": p, "sha256": _sha256(p)} for p in self.paths if os.path.exists(p)]


def _config_dict(cfg: RunConfig) -> dict:
    return {
        "params": dataclasses.asdict(cfg.params),
        "observation": dataclasses.asdict(cfg.observation),
        "replicates": cfg.replicates,
        "seed": cfg.seed,
    }


def _finish(command: str, cfg: RunConfig, outputs: _OutputSet, started: float) -> None:
    manifest = RunManifest(
        command=command,
        config=_config_dict(cfg),
        seed=cfg.seed,
        version=rescue_sfs.__version__,
        started=started,
        finished=time.time(),
        outputs=outputs.manifest_entries(),
    )
    manifest.write(os.path.join(outputs.out_dir, "manifest.json"))


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    params_kwargs = dataclasses.asdict(cfg.params)
    obs_kwargs = dataclasses.asdict(cfg.observation)
    for key in _OVERRIDE_FLOATS:
        val = getattr(args, key, None)
        if val is not None:
            if key in ("t_mult", "t_abs"):
                obs_kwargs[key] = val
            else:
                params_kwargs[key] = val
    if getattr(args, "n_init", None) is not None:
        params_kwargs["n_init"] = args.n_init
    if getattr(args, "mutation_law", None) is not None:
        params_kwargs["mutation_law"] = args.mutation_law
    if getattr(args, "t_mode", None) is not None:
        obs_kwargs["mode"] = args.t_mode
    replicates = args.replicates if getattr(args, "replicates", None) is not None else cfg.replicates
    seed = args.seed if getattr(args, "seed", None) is not None else cfg.seed
    return RunConfig(
        params=ModelParams(**params_kwargs),
        observation=ObservationSpec(**obs_kwargs),
        replicates=replicates,
        seed=seed,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--replicates", type=int, default=None, help="override replicate count")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default: cores)")
    parser.add_argument("--tol", type=float, default=theory.DEFAULT_TOL, help="quadrature tolerance")
    for key in _OVERRIDE_FLOATS:
        parser.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)
    parser.add_argument("--n-init", type=int, default=None, dest="n_init")
    parser.add_argument("--mutation-law", default=None, dest="mutation_law")
    parser.add_argument("--t-mode", default=None, dest="t_mode")


def _workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args)
    t_obs = observation_time(cfg.observation, cfg.params)
    windows = _parse_grid(args.windows) if args.windows else ()
    outputs = _OutputSet(args.out_dir)
    try:
        dp = derive(cfg.params)
        per_rep_path = outputs.path("per_replicate.csv")
        agg = montecarlo.SfsAggregate(
            cfg.params, t_obs, (cfg.params.n_init, 0), cfg.seed, args.i_max, tuple(windows)
        )
        lambda1 = dp.lambda1
        with open(per_rep_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "i", "s", "sbar", "sunder"])
            for r in range(cfg.replicates):
                rep_seed = montecarlo.seed_for_replicate(cfg.seed, r)
                outcome = simulator.run(cfg.params, t_obs, rng=Random(rep_seed))
                record = simulator.extract_sfs(outcome)
                s, sbar, sunder = simulator.dense_sfs(record, args.i_max)
                agg.s.update(np.asarray(s[1:], dtype=float))
                agg.sbar.update(np.asarray(sbar[1:], dtype=float))
                agg.sunder.update(np.asarray(sunder[1:], dtype=float))
                agg.scalars.update(
                    np.asarray(
                        [len(outcome.ancestral), outcome.z1_final, record.total_mutations()]
                    )
                )
                if windows:
                    wc = [
                        simulator.window_counts(record, x, math.inf, lambda1) for x in windows
                    ]
                    agg.window_s.update(np.asarray([w.total for w in wc], dtype=float))
                    agg.window_sbar.update(
                        np.asarray([w.resistant_origin for w in wc], dtype=float)
                    )
                    agg.window_sunder.update(
                        np.asarray([w.sensitive_origin for w in wc], dtype=float)
                    )
                agg.replicates += 1
                for i in sorted(record.s):
                    writer.writerow(
                        [
                            r,
                            i,
                            record.s[i],
                            record.s_resistant_origin.get(i, 0),
                            record.s_sensitive_origin.get(i, 0),
                        ]
                    )
        stats = agg.stats("s")
        stats_bar = agg.stats("sbar")
        stats_under = agg.stats("sunder")
        rows = []
        for k, i in enumerate(stats.indices):
            ci = stats.ci_halfwidth[k]
            rows.append(
                [
                    int(i),
                    _fmt(stats.mean[k]),
                    _fmt(stats_bar.mean[k]),
                    _fmt(stats_under.mean[k]),
                    _fmt(stats.mean[k] - ci),
                    _fmt(stats.mean[k] + ci),
                    agg.replicates,
                ]
            )
        _write_csv(
            outputs.path("aggregate.csv"),
            ["i", "mean_S", "mean_Sbar", "mean_Sunder", "ci_lo", "ci_hi", "replicates"],
            rows,
        )
        if windows:
            wrows = []
            wstats = agg.window_stats("s")
            wbar = agg.window_stats("sbar")
            wunder = agg.window_stats("sunder")
            for k, x in enumerate(wstats.indices):
                wrows.append(
                    [
                        _fmt(float(x)),
                        _fmt(wstats.mean[k]),
                        _fmt(wbar.mean[k]),
                        _fmt(wunder.mean[k]),
                        _fmt(wstats.ci_halfwidth[k]),
                        agg.replicates,
                    ]
                )
            _write_csv(
                outputs.path("windows.csv"),
                ["x", "mean_S_window", "mean_Sbar_window", "mean_Sunder_window", "ci_halfwidth", "replicates"],
                wrows,
            )
        config_echo = outputs.path("config_resolved.json")
        with open(config_echo, "w", encoding="utf-8") as fh:
            json.dump(_config_dict(cfg) | {"t_obs": t_obs}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except Exception:
        outputs.cleanup()
        raise
    _finish("simulate", cfg, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------


def _parse_grid(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if not vals:
        raise ConfigError(f"empty grid {text!r}")
    return vals


def _parse_irange(text: str) -> list[int]:
    lo, _, hi = text.partition(":")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError as exc:
        raise ConfigError(f"bad i-range {text!r} (want LO:HI)") from exc
    if hi_i < lo_i:
        raise ConfigError(f"empty i-range {text!r}")
    return list(range(lo_i, hi_i + 1))


def _theory_rows(args, cfg: RunConfig):
    """(header, rows) for one formula id over the requested range."""
    params = cfg.params
    dp = derive(params)
    t = cfg.observation.t_mult if cfg.observation.t_mult is not None else 1.0 / dp.lambda0
    if cfg.observation.mode == "absolute":
        t = cfg.observation.t_abs / math.log(params.n_init)
    fid = args.formula
    tol = args.tol
    i_list = _parse_irange(args.i_range) if args.i_range else None
    x_list = _parse_grid(args.x_grid) if args.x_grid else None
    rows = []

    def need_i():
        if not i_list:
            raise ConfigError(f"formula {fid!r} needs --i-range")
        return i_list

    def need_x():
        if not x_list:
            raise ConfigError(f"formula {fid!r} needs --x-grid")
        return x_list

    if fid == "I":
        for i in need_i():
            tv = theory.shape_integral(i, dp.rho)
            rows.append((i, tv.value, "", tv.abs_error_bound, fid))
    elif fid == "hi":
        i = args.i if args.i else 1
        for x in need_x():
            tv = theory.shape_integral_truncated(i, x, dp.rho)
            lim = theory.shape_integral(i, dp.rho)
            rows.append((x, tv.value, lim.value, tv.abs_error_bound, fid))
    elif fid == "kappa":
        u = args.u if args.u is not None else 1.0
        for i in need_i():
            rows.append((i, theory.clone_size_pmf(i, u, params.b1, params.d1), "", 0.0, fid))
    elif fid == "K":
        for x in need_x():
            tv = theory.window_weight_resistant(x, dp, tol)
            rows.append((x, tv.value, "", tv.abs_error_bound, fid))
    elif fid == "L":
        for x in need_x():
            tv = theory.window_weight_sensitive(x, dp, tol)
            rows.append((x, tv.value, "", tv.abs_error_bound, fid))
    elif fid == "Kslope":
        for x in need_x():
            tv = theory.window_weight_resistant_slope(x, dp, tol)
            rows.append((x, tv.value, "", tv.abs_error_bound, fid))
    elif fid == "thm1":
        for i in need_i():
            tv = theory.sfs_small_asymptotic(i, t, params)
            rows.append((i, tv.value, tv.value, tv.abs_error_bound, fid))
    elif fid == "thm2":
        xs = need_x()
        if len(xs) < 2:
            raise ConfigError("thm2 needs an --x-grid with at least two points")
        for x1, x2 in zip(xs, xs[1:]):
            tv = theory.sfs_window_asymptotic(x1, x2, t, params, tol)
            rows.append((x1, tv.value, tv.value, tv.abs_error_bound, fid))
        tv = theory.sfs_window_asymptotic(xs[-1], math.inf, t, params, tol)
        rows.append((xs[-1], tv.value, tv.value, tv.abs_error_bound, fid))
    elif fid == "P":
        for i in need_i():
            tv = theory.resistant_origin_main_term(i, t, params, tol)
            asym = theory.sfs_small_asymptotic(i, t, params)
            rows.append((i, tv.value, asym.value, tv.abs_error_bound, fid))
    elif fid == "Q":
        for i in need_i():
            tv = theory.sensitive_origin_main_term(i, t, params, tol)
            rows.append((i, tv.value, "", tv.abs_error_bound, fid))
    elif fid == "gn":
        for g in need_i():
            rows.append((g, theory.generation_pmf(dp, g), "", 0.0, fid))
    elif fid == "tn":
        for x in need_x():
            rows.append((x, theory.appearance_time_pdf(dp, x), "", 0.0, fid))
    elif fid == "tilde-gn":
        for g in need_i():
            rows.append((g, theory.generation_pmf_any(dp, g), "", 0.0, fid))
    elif fid == "tilde-tn":
        for x in need_x():
            rows.append((x, theory.appearance_time_pdf_any(dp, x), "", 0.0, fid))
    elif fid == "anc-count":
        pv = theory.ancestral_count_mean(params)
        rows.append((0, pv.exact, pv.asymptotic, 0.0, fid))
    elif fid == "anc-one":
        pv = theory.prob_one_ancestral(dp)
        rows.append((0, pv.exact, pv.asymptotic, 0.0, fid))
    elif fid == "anc-multi":
        pv = theory.multi_ancestral_mean(dp)
        rows.append((0, pv.exact, pv.asymptotic, 0.0, fid))
    elif fid == "clone-sfs":
        t_abs = cfg.observation.t_abs if cfg.observation.mode == "absolute" else t * math.log(
            params.n_init
        )
        for i in need_i():
            tv = theory.single_clone_sfs(i, t_abs, params.b1, params.d1, params.omega)
            asym = theory.single_clone_sfs_asymptotic(i, t_abs, params.b1, params.d1, params.omega)
            rows.append((i, tv.value, asym, tv.abs_error_bound, fid))
    else:
        raise ConfigError(f"unknown formula id {fid!r}; valid ids: {', '.join(FORMULA_IDS)}")
    return ["index_or_x", "exact", "asymptotic", "error_bound", "formula_id"], rows


def cmd_theory(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args)
    outputs = _OutputSet(args.out_dir)
    try:
        header, rows = _theory_rows(args, cfg)
        _write_csv(outputs.path(f"theory_{args.formula.replace('-', '_')}.csv"), header, rows)
    except Exception:
        outputs.cleanup()
        raise
    _finish("theory", cfg, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# gw
# ---------------------------------------------------------------------------


def cmd_gw(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args)
    dp = derive(cfg.params)
    p = args.p if args.p is not None else dp.p_n
    beta = args.beta if args.beta is not None else dp.beta_n
    law = gw_trees.GwLaw(p=p, beta=beta)
    rng = Random(cfg.seed)
    outputs = _OutputSet(args.out_dir)
    try:
        samples = []
        for _ in range(args.samples):
            s = gw_trees.sample_conditioned(
                law, args.condition, rng, root_excluded=args.root_excluded
            )
            g = s.generation if args.root_excluded else s.generation + 1
            samples.append(g)
        if args.condition == gw_trees.CONDITION_EXACTLY_ONE:
            pmf = lambda g: gw_trees.gen_pmf_one_mark(law, g)  # noqa: E731
        else:
            pmf = lambda g: gw_trees.gen_pmf_atleast_one_mark(law, g)  # noqa: E731
        rows = gw_trees.pmf_table(samples, pmf, g_max=args.g_max)
        _write_csv(
            outputs.path("gw_pmf.csv"),
            ["g", "pmf_theory", "pmf_empirical", "count"],
            [(g, _fmt(t), _fmt(e), c) for g, t, e, c in rows],
        )
    except Exception:
        outputs.cleanup()
        raise
    _finish("gw", cfg, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def cmd_compare(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args)
    t_obs = observation_time(cfg.observation, cfg.params)
    t = t_obs / math.log(cfg.params.n_init)
    outputs = _OutputSet(args.out_dir)
    try:
        if args.what == "small-i":
            i_max = args.i_max
            agg = montecarlo.replicate_sfs(
                cfg.params,
                t_obs,
                cfg.replicates,
                cfg.seed,
                i_max=i_max,
                workers=_workers(args),
            )
            stats = agg.stats("sbar")
            tvals = [
                theory.resistant_origin_mean_exact(i, t, cfg.params, args.tol).value
                for i in range(1, i_max + 1)
            ]
            report = montecarlo.compare(
                stats,
                tvals,
                mode=args.mode,
                threshold=args.threshold,
                metadata={"what": "sbar vs exact mean", "replicates": cfg.replicates},
            )
        else:
            windows = _parse_grid(args.windows or "0.6,1,2,4,6")
            agg = montecarlo.replicate_sfs(
                cfg.params,
                t_obs,
                cfg.replicates,
                cfg.seed,
                i_max=1,
                windows=windows,
                workers=_workers(args),
            )
            dp = derive(cfg.params)
            stats = agg.window_stats("sbar")
            if args.mode == "z-score":
                # tight gate: the exact finite-N window expectation
                tvals = [
                    theory.resistant_origin_window_exact(x, t, cfg.params, args.tol).value
                    for x in windows
                ]
                what = "sbar windows vs exact"
            else:
                scale = (
                    cfg.params.b0
                    * cfg.params.gamma
                    * cfg.params.omega
                    * dp.lambda1
                    * cfg.params.n_init ** (1.0 - cfg.params.alpha)
                )
                tvals = [
                    scale * theory.window_weight_resistant(x, dp, args.tol).value
                    for x in windows
                ]
                what = "sbar windows vs asymptotic"
            report = montecarlo.compare(
                stats,
                tvals,
                mode=args.mode,
                threshold=args.threshold,
                metadata={"what": what, "replicates": cfg.replicates},
            )
        with open(outputs.path("report.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_csv(
            outputs.path("report.csv"),
            ["index", "empirical_mean", "empirical_sem", "theory", "z", "rel_gap", "passed"],
            [
                (idx, _fmt(m), _fmt(sem), _fmt(th_), _fmt(z), _fmt(rg), passed)
                for idx, m, sem, th_, z, rg, passed in report.rows()
            ],
        )
    except Exception:
        outputs.cleanup()
        raise
    _finish("compare", cfg, outputs, started)
    if not report.all_passed:
        print(
            f"gate FAILED: {report.pass_fraction:.1%} of indices passed "
            f"({args.mode} <= {args.threshold})",
            file=sys.stderr,
        )
        return 1
    print(f"gate passed: all {report.indices.size} indices within threshold")
    return 0


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def cmd_figures(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args)
    outputs = _OutputSet(args.out_dir)
    try:
        _FIGURE_BUILDERS[args.which](args, cfg, outputs)
    except Exception:
        outputs.cleanup()
        raise
    _finish(f"figures:{args.which}", cfg, outputs, started)
    return 0


def _fig2(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """Founder generation and appearance-time laws at two resistance levels."""
    samples = args.samples or 100_000
    rows_g = []
    rows_t = []
    for gamma_n in (0.2, 0.002):
        dp = derive_from_gamma_n(1.0, 2.0, cfg.params.b1, cfg.params.d1, gamma_n)
        law = gw_trees.GwLaw(p=dp.p_n, beta=dp.beta_n)
        rng = Random(cfg.seed)
        gens = []
        times = []
        for _ in range(samples):
            s = gw_trees.sample_conditioned(
                law, gw_trees.CONDITION_EXACTLY_ONE, rng, root_excluded=True, delta0=dp.delta0
            )
            gens.append(s.generation)
            times.append(s.lifetime)
        table = gw_trees.pmf_table(gens, lambda g: theory.generation_pmf(dp, g))
        rows_g += [(gamma_n, g, _fmt(t), _fmt(e), c) for g, t, e, c in table]
        hist, edges = np.histogram(times, bins=60, range=(0.0, max(times)))
        widths = np.diff(edges)
        for k, count in enumerate(hist):
            mid = 0.5 * (edges[k] + edges[k + 1])
            rows_t.append(
                (
                    gamma_n,
                    _fmt(float(mid)),
                    _fmt(theory.appearance_time_pdf(dp, mid)),
                    _fmt(count / (samples * widths[k])),
                    int(count),
                )
            )
    _write_csv(outputs.path("fig2_gn.csv"), ["gamma_n", "g", "pmf_theory", "pmf_empirical", "count"], rows_g)
    _write_csv(
        outputs.path("fig2_tn.csv"),
        ["gamma_n", "t", "pdf_theory", "pdf_empirical", "count"],
        rows_t,
    )


def _sfs_figure_aggregate(args, cfg: RunConfig, i_max: int, windows=()):
    t_obs = observation_time(cfg.observation, cfg.params)
    return (
        montecarlo.replicate_sfs(
            cfg.params,
            t_obs,
            cfg.replicates,
            cfg.seed,
            i_max=i_max,
            windows=windows,
            workers=_workers(args),
        ),
        t_obs,
    )


def _fig3(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """Small-i expected SFS: empirical S and Sbar vs the fixed-i asymptote."""
    agg, t_obs = _sfs_figure_aggregate(args, cfg, i_max=121)
    t = t_obs / math.log(cfg.params.n_init)
    s = agg.stats("s")
    sbar = agg.stats("sbar")
    rows = []
    for k in range(121):
        i = k + 1
        thm1 = theory.sfs_small_asymptotic(i, t, cfg.params).value
        rows.append(
            (
                i,
                _fmt(s.mean[k]),
                _fmt(sbar.mean[k]),
                _fmt(s.ci_halfwidth[k]),
                _fmt(thm1),
                agg.replicates,
            )
        )
    _write_csv(
        outputs.path("fig3.csv"),
        ["i", "mean_S", "mean_Sbar", "ci_halfwidth", "thm1", "replicates"],
        rows,
    )


def _fig4(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """Large-i expected SFS around the typical clone size scale."""
    agg, t_obs = _sfs_figure_aggregate(args, cfg, i_max=700)
    s = agg.stats("s")
    sbar = agg.stats("sbar")
    sunder = agg.stats("sunder")
    rows = []
    for i in range(200, 701):
        k = i - 1
        rows.append(
            (i, _fmt(s.mean[k]), _fmt(sbar.mean[k]), _fmt(sunder.mean[k]), agg.replicates)
        )
    _write_csv(
        outputs.path("fig4.csv"),
        ["i", "mean_S", "mean_Sbar", "mean_Sunder", "replicates"],
        rows,
    )


def _window_figure(args, cfg: RunConfig, outputs: _OutputSet, kind: str, name: str, weight_fn):
    xs = [round(0.1 * k, 1) for k in range(1, 71)]
    agg, t_obs = _sfs_figure_aggregate(args, cfg, i_max=1, windows=xs)
    dp = derive(cfg.params)
    scale = (
        cfg.params.b0
        * cfg.params.gamma
        * cfg.params.omega
        * dp.lambda1
        * cfg.params.n_init ** (1.0 - cfg.params.alpha)
    )
    stats = agg.window_stats(kind)
    rows = []
    for k, x in enumerate(xs):
        rows.append(
            (
                _fmt(float(x)),
                _fmt(stats.mean[k]),
                _fmt(stats.ci_halfwidth[k]),
                _fmt(scale * weight_fn(x, dp).value),
                agg.replicates,
            )
        )
    _write_csv(
        outputs.path(name),
        ["x", "empirical_mean", "ci_halfwidth", "theory", "replicates"],
        rows,
    )


def _fig5(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """Sensitive-origin window counts vs the hitch-hiking weight L."""
    _window_figure(args, cfg, outputs, "sunder", "fig5.csv", theory.window_weight_sensitive)


def _fig6(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """Resistant-origin window counts vs the weight K."""
    _window_figure(args, cfg, outputs, "sbar", "fig6.csv", theory.window_weight_resistant)


def _fig7(args, cfg: RunConfig, outputs: _OutputSet) -> None:
    """K and L on [0.6, 6] for four (b0, lambda0) combinations."""
    rows = []
    xs = [round(0.6 + 0.05 * k, 2) for k in range(109)]
    for b0 in (1.2, 2.2):
        for lam0 in (0.8, 0.3):
            dp = derive_from_gamma_n(
                b0, b0 + lam0, cfg.params.b1, cfg.params.d1, cfg.params.gamma_n
            )
            for x in xs:
                rows.append(
                    (
                        b0,
                        lam0,
                        _fmt(float(x)),
                        _fmt(theory.window_weight_resistant(x, dp).value),
                        _fmt(theory.window_weight_sensitive(x, dp).value),
                    )
                )
    _write_csv(outputs.path("fig7.csv"), ["b0", "lambda0", "x", "K", "L"], rows)


_FIGURE_BUILDERS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rescue-sfs",
        description="Site frequency spectrum of neutral mutations under rescue dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run replicates and write SFS CSVs")
    _add_common(p_sim)
    p_sim.add_argument("--i-max", type=int, default=130, dest="i_max")
    p_sim.add_argument("--windows", default=None, help="comma-separated window lower edges")
    p_sim.set_defaults(func=cmd_simulate)

    p_th = sub.add_parser("theory", help="emit a theory curve as CSV")
    _add_common(p_th)
    p_th.add_argument("--formula", required=True, help=f"one of {', '.join(FORMULA_IDS)}")
    p_th.add_argument("--i-range", default=None, dest="i_range", help="LO:HI inclusive")
    p_th.add_argument("--x-grid", default=None, dest="x_grid", help="comma-separated x values")
    p_th.add_argument("--i", type=int, default=None, help="carrier count for hi")
    p_th.add_argument("--u", type=float, default=None, help="clone age for kappa")
    p_th.set_defaults(func=cmd_theory)

    p_gw = sub.add_parser("gw", help="sample conditioned trees, dump generation pmf table")
    _add_common(p_gw)
    p_gw.add_argument("--p", type=float, default=None, help="division probability (default: p_n)")
    p_gw.add_argument("--beta", type=float, default=None, help="mark probability (default: beta_n)")
    p_gw.add_argument(
        "--condition",
        default=gw_trees.CONDITION_EXACTLY_ONE,
        choices=[gw_trees.CONDITION_EXACTLY_ONE, gw_trees.CONDITION_AT_LEAST_ONE],
    )
    p_gw.add_argument("--root-excluded", action="store_true", dest="root_excluded")
    p_gw.add_argument("--samples", type=int, default=10_000)
    p_gw.add_argument("--g-max", type=int, default=12, dest="g_max")
    p_gw.set_defaults(func=cmd_gw)

    p_cmp = sub.add_parser("compare", help="Monte Carlo vs theory gate")
    _add_common(p_cmp)
    p_cmp.add_argument("--what", choices=("small-i", "windows"), default="small-i")
    p_cmp.add_argument("--i-max", type=int, default=20, dest="i_max")
    p_cmp.add_argument("--windows", default=None)
    p_cmp.add_argument("--mode", choices=("z-score", "relative"), default="z-score")
    p_cmp.add_argument("--threshold", type=float, default=3.0)
    p_cmp.set_defaults(func=cmd_compare)

    p_fig = sub.add_parser("figures", help="emit plot-ready CSVs for one figure")
    _add_common(p_fig)
    p_fig.add_argument("--which", required=True, choices=FIGURES)
    p_fig.add_argument("--samples", type=int, default=None, help="tree samples for fig2")
    p_fig.set_defaults(func=cmd_figures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
