"""Command-line front end.

Three commands: ``simulate`` runs one engine and emits snapshots,
``experiment`` dispatches the measurement drivers, ``validate`` runs
the invariant suites; ``replay`` re-executes a recorded manifest and
checks that every output digest reproduces exactly.  Configuration
comes from flags, optionally seeded by a plain ``key=value`` file
(flags win).  Exit codes: 0 success, 1 invariant or experiment
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__, backward, experiments, forward, manifest
from . import measures, percolation
from .fabric import DOMAIN_REJECTION, EventSeed
from .lattice import (BoundaryRule, Configuration, Region, Site,
                      write_pgm, write_pgm_gray)

EXPERIMENTS = ("mixing", "correlation", "tau", "shape", "freeze",
               "beta-c")
ENGINES = ("graphical", "rejection-free", "backward")
BOUNDARIES = {b.value: b for b in (BoundaryRule.GHOST_ONES,
                                   BoundaryRule.GHOST_ZEROS,
                                   BoundaryRule.PERIODIC)}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected WIDTHxHEIGHT, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("window sides must be positive")
    return w, h


def _parse_site(text: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    return x, y


def _parse_times(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated times, got {text!r}")


def read_config_file(path) -> dict:
    """Plain key=value lines; '#' comments and blank lines ignored."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(
                    f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(parser: argparse.ArgumentParser,
                       subparsers: dict, argv: list[str]) -> None:
    """Feed key=value file entries in as subparser defaults.

    Defaults lose to explicit flags, which is exactly the wanted
    precedence.  String defaults go through each flag's `type`
    converter at parse time, so the file shares the flag syntax
    (`window=64x64`, `sample_times=1,2,4`).
    """
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a file path")
    command = next((a for a in argv if not a.startswith("-")), None)
    sub = subparsers.get(command)
    if sub is None:
        parser.error("--config needs a subcommand that accepts it")
    try:
        values = read_config_file(argv[idx + 1])
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(values) - known)
    if unknown:
        parser.error(f"unknown config keys: {unknown}")
    sub.set_defaults(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="northeast",
        description="Reproducible northeast-model simulator and "
                    "experiment toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"northeast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, replicas=False):
        sp.add_argument("--config", help="key=value defaults file "
                        "(explicit flags win)")
        sp.add_argument("--out", default="runs",
                        help="output root directory")
        sp.add_argument("--seed", type=int, default=0,
                        help="master seed (64-bit)")
        sp.add_argument("--p", type=float, default=0.8,
                        help="reset-to-1 probability, in (0, 1)")
        sp.add_argument("--window", type=_parse_size, default=(64, 64),
                        metavar="WxH")
        sp.add_argument("--origin", type=_parse_site, default=(0, 0),
                        metavar="X,Y", help="southwest corner")
        sp.add_argument("--boundary", choices=sorted(BOUNDARIES),
                        default="ghost-ones")
        sp.add_argument("--t", type=float, default=100.0,
                        help="simulation end time")
        sp.add_argument("--sample-times", type=_parse_times, default=(),
                        metavar="T1,T2,...")
        if replicas:
            sp.add_argument("--replicas", type=int, default=1000)
            sp.add_argument("--workers", type=int, default=1,
                            help="process count for replica chunks")

    sim = sub.add_parser("simulate", help="run one engine and emit "
                         "snapshots")
    common(sim)
    sim.add_argument("--engine", choices=ENGINES, default="graphical")
    sim.add_argument("--initial", choices=("bernoulli", "zeros", "ones"),
                     default="bernoulli")
    sim.add_argument("--node-budget", type=int,
                     default=backward.DEFAULT_NODE_BUDGET,
                     help="backward-engine query node budget")

    exp = sub.add_parser("experiment", help="run a measurement driver")
    exp.add_argument("name", choices=EXPERIMENTS)
    common(exp, replicas=True)
    exp.add_argument("--block", type=_parse_size, default=(2, 2),
                     metavar="WxH", help="mixing: observed block size")
    exp.add_argument("--site", type=_parse_site, default=None,
                     metavar="X,Y", help="correlation: observed site")
    exp.add_argument("--box", type=_parse_size, default=None,
                     metavar="WxH",
                     help="tau: ordered-reset box (default: the window)")
    exp.add_argument("--start", choices=("stationary", "zeros"),
                     default="stationary",
                     help="mixing: initial law")
    exp.add_argument("--queries", action="store_true",
                     help="shape: also compute the queried-site raster")
    exp.add_argument("--trials", type=int, default=100000,
                     help="beta-c: Monte Carlo trials per probe")
    exp.add_argument("--depth", type=int, default=1000,
                     help="beta-c: survival depth")
    exp.add_argument("--tolerance", type=float, default=0.02,
                     help="beta-c: returned interval width")

    val = sub.add_parser("validate", help="run the invariant suites")
    val.add_argument("level", choices=("fast", "full"), nargs="?",
                     default="fast")
    val.add_argument("--inject-mark-fault", action="store_true",
                     help=argparse.SUPPRESS)  # fault-injection test hook

    rep = sub.add_parser("replay", help="re-run a manifest and verify "
                         "digests")
    rep.add_argument("manifest_path", metavar="manifest.json")
    rep.add_argument("--out", default="runs")
    parser.subcommands = dict(sub.choices)
    return parser


def _check_common(parser, args) -> None:
    if not 0 < args.p < 1:
        parser.error(f"--p must lie strictly between 0 and 1, "
                     f"got {args.p}")
    if args.t < 0:
        parser.error("--t must be nonnegative")
    st = args.sample_times
    if any(b <= a for a, b in zip(st, st[1:])) or any(
            t < 0 for t in st) or (st and st[-1] > args.t):
        parser.error("--sample-times must be increasing, nonnegative "
                     "and at most --t")
    if getattr(args, "replicas", 1) < 1:
        parser.error("--replicas must be at least 1")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _snapshot_name(t: float) -> str:
    return f"snapshot-{t:g}.pgm"


def _collect_outputs(man: manifest.RunManifest, run_dir: Path) -> None:
    for path in sorted(run_dir.iterdir()):
        if path.is_file() and path.name != manifest.MANIFEST_NAME:
            man.add_output(run_dir, path.name)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _initial_config(cfg: dict, region: Region, boundary: BoundaryRule,
                    seed: EventSeed) -> Configuration:
    kind = cfg["initial"]
    if kind == "bernoulli":
        return measures.sample_bernoulli(region, cfg["p"], seed, boundary)
    spins = np.full((region.height, region.width),
                    0 if kind == "zeros" else 1, np.int8)
    return Configuration(region, spins, boundary)


def run_simulate(cfg: dict, run_dir: Path) -> dict:
    region = Region(Site(*cfg["origin"]), *cfg["window"])
    boundary = BOUNDARIES[cfg["boundary"]]
    seed = EventSeed(cfg["seed"])
    p, t_end = cfg["p"], cfg["t"]
    init = _initial_config(cfg, region, boundary, seed)
    sample_times = tuple(cfg["sample_times"])
    engine = cfg["engine"]
    summary: dict = {"engine": engine}

    if engine == "backward":
        initial = backward.FixedInitial(init)
        memo = backward.QueryMemo()
        budget = int(cfg["node_budget"])
        for t in (*sample_times, t_end):
            snap, stats = backward.evaluate_region(
                region, t, p, seed, initial, memo, node_budget=budget)
            write_pgm(snap, run_dir / _snapshot_name(t), t)
        summary.update(tree_size=stats.tree_size,
                       queried_sites=len(stats.queried_sites),
                       max_depth=stats.max_depth)
        summary["final_density"] = float(snap.spins.mean())
        return summary

    state = forward.SimulationState(init)
    if engine == "graphical":
        for t in sample_times:
            forward.run_until_fast(state, t, p, seed, record_log=True)
            write_pgm(state.config, run_dir / _snapshot_name(t), t)
        forward.run_until_fast(state, t_end, p, seed, record_log=True)
    else:
        rf_seed = seed.with_domain(DOMAIN_REJECTION)
        for t in sample_times:
            forward.run_rejection_free(state, t, p, rf_seed)
            write_pgm(state.config, run_dir / _snapshot_name(t), t)
        forward.run_rejection_free(state, t_end, p, rf_seed)
    write_pgm(state.config, run_dir / _snapshot_name(t_end), t_end)
    _write_csv(run_dir / "resets.csv",
               ["x", "y", "time", "old", "new"],
               ((e.site.x, e.site.y, repr(e.time), e.old_spin,
                 e.new_spin) for e in state.reset_log))
    summary.update(resets=len(state.reset_log),
                   final_density=float(state.config.spins.mean()))
    return summary


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _build_plan(cfg: dict) -> experiments.ExperimentPlan:
    region = Region(Site(*cfg["origin"]), *cfg["window"])
    return experiments.ExperimentPlan(
        cfg["p"], region, cfg["t"],
        tuple(cfg["sample_times"]) or (cfg["t"],),
        cfg["replicas"], EventSeed(cfg["seed"]),
        BOUNDARIES[cfg["boundary"]])


def _centered_block(window: Region, size: tuple[int, int]) -> Region:
    w, h = size
    return Region(Site(window.origin.x + (window.width - w) // 2,
                       window.origin.y + (window.height - h) // 2),
                  w, h)


def run_experiment(cfg: dict, run_dir: Path) -> dict:
    name = cfg["name"]
    summary: dict = {"experiment": name}

    if name == "beta-c":
        est = percolation.estimate_beta_c(
            cfg["trials"], cfg["depth"], cfg["tolerance"],
            EventSeed(cfg["seed"]))
        _write_csv(run_dir / "probes.csv", ["beta", "survival"],
                   ((repr(b), repr(s)) for b, s in est.probes))
        summary.update(beta_c_low=est.low, beta_c_high=est.high,
                       p_c_low=est.p_c_low, p_c_high=est.p_c_high,
                       trials=est.trials, depth=est.depth)
        return summary

    plan = _build_plan(cfg)
    workers = cfg.get("workers", 1)

    if name == "mixing":
        block = _centered_block(plan.window, cfg["block"])
        initial = None
        if cfg["start"] == "zeros":
            initial = Configuration(
                plan.window,
                np.zeros((plan.window.height, plan.window.width),
                         np.int8),
                plan.boundary)
        res = experiments.block_mixing(plan, block, initial,
                                       workers=workers)
        _write_csv(run_dir / "mixing.csv", ["time", "tv"],
                   zip(res.times, res.tv))
        _write_csv(run_dir / "patterns.csv",
                   ["time"] + [f"n{i}" for i in
                               range(res.counts.shape[1])],
                   (np.column_stack([res.times, res.counts])))
        summary.update(noise_floor=res.noise_floor,
                       tv_final=float(res.tv[-1]),
                       block=f"{cfg['block'][0]}x{cfg['block'][1]}")
    elif name == "correlation":
        site = (Site(*cfg["site"]) if cfg.get("site") else
                _centered_block(plan.window, (1, 1)).origin)
        res = experiments.autocorrelation(plan, site, workers=workers)
        _write_csv(run_dir / "correlation.csv", ["time", "rho", "se"],
                   zip(res.times, res.rho, res.se))
        summary["site"] = f"{site.x},{site.y}"
        summary.update(_fit_summary(res.fit))
    elif name == "tau":
        box = (_centered_block(plan.window, cfg["box"])
               if cfg.get("box") else plan.window)
        res = experiments.tau_lambda_tail(plan, box, workers=workers)
        _write_csv(run_dir / "tau-survival.csv",
                   ["time", "survival", "se"],
                   zip(res.times, res.survival, res.se))
        _write_csv(run_dir / "taus.csv", ["replica", "tau"],
                   ((i, repr(t)) for i, t in enumerate(res.taus)))
        summary.update(_fit_summary(res.fit))
        summary["completions"] = int(np.isfinite(res.taus).sum())
        if res.fit_refused:
            summary["fit_refused"] = res.fit_refused
    elif name == "freeze":
        res = experiments.freeze_fraction(plan, workers=workers)
        _write_csv(run_dir / "freeze.csv", ["time", "fraction"],
                   zip(res.times, res.fraction))
        summary.update(static_density=res.static_density,
                       final_fraction=float(res.fraction[-1]))
    elif name == "shape":
        w, h = cfg["window"]
        if w != h:
            raise ValueError("the shape experiment needs a square "
                             "quadrant window")
        plan = experiments.ExperimentPlan(
            cfg["p"], Region(Site(0, 0), w, h), cfg["t"],
            tuple(cfg["sample_times"]) or (cfg["t"],), 1,
            EventSeed(cfg["seed"]))
        res = experiments.influence_region(
            plan, compute_queries=cfg.get("queries", False))
        for t, mask in zip(res.times, res.rasters):
            write_pgm_gray(mask.astype(np.uint8) * 255, Site(0, 0),
                           run_dir / f"r-{t:g}.pgm", t)
        write_pgm_gray(experiments.shape_raster_image(res),
                       res.padded.origin, run_dir / "composite.pgm",
                       res.times[-1])
        _write_csv(run_dir / "shape-hausdorff.csv",
                   ["t_from", "t_to", "distance"],
                   ((res.times[i], res.times[i + 1], repr(d))
                    for i, d in enumerate(res.hausdorff)))
        summary.update(times=[float(t) for t in res.times],
                       sizes=[int(m.sum()) for m in res.rasters],
                       aborted=res.aborted)
        if res.aborted:
            summary["abort_reason"] = res.abort_reason
            raise ExperimentAborted(summary)
    return summary


class ExperimentAborted(RuntimeError):
    """Raised after results are written, to signal a nonzero exit."""

    def __init__(self, summary: dict):
        super().__init__(summary.get("abort_reason", "aborted"))
        self.summary = summary


def _fit_summary(fit) -> dict:
    if fit is None:
        return {"fit": None}
    return {"fit": {"rate": fit.rate, "intercept": fit.intercept,
                    "r_squared": fit.r_squared}}


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _vcheck(report: list, name: str, func) -> None:
    try:
        detail = func()
        report.append((name, True, detail or ""))
    except Exception as exc:  # noqa: BLE001 - report, don't crash
        report.append((name, False, str(exc)))


def _check_fabric() -> str:
    from . import _kernels, fabric
    seed = EventSeed(2024)
    rng_region = Region(Site(-3, -3), 100, 100)
    u = fabric.uniform_grid(seed, rng_region)
    if not (0 < u.min() and u.max() < 1):
        raise AssertionError("uniforms outside (0,1)")
    mean, var = u.mean(), u.var()
    if abs(mean - 0.5) > 0.01 or abs(var - 1 / 12) > 0.01:
        raise AssertionError(f"uniform moments off: {mean}, {var}")
    for site in (Site(0, 0), Site(17, -4)):
        scalar = [_kernels.uniform_at(seed.key, seed.domain_key,
                                      site.x, site.y, 0, 1)]
        vec = fabric.uniform_grid(seed, Region(site, 1, 1))
        if scalar[0] != vec[0, 0]:
            raise AssertionError("scalar/vector uniform mismatch")
        times = fabric.event_times_upto(seed, site, 50.0)
        if not np.all(np.diff(times) > 0):
            raise AssertionError("event times not increasing")
    return f"uniform mean {mean:.4f}, var {var:.4f}"


def _check_cross_engine(inject_fault: bool = False) -> str:
    import unittest.mock
    region = Region(Site(0, 0), 12, 12)
    for p, seed_val in ((0.5, 1), (0.8, 2)):
        seed = EventSeed(seed_val)
        init = measures.sample_bernoulli(region, p, seed)
        state = forward.SimulationState(init)
        patch = None
        if inject_fault:
            true_mark = backward.fabric.mark_at

            def bad_mark(s, site, index, _orig=true_mark, _p=p):
                value = _orig(s, site, index)
                if site == (5, 5):
                    # push the mark across the threshold so any reset
                    # of this site lands on the opposite spin
                    return 0.99 if value <= _p else 0.0
                return value

            patch = unittest.mock.patch.object(backward.fabric,
                                               "mark_at", bad_mark)
            patch.start()
        try:
            snap, _ = backward.evaluate_region(
                region, 8.0, p, seed, backward.FixedInitial(init))
        finally:
            if patch is not None:
                patch.stop()
        forward.run_until_fast(state, 8.0, p, seed)
        if not np.array_equal(snap.spins, state.config.spins):
            raise AssertionError(
                f"forward and backward engines disagree at p={p}")
    return "forward == backward on 12x12, t=8"


def _check_stationarity() -> str:
    worst = 0.0
    for p in (0.3, 0.5, 0.8):
        chain = measures.ExactChain(Region(Site(0, 0), 2, 1), p)
        res = measures.exact_stationary(chain)
        worst = max(worst,
                    float(np.max(np.abs(res.pi -
                                        chain.product_measure()))),
                    res.detailed_balance_violation)
    if worst > 1e-10:
        raise AssertionError(f"stationarity error {worst}")
    return f"max error {worst:.2e}"


def _check_cluster_sweep(count: int) -> str:
    from .fabric import replica_seed
    region = Region(Site(0, 0), 8, 8)
    for i in range(count):
        cfg = measures.sample_bernoulli(
            region, 0.8, replica_seed(EventSeed(77), i))
        percolation.cluster_attached(cfg)  # raises on any violation
    return f"{count} random snapshots"


def _check_occupation() -> str:
    from scipy.stats import chi2
    region = Region(Site(0, 0), 2, 2)
    for p in (0.3, 0.5, 0.8):
        seed = EventSeed(int(p * 1000))
        init = measures.sample_bernoulli(region, p, seed)
        state = forward.SimulationState(init)
        times = tuple(np.arange(50.0, 50050.0, 25.0))
        out = forward.run_until_fast(
            state, times[-1], p, seed, sample_times=times,
            tracked_sites=list(region.sites()))
        patterns = out["tracked"].astype(np.int64) @ (1 << np.arange(4))
        counts = np.bincount(patterns, minlength=16)
        expected = measures.ExactChain(region, p).product_measure() \
            * len(times)
        stat = float(((counts - expected) ** 2 / expected).sum())
        # samples 2 time units apart are near-independent; allow slack
        if stat > 2 * chi2.ppf(0.99, 15):
            raise AssertionError(
                f"occupation chi-square {stat:.1f} at p={p}")
    return "2x2 occupation matches the product law"


def _check_trace_guard() -> str:
    trace = percolation.trace_cluster_process(
        Region(Site(0, 0), 3, 3), 0.8, EventSeed(5), 300.0,
        recompute_every=50)
    return f"{len(trace.jumps)} jumps, incremental == from-scratch"


def run_validate(level: str, inject_fault: bool = False) -> int:
    report: list = []
    _vcheck(report, "fabric-statistics", _check_fabric)
    _vcheck(report, "cross-engine-equality",
            lambda: _check_cross_engine(inject_fault))
    _vcheck(report, "exact-stationarity", _check_stationarity)
    _vcheck(report, "cluster-boundary-sweep",
            lambda: _check_cluster_sweep(300))
    if level == "full":
        _vcheck(report, "cluster-boundary-sweep-large",
                lambda: _check_cluster_sweep(3000))
        _vcheck(report, "occupation-frequencies", _check_occupation)
        _vcheck(report, "cluster-trace-guard", _check_trace_guard)
    failures = 0
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'} {name}"
              + (f" — {detail}" if detail else ""))
        failures += not ok
    print(f"{len(report) - failures}/{len(report)} checks passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _config_from_args(args) -> dict:
    keys = ("seed", "p", "window", "origin", "boundary", "t",
            "sample_times", "replicas", "workers", "engine", "initial",
            "node_budget", "name", "block", "site", "box", "start",
            "queries", "trials", "depth", "tolerance")
    cfg = {}
    for key in keys:
        if hasattr(args, key):
            value = getattr(args, key)
            cfg[key] = list(value) if isinstance(value, tuple) else value
    return cfg


def _restore_config(cfg: dict) -> dict:
    out = dict(cfg)
    for key in ("window", "origin", "block", "site", "box"):
        if out.get(key) is not None:
            out[key] = tuple(out[key])
    out["sample_times"] = tuple(out.get("sample_times") or ())
    return out


def _execute(command: str, cfg: dict, run_dir: Path) -> dict:
    if command == "simulate":
        return run_simulate(cfg, run_dir)
    if command == "experiment":
        return run_experiment(cfg, run_dir)
    raise ValueError(f"cannot execute {command!r} from a manifest")


def _run_and_record(command: str, experiment: str, cfg: dict,
                    out_root: str) -> tuple[int, Path]:
    run_dir = manifest.make_run_dir(out_root, experiment, cfg["seed"])
    man = manifest.RunManifest(command, experiment, dict(cfg),
                               cfg["seed"])
    code = 0
    try:
        man.summary = _execute(command, _restore_config(cfg), run_dir)
    except ExperimentAborted as exc:
        man.summary = exc.summary
        print(f"warning: {exc}", file=sys.stderr)
        code = 1
    except backward.BudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.summary = {"error": str(exc)}
        code = 1
    _collect_outputs(man, run_dir)
    man.finalize()
    man.write(run_dir)
    print(f"run directory: {run_dir}")
    return code, run_dir


def run_replay(manifest_path: str, out_root: str) -> int:
    man = manifest.load_manifest(manifest_path)
    code, run_dir = _run_and_record(man.command, man.experiment,
                                    man.config, out_root)
    if code:
        return code
    bad = manifest.verify_outputs(man, run_dir)
    if bad:
        print(f"replay mismatch in: {bad}", file=sys.stderr)
        return 1
    print(f"replay reproduced {len(man.outputs)} outputs exactly")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, parser.subcommands, argv)
    args = parser.parse_args(argv)

    if args.command == "validate":
        return run_validate(args.level, args.inject_mark_fault)
    if args.command == "replay":
        return run_replay(args.manifest_path, args.out)

    _check_common(parser, args)
    cfg = _config_from_args(args)
    if args.command == "simulate":
        experiment = f"simulate-{args.engine}"
    else:
        experiment = args.name
    code, _ = _run_and_record(args.command, experiment, cfg, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
