"""Command-line front end.

Subcommands: takeover, optimize, estimate-pij, optimal-beta, nk-gen, oracle.
Every subcommand writes CSV files into ``--out``; ``--plot`` adds PNG figures
next to them and ``--dump-config`` records the resolved parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import nk, pem, qap
from .batch import map_ordered
from .equilibrium import default_max_generations, takeover_stats
from .grid import GridConfig, run
from .tables import read_csv, write_csv


class ConfigError(Exception):
    def __init__(self, key, message):
        super().__init__(f"--{key}: {message}")
        self.key = key


class InputError(Exception):
    pass


def _beta_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty beta list")
    return values


def _beta_grid(text: str) -> list[float]:
    """``a:step:b`` range or comma list."""
    if ":" in text:
        try:
            lo, step, hi = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:step:stop, got {text!r}") from None
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 10) for i in range(count)]
    return _beta_list(text)


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def _check_betas(betas, key="beta"):
    for b in betas:
        _require(0.0 <= b <= 1.0, key, f"beta values must lie in [0, 1], got {b}")


def _check_positive(args, *keys):
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            _require(value >= 1, key, f"must be a positive integer, got {value}")


def _grid_dims(args) -> tuple[int, int]:
    width = args.width or args.side
    height = args.height or args.side
    _require(width >= 1, "width", f"must be positive, got {width}")
    _require(height >= 1, "height", f"must be positive, got {height}")
    return width, height


def _resolve_instance(args) -> Path:
    _require(args.instance is not None, "instance", "an instance file is required")
    path = Path(args.instance)
    if args.instance_dir is not None:
        path = Path(args.instance_dir) / path
        if not path.exists():
            suffix = ".dat" if args.problem == "qap" else ".nk"
            path = path.with_name(path.name + suffix)
    _require(path.is_file(), "instance", f"cannot read instance file {path}")
    return path


def load_problem(args):
    path = _resolve_instance(args)
    try:
        if args.problem == "qap":
            return qap.QapProblem(qap.load_qaplib(path)), "minimize", path.stem
        return nk.NkProblem(nk.load(path)), "maximize", path.stem
    except ValueError as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_config(args, out: Path) -> None:
    if args.dump_config:
        resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
        (out / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def cmd_takeover(args) -> None:
    _check_betas(args.beta)
    _check_positive(args, "side", "runs", "max-generations", "jobs")
    out = _out_dir(args)
    cap = args.max_generations or default_max_generations(args.side)
    takeover_rows, growth_rows, mating_rows = [], [], []
    summary, curves = [], {}
    for beta in args.beta:
        stats = takeover_stats(args.side, beta, args.runs, args.seed, cap, args.seed_cell, args.jobs)
        for r, rec in enumerate(stats.records):
            takeover_rows.append((beta, r, rec.takeover_time, rec.seed, rec.boundary_hit))
        dn = stats.mean_dn
        for t in range(1, len(stats.mean_n)):
            growth_rows.append((beta, t, float(stats.mean_n[t]), float(dn[t - 1])))
        for t, (a, b, c) in enumerate(stats.mean_counts, start=1):
            mating_rows.append((beta, t, float(a), float(b), float(c)))
        if stats.saturated:
            # one all-converged row marks the profile as extendable past its end
            mating_rows.append((beta, len(stats.mean_counts) + 1, 0.0, 0.0, float(stats.size)))
        undefined = sum(t is None for t in stats.takeover_times)
        summary.append((beta, stats.mean_takeover, stats.std_takeover, undefined))
        curves[beta] = (np.arange(len(stats.mean_n)), stats.mean_n, np.concatenate([[0.0], dn]))
    write_csv(out / "takeover.csv", ("beta", "replicate", "takeover_time", "seed", "boundary_hit"),
              takeover_rows)
    write_csv(out / "growth.csv", ("beta", "t", "mean_N", "mean_dN"), growth_rows)
    write_csv(out / "matings.csv", ("beta", "t", "mean_n00", "mean_n01", "mean_n11"), mating_rows)
    for beta, mean, std, undefined in summary:
        shown = "undefined" if mean is None else f"{mean:.2f} +/- {std:.2f}"
        print(f"beta={beta:g} takeover={shown} undefined_runs={undefined}")
    if args.plot:
        from . import plotting

        defined = [(b, m, s) for b, m, s, _ in summary if m is not None]
        if defined:
            plotting.takeover_figure(*zip(*defined), out / "takeover.png")
        plotting.growth_figure(curves, out / "growth.png")


def _optimize_one(problem, config, generations, seed):
    log = run(problem, config, generations, seed)
    return log.best_fitness_series


def cmd_optimize(args) -> None:
    _check_betas(args.beta)
    _check_positive(args, "runs", "generations", "jobs")
    width, height = _grid_dims(args)
    problem, orientation, name = load_problem(args)
    out = _out_dir(args)
    summary_rows, run_rows, series_rows, raw_rows = [], [], [], []
    for beta in args.beta:
        config = GridConfig(width, height, beta, orientation)
        jobs = [(problem, config, args.generations, args.seed + r) for r in range(args.runs)]
        series = np.array(map_ordered(_optimize_one, jobs, args.jobs))
        finals = series[:, -1]
        summary_rows.append((beta, float(finals.mean()), float(finals.std()), args.runs))
        run_rows.extend((beta, r, args.seed + r, float(f)) for r, f in enumerate(finals))
        mean_series = series.mean(axis=0)
        series_rows.extend((beta, t, float(v)) for t, v in enumerate(mean_series))
        if args.raw_series:
            raw_rows.extend(
                (beta, r, t, float(v)) for r, row in enumerate(series) for t, v in enumerate(row)
            )
        print(f"{name} beta={beta:g} mean_best={finals.mean():.6g} std={finals.std():.4g}")
    write_csv(out / "optimize_summary.csv", ("beta", "mean_best", "std_best", "runs"), summary_rows)
    write_csv(out / "optimize_runs.csv", ("beta", "run", "seed", "best"), run_rows)
    write_csv(out / "best_series.csv", ("beta", "t", "mean_best"), series_rows)
    if args.raw_series:
        write_csv(out / "best_series_raw.csv", ("beta", "run", "t", "best"), raw_rows)
    if args.plot:
        from . import plotting

        b, m, s, _ = zip(*summary_rows)
        plotting.performance_figure(b, m, s, out / "performance.png")


PIJ_HEADER = (
    "window_start", "p00", "p01", "p11", "trials00", "trials01", "trials11",
    "successes00", "successes01", "successes11", "sd00", "sd01", "sd11",
    "low_confidence00", "low_confidence01", "low_confidence11",
)


def write_pij(path, estimate: pem.PijEstimate) -> None:
    rows = []
    for w in range(len(estimate)):
        rows.append(
            (int(estimate.window_starts[w]), *map(float, estimate.means[w]),
             *map(int, estimate.trials[w]), *map(int, estimate.successes[w]),
             *map(float, estimate.sds[w]), *map(bool, estimate.low_confidence[w]))
        )
    write_csv(path, PIJ_HEADER, rows)


def read_pij(path, window: int | None = None) -> pem.PijEstimate:
    rows = read_csv(path)
    if not rows:
        raise InputError(f"{path} holds no windows")
    try:
        starts = np.array([int(r["window_start"]) for r in rows])
        trials = np.array([[int(r[f"trials{k}"]) for k in ("00", "01", "11")] for r in rows])
        successes = np.array([[int(r[f"successes{k}"]) for k in ("00", "01", "11")] for r in rows])
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path} is not a pij.csv table: {exc}") from exc
    if window is None:
        window = int(starts[1] - starts[0]) if len(starts) > 1 else pem.DEFAULT_WINDOW
    return pem.PijEstimate(window, starts, successes, trials)


def read_profile(path) -> pem.SigmaProfile:
    rows = read_csv(path)
    if not rows:
        raise InputError(f"{path} holds no rows")
    grouped: dict[float, list] = {}
    try:
        for r in rows:
            grouped.setdefault(float(r["beta"]), []).append(
                (int(r["t"]), float(r["mean_n00"]), float(r["mean_n01"]), float(r["mean_n11"]))
            )
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path} is not a matings.csv table: {exc}") from exc
    betas = sorted(grouped)
    counts, saturated = [], []
    size = None
    for beta in betas:
        series = np.array(sorted(grouped[beta]))[:, 1:]
        total = int(round(series[0].sum()))
        size = size or total
        counts.append(series)
        saturated.append(bool(series[-1, 0] == 0 and series[-1, 1] == 0))
    return pem.SigmaProfile(np.array(betas), size, counts, saturated)


def _estimate(args, problem, orientation):
    width, height = _grid_dims(args)
    config = GridConfig(width, height, args.estimation_beta, orientation)
    return pem.estimate_pij(problem, config, args.runs, args.generations, args.window, args.seed, args.jobs)


def cmd_estimate_pij(args) -> None:
    _check_betas([args.estimation_beta], "estimation-beta")
    _check_positive(args, "runs", "generations", "window", "jobs")
    problem, orientation, name = load_problem(args)
    out = _out_dir(args)
    estimate = _estimate(args, problem, orientation)
    write_pij(out / "pij.csv", estimate)
    print(f"{name}: {len(estimate)} windows of {args.window} generations from {args.runs} runs")
    if args.plot:
        from . import plotting

        plotting.pij_figure(estimate.window_starts, estimate.means, out / "pij.png")


def cmd_optimal_beta(args) -> None:
    _check_positive(args, "horizon", "jobs")
    out = _out_dir(args)
    if args.compute:
        _check_betas(args.betas, "betas")
        _check_positive(args, "runs", "generations", "window", "takeover-runs")
        problem, orientation, _ = load_problem(args)
        width, height = _grid_dims(args)
        _require(width == height, "side", "selection-only profiles need a square grid")
        profile = pem.sigma_profile(width, args.betas, args.takeover_runs, args.horizon, args.seed, args.jobs)
        rows = [
            (float(b), t, *map(float, c))
            for b, counts in zip(profile.betas, profile.counts)
            for t, c in enumerate(counts, start=1)
        ]
        write_csv(out / "matings.csv", ("beta", "t", "mean_n00", "mean_n01", "mean_n11"), rows)
        estimate = _estimate(args, problem, orientation)
        write_pij(out / "pij.csv", estimate)
    else:
        missing = [f"--{k} ({name})" for k, name in (("matings", "matings.csv"), ("pij", "pij.csv"))
                   if getattr(args, k) is None or not Path(getattr(args, k)).is_file()]
        if missing:
            raise InputError("missing required inputs: " + ", ".join(missing) + " (or pass --compute)")
        profile = read_profile(args.matings)
        estimate = read_pij(args.pij, args.window)
    try:
        trajectory = pem.beta_trajectory(profile, estimate, args.horizon, args.per_window)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    write_csv(
        out / "optimal_beta.csv",
        ("window_start", "beta_star", "P_at_star"),
        [(int(s), float(b), float(p)) for s, b, p in
         zip(trajectory.window_starts, trajectory.beta_star, trajectory.p_star)],
    )
    last = trajectory.last
    horizon = estimate.window if args.per_window else args.horizon
    sigma = profile.at(horizon)
    probs = estimate.probabilities(len(estimate) - 1)
    residuals = [pem.stationarity_residual(profile.betas, sigma, probs, b) for b in profile.betas]
    write_csv(
        out / "p_curve.csv",
        ("beta", "P", "log_survival", "residual", "one_sided"),
        [(float(b), float(p), float(ls), r.value, r.one_sided)
         for b, p, ls, r in zip(profile.betas, last.p_curve, last.log_survival, residuals)],
    )
    print("beta* by window: " + " ".join(f"{b:g}" for b in trajectory.beta_star))
    if args.plot:
        from . import plotting

        plotting.optimal_beta_figure(trajectory.window_starts, trajectory.beta_star, out / "optimal_beta.png")
        plotting.p_curve_figure(profile.betas, last.p_curve, out / "p_curve.png")


def cmd_nk_gen(args) -> None:
    _require(args.n >= 1, "n", f"must be positive, got {args.n}")
    _require(0 <= args.k <= args.n - 1, "k", f"must lie in [0, N-1] = [0, {args.n - 1}], got {args.k}")
    landscape = nk.generate(args.n, args.k, args.model, np.random.default_rng(args.seed))
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
    else:
        path = _out_dir(args) / f"nk_n{args.n}_k{args.k}_{args.model}_s{args.seed}.nk"
    nk.save(landscape, path)
    print(path)


def cmd_oracle(args) -> None:
    _require(bool(args.nk or args.qap), "nk", "give at least one --nk or --qap instance")
    out = _out_dir(args)
    rows = []
    for path in args.nk or []:
        try:
            landscape = nk.load(path)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        if landscape.n > nk.BRUTEFORCE_MAX_N:
            raise InputError(f"{path}: N={landscape.n} exceeds the enumeration limit {nk.BRUTEFORCE_MAX_N}")
        bits, value = nk.global_optimum_bruteforce(landscape)
        rows.append((Path(path).name, value, "".join(map(str, bits))))
    for path in args.qap or []:
        try:
            instance = qap.load_qaplib(path)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        if instance.n > qap.BRUTEFORCE_MAX_N:
            raise InputError(f"{path}: n={instance.n} exceeds the enumeration limit {qap.BRUTEFORCE_MAX_N}")
        perm, value = qap.bruteforce_optimum(instance)
        rows.append((Path(path).name, value, " ".join(map(str, perm))))
    write_csv(out / "oracle.csv", ("instance", "optimum_value", "optimum_solution"), rows)
    for name, value, sol in rows:
        print(f"{name}: {value!r} [{sol}]")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed; replicate r uses seed + r")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--dump-config", action="store_true", help="write config.json into --out")
    p.add_argument("--plot", action="store_true", help="also render PNG figures into --out")


def _problem_args(p: argparse.ArgumentParser, runs: int, generations: int) -> None:
    p.add_argument("--problem", choices=("qap", "nk"), required=True)
    p.add_argument("--instance", help="instance file (QAPLIB .dat or .nk)")
    p.add_argument("--instance-dir", help="directory holding instance files")
    p.add_argument("--side", type=int, default=20)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--runs", type=int, default=runs)
    p.add_argument("--generations", type=int, default=generations)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="centric-cea", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("takeover", help="selection-only takeover experiments")
    _common(p)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--beta", type=_beta_grid, default=[0.2, 0.4, 0.6, 0.8, 0.95, 1.0],
                   help="comma list or start:step:stop")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--max-generations", type=int, help="cap per run (default 100 x side)")
    p.add_argument("--seed-cell", choices=("random", "center"), default="random")
    p.set_defaults(func=cmd_takeover)

    p = sub.add_parser("optimize", help="beta sweep of full optimization runs")
    _common(p)
    _problem_args(p, runs=30, generations=1500)
    p.add_argument("--beta", type=_beta_list, default=[0.2, 0.5, 0.85, 1.0])
    p.add_argument("--raw-series", action="store_true", help="also write every run's best series")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("estimate-pij", help="Bayesian estimates of per-mating-type success rates")
    _common(p)
    _problem_args(p, runs=100, generations=1500)
    p.add_argument("--estimation-beta", type=float, default=0.2)
    p.add_argument("--window", type=int, default=pem.DEFAULT_WINDOW)
    p.set_defaults(func=cmd_estimate_pij)

    p = sub.add_parser("optimal-beta", help="optimal beta per window from matings.csv and pij.csv")
    _common(p)
    p.add_argument("--matings", help="matings.csv from the takeover subcommand")
    p.add_argument("--pij", help="pij.csv from the estimate-pij subcommand")
    p.add_argument("--horizon", type=int, default=pem.DEFAULT_HORIZON)
    p.add_argument("--per-window", action="store_true", help="use the window length as horizon")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--compute", action="store_true", help="compute both inputs in-process")
    p.add_argument("--problem", choices=("qap", "nk"))
    p.add_argument("--instance")
    p.add_argument("--instance-dir")
    p.add_argument("--side", type=int, default=20)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--generations", type=int, default=1500)
    p.add_argument("--estimation-beta", type=float, default=0.2)
    p.add_argument("--takeover-runs", type=int, default=1000)
    p.add_argument("--betas", type=_beta_grid, default=list(pem.DEFAULT_BETAS))
    p.set_defaults(func=cmd_optimal_beta)

    p = sub.add_parser("nk-gen", help="generate and serialize an NK landscape")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--model", choices=nk.MODELS, default="random")
    p.add_argument("--output", help="target .nk file (default: <out>/nk_n<N>_k<K>_<model>_s<seed>.nk)")
    p.set_defaults(func=cmd_nk_gen)

    p = sub.add_parser("oracle", help="exhaustive optima of small instances")
    _common(p)
    p.add_argument("--nk", action="append", help=".nk instance (repeatable)")
    p.add_argument("--qap", action="append", help="QAPLIB instance (repeatable)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "optimal-beta" and args.compute and args.window is None:
        args.window = pem.DEFAULT_WINDOW
    try:
        args.func(args)
        _dump_config(args, _out_dir(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
