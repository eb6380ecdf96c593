"""Command-line entry point.

Subcommands: simulate, fit, select, benchmark, predict, residuals.  Every
option can also come from a flat ``key=value`` file given with
``--config``; command-line flags win over the file.  Exit codes: 0 on
success, 2 for invalid input, 3 for numerical failures.
"""

import argparse
import csv
import io
import math
import sys
import time

import numpy as np
from scipy.spatial import cKDTree

from .bandwidth import (BandwidthSearchSpace, Criterion, default_init_H, grid_search_diagonal,
                        nelder_mead_select, radius_from_b)
from .circular import signed_residual
from .estimators import AngularSample, EmptyNeighborhood, Fallback, fit_arrays
from .evaluation import MonteCarloPlan, prediction_error, run_monte_carlo
from .kernels import KernelSpec, parse_bandwidth
from .spatial import (Exponential, NotPSD, ProjectedGPSpec, RationalQuadratic, ScenarioSpec,
                      WrappedGPSpec, generate_sample, replicate_rng)
from .theory import IndefiniteCurvature

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (NotPSD, np.linalg.LinAlgError, EmptyNeighborhood, IndefiniteCurvature,
                  FloatingPointError, ArithmeticError)


class ConfigError(ValueError):
    pass


def fmt(v):
    return format(float(v), ".17g")


# --------------------------------------------------------------------- I/O

def read_table(path):
    """Read a CSV with a header row; ``#`` lines are comments."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return [], np.empty((0, 0))
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}: row {k} has {len(r)} fields, header has {len(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    return header, data.reshape(len(body), len(header))


def load_dataset(path, degrees=False, need_theta=True):
    """Columns ``x1..xd`` plus ``theta``.  Returns ``(X, theta or None)``."""
    header, data = read_table(path)
    xcols = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    if not header or not xcols:
        if not header:
            return np.empty((0, 0)), np.empty(0)
        raise ValueError(f"{path}: expected columns x1..xd and theta")
    X = data[:, xcols]
    theta = None
    if "theta" in header:
        theta = data[:, header.index("theta")]
        if degrees:
            theta = np.deg2rad(theta)
    elif need_theta:
        raise ValueError(f"{path}: missing 'theta' column")
    return X, theta


def write_table(out, header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def angle_out(a, degrees):
    return np.rad2deg(a) if degrees else a


# ------------------------------------------------------------------ config

def parse_config(path):
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = (value, lineno)
    return cfg


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def merge_config(parser, args, defaults):
    """Fill unset options from ``--config`` and then from ``defaults``."""
    if getattr(args, "config", None):
        known = {a.dest: a for a in parser._actions if a.dest not in ("help", "config")}
        for key, (value, lineno) in parse_config(args.config).items():
            if key not in known:
                raise ConfigError(f"{args.config}:{lineno}: unknown key {key!r}")
            if getattr(args, key) is not None:
                continue  # flag given on the command line
            action = known[key]
            conv = _bool if action.nargs == 0 else (action.type or str)
            try:
                setattr(args, key, conv(value))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{args.config}:{lineno}: bad value for {key!r}: {exc}") from None
    for key, value in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


# ---------------------------------------------------------------- builders

def _floats(text):
    return tuple(float(v) for v in str(text).split(","))


def _add_scenario_options(p, d):
    p.add_argument("--regression", choices=["r1", "r2"])
    p.add_argument("--errors", choices=["wrapped", "projected"])
    p.add_argument("--corr", choices=["exponential", "rational_quadratic"])
    p.add_argument("--range", type=float, help="practical range a_e (exponential)")
    p.add_argument("--rq-a", type=float, help="rational-quadratic parameter")
    p.add_argument("--sigma2", type=float, help="wrapped process variance")
    p.add_argument("--mu", type=float, help="wrapped process mean")
    p.add_argument("--proj-mu", type=_floats, help="projected process mean, 'a,b'")
    p.add_argument("--sigma", type=float, help="projected process scale")
    p.add_argument("--tau", type=float, help="projected process correlation")
    p.add_argument("--n", type=int)
    p.add_argument("--centered-grid", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    d.update(regression="r1", errors="wrapped", corr="exponential", range=0.1, rq_a=1.0,
             sigma2=1.0, mu=0.0, proj_mu=(1.0, 1.0), sigma=1.0, tau=0.9, n=100,
             centered_grid=False, seed=0)


def build_scenario(a):
    corr = Exponential(a.range) if a.corr == "exponential" else RationalQuadratic(a.rq_a)
    if a.errors == "wrapped":
        errors = WrappedGPSpec(corr, mu=a.mu, sigma2=a.sigma2)
    else:
        if len(a.proj_mu) != 2:
            raise ValueError("proj-mu needs two values")
        errors = ProjectedGPSpec(corr, mu=a.proj_mu, sigma=a.sigma, tau=a.tau)
    return ScenarioSpec(errors, a.regression, a.n, a.seed, centered_grid=a.centered_grid)


def _add_selector_options(p, d):
    p.add_argument("--H", dest="H", help="bandwidth, e.g. 'diag:0.2,0.3' or 'full:a,b,b,c'")
    p.add_argument("--selector", "--criterion", dest="selector", choices=["cv", "mcv"])
    p.add_argument("--b", type=int, help="MCV radius index, l = sqrt(2) b / 10")
    p.add_argument("--radius", type=float, help="MCV radius given directly")
    p.add_argument("--space", choices=["diag-grid", "full-spd"])
    p.add_argument("--grid-points", type=int)
    p.add_argument("--grid-lo", type=float)
    p.add_argument("--grid-hi", type=float)
    p.add_argument("--tol-f", type=float)
    p.add_argument("--tol-x", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--p", type=int, choices=[0, 1])
    p.add_argument("--degrees", action="store_true", default=None)
    d.update(H=None, selector="mcv", b=2, radius=None, space="full-spd", grid_points=15,
             grid_lo=0.05, grid_hi=1.5, tol_f=1e-6, tol_x=1e-6, max_iter=None, p=1,
             degrees=False)


def build_criterion(a):
    if a.selector == "cv":
        return Criterion.cv()
    if a.radius is not None:
        return Criterion.mcv(a.radius)
    return Criterion.mcv_b(a.b)


def select_bandwidth(sample, a):
    """Return ``(H, report or None)`` according to the selector options."""
    if a.H:
        return parse_bandwidth(a.H, d=sample.d), None
    spec = KernelSpec(d=sample.d)
    crit = build_criterion(a)
    init = default_init_H(sample)
    if a.space == "diag-grid":
        space = BandwidthSearchSpace.log_grid(init, a.grid_points, a.grid_lo, a.grid_hi)
        rep = grid_search_diagonal(sample, spec, a.p, crit, space)
    else:
        rep = nelder_mead_select(sample, spec, a.p, crit, init, a.tol_f, a.tol_x, a.max_iter)
    return rep.chosen_H, rep


def _report_lines(H, rep, label):
    lines = [f"criterion: {label}", "H:"]
    lines += ["  " + row for row in H.format(4).splitlines()]
    if rep is not None:
        lines += [f"value: {fmt(rep.criterion_value)}", f"evaluations: {rep.evaluations}",
                  f"converged: {str(rep.converged).lower()}"]
    return lines


def _sample_from(path, degrees):
    X, theta = load_dataset(path, degrees)
    if X.shape[0] == 0:
        raise ValueError(f"{path}: dataset is empty")
    return AngularSample(X, theta)


# ---------------------------------------------------------------- commands

def cmd_simulate(a):
    scen = build_scenario(a)
    sample, truth, _ = generate_sample(scen, replicate_rng(a.seed, a.replicate))
    d = sample.d
    header = [f"x{j + 1}" for j in range(d)]
    echo = [f"seed={a.seed} replicate={a.replicate}",
            f"regression={a.regression} errors={a.errors} corr={a.corr} n={a.n}"]
    theta = angle_out(sample.theta, a.degrees)
    write_table(a.out, header + ["theta"], np.column_stack([sample.X, theta]), echo)
    if a.truth:
        write_table(a.truth, header + ["theta"],
                    np.column_stack([sample.X, angle_out(truth, a.degrees)]), echo)
    return EXIT_OK


def _estimation_points(a, X):
    if a.at:
        pts, _ = load_dataset(a.at, need_theta=False)
        if pts.shape[1] != X.shape[1]:
            raise ValueError("evaluation points and data have different dimensions")
        return pts, None
    if a.grid < 2:
        raise ValueError("--grid needs at least 2 points per axis")
    axes = [np.linspace(lo, hi, a.grid) for lo, hi in zip(X.min(axis=0), X.max(axis=0))]
    mesh = np.meshgrid(*axes, indexing="ij")
    cell = max(float(ax[1] - ax[0]) for ax in axes)
    return np.column_stack([m.ravel() for m in mesh]), cell


def cmd_fit(a):
    sample = _sample_from(a.data, a.degrees)
    H, rep = select_bandwidth(sample, a)
    pts, cell = _estimation_points(a, sample.X)
    surf = fit_arrays(sample, KernelSpec(d=sample.d), H, pts, a.p)
    dropped = np.zeros(len(pts), dtype=bool)
    if a.drop_far is not None:
        if cell is None:
            raise ValueError("--drop-far needs a regular estimation grid, not --at")
        dist, _ = cKDTree(sample.X).query(pts)
        dropped |= dist > a.drop_far * cell
    if a.drop_unstable:
        dropped |= surf.fallback != Fallback.NONE
    header = [f"x{j + 1}" for j in range(sample.d)] + ["m_hat", "resultant", "fallback", "dropped"]
    rows = [list(pts[k]) + [angle_out(surf.m_hat[k], a.degrees), surf.resultant[k],
                            str(int(surf.fallback[k])), str(int(dropped[k]))]
            for k in range(len(pts))]
    write_table(a.out, header, rows, _report_lines(H, rep, _label(a)))
    return EXIT_OK


def _label(a):
    if a.H:
        return "fixed"
    if a.selector == "cv":
        return "cv"
    return f"mcv(l={a.radius:g})" if a.radius is not None else f"mcv(b={a.b})"


def cmd_select(a):
    sample = _sample_from(a.data, a.degrees)
    if a.H:
        raise ValueError("select chooses a bandwidth; drop --H")
    H, rep = select_bandwidth(sample, a)
    for line in _report_lines(H, rep, _label(a)):
        print(line)
    trace_rows = [list(Hk.matrix[np.tril_indices(Hk.d)]) + [v] for Hk, v in rep.trace]
    tri = [f"h{i + 1}{j + 1}" for i, j in zip(*np.tril_indices(sample.d))]
    if a.trace:
        write_table(a.trace, tri + ["value"], trace_rows)
    elif a.space == "diag-grid":
        write_table(None, tri + ["value"], trace_rows)
    return EXIT_OK


def cmd_benchmark(a):
    scen = build_scenario(a)
    selectors = tuple(s.strip() for s in a.selectors.split(",") if s.strip())
    plan = MonteCarloPlan(scen, replicates=a.replicates, p=a.p, selectors=selectors,
                          master_seed=a.master_seed, grid_points=a.grid_points,
                          grid_lo=a.grid_lo, grid_hi=a.grid_hi)
    t0 = time.perf_counter()
    res = run_monte_carlo(plan, workers=a.workers)
    elapsed = time.perf_counter() - t0
    echo = [f"master_seed={a.master_seed} replicates={a.replicates}",
            f"grid_points={a.grid_points} grid_lo={a.grid_lo:g} grid_hi={a.grid_hi:g} "
            f"centered_grid={str(a.centered_grid).lower()}"]
    text = "".join(f"# {c}\n" for c in echo) + res.to_csv()
    if a.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(a.out, "w", newline="") as fh:
            fh.write(text)
    # timings vary run to run, so they never go into the table itself
    if a.timing:
        write_table(a.timing, ["replicate", "seconds", "error"],
                    [[str(r.index), r.seconds, r.error] for r in res.records])
    print(f"benchmark: {a.replicates} replicates in {elapsed:.1f} s", file=sys.stderr)
    failed = [r for r in res.records if not r.ok]
    for r in failed:
        print(f"replicate {r.index} failed: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if len(failed) == len(res.records) else EXIT_OK


def cmd_predict(a):
    train = _sample_from(a.train, a.degrees)
    Xt, tt = load_dataset(a.test, a.degrees)
    header = [f"x{j + 1}" for j in range(train.d)] + ["theta", "m_hat", "risk"]
    if Xt.shape[0] == 0:
        print("warning: test file is empty; prediction error is 0", file=sys.stderr)
        write_table(a.out, header, [], ["prediction_error=0"])
        return EXIT_OK
    if Xt.shape[1] != train.d:
        raise ValueError(f"dimension mismatch: train d={train.d}, test d={Xt.shape[1]}")
    H, rep = select_bandwidth(train, a)
    fits = fit_arrays(train, KernelSpec(d=train.d), H, Xt, a.p)
    err = prediction_error(tt, fits)
    risk = np.where(np.isnan(fits.m_hat), 2.0, 1 - np.cos(tt - fits.m_hat))
    rows = np.column_stack([Xt, angle_out(tt, a.degrees), angle_out(fits.m_hat, a.degrees), risk])
    comments = _report_lines(H, rep, _label(a)) + [f"prediction_error={fmt(err)}"]
    write_table(a.out, header, rows, comments)
    print(f"prediction_error={fmt(err)}", file=sys.stderr)
    return EXIT_OK


def cmd_residuals(a):
    X, theta = load_dataset(a.data, a.degrees)
    header, fitted = read_table(a.fitted)
    if "m_hat" not in header:
        raise ValueError(f"{a.fitted}: missing 'm_hat' column")
    if fitted.shape[0] != X.shape[0]:
        raise ValueError(f"alignment: {X.shape[0]} observations but {fitted.shape[0]} fitted rows")
    xcols = [header.index(f"x{j + 1}") for j in range(X.shape[1]) if f"x{j + 1}" in header]
    if xcols and not np.allclose(fitted[:, xcols], X[:, :len(xcols)], rtol=0, atol=1e-12):
        raise ValueError("alignment: fitted locations differ from data locations")
    m_hat = fitted[:, header.index("m_hat")]
    if a.degrees:
        m_hat = np.deg2rad(m_hat)
    res = np.full(len(theta), np.nan)
    ok = ~np.isnan(m_hat)
    res[ok] = signed_residual(theta[ok], m_hat[ok])
    rows = np.column_stack([X, angle_out(theta, a.degrees), angle_out(m_hat, a.degrees),
                            angle_out(res, a.degrees)])
    write_table(a.out, [f"x{j + 1}" for j in range(X.shape[1])] + ["theta", "m_hat", "residual"],
                rows)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser():
    parser = argparse.ArgumentParser(prog="circtrend",
                                     description="Kernel trend estimation for circular spatial data.")
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--out", help="output file (default: stdout)")
        d = {"out": None}
        defaults[name] = d
        p.set_defaults(func=func)
        return p, d

    p, d = add("simulate", cmd_simulate, "simulate a dataset from a scenario")
    _add_scenario_options(p, d)
    p.add_argument("--replicate", type=int)
    p.add_argument("--truth", help="also write the true trend at the locations")
    p.add_argument("--degrees", action="store_true", default=None)
    d.update(replicate=0, truth=None, degrees=False)

    p, d = add("fit", cmd_fit, "fit a trend surface")
    p.add_argument("data")
    _add_selector_options(p, d)
    p.add_argument("--grid", type=int, help="points per axis of the estimation grid")
    p.add_argument("--at", help="CSV of evaluation points (columns x1..xd)")
    p.add_argument("--drop-far", type=float, help="drop grid points farther than this many cells from data")
    p.add_argument("--drop-unstable", action="store_true", default=None)
    d.update(grid=30, at=None, drop_far=None, drop_unstable=False)

    p, d = add("select", cmd_select, "select a bandwidth matrix")
    p.add_argument("data")
    _add_selector_options(p, d)
    p.add_argument("--trace", help="write every evaluated (H, value) pair here")
    d.update(trace=None)

    p, d = add("benchmark", cmd_benchmark, "Monte Carlo comparison of selectors")
    _add_scenario_options(p, d)
    p.add_argument("--replicates", type=int)
    p.add_argument("--p", type=int, choices=[0, 1])
    p.add_argument("--selectors", help="comma list of CV, MCV<b>, CASE")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--grid-points", type=int)
    p.add_argument("--grid-lo", type=float)
    p.add_argument("--grid-hi", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", help="per-replicate runtimes (kept out of the table)")
    d.update(replicates=100, p=0, selectors="CV,MCV1,MCV2,MCV3,CASE", master_seed=0,
             grid_points=15, grid_lo=0.05, grid_hi=1.5, workers=None, timing=None)

    p, d = add("predict", cmd_predict, "predict test directions from a training set")
    p.add_argument("train")
    p.add_argument("test")
    _add_selector_options(p, d)

    p, d = add("residuals", cmd_residuals, "signed residuals of a fit at the data points")
    p.add_argument("data")
    p.add_argument("fitted", help="CSV with an m_hat column aligned with the data rows")
    p.add_argument("--degrees", action="store_true", default=None)
    d.update(degrees=False)
    return parser, sub, defaults


def main(argv=None):
    parser, sub, defaults = build_parser()
    args = parser.parse_args(argv)
    try:
        merge_config(sub.choices[args.command], args, defaults[args.command])
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
