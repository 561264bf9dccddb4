"""Command-line experiment runner.

Subcommands ``laws``, ``solve``, ``invariant``, ``validate``, ``simulate`` and
``report`` each run one stage; ``run`` chains the stages the requested
validators need. Exit codes: 0 pass, 1 validation failure, 2 configuration
error, 3 numerical error.

Output layout under ``--out``::

    config.yaml           echo of the parsed configuration
    intensities.csv       index, a, b                         (laws)
    flow.csv              t, s, F, R, M, tau                  (solve)
    p00.csv               t, log_p00, p00                     (solve)
    invariant.csv         j, m_j                              (invariant)
    reports/<name>.csv    one file per validator              (validate, simulate)
    summary.txt           pass/fail lines                     (report)
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import traceback
from pathlib import Path

import numpy as np

from . import asymptotics, config as cfgmod, invariant, kolmogorov, laws, montecarlo
from .errors import ConfigError, ConstructionError, MBPIError, NumericalError, RegimeError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SCHRODER_TOL = 1e-6
INVARIANCE_TOL = 1e-4


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage} failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc


def _write(path: Path, text: str, cfg):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"# {cfg.header()}\n" + text)
    return path


def _csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([x if isinstance(x, (int, np.integer)) else repr(float(x)) for x in r])
    return buf.getvalue()


def stage_laws(cfg, out: Path):
    spec = cfg.process
    table = laws.build_intensities(spec, cfg.truncation.J)
    tmp = io.StringIO()
    tmp.write(f"# J={table.J} tail_mass_a={table.tail_mass_a!r} tail_mass_b={table.tail_mass_b!r}\n")
    tmp.write(_csv([(j, table.a[j], table.b[j]) for j in range(table.J + 1)], ["index", "a", "b"]))
    _write(out / "intensities.csv", tmp.getvalue(), cfg)
    _, deriv = laws.criticality_check(spec)
    return [f"laws: J={table.J} tail_mass_a={table.tail_mass_a:.3e} tail_mass_b={table.tail_mass_b:.3e}"
            f" f'(1-) ~ {deriv:.3e}"]


def stage_solve(cfg, out: Path):
    spec, g = cfg.process, cfg.grids
    _write(out / "flow.csv", kolmogorov.flow_grid_csv(spec, g.t, g.s), cfg)
    logp = kolmogorov.log_transition_gf_grid(spec, 0, g.t, [0.0])[:, 0]
    _write(out / "p00.csv", _csv(zip(g.t, logp, np.exp(logp)), ["t", "log_p00", "p00"]), cfg)
    return [f"solve: {len(g.t)} x {len(g.s)} flow grid, p00(t_max) = {np.exp(logp[-1]):.6g}"]


def stage_invariant(cfg, out: Path):
    meas = invariant.invariant_measure(cfg.process, cfg.truncation.N)
    _write(out / "invariant.csv", meas.to_csv(), cfg)
    return [f"invariant: {meas.kind} N={meas.coeffs.N} m_0={meas.m[0]:.12g}"], meas


def _report_file(cfg, out, name, passed, body, extra_header=()):
    head = [f"validator={name} passed={passed}", *extra_header]
    text = "".join(f"# {h}\n" for h in head) + body
    _write(out / "reports" / f"{name}.csv", text, cfg)


def _validate_asymptotic(cfg, out, name, plot):
    spec, g = cfg.process, cfg.grids
    if name == "thm1":
        rep = asymptotics.validate_thm1(spec, g.t)
    elif name == "thm2":
        rep = asymptotics.validate_thm2(spec, g.t)
    elif name == "thm4":
        rep = asymptotics.validate_thm4(spec, g.t, g.s)
    elif name == "cor1":
        rep = asymptotics.validate_cor1(spec, g.t)
    else:
        rep = asymptotics.check_ratio_limit(spec, g.t, cfg.truncation.ratio_N)
    _report_file(cfg, out, name, rep.passed, rep.to_csv())
    if plot:
        import matplotlib

        matplotlib.rcParams["svg.hashsalt"] = "mbpi"
        rep.plot(out / "reports" / f"{name}.svg")
    return rep.passed, rep.summary()


def _validate_schroder(cfg, out):
    spec, g = cfg.process, cfg.grids
    s = np.asarray(g.s)
    rows, worst = [], 0.0
    for tau in g.tau:
        res = np.atleast_1d(invariant.check_schroder(spec, tau, s))
        worst = max(worst, float(np.max(np.abs(res))))
        rows += [(tau, si, ri) for si, ri in zip(s, res)]
    passed = worst < SCHRODER_TOL
    _report_file(cfg, out, "schroder", passed, _csv(rows, ["tau", "s", "residual"]), [f"tol={SCHRODER_TOL!r}"])
    return passed, f"[schroder] {'PASS' if passed else 'FAIL'} max residual {worst:.3e} (tol {SCHRODER_TOL:g})"


def _validate_invariance(cfg, out, meas):
    spec, tr = cfg.process, cfg.truncation
    res = invariant.check_invariance(meas, spec, tr.invariance_t, tr.N, tol=INVARIANCE_TOL)
    rows = [(j, r, b, tb) for j, (r, b, tb) in enumerate(zip(res.residuals, res.bounds, res.truncation))]
    body = _csv(rows, ["j", "residual", "bound", "truncation_bound"])
    _report_file(cfg, out, "invariance", res.passed, body, [f"tol={INVARIANCE_TOL!r} t={tr.invariance_t!r}"])
    return res.passed, (f"[invariance] {'PASS' if res.passed else 'FAIL'} max residual {res.max_residual:.3e},"
                        f" {len(res.conclusive_indices)} of {len(res.residuals)} indices conclusive")


def _validate_mc(cfg, out, jobs):
    spec, mc = cfg.process, cfg.montecarlo
    sim_cfg = montecarlo.SimConfig(laws.build_intensities(spec, mc.J), mc.i, mc.t, mc.replications, mc.seed, mc.cap)
    sim = montecarlo.simulate(sim_cfg, jobs)
    p, _ = kolmogorov.transition_coefficients(spec, mc.t, mc.i, max(max(mc.j), 1), radius=cfg.truncation.radius)
    rows, ok = [], True
    for j in mc.j:
        e = sim.estimate(j)
        exact = float(p[mc.i, j])
        cov = e.covers(exact)
        ok &= cov
        rows.append((e.i, e.j, e.t, e.estimate, e.stderr, e.bias, e.censored_fraction, e.replications, exact, int(cov)))
    cols = ["i", "j", "t", "estimate", "stderr", "bias", "censored_fraction", "replications", "analytic", "covered"]
    _report_file(cfg, out, "mc", ok, _csv(rows, cols), [f"seed={mc.seed}"])
    return ok, f"[mc] {'PASS' if ok else 'FAIL'} {len(rows)} cells, {mc.replications} replications, seed {mc.seed}"


def _run_stage(name, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - converted to a stage failure
        raise StageError(name, exc) from exc


def run(cfg, out: Path, *, stages=None, validators=None, jobs=1, plot=False):
    """Execute stages in dependency order; returns ``(all_passed, summary_lines)``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    if marker.exists():
        marker.unlink()
    validators = cfg.validators if validators is None else tuple(validators)
    cfgmod.check_validators(cfg.process, validators)
    if stages is None:
        stages = set()
        if "mc" in validators:
            stages.add("laws")
        if validators:
            stages.add("solve")
        if {"invariance"} & set(validators):
            stages.add("invariant")
    (out / "config.yaml").write_text(cfg.dumps())
    lines = [f"spec: {cfg.process.to_dict()}", f"gamma: {cfg.process.gamma!r} ({cfg.process.regime})"]
    current = "config"
    try:
        meas = None
        if "laws" in stages:
            current = "laws"
            lines += _run_stage("laws", stage_laws, cfg, out)
        if "solve" in stages:
            current = "solve"
            lines += _run_stage("solve", stage_solve, cfg, out)
        if "invariant" in stages:
            current = "invariant"
            msg, meas = _run_stage("invariant", stage_invariant, cfg, out)
            lines += msg
        results = []
        for v in validators:
            current = v
            if v in ("thm1", "thm2", "thm4", "cor1", "ratio_limit"):
                results.append(_run_stage(v, _validate_asymptotic, cfg, out, v, plot))
            elif v == "schroder":
                results.append(_run_stage(v, _validate_schroder, cfg, out))
            elif v == "invariance":
                if meas is None:
                    meas = _run_stage("invariant", lambda: invariant.invariant_measure(cfg.process, cfg.truncation.N))
                results.append(_run_stage(v, _validate_invariance, cfg, out, meas))
            elif v == "mc":
                results.append(_run_stage(v, _validate_mc, cfg, out, jobs))
    except StageError:
        marker.write_text(f"stage={current}\n")
        raise
    lines += [r[1] for r in results]
    passed = all(r[0] for r in results)
    _write(out / "summary.txt", "\n".join(lines) + "\n", cfg)
    return passed, lines


def report(out: Path):
    """Rebuild a pass/fail summary from the report files of earlier runs."""
    out = Path(out)
    files = sorted((out / "reports").glob("*.csv"))
    lines, ok = [], True
    for f in files:
        status = None
        for line in f.read_text().splitlines():
            if line.startswith("# validator="):
                status = "passed=True" in line
                break
            if line.startswith("# theorem="):
                status = "passed=True" in line
        ok &= bool(status)
        lines.append(f"{f.stem}: {'PASS' if status else 'FAIL'}")
    if (out / "INCOMPLETE").exists():
        lines.append("outputs incomplete: " + (out / "INCOMPLETE").read_text().strip())
        ok = False
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return ok, lines


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment YAML file")
    common.add_argument("--out", help="output directory (default: config 'output')")
    common.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for Monte Carlo")
    common.add_argument("--plot", action="store_true", help="also write SVG plots of validator reports")
    p = argparse.ArgumentParser(prog="mbpi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("laws", "build intensity tables"),
        ("solve", "solve the backward flow and p00(t)"),
        ("invariant", "extract the invariant measure"),
        ("validate", "run asymptotic and functional-equation validators"),
        ("simulate", "Monte Carlo estimates of p_ij(t)"),
        ("run", "all stages needed by the configured validators"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name == "validate":
            sp.add_argument("--only", nargs="+", choices=[v for v in cfgmod.VALIDATORS if v != "mc"])
    rp = sub.add_parser("report", help="summarize report files in an output directory")
    rp.add_argument("--out", required=True)
    rp.add_argument("--config", help="unused; accepted for uniformity")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "report":
        ok, lines = report(Path(args.out))
        print("\n".join(lines))
        return EXIT_PASS if ok else EXIT_FAIL
    try:
        cfg = cfgmod.load(args.config).with_overrides(seed=args.seed)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be a u64")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output)
    kw = {"jobs": args.jobs, "plot": args.plot}
    try:
        if args.command == "run":
            passed, lines = run(cfg, out, **kw)
        elif args.command == "laws":
            passed, lines = run(cfg, out, stages={"laws"}, validators=(), **kw)
        elif args.command == "solve":
            passed, lines = run(cfg, out, stages={"solve"}, validators=(), **kw)
        elif args.command == "invariant":
            passed, lines = run(cfg, out, stages={"invariant"}, validators=(), **kw)
        elif args.command == "validate":
            vs = args.only or tuple(v for v in cfg.validators if v != "mc")
            passed, lines = run(cfg, out, stages=set(), validators=vs, **kw)
        else:
            passed, lines = run(cfg, out, stages=set(), validators=("mc",), **kw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        if isinstance(exc.exc, (NumericalError, ConstructionError, FloatingPointError)):
            return EXIT_NUMERICAL
        if isinstance(exc.exc, (RegimeError, ConfigError)):
            return EXIT_CONFIG
        if not isinstance(exc.exc, MBPIError):
            traceback.print_exception(exc.exc, file=sys.stderr)
        return EXIT_NUMERICAL
    print("\n".join(lines))
    return EXIT_PASS if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
