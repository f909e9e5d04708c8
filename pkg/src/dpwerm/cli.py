"""Command-line interface: ``dpwerm {fit,tune,simulate,mlearn,value}``.

Every command writes one JSON document (or CSV table) carrying the seed,
privacy budget, regularization constant, weight bound, sensitivity and tool
version. Failures exit non-zero with a one-line JSON error on stderr:
2 for configuration errors, 3 for data errors, 4 for convergence errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, DPWermError, UsageError
from .mlearn import MlearnConfig, build_matches, fit_mlearn, mlearn_sensitivity, privatize_mlearn, residualize
from .owl import OwlConfig, TrialData, empirical_value, fit_dp_owl, preprocess_features
from .privacy import Conservative, EstimatedLargeN, Observed, Rng, SensitivitySpec, sensitivity
from .simgen import ExperimentTable, SimConfig, generate, run_experiment
from .tuner import DEFAULT_CANDIDATES, TuneConfig, tune_gamma

__all__ = ["main", "parse_csv_trial", "build_parser"]

TOOL = "dpwerm"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- parsing


def parse_float(text: str) -> float:
    """Parse a float, accepting ``inf``."""
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if math.isnan(v):
        raise ConfigError("NaN is not a valid value")
    return v


def parse_list(text: str, conv=parse_float) -> list:
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (parse_float(p) for p in parts)
        if not step > 0 or stop < start:
            raise ConfigError(f"invalid range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [conv(repr(start + k * step)) for k in range(count)]
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("empty list")
    return [conv(t.strip()) for t in items]


def parse_grid(text: str):
    """``eps:n,eps:n`` pairs, e.g. ``5:1000,inf:1000``."""
    cells = []
    for item in text.split(","):
        try:
            eps, n = item.split(":")
            cells.append((parse_float(eps), int(n)))
        except ValueError:
            raise ConfigError(f"grid cells must look like eps:n, got {item!r}") from None
    return cells


def parse_gamma_table(text: str):
    """``eps:n=gamma`` entries separated by commas."""
    table = {}
    for item in text.split(","):
        try:
            cell, gamma = item.split("=")
            eps, n = cell.split(":")
            table[(parse_float(eps), int(n))] = parse_float(gamma)
        except ValueError:
            raise ConfigError(f"gamma table entries must look like eps:n=gamma, got {item!r}") from None
    return table


def parse_csv_trial(path, extra_columns: Sequence[str] = ()):
    """Read trial records from a CSV file with header ``x1..xd, A, B[, P]``.

    ``A`` may be coded -1/+1 or 0/1; a missing ``P`` column means a constant
    propensity of 0.5. ``extra_columns`` are optional numeric columns that
    are returned separately.

    Returns:
      ``(records, names, extras)``: the :class:`TrialData`, the feature
      column names in file order and a dict of extra column arrays.

    Raises:
      DataError: malformed rows (with line number) or unknown columns.
    """
    with open(path, newline="") as fh:
        text = fh.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    feats = [h for h in header if h.startswith("x") and h[1:].isdigit()]
    known = set(feats) | {"A", "B", "P"} | set(extra_columns)
    unknown = [h for h in header if h not in known]
    if unknown:
        raise DataError(f"{path}: unknown column(s) {unknown}")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    for col in ("A", "B"):
        if col not in header:
            raise DataError(f"{path}: missing required column {col!r}")
    if not feats:
        raise DataError(f"{path}: no feature columns x1..xd")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise DataError(f"{path}: line {line}: non-numeric field") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows)
    col = {h: table[:, k] for k, h in enumerate(header)}
    A = col["A"]
    if np.all(np.isin(A, (0.0, 1.0))):
        A = 2.0 * A - 1.0
    elif not np.all(np.isin(A, (-1.0, 1.0))):
        raise DataError(f"{path}: column A must be coded -1/+1 or 0/1")
    x = np.column_stack([col[f] for f in feats])
    P = col.get("P")
    records = TrialData(x, A, col["B"], P)
    extras = {c: col[c] for c in extra_columns if c in col}
    return records, feats, extras


# ---------------------------------------------------------------- output


def _num(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return "inf" if v == math.inf else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    return v


def dumps(doc) -> str:
    # json writes floats with repr, the shortest string that parses back to
    # the identical double, so documents round-trip bit-exactly.
    return json.dumps(_num(doc), indent=2, allow_nan=False) + "\n"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) and math.isfinite(v) else v for v in r])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(args, **extra):
    doc = {"tool": TOOL, "version": __version__, "command": args.command, "seed": args.seed}
    doc.update(extra)
    return doc


# ---------------------------------------------------------------- shared options


def _feature_settings(args, names):
    features = None
    if args.features:
        wanted = [f.strip() for f in args.features.split(",")]
        missing = [f for f in wanted if f not in names]
        if missing:
            raise ConfigError(f"unknown feature column(s) {missing}")
        features = tuple(names.index(f) for f in wanted)
    lower = parse_list(args.lower)
    upper = parse_list(args.upper)
    lo = lower[0] if len(lower) == 1 else tuple(lower)
    hi = upper[0] if len(upper) == 1 else tuple(upper)
    return features, (lo, hi)


def _owl_from_args(args, records: TrialData, names, gamma=None, epsilon=None):
    features, bounds = _feature_settings(args, names)
    mode = args.sensitivity_mode
    if mode == "observed":
        smode = Observed()
    elif mode == "estimated":
        smode = EstimatedLargeN(k=args.k, r=args.r, sigma_d=args.sigma_d)
    else:
        smode = Conservative(len(records))
    return OwlConfig(
        gamma=args.gamma if gamma is None else gamma,
        epsilon=args.epsilon if epsilon is None else epsilon,
        weight_bound=args.weight_bound,
        huber_h=args.huber_h,
        benefit_clip=args.benefit_clip,
        feature_bounds=bounds,
        features=features,
        sensitivity_mode=smode,
        propensity_floor=args.propensity_floor,
        penalty=args.penalty,
    )


def _add_common(p, gamma_required=True):
    p.add_argument("--seed", type=int, default=0, help="root seed (unsigned 64-bit)")
    p.add_argument("--epsilon", type=parse_float, required=True, help="privacy budget; 'inf' disables privacy")
    if gamma_required:
        p.add_argument("--gamma", type=parse_float, required=True, help="regularization constant")
    p.add_argument("--weight-bound", type=parse_float, default=30.0, help="weight bound W")
    p.add_argument("--benefit-clip", type=parse_float, default=15.0, help="benefit clip C_B")
    p.add_argument("--huber-h", type=parse_float, default=0.5)
    p.add_argument("--penalty", choices=("half_squared", "squared"), default="half_squared")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def _add_features(p):
    p.add_argument("--data", required=True, help="CSV with columns x1..xd, A, B[, P]")
    p.add_argument("--features", default="", help="comma list of feature columns to use (default all)")
    p.add_argument("--lower", default="0", help="public lower feature bound (scalar or per column)")
    p.add_argument("--upper", default="1", help="public upper feature bound (scalar or per column)")
    p.add_argument("--sensitivity-mode", choices=("observed", "estimated", "conservative"), default="observed")
    p.add_argument("--k", type=parse_float, default=2.5)
    p.add_argument("--r", type=parse_float, default=1.0)
    p.add_argument("--sigma-d", type=parse_float, default=None)
    p.add_argument("--propensity-floor", type=parse_float, default=None)


# ---------------------------------------------------------------- commands


def cmd_fit(args):
    records, names, _ = parse_csv_trial(args.data)
    cfg = _owl_from_args(args, records, names)
    fit = fit_dp_owl(records, cfg, Rng(args.seed))
    private = math.isfinite(cfg.epsilon)
    doc = _meta(
        args,
        epsilon=cfg.epsilon,
        non_private=not private,
        gamma=cfg.gamma,
        W=cfg.weight_bound,
        sensitivity=fit.delta_sens,
        n_records=len(records),
        features=[names[k] for k in cfg.features] if cfg.features else names,
        theta_star=fit.theta_star.theta,
    )
    if args.format == "csv":
        p = fit.theta_star.p
        cols = ["tool", "version", "seed", "epsilon", "non_private", "gamma", "W", "sensitivity"]
        cols += [f"theta_{k}" for k in range(p)]
        row = [TOOL, __version__, args.seed, "inf" if not private else cfg.epsilon, str(not private).lower()]
        row += [cfg.gamma, cfg.weight_bound, fit.delta_sens, *fit.theta_star.theta.tolist()]
        return _csv_text(cols, [row])
    return dumps(doc)


def cmd_tune(args):
    records, names, extras = parse_csv_trial(args.data, extra_columns=("optimal",))
    owl = _owl_from_args(args, records, names, gamma=1.0)
    cfg = TuneConfig(
        n=args.n,
        epsilon=args.epsilon,
        data=records,
        m=args.m,
        candidates=parse_list(args.candidates),
        r=args.repeats,
        metric=args.metric,
        optimal=extras.get("optimal"),
        owl=owl,
        literal_n0=args.literal_n0,
        threads=args.threads,
    )
    res = tune_gamma(cfg, Rng(args.seed))
    if args.format == "csv":
        rows = [[g, v] for g, v in res.metric_by_gamma()]
        return _csv_text(["gamma", "mean_metric"], rows)
    doc = _meta(
        args,
        epsilon=cfg.epsilon,
        non_private=not math.isfinite(cfg.epsilon),
        gamma=res.gamma,
        W=owl.weight_bound,
        sensitivity=sensitivity(SensitivitySpec(owl.weight_bound, res.gamma, owl.sensitivity_mode)),
        n=cfg.n,
        n0=len(records),
        m=cfg.m,
        r=cfg.r,
        metric=res.metric,
        candidates=list(res.candidates),
        mean_metric=res.mean_metric,
        repeat_metrics=res.repeat_metrics,
    )
    return dumps(doc)


def _simulate_gammas(args, grid, root):
    if args.gamma_table:
        return parse_gamma_table(args.gamma_table), None
    if args.gamma is not None:
        return {cell: args.gamma for cell in grid}, None
    # Tune every cell on its own simulated independent dataset.
    sim = SimConfig(n=args.tune_n0)
    cands = parse_list(args.candidates)
    table, report = {}, []
    for c, (eps, n) in enumerate(grid):
        d0, opt = generate(sim, root.child(1, c, 0))
        owl = OwlConfig(gamma=1.0, epsilon=eps, features=(0, 1, 2, 3), penalty=args.penalty)
        cfg = TuneConfig(
            n=n, epsilon=eps, data=d0, m=args.tune_m, candidates=cands, r=args.tune_repeats,
            metric=args.metric, optimal=opt, owl=owl, threads=args.threads,
        )
        res = tune_gamma(cfg, root.child(1, c, 1))
        table[(eps, n)] = res.gamma
        report.append({"epsilon": eps, "n": n, "gamma": res.gamma, "mean_metric": res.mean_metric})
    return table, report


def cmd_simulate(args):
    grid = parse_grid(args.grid)
    root = Rng(args.seed)
    gammas, tuning = _simulate_gammas(args, grid, root)
    owl = OwlConfig(gamma=1.0, epsilon=1.0, features=(0, 1, 2, 3), penalty=args.penalty,
                    weight_bound=args.weight_bound, benefit_clip=args.benefit_clip, huber_h=args.huber_h)
    table = run_experiment(
        grid, args.repeats, test_size=args.test_size, tuned_gammas=gammas, rng=root.child(0),
        sim=SimConfig(), owl=owl, threads=args.threads,
    )
    if args.format == "csv":
        rows = [[s[c] for c in ExperimentTable.CSV_COLUMNS] for s in table.summaries()]
        for r in rows:
            r[0] = "inf" if r[0] == math.inf else r[0]
        return _csv_text(ExperimentTable.CSV_COLUMNS, rows)
    cells = []
    for row in table.rows:
        s = row.summary()
        s.update(
            gamma=row.gamma,
            W=owl.weight_bound,
            sensitivity=sensitivity(SensitivitySpec(owl.weight_bound, row.gamma)),
            accuracy=row.accuracy,
            value=row.value,
        )
        cells.append(s)
    doc = _meta(args, repeats=args.repeats, test_size=args.test_size, rows=cells)
    if tuning is not None:
        doc["tuning"] = tuning
    return dumps(doc)


def cmd_mlearn(args):
    records, names, _ = parse_csv_trial(args.data)
    owl = _owl_from_args(args, records, names)
    x_raw = records.x if owl.features is None else records.x[:, list(owl.features)]
    raw = TrialData(x_raw, records.A, records.B, records.propensity)
    res = residualize(raw, args.residualizer)
    x_scaled = preprocess_features(records.x, owl)
    data = TrialData(x_scaled, records.A, res.values, records.propensity)
    cfg = MlearnConfig(
        gamma=args.gamma, g_kind=args.g_kind, residualizer=args.residualizer, s_size=args.s_size,
        sup_g=args.sup_g, huber_h=args.huber_h, m=args.match_size, sign_mode=args.sign_mode,
        penalty=args.mlearn_penalty,
    )
    matches = build_matches(data, cfg.m)
    theta_hat = fit_mlearn(data, matches, cfg)
    delta = mlearn_sensitivity(cfg)
    theta_star = privatize_mlearn(theta_hat, args.epsilon, delta, Rng(args.seed))
    doc = _meta(
        args,
        epsilon=args.epsilon,
        non_private=not math.isfinite(args.epsilon),
        gamma=cfg.gamma,
        W=None,
        sensitivity=delta,
        g_kind=cfg.g_kind,
        sup_g=cfg.sup_g,
        s_size=cfg.s_size,
        residualizer=cfg.residualizer,
        rank_deficient=res.rank_deficient,
        n_records=len(records),
        theta_star=theta_star.theta,
    )
    if args.format == "csv":
        cols = ["tool", "version", "seed", "epsilon", "gamma", "sensitivity"]
        cols += [f"theta_{k}" for k in range(theta_star.p)]
        eps = "inf" if not math.isfinite(args.epsilon) else args.epsilon
        return _csv_text(cols, [[TOOL, __version__, args.seed, eps, cfg.gamma, delta, *theta_star.theta.tolist()]])
    return dumps(doc)


def cmd_value(args):
    records, names, _ = parse_csv_trial(args.data)
    meta = {"epsilon": None, "gamma": None, "W": None, "sensitivity": None}
    if args.model:
        with open(args.model) as fh:
            model = json.load(fh)
        if "theta_star" not in model:
            raise DataError(f"{args.model}: no theta_star field")
        theta = np.asarray(model["theta_star"], dtype=float)
        for k in meta:
            v = model.get(k)
            meta[k] = math.inf if v == "inf" else v
    elif args.theta:
        theta = np.asarray(parse_list(args.theta), dtype=float)
    else:
        raise ConfigError("value needs --theta or --model")
    if args.prescaled:
        x = records.x
    else:
        features, bounds = _feature_settings(args, names)
        owl = OwlConfig(gamma=1.0, epsilon=math.inf, features=features, feature_bounds=bounds)
        x = preprocess_features(records.x, owl)
    v = empirical_value(theta, records, x)
    if args.format == "csv":
        return _csv_text(["value", "n_records"], [[v, len(records)]])
    return dumps(_meta(args, value=v, n_records=len(records), **meta))


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description="Differentially private weighted ERM and treatment rules.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit private OWL and release theta*")
    _add_common(p)
    _add_features(p)

    p = sub.add_parser("tune", help="choose gamma on an independent dataset")
    _add_common(p, gamma_required=False)
    _add_features(p)
    p.add_argument("--n", type=int, required=True, help="target training size")
    p.add_argument("--m", type=int, required=True, help="minimum validation size")
    p.add_argument("--candidates", default=",".join(repr(g) for g in DEFAULT_CANDIDATES))
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--metric", choices=("accuracy", "value"), default=None)
    p.add_argument("--literal-n0", action="store_true", help="bootstrap training sets of size n0")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("simulate", help="Monte-Carlo accuracy/value table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", required=True, help="cells eps:n separated by commas")
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--test-size", type=int, default=5000)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=parse_float, default=None, help="one gamma for every cell")
    g.add_argument("--gamma-table", default=None, help="eps:n=gamma entries")
    p.add_argument("--candidates", default="1:601:20", help="tuning candidates when gammas are not given")
    p.add_argument("--tune-n0", type=int, default=1000)
    p.add_argument("--tune-m", type=int, default=500)
    p.add_argument("--tune-repeats", type=int, default=200)
    p.add_argument("--metric", choices=("accuracy", "value"), default="accuracy")
    p.add_argument("--weight-bound", type=parse_float, default=30.0)
    p.add_argument("--benefit-clip", type=parse_float, default=15.0)
    p.add_argument("--huber-h", type=parse_float, default=0.5)
    p.add_argument("--penalty", choices=("half_squared", "squared"), default="half_squared")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("mlearn", help="fit private M-learning")
    _add_common(p)
    _add_features(p)
    p.add_argument("--g-kind", choices=("constant_one", "identity"), default="constant_one")
    p.add_argument("--residualizer", choices=("none", "linear_ols"), default="none")
    p.add_argument("--match-size", type=int, default=1)
    p.add_argument("--s-size", type=int, default=1)
    p.add_argument("--sup-g", type=parse_float, default=None)
    p.add_argument("--sign-mode", choices=("signed", "abs"), default="signed")
    p.add_argument("--mlearn-penalty", choices=("squared", "half_squared"), default="squared")

    p = sub.add_parser("value", help="empirical treatment value of a rule")
    p.add_argument("--seed", type=int, default=0)
    _add_features(p)
    p.add_argument("--theta", default=None, help="comma separated coefficients (bias last)")
    p.add_argument("--model", default=None, help="JSON output of 'fit' to read theta_star from")
    p.add_argument("--prescaled", action="store_true", help="use the feature columns as already scaled")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    return parser


def _check_candidates(text):
    cands = parse_list(text)
    if any(not (math.isfinite(g) and g > 0) for g in cands) or any(b <= a for a, b in zip(cands, cands[1:])):
        raise ConfigError("candidates must be positive, finite and strictly ascending")


def _check_positive_ints(args, *names):
    for name in names:
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be >= 1, got {getattr(args, name)}")


def precheck(args):
    """Validate every parameter before any data file is opened."""
    if not 0 <= args.seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
    cmd = args.command
    if cmd in ("fit", "tune", "mlearn", "value"):
        bounds = [parse_list(args.lower), parse_list(args.upper)]
        lo, hi = (b[0] if len(b) == 1 else tuple(b) for b in bounds)
    if cmd in ("fit", "tune", "mlearn"):
        if args.sensitivity_mode == "estimated":
            EstimatedLargeN(k=args.k, r=args.r, sigma_d=args.sigma_d)
        OwlConfig(
            gamma=getattr(args, "gamma", 1.0), epsilon=args.epsilon, weight_bound=args.weight_bound,
            huber_h=args.huber_h, benefit_clip=args.benefit_clip, feature_bounds=(lo, hi),
            propensity_floor=args.propensity_floor, penalty=args.penalty,
        )
        clip_check = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        if np.any(clip_check[1] <= clip_check[0]):
            raise ConfigError("every feature upper bound must exceed its lower bound")
    if cmd == "tune":
        _check_positive_ints(args, "n", "m", "repeats", "threads")
        _check_candidates(args.candidates)
    if cmd == "mlearn":
        _check_positive_ints(args, "match_size", "s_size")
        MlearnConfig(
            gamma=args.gamma, g_kind=args.g_kind, residualizer=args.residualizer, s_size=args.s_size,
            sup_g=args.sup_g, huber_h=args.huber_h, m=args.match_size, sign_mode=args.sign_mode,
            penalty=args.mlearn_penalty,
        )
    if cmd == "simulate":
        _check_positive_ints(args, "repeats", "test_size", "tune_n0", "tune_m", "tune_repeats", "threads")
        grid = parse_grid(args.grid)
        for eps, n in grid:
            if math.isnan(eps) or not eps > 0 or n < 1:
                raise ConfigError(f"invalid grid cell ({eps}, {n})")
        if args.gamma_table:
            table = parse_gamma_table(args.gamma_table)
            missing = [c for c in grid if c not in table]
            if missing:
                raise ConfigError(f"gamma table has no entry for cell(s) {missing}")
        elif args.gamma is None:
            _check_candidates(args.candidates)
            if args.tune_n0 <= args.tune_m:
                raise ConfigError("--tune-n0 must exceed --tune-m")
        OwlConfig(gamma=args.gamma or 1.0, epsilon=1.0, weight_bound=args.weight_bound,
                  huber_h=args.huber_h, benefit_clip=args.benefit_clip, penalty=args.penalty)
    if cmd == "value":
        if args.theta:
            parse_list(args.theta)
        elif not args.model:
            raise ConfigError("value needs --theta or --model")


COMMANDS = {"fit": cmd_fit, "tune": cmd_tune, "simulate": cmd_simulate, "mlearn": cmd_mlearn, "value": cmd_value}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        precheck(args)
        text = COMMANDS[args.command](args)
        _emit(text, args.out)
        return 0
    except DPWermError as exc:
        err = {"error": exc.kind, "type": type(exc).__name__, "message": str(exc).replace("\n", " ")}
        sys.stderr.write(json.dumps(err) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "data", "type": type(exc).__name__, "message": str(exc)}) + "\n")
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
