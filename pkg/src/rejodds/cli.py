"""Command-line front end.

Exit status is 0 on success, 1 for invalid input and 2 when a computation
fails.  Machine output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import design, evidence, freqcheck, reanalyze, stopping
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleTargetError,
    InsufficientSampleError,
    ParseError,
    RejoddsError,
    UnsupportedModelError,
)
from .mathcore.rng import RngContract
from .models import (
    EmpiricalBayesAll,
    EmpiricalBayesNonincreasing,
    GridWeight,
    Intrinsic,
    NormalPrior,
    PointMass,
    TestModel,
    UniformInterval,
    prior_label,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

INPUT_ERRORS = (DomainError, InfeasibleTargetError, UnsupportedModelError, ParseError)


class UsageError(Exception):
    pass


class _Exit(Exception):
    def __init__(self, status):
        self.status = status


class _Parser(argparse.ArgumentParser):
    out = sys.stdout

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")

    def exit(self, status=0, message=None):
        if message:
            raise UsageError(message.rstrip())
        raise _Exit(status)

    def print_help(self, file=None):
        super().print_help(self.out)


# ---------------------------------------------------------------------------
# argument values


def parse_prior(text: str):
    """``point:t``, ``uniform:lo:hi``, ``normal:mu:sd``, ``grid:@file.csv``,
    ``intrinsic``, ``eb-all`` or ``eb-noninc``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "point":
            return PointMass(float(rest))
        if kind == "uniform":
            lo, hi = rest.split(":")
            return UniformInterval(float(lo), float(hi))
        if kind == "normal":
            mu, sd = rest.split(":")
            return NormalPrior(float(mu), float(sd))
    except ValueError:
        raise UsageError(f"malformed prior {text!r}") from None
    if kind == "grid":
        if not rest.startswith("@"):
            raise UsageError("grid priors are read from a file: grid:@weights.csv")
        return _read_grid(Path(rest[1:]))
    simple = {"intrinsic": Intrinsic, "eb-all": EmpiricalBayesAll,
              "eb-noninc": EmpiricalBayesNonincreasing}
    if text in simple:
        return simple[text]()
    raise UsageError(f"unknown prior {text!r}")


def _read_grid(path):
    points, weights = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                t, w = (float(v) for v in row)
            except ValueError:
                if i == 1:
                    continue  # header
                raise ParseError(f"grid row must be theta,weight: {row!r}", i) from None
            points.append(t)
            weights.append(w)
    return GridWeight(tuple(points), tuple(weights))


def parse_prior_odds(value):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        odds = float(value)
    else:
        a, sep, b = str(value).partition(":")
        try:
            odds = float(a) / float(b) if sep else float(a)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"malformed prior odds {value!r}") from None
    if not (odds > 0 and math.isfinite(odds)):
        raise UsageError("prior odds must be positive")
    return odds


def sig(x, digits=6):
    return stopping.round_sig(x, digits)


def _bf_text(x):
    if x is None:
        return "n/a"
    if 0.01 <= x < 1e6:
        return f"{x:.2f}"
    return f"{x:.3g}"


def _bound_text(x):
    return "n/a" if x is None else f"{x:.4g}"


# ---------------------------------------------------------------------------
# parser


def _model_args(p):
    g = p.add_argument_group("test model")
    g.add_argument("--family", default="z-mean",
                   choices=["z-mean", "two-sample-z", "normal-variance"])
    g.add_argument("--sides", default="one-sided-upper",
                   help="one | two (or one-sided-upper | two-sided)")
    g.add_argument("--null-value", type=float, default=None,
                   help="theta0 (mean families, default 0) or sigma0^2 (variance, default 1)")
    g.add_argument("--sd", type=float, default=1.0, help="known standard deviation")
    g.add_argument("--n", type=int, default=None, help="sample size per group")
    g.add_argument("--n1", type=int, default=None)
    g.add_argument("--n2", type=int, default=None)


def _common_args(p, default_format="text"):
    p.add_argument("--format", choices=["text", "json", "csv"], default=default_format)
    p.add_argument("--config", default=None, help="TOML file with default flag values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=None)


def build_parser(out=None):
    _Parser.out = out or sys.stdout
    parser = _Parser(prog="rejodds", description="Rejection odds for design and evidence.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="power, rejection ratio and pre-experimental odds")
    _common_args(p)
    _model_args(p)
    p.add_argument("--effect", default=None, help="effect prior, e.g. point:0.21")
    p.add_argument("--power", type=float, default=None, help="average power, if known")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--prior-odds", default=None, help="a:b or a number")
    p.add_argument("--target-r-pre", type=float, default=None,
                   help="solve for the per-group n reaching this rejection ratio")
    p.add_argument("--target-o-pre", type=float, default=None,
                   help="solve for the alpha giving these pre-experimental odds")

    p = sub.add_parser("evidence", help="Bayes factors and the p-value bound")
    _common_args(p)
    _model_args(p)
    p.add_argument("--p", type=float, default=None, help="observed p-value")
    p.add_argument("--z", "--x", dest="z", type=float, default=None,
                   help="observed statistic (z, or x for the variance family)")
    p.add_argument("--prior", action="append", default=None, help="repeatable")
    p.add_argument("--prior-odds", default=None)
    p.add_argument("--stopped", action="store_true",
                   help="the p-value came from optional stopping (no bound)")

    p = sub.add_parser("verify", help="check E[BF|H0,R] = R_pre and its reciprocal twin")
    _common_args(p)
    _model_args(p)
    p.add_argument("--prior", default=None, required=False)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=50, help="curve points for csv output")

    p = sub.add_parser("stopping", help="optional-stopping simulation")
    _common_args(p)
    start = p.add_mutually_exclusive_group()
    start.add_argument("--start-p", type=float, default=None)
    start.add_argument("--start-z", type=float, default=None)
    p.add_argument("--drift", type=float, default=0.0,
                   help="noncentrality per unit fraction of the simulated data")
    p.add_argument("--batches", type=int, default=4)
    p.add_argument("--batch-fraction", type=float, default=0.25)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--sides", default="two-sided")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("reanalyze", help="annotate a CSV of p-values with bounds")
    _common_args(p, default_format="csv")
    p.add_argument("--input", default="-", help="CSV path, or - for stdin")
    p.add_argument("--curve", default=None, help="p_lo:p_hi:points; emit the bound curve")
    return parser


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None


def _apply_config(parser, argv, config):
    if not config:
        return
    # find the subcommand parser
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        return
    sp = sub_action.choices[command]
    values = {k: v for k, v in config.items() if not isinstance(v, dict)}
    values.update(config.get(command, {}))
    dests = {a.dest for a in sp._actions}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        sp.set_defaults(**{dest: value})


# ---------------------------------------------------------------------------
# output


def _emit(out, fmt, pairs, text_lines):
    if fmt == "json":
        doc = {k: (sig(v) if isinstance(v, float) else v) for k, v in pairs}
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow([k for k, _ in pairs])
        w.writerow(["" if v is None else (f"{v:.6g}" if isinstance(v, float) else v)
                    for _, v in pairs])
    else:
        out.write("\n".join(text_lines) + "\n")


def _model_from(args):
    null = args.null_value
    if null is None:
        null = 1.0 if args.family == "normal-variance" else 0.0
    n1 = args.n1 if args.n1 is not None else (args.n if args.n is not None else 1)
    n2 = None
    if args.family == "two-sample-z":
        n2 = args.n2 if args.n2 is not None else n1
    elif args.n2 is not None:
        raise UsageError("--n2 applies to two-sample-z only")
    return TestModel(args.family, args.sides, null, args.sd, n1, n2)


def _model_pairs(model):
    pairs = [("family", model.family), ("sides", model.sides)]
    if model.is_variance:
        pairs.append(("null_variance", float(model.null_value)))
    else:
        pairs += [("null_value", float(model.null_value)), ("n1", model.n1)]
        if model.n2 is not None:
            pairs.append(("n2", model.n2))
    return pairs


def _model_text(model):
    return "model: " + " ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                                for k, v in _model_pairs(model))


def cmd_design(args, out):
    model = _model_from(args)
    odds = parse_prior_odds(args.prior_odds)
    effect = parse_prior(args.effect) if args.effect else None
    solved = []
    if args.target_r_pre is not None:
        if effect is None:
            raise UsageError("--target-r-pre needs --effect")
        n = design.solve_sample_size(model, effect, args.alpha, args.target_r_pre)
        model = model.with_n(n)
        solved = [f"n_required={n} (per group, target r_pre={args.target_r_pre:g})"]
    lines, pairs = [_model_text(model)] + solved, _model_pairs(model)
    if solved:
        pairs.append(("n_required", model.n1))
    if effect is None and args.power is None:
        raise UsageError("design needs --effect or --power")
    rep = design.design_report(model, effect, args.alpha, odds,
                               avg_power=args.power if effect is None else None)
    if effect is not None:
        lines.append(f"effect: {prior_label(effect)}")
        pairs.append(("effect", prior_label(effect)))
    lines.append(f"alpha={rep.alpha:g} power={rep.avg_power:.2f} r_pre={rep.r_pre:.1f}")
    pairs += [("alpha", rep.alpha), ("power", rep.avg_power), ("r_pre", rep.r_pre)]
    if rep.power is not None:
        lines.append(f"rejection_boundary={rep.power.rejection_boundary:.6g}")
        pairs.append(("rejection_boundary", rep.power.rejection_boundary))
    pairs += [("prior_odds", rep.prior_odds), ("o_pre", rep.o_pre)]
    if rep.o_pre is None:
        lines.append("o_pre=n/a (no prior odds given)")
    else:
        lines.append(f"prior_odds={rep.prior_odds:.6g} o_pre={rep.o_pre:.6g}")
    if args.target_o_pre is not None:
        if odds is None:
            raise UsageError("--target-o-pre needs --prior-odds")
        a = design.solve_alpha(odds, rep.avg_power, args.target_o_pre)
        pairs.append(("alpha_required", a))
        lines.append(f"alpha_required={a:.6g} (target o_pre={args.target_o_pre:g})")
    _emit(out, args.format, pairs, lines)


def cmd_evidence(args, out):
    odds = parse_prior_odds(args.prior_odds)
    priors = [parse_prior(t) for t in (args.prior or [])]
    model = None
    if args.z is not None:
        model = _model_from(args)
    rep = evidence.evidence_report(model, args.z, args.p, priors, odds, stopped=args.stopped)
    lines, pairs = [], []
    if model is not None:
        lines.append(_model_text(model))
        pairs += _model_pairs(model)
        lines.append(f"z={args.z:g}")
        pairs.append(("statistic", float(args.z)))
    lines.append(f"p={rep.p_value:.4g} bf_bound={_bound_text(rep.bf_bound)}")
    pairs += [("p_value", rep.p_value), ("bf_bound", rep.bf_bound),
              ("reciprocal_bound", None if rep.bf_bound is None else 1.0 / rep.bf_bound)]
    for i, e in enumerate(rep.bf_entries):
        text = f"prior={e.label} r_post={_bf_text(e.r_post)}"
        pairs += [(f"prior_{i}", e.label), (f"r_post_{i}", e.r_post)]
        if rep.o_post:
            text += f" o_post={rep.o_post[i]:.6g}"
            pairs.append((f"o_post_{i}", rep.o_post[i]))
        if e.note:
            text += f" ({e.note})"
        lines.append(text)
    pairs.append(("prior_odds", rep.prior_odds))
    if priors and odds is None:
        lines.append("o_post=n/a (no prior odds given)")
    lines += [f"note: {n}" for n in rep.notes]
    if args.format == "json":
        pairs.append(("notes", list(rep.notes)))
    _emit(out, args.format, pairs, lines)


def cmd_verify(args, out):
    if not args.prior:
        raise UsageError("verify needs --prior")
    model = _model_from(args)
    prior = parse_prior(args.prior)
    region = freqcheck.RejectionRegion.for_alpha(model, args.alpha)
    if args.format == "csv":
        rows = freqcheck.bf_curve_over_region(model, prior, region, args.grid)
        freqcheck.write_curve_csv(rows, out)
        return
    chk = freqcheck.check_result2(model, prior, region)
    lines = [_model_text(model), f"prior: {prior_label(prior)}",
             f"region: {region.kind} c={region.c:.6g}",
             f"alpha={chk.alpha:g} power={chk.avg_power:.6g} r_pre={chk.r_pre:.6g}",
             f"E[BF|H0,R]={chk.expected_bf_null:.6g} rel_err={chk.rel_err_bf:.1e}",
             f"E[1/BF|H1*,R]={chk.expected_inv_bf_marginal:.6g} rel_err={chk.rel_err_inv_bf:.1e}",
             f"caveat: {chk.caveat}"]
    pairs = _model_pairs(model) + [
        ("prior", prior_label(prior)), ("region", region.kind), ("c", region.c),
        ("alpha", chk.alpha), ("power", chk.avg_power), ("r_pre", chk.r_pre),
        ("expected_bf_null", chk.expected_bf_null), ("rel_err_bf", chk.rel_err_bf),
        ("expected_inv_bf_marginal", chk.expected_inv_bf_marginal),
        ("rel_err_inv_bf", chk.rel_err_inv_bf), ("caveat", chk.caveat)]
    if args.runs:
        mc = freqcheck.mc_check_result2(model, prior, region, args.runs, RngContract(args.seed, 0))
        lines.append(f"mc: runs={mc.n_runs} retained={mc.n_retained} estimate={mc.estimate:.6g} "
                     f"std_error={mc.std_error:.3g} target={mc.target:.6g} z={mc.z_score:.3f}")
        pairs += [("mc_runs", mc.n_runs), ("mc_retained", mc.n_retained),
                  ("mc_estimate", mc.estimate), ("mc_std_error", mc.std_error),
                  ("mc_z_score", mc.z_score), ("seed", args.seed)]
    _emit(out, args.format, pairs, lines)


def cmd_stopping(args, out):
    if args.batches < 0:
        raise UsageError("--batches must be non-negative")
    kw = dict(batch_fractions=(args.batch_fraction,) * args.batches,
              threshold_p=args.threshold, n_runs=args.runs or 100_000,
              seed=RngContract(args.seed, 0), drift=args.drift)
    if args.start_p is not None:
        cfg = stopping.StoppingConfig.from_p(args.start_p, args.sides, **kw)
    else:
        cfg = stopping.StoppingConfig(sides=args.sides, fixed_z=args.start_z, **kw)
    rep = stopping.simulate_sequential(cfg, workers=args.workers)
    if args.format == "json":
        out.write(rep.to_json() + "\n")
        return
    stages = " ".join(f"{p:.4f}" for p in rep.per_stage_stop_prob)
    lines = [f"runs={rep.n_runs} seed={args.seed} sides={cfg.sides} threshold={cfg.threshold_p:g}",
             f"start={'simulated' if cfg.fixed_z is None else f'z={cfg.fixed_z:.6g}'} "
             f"drift={cfg.drift:g} looks={cfg.n_stages}",
             f"per_stage_stop_prob={stages}",
             f"cumulative_stop_prob={rep.cumulative_stop_prob:.4f} std_error={rep.std_error:.4f}"]
    pairs = [("runs", rep.n_runs), ("seed", args.seed),
             ("cumulative_stop_prob", rep.cumulative_stop_prob), ("std_error", rep.std_error)]
    pairs += [(f"stage_{i}", p) for i, p in enumerate(rep.per_stage_stop_prob)]
    _emit(out, args.format, pairs, lines)


def cmd_reanalyze(args, out, stdin):
    if args.curve:
        try:
            lo, hi, n = args.curve.split(":")
            rows = reanalyze.emit_bound_curve(float(lo), float(hi), int(n))
        except ValueError as exc:
            if isinstance(exc, RejoddsError):
                raise
            raise UsageError(f"malformed --curve {args.curve!r}") from None
        if args.format == "json":
            doc = [{"p_value": sig(p), "bf_bound": sig(b), "reciprocal_bound": sig(r)}
                   for p, b, r in rows]
            out.write(json.dumps(doc, indent=2) + "\n")
        else:
            reanalyze.write_curve_csv(rows, out)
        return
    if args.input == "-":
        source = stdin if stdin is not None else sys.stdin
        records = reanalyze.parse_study_csv(source)
    else:
        with open(args.input, "rb") as fh:
            records = reanalyze.parse_study_csv(fh)
    rows = reanalyze.annotate_bounds(records)
    if args.format == "json":
        doc = [{"study_id": a.record.study_id, "p_value": sig(a.record.p_value),
                "reported_bf": sig(a.record.reported_bf), "stopped": a.record.stopped,
                "bf_bound": sig(a.bf_bound), "reciprocal_bound": sig(a.reciprocal_bound),
                "flag": a.flag} for a in rows]
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        reanalyze.write_annotated_csv(rows, out)


class _TextSink:
    """Accept str writes on either a text or a byte sink."""

    def __init__(self, sink):
        self.sink = sink
        self.binary = isinstance(sink, (io.RawIOBase, io.BufferedIOBase))

    def write(self, text):
        self.sink.write(text.encode("utf-8") if self.binary else text)


def run(argv, stdin=None, stdout=None, stderr=None) -> int:
    """Run one subcommand; streams may be text or bytes. Returns the exit code."""
    out = _TextSink(stdout if stdout is not None else sys.stdout)
    err = _TextSink(stderr if stderr is not None else sys.stderr)
    argv = list(argv)
    buf = io.StringIO()
    try:
        parser = build_parser(out)
        _apply_config(parser, argv, _load_config(argv))
        args = parser.parse_args(argv)
        if args.command == "design":
            cmd_design(args, buf)
        elif args.command == "evidence":
            cmd_evidence(args, buf)
        elif args.command == "verify":
            cmd_verify(args, buf)
        elif args.command == "stopping":
            cmd_stopping(args, buf)
        else:
            cmd_reanalyze(args, buf, stdin)
    except _Exit as exc:
        return exc.status
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 1
    except INPUT_ERRORS as exc:
        err.write(f"rejodds: error: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"rejodds: error: {exc}\n")
        return 1
    except (ConvergenceError, InsufficientSampleError, RejoddsError, ArithmeticError) as exc:
        err.write(f"rejodds: computation failed: {exc}\n")
        return 2
    out.write(buf.getvalue())
    return 0


def main():  # pragma: no cover
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":  # pragma: no cover
    main()
