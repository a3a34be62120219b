"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
degeneracy. Argument parsing errors also exit with 2.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .apen import ApEnConfig, apen
from .cpd import dp_detect_k, pelt_detect
from .errors import ArgumentError, DomainError, RlenError
from .kernels import KERNELS, get_kernel
from .lag_select import select_lag
from .pipeline import (RunConfig, dumps_report, format_matrix_csv, prepare_matrix,
                       read_matrix_csv, run_pipeline, write_report)
from .rlen import ar2_rlen, arp_rlen, entropy_profile, theory_constants, yule_walker_autocorr
from .simulate import CASE_PRESETS, CaseMatrixSpec, build_case_matrix, matched_noise_variance


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(obj, path):
    _emit(dumps_report(obj), path)


def _load_input(args):
    try:
        sm = read_matrix_csv(args.input)
    except OSError as exc:
        raise DomainError(f"cannot read {args.input}: {exc}") from exc
    warnings = []
    cfg = RunConfig(input=args.input, auto_transform=not getattr(args, "no_transform", False))
    X, _ = prepare_matrix(sm.values, cfg, warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return sm, X


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV matrix, one series per column")
    p.add_argument("--no-transform", action="store_true",
                   help="reject values outside [0, 1] instead of transforming them")


def _add_output(p):
    p.add_argument("--output", default=None, help="output path (default: stdout)")


def _case_spec(args) -> CaseMatrixSpec:
    if args.case in CASE_PRESETS:
        params = {}
        for key in ("P1", "P2", "N"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
        if args.alpha is not None:
            if args.case != "case1":
                raise ArgumentError("--alpha only applies to case1")
            params["alpha"] = args.alpha
        return CASE_PRESETS[args.case](seed=args.seed, **params)
    try:
        with open(args.case) as fh:
            return CaseMatrixSpec.from_dict(json.load(fh))
    except FileNotFoundError:
        raise ArgumentError(f"{args.case!r} is neither a preset nor a spec file") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError(f"invalid spec file {args.case!r}: {exc}") from None


def cmd_simulate(args):
    spec = _case_spec(args)
    X, cp = build_case_matrix(spec, raw=args.raw)
    names = [f"s{j + 1}" for j in range(X.shape[1])] if args.header else None
    _emit(format_matrix_csv(X, names), args.output)
    print(f"true change-point: {cp}", file=sys.stderr)


def cmd_select_lag(args):
    _, X = _load_input(args)
    rep = select_lag(X, args.M, symmetric=args.symmetric, threads=args.threads)
    _emit_json(rep.to_dict(), args.output)


def cmd_entropy(args):
    sm, X = _load_input(args)
    grid = None if args.bandwidths is None else np.asarray(args.bandwidths)
    prof = entropy_profile(X, args.m, grid, threads=args.threads)
    rows = np.column_stack([np.arange(1, X.shape[1] + 1), prof.values, prof.bandwidths])
    text = "column,name,rlen,h\n" + "".join(
        f"{int(j)},{name},{v!r},{h!r}\n" for (j, v, h), name in zip(rows.tolist(), sm.names))
    _emit(text, args.output)


def cmd_apen(args):
    sm, X = _load_input(args)
    conf = ApEnConfig(args.m, args.r, args.r_mode)
    text = "column,name,apen\n" + "".join(
        f"{j + 1},{sm.names[j]},{apen(X[:, j], conf)!r}\n" for j in range(X.shape[1]))
    _emit(text, args.output)


def cmd_detect(args):
    try:
        sm = read_matrix_csv(args.input)
    except OSError as exc:
        raise DomainError(f"cannot read {args.input}: {exc}") from exc
    X = sm.values
    if X.shape[1] > 1:
        if args.column is None:
            raise ArgumentError("input has several columns; pick one with --column")
        values = X[:, args.column - 1]
    else:
        values = X[:, 0]
    if args.k is not None:
        res = dp_detect_k(values, args.k, args.min_seg)
    else:
        res = pelt_detect(values, args.penalty, args.min_seg)
    _emit_json(res.to_dict(), args.output)


def cmd_pipeline(args):
    if args.config is not None:
        with open(args.config) as fh:
            d = json.load(fh)
        d = d.get("config", d)
        cfg = RunConfig.from_dict(d)
        cfg.threads = args.threads
        cfg.output = args.output
    else:
        sim_params = {}
        if args.alpha is not None:
            sim_params["alpha"] = args.alpha
        for key in ("P1", "P2", "N"):
            if getattr(args, key) is not None:
                sim_params[key] = getattr(args, key)
        cfg = RunConfig(input=args.input, simulate=args.simulate, sim_params=sim_params,
                        m=args.m, M=args.M, method=args.method, penalty=args.penalty, k=args.k,
                        min_seg=args.min_seg, seed=args.seed, threads=args.threads,
                        auto_transform=not args.no_transform, symmetric_loo=args.symmetric,
                        apen_r=args.r, apen_r_mode=args.r_mode,
                        record_timing=args.timing, output=args.output)
    report = run_pipeline(cfg)
    write_report(report, cfg.output)
    if args.profile_csv:
        vals = report.statistic["values"]
        _emit("column,value\n" + "".join(f"{j + 1},{v!r}\n" for j, v in enumerate(vals)),
              args.profile_csv)


def cmd_oracle(args):
    if args.kind == "ar2":
        if len(args.phi) != 2:
            raise ArgumentError("ar2 needs exactly two coefficients")
        out = {"ar2_rlen": ar2_rlen(*args.phi)}
    elif args.kind == "arp":
        out = {"arp_rlen": arp_rlen(args.phi, args.m, args.s)}
    elif args.kind == "acf":
        out = {"rho": yule_walker_autocorr(args.phi, args.lags).tolist()}
    else:
        if args.phi_y is None:
            raise ArgumentError("matched-variance needs --phi-y")
        out = {"sigma2_sq": matched_noise_variance(args.phi, args.phi_y, args.sigma1_sq)}
    _emit_json(out, args.output)


def cmd_constants(args):
    c = theory_constants(get_kernel(args.kernel), args.m, args.h, args.n)
    _emit_json(dict(c.__dict__), args.output)


def build_parser():
    p = argparse.ArgumentParser(prog="rlencp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rlencp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a simulated case matrix as CSV")
    s.add_argument("--case", default="case1", help="case1, case2, case3 or a JSON spec file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--P1", type=int, default=None)
    s.add_argument("--P2", type=int, default=None)
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--raw", action="store_true", help="skip the logistic transform")
    s.add_argument("--header", action="store_true", help="write a header row")
    _add_output(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("select-lag", help="BIC lag-order selection")
    _add_input(s)
    s.add_argument("--M", type=int, default=10)
    s.add_argument("--symmetric", action="store_true", help="fully symmetric leave-one-out")
    s.add_argument("--threads", type=int, default=1)
    _add_output(s)
    s.set_defaults(func=cmd_select_lag)

    s = sub.add_parser("entropy", help="per-series relative entropy at the maximizing bandwidth")
    _add_input(s)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--bandwidths", type=_floats, default=None)
    s.add_argument("--threads", type=int, default=1)
    _add_output(s)
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("apen", help="per-series approximate entropy")
    _add_input(s)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--r", type=float, default=0.2)
    s.add_argument("--r-mode", choices=("std", "absolute"), default="std")
    _add_output(s)
    s.set_defaults(func=cmd_apen)

    s = sub.add_parser("detect", help="change-points of a scalar sequence")
    s.add_argument("--input", required=True, help="CSV with the sequence in one column")
    s.add_argument("--column", type=int, default=None, help="1-based column to use")
    s.add_argument("--penalty", type=float, default=None)
    s.add_argument("--k", type=int, default=None, help="exact number of change-points")
    s.add_argument("--min-seg", type=int, default=2)
    _add_output(s)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("pipeline", help="lag selection, statistic and detection in one run")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--simulate", help="case1, case2, case3 or a JSON spec file")
    src.add_argument("--config", help="rerun from a config file or a previous report")
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--P1", type=int, default=None)
    s.add_argument("--P2", type=int, default=None)
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--m", type=int, default=None, help="fixed lag order (skips selection)")
    s.add_argument("--M", type=int, default=10)
    s.add_argument("--method", choices=("rlen", "apen", "mean", "variance"), default="rlen")
    s.add_argument("--penalty", type=float, default=None)
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--min-seg", type=int, default=2)
    s.add_argument("--r", type=float, default=0.2, help="ApEn tolerance")
    s.add_argument("--r-mode", choices=("std", "absolute"), default="std")
    s.add_argument("--symmetric", action="store_true")
    s.add_argument("--no-transform", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="record wall-clock timings")
    s.add_argument("--profile-csv", default=None, help="also write the per-series statistic")
    _add_output(s)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("oracle", help="closed-form Gaussian AR quantities")
    s.add_argument("kind", choices=("ar2", "arp", "acf", "matched-variance"))
    s.add_argument("--phi", type=_floats, required=True)
    s.add_argument("--phi-y", type=_floats, default=None)
    s.add_argument("--sigma1-sq", type=float, default=0.1)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--s", type=int, default=1)
    s.add_argument("--lags", type=int, default=5)
    _add_output(s)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("constants", help="kernel integrals and centering constants")
    s.add_argument("--kernel", choices=sorted(KERNELS), default="epanechnikov")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--h", type=float, default=0.1)
    s.add_argument("--n", type=int, default=100)
    _add_output(s)
    s.set_defaults(func=cmd_constants)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except RlenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
