"""Command-line front end.

    asgdual decompose --poly "0,-1,1" --minimal
    asgdual simulate sde --model model.json --x 0.3 --t 0.5 --reps 10000
    asgdual verify duality --model model.json --x 0.3 --n 2 --t 0.5 --forward sde:0.001
    asgdual analyze absorb --model model.json --x 0.5 --method dual_mc

Exit codes: 0 success, 1 bad input, 2 infeasible rate, 3 regime refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from ._streams import default_threads
from .ancestral_dual import RegimeError, simulate_asg_graph, simulate_leaf_path
from .analysis import (
    CRITICAL_UNKNOWN,
    DUAL_MC,
    FORWARD_MC,
    SERIES,
    absorption_probability_report,
    absorption_time,
    classify_leaf_process,
    dual_samples,
    fearnhead_solve,
    forward_frequency_samples,
    verify_duality,
    verify_siegmund,
)
from .bernstein_core import Polynomial
from .lambda_measure import LambdaMeasure, cdi_diagnostic, coalescence_impact
from .selection_geometry import (
    SelectionMechanism,
    decompose_with_rate,
    drift_bcv,
    minimal_rate_of,
    minimal_sd,
    minimal_sd_m3,
    rho_of,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_REGIME = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# model configuration
# ---------------------------------------------------------------------------

@dataclass
class ModelConfig:
    sd: SelectionMechanism
    L: LambdaMeasure
    drift: list[float] | None = None
    rate: float | None = None

    def to_json(self) -> dict:
        out = {"sd": self.sd.to_json(), "lambda": self.L.to_json()}
        if self.drift is not None:
            out["drift"] = self.drift
            out["decomposition"] = "minimal" if self.rate is None else {"rate": self.rate}
        return out


def parse_poly(text: str) -> Polynomial:
    try:
        return Polynomial([float(c) for c in text.split(",")])
    except ValueError as exc:
        raise InputError(f"cannot parse polynomial {text!r}: {exc}") from None


def _sd_from_drift(d: Polynomial, rate: float | None) -> SelectionMechanism:
    try:
        if rate is None:
            return minimal_sd(d)
        sd = decompose_with_rate(d, rate)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if sd is None:
        raise _Infeasible(f"rate {rate} is below the minimal rate {minimal_rate_of(d):.12g}")
    return sd


class _Infeasible(Exception):
    pass


def load_model(args) -> ModelConfig:
    data = {}
    if getattr(args, "model", None):
        try:
            with open(args.model) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read model file: {exc}") from None
    if getattr(args, "sd", None):
        data["sd"] = _json_arg(args.sd)
    if getattr(args, "poly", None):
        data["drift"] = [float(c) for c in parse_poly(args.poly).coeffs]
    if getattr(args, "lam", None):
        data["lambda"] = _json_arg(args.lam)
    if ("sd" in data) == ("drift" in data):
        raise InputError("give exactly one of a selection mechanism (sd) or a drift polynomial")
    try:
        L = LambdaMeasure.from_json(data.get("lambda", {"kingman": 1.0}))
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"bad lambda measure: {exc}") from None
    rate = data.get("rate", getattr(args, "rate", None))
    if "sd" in data:
        try:
            sd = SelectionMechanism.from_json(data["sd"])
        except (ValueError, TypeError, KeyError) as exc:
            raise InputError(f"bad selection mechanism: {exc}") from None
        return ModelConfig(sd, L)
    drift = [float(c) for c in data["drift"]]
    return ModelConfig(_sd_from_drift(Polynomial(drift), rate), L, drift, rate)


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON argument: {exc}") from None


def _dump(obj, args) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def _common(args) -> dict:
    return {"seed": args.seed, "threads": args.threads}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_decompose(args) -> int:
    d = parse_poly(args.poly)
    report = {"drift": [float(c) for c in d.coeffs]}
    try:
        bstar = minimal_rate_of(d)
        if args.m3_closed_form:
            b3, face, sd = minimal_sd_m3(d)
            report.update(m3_face=list(face), m3_b_star=float(b3))
        elif args.rate is not None:
            sd = decompose_with_rate(d, args.rate)
            if sd is None:
                print(f"infeasible: rate {args.rate} is below the minimal rate {bstar:.12g}",
                      file=sys.stderr)
                return EXIT_INFEASIBLE
        else:
            sd = minimal_sd(d)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    residual = float(np.max(np.abs(drift_bcv(sd) - rho_of(d, sd.m))))
    report.update(sd.to_json(), b_star=bstar, effective_rate=sd.effective_rate,
                  round_trip_residual=residual,
                  config={"rate": args.rate, "minimal": args.rate is None, "m3_closed_form": args.m3_closed_form})
    _dump(report, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_model(args)
    seed = args.seed
    cfg = {**model.to_json(), **_common(args), "kind": args.kind}
    if args.kind in ("sde", "moran"):
        forward = f"sde:{args.dt}" if args.kind == "sde" else f"moran:{args.N}"
        x = forward_frequency_samples(model.sd, model.L, args.x, args.t, args.reps, seed, forward, args.threads)
        mean, se = float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        cfg.update(x=args.x, t=args.t, reps=args.reps, forward=forward)
        if args.csv:
            _write_csv(args.csv, ["replicate", "value"], enumerate(x))
        _dump({"mean": mean, "se": se, "replicates": args.reps, "config": cfg}, args)
    elif args.kind == "bcp":
        xs = _grid(args.xs)
        vals = dual_samples(model.sd, model.L, args.n, args.t, xs, args.reps, seed, args.threads)
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(args.reps)
        cfg.update(n=args.n, t=args.t, reps=args.reps, x=xs)
        if args.csv:
            _write_csv(args.csv, ["x", "estimate", "se", "reps"],
                       [(x, m, s, args.reps) for x, m, s in zip(xs, mean, se)])
        _dump({"x": xs, "estimate": mean, "se": se, "config": cfg}, args)
    else:
        gen = np.random.default_rng(np.random.SeedSequence(seed))
        if args.kind == "leaf":
            log = simulate_leaf_path(args.n, model.sd, model.L, args.t, gen).to_jsonl()
        else:
            log = simulate_asg_graph(args.n, model.sd, model.L, args.t, gen).to_jsonl()
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(log + "\n")
        print(log)
    return EXIT_OK


def cmd_verify(args) -> int:
    model = load_model(args)
    if args.what == "duality":
        rep = verify_duality(model.sd, model.L, args.x, args.n, args.t, args.reps, args.seed,
                             args.forward, args.threads)
    else:
        rep = verify_siegmund(model.sd, model.L, args.ell, args.d, args.t, args.reps, args.seed,
                              args.threads)
    out = rep.to_json()
    out["config"].update(model.to_json(), **_common(args))
    _dump(out, args)
    return EXIT_OK


def cmd_analyze(args) -> int:
    model = load_model(args)
    sd, L = model.sd, model.L
    cfg = {**model.to_json(), **_common(args), "what": args.what}
    if args.what == "classify":
        verdict = classify_leaf_process(sd, L)
        K = args.cdi_terms
        _, cdi = cdi_diagnostic(L, K)
        _dump({"classification": verdict, "b": sd.effective_rate, "c": coalescence_impact(L),
               "cdi": cdi, "config": {**cfg, "cdi_terms": K}}, args)
        return EXIT_OK
    if classify_leaf_process(sd, L) == CRITICAL_UNKNOWN:
        raise RegimeError("b(beta) equals c(Lambda); the critical case is not supported")
    if args.what == "stationary":
        tail = fearnhead_solve(sd, L, args.nmax, args.tol)
        if not tail.converged:
            print(f"warning: stationary tail not converged after {tail.doublings} doublings "
                  f"(last change {tail.change:.3g})", file=sys.stderr)
        q = tail.q
        last = int(np.max(np.flatnonzero(q > args.report_below))) if np.any(q > args.report_below) else 0
        if args.csv:
            _write_csv(args.csv, ["n", "estimate", "se", "reps"],
                       [(n, q[n], 0.0, 0) for n in range(1, last + 1)])
        out = tail.to_json()
        out["q"] = q[1:last + 1].tolist()
        out["a"] = tail.a[:last + 1].tolist()
        out["config"].update(cfg, report_below=args.report_below)
        _dump(out, args)
        return EXIT_OK
    if args.what == "absorb":
        xs = _grid(args.xs) if args.xs else [args.x]
        rows = [absorption_probability_report(sd, L, x, args.method, args.budget, args.seed,
                                              dt=args.dt, threads=args.threads) for x in xs]
        if args.csv:
            _write_csv(args.csv, ["x", "estimate", "se", "reps"],
                       [(r["x"], r["h"], r["se"], args.budget) for r in rows])
        _dump({"results": rows if len(rows) > 1 else rows[0], "config": {**cfg, "dt": args.dt}}, args)
        return EXIT_OK
    grid = _grid(args.ts)
    res = absorption_time(sd, L, args.x, grid, args.n_max, args.reps, args.seed, threads=args.threads)
    if args.csv:
        _write_csv(args.csv, ["t", "estimate", "se", "reps"],
                   [(t, c, s, args.reps) for t, c, s in zip(res.t_grid, res.cdf, res.cdf_se)])
    out = res.to_json()
    out["config"] = {**cfg, "x": args.x, "n_max": args.n_max}
    _dump(out, args)
    return EXIT_OK


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse grid {text!r}") from None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _model_flags(p) -> None:
    p.add_argument("--model", help="JSON file with 'sd' or 'drift', and 'lambda'")
    p.add_argument("--sd", help="selection mechanism as JSON")
    p.add_argument("--poly", help="drift as monomial coefficients c0,c1,...")
    p.add_argument("--rate", type=float, help="decompose the drift at this effective rate")
    p.add_argument("--lambda", dest="lam", help='Lambda measure as JSON, e.g. {"kingman":1}')


def _run_flags(p, reps: int = 10000) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--reps", type=int, default=reps)
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--csv", help="write the data grid as CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="asgdual", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="selection decomposition of a drift polynomial")
    p.add_argument("--poly", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rate", type=float)
    g.add_argument("--minimal", action="store_true")
    p.add_argument("--m3-closed-form", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", help="forward or ancestral simulation")
    p.add_argument("kind", choices=["sde", "moran", "bcp", "leaf", "asg"])
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--xs", default="0.25,0.5,0.75")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--N", type=int, default=200)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="Monte Carlo duality checks")
    p.add_argument("what", choices=["duality", "siegmund"])
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--forward", default="sde:0.001", help="sde[:dt] or moran:N")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="regime, stationary law, fixation and absorption")
    p.add_argument("what", choices=["classify", "stationary", "absorb", "absorb-time"])
    _model_flags(p)
    _run_flags(p, reps=2000)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--xs", help="grid of x values for absorb")
    p.add_argument("--method", choices=[DUAL_MC, FORWARD_MC, SERIES], default=DUAL_MC)
    p.add_argument("--budget", type=int, default=10000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--report-below", type=float, default=1e-15,
                   help="omit stationary masses at or below this value")
    p.add_argument("--cdi-terms", type=int, default=1000)
    p.add_argument("--ts", default="0.25,0.5,1,2,4")
    p.add_argument("--n-max", type=int, default=200)
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RegimeError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
