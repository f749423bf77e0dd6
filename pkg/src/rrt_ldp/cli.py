"""Command-line front end: generators, exact tables, bound evaluations,
tail estimators, and the named-check verification suites.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource
limit.  Every JSON artifact embeds the schema string "rrt-ldp/1"; CSV cells
holding exact integers/rationals are plain decimal digit strings and floats
carry 17 significant digits.  All randomness is pinned by --seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

from . import analytic_bounds as ab
from . import checks
from . import exact_engine as ee
from . import rare_event as re_

SCHEMA = "rrt-ldp/1"

__all__ = ["RunPlan", "parse_args", "execute", "main", "entry"]


@dataclass(frozen=True)
class RunPlan:
    """A fully validated run: command, parameters, and output routing.

    render() returns the canonical argv that reproduces the plan, so
    parse_args(plan.render()) == plan for every valid plan.
    """

    command: str
    parameters: dict = field(default_factory=dict)
    format: str = "csv"
    output: str = "-"

    def render(self) -> list[str]:
        tokens = [self.command]
        for key in _FLAG_ORDER[self.command]:
            if key not in self.parameters:
                continue
            val = self.parameters[key]
            flag = "--" + key.replace("_", "-")
            if isinstance(val, tuple):
                tokens += [flag, ",".join(str(v) for v in val)]
            elif isinstance(val, float):
                tokens += [flag, repr(val)]
            else:
                tokens += [flag, str(val)]
        tokens += ["--format", self.format, "--output", self.output]
        return tokens


_FLAG_ORDER = {
    "simulate": ("n", "reps", "seed", "generator"),
    "exact-cdf": ("n_max", "k_max"),
    "omega": ("alpha", "n", "k_max"),
    "tail-upper": ("n", "beta", "reps", "seed"),
    "tail-lower": ("n", "alpha", "theta", "reps", "seed"),
    "pi-chain": ("n", "k", "beta", "reps", "seed"),
    "good-vertices": ("n", "beta", "reps", "seed"),
    "bounds": ("beta", "n", "k", "gamma", "p", "lam", "x", "remark_lambda"),
    "verify": ("suite",),
}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def _add_common(sub):
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="output format (default csv)")
    sub.add_argument("--output", default="-", metavar="PATH",
                     help="destination path, or - for stdout (default)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rrt-ldp",
        description="Random recursive trees: simulation, exact height combinatorics, "
                    "tail bounds, and seeded rare-event estimators.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="heights of seeded random trees (CSV: n,rep,height)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--generator", choices=("uniform", "floor", "yule"), default="uniform")
    _add_common(s)

    s = sub.add_parser("exact-cdf", help="exact height CDF table "
                                         "(CSV: n,k,A_k_n,prob_num,prob_den,prob_float)")
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--k-max", type=int, required=True)
    _add_common(s)

    s = sub.add_parser("omega", help="exact lower-tail rate values "
                                     "(CSV: n,alpha,threshold,neg_ln_F,omega)")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n", type=_int_list, required=True,
                   help="comma-separated tree sizes, e.g. 50,100,200,400")
    s.add_argument("--k-max", type=int, default=None,
                   help="table height cap (default: the largest threshold needed)")
    _add_common(s)

    s = sub.add_parser("tail-upper", help="Monte Carlo P(height >= beta ln n)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    _add_common(s)

    s = sub.add_parser("tail-lower", help="importance-sampled P(height <= alpha e ln n)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    _add_common(s)

    s = sub.add_parser("pi-chain", help="Monte Carlo floor-map chain tail with analytic sandwich")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    _add_common(s)

    s = sub.add_parser("good-vertices", help="good-vertex count statistics on floor-map trees")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    _add_common(s)

    s = sub.add_parser("bounds", help="closed-form rates and tail bounds at given parameters")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--n", type=int, default=None, help="with --k: chain-tail sandwich at (n,k,beta)")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--gamma", type=float, default=None, help="with --p: binary relative entropy")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--lam", type=float, default=None, help="with --x: Poisson tail bound forms")
    s.add_argument("--x", type=float, default=None)
    s.add_argument("--remark-lambda", type=float, default=None,
                   help="evaluate the concentration-consistency inequality at this lambda")
    _add_common(s)

    s = sub.add_parser("verify", help="run the named invariant checks; exit 0 iff all pass")
    s.add_argument("--suite", choices=checks.SUITE_NAMES, default="all")
    _add_common(s)

    return p


def _validate(parser: argparse.ArgumentParser, plan: RunPlan) -> None:
    par = plan.parameters
    cmd = plan.command

    def bad(msg):
        parser.error(msg)  # exits 2

    if "reps" in par and par["reps"] < 1:
        bad("--reps must be >= 1")
    if "n" in par and cmd != "omega" and par["n"] is not None and par["n"] < 1:
        bad("--n must be >= 1")
    if cmd == "simulate" and par["n"] < 1:
        bad("--n must be >= 1")
    if cmd == "exact-cdf" and (par["n_max"] < 1 or par["k_max"] < 0):
        bad("--n-max must be >= 1 and --k-max >= 0")
    if cmd == "omega":
        if not 0.0 < par["alpha"] < 1.0:
            bad("--alpha must lie in (0, 1)")
        if not par["n"] or any(v < 2 for v in par["n"]):
            bad("--n entries must be >= 2")
    if cmd == "tail-upper" and (par["n"] < 2 or par["beta"] <= 0):
        bad("--n must be >= 2 and --beta > 0")
    if cmd == "tail-lower":
        if par["n"] < 2:
            bad("--n must be >= 2")
        if not 0.0 < par["alpha"] < 1.0:
            bad("--alpha must lie in (0, 1)")
        if not 0.0 < par["theta"] <= 1.0:
            bad("--theta must lie in (0, 1]")
    if cmd == "pi-chain" and (par["n"] < 1 or par["k"] < 1 or par["beta"] <= 0):
        bad("--n >= 1, --k >= 1 and --beta > 0 required")
    if cmd == "good-vertices":
        if par["n"] < 4:
            bad("--n must be >= 4")
        if par["beta"] <= math.e:
            bad("--beta must exceed e")
    if cmd == "bounds":
        if par["beta"] <= 0:
            bad("--beta must be > 0")
        if (par.get("n") is None) != (par.get("k") is None):
            bad("--n and --k must be given together")
        if (par.get("gamma") is None) != (par.get("p") is None):
            bad("--gamma and --p must be given together")
        if (par.get("lam") is None) != (par.get("x") is None):
            bad("--lam and --x must be given together")
        if par.get("gamma") is not None and not 0.0 <= par["gamma"] <= 1.0:
            bad("--gamma must lie in [0, 1]")
        if par.get("lam") is not None and par["lam"] <= 0:
            bad("--lam must be > 0")
        if par.get("lam") is not None and par["x"] <= par["lam"]:
            bad("--x must exceed --lam")
        if par.get("remark_lambda") is not None and par["remark_lambda"] <= 0:
            bad("--remark-lambda must be > 0")


def parse_args(argv: list[str]) -> RunPlan:
    """Parse and validate; unknown or out-of-range flags exit with code 2."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    fmt = ns.pop("format")
    output = ns.pop("output")
    params = {k: v for k, v in ns.items() if v is not None}
    plan = RunPlan(command=command, parameters=params, format=fmt, output=output)
    _validate(parser, plan)
    return plan


# --------------------------------------------------------------------------
# emission helpers


def _emit(plan: RunPlan, text: str) -> None:
    if plan.output == "-":
        sys.stdout.write(text)
    else:
        with open(plan.output, "w") as fh:
            fh.write(text)


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _rows_text(plan: RunPlan, header: list[str], rows: list[list], json_obj) -> str:
    if plan.format == "json":
        return json.dumps(json_obj, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _estimate_payload(est: re_.TailEstimate, threshold) -> dict:
    return {
        "schema": SCHEMA,
        "event": est.event_desc,
        "threshold": threshold,
        "estimate": est.value,
        "std_error": est.std_error,
        "reps": est.reps,
        "seed": est.root_seed,
    }


def _payload_text(plan: RunPlan, payload: dict) -> str:
    if plan.format == "json":
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    keys = list(payload)
    w.writerow(keys)
    w.writerow([_f17(payload[k]) if isinstance(payload[k], float) else payload[k] for k in keys])
    return buf.getvalue()


# --------------------------------------------------------------------------
# command implementations


def _run_simulate(plan: RunPlan) -> str:
    par = plan.parameters
    heights = re_.simulate_heights(par["n"], par["reps"], par["seed"],
                                   generator=par.get("generator", "uniform"))
    rows = [[par["n"], i, int(h)] for i, h in enumerate(heights)]
    obj = {"schema": SCHEMA, "n": par["n"], "generator": par.get("generator", "uniform"),
           "seed": par["seed"], "heights": [int(h) for h in heights]}
    return _rows_text(plan, ["n", "rep", "height"], rows, obj)


def _run_exact_cdf(plan: RunPlan) -> str:
    table = ee.build_cdf_table(plan.parameters["n_max"], plan.parameters["k_max"])
    if plan.format == "csv":
        buf = io.StringIO()
        ee.write_cdf_csv(table, buf)
        return buf.getvalue()
    rows = []
    for n in range(1, table.n_max + 1):
        for k in range(table.k_max + 1):
            prob = ee.exact_height_cdf(table, n, k)
            rows.append({
                "n": n, "k": k,
                "A_k_n": str(table.counts[k][n]),
                "prob_num": str(prob.rational.numerator),
                "prob_den": str(prob.rational.denominator),
                "prob_float": float(prob.approx),
            })
    return json.dumps({"schema": SCHEMA, "rows": rows}, indent=2) + "\n"


def _run_omega(plan: RunPlan) -> str:
    par = plan.parameters
    alpha = par["alpha"]
    sizes = par["n"]
    thresholds = {n: ab.lower_height_threshold(n, alpha) for n in sizes}
    k_max = par.get("k_max", max(thresholds.values()))
    if k_max < max(thresholds.values()):
        raise ValueError("--k-max below the largest required threshold")
    table = ee.build_cdf_table(max(sizes), k_max)
    rows, objs = [], []
    for n in sizes:
        k = thresholds[n]
        neg = ee.neg_log_height_cdf(table, n, k)
        omega = ee.omega_alpha(table, n, alpha)
        rows.append([n, repr(alpha), k, _f17(neg), _f17(omega)])
        objs.append({"n": n, "alpha": alpha, "threshold": k,
                     "neg_ln_F": float(neg), "omega": omega})
    return _rows_text(plan, ["n", "alpha", "threshold", "neg_ln_F", "omega"], rows,
                      {"schema": SCHEMA, "rows": objs})


def _run_tail_upper(plan: RunPlan) -> str:
    par = plan.parameters
    est = re_.estimate_upper_tail(par["n"], par["beta"], par["reps"], par["seed"])
    thr = ab.upper_height_threshold(par["n"], par["beta"])
    return _payload_text(plan, _estimate_payload(est, thr))


def _run_tail_lower(plan: RunPlan) -> str:
    par = plan.parameters
    est = re_.estimate_lower_tail_is(par["n"], par["alpha"], re_.TiltConfig(par["theta"]),
                                     par["reps"], par["seed"])
    thr = ab.lower_height_threshold(par["n"], par["alpha"])
    return _payload_text(plan, _estimate_payload(est, thr))


def _run_pi_chain(plan: RunPlan) -> str:
    par = plan.parameters
    est = re_.estimate_pi_tail(par["n"], par["k"], par["beta"], par["reps"], par["seed"])
    bound = ab.pi_tail_sandwich(par["n"], par["k"], par["beta"])
    payload = _estimate_payload(est, par["n"] * math.exp(-par["k"] / par["beta"]))
    payload["sandwich_lower"] = bound.lower
    payload["sandwich_upper"] = bound.upper
    return _payload_text(plan, payload)


def _run_good_vertices(plan: RunPlan) -> str:
    par = plan.parameters
    mean_est, p_est = re_.estimate_good_vertices(par["n"], par["beta"], par["reps"], par["seed"])
    payload = {
        "schema": SCHEMA,
        "event": p_est.event_desc,
        "threshold": ab.upper_height_threshold(par["n"], par["beta"]),
        "mean_sigma": mean_est.value,
        "mean_sigma_std_error": mean_est.std_error,
        "p_nonempty": p_est.value,
        "p_nonempty_std_error": p_est.std_error,
        "reps": p_est.reps,
        "seed": p_est.root_seed,
    }
    return _payload_text(plan, payload)


def _run_bounds(plan: RunPlan) -> str:
    par = plan.parameters
    rates = ab.rate_functions(par["beta"])
    payload = {"schema": SCHEMA, "beta": par["beta"],
               "rate_J": rates.J, "rate_J_sf": rates.J_sf}
    if par.get("n") is not None:
        s = ab.pi_tail_sandwich(par["n"], par["k"], par["beta"])
        payload.update(n=par["n"], k=par["k"],
                       sandwich_lower=s.lower, sandwich_upper=s.upper,
                       tower_index=ab.tower_index(par["n"]))
    if par.get("gamma") is not None:
        payload.update(gamma=par["gamma"], p=par["p"],
                       binary_kl=ab.binary_kl(par["gamma"], par["p"]))
    if par.get("lam") is not None:
        tight, loose = ab.poisson_chernoff(par["lam"], par["x"])
        payload.update(lam=par["lam"], x=par["x"],
                       poisson_bound_tight=tight, poisson_bound_loose=loose)
    if par.get("remark_lambda") is not None:
        payload.update(remark_lambda=par["remark_lambda"],
                       remark_inequality_holds=ab.remark13_inequality(par["remark_lambda"]))
    return _payload_text(plan, payload)


def execute(plan: RunPlan) -> int:
    """Dispatch a validated plan; returns the process exit code."""
    try:
        if plan.command == "verify":
            buf = io.StringIO()
            ok = checks.run_suite(plan.parameters.get("suite", "all"), buf)
            _emit(plan, buf.getvalue())
            return 0 if ok else 1
        runner = {
            "simulate": _run_simulate,
            "exact-cdf": _run_exact_cdf,
            "omega": _run_omega,
            "tail-upper": _run_tail_upper,
            "tail-lower": _run_tail_lower,
            "pi-chain": _run_pi_chain,
            "good-vertices": _run_good_vertices,
            "bounds": _run_bounds,
        }[plan.command]
        _emit(plan, runner(plan))
        return 0
    except ee.ResourceLimitError as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return 3


def main(argv: list[str] | None = None) -> int:
    plan = parse_args(sys.argv[1:] if argv is None else argv)
    return execute(plan)


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
