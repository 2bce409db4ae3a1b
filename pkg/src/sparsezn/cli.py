"""Command-line front end.

Exit codes: 0 success, 1 invalid parameters, 2 invariant violation
(counterexample found), 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from .experiments import (
    CHECKS,
    CampaignSpec,
    report_to_csv,
    reproduce_worked_example,
    run_campaign,
    verify_small_n,
)
from .fourier import SupportSet
from .kernel import FrequencySet, build_certificate, check_condition_iv, kernel
from .recovery import DEFAULT_MAX_ITER, DEFAULT_TOL, RecoveryProblem, minimal_extrapolation

log = logging.getLogger("sparsezn")

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_NONCONVERGED = 0, 1, 2, 3


class InvalidParameters(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _real_or_int(text: str):
    v = float(text)
    return int(v) if v.is_integer() else v


def _load_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    return json.loads(Path(path).read_text())


def _omega_from_args(args) -> FrequencySet:
    if args.omega_file:
        return FrequencySet.from_dict(_load_json(args.omega_file))
    if args.n is None or args.omega is None:
        raise InvalidParameters("give --omega-file, or both --n and --omega")
    return FrequencySet(args.n, tuple(_int_list(args.omega)))


def _emit(args, payload, csv_rows: list[dict] | None = None) -> None:
    """Write ``payload`` as JSON, or ``csv_rows`` as CSV when --format csv."""
    if args.format == "csv":
        if csv_rows is None:
            raise InvalidParameters("this command has no CSV form; use --format json")
        cols = list(csv_rows[0]) if csv_rows else []
        lines = [",".join(cols)] + [",".join("" if r[c] is None else str(r[c]) for c in cols) for r in csv_rows]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_omega_args(p):
    p.add_argument("--omega-file", help='FrequencySet JSON {"n": ..., "omega": [...]}')
    p.add_argument("--n", type=int, help="group order N")
    p.add_argument("--omega", help="comma-separated frequencies")


def cmd_recover(args) -> int:
    problem = RecoveryProblem.from_dict(_load_json(args.problem))
    result = minimal_extrapolation(problem, tol=args.tol, max_iter=args.max_iter)
    _emit(args, result.to_dict(), [
        {"t": t, "re": float(v.real), "im": float(v.imag)} for t, v in enumerate(result.solution.values)
    ])
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_kernel(args) -> int:
    omega = _omega_from_args(args)
    k = kernel(omega, method=args.method)
    payload = {
        "n": omega.n,
        "omega": list(omega.members),
        "k0": k.k0,
        "max_off_origin": k.max_off_origin,
        "argmax_off_origin": k.argmax_off_origin,
        "coherence": k.coherence() if k.k0 > 0 else None,
        "re": [float(v) for v in k.values.real],
        "im": [float(v) for v in k.values.imag],
    }
    if args.t is not None:
        payload["iv"] = check_condition_iv(k, args.t).to_dict()
    rows = [{"t": t, "re": float(v.real), "im": float(v.imag), "abs": float(abs(v))}
            for t, v in enumerate(k.values)]
    _emit(args, payload, rows)
    return EXIT_OK


def cmd_check_iv(args) -> int:
    omega = _omega_from_args(args)
    res = check_condition_iv(kernel(omega), args.t)
    _emit(args, {"n": omega.n, "t": args.t, "omega_size": len(omega)} | res.to_dict())
    return EXIT_OK


def cmd_certificate(args) -> int:
    omega = _omega_from_args(args)
    support = SupportSet(omega.n, tuple(_int_list(args.support)))
    if args.phases:
        phases = np.asarray([float(v) for v in args.phases.split(",")])
        if phases.size != len(support):
            raise InvalidParameters("need one phase per support point")
    else:
        phases = np.random.default_rng(args.seed).random(len(support))
    lam = np.exp(2j * np.pi * phases)
    k = kernel(omega)
    if k.k0 <= 0:
        raise InvalidParameters("empty frequency set")
    cert = build_certificate(k, support, lam)
    iv = check_condition_iv(k, len(support))
    payload = cert.to_dict() | {
        "n": omega.n,
        "omega": list(omega.members),
        "iv": iv.to_dict(),
        "spectrum_leak": cert.spectrum_leak(),
    }
    _emit(args, payload, [
        {"t": t, "re": float(v.real), "im": float(v.imag), "abs": float(abs(v)), "in_support": t in support}
        for t, v in enumerate(cert.p.values)
    ])
    # (iv) true but certificate fails would contradict the (iv) => (iii) implication
    return EXIT_VIOLATION if iv.holds and not payload["holds"] else EXIT_OK


def cmd_sample_omega(args) -> int:
    if args.size is not None:
        omega = B.sample_omega_fixed(args.n, args.size, args.seed)
    else:
        tau = args.tau
        if tau is None:
            if args.t is None or args.c is None:
                raise InvalidParameters("give --size, --tau, or --t and --c for the T2 tuning")
            tau = B.tune_tau_t2(args.n, args.t, args.c)
        omega = B.sample_omega(B.BernoulliConfig(args.n, tau, args.seed))
    _emit(args, omega.to_dict(), [{"omega": w} for w in omega.members])
    return EXIT_OK


def cmd_bounds(args) -> int:
    kwargs = dict(n=args.n, t_sparsity=args.t, c=args.c, nu=args.nu, mu=args.mu, alpha=args.alpha)
    if args.kind == "crt":
        kwargs["delta"] = args.delta
    params = B.BoundParams(**kwargs)
    report = B.bound_report(args.kind, params, tau=args.tau, acknowledge_mod6=args.acknowledge_mod6)
    _emit(args, report, [{"name": k, "value": v} for k, v in report["derived"].items()])
    return EXIT_OK


def _campaign_spec(args) -> CampaignSpec:
    if args.spec:
        data = _load_json(args.spec)
        data.setdefault("seed", args.seed)
        return CampaignSpec.from_dict(data)
    if args.n is None or args.t is None or args.c is None:
        raise InvalidParameters("campaign needs --spec or --n, --t and --c")
    return CampaignSpec(
        n=args.n, t_sparsity=args.t, c=args.c, nu=args.nu, mu=args.mu, alpha=args.alpha,
        model=args.model, trials=args.trials, seed=args.seed, checks=tuple(args.checks.split(",")),
        tau=args.tau, omega_size=args.omega_size, falsifier_trials=args.falsifier_trials,
        acknowledge_mod6=args.acknowledge_mod6,
    )


def cmd_campaign(args) -> int:
    spec = _campaign_spec(args)
    report = run_campaign(spec, jobs=args.jobs)
    text_json = json.dumps(report, indent=2, sort_keys=True) + "\n"
    text_csv = report_to_csv(report)
    if args.out:
        out = Path(args.out)
        if args.format == "csv":
            out.write_text(text_csv)
            out.with_suffix(".json").write_text(text_json)
        else:
            out.write_text(text_json)
            out.with_suffix(".csv").write_text(text_csv)
    else:
        sys.stdout.write(text_csv if args.format == "csv" else text_json)
    for name, c in report["checks"].items():
        log.info("%s: %d/%d = %.4f  [%.4f, %.4f]  bound %s", name, c["successes"], c["trials"],
                 c["frequency"] or 0.0, c["wilson_low"], c["wilson_high"], c["theoretical_lower_bound"])
    return EXIT_OK if report["consistent"] else EXIT_VIOLATION


def cmd_verify_small_n(args) -> int:
    ns = _int_list(args.ns) if args.ns else None
    report = verify_small_n(args.n_max, args.t_max, ns=ns, recovery=not args.no_recovery,
                            amplitudes_per_support=args.amplitudes, seed=args.seed)
    _emit(args, report, report["rows"])
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def cmd_reproduce_example(args) -> int:
    report = reproduce_worked_example(trials=args.trials, seed=args.seed, jobs=args.jobs)
    _emit(args, report, [
        {"quantity": r["quantity"], "claim": r["claim"], "value": r["value"], "agrees": r["agrees"]}
        for r in report["rows"]
    ])
    for r in report["rows"]:
        log.info("%-30s %-28s %-12s %s", r["quantity"], r["claim"], r["value"], "ok" if r["agrees"] else "MISMATCH")
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; SUPPRESS keeps the subparser from
    # clobbering values given at top level
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(0), help="master seed (u64)")
    common.add_argument("--jobs", type=int, default=d(1), help="parallel worker processes")
    common.add_argument("--out", default=d(None), help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=d("json"))
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="sparsezn", description=__doc__.splitlines()[0],
                                     parents=[_global_flags(suppress=False)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", parents=[common], help="solve one minimal-extrapolation problem")
    p.add_argument("problem", help='problem JSON {"n", "omega", "re", "im"} or - for stdin')
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("kernel", parents=[common], help="evaluate the idempotent kernel")
    _add_omega_args(p)
    p.add_argument("--t", type=int, help="also check condition (iv) at this sparsity")
    p.add_argument("--method", choices=("fast", "direct"), default="fast")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("check-iv", parents=[common], help="check max |K(t)| < K(0)/(2T)")
    _add_omega_args(p)
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(func=cmd_check_iv)

    p = sub.add_parser("certificate", parents=[common], help="build the kernel interpolant for a sign pattern")
    _add_omega_args(p)
    p.add_argument("--support", required=True, help="comma-separated support points")
    p.add_argument("--phases", help="phases of lambda in turns (lambda = e(phase)); random if omitted")
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("sample-omega", parents=[common], help="draw a random frequency set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float)
    p.add_argument("--size", type=int, help="fixed-size model")
    p.add_argument("--t", type=int)
    p.add_argument("--c", type=float)
    p.set_defaults(func=cmd_sample_omega)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    p.add_argument("kind", choices=("t2", "t3", "crt", "bound4"))
    p.add_argument("--n", type=_real_or_int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--nu", type=int, default=10)
    p.add_argument("--mu", type=int, default=10)
    p.add_argument("--alpha", type=float, default=2.0 / 3.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--tau", type=float, help="t2 only: override the tuned rate")
    p.add_argument("--acknowledge-mod6", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("campaign", parents=[common], help="Monte Carlo campaign")
    p.add_argument("--spec", help="CampaignSpec JSON file")
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--nu", type=int, default=10)
    p.add_argument("--mu", type=int, default=10)
    p.add_argument("--alpha", type=float, default=2.0 / 3.0)
    p.add_argument("--model", choices=("bernoulli", "fixed-size"), default="bernoulli")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--checks", default="iv", help=f"comma-separated subset of {','.join(CHECKS)}")
    p.add_argument("--tau", type=float)
    p.add_argument("--omega-size", type=int)
    p.add_argument("--falsifier-trials", type=int, default=200)
    p.add_argument("--acknowledge-mod6", action="store_true")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("verify-small-n", parents=[common], help="exhaustive checks for N <= 13")
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--t-max", type=int, default=2)
    p.add_argument("--ns", help="comma-separated group orders (default 1..n-max)")
    p.add_argument("--amplitudes", type=int, default=10, help="random amplitude vectors per support")
    p.add_argument("--no-recovery", action="store_true")
    p.set_defaults(func=cmd_verify_small_n)

    p = sub.add_parser("reproduce-example", parents=[common], help="N=1001, T=2, C=2, nu=10 worked example")
    p.add_argument("--trials", type=int, default=2000)
    p.set_defaults(func=cmd_reproduce_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, KeyError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
