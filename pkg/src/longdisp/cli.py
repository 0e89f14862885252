"""Command-line entry points.

``construct`` runs the engine on a config, ``verify`` diffs a run against
the brute-force oracle, ``fit`` prints an ellipse fit, ``spectrum`` lists
best approximations and displacement lengths of a vector, and ``flow``
tabulates the first minimum along the diagonal flow.  The last two also
render a figure next to their tables.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from fractions import Fraction
from typing import Any, Sequence

import matplotlib
import mpmath

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__  # noqa: E402
from .certified import CReal, PrecisionError, parse_rational, rational_str, to_decimal  # noqa: E402
from .config import ConfigError, ConstructionConfig, InfeasibleResidues, engine_fit  # noqa: E402
from .dynamics import flow_curve, flow_maxima  # noqa: E402
from .engine import VERIFIED, Engine, State  # noqa: E402
from .norms import NormSpec, UnsupportedNormError, fit_best_ellipse, preset_fit, sandwich_ratios  # noqa: E402
from .oracle import Approx, best_sequence, displacement_norm, lattice_min, offset  # noqa: E402

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_BUDGET, EXIT_PRECISION, EXIT_MISMATCH = 0, 1, 2, 3, 4, 5

log = logging.getLogger("longdisp")


def _err(msg: str) -> None:
    print(f"longdisp: {msg}", file=sys.stderr)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _vec(text: str) -> tuple[Fraction, Fraction]:
    parts = [x for x in text.replace(" ", "").split(",") if x]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated rationals")
    return parse_rational(parts[0]), parse_rational(parts[1])


def _norm_arg(text: str) -> NormSpec:
    """A norm name, a JSON record, or a path to a JSON file."""
    if os.path.isfile(text):
        with open(text) as fh:
            return NormSpec.from_json(json.load(fh))
    if text.lstrip().startswith("{"):
        return NormSpec.from_json(json.loads(text))
    if text.startswith("p="):
        return NormSpec.p_norm(text[2:])
    return NormSpec.from_json({"kind": text})


# ---------------------------------------------------------------------------
# run directories


def load_run(run_dir: str) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    with open(os.path.join(run_dir, "summary.json")) as fh:
        summary = json.load(fh)
    records = []
    with open(os.path.join(run_dir, "steps.jsonl")) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return summary, records


def run_sequence(summary: dict[str, Any], records: Sequence[dict[str, Any]]) -> list[Approx]:
    """``w_0`` from the summary followed by the step records as stored on disk."""
    p0 = tuple(int(x) for x in summary["p"][0])
    seq = [Approx(int(summary["q"][0]), p0)]
    for rec in records:
        seq.append(Approx(int(rec["q"]), (int(rec["p"][0]), int(rec["p"][1]))))
    return seq


def run_vector(summary: dict[str, Any]) -> tuple[Fraction, Fraction]:
    return parse_rational(summary["v"][0]), parse_rational(summary["v"][1])


# ---------------------------------------------------------------------------
# construct


def cmd_construct(args: argparse.Namespace) -> int:
    try:
        cfg = ConstructionConfig.load(args.config)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_IO
    except (ConfigError, ValueError, KeyError) as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    try:
        cfg = cfg.with_overrides(selector=args.selector, steps=args.steps,
                                 precision_bits=args.precision_bits)
        cfg.validate()
    except InfeasibleResidues as exc:
        _err(f"infeasible residues at index {exc.index}: {exc}")
        return EXIT_CONFIG
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        result = Engine.from_config(cfg).run(args.out)
    except OSError as exc:
        _err(f"cannot write run: {exc}")
        return EXIT_IO
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    q_digits = len(str(result.state.q(result.state.n)))
    print(f"{result.steps} steps accepted, q_N has {q_digits} digits, "
          f"{result.seconds:.1f} s, exit {result.code}")
    if result.error:
        _err(result.error)
    return result.code


# ---------------------------------------------------------------------------
# verify


def verify_run(run_dir: str, budget_q: int) -> dict[str, Any]:
    """Compare a stored run with brute force up to ``budget_q``.

    Entries beyond the budget get an exact enumeration of their cylinders
    around the final convergent instead.
    """
    summary, records = load_run(run_dir)
    with open(os.path.join(run_dir, "config.json")) as fh:
        cfg = ConstructionConfig.from_json(json.load(fh))
    norm = cfg.norm
    v = run_vector(summary)
    claimed = run_sequence(summary, records)
    report: dict[str, Any] = {"budget_q": budget_q, "claimed": len(claimed)}
    if budget_q <= 0:
        report.update(vacuous=True, compared=0, match=True, first_mismatch=None, beyond=[])
        return report
    # the stored convergent must be the last stored vector
    last = claimed[-1]
    consistent = offset(v, last.q, last.p) == (0, 0)
    within = [a for a in claimed if a.q <= budget_q]
    oracle = best_sequence(v, norm, budget_q)
    first = None
    for idx in range(max(len(within), len(oracle))):
        a = within[idx] if idx < len(within) else None
        b = oracle[idx] if idx < len(oracle) else None
        if a is None or b is None or (a.q, a.p) != (b.q, b.p):
            first = idx
            break
    if first is None and not consistent:
        first = len(claimed) - 1
    if first is None:
        first = _structural_mismatch(v, claimed, norm)
    beyond = []
    if first is None:
        engine = Engine.from_config(cfg)
        base = [tuple(int(x) for x in w) for w in reversed(summary["base"])]
        st = State(base + [(a.q, *a.p) for a in claimed])
        N = st.n
        for j in range(1, N + 1):
            if st.q(j) <= budget_q:
                continue
            status = engine.cylinder_status(st, N, j, route="enum")
            beyond.append({"j": j, "status": status})
            if status != VERIFIED and first is None:
                first = j
    report.update(vacuous=False, compared=len(within), oracle_entries=len(oracle),
                  consistent_convergent=consistent, match=first is None,
                  first_mismatch=first, beyond=beyond)
    return report


def _structural_mismatch(v, claimed: Sequence[Approx], norm: NormSpec) -> int | None:
    """First index breaking increasing ``q``, decreasing distance or nearest ``p``."""
    for n, a in enumerate(claimed):
        off = offset(v, a.q, a.p)
        if n > 0:
            prev = claimed[n - 1]
            if a.q <= prev.q or norm.compare(off, offset(v, prev.q, prev.p)) >= 0:
                return n
        _, p = lattice_min(v, a.q, norm)
        if norm.compare(off, offset(v, a.q, p)) > 0:
            return n
    return None


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        report = verify_run(args.run, args.budget_q)
    except OSError as exc:
        _err(f"cannot read run: {exc}")
        return EXIT_IO
    except PrecisionError as exc:
        _err(str(exc))
        return EXIT_PRECISION
    try:
        with open(os.path.join(args.run, "verification.json"), "w") as fh:
            json.dump(report, fh, indent=2)
    except OSError as exc:
        _err(f"cannot write report: {exc}")
        return EXIT_IO
    if report["vacuous"]:
        print("vacuous: empty comparable range")
        return EXIT_OK
    if not report["match"]:
        print(f"mismatch at index {report['first_mismatch']}")
        return EXIT_MISMATCH
    print(f"{report['compared']} entries match the oracle, "
          f"{len(report['beyond'])} beyond the budget verified by enumeration")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def fit_report(norm: NormSpec) -> dict[str, Any]:
    try:
        fit, source = preset_fit(norm), "closed form"
    except UnsupportedNormError:
        fit, source = fit_best_ellipse(norm), "numerical"
    lo, hi = sandwich_ratios(norm, fit)

    def iv(x: CReal) -> list[str]:
        return [to_decimal(x.lower(128), 20), to_decimal(x.upper(128), 20)]

    return {"norm": norm.to_json(), "source": source, "a": iv(fit.a), "c": iv(fit.c),
            "D": iv(fit.D), "M": iv(fit.M), "certified": bool(fit.certified),
            "sandwich_min_ratio": lo, "sandwich_max_ratio": hi}


def cmd_fit(args: argparse.Namespace) -> int:
    try:
        norm = _norm_arg(args.norm)
    except OSError as exc:
        _err(f"cannot read norm: {exc}")
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        _err(f"invalid norm: {exc}")
        return EXIT_CONFIG
    print(json.dumps(fit_report(norm), indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrum and flow


def _source(args: argparse.Namespace) -> tuple[tuple[Fraction, Fraction], NormSpec, list[Approx] | None]:
    if args.run:
        summary, records = load_run(args.run)
        return run_vector(summary), NormSpec.from_json(summary["norm"]), run_sequence(summary, records)
    if args.v is None:
        raise ConfigError("give --v or --run")
    return args.v, _norm_arg(args.norm), None


def cmd_spectrum(args: argparse.Namespace) -> int:
    try:
        v, norm, claimed = _source(args)
    except OSError as exc:
        _err(f"cannot read run: {exc}")
        return EXIT_IO
    except (ConfigError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    seq = best_sequence(v, norm, args.q_max)
    if claimed is not None:
        # a run lists its whole sequence; brute force only confirms the prefix
        prefix = [a for a in claimed if a.q <= args.q_max]
        if prefix != seq:
            _err("the run disagrees with brute force below --q-max")
            return EXIT_MISMATCH
        seq = claimed
    M = engine_fit(norm).M
    rows = []
    for n, a in enumerate(seq):
        r2 = norm.square(offset(v, a.q, a.p))
        beta = displacement_norm(norm, v, seq, n) if n + 1 < len(seq) else None
        rows.append((n, a, r2, beta))
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sequence.jsonl"), "w") as fh:
            for n, a, r2, _ in rows:
                r2s = rational_str(r2.exact) if r2.is_exact else [to_decimal(r2.lower(128), 30),
                                                                   to_decimal(r2.upper(128), 30)]
                fh.write(json.dumps({"n": n, "q": str(a.q), "p": [str(a.p[0]), str(a.p[1])],
                                     "r2": r2s}) + "\n")
        with open(os.path.join(args.out, "beta.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "q", "q_next", "beta_lower", "beta_upper"])
            for n, a, _, beta in rows:
                if beta is not None:
                    w.writerow([n, a.q, seq[n + 1].q, to_decimal(beta.lower(128), 20),
                                to_decimal(beta.upper(128), 20)])
        betas = [(n, float(b)) for n, _, _, b in rows if b is not None]
        fig, ax = plt.subplots(figsize=(6, 4))
        if betas:
            ax.plot([n for n, _ in betas], [b for _, b in betas], "o-", label="long displacement")
        ax.axhline(float(M), color="grey", ls="--", label="M")
        ax.set_xlabel("n")
        ax.set_ylabel("length")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "spectrum.png"), dpi=120)
        plt.close(fig)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_IO
    print(f"{len(seq)} best approximations, brute force up to q = {args.q_max}")
    return EXIT_OK


def cmd_flow(args: argparse.Namespace) -> int:
    try:
        v, norm, seq = _source(args)
    except OSError as exc:
        _err(f"cannot read run: {exc}")
        return EXIT_IO
    except (ConfigError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if seq is None:
        seq = best_sequence(v, norm, args.q_max)
    maxima = flow_maxima(v, seq, norm)
    t_max = args.t_max
    if t_max is None:
        last = max((float(m.t) for m in maxima), default=0.0)
        t_max = max(last * 1.05, math.log(seq[-1].q) / 3, 1.0)
    curve = flow_curve(v, seq, norm, t_max, args.points)
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "flow.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lambda1_lower", "lambda1_upper", "witness_q"])
            for pt in curve:
                lo, hi = pt.bounds
                w.writerow([_mp(pt.t), _mp(lo), _mp(hi), pt.witness.q])
        with open(os.path.join(args.out, "maxima.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "t", "lambda1", "q_next", "identity_error", "initial"])
            for m in maxima:
                w.writerow([m.n, _mp(m.t), _mp(m.lambda1), m.q_next,
                            "" if m.initial else f"{m.identity_error:.3e}", int(m.initial)])
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([float(p.t) for p in curve], [float(p.value) for p in curve], lw=1)
        ax.plot([float(m.t) for m in maxima], [float(m.lambda1) for m in maxima], "o",
                label="local maxima")
        ax.set_xlabel("t")
        ax.set_ylabel("first minimum")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "flow.png"), dpi=120)
        plt.close(fig)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_IO
    worst = max((m.identity_error for m in maxima if not m.initial), default=0.0)
    print(f"{len(maxima)} maxima, worst identity error {worst:.2e}")
    return EXIT_OK


def _mp(x) -> str:
    return mpmath.nstr(x, 25)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="longdisp", description=__doc__.splitlines()[0], allow_abbrev=False)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="run the construction for a config")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--selector", type=_int_list, default=None,
                   help="comma-separated skip counts per step")
    c.add_argument("--steps", type=int, default=None)
    c.add_argument("--precision-bits", type=int, default=None)
    c.set_defaults(func=cmd_construct)

    vf = sub.add_parser("verify", help="diff a run against brute force")
    vf.add_argument("--run", required=True)
    vf.add_argument("--budget-q", type=int, default=10 ** 6)
    vf.set_defaults(func=cmd_verify)

    f = sub.add_parser("fit", help="best ellipse fit of a norm")
    f.add_argument("--norm", required=True, help="name, p=<p>, JSON record or file")
    f.set_defaults(func=cmd_fit)

    for name, func, help_ in (("spectrum", cmd_spectrum, "best approximations and displacement lengths"),
                              ("flow", cmd_flow, "first minimum along the diagonal flow")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--v", type=_vec, default=None, help="two rationals, e.g. 1/3,2/7")
        s.add_argument("--run", default=None)
        s.add_argument("--norm", default="euclidean")
        s.add_argument("--q-max", type=int, default=10 ** 4)
        s.add_argument("--out", required=True)
        if name == "flow":
            s.add_argument("--t-max", type=float, default=None)
            s.add_argument("--points", type=int, default=400)
        s.set_defaults(func=func)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return int(args.func(args))
