"""The ten acceptance criteria, one test each, one pass/fail line each."""

from __future__ import annotations

import math
import shutil
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from conftest import load_config, run
from test_norms import as_mpf, table_m

from longdisp.cli import verify_run
from longdisp.dynamics import flow_maxima
from longdisp.engine import GEOMETRIC, PROPERTIES, VERIFIED, State
from longdisp.frame import boundary_diagnostic, boundary_point, cylinder_equal_check, isometry_defect
from longdisp.norms import NormSpec, preset_fit
from longdisp.oracle import (Approx, best_sequence, dirichlet_ratios, offset, opposite_quadrants,
                             random_rationals, same_quadrant)


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def mp(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def test_criterion_1_constants(report):
    t0 = time.perf_counter()
    rows = [(NormSpec.euclidean(), "euclidean", None), (NormSpec.maximum(), "maximum", None)]
    rows += [(NormSpec.p_norm(p), "p", Fraction(p)) for p in ("1", "3/2", "3", "4", "10")]
    errs = [abs(as_mpf(preset_fit(norm).M) - table_m(kind, p)) for norm, kind, p in rows]
    euclid = table_m("euclidean")
    at2 = abs(as_mpf(preset_fit(NormSpec.p_norm(2)).M) - euclid)
    with mpmath.workdps(40):
        hi_row = mpmath.mpf(8) ** (mpmath.mpf(1) / 4) * 6 ** mpmath.mpf(-0.25)
        lo_row = mpmath.sqrt(2) * 3 ** mpmath.mpf(-0.25)
        at2 = max(at2, abs(hi_row - euclid), abs(lo_row - euclid))
        closed = abs(euclid - (mpmath.mpf(4) / 3) ** (mpmath.mpf(1) / 4))
    secs = time.perf_counter() - t0
    worst = float(max(errs + [at2]))
    ok = worst < 1e-12 and closed < 1e-30 and secs < 1
    report(1, ok, f"max closed-form error {worst:.1e}, p=2 agreement {float(at2):.1e}, {secs:.2f} s")


def test_criterion_2_frame_identities(frames, report):
    rng = np.random.default_rng(2)
    qlh = iso = 0.0
    for _, _, f in frames:
        qlh = max(qlh, float(abs(f.q * f.L * f.H - 1).upper(128)))
        for _ in range(10):
            s = [Fraction(int(x), 1 + int(y)) for x, y in zip(rng.integers(-99, 99, 2), rng.integers(0, 50, 2))]
            t = [Fraction(int(x), 1 + int(y)) for x, y in zip(rng.integers(-99, 99, 2), rng.integers(0, 50, 2))]
            iso = max(iso, abs(float(isometry_defect(f, s, t))))
    diag = max(abs(float(boundary_diagnostic(D2, 1, 1))) for D2 in (Fraction(4, 3), 2, 1))
    ok = len(frames) >= 20 and qlh < 1e-20 and iso < 1e-15 and diag < 1e-12
    report(2, ok, f"{len(frames)} frames, qLH error {qlh:.1e}, isometry {iso:.1e}, diagnostic {diag:.1e}")


def test_criterion_3_equal_cylinders(frames, report):
    t0 = time.perf_counter()
    worst_vol, bad = 0.0, 0
    for _, _, f in frames[::5]:
        bx, by = boundary_point(f)
        rep = cylinder_equal_check(f, float(bx) / 2, float(by) / 2, probes=1000)
        bad += rep["disagreements"]
        worst_vol = max(worst_vol, rep["volume_rel_error"])
    secs = time.perf_counter() - t0
    ok = bad == 0 and worst_vol <= 0.05 and secs < 30
    report(3, ok, f"{bad} disagreements, worst volume error {worst_vol:.2%}, {secs:.1f} s")


def test_criterion_4_euclidean_run(euclid, tmp_path, report):
    engine, result, out = euclid
    st = result.state
    exact = all(all(rec.status[k] == VERIFIED for k in PROPERTIES[:-1])
                and rec.status["cylinders"] in (VERIFIED, GEOMETRIC) for rec in st.records)
    run_dir = tmp_path / "run"
    shutil.copytree(out, run_dir)
    budget = min(10 ** 6, st.q(4))
    rep = verify_run(str(run_dir), budget)
    ok = result.steps >= 5 and result.seconds < 600 and exact and rep["match"] and not rep["vacuous"]
    report(4, ok, f"{result.steps} steps in {result.seconds:.1f} s, verify budget {budget}: "
                  f"{rep['compared']} compared, {len(rep['beyond'])} beyond by enumeration, "
                  f"match {rep['match']}")


def test_criterion_5_congruences(congruence, report):
    engine, result, _ = congruence
    st = result.state
    ok_each = [st.q(n) % 5 == engine.config.residues[n - 1] for n in range(1, st.n + 1)]
    ok = result.steps == 5 and all(ok_each)
    report(5, ok, f"{sum(ok_each)}/{len(ok_each)} residues q_n = z_n mod 5")


def test_criterion_6_directions(euclid, maximum, report):
    checked, ok = 0, True
    for engine, result, _ in (euclid, maximum):
        st = result.state
        for n in range(1, st.n + 1):
            sub = State(st.ws[: n + 3])
            psis = [sub.psi(n, j) for j in range(1, n + 1)]
            ok &= all(engine.sector.contains(u) for u in psis)
            ok &= all(opposite_quadrants(a, b) for a, b in zip(psis, psis[1:]))
            checked += len(psis)
    report(6, bool(ok), f"{checked} displacements under both norms")


def test_criterion_7_near_supremum(report):
    engine, result = run(load_config("near_supremum"))
    ok = result.steps >= 3 and result.code == 0 and result.seconds < 900
    report(7, ok, f"{result.steps} steps in {result.seconds:.1f} s for I = [0.95 M, 0.999 M]")


def test_criterion_8_branching(tmp_path, report):
    runs = []
    for sel in ([0], [1]):
        out = tmp_path / f"sel{sel[0]}"
        _, result = run(load_config("euclidean_demo", steps=3, selector=sel), out)
        rep = verify_run(str(out), 10 ** 6)
        runs.append((result, rep))
    (a, ra), (b, rb) = runs
    ok = a.state.w(1) != b.state.w(1) and ra["match"] and rb["match"]
    report(8, ok, f"w_1 differs: {a.state.w(1) != b.state.w(1)}, both verify: {ra['match'] and rb['match']}")


def test_criterion_9_dynamics(euclid, rising, report):
    engine, result, _ = euclid
    st = result.state
    seq = [Approx(st.q(j), st.p(j)) for j in range(st.n + 1)]
    maxima = [m for m in flow_maxima(st.v(st.n), seq, engine.norm) if not m.initial]
    worst = max(m.identity_error for m in maxima)
    engine, result = rising
    st = result.state
    seq = [Approx(st.q(j), st.p(j)) for j in range(st.n + 1)]
    plan = engine.config.intervals
    inside = []
    for m in flow_maxima(st.v(st.n), seq, engine.norm):
        if m.initial:
            continue
        lo, hi = plan.lambda_interval(m.n)
        inside.append(mp(lo) <= m.lambda1 <= mp(hi))
    ok = worst <= 1e-9 and len(inside) == result.steps and all(inside)
    report(9, ok, f"identity error {worst:.1e}, rising maxima inside {sum(inside)}/{len(inside)}")


def test_criterion_10_oracle_self_test(report):
    rng = np.random.default_rng(10)
    gamma = (4 / 3) ** 0.25
    euclid = NormSpec.euclidean()
    worst = 0.0
    for v in random_rationals(rng, 20, 30):
        seq = best_sequence(v, euclid, 10 ** 4)
        worst = max([worst] + [float(r.upper(64)) for r in dirichlet_ratios(v, seq, euclid)])
    maxn = NormSpec.maximum()
    pairs = same = 0
    for v in random_rationals(rng, 10, 30):
        seq = best_sequence(v, maxn, 10 ** 4)
        offs = [offset(v, a.q, a.p) for a in seq]
        pairs += len(offs) - 1
        same += sum(same_quadrant(a, b) for a, b in zip(offs, offs[1:]))
    ok = worst <= gamma * (1 + 1e-9) and same == 0
    report(10, ok, f"max ratio {worst:.6f} <= {gamma:.6f}; {same}/{pairs} consecutive pairs share a quadrant")
