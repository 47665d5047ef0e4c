"""Acceptance criteria, each at its stated tolerance.

Every criterion records one PASS/FAIL line; the lines are printed as they
are produced and again in the terminal summary.  Preset runs are compared
with the CSVs recorded under ``tests/fixtures``; regenerate them with
``python tests/test_acceptance.py --record``.
"""
import functools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from openqubits.heom import BathSpec, HeomDivergenceError, heom_propagate
from openqubits.harness.config import replace_config
from openqubits.harness.output import point_filename, read_csv, write_sweep
from openqubits.harness.presets import figure_preset
from openqubits.harness.runner import run_experiment, run_sweep
from openqubits.harness.validate import heom_pseudomode_deviation, rwa_deviation
from openqubits.measures import (
    chsh_max,
    chsh_seesaw,
    concurrence,
    pi_tangle,
    svetlichny_grid,
    svetlichny_max,
)
from openqubits.qstate import build_state, ket2dm, kron, random_density_matrix, random_pure_state, trace_distance

FIXTURES = Path(__file__).parent / "fixtures"
RESULTS: dict[str, str] = {}

# presets exercised by criterion 6; variants keep the runs to what the criterion reads
PRESET_RUNS = [("fig1a", None), ("fig1b", None), ("fig2", "rwa"), ("fig4b", None), ("fig5", None), ("fig6", None)]

pytestmark = pytest.mark.slow


def record(key: str, passed: bool, detail: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'}  criterion {key}: {detail}"
    RESULTS[key] = line
    print(line, flush=True)
    return passed


def check(key, passed, detail):
    assert record(key, passed, detail), detail


@functools.cache
def preset_points(name, variant=None):
    start = time.perf_counter()
    points = run_sweep(figure_preset(name, variant))
    return points, time.perf_counter() - start


def point(name, variant=None, **params):
    points, _ = preset_points(name, variant)
    for p in points:
        if all(dict(p.params).get(k) == v for k, v in params.items()):
            return p
    raise KeyError(params)


def refined_maxima(t, f):
    """Local maxima of a sampled curve, refined by the parabola through the three bracketing samples."""
    i = np.where((f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:]))[0] + 1
    a, b, c = f[i - 1], f[i], f[i + 1]
    curv = a - 2 * b + c
    shift = 0.5 * (a - c) / curv
    h = t[1] - t[0]
    return t[i] + shift * h, b - 0.25 * (a - c) * shift


# --- 1 ----------------------------------------------------------------------

def test_criterion_1_rwa_consistency():
    start = time.perf_counter()
    dev = rwa_deviation(BathSpec(0.1, 0.05, 1.0, (1, 1, 0.5)), np.full(3, 1 / np.sqrt(3)), 100.0, 2000)
    sec = time.perf_counter() - start
    check("1", dev <= 1e-6 and sec < 5, f"max |dc| = {dev:.2e} (tol 1e-6), {sec:.2f} s (budget 5 s)")


# --- 2 ----------------------------------------------------------------------

@pytest.mark.parametrize("key, initial, alphas", [("2a", "e", (1,)), ("2b", "W", (1, 1, 1))])
def test_criterion_2_heom_vs_pseudomode(key, initial, alphas):
    start = time.perf_counter()
    try:
        dev = heom_pseudomode_deviation(BathSpec(0.1, 0.05, 1.0, alphas), initial, 60.0, depth=12, dt=0.005)
        detail = f"max deviation {dev:.2e} (tol 5e-3)"
    except HeomDivergenceError as exc:
        dev, detail = np.inf, f"HEOM diverged: {exc}"
    sec = time.perf_counter() - start
    check(key, dev <= 5e-3 and sec < 300, f"{initial}, lambda 0.1, gamma 0.05: {detail}, {sec:.0f} s")


# --- 3 ----------------------------------------------------------------------

def _conservation_runs():
    strong = figure_preset("fig1", "rwa").base.with_values({"bath.gamma": 0.05, "measures": ("pi_tangle",)})
    ultra = figure_preset("fig4a").base
    yield "rwa-closed strong W", strong
    yield "rwa-oracle strong W", replace_config(strong, solver="rwa-oracle")
    yield "pseudomode strong W", replace_config(strong, solver="pseudomode")
    yield "pseudomode ultrastrong W", replace_config(ultra, solver="pseudomode")
    yield "heom strong |e>", strong.with_values({"solver": "heom", "initial": "e", "bath.alphas": (1.0,),
                                                "measures": ("population(e)",)})
    yield "heom ultrastrong W", replace_config(ultra, solver="heom")
    yield "heom ultrastrong W, alphas (1,1,0.5)", figure_preset("fig5", "heom").base.with_values(
        {"measures": ("pi_tangle",)})
    yield "heom |ggg>, lambda 0.01", figure_preset("fig6").base.with_values({"bath.lambda": 0.01})


def test_criterion_3_conservation():
    bad = []
    for label, cfg in _conservation_runs():
        d = run_experiment(cfg).diagnostics
        ok = d["max_trace_error"] <= 1e-8 and d["max_hermiticity_defect"] <= 1e-10 and d["min_eigenvalue"] >= -1e-6
        print(f"    {'ok  ' if ok else 'FAIL'} {label}: trace {d['max_trace_error']:.1e}, "
              f"hermiticity {d['max_hermiticity_defect']:.1e}, min eig {d['min_eigenvalue']:.2e}", flush=True)
        if not ok:
            bad.append(f"{label} (min eig {d['min_eigenvalue']:.1e})")
    check("3", not bad, "all runs within trace 1e-8, hermiticity 1e-10, min eig -1e-6"
          if not bad else "violated by " + "; ".join(bad))


# --- 4 ----------------------------------------------------------------------

def test_criterion_4_fixed_points(phi_plus, ghz_state, w_state):
    rng = np.random.default_rng(4)
    errs = {
        "concurrence(phi+)": (abs(concurrence(phi_plus) - 1), 1e-10),
        "chsh(phi+)": (abs(chsh_max(phi_plus) - 2 * np.sqrt(2)), 1e-9),
        "pi_tangle(GHZ)": (abs(pi_tangle(ghz_state).pi_abc - 1), 1e-8),
        "pi_tangle(W)": (abs(pi_tangle(w_state).pi_abc - 4 * (np.sqrt(5) - 1) / 9), 1e-8),
        "svetlichny(GHZ)": (abs(svetlichny_max(ghz_state, seed=0).value - 4 * np.sqrt(2)), 1e-4),
    }
    worst_product = max(
        svetlichny_max(ket2dm(kron(*(random_pure_state(2, rng) for _ in range(3)))), seed=i).value
        for i in range(50))
    errs["svetlichny(products) - 4"] = (worst_product - 4, 1e-6)
    failed = [k for k, (e, tol) in errs.items() if not e <= tol]
    detail = ", ".join(f"{k} {e:.1e}" for k, (e, _) in errs.items())
    check("4", not failed, detail if not failed else f"out of tolerance: {failed}; {detail}")


# --- 5 ----------------------------------------------------------------------

def test_criterion_5_optimizer_soundness():
    rng = np.random.default_rng(5)
    gap, excess, chsh_gap = -np.inf, -np.inf, 0.0
    for i in range(100):
        rho = ket2dm(random_pure_state(8, rng)) if i % 2 else random_density_matrix(8, rng, rank=2)
        s = svetlichny_max(rho, seed=i).value
        gap = max(gap, svetlichny_grid(rho, 16) - s)
        excess = max(excess, s - 4 * np.sqrt(2))
        rho2 = random_density_matrix(4, rng, rank=1 + i % 4)
        chsh_gap = max(chsh_gap, abs(chsh_max(rho2) - chsh_seesaw(rho2, seed=i)))
    ok = gap <= 1e-3 and excess <= 0 and chsh_gap <= 1e-6
    check("5", ok, f"grid - seesaw <= {gap:.1e} (tol 1e-3), seesaw - 4*sqrt2 <= {excess:.2f}, "
                   f"|chsh closed form - seesaw| <= {chsh_gap:.1e} (tol 1e-6)")


# --- 6 ----------------------------------------------------------------------

def test_criterion_6a_periodic_rwa():
    p = point("fig1a", **{"bath.gamma": 0.0})
    t, f = p.series.times, p.series.columns["pi_tangle"]
    tm, fm = refined_maxima(t, f)
    period = tm[1] - tm[0]
    window = fm[tm <= tm[0] + 3 * period + 1e-9]
    spread = np.max(np.abs(np.diff(window)))
    over_all = np.max(np.abs(np.diff(fm)))
    check("6a", spread < 1e-3 and len(window) >= 4,
          f"successive maxima over three periods differ by <= {spread:.1e} (tol 1e-3); all {len(fm)} maxima: {over_all:.1e}")


def _first_revival_peak(series):
    f = series.columns["pi_tangle"]
    i0 = np.argmax(np.diff(f) > 0)                 # first local minimum
    rising = np.diff(f[i0:]) > 0
    i1 = i0 + np.argmax(~rising)                   # first maximum after it
    return series.times[i1], f[i1]


def test_criterion_6b_nonrwa_revival_lower():
    rwa = point("fig1a", **{"bath.gamma": 0.05})
    heom = point("fig1b", **{"bath.gamma": 0.05})
    if not heom.ok:
        check("6b", False, f"non-RWA run failed: {heom.error}")
    tr, fr = _first_revival_peak(rwa.series)
    th, fh = _first_revival_peak(heom.series)
    check("6b", fh < fr, f"first revival peak heom {fh:.4f} (t={th:.1f}) vs rwa {fr:.4f} (t={tr:.1f})")


def test_criterion_6c_fig2_rwa():
    s = point("fig2", "rwa", **{"bath.alpha3": 0.5}).series
    ab = [iv for iv in s.violation_intervals("chsh(ab)") if iv[1] > 0]
    ac = s.violation_intervals("chsh(ac)")
    check("6c", bool(ab) and not ac,
          f"chsh(ab) max {s.columns['chsh(ab)'].max():.4f}, intervals {[(round(a, 2), round(b, 2)) for a, b in ab]}; "
          f"chsh(ac) max {s.columns['chsh(ac)'].max():.4f}")


def test_criterion_6d_fig4b_revival():
    vals = {}
    for solver in ("rwa-closed", "heom"):
        p = point("fig4b", solver=solver)
        if not p.ok:
            check("6d", False, f"{solver} run failed: {p.error}")
        first_end = p.series.violation_intervals("svetlichny")[0][1]
        vals[solver] = p.series.columns["svetlichny"][p.series.times > first_end].max()
    check("6d", vals["heom"] > vals["rwa-closed"],
          f"Svetlichny revival max heom {vals['heom']:.4f} vs rwa {vals['rwa-closed']:.4f}")


def test_criterion_6e_fig5_alternation():
    parts, ok = [], True
    for solver in ("rwa-closed", "heom"):
        p = point("fig5", solver=solver)
        if not p.ok:
            check("6e", False, f"{solver} run failed: {p.error}")
        s = p.series
        both = (s.columns["svetlichny"] - 4 > 1e-3) & (s.columns["chsh(ab)"] - 2 > 1e-3)
        ok &= not both.any()
        where = f" at t in [{s.times[both].min():.1f}, {s.times[both].max():.1f}]" if both.any() else ""
        parts.append(f"{solver}: {both.sum()} samples with both violated{where}")
    check("6e", ok, "; ".join(parts))


def test_criterion_6f_fig6_ground_state():
    parts, ok = [], True
    for lam in (0.1, 0.01):
        p = point("fig6", **{"bath.lambda": lam})
        if not p.ok:
            ok = False
            parts.append(f"lambda {lam}: run failed ({p.error.split(': ', 1)[-1]})")
            continue
        c, pt = p.series.columns["concurrence(ab)"].max(), p.series.columns["pi_tangle"].max()
        ok &= c > 0.01 and pt < 0.02
        parts.append(f"lambda {lam}: max concurrence {c:.4f} (> 0.01), max pi_tangle {pt:.2e} (< 0.02)")
    check("6f", ok, "; ".join(parts))


@pytest.mark.parametrize("name, variant", PRESET_RUNS)
def test_criterion_6_presets_match_fixtures(name, variant):
    points, seconds = preset_points(name, variant)
    stem = figure_preset(name, variant).base.name
    worst, missing = 0.0, []
    for p in points:
        path = FIXTURES / stem / point_filename(stem, p.params)
        if not p.ok:
            if path.exists():
                missing.append(f"{path.name} (run failed)")
            continue
        if not path.exists():
            missing.append(f"{path.name} (no fixture)")
            continue
        fp, header, rows = read_csv(path)
        rows = np.array(rows)
        assert fp == p.config.fingerprint() and header == p.series.names
        for j, m in enumerate(p.series.columns, start=1):
            worst = max(worst, np.max(np.abs(rows[:, j] - p.series.columns[m])))
    failed = sum(not p.ok for p in points)
    ok = not missing and worst <= 1e-6 and seconds < 600
    check(f"6-{stem}", ok, f"{len(points)} points ({failed} failed, not recorded) in {seconds:.0f} s (budget 600 s), "
                           f"max deviation from fixtures {worst:.1e}" + (f", missing {missing}" if missing else ""))


# --- 7 ----------------------------------------------------------------------

def test_criterion_7_truncation_convergence():
    base = figure_preset("fig1", "heom").base
    parts, ok = [], True
    for gamma in (0.0, 0.05, 0.1):
        bath = BathSpec(base.lam, gamma, base.omega0, base.alphas)
        runs = {}
        for depth in (6, 8, 10, 12, 14):
            try:
                runs[depth] = heom_propagate(ket2dm(build_state("W")), bath, base.t_final, base.samples,
                                             depth=depth, dt=base.dt).states
            except HeomDivergenceError as exc:
                runs[depth] = str(exc).split(";")[0]
        dist = []
        for depth in (6, 8, 10, 12):
            a, b = runs[depth], runs[depth + 2]
            dist.append(np.inf if isinstance(a, str) or isinstance(b, str)
                        else max(trace_distance(x, y) for x, y in zip(a, b)))
        monotone = all(b < a for a, b in zip(dist, dist[1:]))
        ok &= monotone and dist[-1] < 1e-4
        diverged = [f"L={d}" for d, r in runs.items() if isinstance(r, str)]
        parts.append(f"gamma {gamma}: distances {['%.1e' % d for d in dist]}"
                     + (f", diverged at {', '.join(diverged)}" if diverged else ""))
    check("7", ok, "; ".join(parts))


def record_fixtures():
    for name, variant in PRESET_RUNS:
        points, seconds = preset_points(name, variant)
        stem = figure_preset(name, variant).base.name
        out = FIXTURES / stem
        for old in out.glob("*.csv"):
            old.unlink()
        for path in write_sweep(points, out, stem):
            print(f"recorded {path.relative_to(FIXTURES.parent)}")
        print(f"{stem}: {seconds:.0f} s")


if __name__ == "__main__":
    if "--record" in sys.argv:
        record_fixtures()
    else:
        sys.exit(pytest.main([__file__, "-q", "-s"]))
