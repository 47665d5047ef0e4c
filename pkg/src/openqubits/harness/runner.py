"""Solver dispatch, measures along trajectories and parallel sweeps."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..heom import HeomDivergenceError, heom_propagate, time_grid
from ..measures import (
    CHSH_LOCAL_BOUND,
    CUT_LABELS,
    SVETLICHNY_LOCAL_BOUND,
    chsh_max,
    concurrence,
    negativity,
    pair_marginal,
    pi_tangle,
    svetlichny_max,
)
from ..pseudomode import propagate_converged
from ..qstate import basis_index, hermitize, ket2dm
from ..rwa import amplitudes_closed, amplitudes_from_state, amplitudes_oracle, density_matrix_from_amplitudes
from .config import ExperimentConfig, SweepSpec

log = logging.getLogger(__name__)

VIOLATION_MARGIN = 1e-6
_THRESHOLDS = {"chsh": CHSH_LOCAL_BOUND, "svetlichny": SVETLICHNY_LOCAL_BOUND}


class SolverError(RuntimeError):
    """A propagation failed; the message names the run and solver."""


@dataclass
class TimeSeries:
    times: np.ndarray
    columns: dict
    config: ExperimentConfig
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time column must be strictly increasing")
        if list(self.columns) != list(self.config.measures):
            raise ValueError("columns do not match the requested measures")

    @property
    def names(self) -> list[str]:
        return ["t", *self.columns]

    def violation_intervals(self, measure: str, margin: float = VIOLATION_MARGIN) -> list[tuple[float, float]]:
        threshold = violation_threshold(measure)
        if threshold is None:
            raise ValueError(f"{measure!r} has no classical bound")
        return violation_intervals(self.times, self.columns[measure], threshold, margin)


def violation_threshold(measure: str) -> float | None:
    return _THRESHOLDS.get(measure.split("(", 1)[0])


def violation_intervals(times, values, threshold: float,
                        margin: float = VIOLATION_MARGIN) -> list[tuple[float, float]]:
    """Time intervals where ``values`` exceed ``threshold + margin``.

    Interval ends are placed by linear interpolation between the bracketing
    samples; an interval that is open at either end of the grid is clipped
    to the grid.
    """
    t = np.asarray(times, dtype=float)
    f = np.asarray(values, dtype=float) - (threshold + margin)
    above = f > 0
    out = []
    start = t[0] if above[0] else None
    for i in range(1, t.size):
        if above[i] == above[i - 1]:
            continue
        tc = t[i - 1] + (t[i] - t[i - 1]) * f[i - 1] / (f[i - 1] - f[i])
        if above[i]:
            start = tc
        else:
            out.append((float(start), float(tc)))
            start = None
    if start is not None:
        out.append((float(start), float(t[-1])))
    return out


def solve(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, dict]:
    """Run the configured solver; returns sample times, raw states and diagnostics."""
    psi0 = cfg.initial_state()
    bath = cfg.bath
    diag: dict = {}
    if cfg.solver == "heom":
        res = heom_propagate(ket2dm(psi0), bath, cfg.t_final, cfg.samples,
                             depth=cfg.resolved_depth, dt=cfg.dt)
        diag["depth"] = res.depth
        return res.times, res.states, diag
    if cfg.solver == "pseudomode":
        res = propagate_converged(ket2dm(psi0), bath, cfg.t_final, cfg.samples, cfg.dt,
                                  fock_dim=cfg.fock_dim, max_fock=cfg.fock_max)
        diag.update(fock_dim=res.fock_dim, leakage=res.leakage)
        if res.leaked:
            log.warning("%s: pseudomode leakage %.2e persists at fock_dim=%d", cfg.name, res.leakage, res.fock_dim)
        return res.times, res.states, diag
    times = time_grid(cfg.t_final, cfg.samples)
    c0 = amplitudes_from_state(psi0)
    if cfg.solver == "rwa-closed":
        amps = amplitudes_closed(times, c0, bath)
    else:
        amps = amplitudes_oracle(c0, bath, times, max_step=cfg.dt)
    states = np.array([density_matrix_from_amplitudes(c) for c in amps])
    return times, states, diag


def state_diagnostics(states: np.ndarray) -> dict:
    traces = np.trace(states, axis1=1, axis2=2)
    herm = states - states.conj().swapaxes(1, 2)
    min_eig = min(float(np.linalg.eigvalsh(hermitize(s))[0]) for s in states)
    return {
        "max_trace_error": float(np.max(np.abs(traces - 1))),
        "max_hermiticity_defect": float(np.max(np.abs(herm))),
        "min_eigenvalue": min_eig,
    }


def evaluate_measures(states: np.ndarray, cfg: ExperimentConfig) -> dict:
    """Each requested measure at every sample, on hermitized states."""
    rhos = [hermitize(s) for s in states]
    n = cfg.n_qubits
    cols = {}
    for m in cfg.measures:
        if m.startswith("population("):
            idx = basis_index(m[len("population("):-1])
            cols[m] = np.array([r[idx, idx].real for r in rhos])
        elif m.startswith(("concurrence(", "chsh(")):
            fn = concurrence if m.startswith("concurrence(") else chsh_max
            pair = m[m.index("(") + 1:-1]
            cols[m] = np.array([fn(r if n == 2 else pair_marginal(r, pair)) for r in rhos])
        elif m.startswith("negativity("):
            cut = CUT_LABELS[m[len("negativity("):-1]]
            cols[m] = np.array([negativity(r, cut, (2, 2, 2)) for r in rhos])
        elif m == "pi_tangle":
            cols[m] = np.array([pi_tangle(r).pi_abc for r in rhos])
        elif m == "svetlichny":
            cols[m], capped = svetlichny_trajectory(rhos, cfg)
            if capped:
                log.info("%s: see-saw hit the sweep cap at %d samples", cfg.name, capped)
        else:  # guarded by config validation
            raise ValueError(f"unknown measure {m!r}")
    return cols


def svetlichny_trajectory(rhos, cfg: ExperimentConfig) -> tuple[np.ndarray, int]:
    """Maximal Svetlichny value per sample, warm-started from the previous optimum.

    Also returns how many samples stopped at the sweep cap.
    """
    out = np.empty(len(rhos))
    capped = 0
    prev = ()
    for i, rho in enumerate(rhos):
        restarts = cfg.restarts if not prev else cfg.warm_restarts
        res = svetlichny_max(rho, restarts=restarts, tol=cfg.seesaw_tol, max_sweeps=cfg.max_sweeps,
                             seed=np.random.SeedSequence([cfg.seed, i]), warm_start=prev)
        out[i] = res.value
        capped += not res.converged
        prev = (res.frame,)
    return out, capped


def run_experiment(cfg: ExperimentConfig) -> TimeSeries:
    """Propagate and evaluate every requested measure at every sample."""
    try:
        times, states, diag = solve(cfg)
    except (HeomDivergenceError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"run {cfg.name!r} ({cfg.solver}) failed: {exc}") from exc
    diag.update(state_diagnostics(states))
    if diag["min_eigenvalue"] < -1e-6:
        log.warning("%s: state has eigenvalue %.3g; the %s run is not physical at this truncation",
                    cfg.name, diag["min_eigenvalue"], cfg.solver)
    return TimeSeries(times, evaluate_measures(states, cfg), cfg, diag)


@dataclass
class SweepPoint:
    params: tuple
    config: ExperimentConfig
    series: TimeSeries | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_point(cfg: ExperimentConfig):
    try:
        return run_experiment(cfg), None
    except SolverError as exc:
        return None, str(exc)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepPoint]:
    """Execute every sweep point; failures are recorded per point.

    Output order follows :meth:`SweepSpec.points` whatever the completion
    order, and each point is computed independently, so results do not
    depend on the worker count.
    """
    workers = spec.workers if workers is None else workers
    points = spec.points()
    configs = [cfg for _, cfg in points]
    if workers <= 1 or len(points) == 1:
        results = [_run_point(cfg) for cfg in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            results = list(pool.map(_run_point, configs))
    out = []
    for (params, cfg), (series, err) in zip(points, results):
        if err is not None:
            log.error("sweep point %s failed: %s", dict(params), err)
        out.append(SweepPoint(params, cfg, series, err))
    return out
