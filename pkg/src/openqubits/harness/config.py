"""Experiment configuration: a flat ``key = value`` text format with dotted keys.

Example::

    # three qubits in W, non-RWA
    solver = heom
    initial = W
    bath.lambda = 0.1
    bath.gamma = 0.05
    bath.alphas = [1, 1, 1]
    time.t_final = 60
    measures = [pi_tangle, concurrence(ab), svetlichny]
    sweep.bath.alpha3 = [0, 0.5, 1]

Any ``sweep.<key>`` line turns the file into a sweep over the Cartesian
product of the listed values.
"""
from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from ..heom import DEFAULT_DEPTH, DEFAULT_DT, BathSpec
from ..measures import CUT_LABELS, PAIR_LABELS
from ..qstate import build_state
from ..rwa import amplitudes_from_state

SOLVERS = ("heom", "rwa-closed", "rwa-oracle", "pseudomode")
RWA_SOLVERS = ("rwa-closed", "rwa-oracle")

_MEASURE_RE = re.compile(
    r"^(?:(?P<pairop>concurrence|chsh)\((?P<pair>[a-z]{2})\)"
    r"|negativity\((?P<cut>[a-z]\|[a-z]{2})\)"
    r"|population\((?P<label>[eg]+)\)"
    r"|(?P<bare>pi_tangle|svetlichny))$"
)


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key and line when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        super().__init__(": ".join(where + [message]))


# key -> (kind, default); a default of ``...`` marks a required key
_KEYS: dict[str, tuple[str, Any]] = {
    "solver": ("str", ...),
    "initial": ("state", ...),
    "n_qubits": ("int", None),
    "name": ("str", "run"),
    "seed": ("int", 0),
    "measures": ("strs", ...),
    "bath.lambda": ("float", ...),
    "bath.gamma": ("float", ...),
    "bath.omega0": ("float", 1.0),
    "bath.alphas": ("floats", (1.0, 1.0, 1.0)),
    "bath.alpha1": ("float", None),
    "bath.alpha2": ("float", None),
    "bath.alpha3": ("float", None),
    "time.t_final": ("float", ...),
    "time.samples": ("int", 601),
    "solver.L": ("int", None),
    "solver.dt": ("float", DEFAULT_DT),
    "solver.fock_dim": ("int", 10),
    "solver.fock_max": ("int", 60),
    "svetlichny.restarts": ("int", 32),
    "svetlichny.warm_restarts": ("int", 8),
    "svetlichny.tol": ("float", 1e-9),
    "svetlichny.max_sweeps": ("int", 500),
}
_NOT_SWEEPABLE = {"measures", "name", "n_qubits"}


def _split_list(raw: str, key: str, line: int | None) -> list[str]:
    raw = raw.strip()
    if not (raw.startswith("[") and raw.endswith("]")):
        raise ConfigError(f"expected a bracketed list, got {raw!r}", key, line)
    body = raw[1:-1].strip()
    if not body:
        return []
    return [item.strip() for item in body.split(",")]


def _convert(kind: str, raw: str, key: str, line: int | None):
    def number(text, typ):
        try:
            if typ is int:
                value = float(text)
                if not value.is_integer():
                    raise ValueError
                return int(value)
            return float(text)
        except ValueError:
            raise ConfigError(f"malformed number {text!r}", key, line) from None

    if kind == "float":
        return number(raw, float)
    if kind == "int":
        return number(raw, int)
    if kind == "str":
        if not raw:
            raise ConfigError("empty value", key, line)
        return raw
    if kind == "floats":
        return tuple(number(x, float) for x in _split_list(raw, key, line))
    if kind == "strs":
        return tuple(_split_list(raw, key, line))
    if kind == "state":
        if raw.startswith("["):
            try:
                return tuple(complex(x.replace(" ", "")) for x in _split_list(raw, key, line))
            except ValueError:
                raise ConfigError(f"malformed amplitude list {raw!r}", key, line) from None
        return raw
    raise AssertionError(kind)


def _format(value) -> str:
    if isinstance(value, tuple):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    if isinstance(value, complex):
        return repr(value).replace(" ", "")
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully validated experiment.

    ``depth`` is None unless set explicitly; the solver then uses the
    package default.  A zero-width bath under the HEOM solver insists on an
    explicit depth.
    """

    solver: str
    initial: str | tuple
    lam: float
    gamma: float
    t_final: float
    measures: tuple
    omega0: float = 1.0
    alphas: tuple = (1.0, 1.0, 1.0)
    samples: int = 601
    depth: int | None = None
    dt: float = DEFAULT_DT
    fock_dim: int = 10
    fock_max: int = 60
    restarts: int = 32
    warm_restarts: int = 8
    seesaw_tol: float = 1e-9
    max_sweeps: int = 500
    seed: int = 0
    name: str = "run"
    _lines: Mapping[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        _validate(self)

    @property
    def n_qubits(self) -> int:
        return len(self.alphas)

    @property
    def bath(self) -> BathSpec:
        return BathSpec(self.lam, self.gamma, self.omega0, self.alphas)

    @property
    def resolved_depth(self) -> int:
        return DEFAULT_DEPTH if self.depth is None else self.depth

    def initial_state(self) -> np.ndarray:
        return build_state(self.initial if isinstance(self.initial, str) else list(self.initial),
                           self.n_qubits)

    def to_mapping(self) -> dict[str, Any]:
        m = {
            "solver": self.solver, "initial": self.initial, "n_qubits": self.n_qubits,
            "name": self.name, "seed": self.seed, "measures": self.measures,
            "bath.lambda": self.lam, "bath.gamma": self.gamma, "bath.omega0": self.omega0,
            "bath.alphas": self.alphas, "time.t_final": self.t_final, "time.samples": self.samples,
            "solver.dt": self.dt, "solver.fock_dim": self.fock_dim, "solver.fock_max": self.fock_max,
            "svetlichny.restarts": self.restarts, "svetlichny.warm_restarts": self.warm_restarts,
            "svetlichny.tol": self.seesaw_tol, "svetlichny.max_sweeps": self.max_sweeps,
        }
        if self.depth is not None:
            m["solver.L"] = self.depth
        return m

    def canonical_text(self) -> str:
        """Sorted ``key = value`` lines; parses back to an equal config."""
        return "".join(f"{k} = {_format(v)}\n" for k, v in sorted(self.to_mapping().items()))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    def with_values(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        m = self.to_mapping()
        if "bath.alphas" in overrides and "n_qubits" not in overrides:
            del m["n_qubits"]   # follows the new couplings
        m.update(overrides)
        return config_from_mapping(m)


_FIELD_FOR_KEY = {
    "solver": "solver", "initial": "initial", "name": "name", "seed": "seed", "measures": "measures",
    "bath.lambda": "lam", "bath.gamma": "gamma", "bath.omega0": "omega0", "bath.alphas": "alphas",
    "time.t_final": "t_final", "time.samples": "samples", "solver.L": "depth", "solver.dt": "dt",
    "solver.fock_dim": "fock_dim", "solver.fock_max": "fock_max",
    "svetlichny.restarts": "restarts", "svetlichny.warm_restarts": "warm_restarts",
    "svetlichny.tol": "seesaw_tol", "svetlichny.max_sweeps": "max_sweeps",
}
_KEY_FOR_FIELD = {v: k for k, v in _FIELD_FOR_KEY.items()}


def config_from_mapping(values: Mapping[str, Any], lines: Mapping[str, int] | None = None) -> ExperimentConfig:
    """Build a config from already-typed values keyed by config-file key."""
    lines = dict(lines or {})
    for key in values:
        if key not in _KEYS:
            raise ConfigError("unknown key", key, lines.get(key))
    for key, (_, default) in _KEYS.items():
        if default is ... and key not in values:
            raise ConfigError("missing required key", key)
    alphas = list(values.get("bath.alphas", _KEYS["bath.alphas"][1]))
    for i in range(3):
        key = f"bath.alpha{i + 1}"
        if values.get(key) is not None:
            if i >= len(alphas):
                raise ConfigError(f"register has only {len(alphas)} qubits", key, lines.get(key))
            alphas[i] = float(values[key])
    n = values.get("n_qubits")
    if n is not None and n != len(alphas):
        raise ConfigError(f"{len(alphas)} couplings given for n_qubits = {n}", "bath.alphas",
                          lines.get("bath.alphas", lines.get("n_qubits")))
    kwargs = {}
    for key, fname in _FIELD_FOR_KEY.items():
        if key in values:
            kwargs[fname] = values[key]
    kwargs["alphas"] = tuple(float(a) for a in alphas)
    return ExperimentConfig(**kwargs, _lines=lines)


def _fail(cfg: ExperimentConfig, fname: str, message: str):
    key = _KEY_FOR_FIELD.get(fname, fname)
    raise ConfigError(message, key, cfg._lines.get(key))


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.solver not in SOLVERS:
        _fail(cfg, "solver", f"unknown solver {cfg.solver!r}; choose from {', '.join(SOLVERS)}")
    if not 1 <= cfg.n_qubits <= 3:
        _fail(cfg, "alphas", f"between one and three couplings expected, got {cfg.n_qubits}")
    for fname in ("lam", "gamma"):
        if getattr(cfg, fname) < 0:
            _fail(cfg, fname, "must be nonnegative")
    if cfg.omega0 <= 0:
        _fail(cfg, "omega0", "must be positive")
    if cfg.t_final <= 0:
        _fail(cfg, "t_final", "must be positive")
    if cfg.samples < 2:
        _fail(cfg, "samples", "need at least two samples")
    if cfg.dt <= 0:
        _fail(cfg, "dt", "must be positive")
    if cfg.depth is not None and cfg.depth < 2:
        _fail(cfg, "depth", "hierarchy depth must be at least 2")
    if cfg.solver == "heom" and cfg.gamma == 0 and cfg.depth is None:
        _fail(cfg, "depth", "gamma = 0 leaves the hierarchy undamped; set the depth explicitly")
    if not 2 <= cfg.fock_dim <= cfg.fock_max:
        _fail(cfg, "fock_dim", "need 2 <= fock_dim <= fock_max")
    for fname in ("restarts", "warm_restarts", "max_sweeps"):
        if getattr(cfg, fname) < 1:
            _fail(cfg, fname, "must be at least 1")
    try:
        psi = cfg.initial_state()
    except ValueError as exc:
        _fail(cfg, "initial", str(exc))
    if psi.size != 2**cfg.n_qubits:
        _fail(cfg, "initial", f"state has dimension {psi.size}, register needs {2**cfg.n_qubits}")
    if cfg.solver in RWA_SOLVERS:
        try:
            amplitudes_from_state(psi)
        except ValueError as exc:
            _fail(cfg, "initial", str(exc))
    seen = set()
    for m in cfg.measures:
        _check_measure(cfg, m)
        if m in seen:
            _fail(cfg, "measures", f"measure {m!r} listed twice")
        seen.add(m)


def _check_measure(cfg: ExperimentConfig, m: str) -> None:
    hit = _MEASURE_RE.match(m)
    if hit is None:
        _fail(cfg, "measures", f"unknown measure {m!r}")
    n = cfg.n_qubits
    if hit["pair"] is not None:
        if hit["pair"] not in PAIR_LABELS:
            _fail(cfg, "measures", f"unknown pair in {m!r}; use ab, ac or bc")
        if n == 1 or (n == 2 and hit["pair"] != "ab"):
            _fail(cfg, "measures", f"{m!r} needs more qubits than the register has")
    elif hit["cut"] is not None:
        if hit["cut"] not in CUT_LABELS:
            _fail(cfg, "measures", f"unknown cut in {m!r}; use a|bc, b|ac or c|ab")
        if n != 3:
            _fail(cfg, "measures", f"{m!r} needs three qubits")
    elif hit["label"] is not None:
        if len(hit["label"]) != n:
            _fail(cfg, "measures", f"{m!r} does not label a {n}-qubit basis state")
    elif n != 3:
        _fail(cfg, "measures", f"{m!r} needs three qubits")


@dataclass(frozen=True)
class SweepSpec:
    """Base config plus swept keys, expanded as a Cartesian product.

    Points are ordered lexicographically by the position of each value in its
    list, keys taken in the order they were declared.
    """

    base: ExperimentConfig
    params: tuple = ()  # ((key, (v1, v2, ...)), ...)
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("must be at least 1", "sweep.workers")
        for key, values in self.params:
            if key not in _KEYS or key in _NOT_SWEEPABLE:
                raise ConfigError("not a sweepable configuration key", f"sweep.{key}",
                                  self.base._lines.get(f"sweep.{key}"))
        self.points()  # validate every combination up front

    def points(self) -> list[tuple[tuple, ExperimentConfig]]:
        active = [(k, v) for k, v in self.params if len(v)]
        if not active:
            return [((), self.base)]
        out = []
        keys = [k for k, _ in active]
        for combo in itertools.product(*(v for _, v in active)):
            assignment = tuple(zip(keys, combo))
            try:
                cfg = self.base.with_values(dict(assignment))
            except ConfigError as exc:
                raise ConfigError(f"sweep point {dict(assignment)} is invalid: {exc}") from exc
            out.append((assignment, cfg))
        return out


def parse_config(text: str) -> ExperimentConfig | SweepSpec:
    """Parse the ``key = value`` format; sweep keys make it a :class:`SweepSpec`."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    sweeps: list[tuple[str, tuple]] = []
    workers = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key, lineno)
        lines[key] = lineno
        if key == "sweep.workers":
            workers = _convert("int", value, key, lineno)
        elif key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in _KEYS or target in _NOT_SWEEPABLE:
                raise ConfigError("not a sweepable configuration key", key, lineno)
            kind = _KEYS[target][0]
            items = _split_list(value, key, lineno)
            sweeps.append((target, tuple(_convert(kind, it, key, lineno) for it in items)))
        elif key in _KEYS:
            values[key] = _convert(_KEYS[key][0], value, key, lineno)
        else:
            raise ConfigError("unknown key", key, lineno)
    base = config_from_mapping(values, lines)
    if "sweep.workers" in lines or sweeps:
        return SweepSpec(base, tuple(sweeps), workers)
    return base


def load_config(path) -> ExperimentConfig | SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def sweep_text(spec: SweepSpec) -> str:
    """Serialize a sweep back to the config format."""
    out = spec.base.canonical_text()
    for key, values in spec.params:
        out += f"sweep.{key} = {_format(tuple(values))}\n"
    out += f"sweep.workers = {spec.workers}\n"
    return out


def replace_config(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """``dataclasses.replace`` that keeps validation."""
    return replace(cfg, **changes)
