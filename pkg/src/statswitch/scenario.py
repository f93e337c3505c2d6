"""Declarative scenario files and the pipeline that runs them.

A scenario is UTF-8 JSON::

    {
      "schema_version": 1,
      "name": "exchange",
      "model": {"kind": "exchange", "g": 1.0},
      "n_particles": 2,
      "initial": ["up", "down"],
      "times": {"start": 0, "stop": "2*pi", "steps": 50},
      "observables": ["sx1*sx2"],
      "sectors": ["bosonic", "fermionic", "cross"]
    }

Optional keys: ``encoding`` (``pair`` or ``stat_control``), ``switch_events``,
``grids``, ``backend``, ``n_max``, ``convention``, ``tolerance``.  Unknown
keys are rejected.  Numbers may be given as expressions in ``pi`` and ``g``.
"""
from __future__ import annotations

import ast
import hashlib
import json
import math
import operator
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .dynamics import Propagator, evolve_with_switches
from .embedding import (BOSONIC, CROSS, FERMIONIC, apply_plan, build_plan, build_two_particle_spinor,
                        map_to_physical, particle_state, resources)
from .errors import NumericalError, ScenarioError
from .linalg import DENSE_THRESHOLD, KRYLOV_TOL
from .measurement import ProductOperator, expect_many
from .models import KINDS, SX, SY, SZ, ModelSpec, embed_model, position_power
from .wavefield import GridSpec, joint_density

SCHEMA_VERSION = 1
TOP_KEYS = {"schema_version", "name", "model", "n_particles", "encoding", "initial", "times",
            "observables", "sectors", "switch_events", "grids", "backend", "n_max", "convention",
            "tolerance"}
REQUIRED_KEYS = {"schema_version", "model", "initial", "times"}
MODEL_KEYS = {"kind", "g", "n_max", "delta"}
GRID_KEYS = {"name", "time", "sectors", "axes", "fixed", "spins"}
SCENARIO_KINDS = ("exchange", "heisenberg", "jaynes_cummings", "rabi")
ENCODINGS = ("pair", "stat_control")
CONVENTIONS = ("raw", "renormalized")
RABI_DEFAULT_NMAX = 64
TAIL_LEVELS = 2
TAIL_TOL = 1e-8


# --------------------------------------------------------------------------
# expressions


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_number(value, names=None, where="value") -> float:
    """Real number from a JSON number or an arithmetic expression string."""
    if isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ScenarioError(f"{where}: expected a number or expression, got {value!r}")
    env = {"pi": math.pi, **(names or {})}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in env:
            return float(env[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ScenarioError(f"{where}: unsupported expression {value!r}")

    try:
        out = ev(ast.parse(value, mode="eval"))
    except SyntaxError as exc:
        raise ScenarioError(f"{where}: cannot parse expression {value!r}") from exc
    except ZeroDivisionError as exc:
        raise ScenarioError(f"{where}: division by zero in {value!r}") from exc
    if not math.isfinite(out):
        raise ScenarioError(f"{where}: expression {value!r} is not finite")
    return out


# --------------------------------------------------------------------------
# observables

_FACTOR = re.compile(r"^(?:(x)(\d+)(?:\^(\d+))?|s([xyz])(\d+)|1)$")


@dataclass(frozen=True)
class Observable:
    text: str
    operator: ProductOperator


def parse_observable(text: str, n_particles: int, mode_dim, delta: float) -> Observable:
    """Product observable such as ``x1^2*x2^2*sx1*sx2`` or ``sz1``.

    Factors on the same particle multiply left to right.  ``x`` factors need
    a mode; ``1`` is the identity.
    """
    if not isinstance(text, str) or not text.strip():
        raise ScenarioError(f"observable {text!r} must be a non-empty string")
    spin_eye = np.eye(2, dtype=complex)
    mode_eye = np.eye(mode_dim or 1, dtype=complex)
    spin = [spin_eye.copy() for _ in range(n_particles)]
    mode = [mode_eye.copy() for _ in range(n_particles)]
    for raw in re.split(r"\s*\*\s*", text.strip()):
        m = _FACTOR.match(raw)
        if m is None:
            raise ScenarioError(f"observable {text!r}: cannot parse factor {raw!r}")
        if raw == "1":
            continue
        if m.group(1):
            p, power = int(m.group(2)), int(m.group(3) or 1)
            if mode_dim is None:
                raise ScenarioError(f"observable {text!r}: model has no mode for x{p}")
        else:
            p = int(m.group(5))
        if not 1 <= p <= n_particles:
            raise ScenarioError(f"observable {text!r}: particle {p} out of range 1..{n_particles}")
        if m.group(1):
            mode[p - 1] = mode[p - 1] @ position_power(mode_dim, power, delta)
        else:
            spin[p - 1] = spin[p - 1] @ {"x": SX, "y": SY, "z": SZ}[m.group(4)]
    factors = [np.kron(s, q) for s, q in zip(spin, mode)]
    return Observable(text, ProductOperator(factors))


# --------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class GridRequest:
    name: str
    time: float
    sectors: tuple
    spec: GridSpec


@dataclass(frozen=True)
class Scenario:
    """Validated, fully resolved scenario."""

    name: str
    model: ModelSpec
    delta: float
    encoding: str
    initial: tuple
    times: np.ndarray
    observables: tuple
    sectors: tuple
    switch_events: tuple
    grids: tuple
    backend: str
    convention: str
    tolerance: float
    source_sha256: str = ""
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def n_particles(self) -> int:
        return self.model.n_particles

    def resolved(self) -> dict:
        """Every configuration value that influences the numbers."""
        return {
            "name": self.name,
            "model": {"kind": self.model.kind, "g": self.model.g, "n_max": self.model.n_max,
                      "delta": self.delta},
            "n_particles": self.n_particles,
            "encoding": self.encoding,
            "initial": list(self.initial),
            "times": [float(t) for t in self.times],
            "observables": [o.text for o in self.observables],
            "sectors": list(self.sectors),
            "switch_events": list(self.switch_events),
            "grids": [{"name": g.name, "time": g.time, "sectors": list(g.sectors),
                       "axes": {str(k): list(v) for k, v in g.spec.axes.items()},
                       "fixed": {str(k): v for k, v in g.spec.fixed.items()},
                       "spins": g.spec.spins if g.spec.spins == "sum" else list(g.spec.spins)}
                      for g in self.grids],
            "backend": self.backend,
            "convention": self.convention,
            "tolerance": self.tolerance,
        }


def _line_of(text: str, key: str) -> str:
    if not text:
        return ""
    needle = f'"{key}"'
    for n, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return f" (line {n})"
    return ""


def _parse_label(label, n_max, where):
    if not isinstance(label, str):
        raise ScenarioError(f"{where}: state label must be a string like 'up:0'")
    spin, _, fock = label.partition(":")
    if spin not in ("up", "down"):
        raise ScenarioError(f"{where}: spin must be 'up' or 'down', got {spin!r}")
    if n_max is None:
        if fock:
            raise ScenarioError(f"{where}: spin-only model takes no Fock index")
        return spin, None
    try:
        k = int(fock or 0)
    except ValueError as exc:
        raise ScenarioError(f"{where}: Fock index {fock!r} is not an integer") from exc
    if k < 0:
        raise ScenarioError(f"{where}: negative Fock index")
    return spin, k


def _default_n_max(kind, labels):
    if kind == "jaynes_cummings":
        # the closed JC manifold of |up, n> reaches n + 1; one level of headroom
        return max(k for _s, k in labels) + 2
    return RABI_DEFAULT_NMAX


def load_scenario(source, backend=None, n_max=None, tolerance=None) -> Scenario:
    """Parse and validate a scenario from a path, JSON text or dict.

    ``backend``, ``n_max`` and ``tolerance`` override the file's values.

    Raises:
        ScenarioError: on any validation failure, with the offending key.
    """
    text = ""
    if isinstance(source, dict):
        data = source
        text = json.dumps(source, sort_keys=True)
    else:
        if isinstance(source, str) and source.lstrip().startswith("{"):
            text = source
        else:
            try:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ScenarioError(f"cannot read scenario {source}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    sha = hashlib.sha256(text.encode("utf-8")).hexdigest()

    unknown = set(data) - TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ScenarioError(f"unknown key {key!r}{_line_of(text, key)}")
    missing = REQUIRED_KEYS - set(data)
    if missing:
        raise ScenarioError(f"missing required key {sorted(missing)[0]!r}")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {data['schema_version']!r}"
                            f"{_line_of(text, 'schema_version')}; expected {SCHEMA_VERSION}")

    # model
    mdata = data["model"]
    if not isinstance(mdata, dict):
        raise ScenarioError(f"model must be an object{_line_of(text, 'model')}")
    unknown = set(mdata) - MODEL_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ScenarioError(f"unknown model key {key!r}{_line_of(text, key)}")
    kind = mdata.get("kind")
    if kind not in SCENARIO_KINDS:
        hint = " (use the Python API for this model)" if kind in KINDS else ""
        raise ScenarioError(f"model.kind {kind!r} not supported in scenarios{hint}{_line_of(text, 'kind')}")
    g = eval_number(mdata.get("g", 1.0), where="model.g")
    names = {"g": g}
    delta = eval_number(mdata.get("delta", 1.0), names, "model.delta")
    if delta <= 0:
        raise ScenarioError(f"model.delta must be positive{_line_of(text, 'delta')}")

    labels_raw = data["initial"]
    n = data.get("n_particles", len(labels_raw) if isinstance(labels_raw, list) else None)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ScenarioError(f"n_particles must be an integer >= 2{_line_of(text, 'n_particles')}")
    if not isinstance(labels_raw, list) or len(labels_raw) != n:
        raise ScenarioError(f"initial must list one state label per particle ({n}){_line_of(text, 'initial')}")
    has_mode = kind in ("jaynes_cummings", "rabi")
    labels = [_parse_label(lab, 0 if has_mode else None, f"initial[{k}]") for k, lab in enumerate(labels_raw)]
    if len(set(labels)) != n:
        raise ScenarioError(f"initial states must be pairwise orthogonal basis states{_line_of(text, 'initial')}")

    nm = n_max if n_max is not None else data.get("n_max", mdata.get("n_max"))
    if has_mode:
        if nm is None:
            nm = _default_n_max(kind, labels)
        if not isinstance(nm, int) or isinstance(nm, bool) or nm < 1:
            raise ScenarioError(f"n_max must be a positive integer{_line_of(text, 'n_max')}")
        too_high = [k for _s, k in labels if k > nm]
        if too_high:
            raise ScenarioError(f"initial Fock index {too_high[0]} exceeds n_max={nm}")
        if kind == "jaynes_cummings" and any(s == "up" and k + 1 > nm for s, k in labels):
            # |up, k> couples to |down, k+1>; the truncated model is exact only below the cut
            raise ScenarioError(f"n_max={nm} cuts the Jaynes-Cummings doublet of an 'up' initial state")
    elif nm is not None:
        raise ScenarioError(f"n_max given for spin-only model {kind!r}{_line_of(text, 'n_max')}")
    try:
        model = ModelSpec(kind, n_particles=n, g=g, n_max=nm if has_mode else None)
    except ValueError as exc:
        raise ScenarioError(f"model: {exc}") from exc

    encoding = data.get("encoding", "pair" if n == 2 else "stat_control")
    if encoding not in ENCODINGS:
        raise ScenarioError(f"encoding must be one of {ENCODINGS}{_line_of(text, 'encoding')}")
    if encoding == "pair" and n != 2:
        raise ScenarioError(f"pair encoding needs exactly two particles{_line_of(text, 'encoding')}")

    # times
    tdata = data["times"]
    if not isinstance(tdata, dict) or set(tdata) != {"start", "stop", "steps"}:
        raise ScenarioError(f"times must be an object with start, stop, steps{_line_of(text, 'times')}")
    start = eval_number(tdata["start"], names, "times.start")
    stop = eval_number(tdata["stop"], names, "times.stop")
    steps = tdata["steps"]
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
        raise ScenarioError(f"times.steps must be a positive integer{_line_of(text, 'steps')}")
    if start < 0 or (steps > 1 and stop <= start):
        raise ScenarioError(f"times need 0 <= start < stop{_line_of(text, 'times')}")
    times = np.linspace(start, stop, steps) if steps > 1 else np.array([start])

    mode_dim = nm + 1 if has_mode else None
    obs_raw = data.get("observables", [])
    if not isinstance(obs_raw, list):
        raise ScenarioError(f"observables must be a list{_line_of(text, 'observables')}")
    observables = tuple(parse_observable(o, n, mode_dim, delta) for o in obs_raw)

    sectors = data.get("sectors", [BOSONIC, FERMIONIC, CROSS])
    if not isinstance(sectors, list) or not sectors or any(s not in (BOSONIC, FERMIONIC, CROSS) for s in sectors):
        raise ScenarioError(f"sectors must be a non-empty subset of bosonic, fermionic, cross"
                            f"{_line_of(text, 'sectors')}")
    if len(set(sectors)) != len(sectors):
        raise ScenarioError(f"duplicate entry in sectors{_line_of(text, 'sectors')}")

    ev_raw = data.get("switch_events", [])
    if not isinstance(ev_raw, list):
        raise ScenarioError(f"switch_events must be a list{_line_of(text, 'switch_events')}")
    events = [eval_number(e, names, f"switch_events[{k}]") for k, e in enumerate(ev_raw)]
    if any(e < 0 for e in events) or any(b <= a for a, b in zip(events, events[1:])):
        raise ScenarioError(f"switch_events must be non-negative and strictly increasing"
                            f"{_line_of(text, 'switch_events')}")

    grids = tuple(_parse_grid(gd, k, n, has_mode, names, text) for k, gd in enumerate(data.get("grids", [])))
    if len({gr.name for gr in grids}) != len(grids):
        raise ScenarioError(f"grid names must be unique{_line_of(text, 'grids')}")

    be = backend or data.get("backend")
    if be is None:
        dense_dim = (2 if encoding == "stat_control" else 1) * 2 ** sum(
            (k - 1).bit_length() for k in range(2, n + 1)) * model.local_dim**n
        be = "branch" if has_mode and dense_dim > DENSE_THRESHOLD else "dense"
    if be not in ("dense", "branch"):
        raise ScenarioError(f"backend must be 'dense' or 'branch'{_line_of(text, 'backend')}")
    if be == "branch" and not has_mode:
        raise ScenarioError(f"branch backend needs a sum of one-body terms; {kind!r} couples particles")

    convention = data.get("convention", "renormalized")
    if convention not in CONVENTIONS:
        raise ScenarioError(f"convention must be one of {CONVENTIONS}{_line_of(text, 'convention')}")
    tol = tolerance if tolerance is not None else eval_number(data.get("tolerance", KRYLOV_TOL),
                                                               where="tolerance")
    if not 0 < tol < 1:
        raise ScenarioError("tolerance must lie in (0, 1)")

    name = data.get("name", "scenario")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ScenarioError(f"name must be a simple identifier{_line_of(text, 'name')}")
    init = tuple(f"{s}:{k}" if k is not None else s for s, k in labels)
    return Scenario(name, model, delta, encoding, init, times, observables, tuple(sectors),
                    tuple(events), grids, be, convention, float(tol), sha, data)


def _parse_grid(gd, k, n, has_mode, names, text) -> GridRequest:
    where = f"grids[{k}]"
    if not isinstance(gd, dict):
        raise ScenarioError(f"{where} must be an object")
    unknown = set(gd) - GRID_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ScenarioError(f"{where}: unknown key {key!r}{_line_of(text, key)}")
    if not has_mode:
        raise ScenarioError(f"{where}: densities need a model with modes")
    if "time" not in gd or "axes" not in gd:
        raise ScenarioError(f"{where}: needs 'time' and 'axes'")
    t = eval_number(gd["time"], names, f"{where}.time")
    if t < 0:
        raise ScenarioError(f"{where}.time must be non-negative")
    try:
        axes = {int(p): (eval_number(v[0], names), eval_number(v[1], names), int(v[2]))
                for p, v in gd["axes"].items()}
        fixed = {int(p): eval_number(v, names, f"{where}.fixed") for p, v in gd.get("fixed", {}).items()}
    except (AttributeError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"{where}: axes must map particle -> [min, max, points]") from exc
    if len(axes) != 2:
        raise ScenarioError(f"{where}: exactly two gridded particles are required")
    for p, (lo, hi, _pts) in axes.items():
        if hi <= lo:
            raise ScenarioError(f"{where}: axis of particle {p} needs min < max")
    spins = gd.get("spins", "sum")
    if spins != "sum":
        if not isinstance(spins, list) or len(spins) != n or any(s not in ("up", "down") for s in spins):
            raise ScenarioError(f"{where}.spins must be 'sum' or one of up/down per particle")
        spins = tuple(spins)
    sectors = gd.get("sectors", [BOSONIC, FERMIONIC])
    if not isinstance(sectors, list) or any(s not in (BOSONIC, FERMIONIC) for s in sectors):
        raise ScenarioError(f"{where}.sectors must list bosonic and/or fermionic")
    spec = GridSpec(axes=axes, fixed=fixed, spins=spins)
    try:
        spec.validate(n)
    except Exception as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    name = gd.get("name", f"grid{k}")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ScenarioError(f"{where}.name must be a simple identifier")
    return GridRequest(name, t, tuple(sectors), spec)


# --------------------------------------------------------------------------
# execution


@dataclass
class RunResult:
    scenario: Scenario
    rows: list
    grids: dict
    resources: object
    truncation_tail: float | None


def initial_spinor(sc: Scenario):
    nm = sc.model.n_max
    vecs = []
    for lab in sc.initial:
        spin, _, fock = lab.partition(":")
        vecs.append(particle_state(spin, int(fock) if fock else None, nm))
    rep = "branch" if sc.backend == "branch" else "dense"
    if sc.encoding == "pair":
        sp = build_two_particle_spinor(*vecs)
        return sp if rep == "branch" else sp.as_dense()
    return apply_plan(build_plan(sc.n_particles), vecs, with_stat_control=True, representation=rep)


def _truncation_tail(state, mode_dim) -> float:
    """Largest population in the top ``TAIL_LEVELS`` Fock levels of any particle factor."""
    if state.branches is not None:
        worst = 0.0
        for b in state.branches:
            for f in b.factors:
                amp = np.abs(f.reshape(2, mode_dim)) ** 2
                worst = max(worst, float(amp[:, -TAIL_LEVELS:].sum() / max(amp.sum(), 1e-300)))
        return worst
    lay = state.layout
    t = np.abs(state.to_dense().reshape((lay.control_dim,) + (2, mode_dim) * lay.n_particles)) ** 2
    worst = 0.0
    for p in range(lay.n_particles):
        axis = 2 + 2 * p
        top = np.take(t, range(mode_dim - TAIL_LEVELS, mode_dim), axis=axis).sum()
        worst = max(worst, float(top / t.sum()))
    return worst


def run_scenario(sc: Scenario, threads: int = 1) -> RunResult:
    """Evolve, measure and evaluate densities for a validated scenario.

    Raises:
        NumericalError: with the scenario name, time and sector in the message.
    """
    psi0 = initial_spinor(sc)
    ham = embed_model(sc.model, psi0.layout)
    prop = Propagator(ham, sc.backend, tol=sc.tolerance)
    grid_times = sorted({g.time for g in sc.grids})
    all_times = np.unique(np.concatenate([sc.times, grid_times]))
    try:
        states = evolve_with_switches(psi0, ham, all_times, sc.switch_events, sc.backend, prop)
    except NumericalError as exc:
        raise NumericalError(f"scenario {sc.name}: evolution failed: {exc}", exc.residual) from exc
    by_time = dict(zip((float(t) for t in all_times), states))

    tail = None
    if sc.model.kind == "rabi":
        tail = max(_truncation_tail(s, sc.model.mode_dim) for s in states)
        if tail > TAIL_TOL:
            raise NumericalError(f"scenario {sc.name}: population {tail:.3e} in the top {TAIL_LEVELS} "
                                 f"Fock levels exceeds {TAIL_TOL:g}; raise n_max", tail)

    def rows_at(t):
        state = by_time[float(t)]
        try:
            results = expect_many(state, [o.operator for o in sc.observables], sc.sectors)
        except NumericalError as exc:
            raise NumericalError(f"scenario {sc.name}, t={t:.15g}: {exc}", exc.residual) from exc
        out = []
        for k, obs in enumerate(sc.observables):
            for sector in sc.sectors:
                res = results[(k, sector)]
                value = res.renormalized if sc.convention == "renormalized" else res.value
                out.append((float(t), obs.text, sector, sc.convention, value, res.value,
                            res.postselect_probability))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(rows_at, sc.times))
    else:
        chunks = [rows_at(t) for t in sc.times]
    rows = [r for c in chunks for r in c]

    grids = {}
    mode_dims = (sc.model.mode_dim,) * sc.n_particles
    for g in sc.grids:
        state = by_time[float(g.time)]
        for sector in g.sectors:
            phys = map_to_physical(state, sector)
            spec = GridSpec(g.spec.axes, g.spec.fixed, g.spec.spins, (sc.delta,) * sc.n_particles)
            grids[(g.name, sector)] = (g, joint_density(phys.amplitudes, mode_dims, spec))
    return RunResult(sc, rows, grids, resources(build_plan(sc.n_particles)), tail)


# --------------------------------------------------------------------------
# output


def fmt(x) -> str:
    return "%.15g" % x


RESOURCE_HEADER = ("n_particles,cswap_count,formula_value,formula_differs,kappa,n_squared,"
                   "toffoli_count,working_qubits,sign_gate_count")


def resource_row(r) -> str:
    return ",".join(str(v) for v in (r.n_particles, r.cswap_count, r.closed_form_gates,
                                      int(r.formula_discrepancy), r.kappa, r.n_particles**2,
                                      r.toffoli_count, r.working_qubits, r.sign_gate_count))


def timeseries_csv(rows) -> str:
    lines = ["time,observable,sector,convention,value_re,value_im,raw_re,raw_im,postselect_probability"]
    for t, obs, sector, conv, value, raw, prob in rows:
        lines.append(",".join([fmt(t), obs, sector, conv, fmt(value.real), fmt(value.imag),
                               fmt(raw.real), fmt(raw.imag), "" if prob is None else fmt(prob)]))
    return "\n".join(lines) + "\n"


def grid_csv(grid: GridRequest, density: np.ndarray) -> str:
    """Row-major matrix below two header lines: row-axis then column-axis coordinates."""
    (pr, _), (pc, _) = list(grid.spec.axes.items())
    lines = [f"x{pr}," + ",".join(fmt(v) for v in grid.spec.coordinates(pr)),
             f"x{pc}," + ",".join(fmt(v) for v in grid.spec.coordinates(pc))]
    for row in density:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def manifest(result: RunResult, files, threads: int) -> dict:
    sc = result.scenario
    return {
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "scenario_sha256": sc.source_sha256,
        "resolved": sc.resolved(),
        "threads": threads,
        "truncation_tail": result.truncation_tail,
        "truncation_tail_tol": TAIL_TOL if result.truncation_tail is not None else None,
        "files": sorted(files),
    }
