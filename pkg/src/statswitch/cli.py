"""Command-line front end.

    statswitch simulate --scenario FILE --out DIR [--backend dense|branch] [--nmax N] [--tolerance T]
    statswitch resources --n-max N --out FILE

Exit status: 0 success, 2 validation error, 3 numerical failure.  The only
environment input is ``STATSWITCH_NUM_THREADS`` (threads over time samples).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from .embedding import build_plan, resources
from .errors import (CapabilityError, ContractViolation, LayoutError, NumericalError,
                     PreconditionError, ScenarioError, SizeError)
from .scenario import (RESOURCE_HEADER, grid_csv, load_scenario, manifest, resource_row,
                       run_scenario, timeseries_csv)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
THREADS_ENV = "STATSWITCH_NUM_THREADS"
VALIDATION_ERRORS = (ScenarioError, LayoutError, PreconditionError, ContractViolation,
                     CapabilityError, SizeError, ValueError)


def write_atomic(path: str, text: str):
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ScenarioError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ScenarioError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def cmd_simulate(args) -> int:
    threads = thread_count()
    sc = load_scenario(args.scenario, backend=args.backend, n_max=args.nmax, tolerance=args.tolerance)
    result = run_scenario(sc, threads=threads)
    out = args.out
    files = {"timeseries.csv": timeseries_csv(result.rows),
             "resources.csv": RESOURCE_HEADER + "\n" + resource_row(result.resources) + "\n"}
    for (name, sector), (grid, dens) in result.grids.items():
        files[f"grid_{name}_{sector}.csv"] = grid_csv(grid, dens)
    for fname, text in files.items():
        write_atomic(os.path.join(out, fname), text)
    man = manifest(result, list(files), threads)
    write_atomic(os.path.join(out, "manifest.json"), json.dumps(man, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_resources(args) -> int:
    if args.n_max < 2:
        raise ScenarioError("--n-max must be at least 2")
    lines = [RESOURCE_HEADER]
    for n in range(2, args.n_max + 1):
        lines.append(resource_row(resources(build_plan(n))))
    write_atomic(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statswitch",
                                     description="Boson/fermion statistics-switching embedding simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a scenario file")
    sim.add_argument("--scenario", required=True, help="scenario JSON file")
    sim.add_argument("--out", required=True, help="output directory (created if missing)")
    sim.add_argument("--backend", choices=("dense", "branch"), help="override the scenario backend")
    sim.add_argument("--nmax", type=int, help="override the Fock truncation")
    sim.add_argument("--tolerance", type=float, help="override the Krylov convergence tolerance")
    sim.set_defaults(func=cmd_simulate)
    res = sub.add_parser("resources", help="gate and qubit counts of the symmetrization program")
    res.add_argument("--n-max", type=int, required=True, dest="n_max", help="largest particle number N")
    res.add_argument("--out", required=True, help="CSV file to write")
    res.set_defaults(func=cmd_resources)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
