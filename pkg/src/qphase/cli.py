"""Command-line experiment harness.

Each subcommand reads a JSON scenario file, runs one module operation, and
writes its artifacts plus a run manifest into the output directory.  All
stochastic commands require a seed; trial k always draws from sub-stream k,
so outputs are byte-identical across re-runs and worker counts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy

from . import __version__
from .controllability import lie_closure
from .dynamics import (
    ClassicalHamiltonian,
    ControlSchedule,
    ControlledHamiltonian,
)
from .errors import (
    FrameSearchError,
    MaxIterationsError,
    QPhaseError,
    ScenarioError,
)
from .geometry import Observable, PhasePoint, StateVector, to_phase
from .measurement import measure_selective
from .pontryagin import ControlDomain, CostIntegrand, forward_backward_sweep
from .rng import BIT_GENERATOR, stream
from .serialize import (
    matrix_from_json,
    vector_from_json,
    write_csv,
    write_json,
)
from .steering import build_frame_3level, stabilize_middle_level, steer
from .torus import CatMap, plan_kicks

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_DOMAIN = 4

STOCHASTIC_COMMANDS = ("measure", "steer", "stabilize")


@dataclass(frozen=True)
class Scenario:
    """Validated scenario file contents."""

    raw: dict
    path: str

    def require(self, field: str):
        node = self.raw
        for part in field.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ScenarioError(field, "required field is missing")
            node = node[part]
        return node

    def get(self, field: str, default=None):
        node = self.raw
        for part in field.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def matrix(self, field: str) -> np.ndarray:
        try:
            return matrix_from_json(self.require(field))
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(field, f"not a matrix of [re, im] pairs ({exc})")

    def state(self, field: str) -> PhasePoint:
        node = self.require(field)
        try:
            if isinstance(node, dict):
                return PhasePoint(np.asarray(node["q"], float), np.asarray(node["p"], float))
            amps = vector_from_json(node)
            return to_phase(StateVector(amps))
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(field, f"not a state vector ({exc})")

    def seed(self, override) -> int:
        value = self.get("seed") if override is None else override
        if value is None:
            raise ScenarioError("seed", "a seed is mandatory for stochastic commands")
        value = int(value)
        if not 0 <= value < 2**64:
            raise ScenarioError("seed", "seed must fit in an unsigned 64-bit integer")
        return value

    def plant(self) -> ControlledHamiltonian:
        drift = self.matrix("system.drift")
        controls = tuple(
            matrix_from_json(c) for c in self.get("system.controls", [])
        )
        dim = self.get("system.dimension")
        if dim is not None and int(dim) != drift.shape[0]:
            raise ScenarioError("system.dimension", "does not match the drift matrix")
        schedule = None
        if self.get("schedule") is not None:
            schedule = ControlSchedule(
                np.asarray(self.require("schedule.grid"), float),
                np.asarray(self.require("schedule.values"), float),
            )
        try:
            return ControlledHamiltonian(drift, controls, schedule)
        except QPhaseError as exc:
            raise ScenarioError("system", str(exc))

    def domain(self) -> ControlDomain:
        node = self.require("control_bounds")
        try:
            return ControlDomain(
                np.asarray(node["lower"], float), np.asarray(node["upper"], float)
            )
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError("control_bounds", str(exc))


def load_scenario(path: str) -> Scenario:
    if not os.path.exists(path):
        raise ScenarioError("scenario", f"file not found: {path}")
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError("scenario", f"invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ScenarioError("scenario", "top-level value must be an object")
    return Scenario(raw, path)


def _write_manifest(out_dir, command, scenario, seed, trials, artifacts, t0):
    write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "command": command,
            "scenario": os.path.abspath(scenario.path),
            "seed": seed,
            "trials": trials,
            "bit_generator": BIT_GENERATOR,
            "versions": {
                "qphase": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": ".".join(map(str, sys.version_info[:3])),
            },
            "artifacts": sorted(artifacts),
            "wall_time_s": time.monotonic() - t0,
        },
    )


def _map_trials(fn, trials: int) -> list:
    """Run per-trial work on a pool; results come back ordered by trial."""
    workers = min(trials, os.cpu_count() or 1)
    if workers <= 1:
        return [fn(k) for k in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def cmd_evolve(scenario: Scenario, args) -> list:
    plant = scenario.plant()
    x0 = scenario.state("initial_state")
    t_final = float(scenario.require("horizon.t_final"))
    samples = int(scenario.get("horizon.samples", 100))
    if t_final <= 0 or samples < 1:
        raise ScenarioError("horizon", "t_final must be > 0 and samples >= 1")
    from .dynamics import evolve  # local import keeps the module graph flat

    times = np.linspace(0.0, t_final, samples + 1)
    rows = []
    n = x0.dim
    for t in times:
        x = evolve(plant, x0, 0.0, float(t)) if t > 0 else x0
        u = plant.schedule.value_at(t) if plant.controls and plant.schedule else np.zeros(0)
        h_now = ClassicalHamiltonian(plant.matrix_for(u))
        rows.append([float(t), *x.q, *x.p, h_now.value(x)])
    header = (
        ["t"]
        + [f"q{k+1}" for k in range(n)]
        + [f"p{k+1}" for k in range(n)]
        + ["energy"]
    )
    path = os.path.join(args.out, "trajectory.csv")
    write_csv(path, header, rows)
    return ["trajectory.csv"]


def cmd_measure(scenario: Scenario, args, seed: int) -> list:
    obs = Observable(scenario.matrix("measurement.observable"))
    x0 = scenario.state("initial_state")

    def one(trial):
        out = measure_selective(x0, obs, stream(seed, trial))
        return [trial, out.branch, out.value, out.probability, *out.post_state.q, *out.post_state.p]

    rows = _map_trials(one, args.trials)
    header = (
        ["trial", "branch", "value", "probability"]
        + [f"q{k+1}" for k in range(x0.dim)]
        + [f"p{k+1}" for k in range(x0.dim)]
    )
    write_csv(os.path.join(args.out, "measurements.csv"), header, rows)
    return ["measurements.csv"]


def cmd_closure(scenario: Scenario, args) -> list:
    plant = scenario.plant()
    report = lie_closure((Observable(plant.drift),) + tuple(Observable(h) for h in plant.controls))
    write_json(os.path.join(args.out, "closure.json"), report.to_json_dict())
    return ["closure.json"]


def cmd_steer(scenario: Scenario, args, seed: int) -> list:
    goal = scenario.state("goal_state")
    eigenvalues = tuple(scenario.get("steering_eigenvalues", (1.0, 2.0, 3.0)))
    from .geometry import from_phase

    frame = build_frame_3level(from_phase(goal).normalized(), eigenvalues)

    def one(trial):
        x0 = scenario.state("initial_state")
        trace = steer(x0, frame, rng=stream(seed, trial))
        return {
            "trial": trial,
            "final_fidelity": trace.final_fidelity,
            "steps": [
                {"action": s.action, "detail": s.detail} for s in trace.steps
            ],
        }

    results = _map_trials(one, args.trials)
    write_json(os.path.join(args.out, "steer.json"), {"trials": results})
    return ["steer.json"]


def cmd_stabilize(scenario: Scenario, args, seed: int) -> list:
    x0 = scenario.state("initial_state")
    mu = float(scenario.get("mu", 1.0))
    disturbance = scenario.get("disturbance")
    n_periods = int(scenario.get("n_periods", 0))

    def one(trial):
        trace = stabilize_middle_level(
            x0,
            mu=mu,
            disturbance=disturbance,
            n_periods=n_periods,
            rng=stream(seed, trial),
        )
        return {
            "trial": trial,
            "iterations": trace.iterations,
            "final_fidelity": trace.final_fidelity,
            "occupancy": trace.occupancy,
        }

    results = _map_trials(one, args.trials)
    write_json(os.path.join(args.out, "stabilize.json"), {"trials": results})
    return ["stabilize.json"]


def cmd_torus_plan(scenario: Scenario, args) -> list:
    cat = CatMap(tuple(map(tuple, scenario.get("system.torus.cat", ((2, 1), (1, 1))))))
    k_start = tuple(scenario.require("torus_start"))
    k_target = tuple(scenario.require("torus_target"))
    allow_cat = bool(scenario.get("allow_cat_moves", True))
    plan = plan_kicks(k_start, k_target, cat, allow_cat)
    write_json(os.path.join(args.out, "plan.json"), plan.to_json_dict())
    return ["plan.json"]


def cmd_pmp(scenario: Scenario, args) -> list:
    plant = scenario.plant()
    x0 = scenario.state("initial_state")
    goal = scenario.state("goal_state")
    domain = scenario.domain()
    cost = CostIntegrand(scenario.get("cost", "control-energy"))
    t_final = float(scenario.get("horizon.t_final", np.pi))
    points = int(scenario.get("grid_points", 200))
    grid = np.linspace(0.0, t_final, points + 1)
    sol = forward_backward_sweep(plant, x0, goal, cost, domain, grid)
    write_json(os.path.join(args.out, "pmp.json"), sol.to_json_dict())
    write_csv(
        os.path.join(args.out, "pmp_schedule.csv"),
        ["t"] + [f"u{j+1}" for j in range(sol.schedule.n_channels)],
        [[t, *row] for t, row in zip(sol.schedule.grid[:-1], sol.schedule.values)],
    )
    if not sol.converged:
        raise MaxIterationsError(
            f"solver did not reach the fidelity goal (best {sol.fidelity:.6f})"
        )
    return ["pmp.json", "pmp_schedule.csv"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qphase", description=__doc__)
    parser.add_argument("command", choices=[
        "evolve", "measure", "closure", "steer", "stabilize", "torus-plan", "pmp",
    ])
    parser.add_argument("--scenario", required=True, help="path to the JSON scenario file")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--trials", type=int, default=1, help="number of independent trials")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.monotonic()
    try:
        if args.trials < 1:
            raise ScenarioError("trials", "must be >= 1")
        scenario = load_scenario(args.scenario)
        os.makedirs(args.out, exist_ok=True)
        seed = None
        if args.command in STOCHASTIC_COMMANDS:
            seed = scenario.seed(args.seed)
        if args.command == "evolve":
            artifacts = cmd_evolve(scenario, args)
        elif args.command == "measure":
            artifacts = cmd_measure(scenario, args, seed)
        elif args.command == "closure":
            artifacts = cmd_closure(scenario, args)
        elif args.command == "steer":
            artifacts = cmd_steer(scenario, args, seed)
        elif args.command == "stabilize":
            artifacts = cmd_stabilize(scenario, args, seed)
        elif args.command == "torus-plan":
            artifacts = cmd_torus_plan(scenario, args)
        else:
            artifacts = cmd_pmp(scenario, args)
        _write_manifest(args.out, args.command, scenario, seed, args.trials, artifacts, t0)
        return EXIT_OK
    except ScenarioError as exc:
        print(f"qphase: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (MaxIterationsError, FrameSearchError) as exc:
        print(f"qphase: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except QPhaseError as exc:
        print(f"qphase: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
