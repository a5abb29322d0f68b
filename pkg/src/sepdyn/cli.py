"""Experiment runner: named systems, JSON configs, CSV/JSON trajectory export.

A run picks one of three experiment Hamiltonians (two-qubit exchange,
seeded random five-qubit, three-qutrit correlator) and one integrator, then
writes the trajectory as CSV plus a diagnostics JSON. Runs are byte-for-byte
reproducible for a fixed config, including the random seed.

Exit codes: 0 success, 2 config validation error, 3 solver failure,
4 variational blow-up (partial output retained).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, bea, variational
from .hamiltonians import (
    HermitianOperator,
    correlator_hamiltonian,
    r_party_eta,
    random_hermitian,
    swap_hamiltonian,
)
from .propagators import (
    HermitianPropagator,
    SplittingScheme,
    Trajectory,
    evolve,
    se_evolve,
)
from .states import GELL_MANN, ComponentState, Ket, inner, tensor_product
from .reduced import DegenerateStateError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4

EXPERIMENTS = ("swap", "random5", "ladder")
INTEGRATORS = (
    "se_exact",
    "lie_trotter",
    "strang",
    "var_restrict_first",
    "var_discretize_first",
    "bea_truncation",
)
OUTPUT_NAMES = ("norm", "abs_overlap", "rate_nucl", "bloch", "purity")
EXPERIMENT_DIMS = {"swap": (2, 2), "random5": (2,) * 5, "ladder": (3, 3, 3)}
BLOWUP_FACTOR = 2.0


class ConfigError(ValueError):
    """The run configuration is malformed or inconsistent."""


@dataclass
class ExperimentConfig:
    experiment: str
    integrator: str
    dt: float
    t_final: float
    initial_state: list
    out_path: str
    outputs: list = field(default_factory=lambda: ["norm"])
    alpha: float | None = None
    seed: int | None = None
    r_party: int | None = None
    bea_order: int | None = None
    bea_scheme: str = "lie_trotter"
    gellmann_projection: list = field(default_factory=lambda: [0, 1, 2])

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"experiment", "integrator", "dt", "t_final", "initial_state",
                   "out_path"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        config = cls(**raw)
        config.validate()
        return config

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{self.experiment}'")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"unknown integrator '{self.integrator}'")
        if not compatible(self.experiment, self.integrator):
            raise ConfigError(
                f"integrator '{self.integrator}' is not available for "
                f"experiment '{self.experiment}'"
            )
        if not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigError("dt must be positive")
        if not (isinstance(self.t_final, (int, float)) and self.t_final > 0):
            raise ConfigError("t_final must be positive")
        if self.t_final < self.dt:
            raise ConfigError("t_final must be at least dt")
        if self.integrator.startswith("var_"):
            if self.alpha is None:
                raise ConfigError("variational runs require 'alpha'")
            if not 0.0 <= float(self.alpha) <= 1.0:
                raise ConfigError("alpha must lie in [0, 1]")
        if self.experiment == "random5" and self.seed is None:
            raise ConfigError("the random5 experiment requires 'seed'")
        if self.experiment == "ladder":
            if self.r_party not in (1, 2, 3):
                raise ConfigError("the ladder experiment requires r_party in {1, 2, 3}")
        if self.integrator == "bea_truncation":
            if self.bea_scheme not in ("lie_trotter", "strang"):
                raise ConfigError("bea_scheme must be 'lie_trotter' or 'strang'")
            orders = bea.TROTTER_ORDERS if self.bea_scheme == "lie_trotter" else bea.STRANG_ORDERS
            if self.bea_order not in orders:
                raise ConfigError(f"bea_order must be one of {orders} for {self.bea_scheme}")
        for name in self.outputs:
            if name not in OUTPUT_NAMES:
                raise ConfigError(f"unknown output '{name}'; allowed: {OUTPUT_NAMES}")
        if sorted(self.gellmann_projection) != sorted(set(self.gellmann_projection)) or any(
            not 0 <= int(i) < 8 for i in self.gellmann_projection
        ) or len(self.gellmann_projection) != 3:
            raise ConfigError("gellmann_projection must be three distinct indices in 0..7")
        self._parse_initial_state()

    def _parse_initial_state(self) -> ComponentState:
        dims = EXPERIMENT_DIMS[self.experiment]
        if not isinstance(self.initial_state, list) or len(self.initial_state) != len(dims):
            raise ConfigError(
                f"initial_state must list {len(dims)} subsystem amplitude vectors"
            )
        kets = []
        for j, (raw_vec, d) in enumerate(zip(self.initial_state, dims)):
            if not isinstance(raw_vec, list) or len(raw_vec) != d:
                raise ConfigError(f"initial_state[{j}] must have {d} amplitudes")
            amps = []
            for entry in raw_vec:
                if isinstance(entry, (int, float)):
                    amps.append(complex(entry))
                elif isinstance(entry, list) and len(entry) == 2:
                    amps.append(complex(entry[0], entry[1]))
                else:
                    raise ConfigError(
                        "amplitudes must be numbers or [re, im] pairs"
                    )
            vec = np.asarray(amps)
            if np.linalg.norm(vec) < 1e-12:
                raise ConfigError(f"initial_state[{j}] has zero norm")
            kets.append(Ket(vec))
        return ComponentState(tuple(kets), dims)

    def steps(self) -> int:
        return int(np.floor(self.t_final / self.dt + 1e-9))


def compatible(experiment: str, integrator: str) -> bool:
    if integrator == "bea_truncation":
        return experiment == "swap"
    return True


def build_hamiltonian(config: ExperimentConfig) -> HermitianOperator:
    if config.experiment == "swap":
        return swap_hamiltonian(2)
    if config.experiment == "random5":
        return random_hermitian(5, int(config.seed))
    return correlator_hamiltonian(r_party_eta(int(config.r_party)))


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass
class RunResult:
    trajectory: Trajectory
    component_run: bool
    solver_stats: dict
    blowup: dict | None = None


def _variational_run(config, H, state0) -> RunResult:
    integrators = {
        "var_restrict_first": variational.integrate_restrict_then_discretize,
        "var_discretize_first": variational.integrate_discretize_then_restrict,
    }
    run = integrators[config.integrator]
    blowup = None
    try:
        discrete = run(H, float(config.alpha), config.dt, config.steps(), state0,
                       blowup_factor=BLOWUP_FACTOR)
    except variational.BlowupError as err:
        discrete = err.partial
        blowup = {
            "message": str(err),
            "steps_completed": int(discrete.points.shape[0] - 1),
            "time_reached": float(discrete.times[-1]),
        }
    components = discrete.component_states()
    fulls = [tensor_product(s) for s in components]
    traj = Trajectory(
        discrete.times, component_states=components, full_states=fulls,
        diagnostics={"norm": np.array([f.norm() for f in fulls])},
    )
    return RunResult(traj, True, {"kind": "newton", "tolerance": variational.NEWTON_TOL},
                     blowup)


def _bea_run(config, state0) -> RunResult:
    scheme = (SplittingScheme.LIE_TROTTER if config.bea_scheme == "lie_trotter"
              else SplittingScheme.STRANG)
    rhs = bea.ModifiedRHS(scheme, int(config.bea_order), config.dt)
    steps = config.steps()
    times = config.dt * np.arange(steps + 1)
    a0, b0 = state0.parts[0].amplitudes, state0.parts[1].amplitudes
    sol = bea.rk_integrate(rhs, (a0, b0), (0.0, float(times[-1])), tol=1e-12,
                           t_eval=times)
    components = [
        ComponentState((Ket(row[:2]), Ket(row[2:])), (2, 2)) for row in sol.y_eval
    ]
    fulls = [tensor_product(s) for s in components]
    traj = Trajectory(times, component_states=components, full_states=fulls,
                      diagnostics={"norm": np.array([f.norm() for f in fulls])})
    stats = {"kind": "runge_kutta", "steps": sol.steps, "rejected": sol.rejected,
             "rhs_evals": sol.rhs_evals}
    return RunResult(traj, True, stats)


def execute(config: ExperimentConfig) -> RunResult:
    H = build_hamiltonian(config)
    state0 = config._parse_initial_state()
    steps = config.steps()
    if config.integrator == "se_exact":
        traj = se_evolve(H, tensor_product(state0), config.dt, steps)
        return RunResult(traj, False, {"kind": "eigendecomposition"})
    if config.integrator in ("lie_trotter", "strang"):
        scheme = (SplittingScheme.LIE_TROTTER if config.integrator == "lie_trotter"
                  else SplittingScheme.STRANG)
        traj = evolve(scheme, H, state0, config.dt, steps)
        return RunResult(traj, True, {"kind": "splitting"})
    if config.integrator == "bea_truncation":
        return _bea_run(config, state0)
    return _variational_run(config, H, state0)


def _diagnostic_columns(config: ExperimentConfig, result: RunResult,
                        H: HermitianOperator) -> dict[str, np.ndarray]:
    traj = result.trajectory
    dims = EXPERIMENT_DIMS[config.experiment]
    columns: dict[str, np.ndarray] = {}
    for name in config.outputs:
        if name == "norm":
            columns["norm"] = traj.diagnostics["norm"]
        elif name == "abs_overlap":
            psi0 = (traj.full_states[0] if traj.full_states is not None
                    else tensor_product(traj.component_states[0]))
            reference = HermitianPropagator(H).states_on_grid(
                psi0.amplitudes, traj.times
            )
            states = np.stack([s.amplitudes for s in traj.full_states])
            columns["abs_overlap"] = np.abs(
                np.einsum("ti,ti->t", reference.conj(), states)
            )
        elif name == "rate_nucl":
            columns["rate_nucl"] = analysis.rate_of_change_nuclear(traj, traj.dt)
        elif name == "purity":
            for j in range(len(dims)):
                columns[f"purity{j + 1}"] = analysis.purity_series(traj, j)
        elif name == "bloch":
            for j, d in enumerate(dims):
                rhos = analysis.reduced_density_series(traj, j)
                if d == 2:
                    columns[f"bloch_x{j + 1}"] = 2.0 * rhos[:, 0, 1].real
                    columns[f"bloch_y{j + 1}"] = 2.0 * rhos[:, 1, 0].imag
                    columns[f"bloch_z{j + 1}"] = (rhos[:, 0, 0] - rhos[:, 1, 1]).real
                else:
                    # Qutrits: project the 8-component generalized vector onto
                    # the three configured generators.
                    picks = [int(i) for i in config.gellmann_projection]
                    gm = np.real(np.einsum("tij,kji->tk", rhos, GELL_MANN))
                    for axis, idx in zip(("x", "y", "z"), picks):
                        columns[f"bloch_{axis}{j + 1}"] = gm[:, idx]
    return columns


def write_csv(path: Path, config: ExperimentConfig, result: RunResult,
              columns: dict[str, np.ndarray]):
    traj = result.trajectory
    headers = ["t"]
    state_cols: list[np.ndarray] = []
    if result.component_run:
        dims = EXPERIMENT_DIMS[config.experiment]
        comp = np.stack([
            np.concatenate([p.amplitudes for p in s.parts])
            for s in traj.component_states
        ])
        offset = 0
        for j, d in enumerate(dims):
            for i in range(d):
                headers += [f"re_a{j + 1}_{i}", f"im_a{j + 1}_{i}"]
                state_cols += [comp[:, offset + i].real, comp[:, offset + i].imag]
            offset += d
    else:
        full = np.stack([s.amplitudes for s in traj.full_states])
        for i in range(full.shape[1]):
            headers += [f"re_psi_{i}", f"im_psi_{i}"]
            state_cols += [full[:, i].real, full[:, i].imag]
    headers += list(columns)
    state_cols += [columns[name] for name in columns]

    with path.open("w", newline="") as handle:
        handle.write(",".join(headers) + "\n")
        for row_idx, t in enumerate(traj.times):
            cells = [_fmt(t)] + [_fmt(col[row_idx]) for col in state_cols]
            handle.write(",".join(cells) + "\n")


def _conservation_summary(config: ExperimentConfig, result: RunResult) -> dict:
    traj = result.trajectory
    norms = traj.diagnostics["norm"]
    summary = {
        "max_abs_norm_drift": float(np.max(np.abs(norms - norms[0]))),
        "final_norm": float(norms[-1]),
    }
    if config.experiment == "swap" and result.component_run:
        qs = np.array([
            inner(s.parts[0], s.parts[1]) for s in traj.component_states
        ])
        summary["max_abs_q_drift"] = float(np.max(np.abs(qs - qs[0])))
    return summary


def run(config: ExperimentConfig) -> int:
    """Execute one configured run; returns the process exit code."""
    start = time.perf_counter()
    try:
        result = execute(config)
    except (variational.NewtonConvergenceError, bea.StepSizeUnderflowError,
            DegenerateStateError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    H = build_hamiltonian(config)
    columns = _diagnostic_columns(config, result, H)

    out_prefix = Path(config.out_path)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out_prefix.with_suffix(".csv")
    json_path = out_prefix.with_suffix(".json")
    write_csv(csv_path, config, result, columns)

    payload = {
        "config": asdict(config),
        "summary": _conservation_summary(config, result),
        "solver": result.solver_stats,
        "rows_written": int(result.trajectory.times.size),
    }
    if result.blowup is not None:
        payload["blowup"] = result.blowup
    with json_path.open("w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")

    elapsed = time.perf_counter() - start
    norms = result.trajectory.diagnostics["norm"]
    status = "blow-up" if result.blowup else "ok"
    print(
        f"{config.experiment}/{config.integrator}: {status}, "
        f"steps={result.trajectory.times.size - 1}, final_norm={norms[-1]:.6g}, "
        f"wall={elapsed:.2f}s -> {csv_path}"
    )
    return EXIT_BLOWUP if result.blowup else EXIT_OK


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply key=value overrides; keys may be dot paths, values JSON or text."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, text = item.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        target = raw
        parts = key.split(".")
        for part in parts[:-1]:
            if isinstance(target, list):
                target = target[int(part)]
            else:
                target = target.setdefault(part, {})
        leaf = parts[-1]
        if isinstance(target, list):
            target[int(leaf)] = value
        else:
            target[leaf] = value
    return raw


def load_config(path: Path, overrides: list[str]) -> ExperimentConfig:
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    raw = apply_overrides(raw, overrides)
    return ExperimentConfig.from_dict(raw)


def _run_file(path_str: str, overrides: tuple[str, ...] = ()) -> int:
    try:
        config = load_config(Path(path_str), list(overrides))
    except ConfigError as err:
        print(f"config error in {path_str}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


def list_experiments(as_json: bool) -> str:
    required = {
        "swap": ["initial_state (2 qubits)"],
        "random5": ["initial_state (5 qubits)", "seed"],
        "ladder": ["initial_state (3 qutrits)", "r_party"],
    }
    integrator_fields = {
        "var_restrict_first": ["alpha"],
        "var_discretize_first": ["alpha"],
        "bea_truncation": ["bea_order", "bea_scheme (optional)"],
    }
    if as_json:
        data = {
            "experiments": list(EXPERIMENTS),
            "integrators": list(INTEGRATORS),
            "compatibility": {
                exp: [integ for integ in INTEGRATORS if compatible(exp, integ)]
                for exp in EXPERIMENTS
            },
            "required_fields": {
                "common": ["experiment", "integrator", "dt", "t_final",
                           "initial_state", "out_path"],
                "per_experiment": required,
                "per_integrator": integrator_fields,
            },
        }
        return json.dumps(data, indent=2, sort_keys=True)
    width = max(len(e) for e in EXPERIMENTS) + 2
    lines = ["experiment x integrator compatibility:", ""]
    header = " " * width + "  ".join(f"{i:<20}" for i in INTEGRATORS)
    lines.append(header.rstrip())
    for exp in EXPERIMENTS:
        marks = ["yes" if compatible(exp, integ) else "no" for integ in INTEGRATORS]
        lines.append(f"{exp:<{width}}" + "  ".join(f"{m:<20}" for m in marks))
    lines.append("")
    lines.append("required fields: experiment, integrator, dt, t_final, "
                 "initial_state, out_path")
    for exp, extras in required.items():
        lines.append(f"  {exp}: {', '.join(extras)}")
    for integ, extras in integrator_fields.items():
        lines.append(f"  {integ}: {', '.join(extras)}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sepdyn",
        description="Run restricted/unrestricted quantum dynamics experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    run_parser = sub.add_parser("run", help="execute a config file or directory")
    run_parser.add_argument("--config", required=True,
                            help="JSON config file, or a directory of configs")
    run_parser.add_argument("--override", action="append", default=[],
                            metavar="KEY=VALUE",
                            help="dot-path config override, value parsed as JSON")
    run_parser.add_argument("--jobs", type=int, default=1,
                            help="worker processes for a config directory")

    list_parser = sub.add_parser("list", help="show experiments and integrators")
    list_parser.add_argument("--json", action="store_true",
                             help="machine-readable listing")

    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments(args.json))
        return EXIT_OK
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    config_path = Path(args.config)
    if config_path.is_dir():
        files = sorted(str(p) for p in config_path.glob("*.json"))
        if not files:
            print(f"no .json configs in {config_path}", file=sys.stderr)
            return EXIT_CONFIG
        if args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                codes = list(pool.map(_run_file, files,
                                      [tuple(args.override)] * len(files)))
        else:
            codes = [_run_file(f, tuple(args.override)) for f in files]
        return max(codes)
    return _run_file(str(config_path), tuple(args.override))


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
