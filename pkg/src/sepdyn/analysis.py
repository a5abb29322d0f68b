"""Cross-trajectory diagnostics.

Overlap between restricted and unrestricted runs, finite-difference rate of
change of the state projector in nuclear norm, per-subsystem purity, and a
log-log slope estimator for convergence studies. Everything here works on
stored trajectories, so one implementation serves all integrators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .propagators import Trajectory
from .states import tensor_product


@dataclass(frozen=True)
class DiagnosticsSeries:
    """Named time series sharing one grid."""

    times: np.ndarray
    series: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        for name, values in self.series.items():
            arr = np.asarray(values)
            if arr.shape[0] != times.size:
                raise ValueError(f"series '{name}' length does not match times")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"series '{name}' contains non-finite values")
        object.__setattr__(self, "times", times)


def _full_state_matrix(traj: Trajectory) -> np.ndarray:
    """Stack the trajectory's full states as a (n_times, dim) array."""
    if traj.full_states is not None:
        return np.stack([s.amplitudes for s in traj.full_states])
    if traj.component_states is not None:
        return np.stack([tensor_product(s).amplitudes for s in traj.component_states])
    raise ValueError("trajectory stores no states")


def _trajectory_dims(traj: Trajectory) -> tuple[int, ...]:
    if traj.full_states is not None:
        return traj.full_states[0].dims
    return traj.component_states[0].dims


def overlap_series(traj_se: Trajectory, traj_sse: Trajectory) -> np.ndarray:
    """Pointwise inner product <psi_se(t)|psi_sse(t)> on a shared grid."""
    if traj_se.times.shape != traj_sse.times.shape or \
            np.max(np.abs(traj_se.times - traj_sse.times)) > 1e-12:
        raise ValueError("trajectories are not on the same time grid")
    left = _full_state_matrix(traj_se)
    right = _full_state_matrix(traj_sse)
    return np.einsum("ti,ti->t", left.conj(), right)


def projector_series(traj: Trajectory) -> np.ndarray:
    """|psi(t)><psi(t)| for every grid point, shape (n_times, dim, dim)."""
    states = _full_state_matrix(traj)
    return np.einsum("ti,tj->tij", states, states.conj())


def rate_of_change_nuclear(traj: Trajectory, dt: float) -> np.ndarray:
    """Nuclear norm of the finite-difference projector derivative.

    Centered differences in the interior, one-sided at the endpoints.
    """
    rhos = projector_series(traj)
    if rhos.shape[0] < 3:
        raise ValueError("need at least three grid points")
    derivative = np.empty_like(rhos)
    derivative[1:-1] = (rhos[2:] - rhos[:-2]) / (2.0 * dt)
    derivative[0] = (rhos[1] - rhos[0]) / dt
    derivative[-1] = (rhos[-1] - rhos[-2]) / dt
    singulars = np.linalg.svd(derivative, compute_uv=False)
    return singulars.sum(axis=1)


def reduced_density_series(traj: Trajectory, k: int) -> np.ndarray:
    """Partial trace of the projector series onto subsystem k, batched."""
    dims = _trajectory_dims(traj)
    if not 0 <= k < len(dims):
        raise ValueError(f"subsystem index {k} out of range")
    states = _full_state_matrix(traj)
    before = prod(dims[:k])
    after = prod(dims[k + 1 :])
    shaped = states.reshape(-1, before, dims[k], after)
    return np.einsum("tamb,tanb->tmn", shaped, shaped.conj())


def purity_series(traj: Trajectory, k: int) -> np.ndarray:
    """tr(rho_k(t)^2) for subsystem k along the trajectory."""
    rhos = reduced_density_series(traj, k)
    return np.real(np.einsum("tij,tji->t", rhos, rhos))


def convergence_order(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if dts.size < 3 or errors.size != dts.size:
        raise ValueError("need at least three (dt, error) pairs")
    if np.any(dts <= 0) or np.any(errors <= 0):
        raise ValueError("dt and error values must be positive")
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)
