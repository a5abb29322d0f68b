"""Exact flows and splitting integrators for the restricted dynamics.

The unrestricted flow is a matrix exponential evaluated through the
eigendecomposition of the (Hermitian) Hamiltonian. The restricted equations
are integrated by composing the exactly-solvable one-component flows:
sequentially for the first-order scheme, palindromically for the
second-order one. Every sub-step is norm preserving, so the reconstructed
product state keeps its norm to machine precision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import HermitianOperator
from .reduced import partially_reduced
from .states import ComponentState, FullState, Ket, tensor_product

EXPM_HERMITIAN_TOL = 1e-10


class SplittingScheme(enum.Enum):
    LIE_TROTTER = "lie_trotter"
    STRANG = "strang"


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid time series of states plus scalar diagnostics."""

    times: np.ndarray
    component_states: list[ComponentState] | None = None
    full_states: list[FullState] | None = None
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-d array")
        if times.size > 1:
            spacings = np.diff(times)
            if np.any(spacings <= 0):
                raise ValueError("times must be strictly increasing")
            if np.max(np.abs(spacings - spacings[0])) > 1e-9 * max(1.0, abs(spacings[0])):
                raise ValueError("times must be uniformly spaced")
        for name, stored in (
            ("component_states", self.component_states),
            ("full_states", self.full_states),
        ):
            if stored is not None and len(stored) != times.size:
                raise ValueError(f"{name} length does not match times")
        for key, series in self.diagnostics.items():
            if np.asarray(series).shape[0] != times.size:
                raise ValueError(f"diagnostic '{key}' length does not match times")
        object.__setattr__(self, "times", times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0


def _check_hermitian(matrix: np.ndarray):
    if np.max(np.abs(matrix - matrix.conj().T)) > EXPM_HERMITIAN_TOL:
        raise ValueError("matrix exponential input is not Hermitian to 1e-10")


def hermitian_expm_apply(H: HermitianOperator, t: float, v):
    """Apply exp(-i t H) to a state via the eigendecomposition of H."""
    _check_hermitian(H.entries)
    vec = v.amplitudes if hasattr(v, "amplitudes") else np.asarray(v, dtype=complex)
    if vec.size != H.side:
        raise ValueError(f"state length {vec.size} does not match operator side {H.side}")
    evals, evecs = np.linalg.eigh(H.entries)
    out = evecs @ (np.exp(-1j * t * evals) * (evecs.conj().T @ vec))
    if isinstance(v, Ket):
        return Ket(out)
    if isinstance(v, FullState):
        return FullState(out, v.dims)
    return out


class HermitianPropagator:
    """Reusable exp(-i t H) built on a single eigendecomposition of H."""

    def __init__(self, H: HermitianOperator):
        _check_hermitian(H.entries)
        self.dims = H.dims
        self.evals, self.evecs = np.linalg.eigh(H.entries)

    def apply(self, t: float, vec: np.ndarray) -> np.ndarray:
        return self.evecs @ (np.exp(-1j * t * self.evals) * (self.evecs.conj().T @ vec))

    def states_on_grid(self, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """All exp(-i t H) psi0 for t in times, as a (len(times), dim) array."""
        coeffs = self.evecs.conj().T @ psi0
        phases = np.exp(-1j * np.outer(times, self.evals))
        return (phases * coeffs) @ self.evecs.T


def se_flow(H: HermitianOperator, t: float, psi0: FullState) -> FullState:
    """Unrestricted propagation of the full state by exp(-i t H)."""
    return hermitian_expm_apply(H, t, psi0)


def sse_component_flow(H: HermitianOperator, state: ComponentState, k: int, t: float) -> Ket:
    """Flow of the k-th restricted equation with the other components frozen."""
    reduced = partially_reduced(H, state, k)
    return hermitian_expm_apply(reduced, t, state.parts[k])


def _substep(H: HermitianOperator, parts: list[Ket], dims, k: int, t: float) -> Ket:
    state = ComponentState(tuple(parts), dims)
    return sse_component_flow(H, state, k, t)


def lie_trotter_step(H: HermitianOperator, state: ComponentState, dt: float) -> ComponentState:
    """One first-order splitting step: update components one at a time.

    Component l sees components 0..l-1 already updated and l+1..N-1 still at
    their previous values.
    """
    parts = list(state.parts)
    for l in range(len(parts)):
        parts[l] = _substep(H, parts, state.dims, l, dt)
    return ComponentState(tuple(parts), state.dims)


def strang_step(H: HermitianOperator, state: ComponentState, dt: float) -> ComponentState:
    """One palindromic second-order splitting step.

    For two components the composition is: half-step on component 1, full
    step on component 0, half-step on component 1. For more components:
    half-steps on 0..N-2 ascending, a full step on N-1, then half-steps on
    N-2..0 descending. Every sub-step sees the most recently updated context.
    """
    n = len(state.parts)
    if n == 2:
        sequence = [(1, 0.5 * dt), (0, dt), (1, 0.5 * dt)]
    else:
        ascending = [(l, 0.5 * dt) for l in range(n - 1)]
        sequence = ascending + [(n - 1, dt)] + ascending[::-1]
    parts = list(state.parts)
    for l, tau in sequence:
        parts[l] = _substep(H, parts, state.dims, l, tau)
    return ComponentState(tuple(parts), state.dims)


_STEP_MAPS = {
    SplittingScheme.LIE_TROTTER: lie_trotter_step,
    SplittingScheme.STRANG: strang_step,
}


def evolve(scheme: SplittingScheme, H: HermitianOperator, state0: ComponentState,
           dt: float, steps: int) -> Trajectory:
    """Iterate a splitting step map and record the trajectory.

    Stores the component states, their tensor-product reconstructions, and
    the per-step norm of the reconstructed full state.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    step_map = _STEP_MAPS[scheme]
    components = [state0]
    fulls = [tensor_product(state0)]
    state = state0
    for _ in range(steps):
        state = step_map(H, state, dt)
        components.append(state)
        fulls.append(tensor_product(state))
    times = dt * np.arange(steps + 1)
    norms = np.array([f.norm() for f in fulls])
    return Trajectory(times, component_states=components, full_states=fulls,
                      diagnostics={"norm": norms})


def se_evolve(H: HermitianOperator, psi0: FullState, dt: float, steps: int) -> Trajectory:
    """Unrestricted trajectory on a uniform grid, decomposing H only once."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    propagator = HermitianPropagator(H)
    times = dt * np.arange(steps + 1)
    grid = propagator.states_on_grid(psi0.amplitudes, times)
    fulls = [FullState(row, psi0.dims) for row in grid]
    norms = np.array([f.norm() for f in fulls])
    return Trajectory(times, full_states=fulls, diagnostics={"norm": norms})
