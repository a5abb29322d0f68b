import numpy as np
import pytest

from sepdyn.analysis import (
    DiagnosticsSeries,
    convergence_order,
    overlap_series,
    purity_series,
    rate_of_change_nuclear,
)
from sepdyn.exact_swap import SwapInitialData, exact_se_swap, exact_sse_swap
from sepdyn.hamiltonians import local_sum_hamiltonian, random_hermitian, swap_hamiltonian
from sepdyn.propagators import SplittingScheme, Trajectory, evolve, se_evolve
from sepdyn.states import ComponentState, FullState, nuclear_norm, tensor_product

from conftest import random_ket
from test_reduced import random_local


def swap_trajectories(fig1_state, dt=0.01, steps=100):
    H = swap_hamiltonian(2)
    sse = evolve(SplittingScheme.LIE_TROTTER, H, fig1_state, dt, steps)
    se = se_evolve(H, tensor_product(fig1_state), dt, steps)
    return se, sse


def exact_trajectories(fig1_state, times):
    """Full-state trajectories built from the closed forms only."""
    data = SwapInitialData(fig1_state.parts[0], fig1_state.parts[1])
    se_states = [exact_se_swap(data, t) for t in times]
    sse_states = [tensor_product(exact_sse_swap(data, t)) for t in times]
    dims = (2, 2)
    return (
        Trajectory(times, full_states=se_states),
        Trajectory(times, full_states=sse_states),
    )


class TestOverlapSeries:
    def test_unit_at_identical_start(self, fig1_state):
        se, sse = swap_trajectories(fig1_state, steps=10)
        overlap = overlap_series(se, sse)
        assert overlap[0] == pytest.approx(1.0)

    def test_closed_form_value_at_unit_time(self, fig1_state):
        # Hand-derived scalar: with theta = |q| t,
        #   cos(t) (cos th - i|q| sin th)^2 + i sin(t) (|q| cos th - i sin th)^2.
        times = np.linspace(0.0, 1.0, 101)
        se, sse = exact_trajectories(fig1_state, times)
        overlap = overlap_series(se, sse)
        q = 1 / np.sqrt(2)
        theta = q * 1.0
        expected = (np.cos(1.0) * (np.cos(theta) - 1j * q * np.sin(theta)) ** 2
                    + 1j * np.sin(1.0) * (q * np.cos(theta) - 1j * np.sin(theta)) ** 2)
        assert overlap[-1] == pytest.approx(expected, abs=1e-12)
        assert overlap[-1] == pytest.approx(
            0.7859985868852615 - 0.4893285620061665j, abs=1e-12
        )

    def test_decoupled_hamiltonian_keeps_unit_modulus(self, rng):
        H = local_sum_hamiltonian([random_local(rng), random_local(rng)], (2, 2))
        state = ComponentState((random_ket(rng), random_ket(rng)))
        sse = evolve(SplittingScheme.LIE_TROTTER, H, state, 0.05, 80)
        se = se_evolve(H, tensor_product(state), 0.05, 80)
        overlap = overlap_series(se, sse)
        # Equal up to a running global phase, so the modulus pins to one.
        assert np.max(np.abs(np.abs(overlap) - 1.0)) < 1e-10

    def test_cauchy_schwarz_bound(self, rng):
        H = random_hermitian(2, seed=20)
        state = ComponentState((random_ket(rng), random_ket(rng)))
        sse = evolve(SplittingScheme.STRANG, H, state, 0.02, 200)
        se = se_evolve(H, tensor_product(state), 0.02, 200)
        assert np.max(np.abs(overlap_series(se, sse))) <= 1 + 1e-10

    def test_grid_mismatch_rejected(self, fig1_state):
        se, _ = swap_trajectories(fig1_state, steps=10)
        _, sse = swap_trajectories(fig1_state, dt=0.02, steps=10)
        with pytest.raises(ValueError):
            overlap_series(se, sse)


class TestRateOfChangeNuclear:
    def test_constant_trajectory_is_zero(self, rng):
        psi = FullState(random_ket(rng, 4).amplitudes, (2, 2))
        traj = Trajectory(0.1 * np.arange(5), full_states=[psi] * 5)
        assert np.allclose(rate_of_change_nuclear(traj, 0.1), 0.0)

    def test_matches_commutator_oracle_for_unitary_flow(self, fig1_state):
        # d rho / dt = -i [H, rho], evaluated exactly and compared to the
        # centered differences; agreement at second order in the grid step.
        H = swap_hamiltonian(2)
        dt, steps = 0.002, 500
        traj = se_evolve(H, tensor_product(fig1_state), dt, steps)
        rates = rate_of_change_nuclear(traj, dt)
        mid = steps // 2
        psi = traj.full_states[mid].amplitudes
        rho = np.outer(psi, psi.conj())
        commutator = -1j * (H.entries @ rho - rho @ H.entries)
        assert rates[mid] == pytest.approx(nuclear_norm(commutator), abs=5 * dt**2)

    def test_time_independent_along_unitary_orbit(self, fig1_state):
        H = swap_hamiltonian(2)
        traj = se_evolve(H, tensor_product(fig1_state), 0.002, 400)
        rates = rate_of_change_nuclear(traj, 0.002)
        interior = rates[1:-1]
        assert np.max(interior) - np.min(interior) < 5 * 0.002**2

    def test_invariant_under_global_phase(self, fig1_state):
        H = swap_hamiltonian(2)
        dt, steps = 0.01, 60
        traj = se_evolve(H, tensor_product(fig1_state), dt, steps)
        phased = [
            FullState(np.exp(1j * np.sin(t)) * s.amplitudes, s.dims)
            for t, s in zip(traj.times, traj.full_states)
        ]
        traj_phased = Trajectory(traj.times, full_states=phased)
        assert np.allclose(
            rate_of_change_nuclear(traj, dt),
            rate_of_change_nuclear(traj_phased, dt),
            atol=1e-10,
        )

    def test_needs_three_points(self, rng):
        psi = FullState(random_ket(rng, 4).amplitudes, (2, 2))
        traj = Trajectory(np.array([0.0, 0.1]), full_states=[psi, psi])
        with pytest.raises(ValueError):
            rate_of_change_nuclear(traj, 0.1)


class TestPuritySeries:
    def test_restricted_run_has_pure_marginals(self, fig1_state):
        _, sse = swap_trajectories(fig1_state, steps=200)
        for j in range(2):
            assert np.max(np.abs(purity_series(sse, j) - 1.0)) < 1e-10

    def test_half_swapped_state_is_maximally_mixed(self):
        bell_like = FullState(np.array([0, 1, -1j, 0]) / np.sqrt(2), (2, 2))
        traj = Trajectory(np.array([0.0]), full_states=[bell_like])
        assert purity_series(traj, 0)[0] == pytest.approx(0.5)
        assert purity_series(traj, 1)[0] == pytest.approx(0.5)

    def test_product_basis_state(self, fig1_state):
        traj = Trajectory(np.array([0.0]), full_states=[tensor_product(fig1_state)])
        assert purity_series(traj, 0)[0] == pytest.approx(1.0)


class TestConvergenceOrder:
    def test_exact_power_laws(self):
        dts = np.array([0.1, 0.05, 0.025, 0.0125])
        assert convergence_order(dts, 3.7 * dts) == pytest.approx(1.0, abs=1e-12)
        assert convergence_order(dts, 0.2 * dts**2) == pytest.approx(2.0, abs=1e-12)

    def test_end_to_end_first_order_measurement(self, fig1_state):
        H = swap_hamiltonian(2)
        data = SwapInitialData(fig1_state.parts[0], fig1_state.parts[1])
        exact = exact_sse_swap(data, 1.0)
        exact_vec = np.concatenate([p.amplitudes for p in exact.parts])
        dts = [0.1, 0.05, 0.02]
        errors = []
        for dt in dts:
            traj = evolve(SplittingScheme.LIE_TROTTER, H, fig1_state, dt,
                          int(round(1.0 / dt)))
            vec = np.concatenate(
                [p.amplitudes for p in traj.component_states[-1].parts]
            )
            errors.append(np.linalg.norm(vec - exact_vec))
        assert convergence_order(dts, errors) == pytest.approx(1.0, abs=0.1)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            convergence_order([0.1, 0.05], [1.0, 0.5])
        with pytest.raises(ValueError):
            convergence_order([0.1, 0.05, -0.01], [1.0, 0.5, 0.1])
        with pytest.raises(ValueError):
            convergence_order([0.1, 0.05, 0.02], [1.0, 0.5, 0.0])


class TestDiagnosticsSeries:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DiagnosticsSeries(np.arange(3.0), {"x": np.ones(4)})

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            DiagnosticsSeries(np.arange(3.0), {"x": np.array([1.0, np.inf, 0.0])})
