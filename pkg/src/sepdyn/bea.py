"""Modified differential equations for the splitting schemes on the exchange
system, and an adaptive Runge-Kutta solver for their truncations.

The modified right-hand sides are formal power series in the step size; the
truncation order selects how many correction terms beyond the restricted
equations are kept. Truncations are solved with an embedded Dormand-Prince
5(4) pair so the reference solutions sit far below the deviations being
measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import swap_hamiltonian
from .propagators import SplittingScheme
from .reduced import contract_reduced

TROTTER_ORDERS = (0, 1, 2)
STRANG_ORDERS = (0, 2)
STEP_UNDERFLOW = 1e-14


class StepSizeUnderflowError(RuntimeError):
    """The adaptive controller drove the step size below 1e-14."""


def trotter_modified_rhs(order: int, dt: float, a: np.ndarray, b: np.ndarray):
    """Right-hand sides of the sequential-splitting modified equations.

    Order 0 reproduces the restricted equations; order 1 adds the
    odd-in-dt projector and identity corrections with opposite signs for
    the two components; order 2 adds the shared second-order projector
    term. The transition amplitude q is evaluated at the current state.
    """
    if order not in TROTTER_ORDERS:
        raise ValueError(f"truncation order must be one of {TROTTER_ORDERS}")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    q = np.vdot(a, b)
    mod_q2 = abs(q) ** 2
    first = 1.0 if order >= 1 else 0.0
    second = 1.0 if order >= 2 else 0.0
    quad = (1.0 / 6.0) * 1j * dt**2 * (mod_q2 - 1.0) * second
    da = (-1j - 0.5 * dt * first - quad) * (b * np.vdot(b, a)) \
        + 0.5 * dt * mod_q2 * first * a
    db = (-1j + 0.5 * dt * first - quad) * (a * np.vdot(a, b)) \
        - 0.5 * dt * mod_q2 * first * b
    return da, db


def strang_modified_rhs(order: int, dt: float, a: np.ndarray, b: np.ndarray):
    """Right-hand sides of the palindromic-splitting modified equations.

    The series contains no odd powers of dt; order 2 adds the quadratic
    corrections with coefficients 1/24 and 1/8.
    """
    if order not in STRANG_ORDERS:
        raise ValueError(f"truncation order must be one of {STRANG_ORDERS}")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    q = np.vdot(a, b)
    mod_q2 = abs(q) ** 2
    second = 1.0 if order >= 2 else 0.0
    da = -1j * ((1.0 - dt**2 / 24.0 * (1.0 + 2.0 * mod_q2) * second)
                * (b * np.vdot(b, a))
                + 0.125 * dt**2 * mod_q2 * second * a)
    db = -1j * ((1.0 - dt**2 / 24.0 * (1.0 - 4.0 * mod_q2) * second)
                * (a * np.vdot(a, b))
                - 0.125 * dt**2 * mod_q2 * second * b)
    return da, db


@dataclass(frozen=True)
class ModifiedRHS:
    """Callable modified vector field on the stacked pair y = [a; b]."""

    scheme: SplittingScheme
    truncation_order: int
    dt: float

    def __post_init__(self):
        valid = TROTTER_ORDERS if self.scheme is SplittingScheme.LIE_TROTTER else STRANG_ORDERS
        if self.truncation_order not in valid:
            raise ValueError(
                f"truncation order {self.truncation_order} invalid for {self.scheme}"
            )

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        half = y.size // 2
        a, b = y[:half], y[half:]
        if self.scheme is SplittingScheme.LIE_TROTTER:
            da, db = trotter_modified_rhs(self.truncation_order, self.dt, a, b)
        else:
            da, db = strang_modified_rhs(self.truncation_order, self.dt, a, b)
        return np.concatenate([da, db])


def modified_hamiltonian(q: complex, dt: float) -> np.ndarray:
    """Step-size-dependent effective generator behind the sequential scheme.

    A complex combination of the exchange operator and the identity on two
    qubits, truncated at dt^2; not Hermitian for dt > 0. The transition
    amplitude enters as a fixed parameter.
    """
    mod_q2 = abs(q) ** 2
    swap = swap_hamiltonian(2).entries
    coeff = 1.0 - 0.5j * dt + dt**2 / 6.0 * (mod_q2 - 1.0)
    return coeff * swap + 0.5j * dt * mod_q2 * np.eye(4, dtype=complex)


def modified_hamiltonian_sse_rhs(q: complex, dt: float, a: np.ndarray, b: np.ndarray):
    """Restricted vector field generated by the modified operator.

    The component that the sequential scheme updates first evolves under the
    reduction of the modified operator itself; the component updated second
    evolves under the reduction of its adjoint. (The scheme is not symmetric
    under exchanging the components, and for a non-self-adjoint generator the
    two Euler-Lagrange equations of the time-dependent pairing are no longer
    complex conjugates, which is exactly this adjoint split.)
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    h_mod = modified_hamiltonian(q, dt)
    dims = (a.size, b.size)
    red_a = contract_reduced(h_mod, [a, b], 0, dims) / np.real(np.vdot(b, b))
    red_b = contract_reduced(h_mod.conj().T, [a, b], 1, dims) / np.real(np.vdot(a, a))
    return -1j * (red_a @ a), -1j * (red_b @ b)


@dataclass(frozen=True)
class OdeSolution:
    """Accepted solver grid, interpolated samples, and step statistics."""

    times: np.ndarray
    states: np.ndarray
    t_eval: np.ndarray | None
    y_eval: np.ndarray | None
    steps: int
    rejected: int
    rhs_evals: int

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("solver times must be increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("solver states must be finite")


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between the 5th- and embedded 4th-order weights.
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, tol: float) -> float:
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, tol, direction=1.0):
    scale = tol + tol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def rk_integrate(rhs, y0, t_span: tuple[float, float], tol: float,
                 t_eval=None, max_step: float | None = None) -> OdeSolution:
    """Adaptive embedded Runge-Kutta 5(4) integration with PI step control.

    ``rhs`` is any callable f(t, y) -> dy on complex vectors; pairs such as
    (a, b) are passed stacked. Samples requested through ``t_eval`` are
    filled by piecewise cubic Hermite interpolation on the accepted steps,
    which is fourth-order accurate; the step size is capped so that the
    interpolation remainder stays at the level of ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t_span must be increasing")
    if isinstance(y0, tuple):
        y0 = np.concatenate([np.asarray(p, dtype=complex) for p in y0])
    y = np.asarray(y0, dtype=complex).copy()

    # Cubic Hermite remainder is h^4 |y''''| / 384; keep it at the tolerance
    # assuming order-one derivatives, as for the unit-scale fields here.
    interp_cap = (384.0 * tol) ** 0.25
    h_cap = min(max_step, interp_cap) if max_step is not None else interp_cap
    h_cap = min(h_cap, t1 - t0)

    t_eval = None if t_eval is None else np.asarray(t_eval, dtype=float)
    if t_eval is not None:
        if np.any(t_eval < t0 - 1e-12) or np.any(t_eval > t1 + 1e-12):
            raise ValueError("t_eval must lie inside t_span")
        y_eval = np.empty((t_eval.size, y.size), dtype=complex)
        eval_cursor = 0
    else:
        y_eval = None

    times = [t0]
    states = [y.copy()]
    t = t0
    f_first = rhs(t, y)
    rhs_evals = 1
    h = min(_initial_step(rhs, t, y, f_first, tol), h_cap)
    rhs_evals += 1
    steps = 0
    rejected = 0
    err_prev = 1.0
    k = np.empty((7, y.size), dtype=complex)
    k[0] = f_first

    while t < t1 - 1e-14:
        h = min(h, h_cap, t1 - t)
        if h < STEP_UNDERFLOW:
            raise StepSizeUnderflowError(f"step size underflow at t={t}")
        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ k[:i])
            k[i] = rhs(t + _DP_C[i] * h, yi)
        rhs_evals += 6
        y_new = y + h * (_DP_B @ k)
        err_vec = h * (_DP_E @ k)
        err = _error_norm(err_vec, y, y_new, tol)

        if err <= 1.0:
            t_new = t + h
            if y_eval is not None:
                # Fill every requested sample inside the accepted interval.
                while eval_cursor < t_eval.size and t_eval[eval_cursor] <= t_new + 1e-14:
                    theta = np.clip((t_eval[eval_cursor] - t) / h, 0.0, 1.0)
                    h00 = 2 * theta**3 - 3 * theta**2 + 1
                    h10 = theta**3 - 2 * theta**2 + theta
                    h01 = -2 * theta**3 + 3 * theta**2
                    h11 = theta**3 - theta**2
                    y_eval[eval_cursor] = (
                        h00 * y + h10 * h * k[0] + h01 * y_new + h11 * h * k[6]
                    )
                    eval_cursor += 1
            t, y = t_new, y_new
            times.append(t)
            states.append(y.copy())
            steps += 1
            k[0] = k[6]  # first-same-as-last
            factor = 0.9 * err ** -0.14 * err_prev**0.08 if err > 0 else 5.0
            err_prev = max(err, 1e-10)
        else:
            rejected += 1
            factor = max(0.2, 0.9 * err**-0.2)
            factor = min(factor, 1.0)
        h = h * float(np.clip(factor, 0.2, 5.0))

    if y_eval is not None and eval_cursor < t_eval.size:
        y_eval[eval_cursor:] = y  # samples at the right endpoint
    return OdeSolution(
        times=np.asarray(times),
        states=np.stack(states),
        t_eval=t_eval,
        y_eval=y_eval,
        steps=steps,
        rejected=rejected,
        rhs_evals=rhs_evals,
    )
