"""Partial reduction of a full Hamiltonian against component context states.

Reduction contracts the full operator with the bra/ket of every subsystem
except the one kept, then divides by the squared norms of the contracted
states, so unnormalized contexts give the same result as normalized ones.
"""

from __future__ import annotations

import numpy as np

from .hamiltonians import HermitianOperator
from .states import ComponentState

DEGENERATE_NORM_TOL = 1e-14


class DegenerateStateError(ValueError):
    """A context state has numerically zero norm, so reduction is undefined."""


def contract_reduced(matrix: np.ndarray, vectors: list[np.ndarray], keep: int,
                     dims: tuple[int, ...]) -> np.ndarray:
    """Raw reduction kernel without Hermiticity checks or normalization.

    Contracts row axis j with conj(vectors[j]) and column axis j with
    vectors[j] for every j != keep, returning a dims[keep]-square matrix.
    """
    n = len(dims)
    tensor = matrix.reshape(dims + dims)
    operands = [tensor, list(range(2 * n))]
    for j in range(n):
        if j == keep:
            continue
        operands.extend([np.conj(vectors[j]), [j]])
        operands.extend([vectors[j], [n + j]])
    return np.einsum(*operands, [keep, n + keep])


def partially_reduced(H: HermitianOperator, state: ComponentState, k: int) -> HermitianOperator:
    """Effective subsystem-k operator given the other subsystems' states."""
    dims = state.dims
    if H.dims != dims:
        raise ValueError(f"operator dims {H.dims} do not match state dims {dims}")
    n = len(dims)
    if not 0 <= k < n:
        raise ValueError(f"subsystem index {k} out of range for {n} subsystems")
    vectors = state.vectors()
    denom = 1.0
    for j, vec in enumerate(vectors):
        if j == k:
            continue
        nrm2 = float(np.real(np.vdot(vec, vec)))
        if nrm2 < DEGENERATE_NORM_TOL**2:
            raise DegenerateStateError(f"context state {j} has norm below 1e-14")
        denom *= nrm2
    reduced = contract_reduced(H.entries, vectors, k, dims) / denom
    # Symmetrize away the contraction's floating-point skew before validating.
    reduced = 0.5 * (reduced + reduced.conj().T)
    return HermitianOperator(reduced, (dims[k],))
