"""Numerics for separability-restricted quantum dynamics.

The package integrates multipartite pure-state dynamics both without
constraints and restricted to product states, using operator splitting and
variational integrators, and provides the diagnostics used to compare the
two evolutions.
"""

__version__ = "0.1.0"

from .states import (
    ComponentState,
    DensityMatrix,
    FullState,
    Ket,
    bloch_vector,
    gellmann_vector,
    inner,
    nuclear_norm,
    partial_trace,
    tensor_product,
)
from .hamiltonians import (
    CouplingTensor,
    HermitianOperator,
    correlator_hamiltonian,
    ladder_operators,
    local_sum_hamiltonian,
    r_party_eta,
    random_hermitian,
    swap_hamiltonian,
)
from .reduced import DegenerateStateError, partially_reduced
from .propagators import (
    SplittingScheme,
    Trajectory,
    evolve,
    hermitian_expm_apply,
    lie_trotter_step,
    se_evolve,
    se_flow,
    sse_component_flow,
    strang_step,
)
from .exact_swap import (
    SwapInitialData,
    exact_se_swap,
    exact_sse_swap,
    lie_trotter_swap_closed_form,
)

__all__ = [
    "ComponentState",
    "CouplingTensor",
    "DegenerateStateError",
    "DensityMatrix",
    "FullState",
    "HermitianOperator",
    "Ket",
    "SplittingScheme",
    "SwapInitialData",
    "Trajectory",
    "bloch_vector",
    "correlator_hamiltonian",
    "evolve",
    "exact_se_swap",
    "exact_sse_swap",
    "gellmann_vector",
    "hermitian_expm_apply",
    "inner",
    "ladder_operators",
    "lie_trotter_step",
    "lie_trotter_swap_closed_form",
    "local_sum_hamiltonian",
    "nuclear_norm",
    "partial_trace",
    "partially_reduced",
    "r_party_eta",
    "random_hermitian",
    "se_evolve",
    "se_flow",
    "sse_component_flow",
    "strang_step",
    "swap_hamiltonian",
    "tensor_product",
]
