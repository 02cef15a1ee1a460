"""Two-bath spin-boson ground states: chain mapping, ED, DMRG with optimized boson bases, variational ansatz."""

from ._core import (
    BasisPolicy,
    ContractViolation,
    DomainError,
    ExperimentConfig,
    ObservableReport,
    OrderParameter,
    Phase,
    Solver,
    chain_coefficients,
    classify_phase,
    csv_header,
    laguerre_chain,
    run_sweep,
    solve_point,
    version,
)

__version__ = version()
