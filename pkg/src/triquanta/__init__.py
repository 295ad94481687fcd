"""Tripartite cavity-atom-mechanics simulator.

A small toolbox for a driven two-level atom whose trapped motion modulates
its cavity coupling, producing a direct photon-phonon-atom interaction:
Hamiltonians and dressed bases, multiquanta resonance analysis, Lindblad
dynamics and steady states, emission spectra and cross-correlations,
perturbative transition rates, and quantum-trajectory emission counting with
single- and two-photon dissipation.
"""

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    atom_operator,
    basis_state,
    build_space,
    dressed_state,
    expectation,
    ladder_operator,
    number_operator,
)
from .model import (
    EffectiveDerivation,
    ModelParams,
    PhysicalParams,
    boson_parity_operator,
    build_h_dressed,
    build_h_eff,
    derive_effective_params,
    dressed_basis,
    resonance_drive,
)
from .spectrum import Anticrossing, LevelScan, eigenlevels, locate_anticrossing, scan_drive
from .dynamics import (
    CollapseChannel,
    EvolutionResult,
    Liouvillian,
    evolve_closed,
    evolve_open,
    liouvillian,
    standard_channels,
    steady_state,
)
from .correlations import (
    CorrelationSeries,
    SpectrumSeries,
    cross_g2,
    emission_spectrum,
    two_time_correlation,
)
from .perturbation import (
    RateComparison,
    TransitionSpec,
    compare_rates,
    effective_coupling,
    rate_from_gap,
    w11_analytic,
    w22_analytic,
)
from .trajectories import (
    EmissionStats,
    JumpEvent,
    TrajectoryRecord,
    count_correlated_emissions,
    ensemble_average,
    run_trajectories,
    trajectory_populations,
)
