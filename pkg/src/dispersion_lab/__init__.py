"""Numerical laboratory for 1-D Schrodinger evolution with potential and
white-noise dispersion: scattering data, spectral calculus, Brownian
ensembles and decay/mixed-norm experiments."""

__version__ = "0.1.0"

from .grid_model import Grid, PotentialGrid, PotentialSpec, lambda0, sample_potential, weighted_l1_norm
from .scattering import (
    JostFunction,
    ScatteringData,
    detect_resonance,
    jost_solution,
    resolvent_kernel_jost,
    scattering_coefficients,
    wronskian,
)
from .spectral_operator import (
    DiscreteHamiltonian,
    SpectralDensityEstimate,
    born_series_apply,
    build_hamiltonian,
    free_resolvent_kernel,
    project_ac,
    propagate,
    stone_spectral_density,
)
from .stochastic import (
    BrownianEnsemble,
    PathSolution,
    euler_maruyama_ito,
    sample_brownian,
    time_changed_propagate,
)
from .estimates import (
    EstimateReport,
    MixedNormSpec,
    admissible_pair,
    fit_decay_exponent,
    lp_norm_x,
    mixed_norm,
    mu_homogeneous,
    mu_inhomogeneous,
)

__all__ = [
    "Grid",
    "PotentialGrid",
    "PotentialSpec",
    "lambda0",
    "sample_potential",
    "weighted_l1_norm",
    "JostFunction",
    "ScatteringData",
    "detect_resonance",
    "jost_solution",
    "resolvent_kernel_jost",
    "scattering_coefficients",
    "wronskian",
    "DiscreteHamiltonian",
    "SpectralDensityEstimate",
    "born_series_apply",
    "build_hamiltonian",
    "free_resolvent_kernel",
    "project_ac",
    "propagate",
    "stone_spectral_density",
    "BrownianEnsemble",
    "PathSolution",
    "euler_maruyama_ito",
    "sample_brownian",
    "time_changed_propagate",
    "EstimateReport",
    "MixedNormSpec",
    "admissible_pair",
    "fit_decay_exponent",
    "lp_norm_x",
    "mixed_norm",
    "mu_homogeneous",
    "mu_inhomogeneous",
]
