"""Empirical-null parameters and non-null proportion from generalized Fourier functionals."""

from .errors import *  # noqa: F401,F403
from .estimators import (
    EstimateReport,
    EstimatorConfig,
    estimate,
    estimate_eps_known,
    estimate_eps_plugin,
    estimate_null_gem,
    estimate_null_gev,
    t_n,
)
from .fourier import char, gev_eps_functional, gev_sigma0_functional, gev_u0_functional
from .gft import (
    OMEGA,
    GcharPair,
    NullFunctionalInput,
    eps_functional,
    gchar,
    perturbation_bound_check,
    sigma0_functional,
    u0_functional,
)
from .harness import ExperimentPlan, ExperimentResult, builtin_plans, run_cell, run_plan
from .mixtures import (
    Const,
    GammaShifted,
    MixtureSpec,
    PointMass,
    ProductLaw,
    SampleSet,
    Uniform,
    population_gchar,
    sample_block_dependent,
    sample_iid,
)

__version__ = "0.1.0"
