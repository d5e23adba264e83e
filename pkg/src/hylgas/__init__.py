"""Thermodynamics and condensate structure of the partial-HYL interacting
bosonic loop soup, cross-validated against exact finite-volume cycle-count
computations and Metropolis sampling."""

__version__ = "0.1.0"

from .condensate import (
    CondensateSolution,
    CriticalPoint,
    GMFSolution,
    HYLParams,
    b_critical,
    critical_density_hyl,
    excess_objective,
    excess_objective_prime,
    free_energy,
    gmf_solve,
    pressure_hyl,
    rho_gc,
    solve_rho_bar,
)
from .errors import (
    BracketError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    EnumerationCapError,
)
from .finite_volume import (
    CycleCounts,
    FiniteVolumeModel,
    HYLPartition,
    SectorCheck,
    canonical_hyl_partition,
    default_cutoff,
    free_canonical_pmf,
    intensity,
    long_loop_density_exact,
    long_mass_pmf,
    short_sector_check,
)
from .full_hyl import (
    CycleDensityVector,
    FullRateMinimum,
    full_rate,
    full_rate_grad,
    minimize_full_rate,
    pressure_gap,
)
from .monte_carlo import (
    EstimateReport,
    MetropolisKernel,
    SamplerConfig,
    estimate_gc_density,
    estimate_long_density,
    sample_canonical_hyl,
    sample_grand_canonical,
)
from .special import (
    DEFAULT_POLICY,
    PrecisionPolicy,
    bridge_return_weight,
    lambert_w_m1,
    polylog,
    polylog_minus_zeta,
    zeta,
)
from .thermo import (
    AsymptoticCheck,
    ModelParams,
    ThermoPoint,
    a_scale,
    asymptotics_validator,
    critical_density,
    density,
    density_prime,
    mu_of_rho,
    pressure,
    rate_I,
    rate_I_prime,
    rate_I_second,
    thermo_point,
)
