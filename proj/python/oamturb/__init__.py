"""OAM channel capacity under Kolmogorov phase turbulence."""

from ._core import (
    ConfigError,
    NumericalError,
    analytic_matrix,
    ang_mode,
    blahut_arimoto,
    capacity_curve,
    crosstalk,
    ensemble_seed,
    generate_screen,
    kolmogorov_structure_function,
    montecarlo_matrix,
    mutual_information,
    normalize,
    oam_mode,
    psd_coefficient,
    run_experiment,
    sorter_response,
    strength_grid,
    structure_function,
)

__version__ = "0.1.0"
