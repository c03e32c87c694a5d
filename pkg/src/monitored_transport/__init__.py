"""Steady-state transport through continuously monitored non-interacting junctions."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .model import (  # noqa: E402
    FlatBand,
    Junction,
    LorentzianFilter,
    Reservoir,
    Tabulated,
    fermi,
    gamma_from_bosonic_bath,
    hybridization_value,
    single_level_junction,
    two_site_junction,
    validate,
)
from .numerics import QuadratureSpec, integrate_matrix  # noqa: E402
from .greens import dressed_greens, spectral_function, transmission  # noqa: E402
from .selfconsistent import correlation_matrix, solve_correlation, solve_fixed_point  # noqa: E402
from .currents import (  # noqa: E402
    TransportResult,
    cooling_map,
    cop,
    differential_conductance,
    elastic_current,
    inelastic_current,
    landauer_current,
    power_curve,
    stopping_voltage,
    transport,
)
from .scenarios import cross_monitored_pair, filter_level_junction  # noqa: E402
