"""Equilibrium states of toral automorphisms: Markov coding, transfer-operator
pressure, periodic-orbit spectra and measure-defined charts."""

from ._kernels import backend, set_backend
from .coding import MarkovCoding, Sft, Word, build_partition, decode, encode, encode_future, periodic_words
from .errors import *  # noqa: F401,F403
from .gibbs import (
    GFunction,
    GibbsApproximation,
    bowen_constant,
    cylinder_potential,
    equilibrium,
    g_function,
    gibbs_state,
    marginal_identity_error,
    product_density,
)
from .potential import (
    Potential,
    birkhoff_sum,
    coboundary,
    compose_Mk,
    geometric_potential,
    periodic_birkhoff_sums,
    theta_v,
)
from .pressure import (
    PressureCurve,
    lyapunov_from_pressure,
    normalize_to_zero_pressure,
    pressure,
    pressure_curve,
    pressure_orbit_ratio,
    pressure_orbit_sum,
    pressure_transfer,
)
from .realization import (
    ChartImage,
    cohomology_residual,
    livsic_bound_report,
    unstable_derivative_new_charts,
    xi,
)
from .spectrum import OrbitSpectrum, compare_spectra, unmarked_spectrum
from .torus import (
    CAT_MAP,
    HomoclinicVector,
    ToralAutomorphism,
    TorusPoint,
    bracket_decompose,
    cat_map,
    eigen_data,
    fixed_point_count,
    homoclinic_points,
    periodic_points,
)

__version__ = "0.1.0"
