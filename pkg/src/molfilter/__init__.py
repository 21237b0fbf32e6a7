"""SINR-optimal matched filters for molecule-counting receivers."""

__version__ = "0.1.0"

from molfilter.channel import ChannelParams, Cir, TimingConfig, build_cir, expected_concentration, reference_time
from molfilter.detection import DetectorSpec, analytical_ber, detect, gaussian_moments, optimize_threshold
from molfilter.filters import (
    Filter,
    correlator_filter,
    matched_filter,
    optimal_sinr,
    peak_filter,
    rayleigh_quotient_oracle,
    sinr,
    sum_filter,
)
from molfilter.montecarlo import SimConfig, SimResult, run_trials, simulate_symbol_stream
from molfilter.stats import (
    interference_covariance,
    interference_mean,
    make_stream,
    q_function,
    sample_poisson,
    shifted_poisson_pmf,
)
