"""Heralded single-photon source statistics, rate inference and Monte Carlo."""

from ._core import (
    ComputationError,
    GatedStatisticsInput,
    GatingMode,
    InputError,
    MeasuredRates,
    OriginalDistribution,
    PumpMode,
    SimConfig,
    SystemParams,
    b_from_b0,
    characterize,
    count_probability,
    find_poisson_crossing,
    g2_curve_point,
    g2_from_moments,
    g2_zero,
    heralded_tail,
    load_measurement_file,
    load_sim_config,
    photon_number_distribution,
    reference_sim_config,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
