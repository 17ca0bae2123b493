"""Energy and reliability toolkit for rateless-coded NC-MFSK implant uplinks."""

__version__ = "0.1.0"

from .lt_codec import (  # noqa: F401
    CodedSymbol,
    DecodeResult,
    DegreeDistribution,
    FactorGraph,
    GraphError,
    bit_error_rate,
    build_graph,
    decode_ternary,
    default_degree_distribution,
    derive_rng,
    encode_next,
    run_incremental,
    sample_degree,
)
from .phy_model import (  # noqa: F401
    DEEP_TISSUE,
    NEAR_SURFACE,
    LinkBudget,
    NoiseModel,
    TissuePathLoss,
    active_duration,
    channel_bit_error,
    circuit_powers,
    gain_factor,
    noise_density,
    required_symbol_energy,
)
from .rate_model import (  # noqa: F401
    RateGainRow,
    RateGainTable,
    de_rate_curve,
    embedded_table,
    mc_rate_estimate,
    uncoded_reference_snr,
)
from .energy_opt import (  # noqa: F401
    EnergyBreakdown,
    InfeasibleFrameError,
    ScenarioConfig,
    energy_coded,
    energy_uncoded,
    optimize,
    sweep_energy_vs_distance,
    threshold_distance,
)
from .frame import FrameSchedule, frame_schedule  # noqa: F401
