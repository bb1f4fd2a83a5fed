"""Multi-carrier faster-than-Nyquist signaling on the OTFS grid.

Simulation library for compressed time-frequency signaling in the discrete
matrix domain: pulse Gram construction, doubly dispersive channels, EVD and
per-stream SIC precoding with water-filling, LMMSE link simulation and
Monte Carlo sweep orchestration.
"""

__version__ = "0.1.0"

from .core import (
    ConfigError,
    DegenerateConfigurationError,
    IndexMap,
    NumericalError,
    SystemConfig,
    dft_matrix,
    flat_index,
    isfft_matrix,
    rng_stream,
    sfft_matrix,
)
from .pulse import GramMatrix, RrcPulse, SincPulse, ambiguity_table, build_gram
from .channel import (
    DdChannel,
    DdPath,
    MimoChannel,
    build_dd_channel,
    build_mimo_channel,
    build_tf_channel,
    mimo_channel_from_paths,
    mimo_paths_to_json,
    paths_digest,
    paths_from_json,
    paths_to_json,
    sample_paths,
    tf_channel_entry,
)
from .noise import NoiseModel, draw_dd_noise, draw_mimo_noise, make_noise_model
from .precode_siso import (
    SisoPrecoder,
    build_effective_channel,
    capacity_bits,
    precode,
    siso_capacity,
    solve_siso,
    waterfill,
)
from .precode_mimo import (
    MimoPrecoderState,
    StreamPrecoder,
    build_mimo_effective,
    mimo_capacity,
    per_stream_rates,
    sic_precode,
    wf_baseline,
    wf_structured,
)
from .link import (
    BerEstimate,
    LinkRealization,
    ber_from_counts,
    bits_per_symbol,
    demap_symbols,
    map_bits,
    measure_ber,
    mmse_equalize,
    mmse_weights,
    simulate_frame,
    transmit,
    wilson_interval,
)
from .montecarlo import (
    SCHEMES,
    BerPoint,
    CapacityPoint,
    SweepResult,
    SweepSpec,
    run_sweep,
)
