"""Attainable secure key rates for binary intensity-modulated optical key
distribution against a temporal-mode-demultiplexing receiver.

The pipeline, bottom to top: `modes` turns pulse waveforms into the scalar
shape-distortion parameter; `channels` maps scenario parameters to the exact
conditional Poisson photocount laws at the receiver and at the demultiplexer's
two output modes; `information` evaluates the mutual informations and the
one-way key-rate bound for soft (full-count) and hard (ternary-threshold)
decoding; `optimize` maximizes that bound over the modulation depth and, for
hard decoding, the threshold pair, with a certified exhaustive threshold
search; `montecarlo` cross-validates everything by direct simulation; `sweep`
and `cli` drive distortion studies and emit CSV.
"""

from .channels import (
    BobChannel,
    EnergyPair,
    EveChannel,
    ScenarioParams,
    bob_channel,
    energies_from_params,
    eve_channel,
)
from .information import (
    INCONCLUSIVE,
    HardDecoder,
    KeyRateResult,
    hard_decode,
    i_ab_hard,
    i_ab_soft,
    i_be,
    key_rate,
    mutual_information,
)
from .modes import (
    ModePair,
    TemporalEnvelope,
    complement_mode,
    distortion,
    gaussian_envelope,
    gaussian_pair,
    load_waveform_csv,
    normalize,
    overlap,
    write_envelope_csv,
    write_waveform_csv,
)
from .montecarlo import (
    EstimateResult,
    SimConfig,
    SlotRecord,
    estimate_key_rate,
    simulate,
    write_records_csv,
)
from .optimize import (
    DEFAULT_BUDGET,
    OptimizationBudget,
    OptimizedPoint,
    optimal_thresholds,
    optimize_fixed_decoder,
    optimize_hard,
    optimize_soft,
)
from .poisson import DEFAULT_POLICY, DiscreteDistribution, PoissonLaw, TruncationPolicy
from .sweep import (
    FIGURE3_ENERGIES,
    FIGURE3_NOISE_LEVELS,
    FIGURE3_TAU_RATIOS,
    SweepSpec,
    db_from_distortion,
    distortion_from_db,
    figure3_spec,
    run_sweep,
    sweep_panel,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
