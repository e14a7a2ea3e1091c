"""Low range-sidelobe pulse compression: min-ISL and RLS mismatched filters,
CLEAN deconvolution and genetic-algorithm NLFM waveform design."""

from .bga import GaConfig, GaHistory, WaveformParams, evolve
from .clean import (
    RangeScene,
    StrongScattererSet,
    clean_pipeline,
    detect,
    estimate_clean,
    ls_deconvolve,
    simulate_profile,
)
from .estimators import BezierNLFMDesigner, CleanDeconvolver, MatchedFilter, MinISLFilter, RLSSidelobeFilter
from .filter_design import (
    ConvolutionMatrix,
    FilterWeights,
    apply_filter,
    build_convolution_matrix,
    compression_metrics,
    isl,
    matched_filter,
    psl,
    snr_loss,
    solve_min_isl,
)
from .rls import build_desired_response, optimize
from .waveform import BezierGenome, Waveform, bezier_eval, build_nlfm_frequency, generate_lfm, synthesize_nlfm, tukey_window

__version__ = "0.1.0"
