"""mrskit: MR spectroscopy preprocessing, quantification, and analysis."""

from .agreement import (
    BlandAltman,
    ConsistencyReport,
    ReferenceRange,
    bland_altman,
    consistency_report,
    range_check,
)
from .denoise import DenoiseConfig, HsvdDenoiser, denoise, hsvd_components
from .errors import MrsError, ParseError, SelectionError, ValidationError
from .lcm import (
    FitConfig,
    FitParams,
    FitState,
    LcmFitter,
    Lineshape,
    crlb_percent,
    fit,
    lineshape_convolve,
    objective,
    spline_design,
)
from .signal import (
    SnrEstimate,
    apply_imperfections,
    dft,
    forward_model,
    forward_model_jacobian,
    idft,
    ppm_axis,
    snr_estimate,
)
from .staged import (
    IfEstimate,
    StagedQuantifier,
    StageEngines,
    extract_ifs,
    predict_background,
    quantify_staged,
    solve_concentrations,
)
from .stats import (
    Indicator,
    StatisticsReport,
    TestReport,
    analyze_groups,
    boxplot_stats,
    compute_indicator,
    levene,
    mann_whitney_u,
    resolve_indicator,
    select_and_test,
    shapiro_wilk,
    two_stage_t_test,
)
from .types import (
    AcquisitionParams,
    AcqTags,
    Baseline,
    BasisEntry,
    BasisSet,
    ImperfectionFactors,
    QuantResult,
    Spectrum,
    SubjectMeta,
    default_acquisition,
)

__version__ = "0.1.0"
