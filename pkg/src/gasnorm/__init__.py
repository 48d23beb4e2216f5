"""gasnorm: score-driven adaptive normalization for non-stationary forecasting.

A per-feature filter tracks time-varying mean and variance with natural
gradient (inverse-Fisher-scaled score) updates under a Gaussian or
Student's t observation density. The filtered statistics normalize the
input of a downstream residual forecaster and their forecasts
denormalize its output.
"""

from .datagen import (
    ArSpec,
    LorenzSpec,
    add_quadratic_trend,
    affine_map,
    gen_ar,
    gen_lorenz,
    inject_outlier,
)
from .errors import FitError, GasNormError, NumericalError, ValidationError
from .evaluation import (
    EvalReport,
    ExperimentSpec,
    emit_report,
    load_report,
    mase,
    run_experiment,
    select_gamma,
)
from .filtering import (
    VARIANCE_FLOOR,
    Family,
    FilterState,
    FilterTrace,
    GasParams,
    filter_series,
    forecast_statistics,
    initial_state,
    score_and_fim,
    update,
)
from .fitting import FitConfig, FitResult, fit, fit_frame, penalized_objective
from .mlp import Activation, MlpSpec, TrainedModel, gradient_check, predict, train
from .normalization import (
    NormalizedBatch,
    NormalizerKind,
    NormalizerSpec,
    denormalize,
    gas_normalize,
    global_normalize,
    local_normalize,
    mean_scale,
    normalize,
)
from .series import SeriesFrame, SplitSpec, difference, load_csv, split, windows, write_csv

__version__ = "0.1.0"
