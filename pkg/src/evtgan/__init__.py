"""evtgan: spatial extremes emulation.

GEV margins plus a from-scratch convolutional GAN for the spatial tail
dependence of gridded block maxima, with a Brown-Resnick max-stable
baseline and nonparametric extremal-dependence diagnostics.
"""

from .errors import (
    ConvergenceError,
    DataError,
    DegenerateDataError,
    EvtganError,
    ParameterError,
    StateError,
    UndefinedEstimateError,
)
from .gev import (
    FitReport,
    GevParams,
    fit_gev_mle,
    gev_cdf,
    gev_neg_log_likelihood,
    gev_quantile,
    return_level,
)
from .dependence import (
    ChiMatrix,
    PseudoGrid,
    SpectralSample,
    chi_empirical,
    chi_l2_error,
    chi_matrix,
    frechet_transform,
    rank_transform,
    select_random_pairs,
    select_site_pairs,
    spectral_empirical,
)
from .brown_resnick import (
    SiteGeometry,
    VariogramParams,
    br_chi,
    br_chi_at_level,
    br_spectral_cdf,
    br_spectral_density,
    fit_br,
    fractal_variogram,
    hr_bivariate_cdf,
    hr_bivariate_sample,
    hr_conditional_cdf,
)
from .nnet import GanConfig

__version__ = "0.1.0"
