"""Heavy-outcome post-selection spoofing of cross-entropy benchmarking for
boson sampling, with exact desk-scale probability engines."""

from .kernels import (
    Interferometer,
    Seed,
    determinant,
    gaussian_matrix,
    haar_unitary,
    hafnian,
    permanent,
    select_submatrix,
)
from .metrics import (
    Normalization,
    XEDifference,
    XEReport,
    bayesian_score,
    exact_xe,
    heaviness_profile,
    linear_xe_estimate,
    log_xe_estimate,
    normalization_for_sector,
    xe_difference,
)
from .mockups import (
    exact_sampler_from_scores,
    fs_dpp_sampler,
    h_marginal_product,
    h_multinomial_mixed,
    h_multinomial_superposition,
    sample_uniform,
)
from .models import (
    FermionSampling,
    FockBosonSampling,
    GaussianBosonSampling,
    Sector,
    format_outcome,
    parse_outcome,
    sector_probabilities,
)
from .noise import (
    NoiseSpec,
    distinguishable_probability,
    lossy_probability,
    partially_distinguishable_probability,
)
from .samples import SampleSet, write_sample_csv
from .spoofer import SpoofConfig, spoof_multisector, spoof_sector
from .theory import (
    TheoryResult,
    closed_form_h_power_moments,
    closed_form_xe_id,
    closed_form_xe_idp,
    derangements,
    h_power_ratio,
    mc_gaussian_permanent_moments,
    mc_h_power_ratio,
    mc_xe_id,
    pd_bound,
    pd_exact_xe_expectation,
)

__version__ = "0.1.0"
