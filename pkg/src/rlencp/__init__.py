"""Relative-entropy complexity scores and change-point detection for collections of series."""

__version__ = "0.1.0"

from .errors import (ArgumentError, DegeneracyError, DomainError, ParseError,  # noqa: E402
                     RlenError, StageError)
from .kernels import (EPANECHNIKOV, KernelSpec, base_kernel_eval, boundary_coeff,  # noqa: E402
                      jackknife_eval, kernel_moment, product_kernel_eval)
from .density import Embedding, embed, loo_density  # noqa: E402
from .rlen import (EntropyEstimate, ar2_rlen, arp_rlen, entropy_profile,  # noqa: E402
                   rlen_estimate, select_bandwidth, theory_constants,
                   yule_walker_autocorr)
from .lag_select import (LagSelectionReport, bic_score, effective_dof,  # noqa: E402
                         loocv_bandwidth, nw_loo_predict, select_lag)
from .apen import ApEnConfig, apen  # noqa: E402
from .cpd import ChangePointResult, dp_detect_k, pelt_detect, welch_t_test  # noqa: E402
from .simulate import (CaseMatrixSpec, ModelSpec, build_case_matrix,  # noqa: E402
                       extract_min_variance_window, gen_series, logistic_transform,
                       matched_noise_variance)
from .pipeline import RunConfig, RunReport, read_matrix_csv, run_pipeline, write_report  # noqa: E402
