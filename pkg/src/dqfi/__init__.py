"""Dissipative quantum Fisher information for vectorized Lindblad dynamics."""

__version__ = "0.1.0"

from .linalg import (ConvergenceError, EigResult, ExpOverflowError,
                     SingularMatrixError, eig_general, eig_hermitian, kron,
                     matexp, pinv)
from .model import (JumpChannel, LiouvilleState, LiouvillianMatrix, ModelError,
                    OpenSystemModel, StateError, build_liouvillian,
                    d_liouvillian, devectorize, propagate, purity_normalize,
                    vectorize)
from .spectral import (BiorthogonalSpectrum, EpCluster, SpectralError,
                       attach_chains, biorthogonal_spectrum, detect_eps,
                       jordan_chain, pi_eigenmatrix, splitting_susceptibility)
from .generator import (GeneratorError, GeneratorPair, dqfi_upper_bound,
                        generator_auto, generator_ep, generator_propagator_fd,
                        generator_quadrature, generator_spectral,
                        hermitian_split)
from .fisher import (FisherError, FisherResult, SldPair, cqfi_closed_helpers,
                     cqfi_spectral, conventional_generator, crb_bounds, csld,
                     dqfi_covariance, dqfi_derivative, dqfi_overall_factor,
                     dqfi_spectral_mixed, dqfi_steady_limit, dqfi_steady_series,
                     dqfi_via_derivative, dsld, dsld_spectral, evaluate_point,
                     split_identity_value)
from .twolevel import (AnalyticCurve, TwoLevelParams, analytic_cqfi,
                       analytic_dqfi, analytic_generator, analytic_spectrum,
                       analytic_state, figure_data, probe_state,
                       spin_flip_model)
from .dsl import ModelSpec, ParseError, compile_model, load_model, parse_model
