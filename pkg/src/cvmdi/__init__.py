"""Asymptotic key rates for four-state and Gaussian CV-MDI-QKD."""

from .errors import CVMDIError, DomainError, InfeasibleError, ModelError, TruncationError
from .modulation import Kind, ModulationScheme, SourceCM, lambda_weights, source_covariance, four_state_correlation

__version__ = "0.1.0"
