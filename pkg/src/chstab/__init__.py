"""Feedback stabilisation of the Cahn-Hilliard equation on the unit box."""
from .spectral import Discretization, SpectralField
from .feedback import FeedbackOperator, build_pointwise, build_cell_average
from .gap import GapCertificate, certify, compute_cstar
from .dynamics import ModelParams, simulate, decay_fit

__version__ = "0.1.0"
