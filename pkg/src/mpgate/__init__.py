"""Cell-type gating with prior-informed Mondrian process trees and Gaussian leaf emissions."""
from .classify import accuracy, classify_sample, vote
from .emissions import CellMatrix, fit_leaf_gaussians, log_likelihood
from .inference import MCMCConfig, PosteriorResult, fit_posterior
from .partition import AxisBox, Cut, MondrianTree, Node, leaf_of, leaves
from .priors import UNKNOWN, Hyperparameters, PriorTable, example_table, parse_table
from .sampler import log_prior, random_source, sample_mondrian
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"
