"""Fast-rate laboratory for empirical risk minimization under heavy tails, with k-means as the worked instance."""
from .bounds import BernsteinProfile, BetaInterval, BoundParams, admissible_beta, guaranteed_rate, kmeans_rate
from .distributions import DistributionSpec, Family, Sample, moment, sample
from .experiments import ExperimentConfig, RateCurve, compare_theory, emit, fit_rate, run
from .nets import EpsilonNet, build_net, entropy_check
from .quantization import Codebook, OracleMode, RiskOracle, Strategy, erm, excess_risk, true_risk

__version__ = "0.1.0"
