"""Monte Carlo toolkit for jump diffusions with state-dependent intensity:
path representations, hybrid small-jump replacements, regularity constants,
and weak-error convergence experiments."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError, DegenerateFit, EmptySample, HybridJumpError, InfiniteMass,
    MissingDerivative, NonFiniteCoefficient, NonPSDCovariance,
    ParameterConstraintViolated, QuadratureDivergence, RateBoundViolated,
    RegionMeasureMismatch,
)
from .regions import Region  # noqa: F401
from .measures import DensityMeasure, DiscreteMeasure, power_law_piece, uniform_piece  # noqa: F401
from .model import CoefficientSet, JumpModel, alpha_of, restrict, validate_model  # noqa: F401
from .rng import RngStream  # noqa: F401
from .simulate import (  # noqa: F401
    PathRecord, SimConfig, flow_segment, simulate_fictive, simulate_hybrid,
    simulate_real, terminal_samples, theta_no_jump,
)
from .generator import TestFunction, apply_generator, generator_distance, weight_psi  # noqa: F401
from .bounds import localization_bound, regularity_report  # noqa: F401
from .regimes import (  # noqa: F401
    DeltaReport, RegimeSplit, ThreeRegimeExample, build_hybrid,
    delta_functionals, three_regime_experiment,
)
from .boltzmann import (  # noqa: F401
    BoltzmannParams, CutoffPhi, boltzmann_experiment, collision_jump,
    diffusion_delta, drift_delta, sample_theta, simulate_cutoff,
    simulate_hybrid_order1, simulate_hybrid_order2, theta_moments,
)
from .weakerr import (  # noqa: F401
    WeakErrorReport, chisquare_poisson, fit_rate, ks_two_sample, weak_error,
)
