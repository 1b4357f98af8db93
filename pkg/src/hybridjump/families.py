"""Named built-in model families, constructible from JSON parameter dicts.

These are the reference models exercised by the validation suite and the CLI;
the library API accepts arbitrary user callables through the same types.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .measures import DiscreteMeasure, DensityMeasure, uniform_piece
from .model import CoefficientSet, JumpModel
from .regimes import ThreeRegimeExample


def constant_rate_model(gamma0: float = 1.0, rate_bound: float = 3.0,
                        mass: float = 2.0, horizon: float = 1.5,
                        amplitude: float = 1.0) -> JumpModel:
    """Unit jumps at constant rate gamma0 <= Gamma; mu is uniform with the
    given total mass on (0, 1].  Terminal state counts accepted jumps."""
    if gamma0 > rate_bound:
        raise ConfigError("gamma0 must not exceed rate_bound", "params.gamma0")
    coeffs = CoefficientSet(
        dim=1,
        drift=lambda t, x: np.zeros(1),
        jump_amplitude=lambda t, z, x: np.array([amplitude]),
        jump_rate=lambda t, z, x: gamma0,
        rate_bound=rate_bound,
        lipschitz_c=lambda z: 0.0,
        lipschitz_gamma=lambda z: 0.0,
    )
    measure = DensityMeasure([uniform_piece(0.0, 1.0, mass)])
    return JumpModel(coeffs, measure, horizon)


def discrete_toy_model(rate_bound: float = 2.0, horizon: float = 1.0,
                       drift_rate: float = -0.2) -> JumpModel:
    """PDMP toy: three marks, state-dependent rate, linear-decay drift, d=1."""
    atoms = np.array([-1.0, 0.5, 2.0])
    weights = np.array([0.5, 0.3, 0.2])
    amps = {-1.0: -0.8, 0.5: 0.6, 2.0: 1.2}

    def amplitude(t, z, x):
        return np.array([amps[float(z)] * (1.0 + 0.2 * math.sin(float(x[0])))])

    def rate(t, z, x):
        # bounded in (0, Gamma): base per-mark level modulated by the state
        base = {-1.0: 0.9, 0.5: 1.2, 2.0: 0.7}[float(z)]
        return base * (0.8 + 0.3 / (1.0 + float(x[0]) ** 2))

    coeffs = CoefficientSet(
        dim=1,
        drift=lambda t, x: drift_rate * np.asarray(x, dtype=float),
        jump_amplitude=amplitude,
        jump_rate=rate,
        rate_bound=rate_bound,
        lipschitz_c=lambda z: 0.2 * abs(amps[float(z)]),
        lipschitz_gamma=lambda z: 0.66,
    )
    return JumpModel(coeffs, DiscreteMeasure(atoms, weights), horizon)


def brownian_model(horizon: float = 1.0, dim: int = 1) -> JumpModel:
    """Pure Brownian motion (identity diffusion, no drift, no jumps)."""
    sigmas = [
        (lambda t, x, l=l: np.eye(dim)[l]) for l in range(dim)
    ]
    coeffs = CoefficientSet(
        dim=dim,
        drift=lambda t, x: np.zeros(dim),
        jump_amplitude=lambda t, z, x: np.zeros(dim),
        jump_rate=lambda t, z, x: 0.5,
        rate_bound=1.0,
        sigma_list=sigmas,
        lipschitz_c=lambda z: 0.0,
        lipschitz_gamma=lambda z: 0.0,
    )
    measure = DensityMeasure([uniform_piece(0.0, 1.0, 1.0)])
    return JumpModel(coeffs, measure, horizon)


FAMILY_BUILDERS = {
    "constant_rate": constant_rate_model,
    "discrete_toy": discrete_toy_model,
    "brownian": brownian_model,
}


def build_family(name: str, params: dict) -> JumpModel:
    if name == "three_regime_source":
        return ThreeRegimeExample(**params).source_model()
    if name == "three_regime_limit":
        return ThreeRegimeExample(**params).limit_model(truncated=True)
    if name == "three_regime_hybrid":
        return ThreeRegimeExample(**params).hybrid_limit_model()
    if name not in FAMILY_BUILDERS:
        raise ConfigError(f"unknown model family {name!r}", "model.family")
    try:
        return FAMILY_BUILDERS[name](**params)
    except TypeError as exc:
        raise ConfigError(str(exc), "model.params") from exc
