"""Spatial derivatives of coefficient fields: user oracles with a central
finite-difference fallback.

Multi-indices are tuples of axis indices, e.g. (0, 0, 1) for d^3/dx0 dx0 dx1.
Default steps grow with the order to balance truncation against roundoff.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import MissingDerivative

DEFAULT_STEPS = {1: 1e-4, 2: 5e-4, 3: 2e-3}


def canonical(alpha) -> tuple[int, ...]:
    return tuple(sorted(int(i) for i in alpha))


def finite_difference(f: Callable[[np.ndarray], float], x: np.ndarray,
                      alpha, step: Optional[float] = None) -> float:
    """Nested central differences of f along the multi-index alpha."""
    alpha = tuple(alpha)
    if not alpha:
        return float(f(x))
    order = len(alpha)
    h = step if step is not None else DEFAULT_STEPS.get(order, 2e-3) * (1.0 + float(np.linalg.norm(x)))
    axis, rest = alpha[0], alpha[1:]
    xp = np.array(x, dtype=float)
    xm = np.array(x, dtype=float)
    xp[axis] += h
    xm[axis] -= h
    return (finite_difference(f, xp, rest, step) - finite_difference(f, xm, rest, step)) / (2.0 * h)


class SpatialDerivatives:
    """Derivative accessor for a scalar- or vector-valued field g(. , x).

    ``oracles`` maps canonical multi-indices to callables with the same
    signature as the base field.  Orders above ``q_max`` use finite
    differences when ``allow_fd`` is set, else raise MissingDerivative.
    """

    def __init__(self, base: Callable, oracles: Optional[dict] = None,
                 q_max: int = 0, allow_fd: bool = True, step: Optional[float] = None):
        self.base = base
        self.oracles = {canonical(k): v for k, v in (oracles or {}).items()}
        self.q_max = q_max
        self.allow_fd = allow_fd
        self.step = step

    def __call__(self, alpha, *args):
        """Evaluate d^alpha g at (*args, x); x must be the last argument."""
        alpha = canonical(alpha)
        if not alpha:
            return np.asarray(self.base(*args), dtype=float)
        if alpha in self.oracles:
            return np.asarray(self.oracles[alpha](*args), dtype=float)
        if not self.allow_fd:
            raise MissingDerivative(f"no oracle for order {len(alpha)} index {alpha}")
        *head, x = args
        x = np.asarray(x, dtype=float)

        def probe(y):
            return np.asarray(self.base(*head, y), dtype=float)

        sample = probe(x)
        if sample.shape == ():
            return np.asarray(finite_difference(lambda y: float(probe(y)), x, alpha, self.step))
        out = np.empty(sample.shape)
        for idx in np.ndindex(sample.shape):
            out[idx] = finite_difference(lambda y: float(probe(y)[idx]), x, alpha, self.step)
        return out
