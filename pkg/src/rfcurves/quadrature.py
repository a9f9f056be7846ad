"""Gauss-Hermite rules for expectations over standard Gaussians."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite


@lru_cache(maxsize=32)
def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights such that E[f(z)] ~ sum(w * f(z)) for z ~ N(0,1)."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    t, w = roots_hermite(n)
    nodes = np.sqrt(2.0) * t
    weights = w / np.sqrt(np.pi)
    return nodes, weights


@lru_cache(maxsize=32)
def gauss_hermite_raw(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Physicists' rule: integral of exp(-t^2) f(t) dt ~ sum(w * f(t))."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    t, w = roots_hermite(n)
    return t, w
