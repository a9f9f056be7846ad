"""Limiting spectral laws of F F^T / p and their Stieltjes transforms.

The feature matrix enters the asymptotic theory only through the
Stieltjes transform g(-z) = E[1/(t + z)] of this spectrum, evaluated at
negative arguments (z > 0 here, passed as ``minus_z``), together with its
derivative E[1/(t + z)^2].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MARCHENKO_PASTUR = "marchenko_pastur"
ORTHOGONAL = "orthogonal"
ATOMS = "atoms"

_KINDS = (MARCHENKO_PASTUR, ORTHOGONAL, ATOMS)


@dataclass(frozen=True)
class SpectralLaw:
    """Spectrum of F F^T / p in the proportional limit.

    ``marchenko_pastur``: i.i.d. standard Gaussian F, aspect ratio
    gamma = d/p.  ``orthogonal``: Haar-invariant F with diagonal scale
    max(sqrt(gamma), 1); for gamma > 1 the law carries a point mass
    1 - 1/gamma at zero.  ``atoms``: an explicit finite mixture of point
    masses, the extension hook for measured or structured spectra.
    """

    kind: str
    gamma: float
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown spectral law kind {self.kind!r}")
        if not self.gamma > 0.0:
            raise DomainError("aspect ratio gamma must be positive")
        if self.kind == ATOMS:
            if not self.atoms:
                raise DomainError("atoms law needs at least one atom")
            w = np.array([a[1] for a in self.atoms], dtype=float)
            t = np.array([a[0] for a in self.atoms], dtype=float)
            if np.any(t < 0.0):
                raise DomainError("eigenvalue atoms must be nonnegative")
            if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
                raise DomainError("atom weights must be nonnegative and sum to 1")
        elif self.atoms:
            raise DomainError("only the atoms law carries explicit atoms")


def marchenko_pastur(gamma: float) -> SpectralLaw:
    return SpectralLaw(MARCHENKO_PASTUR, gamma)


def orthogonal_projection(gamma: float) -> SpectralLaw:
    return SpectralLaw(ORTHOGONAL, gamma)


def empirical_atoms(atoms, gamma: float) -> SpectralLaw:
    return SpectralLaw(ATOMS, gamma, tuple((float(t), float(w)) for t, w in atoms))


def law_from_eigenvalues(eigs: np.ndarray, gamma: float) -> SpectralLaw:
    """Equal-weight atom law from a sampled eigenvalue list (oracle helper)."""
    eigs = np.asarray(eigs, dtype=float)
    eigs = np.where(np.abs(eigs) < 1e-12, 0.0, eigs)
    w = 1.0 / eigs.size
    return empirical_atoms([(t, w) for t in eigs], gamma)


def _check_arg(minus_z: float) -> float:
    m = float(minus_z)
    if not m > 0.0:
        raise DomainError("stieltjes transforms are evaluated at -z with z > 0")
    return m


def stieltjes(law: SpectralLaw, minus_z: float) -> float:
    """g(-z) = E[1/(t + z)] for z = minus_z > 0; strictly positive."""
    m = _check_arg(minus_z)
    g = law.gamma
    if law.kind == MARCHENKO_PASTUR:
        # Rationalised branch of the closed form, positive for all m > 0:
        # g(-m) = 2 / (A + sqrt(A^2 + 4*gamma*m)), A = m + 1 - gamma.
        a = m + 1.0 - g
        s = np.sqrt(a * a + 4.0 * g * m)
        return 2.0 / (a + s)
    if law.kind == ORTHOGONAL:
        if g <= 1.0:
            return 1.0 / (1.0 + m)
        return (1.0 - 1.0 / g) / m + (1.0 / g) / (g + m)
    t = np.array([a[0] for a in law.atoms])
    w = np.array([a[1] for a in law.atoms])
    return float(np.sum(w / (t + m)))


def stieltjes_derivative(law: SpectralLaw, minus_z: float) -> float:
    """g'(-z) = E[1/(t + z)^2] for z = minus_z > 0; strictly positive."""
    m = _check_arg(minus_z)
    g = law.gamma
    if law.kind == MARCHENKO_PASTUR:
        a = m + 1.0 - g
        s = np.sqrt(a * a + 4.0 * g * m)
        d = a + s
        return 2.0 * (1.0 + (m + 1.0 + g) / s) / (d * d)
    if law.kind == ORTHOGONAL:
        if g <= 1.0:
            return 1.0 / (1.0 + m) ** 2
        return (1.0 - 1.0 / g) / m**2 + (1.0 / g) / (g + m) ** 2
    t = np.array([a[0] for a in law.atoms])
    w = np.array([a[1] for a in law.atoms])
    return float(np.sum(w / (t + m) ** 2))
