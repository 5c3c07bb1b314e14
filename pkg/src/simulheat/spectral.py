"""Frequency cutoffs, spectral projectors, and the norms they are measured in."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ControlRegion, Grid1D
from .operators import EigenBasis


@dataclass(frozen=True)
class SpectralCutoff:
    """Frequency threshold lam and the number of basis modes at or below it."""

    lam: float
    count: int

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"cutoff must be nonnegative, got {self.lam}")
        if self.count < 0:
            raise ValueError(f"mode count must be nonnegative, got {self.count}")


def make_cutoff(basis: EigenBasis, lam: float) -> SpectralCutoff:
    """Cutoff at lam for basis; modes with frequency == lam are included."""
    count = int(np.searchsorted(basis.frequencies, lam, side="right"))
    return SpectralCutoff(lam=float(lam), count=count)


def project(basis: EigenBasis, cutoff: SpectralCutoff, u: np.ndarray) -> np.ndarray:
    """Weighted-orthogonal projection of u onto the modes below the cutoff."""
    if u.shape != (basis.grid.n,):
        raise ValueError(f"field has shape {u.shape}, expected ({basis.grid.n},)")
    E = basis.vectors[:, : cutoff.count]
    coeffs = E.T @ (basis.grid.weights * u)
    return E @ coeffs


def coefficients(basis: EigenBasis, u: np.ndarray) -> np.ndarray:
    """All weighted mode coefficients <e_k, u>."""
    return basis.vectors.T @ (basis.grid.weights * u)


def sup_norm(u: np.ndarray) -> float:
    return float(np.max(np.abs(u))) if u.size else 0.0


def l2_norm(grid: Grid1D, u: np.ndarray) -> float:
    return float(np.sqrt(np.sum(grid.weights * u * u)))


def l1_norm_on(grid: Grid1D, u: np.ndarray, region: ControlRegion) -> float:
    """Weighted L1 norm of u restricted to the region's cells."""
    m = region.mask
    return float(np.sum(grid.weights[m] * np.abs(u[m])))
