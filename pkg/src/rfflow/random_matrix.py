"""Gram/kernel matrices, their spectra, and Marchenko-Pastur analysis.

The Gram matrix is G = Phi Phi^T / (nm).  Its nonzero eigenvalues coincide
with those of Phi^T Phi / (nm), so the smallest *nonzero* eigenvalue is
always read off the smaller of the two companions; at m = n this is the
plain smallest eigenvalue, which collapses towards zero (the double-descent
resonance).  The Marchenko-Pastur model predicts that collapse:
the smallest eigenvalue scales like c * (1 - sqrt(gamma))^2 for gamma <= 1
and c * (1 - sqrt(1/gamma))^2 above, with a calibration constant c fitted
from measurements near gamma = 1.

The MP density here carries the 1/gamma mass factor,

    v_gamma(x) = sqrt((x_+ - x)(x - x_-)) / (2 pi gamma x),
    x_pm = (1 pm sqrt(gamma))^2,

so that continuous mass plus the point mass max(0, 1 - 1/gamma) at zero is
exactly one for every aspect ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .kernel_analytic import AnalyticSpectrum, adaptive_quadrature

_SYM_TOL = 1e-10


def gram_matrix(phi, n: int, m: int) -> np.ndarray:
    """G = Phi Phi^T / (nm)."""
    mat = phi.values if hasattr(phi, "values") else np.asarray(phi, dtype=float)
    if mat.shape != (n, m):
        raise ValueError(f"expected a {n}x{m} feature matrix, got {mat.shape}")
    return mat @ mat.T / (n * m)


def symmetric_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Descending spectrum of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    scale = max(float(np.max(np.abs(a))), 1.0)
    if np.max(np.abs(a - a.T)) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(a)[::-1]


def smallest_gram_eigenvalue(phi, n: int, m: int) -> float:
    """Smallest eigenvalue of the min(n, m)-sized Gram spectrum.

    For m < n the n x n Gram matrix is rank deficient by construction, so the
    meaningful smallest value lives on the m x m companion Phi^T Phi / (nm).
    """
    mat = phi.values if hasattr(phi, "values") else np.asarray(phi, dtype=float)
    if mat.shape != (n, m):
        raise ValueError(f"expected a {n}x{m} feature matrix, got {mat.shape}")
    comp = mat @ mat.T if n <= m else mat.T @ mat
    return float(np.linalg.eigvalsh(comp / (n * m))[0])


@dataclass(frozen=True)
class SymmetricSpectrum:
    """Descending eigenvalues of one matrix with its provenance."""

    source: str                    # "gram" | "kernel-matrix" | "analytic"
    eigenvalues: np.ndarray
    n: int
    m: int
    d: int
    gamma: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        ev = self.eigenvalues
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if ev.size and ev[-1] < -1e-10 * max(abs(ev[0]), 1.0):
            raise ValueError("expected a PSD spectrum up to round-off")


# ---------------------------------------------------------------------------
# Marchenko-Pastur model
# ---------------------------------------------------------------------------

def mp_edges(gamma: float) -> tuple[float, float]:
    """Support edges ((1-sqrt(gamma))^2, (1+sqrt(gamma))^2)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    r = math.sqrt(gamma)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_atom(gamma: float) -> float:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return max(0.0, 1.0 - 1.0 / gamma)


def mp_density(gamma: float, lam) -> np.ndarray | float:
    """Continuous MP density at lam; zero outside the support."""
    lo, hi = mp_edges(gamma)
    lam_arr = np.asarray(lam, dtype=float)
    inside = (lam_arr > lo) & (lam_arr < hi) & (lam_arr > 0)
    out = np.zeros_like(lam_arr)
    lx = lam_arr[inside]
    out[inside] = np.sqrt((hi - lx) * (lx - lo)) / (2.0 * np.pi * gamma * lx)
    return out if out.ndim else float(out)


def mp_mass(gamma: float, tol: float = 1e-10) -> float:
    """Integral of the continuous density over its support.

    Substituting lam = lo + (hi - lo) sin^2(psi) removes the square-root
    endpoint behaviour, so plain adaptive quadrature converges fast even at
    gamma = 1 where the lower edge touches zero.
    """
    lo, hi = mp_edges(gamma)
    width = hi - lo

    def integrand(psi):
        sp, cp = np.sin(psi), np.cos(psi)
        lam = lo + width * sp * sp
        return width * width * sp * sp * cp * cp / (np.pi * gamma * lam)

    return adaptive_quadrature(integrand, 0.0, np.pi / 2, tol=tol)


@dataclass(frozen=True)
class MPModel:
    """Edges, atom, and calibrated smallest-eigenvalue predictor."""

    gamma: float
    edges: tuple[float, float]
    atom_mass: float
    calibration: float = 1.0

    @classmethod
    def for_gamma(cls, gamma: float, calibration: float = 1.0) -> "MPModel":
        return cls(gamma=gamma, edges=mp_edges(gamma), atom_mass=mp_atom(gamma),
                   calibration=calibration)

    def predict_smallest(self) -> float:
        return predict_smallest(self.gamma, self.calibration)


def mp_shape(gamma) -> np.ndarray | float:
    """Unit-calibration smallest-eigenvalue shape, symmetric in gamma <-> 1/gamma."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("gamma must be positive")
    out = np.where(g <= 1.0, (1.0 - np.sqrt(g)) ** 2, (1.0 - np.sqrt(1.0 / g)) ** 2)
    return out if out.ndim else float(out)


def predict_smallest(gamma: float, c: float) -> float:
    """Calibrated smallest-eigenvalue prediction c * shape(gamma)."""
    if c <= 0:
        raise ValueError("calibration must be positive")
    return c * float(mp_shape(gamma))


def calibrate_c(measurements: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares calibration of the prediction against measurements.

    ``measurements`` holds (gamma, smallest eigenvalue) pairs; at least three
    off-resonance points (gamma != 1) are required since the shape vanishes
    there.  Returns (c, rms residual).
    """
    gammas = np.array([g for g, _ in measurements], dtype=float)
    vals = np.array([v for _, v in measurements], dtype=float)
    shapes = np.asarray(mp_shape(gammas))
    use = shapes > 0
    if use.sum() == 0:
        raise ValueError("all measurements sit at gamma = 1; shape is identically zero")
    c = float(vals[use] @ shapes[use] / (shapes[use] @ shapes[use]))
    resid = float(np.sqrt(np.mean((vals - c * shapes) ** 2)))
    return c, resid


# ---------------------------------------------------------------------------
# spectrum comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    """Per-rank comparison of a Gram spectrum against references."""

    top_rel_diff_kernel: np.ndarray   # gram vs kernel matrix, top ranks
    top_rel_diff_analytic: np.ndarray
    min_eigenvalue: float
    near_zero_count: int              # eigenvalues below 1e-6 * top


def spectrum_report(gram: SymmetricSpectrum, kernel: SymmetricSpectrum,
                    analytic: AnalyticSpectrum, analytic_scale: float,
                    top: int = 20) -> SpectrumReport:
    """Compare the top eigenvalues rank by rank.

    The analytic spectrum is expanded by multiplicity and multiplied by the
    single calibration scale fitted in ``kernel_analytic``.
    """
    if gram.eigenvalues.size == 0 or kernel.eigenvalues.size == 0:
        raise ValueError("empty spectrum")
    if gram.d != kernel.d or gram.d != analytic.dim:
        raise ValueError("spectra from different dimensions")
    top = min(top, gram.eigenvalues.size, kernel.eigenvalues.size)
    ev_g = gram.eigenvalues[:top]
    ev_k = kernel.eigenvalues[:top]
    ev_a = analytic.flatten(top) * analytic_scale
    rel_k = np.abs(ev_g - ev_k) / np.abs(ev_k)
    rel_a = np.abs(ev_g - ev_a) / np.abs(ev_a)
    top_val = gram.eigenvalues[0]
    return SpectrumReport(
        top_rel_diff_kernel=rel_k,
        top_rel_diff_analytic=rel_a,
        min_eigenvalue=float(gram.eigenvalues[-1]),
        near_zero_count=int(np.sum(gram.eigenvalues < 1e-6 * top_val)),
    )
