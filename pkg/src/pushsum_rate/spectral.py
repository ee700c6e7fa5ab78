"""Symmetric eigendecomposition with a deterministic ordering convention.

Wraps the cyclic Jacobi kernel (compiled or pure backend) and normalizes
the output so identical inputs produce identical spectra on either
backend: eigenvalues sorted descending, each eigenvector's first
above-noise component made positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InternalInvariantError, ValidationError
from .graphs import MixingMatrix

__all__ = ["Spectrum", "symmetric_eigen", "spectrum_residuals"]

# Relative asymmetry beyond this is a hard input error, not noise.
_ASYM_TOL = 1e-12
# Budget for |P v - lambda v| and |V^T V - I| scaled by n.
_INVARIANT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues (descending) with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    sweeps: int

    def __post_init__(self) -> None:
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _canonical_signs(vecs: np.ndarray) -> None:
    # First component per column that clears the noise floor sets the sign.
    n = vecs.shape[0]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        floor = 1e-12 * np.abs(col).max()
        for i in range(n):
            if abs(col[i]) > floor:
                if col[i] < 0.0:
                    col *= -1.0
                break


def symmetric_eigen(
    matrix: MixingMatrix | np.ndarray, check: bool = True
) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix via cyclic Jacobi.

    Rejects asymmetry above 1e-12 relative to the largest entry. When the
    input is a row-stochastic MixingMatrix the leading eigenpair is
    checked against the constant vector.
    """
    mix = matrix if isinstance(matrix, MixingMatrix) else None
    a = np.array(mix.entries if mix is not None else matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.T).max())
    if asym > _ASYM_TOL * scale:
        raise ValidationError(
            f"matrix is not symmetric: max |A - A^T| = {asym:.3e} "
            f"exceeds {_ASYM_TOL:.0e} relative"
        )
    # Symmetrize roundoff-level asymmetry so both backends see one input.
    a = 0.5 * (a + a.T)
    vals, vecs, sweeps = _kernels.jacobi_eigh(a)
    order = np.argsort(-vals, kind="stable")
    vals = np.ascontiguousarray(vals[order])
    vecs = np.ascontiguousarray(vecs[:, order])
    _canonical_signs(vecs)
    spectrum = Spectrum(eigenvalues=vals, eigenvectors=vecs, sweeps=int(sweeps))
    if check:
        _check_invariants(a, spectrum, mix)
    return spectrum


def spectrum_residuals(
    matrix: MixingMatrix | np.ndarray, s: Spectrum
) -> tuple[float, float]:
    """(max |A v - lambda v|, max |V^T V - I|) for accuracy reporting."""
    a = matrix.entries if isinstance(matrix, MixingMatrix) else np.asarray(matrix)
    resid = a @ s.eigenvectors - s.eigenvectors * s.eigenvalues[None, :]
    gram = s.eigenvectors.T @ s.eigenvectors - np.eye(s.n)
    return float(np.abs(resid).max()), float(np.abs(gram).max())


def _check_invariants(
    a: np.ndarray, s: Spectrum, mix: MixingMatrix | None
) -> None:
    n = s.n
    scale = max(1.0, float(np.abs(a).max()))
    resid, gram = spectrum_residuals(a, s)
    if resid > _INVARIANT_TOL * n * scale:
        raise InternalInvariantError(
            f"eigen residual {resid:.3e} exceeds budget for n={n}"
        )
    if gram > _INVARIANT_TOL * n:
        raise InternalInvariantError(
            f"eigenvector orthonormality defect {gram:.3e} exceeds budget for n={n}"
        )
    if mix is not None and mix.row_stochastic:
        lam1 = float(s.eigenvalues[0])
        if abs(lam1 - 1.0) > 1e-10:
            raise InternalInvariantError(
                f"leading eigenvalue of a row-stochastic matrix is {lam1!r}, not 1"
            )
        v1 = s.eigenvectors[:, 0]
        if float(np.abs(v1 - v1.mean()).max()) > 1e-8:
            raise InternalInvariantError(
                "leading eigenvector of a connected row-stochastic matrix "
                "is not constant"
            )
        if n > 1 and float(s.eigenvalues[1]) >= 1.0 - 1e-12:
            raise InternalInvariantError(
                "second eigenvalue reached 1; mixing matrix looks disconnected"
            )
