"""Dense complex Hermitian linear algebra.

Eigendecomposition, functional calculus and Schatten norms under either the
normalized trace (tr/n, the fuzzy-torus convention) or the counting trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput, SymbolDomainError

HERMITIAN_RTOL = 1e-12

_TRACE_MODES = ("normalized", "counting")


def _as_square(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix plus the trace convention used for its norms."""

    data: np.ndarray
    trace_mode: str = "normalized"

    def __post_init__(self):
        a = _as_square(self.data)
        if self.trace_mode not in _TRACE_MODES:
            raise ValueError(f"trace_mode must be one of {_TRACE_MODES}")
        dev = np.linalg.norm(a - a.conj().T)
        scale = max(np.linalg.norm(a), 1e-300)
        if dev > HERMITIAN_RTOL * scale and dev > 1e-300:
            raise NonHermitianInput(
                f"relative Hermitian deviation {dev / scale:.3e} exceeds {HERMITIAN_RTOL:.0e}"
            )
        object.__setattr__(self, "data", 0.5 * (a + a.conj().T))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def norm(self, p) -> float:
        return schatten_norm(self.data, p, self.trace_mode)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues ascending; eigenvector columns unitary."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class SchattenIndex:
    """Exponent p in [1, inf]; math.inf is a valid value."""

    p: float

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"Schatten exponent must satisfy p >= 1, got {self.p}")

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def reciprocal(self) -> float:
        return 0.0 if self.is_inf else 1.0 / self.p


def _p_value(p) -> float:
    if isinstance(p, SchattenIndex):
        return p.p
    p = float(p)
    if not p >= 1:
        raise ValueError(f"Schatten exponent must satisfy p >= 1, got {p}")
    return p


def eig_hermitian(H: HermitianOperator) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    w, v = np.linalg.eigh(H.data)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def schatten_norm(A, p, trace_mode: str = "normalized") -> float:
    """(sum_i sigma_i^p * w)^(1/p), w = 1/n for the normalized trace.

    p = inf returns the largest singular value (no weight).
    """
    a = _as_square(A)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if trace_mode not in _TRACE_MODES:
        raise ValueError(f"trace_mode must be one of {_TRACE_MODES}")
    pv = _p_value(p)
    sigma = np.linalg.svd(a, compute_uv=False)
    if math.isinf(pv):
        return float(sigma[0]) if sigma.size else 0.0
    w = 1.0 / a.shape[0] if trace_mode == "normalized" else 1.0
    # scale out the largest singular value to avoid overflow at large p
    top = float(sigma[0]) if sigma.size else 0.0
    if top == 0.0:
        return 0.0
    return top * float(np.sum((sigma / top) ** pv) * w) ** (1.0 / pv)


def schatten_norm_batch(stack: np.ndarray, p, trace_mode: str = "normalized") -> np.ndarray:
    """schatten_norm over the leading axis of a (m, n, n) stack."""
    pv = _p_value(p)
    sigma = np.linalg.svd(stack, compute_uv=False)
    if math.isinf(pv):
        return sigma[..., 0].copy()
    w = 1.0 / stack.shape[-1] if trace_mode == "normalized" else 1.0
    top = np.maximum(sigma[..., :1], 1e-300)
    out = top[..., 0] * (np.sum((sigma / top) ** pv, axis=-1) * w) ** (1.0 / pv)
    return np.where(sigma[..., 0] == 0.0, 0.0, out)


def matrix_function(H: HermitianOperator, fn) -> np.ndarray:
    """V diag(fn(lambda)) V* for a scalar callable fn; no Hermitian claim."""
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    dec = eig_hermitian(H)
    vals = np.asarray(fn(dec.eigenvalues), dtype=np.complex128)
    if not np.all(np.isfinite(vals)):
        raise SymbolDomainError("symbol undefined (non-finite) at an eigenvalue")
    v = dec.eigenvectors
    return (v * vals) @ v.conj().T


def func_calc(H: HermitianOperator, F) -> HermitianOperator:
    """Borel functional calculus F(H) for a real-valued symbol F.

    F may be a SmoothSymbol or any vectorized callable.
    """
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    fn = F if callable(F) else F.__call__
    dec = eig_hermitian(H)
    vals = np.asarray(fn(dec.eigenvalues), dtype=np.complex128)
    if not np.all(np.isfinite(vals)):
        raise SymbolDomainError("symbol undefined (non-finite) at an eigenvalue")
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(vals.imag)) > 1e-12 * scale:
        raise SymbolDomainError("symbol is not real-valued on the spectrum")
    v = dec.eigenvectors
    m = (v * vals.real) @ v.conj().T
    return HermitianOperator(0.5 * (m + m.conj().T), trace_mode=H.trace_mode)


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0,
                     trace_mode: str = "normalized") -> HermitianOperator:
    """Seeded GUE-style Hermitian matrix with operator norm about `scale`."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (g + g.conj().T) / (2.0 * math.sqrt(n))
    return HermitianOperator(scale * h, trace_mode=trace_mode)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-like unitary via QR of a complex Gaussian matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
