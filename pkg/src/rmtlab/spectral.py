"""Eigenvalues, empirical spectral distributions and the GUE closed forms.

Conventions
-----------
* Spectra are ``Spectrum``/``ComplexSpectrum`` objects wrapping numpy arrays.
* Histogram bins are half-open ``[lo, hi)`` except the last, which is closed.
* Normalized traces ``tr_n = Tr / n`` are used throughout.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import DomainError, NumericError, UnsupportedSizeError

__all__ = [
    "Spectrum",
    "ComplexSpectrum",
    "Histogram",
    "is_hermitian",
    "eigvals_hermitian",
    "eigvals_general",
    "extreme_eigs",
    "esd_histogram",
    "semicircle_density",
    "semicircle_cdf",
    "ks_distance",
    "hermite_functions",
    "gue_level_density",
    "joint_density_gn",
    "hermitian_calculus",
    "schatten_norm",
]


@dataclass(frozen=True)
class Spectrum:
    """Real eigenvalues in ascending order."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def to_csv(self) -> str:
        return "".join(f"{v!r}\n" for v in self.values.tolist())


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues of a general square matrix, with multiplicity."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def to_csv(self) -> str:
        return "".join(f"{v.real!r},{v.imag!r}\n" for v in self.values.tolist())


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lo,hi,count\n")
        edges = self.edges.tolist()
        for lo, hi, c in zip(edges[:-1], edges[1:], self.counts.tolist()):
            buf.write(f"{lo!r},{hi!r},{int(c)}\n")
        buf.write(f"-inf,{edges[0]!r},{self.underflow}\n")
        buf.write(f"{edges[-1]!r},inf,{self.overflow}\n")
        return buf.getvalue()


def _square(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{what} must be square, got shape {m.shape}")
    return m


def is_hermitian(h: np.ndarray) -> bool:
    """max |H - H*| <= 1e-12 (1 + max |H|)."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    if h.size == 0:
        return True
    return float(np.max(np.abs(h - h.conj().T))) <= 1e-12 * (1.0 + float(np.max(np.abs(h))))


def eigvals_hermitian(h: np.ndarray, check_residual: bool = False) -> Spectrum:
    """Ascending eigenvalues of a Hermitian matrix.

    With ``check_residual`` the eigenvectors are computed as well and every
    pair must satisfy ``|Hv - lambda v| <= 1e-10 |H|``.
    """
    h = _square(h, "Hermitian matrix")
    if not is_hermitian(h):
        raise DomainError("matrix is not Hermitian within tolerance")
    try:
        if check_residual:
            w, v = np.linalg.eigh(h)
            resid = np.linalg.norm(h @ v - v * w, axis=0)
            bound = 1e-10 * max(np.linalg.norm(h, 2), np.finfo(float).tiny)
            if resid.size and resid.max() > bound:
                raise NumericError(f"eigenpair residual {resid.max():.3e} exceeds {bound:.3e}")
        else:
            w = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Hermitian eigensolver did not converge: {exc}") from exc
    return Spectrum(np.asarray(w, dtype=np.float64))


def eigvals_general(m: np.ndarray) -> ComplexSpectrum:
    m = _square(m)
    try:
        w = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    return ComplexSpectrum(np.asarray(w, dtype=np.complex128))


def extreme_eigs(h: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) with lambda_min <= lambda_max."""
    w = eigvals_hermitian(h).values
    return float(w[0]), float(w[-1])


def esd_histogram(spectrum, edges) -> Histogram:
    values = np.asarray(spectrum, dtype=np.float64).ravel()
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("histogram edges must be strictly ascending with at least two entries")
    # np.histogram uses [lo, hi) for every bin but the last, which is closed.
    counts, _ = np.histogram(values, bins=edges)
    under = int(np.count_nonzero(values < edges[0]))
    over = int(np.count_nonzero(values > edges[-1]))
    return Histogram(edges, counts.astype(np.int64), under, over)


def semicircle_density(x):
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) <= 2.0
    out = np.zeros_like(x)
    out[inside] = np.sqrt(4.0 - x[inside] ** 2) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=np.float64), -2.0, 2.0)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi
    return out if out.ndim else float(out)


def ks_distance(sample, cdf: Callable) -> float:
    """Kolmogorov-Smirnov sup-distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def hermite_functions(count: int, t) -> np.ndarray:
    """Orthonormal Hermite functions phi_0..phi_{count-1} evaluated at ``t``.

    Uses phi_{k+1} = sqrt(2/(k+1)) t phi_k - sqrt(k/(k+1)) phi_{k-1}, which
    never forms a factorial.  Output shape is ``(count,) + shape(t)``.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((count,) + t.shape)
    if count == 0:
        return out
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * t * t)
    if count > 1:
        out[1] = np.sqrt(2.0) * t * out[0]
    for k in range(1, count - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * t * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def gue_level_density(n: int, x):
    """Mean eigenvalue density h_n(x) of SGRM(n, 1/n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    x = np.asarray(x, dtype=np.float64)
    phi = hermite_functions(n, np.sqrt(n / 2.0) * x)
    h = np.sum(phi * phi, axis=0) / np.sqrt(2.0 * n)
    return h if h.ndim else float(h)


def _vandermonde_sq(lams: np.ndarray) -> np.ndarray:
    # lams has shape (..., n)
    n = lams.shape[-1]
    out = np.ones(lams.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            out = out * (lams[..., j] - lams[..., i]) ** 2
    return out


@lru_cache(maxsize=None)
def _gn_normalizer(n: int) -> float:
    # With lambda = t sqrt(2/n) the weight becomes exp(-sum t^2); the integrand
    # is then a polynomial of degree n(n-1), so an 8-node Gauss-Hermite tensor
    # rule is exact for n <= 3.
    nodes, weights = hermgauss(8)
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    wgrids = np.meshgrid(*([weights] * n), indexing="ij")
    lam = np.stack(grids, axis=-1) * np.sqrt(2.0 / n)
    w = np.prod(np.stack(wgrids, axis=-1), axis=-1)
    integral = np.sum(w * _vandermonde_sq(lam)) * (2.0 / n) ** (n / 2.0)
    return 1.0 / integral


def joint_density_gn(lams) -> float:
    """Joint eigenvalue density g_n of SGRM(n, 1/n), n = len(lams) <= 3."""
    lams = np.asarray(lams, dtype=np.float64)
    n = lams.size
    if n < 1:
        raise DomainError("need at least one eigenvalue")
    if n > 3:
        raise UnsupportedSizeError(f"joint_density_gn supports n <= 3, got n = {n}")
    c = _gn_normalizer(n)
    return float(c * _vandermonde_sq(lams) * np.exp(-0.5 * n * np.sum(lams * lams)))


def hermitian_calculus(h: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """f(H) = V f(w) V* for Hermitian H."""
    h = _square(h, "Hermitian matrix")
    if not is_hermitian(h):
        raise DomainError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(h)
    return (v * f(w)) @ v.conj().T


def schatten_norm(m: np.ndarray, p: float) -> float:
    """tr_n(|M|^p)^(1/p) with the normalized trace.

    The eigenvalues of |M| are the singular values of M, which are used
    directly; the largest one is factored out so huge p does not overflow.
    """
    m = _square(m)
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    if m.size == 0:
        raise DomainError("empty matrix")
    s = np.linalg.svd(m, compute_uv=False)
    smax = float(s.max())
    if smax == 0.0:
        return 0.0
    return smax * float(np.mean((s / smax) ** p)) ** (1.0 / p)
