"""Seeded samplers for the random-matrix families used by the laboratory.

Every sampler is a pure function of ``(spec, seed)``.  Randomness comes from
a counter-based Philox generator keyed by the pair ``(master, stream)``, so a
replica's draws never depend on which worker produced them or in what order.
Gaussians are produced by numpy's ``Generator.standard_normal`` (ziggurat);
bit-identical output is guaranteed for a fixed numpy version.

Matrices are returned as dense ``numpy.ndarray`` objects of dtype
``complex128`` (``float64`` for the deterministic diagonal model).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Seed",
    "EnsembleSpec",
    "InvalidSpecError",
    "derive_seed",
    "sample",
    "sample_gue",
    "sample_ginibre",
    "sample_dt_upper",
    "make_diag_d0",
]

_U64 = (1 << 64) - 1
KINDS = ("gue", "ginibre", "dt-upper", "diag-d0")


class InvalidSpecError(ValueError):
    """Raised when an ensemble description is out of range."""


@dataclass(frozen=True)
class Seed:
    """A point of the sample space: a master seed plus a stream index."""

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= _U64:
                raise ValueError(f"Seed.{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        # The 128-bit Philox key is (master, stream): injective by construction.
        key = np.array([self.master, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


RandomSource = Union[Seed, np.random.Generator]


def derive_seed(master: Seed | int, index: int) -> Seed:
    """Return the seed of stream ``index`` under the same master seed."""
    if isinstance(master, Seed):
        master = master.master
    return Seed(int(master), int(index))


def _rng(source: RandomSource) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    if isinstance(source, Seed):
        return source.generator()
    raise TypeError(f"expected Seed or numpy Generator, got {type(source).__name__}")


@dataclass(frozen=True)
class EnsembleSpec:
    """Which family to draw from.

    ``variance`` is the entry variance; ``None`` means the default ``1/n``.
    It is ignored for ``diag-d0``, and ``ginibre``/``dt-upper`` use the fixed
    density ``(n/pi) exp(-n|z|^2)`` unless a variance is given explicitly.
    """

    kind: str
    n: int
    variance: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidSpecError(f"matrix dimension must be a positive integer, got {self.n!r}")
        if self.kind == "dt-upper" and self.n < 2:
            raise InvalidSpecError("dt-upper needs n >= 2")
        if self.variance is not None and not self.variance > 0:
            raise InvalidSpecError(f"variance must be positive, got {self.variance!r}")

    @property
    def sigma2(self) -> float:
        return 1.0 / self.n if self.variance is None else float(self.variance)


def _complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    # Re and Im each N(0, variance/2), so E|z|^2 = variance.
    scale = np.sqrt(variance / 2.0)
    z = np.empty(shape, dtype=np.complex128)
    z.real = rng.standard_normal(shape)
    z.imag = rng.standard_normal(shape)
    z *= scale
    return z


def sample_gue(spec: EnsembleSpec, seed: RandomSource) -> np.ndarray:
    """Draw X from SGRM(n, sigma^2).

    Diagonal entries are real N(0, sigma^2); above the diagonal Re and Im are
    independent N(0, sigma^2/2).  The lower triangle is the mirror image of
    the upper one, so the result is exactly Hermitian.
    """
    if spec.kind != "gue":
        raise InvalidSpecError(f"sample_gue needs kind 'gue', got {spec.kind!r}")
    rng = _rng(seed)
    n, s2 = spec.n, spec.sigma2
    diag = rng.standard_normal(n) * np.sqrt(s2)
    iu = np.triu_indices(n, 1)
    upper = _complex_gaussian(rng, iu[0].size, s2)
    x = np.zeros((n, n), dtype=np.complex128)
    x[iu] = upper
    x[(iu[1], iu[0])] = upper.conj()
    x[np.diag_indices(n)] = diag
    return x


def sample_ginibre(spec: EnsembleSpec, seed: RandomSource) -> np.ndarray:
    """n x n matrix of i.i.d. complex Gaussians with E|z|^2 = 1/n."""
    if spec.kind != "ginibre":
        raise InvalidSpecError(f"sample_ginibre needs kind 'ginibre', got {spec.kind!r}")
    return _complex_gaussian(_rng(seed), (spec.n, spec.n), spec.sigma2)


def sample_dt_upper(spec: EnsembleSpec, seed: RandomSource) -> np.ndarray:
    """Strictly upper triangular Gaussian matrix (the DT random matrix model).

    The n(n-1)/2 entries above the diagonal are i.i.d. with E|t_ij|^2 = 1/n;
    the diagonal and lower triangle are exactly zero.
    """
    if spec.kind != "dt-upper":
        raise InvalidSpecError(f"sample_dt_upper needs kind 'dt-upper', got {spec.kind!r}")
    n = spec.n
    iu = np.triu_indices(n, 1)
    t = np.zeros((n, n), dtype=np.complex128)
    t[iu] = _complex_gaussian(_rng(seed), iu[0].size, spec.sigma2)
    return t


def make_diag_d0(n: int) -> np.ndarray:
    """diag(1/n, 2/n, ..., 1)."""
    if int(n) != n or n < 1:
        raise InvalidSpecError(f"matrix dimension must be a positive integer, got {n!r}")
    return np.diag(np.arange(1, n + 1, dtype=np.float64) / n)


def sample(spec: EnsembleSpec, seed: RandomSource | None = None) -> np.ndarray:
    """Dispatch on ``spec.kind``."""
    if spec.kind == "diag-d0":
        return make_diag_d0(spec.n)
    if seed is None:
        raise ValueError(f"a seed is required for the random ensemble {spec.kind!r}")
    sampler = {"gue": sample_gue, "ginibre": sample_ginibre, "dt-upper": sample_dt_upper}[spec.kind]
    return sampler(spec, seed)
