"""Strictly upper-triangular Gaussian matrices and their DT-operator limit.

The model T is strictly upper triangular with complex Gaussian entries of
variance 1/n.  Its *-moments converge to those of the DT operator, for which

    tr(((T^k)* T^k)^n) = n^(nk) / (nk + 1)!

and S_k = k ((T^k)* T^k)^(1/k) satisfies F(S_k) -> D_0, the multiplication
operator by t on [0, 1].  F is given implicitly through the parametrization

    x(v) = (sin v / v) exp(v cot v),  F(x(v)) = 1 - v/pi + sin(v)^2 / (pi v),

for v in (0, pi), which maps onto x in (0, e).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from . import _mc
from .ensembles import EnsembleSpec, Seed, sample_dt_upper
from .errors import DomainError, NumericError
from .spectral import ks_distance

__all__ = [
    "DtMomentQuery",
    "FCurvePoint",
    "dt_moment_formula",
    "dt_empirical_moment",
    "x_of_v",
    "log_x_of_v",
    "f_of_v",
    "f_of_x",
    "f_of_log_x",
    "f_curve_point",
    "build_sk",
    "sk_eigenvalues",
    "D0Row",
    "D0Report",
    "d0_convergence_report",
]

E = float(np.e)


@dataclass(frozen=True)
class DtMomentQuery:
    """Moment order ``n`` of the positive element (T^k)* T^k."""

    n: int
    k: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.k) != self.k or self.n < 1 or self.k < 1:
            raise DomainError(f"need integers n >= 1 and k >= 1, got n={self.n}, k={self.k}")


def dt_moment_formula(q: DtMomentQuery) -> Fraction:
    """n^(nk) / (nk + 1)! as an exact rational."""
    nk = q.n * q.k
    return Fraction(q.n ** nk, factorial(nk + 1))


def _trace_power(a: np.ndarray, n: int) -> float:
    # tr_n(A^n) for Hermitian A, split as tr(A^h A^(n-h)) to halve the products.
    size = a.shape[0]
    half = n // 2
    left = np.linalg.matrix_power(a, half) if half else np.eye(size)
    right = np.linalg.matrix_power(a, n - half)
    return float(np.sum(left * right.T).real) / size


def dt_empirical_moment(size: int, q: DtMomentQuery, replicas: int, seed: Seed | int,
                        mapper: _mc.Mapper | None = None) -> tuple[float, float]:
    """Monte Carlo mean and standard error of tr_n(((T^k)* T^k)^n).

    One strictly upper-triangular matrix is drawn per replica from its own
    stream.
    """
    if size < 2:
        raise DomainError(f"size must be >= 2, got {size}")
    if replicas < 2:
        raise DomainError("need at least two replicas for a standard error")
    spec = EnsembleSpec("dt-upper", size)

    def one(s: Seed) -> float:
        t = sample_dt_upper(spec, s.generator())
        p = np.linalg.matrix_power(t, q.k)
        return _trace_power(p.conj().T @ p, q.n)

    values = _mc.run_replicas(one, seed, replicas, mapper)
    mean, se = _mc.mean_stderr(values)
    return float(mean), float(se)


# ---------------------------------------------------------------- the F curve

def log_x_of_v(v):
    """log x(v) = log(sin v / v) + v cot v, accurate where x underflows."""
    v = np.asarray(v, dtype=np.float64)
    return np.log(np.sinc(v / np.pi)) + v * np.cos(v) / np.sin(v)


def x_of_v(v):
    return np.exp(log_x_of_v(v))


def f_of_v(v):
    """Right-hand side 1 - v/pi + sin(v)^2 / (pi v)."""
    v = np.asarray(v, dtype=np.float64)
    return 1.0 - v / np.pi + np.sin(v) ** 2 / (np.pi * v)


@lru_cache(maxsize=1)
def _validated_grid() -> bool:
    v = np.linspace(1e-4, np.pi - 1e-4, 10_001)
    lx = log_x_of_v(v)
    if not np.all(np.diff(lx) < 0):
        raise NumericError("x(v) is not strictly decreasing on the validation grid")
    return True


def _invert(log_target: np.ndarray) -> np.ndarray:
    # Vectorized bisection for log x(v) = log_target on (0, pi); x(v) is decreasing.
    lo = np.zeros_like(log_target)
    hi = np.full_like(log_target, np.pi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            above = log_x_of_v(mid) > log_target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, hi)):
            break
    return 0.5 * (lo + hi)


def f_of_log_x(log_x):
    """F(exp(log_x)) for log_x <= 1, usable where x itself underflows."""
    _validated_grid()
    arr = np.asarray(log_x, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr > 1.0):
        raise DomainError("log x must be <= 1 (x in [0, e])")
    out = np.empty_like(arr)
    zero, top = arr == -np.inf, arr == 1.0
    inner = ~(zero | top)
    out[zero] = 0.0
    out[top] = 1.0
    if np.any(inner):
        out[inner] = f_of_v(_invert(arr[inner]))
    return out if out.ndim else float(out)


def f_of_x(x):
    """F on [0, e]: F(0) = 0, F(e) = 1, strictly increasing in between."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > E):
        raise DomainError("f_of_x is defined on [0, e]")
    with np.errstate(divide="ignore"):
        log_x = np.where(arr == E, 1.0, np.log(arr))
    return f_of_log_x(log_x)


@dataclass(frozen=True)
class FCurvePoint:
    v: float
    x: float
    F: float


def f_curve_point(v: float) -> FCurvePoint:
    if not 0.0 < v < np.pi:
        raise DomainError("v must lie in (0, pi)")
    return FCurvePoint(float(v), float(x_of_v(v)), float(f_of_v(v)))


# ---------------------------------------------------------------- S_k and D_0

def build_sk(t: np.ndarray, k: int) -> np.ndarray:
    """S_k = k ((T^k)* T^k)^(1/k), via an eigendecomposition of (T^k)* T^k."""
    t = np.asarray(t)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DomainError("T must be square")
    if k < 1:
        raise DomainError("k must be >= 1")
    if k == 1:
        return t.conj().T @ t
    p = np.linalg.matrix_power(t, k)
    w, vecs = np.linalg.eigh(p.conj().T @ p)
    root = np.maximum(w, 0.0) ** (1.0 / k)
    s = k * (vecs * root) @ vecs.conj().T
    return 0.5 * (s + s.conj().T)


def sk_eigenvalues(t: np.ndarray, k: int) -> np.ndarray:
    """Eigenvalues of S_k, ascending, as k * sigma_i(T^k)^(2/k)."""
    p = np.linalg.matrix_power(np.asarray(t), k)
    s = np.linalg.svd(p, compute_uv=False)
    return np.sort(k * s ** (2.0 / k))


@dataclass
class D0Row:
    k: int
    ks: float
    trace_f: float
    clipped: int
    clipped_fraction: float


@dataclass
class D0Report:
    size: int
    seed: int
    rows: list[D0Row] = field(default_factory=list)

    def ks_values(self) -> list[float]:
        return [r.ks for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,ks,trace_f,clipped,clipped_fraction\n")
        for r in self.rows:
            buf.write(f"{r.k},{r.ks},{r.trace_f},{r.clipped},{r.clipped_fraction}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"size": self.size, "seed": self.seed,
                           "rows": [r.__dict__ for r in self.rows]}, indent=2)


def _uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def d0_convergence_report(size: int, k_list, seed: Seed | int) -> D0Report:
    """KS distance between the spectrum of F(S_k) and uniform[0, 1], per k.

    One T is drawn from ``seed`` and shared by every k.  Eigenvalues of S_k
    above e are clipped to e (so F maps them to 1); the count is reported.
    """
    k_list = [int(k) for k in k_list]
    if not k_list or k_list != sorted(k_list) or k_list[0] < 1:
        raise DomainError("k_list must be non-empty, ascending and >= 1")
    seed = seed if isinstance(seed, Seed) else Seed(int(seed))
    t = sample_dt_upper(EnsembleSpec("dt-upper", size), seed.generator())
    report = D0Report(size, seed.master)
    for k in k_list:
        lam = sk_eigenvalues(t, k)
        clipped = int(np.count_nonzero(lam > E))
        fvals = f_of_x(np.clip(lam, 0.0, E))
        report.rows.append(D0Row(k, ks_distance(fvals, _uniform_cdf), float(np.mean(fvals)),
                                 clipped, clipped / size))
    return report
