"""Fuglede-Kadison determinants, Brown measures and spectral splitting of matrices.

For M in M_n(C) with the normalized trace, Delta(M) = |det M|^(1/n) and the
Brown measure is the eigenvalue-counting measure.  ``brown_grid`` recovers
it numerically as the Laplacian of (1/2pi) log Delta_eps(M - lambda) on a
grid, which is how the measure is defined for operators with no eigenvalues.
``invariant_subspace`` produces the invariant subspace whose compression
carries the part of the measure inside a region, via a reordered Schur form.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .ensembles import EnsembleSpec, Seed, sample_ginibre
from .errors import DomainError, NumericError
from .spectral import schatten_norm

__all__ = [
    "Region",
    "Disc",
    "HalfPlane",
    "Rectangle",
    "Complement",
    "Union",
    "whole_plane",
    "parse_region",
    "BoundaryAmbiguityError",
    "AtomicMeasure",
    "Grid",
    "GridMeasure",
    "ProjectionSplit",
    "fk_determinant",
    "fk_log_determinant",
    "brown_matrix",
    "brown_grid",
    "random_distortion",
    "modified_radius",
    "invariant_subspace",
    "quasinilpotent_profile",
]


class BoundaryAmbiguityError(DomainError):
    """An eigenvalue sits too close to the boundary of the requested region."""


# ---------------------------------------------------------------- regions

class Region:
    """A closed subset of the plane with a membership test.

    ``boundary_distance`` is used to refuse ambiguous splits.  For unions it
    is the minimum over the parts, which is conservative.
    """

    def contains(self, z) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, z) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Disc(Region):
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) <= self.radius

    def boundary_distance(self, z):
        return np.abs(np.abs(np.asarray(z) - self.center) - self.radius)

    def to_dict(self):
        c = complex(self.center)
        return {"disc": {"center": [c.real, c.imag], "radius": self.radius}}


@dataclass(frozen=True)
class HalfPlane(Region):
    """{z : Re(conj(normal) z) <= offset} with a unit normal."""

    normal: complex
    offset: float

    def __post_init__(self):
        if abs(self.normal) == 0:
            raise DomainError("half-plane normal must be nonzero")
        object.__setattr__(self, "normal", complex(self.normal) / abs(self.normal))

    def _proj(self, z):
        return (np.conj(self.normal) * np.asarray(z)).real

    def contains(self, z):
        return self._proj(z) <= self.offset

    def boundary_distance(self, z):
        return np.abs(self._proj(z) - self.offset)

    def to_dict(self):
        return {"half-plane": {"normal": [self.normal.real, self.normal.imag], "offset": self.offset}}


@dataclass(frozen=True)
class Rectangle(Region):
    lower_left: complex
    upper_right: complex

    def __post_init__(self):
        lo, hi = complex(self.lower_left), complex(self.upper_right)
        if not (lo.real < hi.real and lo.imag < hi.imag):
            raise DomainError("rectangle corners must satisfy lower_left < upper_right")

    def contains(self, z):
        z = np.asarray(z)
        lo, hi = complex(self.lower_left), complex(self.upper_right)
        return (z.real >= lo.real) & (z.real <= hi.real) & (z.imag >= lo.imag) & (z.imag <= hi.imag)

    def boundary_distance(self, z):
        z = np.asarray(z)
        lo, hi = complex(self.lower_left), complex(self.upper_right)
        dx = np.maximum(lo.real - z.real, z.real - hi.real)
        dy = np.maximum(lo.imag - z.imag, z.imag - hi.imag)
        outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
        inside = np.minimum(-dx, -dy)
        return np.where(self.contains(z), inside, outside)

    def to_dict(self):
        lo, hi = complex(self.lower_left), complex(self.upper_right)
        return {"rectangle": {"lower_left": [lo.real, lo.imag], "upper_right": [hi.real, hi.imag]}}


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    def contains(self, z):
        return ~self.inner.contains(z)

    def boundary_distance(self, z):
        return self.inner.boundary_distance(z)

    def to_dict(self):
        return {"complement": self.inner.to_dict()}


@dataclass(frozen=True)
class Union(Region):
    parts: tuple

    def contains(self, z):
        out = np.zeros(np.shape(z), dtype=bool)
        for part in self.parts:
            out |= part.contains(z)
        return out

    def boundary_distance(self, z):
        out = np.full(np.shape(z), np.inf)
        for part in self.parts:
            out = np.minimum(out, part.boundary_distance(z))
        return out

    def to_dict(self):
        return {"union": [p.to_dict() for p in self.parts]}


def whole_plane() -> Rectangle:
    return Rectangle(complex(-1e12, -1e12), complex(1e12, 1e12))


def parse_region(spec: dict) -> Region:
    """Build a region from its ``to_dict`` form."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DomainError(f"region must be a single-key mapping, got {spec!r}")
    (kind, body), = spec.items()
    pt = lambda v: complex(v[0], v[1])
    try:
        if kind == "disc":
            return Disc(pt(body["center"]), float(body["radius"]))
        if kind == "half-plane":
            return HalfPlane(pt(body["normal"]), float(body["offset"]))
        if kind == "rectangle":
            return Rectangle(pt(body["lower_left"]), pt(body["upper_right"]))
        if kind == "complement":
            return Complement(parse_region(body))
        if kind == "union":
            return Union(tuple(parse_region(p) for p in body))
    except (KeyError, TypeError, IndexError) as exc:
        raise DomainError(f"malformed {kind} region: {exc}") from exc
    raise DomainError(f"unknown region kind {kind!r}")


# ---------------------------------------------------------------- measures

@dataclass
class AtomicMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128).ravel()
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.points.shape != self.weights.shape:
            raise DomainError("points and weights differ in length")
        if np.any(self.weights <= 0):
            raise DomainError("atom weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {self.weights.sum()!r}, not 1")

    @classmethod
    def from_eigenvalues(cls, values, tol: float = 1e-8) -> "AtomicMeasure":
        """Uniform weights 1/n, merging eigenvalues closer than ``tol``."""
        values = np.asarray(values, dtype=np.complex128).ravel()
        n = values.size
        if n == 0:
            raise DomainError("no eigenvalues")
        order = np.argsort(values.real, kind="stable")
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a in range(n):
            ia = order[a]
            for b in range(a + 1, n):
                ib = order[b]
                if values[ib].real - values[ia].real > tol:
                    break
                if abs(values[ib] - values[ia]) <= tol:
                    parent[find(ib)] = find(ia)
        groups: dict[int, list[int]] = {}
        for i in order:
            groups.setdefault(find(i), []).append(i)
        pts = [values[g].mean() for g in groups.values()]
        wts = [len(g) / n for g in groups.values()]
        return cls(np.array(pts), np.array(wts))

    def mass(self, region: Region) -> float:
        return float(self.weights[region.contains(self.points)].sum())

    def mean(self) -> complex:
        return complex(np.sum(self.points * self.weights))

    def supported_in(self, region: Region) -> bool:
        return bool(np.all(region.contains(self.points)))

    @staticmethod
    def mixture(a: float, first: "AtomicMeasure | None", second: "AtomicMeasure | None") -> "AtomicMeasure":
        """a * first + (1 - a) * second (either part may be absent when a is 0 or 1)."""
        pts, wts = [], []
        if a > 0:
            pts.append(first.points)
            wts.append(a * first.weights)
        if a < 1:
            pts.append(second.points)
            wts.append((1 - a) * second.weights)
        w = np.concatenate(wts)
        return AtomicMeasure(np.concatenate(pts), w / w.sum())

    def matches(self, other: "AtomicMeasure", point_tol: float = 1e-8, weight_tol: float = 1e-12) -> bool:
        """Equality as measures, up to ``point_tol`` in atom positions.

        Atoms are split into unit chunks of the smallest common weight and
        paired by an optimal assignment.
        """
        if abs(self.weights.sum() - other.weights.sum()) > weight_tol:
            return False
        unit = min(self.weights.min(), other.weights.min())

        def expand(mu):
            reps = np.rint(mu.weights / unit).astype(int)
            if np.any(np.abs(reps * unit - mu.weights) > weight_tol * max(1, reps.max())):
                return None
            return np.repeat(mu.points, reps)

        p, q = expand(self), expand(other)
        if p is None or q is None or p.size != q.size:
            return False
        cost = np.abs(p[:, None] - q[None, :])
        rows, cols = linear_sum_assignment(cost)
        return bool(cost[rows, cols].max() <= point_tol)

    def to_json(self) -> str:
        return json.dumps({"atoms": [{"point": [p.real, p.imag], "weight": w}
                                     for p, w in zip(self.points.tolist(), self.weights.tolist())]})


@dataclass(frozen=True)
class Grid:
    """A rectangle [x0, x1] x [y0, y1] divided into nx x ny cells."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1) or self.nx < 1 or self.ny < 1:
            raise DomainError("grid needs x0 < x1, y0 < y1 and positive resolution")

    @classmethod
    def square(cls, half_width: float, cells: int, center: complex = 0) -> "Grid":
        c = complex(center)
        return cls(c.real - half_width, c.real + half_width, c.imag - half_width, c.imag + half_width,
                   cells, cells)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / self.ny

    def centers(self, pad: int = 0) -> np.ndarray:
        """Cell centers as an (ny + 2 pad, nx + 2 pad) complex array."""
        xs = self.x0 + (np.arange(-pad, self.nx + pad) + 0.5) * self.hx
        ys = self.y0 + (np.arange(-pad, self.ny + pad) + 0.5) * self.hy
        return xs[None, :] + 1j * ys[:, None]


@dataclass
class GridMeasure:
    grid: Grid
    mass: np.ndarray  # shape (ny, nx)
    eps: float

    def total(self) -> float:
        return float(self.mass.sum())

    def min_mass(self) -> float:
        return float(self.mass.min())

    def mass_in(self, region: Region) -> float:
        return float(self.mass[region.contains(self.grid.centers())].sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,y,mass\n")
        c = self.grid.centers()
        for z, w in zip(c.ravel().tolist(), self.mass.ravel().tolist()):
            buf.write(f"{z.real},{z.imag},{w}\n")
        return buf.getvalue()


@dataclass
class ProjectionSplit:
    """Block upper-triangular form M = [[T11, T12], [0, T22]] in the basis ``unitary``."""

    basis: np.ndarray
    P: np.ndarray
    T11: np.ndarray
    T12: np.ndarray
    T22: np.ndarray
    a: float
    unitary: np.ndarray
    invariance_residual: float

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def measures(self) -> tuple[AtomicMeasure | None, AtomicMeasure | None]:
        first = brown_matrix(self.T11) if self.T11.size else None
        second = brown_matrix(self.T22) if self.T22.size else None
        return first, second

    def to_json(self) -> str:
        return json.dumps({"dimension": self.unitary.shape[0], "k": self.k, "a": self.a,
                           "invariance_residual": self.invariance_residual})


# ---------------------------------------------------------------- determinants

def _square(m) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def fk_log_determinant(m: np.ndarray, eps: float = 0.0) -> float:
    """log Delta_eps(M) = tr(1/2 log(M*M + eps)); -inf for singular M at eps = 0."""
    m = _square(m)
    if eps < 0:
        raise DomainError("eps must be >= 0")
    s = np.linalg.svd(m, compute_uv=False)
    if eps > 0:
        return float(0.5 * np.mean(np.log(s * s + eps)))
    if s.min() == 0.0:
        return -np.inf
    return float(np.mean(np.log(s)))


def fk_determinant(m: np.ndarray, eps: float = 0.0) -> float:
    """Fuglede-Kadison determinant w.r.t. the normalized trace.

    eps > 0 gives exp(tr(1/2 log(M*M + eps I))); eps = 0 gives |det M|^(1/n),
    both computed from singular values (the eigenvalues of |M|).
    """
    return float(np.exp(fk_log_determinant(m, eps)))


def brown_matrix(m: np.ndarray, tol: float = 1e-8) -> AtomicMeasure:
    """Eigenvalue-counting measure (1/n) sum delta_{lambda_i}."""
    m = _square(m)
    if m.shape[0] == 1:
        return AtomicMeasure(np.array([m[0, 0]]), np.array([1.0]))
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    return AtomicMeasure.from_eigenvalues(values, tol)


def _log_potential(m: np.ndarray, lams: np.ndarray, eps: float) -> np.ndarray:
    # log Delta_eps(M - lambda) = (1/n) sum log diag chol((M-l)*(M-l) + eps).
    n = m.shape[0]
    gram = m.conj().T @ m
    mh = m.conj().T
    eye = np.eye(n)
    out = np.empty(lams.shape)
    for idx, lam in np.ndenumerate(lams):
        a = gram - lam * mh - np.conj(lam) * m + (abs(lam) ** 2 + eps) * eye
        chol = np.linalg.cholesky(a)
        out[idx] = np.mean(np.log(np.diagonal(chol).real))
    return out


def brown_grid(m: np.ndarray, grid: Grid, eps: float | None = None, margin: int = 3) -> GridMeasure:
    """Brown measure estimated on a grid.

    phi(lambda) = (1/2pi) log Delta_eps(M - lambda) is evaluated at cell
    centers (plus one ring outside) and its 5-point Laplacian times the cell
    area is the mass of each cell.  eps defaults to the cell area hx * hy; an
    atom then keeps R^2 / (R^2 + eps) of its mass within radius R, so pass a
    smaller eps when atoms must be resolved to within a few cells.
    The spectrum must lie at least ``margin`` cells inside the grid.
    """
    m = _square(m)
    if eps is None:
        eps = grid.hx * grid.hy
    if not eps > 0:
        raise DomainError("eps must be positive")
    ev = np.linalg.eigvals(m)
    lo_x, hi_x = grid.x0 + margin * grid.hx, grid.x1 - margin * grid.hx
    lo_y, hi_y = grid.y0 + margin * grid.hy, grid.y1 - margin * grid.hy
    if ev.real.min() < lo_x or ev.real.max() > hi_x or ev.imag.min() < lo_y or ev.imag.max() > hi_y:
        pad_x, pad_y = (margin + 1) * grid.hx, (margin + 1) * grid.hy
        raise DomainError(
            "grid does not cover the spectrum with the required margin; try "
            f"x in [{ev.real.min() - pad_x:.4g}, {ev.real.max() + pad_x:.4g}], "
            f"y in [{ev.imag.min() - pad_y:.4g}, {ev.imag.max() + pad_y:.4g}]")
    phi = _log_potential(m, grid.centers(pad=1), eps) / (2.0 * np.pi)
    hx, hy = grid.hx, grid.hy
    c = phi[1:-1, 1:-1]
    lap = ((phi[1:-1, 2:] + phi[1:-1, :-2] - 2 * c) / hx ** 2
           + (phi[2:, 1:-1] + phi[:-2, 1:-1] - 2 * c) / hy ** 2)
    return GridMeasure(grid, lap * hx * hy, eps)


# ---------------------------------------------------------------- distortion and radii

def random_distortion(m: np.ndarray, eps: float, seed: Seed | int, max_retries: int = 8,
                      cond_limit: float = 1e12) -> np.ndarray:
    """M + eps X Y^{-1} with X, Y independent Ginibre matrices.

    Y is redrawn (from the same stream) while its condition number exceeds
    ``cond_limit``.
    """
    m = _square(m)
    if eps < 0:
        raise DomainError("eps must be >= 0")
    if eps == 0:
        return m.copy()
    seed = seed if isinstance(seed, Seed) else Seed(int(seed))
    rng = seed.generator()
    spec = EnsembleSpec("ginibre", m.shape[0])
    x = sample_ginibre(spec, rng)
    for _ in range(max_retries):
        y = sample_ginibre(spec, rng)
        if np.linalg.cond(y) <= cond_limit:
            # X Y^{-1} = (Y^T \ X^T)^T
            return m + eps * np.linalg.solve(y.T, x.T).T
    raise NumericError(f"no well-conditioned Y in {max_retries} draws")


def modified_radius(m: np.ndarray, p: float, k: int) -> float:
    """Finite approximation ||M^k||_{p/k}^{1/k} of the modified spectral radius."""
    m = _square(m)
    if not p > 0 or k < 1:
        raise DomainError("need p > 0 and k >= 1")
    return schatten_norm(np.linalg.matrix_power(m, k), p / k) ** (1.0 / k)


def quasinilpotent_profile(m: np.ndarray, k_max: int) -> list[float]:
    """[ || ((M*)^k M^k)^(1/2k) || for k = 1..k_max ]."""
    m = _square(m)
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    out = []
    power = np.eye(m.shape[0], dtype=np.result_type(m, np.complex128))
    for k in range(1, k_max + 1):
        power = power @ m
        top = np.linalg.eigvalsh(power.conj().T @ power)[-1]
        out.append(float(max(top, 0.0) ** (1.0 / (2 * k))))
    return out


# ---------------------------------------------------------------- invariant subspaces

def invariant_subspace(m: np.ndarray, region: Region, tol: float = 1e-8) -> ProjectionSplit:
    """Invariant subspace carrying the eigenvalues of M inside ``region``.

    The complex Schur form is reordered so those eigenvalues come first; the
    leading Schur vectors span the sum of the corresponding generalized
    eigenspaces.  An eigenvalue within ``tol`` of the boundary is an error.
    """
    m = _square(m).astype(np.complex128)
    n = m.shape[0]
    t, z, sdim = scipy.linalg.schur(m, output="complex", sort=lambda x: bool(region.contains(x)))
    ev = np.diagonal(t)
    close = region.boundary_distance(ev) < tol
    if np.any(close):
        raise BoundaryAmbiguityError(
            f"eigenvalue(s) {ev[close][:3]} within {tol} of the region boundary")
    k = int(np.count_nonzero(region.contains(ev)))
    if sdim != k or not np.all(region.contains(ev[:k])):
        raise NumericError(f"Schur reordering selected {sdim} eigenvalues, expected {k}")
    basis = z[:, :k]
    proj = basis @ basis.conj().T
    resid = float(np.linalg.norm((np.eye(n) - proj) @ m @ proj, 2))
    return ProjectionSplit(basis=basis, P=proj, T11=t[:k, :k], T12=t[:k, k:], T22=t[k:, k:],
                           a=k / n, unitary=z, invariance_residual=resid)
