"""Matrix-valued Stieltjes transforms of linear GUE pencils.

A pencil is S_n = a0 (x) 1 + sum_i a_i (x) X_i with m x m coefficients and
independent SGRM(n, 1/n) matrices X_i.  Its free limit s replaces the X_i by
a semicircular system; the limiting transform G solves

    a0 + sum_i a_i G a_i + G^{-1} = lambda,     Im lambda > 0.

This module assembles S_n, estimates G_n by Monte Carlo, solves for G,
reconstructs the limiting spectrum by Stieltjes inversion and runs the
containment and Wishart-edge experiments.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import _mc
from .ensembles import EnsembleSpec, Seed, sample_ginibre, sample_gue
from .errors import ConvergenceError, DomainError, NumericError
from .freemoments import gue_even_moments
from .spectral import is_hermitian

__all__ = [
    "CoefficientFamily",
    "StieltjesPoint",
    "TransformValue",
    "build_sn",
    "partial_trace",
    "estimate_gn",
    "solve_g",
    "master_residual",
    "master_bound",
    "gap_bound",
    "semicircle_transform",
    "SpectrumReconstruction",
    "reconstruct_spectrum",
    "containment_test",
    "wishart_extremes",
    "ResidualSeries",
    "residual_series",
    "polynomial_trace_stats",
    "loglog_slope",
]


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def _imag_part(g: np.ndarray) -> np.ndarray:
    return (g - g.conj().T) / 2j


@dataclass
class CoefficientFamily:
    """Coefficients (a0, a1, ..., ar) of a linear pencil, each m x m."""

    a0: np.ndarray
    a: list = field(default_factory=list)
    selfadjoint: bool = True

    def __post_init__(self):
        self.a0 = np.atleast_2d(np.asarray(self.a0, dtype=np.complex128))
        self.a = [np.atleast_2d(np.asarray(ai, dtype=np.complex128)) for ai in self.a]
        m = self.a0.shape[0]
        for ai in [self.a0, *self.a]:
            if ai.shape != (m, m):
                raise DomainError(f"all coefficients must be {m}x{m}, got {ai.shape}")
            if self.selfadjoint and not is_hermitian(ai):
                raise DomainError("selfadjoint family has a non-Hermitian coefficient")

    @classmethod
    def scalar(cls, a0: float = 0.0, *a: float) -> "CoefficientFamily":
        return cls(np.array([[a0]]), [np.array([[x]]) for x in (a or (1.0,))])

    @property
    def m(self) -> int:
        return self.a0.shape[0]

    @property
    def r(self) -> int:
        return len(self.a)

    @property
    def K(self) -> float:
        return _opnorm(self.a0) + 4.0 * sum(_opnorm(ai) for ai in self.a)

    @property
    def C(self) -> float:
        return np.pi ** 2 * self.m ** 3 / 8.0 * sum(_opnorm(ai) ** 2 for ai in self.a) ** 2

    def spectral_bound(self) -> float:
        """Upper bound for |s|: the semicircular elements have norm 2."""
        return _opnorm(self.a0) + 2.0 * sum(_opnorm(ai) for ai in self.a)

    def to_dict(self) -> dict:
        def enc(x):
            return [[[v.real, v.imag] for v in row] for row in x.tolist()]
        return {"a0": enc(self.a0), "a": [enc(ai) for ai in self.a], "selfadjoint": self.selfadjoint}


@dataclass(frozen=True)
class StieltjesPoint:
    """A matrix argument lambda whose imaginary part is positive definite."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lam, dtype=np.complex128))
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise DomainError(f"lambda must be square, got shape {lam.shape}")
        if np.linalg.eigvalsh(_imag_part(lam)).min() <= 0:
            raise DomainError("Im lambda must be positive definite")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def scalar(cls, z: complex, m: int = 1) -> "StieltjesPoint":
        return cls(complex(z) * np.eye(m))

    @property
    def m(self) -> int:
        return self.lam.shape[0]

    def scalar_value(self) -> complex | None:
        """z if lambda = z I, else None."""
        z = self.lam[0, 0]
        return complex(z) if np.allclose(self.lam, z * np.eye(self.m), rtol=0, atol=0) else None


@dataclass
class TransformValue:
    """An m x m transform value with solver / sampler diagnostics."""

    g: np.ndarray
    stderr: np.ndarray | None = None
    iterations: int = 0
    residual: float = float("nan")
    max_imag_eig: float = float("nan")

    def imag(self) -> np.ndarray:
        return _imag_part(self.g)

    def to_json(self, pt: StieltjesPoint | None = None) -> str:
        enc = lambda x: [[[v.real, v.imag] for v in row] for row in np.atleast_2d(x).tolist()]
        out = {"g": enc(self.g), "iterations": self.iterations, "residual": self.residual}
        if pt is not None:
            out["lambda"] = enc(pt.lam)
        if self.stderr is not None:
            out["stderr"] = np.atleast_2d(self.stderr).tolist()
        return json.dumps(out)


def _as_point(pt) -> StieltjesPoint:
    return pt if isinstance(pt, StieltjesPoint) else StieltjesPoint(pt)


def build_sn(coeffs: CoefficientFamily, xs: Sequence[np.ndarray], n: int | None = None) -> np.ndarray:
    """a0 (x) 1_n + sum_i a_i (x) X_i as a dense mn x mn matrix.

    ``n`` is only needed when there are no X_i (r = 0).
    """
    if len(xs) != coeffs.r:
        raise DomainError(f"expected {coeffs.r} matrices, got {len(xs)}")
    if coeffs.r:
        n = np.shape(xs[0])[0]
    elif n is None:
        raise DomainError("n is required when the family has no random coefficients")
    for x in xs:
        if np.shape(x) != (n, n):
            raise DomainError(f"all X_i must be {n}x{n}, got {np.shape(x)}")
        if coeffs.selfadjoint and not is_hermitian(x):
            raise DomainError("selfadjoint pencil needs Hermitian X_i")
    s = np.kron(coeffs.a0, np.eye(n))
    for ai, x in zip(coeffs.a, xs):
        s += np.kron(ai, x)
    return s


def _pencil(coeffs: CoefficientFamily, n: int, rng: np.random.Generator) -> np.ndarray:
    if coeffs.r == 0:
        return build_sn(coeffs, [], n)
    spec = EnsembleSpec("gue", n)
    return build_sn(coeffs, [sample_gue(spec, rng) for _ in range(coeffs.r)])


def partial_trace(r: np.ndarray, m: int, n: int) -> np.ndarray:
    """(id_m (x) tr_n)(R) for an mn x mn matrix R."""
    return np.einsum("ajbj->ab", r.reshape(m, n, m, n)) / n


def _scalar_gue_params(coeffs: CoefficientFamily) -> tuple[float, float]:
    # For m = 1, a0 + sum a_i X_i has the law of c + s X with X ~ SGRM(n, 1/n).
    if coeffs.m != 1 or not coeffs.selfadjoint:
        raise DomainError("the control-variate estimator needs a scalar selfadjoint pencil")
    c = float(coeffs.a0[0, 0].real)
    s = float(np.sqrt(sum(abs(ai[0, 0]) ** 2 for ai in coeffs.a)))
    return c, s


def _resolvent_control(coeffs: CoefficientFamily, n: int, z: complex, degree: int, width: float = 3.0):
    """Chebyshev interpolant of 1/(z - x) and its exact expectation under the pencil."""
    c, s = _scalar_gue_params(coeffs)
    half = width * s if s > 0 else 1.0
    coef = cheb.chebinterpolate(lambda u: 1.0 / (z - (c + half * u)), degree)
    power = cheb.cheb2poly(coef)
    moments = gue_even_moments(n, degree // 2 + 1)
    expect = 0j
    for j, pj in enumerate(power):
        if j % 2 == 0:
            expect += pj * float(moments[j // 2]) * (s / half) ** j
    return c, half, coef, expect


def estimate_gn(coeffs: CoefficientFamily, n: int, pt, replicas: int, seed: Seed | int,
                mapper: _mc.Mapper | None = None, control_degree: int | None = None) -> TransformValue:
    """Monte Carlo estimate of G_n(lambda) = E (id (x) tr_n)((lambda (x) 1 - S_n)^{-1}).

    ``control_degree`` (scalar pencils and lambda = z only) subtracts a
    Chebyshev interpolant p of 1/(z - x) from every sample and adds back the
    exact E tr_n p(S_n), computed from the Harer-Zagier GUE moments.  The
    estimator stays unbiased; its variance drops by orders of magnitude.
    """
    pt = _as_point(pt)
    m = coeffs.m
    if pt.m != m:
        raise DomainError(f"lambda is {pt.m}x{pt.m} but coefficients are {m}x{m}")
    z = pt.scalar_value()
    lam_big = np.kron(pt.lam, np.eye(n))

    control = None
    if control_degree is not None:
        if z is None:
            raise DomainError("the control-variate estimator needs lambda = z * identity")
        control = _resolvent_control(coeffs, n, z, control_degree)

    def one(s: Seed) -> np.ndarray:
        sn = _pencil(coeffs, n, s.generator())
        if m == 1 and z is not None and coeffs.selfadjoint:
            mu = np.linalg.eigvalsh(sn)
            vals = 1.0 / (z - mu)
            if control is not None:
                c, half, coef, _ = control
                vals = vals - cheb.chebval((mu - c) / half, coef)
            return np.array([[vals.mean()]])
        try:
            res = np.linalg.solve(lam_big - sn, np.eye(m * n))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"resolvent is singular: {exc}") from exc
        return partial_trace(res, m, n)

    values = _mc.run_replicas(one, seed, replicas, mapper)
    mean = values.mean(axis=0)
    if control is not None:
        mean = mean + control[3]
    if replicas > 1:
        se = np.sqrt(values.real.var(axis=0, ddof=1) + values.imag.var(axis=0, ddof=1)) / np.sqrt(replicas)
    else:
        se = np.zeros(mean.shape)
    return TransformValue(mean, stderr=se, iterations=replicas,
                          max_imag_eig=float(np.linalg.eigvalsh(_imag_part(mean)).max()))


def _master_lhs(coeffs: CoefficientFamily, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    out = coeffs.a0 + ginv
    for ai in coeffs.a:
        out = out + ai @ g @ ai
    return out


def master_residual(coeffs: CoefficientFamily, g, pt) -> float:
    """|| a0 + sum a_i g a_i + g^{-1} - lambda || in operator norm."""
    pt = _as_point(pt)
    g = g.g if isinstance(g, TransformValue) else np.atleast_2d(np.asarray(g, dtype=np.complex128))
    if np.linalg.cond(g) > 1e14:
        raise DomainError("transform value is singular")
    return _opnorm(_master_lhs(coeffs, g, np.linalg.inv(g)) - pt.lam)


def master_bound(coeffs: CoefficientFamily, n: int, pt) -> float:
    """C/n^2 (K + |lambda|)^2 |(Im lambda)^{-1}|^5."""
    pt = _as_point(pt)
    inv_im = _opnorm(np.linalg.inv(_imag_part(pt.lam)))
    return coeffs.C / n ** 2 * (coeffs.K + _opnorm(pt.lam)) ** 2 * inv_im ** 5


def gap_bound(coeffs: CoefficientFamily, n: int, pt) -> float:
    """4C/n^2 (K + |lambda|)^2 |(Im lambda)^{-1}|^7, the bound on |G_n - G|."""
    pt = _as_point(pt)
    inv_im = _opnorm(np.linalg.inv(_imag_part(pt.lam)))
    return 4.0 * coeffs.C / n ** 2 * (coeffs.K + _opnorm(pt.lam)) ** 2 * inv_im ** 7


def semicircle_transform(z) -> complex:
    """Closed-form (z - sqrt(z^2 - 4))/2 on the branch with Im g < 0 for Im z > 0."""
    z = complex(z)
    g = (z - np.sqrt(z - 2) * np.sqrt(z + 2)) / 2
    return complex(g)


def _newton_step(coeffs: CoefficientFamily, g: np.ndarray, ginv: np.ndarray, resid: np.ndarray) -> np.ndarray:
    # D Phi[H] = sum a_i H a_i - G^{-1} H G^{-1}; vec(A H B) = (B^T kron A) vec(H).
    jac = -np.kron(ginv.T, ginv)
    for ai in coeffs.a:
        jac = jac + np.kron(ai.T, ai)
    h = np.linalg.solve(jac, -resid.reshape(-1, order="F"))
    return h.reshape(g.shape, order="F")


def solve_g(coeffs: CoefficientFamily, pt, tol: float = 1e-12, max_iter: int = 20000,
            initial: np.ndarray | None = None, newton_after: int = 25) -> TransformValue:
    """Solve the matrix master equation for G(lambda).

    Fixed-point iteration G <- (lambda - a0 - sum a_i G a_i)^{-1} from
    G0 = lambda^{-1}, switching to the averaged map G <- (G + F(G))/2 once the
    residual stops decreasing.  After ``newton_after`` iterations Newton steps
    are attempted; a step is kept only if it lowers the residual and keeps
    Im G negative semidefinite, so the iterate never leaves the half-space
    the fixed-point map preserves.
    """
    if not coeffs.selfadjoint:
        raise DomainError("solve_g needs selfadjoint coefficients")
    pt = _as_point(pt)
    lam = pt.lam
    if pt.m != coeffs.m:
        raise DomainError(f"lambda is {pt.m}x{pt.m} but coefficients are {coeffs.m}x{coeffs.m}")
    slack = 1e-10

    def fmap(g):
        rhs = lam - coeffs.a0
        for ai in coeffs.a:
            rhs = rhs - ai @ g @ ai
        return np.linalg.inv(rhs)

    def imag_max(g):
        return float(np.linalg.eigvalsh(_imag_part(g)).max())

    g = np.linalg.inv(lam) if initial is None else np.array(initial, dtype=np.complex128)
    if imag_max(g) > slack:
        g = np.linalg.inv(lam)
    worst_imag = imag_max(g)
    damped = False
    prev = np.inf
    for it in range(max_iter + 1):
        ginv = np.linalg.inv(g)
        resid_mat = _master_lhs(coeffs, g, ginv) - lam
        res = _opnorm(resid_mat)
        if res <= tol:
            return TransformValue(g, iterations=it, residual=res, max_imag_eig=worst_imag)
        if it == max_iter:
            break
        if it >= newton_after or initial is not None:
            try:
                step = _newton_step(coeffs, g, ginv, resid_mat)
            except np.linalg.LinAlgError:
                step = None
            t = 1.0
            while step is not None and t > 1e-6:
                cand = g + t * step
                try:
                    cand_res = _opnorm(_master_lhs(coeffs, cand, np.linalg.inv(cand)) - lam)
                except np.linalg.LinAlgError:
                    cand_res = np.inf
                if cand_res < res and imag_max(cand) <= slack:
                    g, prev = cand, res
                    worst_imag = max(worst_imag, imag_max(g))
                    break
                t /= 2
            else:
                step = None
            if step is not None:
                continue
        new = fmap(g)
        if res > prev:
            damped = True
        g = 0.5 * (g + new) if damped else new
        worst_imag = max(worst_imag, imag_max(g))
        prev = res
    raise ConvergenceError(f"master equation did not converge in {max_iter} iterations "
                           f"(residual {res:.3e})", residual=res, iterations=max_iter)


@dataclass
class SpectrumReconstruction:
    energies: np.ndarray
    density: np.ndarray
    eta: float
    threshold: float
    support: list = field(default_factory=list)

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.energies)) if hasattr(np, "trapezoid") \
            else float(np.trapz(self.density, self.energies))

    def distance(self, x) -> np.ndarray:
        """Distance from each x to the support estimate (inf if it is empty)."""
        x = np.asarray(x, dtype=np.float64)
        d = np.full(x.shape, np.inf)
        for lo, hi in self.support:
            d = np.minimum(d, np.maximum(0.0, np.maximum(lo - x, x - hi)))
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("energy,density\n")
        for e, rho in zip(self.energies.tolist(), self.density.tolist()):
            buf.write(f"{e},{rho}\n")
        return buf.getvalue()


def _support_intervals(energies: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    for a, b in zip(starts, ends):
        out.append((float(energies[a]), float(energies[b])))
    return out


def reconstruct_spectrum(coeffs: CoefficientFamily, energies, eta: float,
                         threshold: float | None = None, tol: float = 1e-12) -> SpectrumReconstruction:
    """Density (1/pi) Im tr_m(-G((E + i eta) I)) on a grid, plus its support.

    Grid points are solved in order, each warm-started from its neighbour.
    The support estimate is the closure of {E : density > threshold} with the
    default threshold max(10 eta, 1e-3).
    """
    if not eta > 0:
        raise DomainError("eta must be positive")
    energies = np.asarray(energies, dtype=np.float64)
    if threshold is None:
        threshold = max(10.0 * eta, 1e-3)
    m = coeffs.m
    density = np.empty(energies.size)
    prev = None
    for k, e in enumerate(energies):
        pt = StieltjesPoint.scalar(e + 1j * eta, m)
        sol = solve_g(coeffs, pt, tol=tol, initial=prev)
        prev = sol.g
        density[k] = max(0.0, -np.trace(sol.g).imag / (np.pi * m))
    support = _support_intervals(energies, density > threshold)
    return SpectrumReconstruction(energies, density, eta, threshold, support)


def default_support(coeffs: CoefficientFamily, eta: float = 1e-3, step: float = 1e-3) -> SpectrumReconstruction:
    bound = coeffs.spectral_bound() + 0.5
    grid = np.arange(-bound, bound + step / 2, step)
    return reconstruct_spectrum(coeffs, grid, eta)


def containment_test(coeffs: CoefficientFamily, n: int, eps: float, seed: Seed | int,
                     support: SpectrumReconstruction | None = None) -> int:
    """Number of eigenvalues of one draw of S_n farther than eps from the limit support."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not coeffs.selfadjoint:
        raise DomainError("containment needs a selfadjoint pencil")
    if support is None:
        support = default_support(coeffs)
    seed = seed if isinstance(seed, Seed) else Seed(int(seed))
    sn = _pencil(coeffs, n, seed.generator())
    mu = np.linalg.eigvalsh(sn)
    return int(np.count_nonzero(support.distance(mu) > eps))


def wishart_extremes(r: int, n: int, seed: Seed | int) -> tuple[float, float]:
    """Extreme eigenvalues of sum_i Y_i* Y_i for r independent Ginibre(n) draws.

    With coefficients a_i = e_{i1} (matrix units) the pencil satisfies
    S_n* S_n = sum_i Y_i* Y_i, so the limiting edges are (sqrt(r) -+ 1)^2.
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    seed = seed if isinstance(seed, Seed) else Seed(int(seed))
    rng = seed.generator()
    spec = EnsembleSpec("ginibre", n)
    w = np.zeros((n, n), dtype=np.complex128)
    for _ in range(r):
        y = sample_ginibre(spec, rng)
        w += y.conj().T @ y
    w = (w + w.conj().T) / 2
    mu = np.linalg.eigvalsh(w)
    return float(mu[0]), float(mu[-1])


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


@dataclass
class ResidualSeries:
    n: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    stderr: list = field(default_factory=list)
    bound: list = field(default_factory=list)

    def residual_slope(self) -> float:
        return loglog_slope(self.n, self.residual)

    def gap_slope(self) -> float:
        return loglog_slope(self.n, self.gap)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,residual,gap,stderr,bound\n")
        for row in zip(self.n, self.residual, self.gap, self.stderr, self.bound):
            buf.write(",".join(repr(float(v)) if i else str(v) for i, v in enumerate(row)) + "\n")
        return buf.getvalue()


def residual_series(coeffs: CoefficientFamily, pt, n_list: Sequence[int], replicas: int,
                    seed: Seed | int, mapper: _mc.Mapper | None = None,
                    control_degree: int | None = None) -> ResidualSeries:
    """Master-equation residual and |G_n - G| of Monte Carlo G_n across n."""
    pt = _as_point(pt)
    g = solve_g(coeffs, pt).g
    out = ResidualSeries()
    for n in n_list:
        est = estimate_gn(coeffs, n, pt, replicas, seed, mapper, control_degree)
        out.n.append(int(n))
        out.residual.append(master_residual(coeffs, est, pt))
        out.gap.append(_opnorm(est.g - g))
        out.stderr.append(float(np.max(est.stderr)))
        out.bound.append(master_bound(coeffs, n, pt))
    return out


def polynomial_trace_stats(coeffs: CoefficientFamily, n: int, poly: Sequence[float], replicas: int,
                           seed: Seed | int, mapper: _mc.Mapper | None = None) -> tuple[float, float]:
    """Mean and variance over replicas of (tr_m (x) tr_n)(f(S_n)), f a power series in x."""
    if not coeffs.selfadjoint:
        raise DomainError("needs a selfadjoint pencil")
    poly = np.asarray(poly, dtype=np.float64)

    def one(s: Seed) -> float:
        mu = np.linalg.eigvalsh(_pencil(coeffs, n, s.generator()))
        return float(np.polynomial.polynomial.polyval(mu, poly).mean())

    values = _mc.run_replicas(one, seed, replicas, mapper)
    return float(values.mean()), float(values.var(ddof=1)) if replicas > 1 else 0.0
