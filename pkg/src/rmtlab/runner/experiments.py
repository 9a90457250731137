"""The ten configurable experiments and their parameter schemas.

Every experiment is a function ``(params, seed, mapper) -> Outcome``; the
``mapper`` fans replicas out and must preserve order.  Randomness comes only
from ``seed``: replica or run ``i`` uses stream ``i`` of that master seed.
"""

from __future__ import annotations

import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .. import brown, dt, freemoments, opval, spectral
from .._mc import Mapper
from ..ensembles import EnsembleSpec, Seed, sample, sample_dt_upper, sample_ginibre, sample_gue
from ..errors import DomainError, NumericError
from . import svg
from .config import ExperimentConfig, Param
from .report import MetricRow, Report, at_least, at_most, reported, within

__all__ = ["Experiment", "Outcome", "EXPERIMENTS", "SCHEMAS", "run_experiment"]


@dataclass
class Outcome:
    metrics: list[MetricRow] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    params: dict[str, Param]
    run: Callable[[dict, int, Mapper], Outcome]


# ---------------------------------------------------------------- parameter rules

def _pos(v) -> bool:
    return v > 0


def _nonneg(v) -> bool:
    return v >= 0


def _int_list(lo: int = 1):
    return lambda v: len(v) > 0 and all(isinstance(x, int) and not isinstance(x, bool) and x >= lo for x in v)


def _ascending_ints(v) -> bool:
    return _int_list(1)(v) and list(v) == sorted(set(v))


def _pos_floats(v) -> bool:
    return len(v) > 0 and all(isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in v)


def _band(v) -> bool:
    return len(v) == 2 and all(isinstance(x, (int, float)) for x in v) and v[0] < v[1]


def _words(v) -> bool:
    return len(v) > 0 and all(isinstance(w, list) and _int_list(1)(w) for w in v)


def _points(v) -> bool:
    return len(v) > 0 and all(len(p) == 2 and p[1] > 0 for p in v)


def _coefficient(v) -> bool:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return True
    arr = np.asarray(v, dtype=float)
    return arr.ndim == 2 and arr.shape[0] == arr.shape[1] and np.allclose(arr, arr.T)


def _coefficients(v) -> bool:
    return len(v) > 0 and all(_coefficient(x) for x in v)


def _regions(v) -> bool:
    for spec in v:
        brown.parse_region(spec)
    return True


def _coeff_family(params: dict) -> opval.CoefficientFamily:
    a0 = np.atleast_2d(np.asarray(params["a0"], dtype=float))
    a = [np.asarray(x, dtype=float) * np.eye(a0.shape[0]) if np.ndim(x) == 0 else np.asarray(x, dtype=float)
         for x in params["a"]]
    if a0.shape == (1, 1) and any(x.shape != (1, 1) for x in a):
        a0 = a0[0, 0] * np.eye(a[0].shape[0])
    return opval.CoefficientFamily(a0, a)


PENCIL = {
    "a0": Param(0.0, (float, list), _coefficient, "a number or a symmetric square matrix"),
    "a": Param([1.0], list, _coefficients, "non-empty list of numbers or symmetric matrices"),
}


# ---------------------------------------------------------------- semicircle

def _semicircle(p: dict, seed: int, mapper: Mapper) -> Outcome:
    n = p["n"]
    edges = np.linspace(-2.5, 2.5, p["bins"] + 1)
    spec = EnsembleSpec("gue", n)

    def one(s: Seed):
        w = spectral.eigvals_hermitian(sample_gue(spec, s.generator())).values
        hist = spectral.esd_histogram(w, edges)
        return spectral.ks_distance(w, spectral.semicircle_cdf), w[-1], hist.counts

    rows = list(mapper(one, [Seed(seed, r) for r in range(p["replicas"])]))
    ks = np.array([r[0] for r in rows])
    top = np.array([r[1] for r in rows])
    counts = np.sum([r[2] for r in rows], axis=0)

    out = Outcome()
    out.metrics += [
        at_most("ks_distance_max", ks.max(), p["ks_bound"]),
        within("lambda_max_low", top.min(), 2.0, p["edge_tolerance"]),
        within("lambda_max_high", top.max(), 2.0, p["edge_tolerance"]),
        within(f"level_density_n{p['level_n']}_at_0", spectral.gue_level_density(p["level_n"], 0.0),
               1.0 / math.pi, 0.01),
    ]
    for m in p["normalization_n"]:
        total = integrate.quad(lambda x: spectral.gue_level_density(m, x), -np.inf, np.inf,
                               epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        out.metrics.append(within(f"level_density_n{m}_integral", total, 1.0, 1e-6))

    width = np.diff(edges)
    density = counts / (counts.sum() * width) if counts.sum() else counts.astype(float)
    buf = io.StringIO()
    buf.write("lo,hi,count,density\n")
    for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, density):
        buf.write(f"{lo},{hi},{int(c)},{d}\n")
    out.artifacts["histogram.csv"] = buf.getvalue()
    xs = np.linspace(-2.5, 2.5, 401)
    out.plots["histogram.svg"] = svg.histogram_plot(edges, density, (xs, spectral.semicircle_density(xs)),
                                                    title=f"GUE n={n} eigenvalues vs semicircle")
    return out


# ---------------------------------------------------------------- freeness

def _freeness(p: dict, seed: int, mapper: Mapper) -> Outcome:
    out = Outcome()
    lines = ["word,oracle,mean,stderr"]
    for w in p["words"]:
        w = tuple(w)
        oracle = freemoments.free_semicircular_moment(w)
        mean, se = freemoments.empirical_mixed_moment(w, p["n"], p["replicas"], seed, mapper)
        label = "-".join(map(str, w))
        out.metrics.append(within(f"mixed_moment_{label}", mean, oracle, p["sigma_multiple"] * se))
        lines.append(f"{label},{oracle},{mean},{se}")
    failures = sum(not freemoments.verify_freeness_def(w, p["max_degree"])
                   for w in freemoments.alternating_words(p["max_letters"], p["alphabet"]))
    out.metrics.append(at_most("freeness_definition_failures", failures, 0))
    out.artifacts["moments.csv"] = "\n".join(lines) + "\n"
    return out


# ---------------------------------------------------------------- master equation

def _default_points() -> list[complex]:
    xs = np.linspace(-3.0, 3.0, 10)
    return [complex(x, y) for y in (0.01, 1.0) for x in xs]


def _master_equation(p: dict, seed: int, mapper: Mapper) -> Outcome:
    coeffs = _coeff_family(p)
    out = Outcome()
    m = coeffs.m
    points = [complex(a, b) for a, b in p["points"]] if p["points"] else _default_points()

    errs, resid = [], []
    for z in points:
        pt = opval.StieltjesPoint.scalar(z, m)
        sol = opval.solve_g(coeffs, pt)
        resid.append(opval.master_residual(coeffs, sol, pt))
        if m == 1:
            shift = coeffs.a0[0, 0].real
            s = math.sqrt(sum(abs(ai[0, 0]) ** 2 for ai in coeffs.a))
            exact = opval.semicircle_transform((z - shift) / s) / s
            errs.append(abs(sol.g[0, 0] - exact))
    if errs:
        out.metrics.append(at_most("closed_form_max_error", max(errs), p["closed_form_tol"]))
    out.metrics.append(reported("solver_max_residual", max(resid)))

    z0 = complex(*p["series_point"])
    pt = opval.StieltjesPoint.scalar(z0, m)
    degree = p["control_degree"] or None
    if degree is not None and m != 1:
        raise DomainError("control_degree needs a scalar pencil; set it to 0")
    series = opval.residual_series(coeffs, pt, p["n_list"], p["replicas"], seed, mapper, degree)
    lo, hi = p["slope_band"]
    out.metrics.append(within("residual_loglog_slope", series.residual_slope(), (lo + hi) / 2, (hi - lo) / 2))
    out.metrics.append(reported("gap_loglog_slope", series.gap_slope(), -2.0))
    out.metrics.append(reported("residual_over_bound_max",
                                max(r / b for r, b in zip(series.residual, series.bound))))
    curves = [(series.n, series.residual, "residual (estimator)", "points")]
    if degree is not None:
        plain = opval.residual_series(coeffs, pt, p["n_list"], p["replicas"], seed, mapper, None)
        out.metrics.append(reported("plain_mc_residual_loglog_slope", plain.residual_slope(), -2.0))
        out.artifacts["residual_series_plain.csv"] = plain.to_csv()
        curves.append((plain.n, plain.residual, "residual (plain MC)", "points"))
    curves.append((series.n, series.bound, "rigorous bound", "line"))
    out.artifacts["residual_series.csv"] = series.to_csv()

    if p["variance_replicas"] > 1:
        variances = [opval.polynomial_trace_stats(coeffs, n, p["variance_poly"], p["variance_replicas"],
                                                  seed, mapper)[1] for n in p["n_list"]]
        out.metrics.append(reported("trace_variance_loglog_slope", opval.loglog_slope(p["n_list"], variances), -2.0))
    out.plots["residual_loglog.svg"] = svg.line_plot(curves, title=f"master-equation residual at z={z0}",
                                                     xlabel="n", ylabel="residual", logx=True, logy=True)
    return out


# ---------------------------------------------------------------- containment and Wishart

def _containment(p: dict, seed: int, mapper: Mapper) -> Outcome:
    coeffs = _coeff_family(p)
    support = opval.default_support(coeffs)
    counts = list(mapper(lambda s: opval.containment_test(coeffs, p["n"], p["eps"], s, support),
                         [Seed(seed, i) for i in range(p["runs"])]))
    clean = sum(c == 0 for c in counts)
    out = Outcome()
    out.metrics.append(at_least("clean_runs", clean, p["min_clean"]))
    out.metrics.append(reported("max_outside_count", max(counts), 0))
    out.artifacts["support.csv"] = "lo,hi\n" + "".join(f"{a},{b}\n" for a, b in support.support)
    out.artifacts["outside_counts.csv"] = "run,outside\n" + "".join(f"{i},{c}\n" for i, c in enumerate(counts))
    return out


def _wishart(p: dict, seed: int, mapper: Mapper) -> Outcome:
    r, n = p["r"], p["n"]
    pairs = list(mapper(lambda s: opval.wishart_extremes(r, n, s), [Seed(seed, i) for i in range(p["seeds"])]))
    lows = np.array([a for a, _ in pairs])
    highs = np.array([b for _, b in pairs])
    (hlo, hhi), (llo, lhi) = p["max_band"], p["min_band"]
    out = Outcome()
    out.metrics += [
        at_least("fraction_max_in_band", float(np.mean((highs >= hlo) & (highs <= hhi))), p["required_fraction"]),
        at_least("fraction_min_in_band", float(np.mean((lows >= llo) & (lows <= lhi))), p["required_fraction"]),
        reported("median_max_eigenvalue", float(np.median(highs)), (math.sqrt(r) + 1) ** 2),
        reported("median_min_eigenvalue", float(np.median(lows)), (math.sqrt(r) - 1) ** 2),
    ]
    out.artifacts["extremes.csv"] = "seed_stream,min,max\n" + "".join(
        f"{i},{a},{b}\n" for i, (a, b) in enumerate(pairs))
    return out


# ---------------------------------------------------------------- Brown measures

def _fk_identity_suite(trials: int, size: int, seed: int) -> dict[str, float]:
    rng = Seed(seed, 1 << 32).generator()
    spec = EnsembleSpec("ginibre", size)
    mult = adj = absval = det = unit = 0.0
    for _ in range(trials):
        s, t = sample_ginibre(spec, rng), sample_ginibre(spec, rng)
        ds, dt_, dst = (brown.fk_determinant(x) for x in (s, t, s @ t))
        mult = max(mult, abs(dst - ds * dt_) / dst)
        adj = max(adj, abs(brown.fk_determinant(s.conj().T) - ds) / ds)
        w, v = np.linalg.eigh(s.conj().T @ s)
        modulus = (v * np.sqrt(np.maximum(w, 0))) @ v.conj().T
        absval = max(absval, abs(brown.fk_determinant(modulus) - ds) / ds)
        # |det|^(1/n) through an LU factorization, independent of the singular values.
        sign, logdet = np.linalg.slogdet(s)
        det = max(det, abs(math.exp(logdet / size) - ds) / ds)
        q, _ = np.linalg.qr(sample_ginibre(spec, rng))
        unit = max(unit, abs(brown.fk_determinant(q) - 1.0))
    return {"fk_multiplicativity_rel_error": mult, "fk_adjoint_rel_error": adj,
            "fk_modulus_rel_error": absval, "fk_det_root_rel_error": det, "fk_unitary_error": unit}


def _brown_matrix_for(p: dict, seed: int) -> np.ndarray:
    n = p["n"]
    if p["matrix"] == "jordan":
        return np.diag(np.ones(n - 1), 1).astype(np.complex128)
    return sample(EnsembleSpec(p["matrix"], n), Seed(seed, 0))


def _shifted(region: brown.Region, shift: complex) -> brown.Region:
    if isinstance(region, brown.Disc):
        return brown.Disc(region.center + shift, region.radius)
    if isinstance(region, brown.HalfPlane):
        return brown.HalfPlane(region.normal, region.offset + (np.conj(region.normal) * shift).real)
    if isinstance(region, brown.Rectangle):
        return brown.Rectangle(region.lower_left + shift, region.upper_right + shift)
    if isinstance(region, brown.Complement):
        return brown.Complement(_shifted(region.inner, shift))
    return region


def _clear_regions(points: np.ndarray, clearance: float, half_width: float,
                   center: complex = 0) -> list[brown.Region]:
    """One region of each shape whose boundary keeps ``clearance`` from every atom.

    Candidates are scanned outward from ``center`` across the grid.
    """
    points = np.asarray(points) - center
    steps = np.linspace(-0.8, 0.8, 161) * half_width
    steps = steps[np.argsort(np.abs(steps), kind="stable")]
    candidates = [
        [brown.Disc(0, r) for r in np.abs(steps[steps > 0])],
        [brown.HalfPlane(1, c) for c in steps],
        [brown.HalfPlane(1j, c) for c in steps],
        [brown.HalfPlane(complex(1, 1), c) for c in steps],
        [brown.Rectangle(complex(-c, -c), complex(c, c)) for c in np.abs(steps[steps > 0])],
        [brown.Complement(brown.Disc(0, r)) for r in np.abs(steps[steps > 0])[::-1]],
    ]
    chosen = []
    for family in candidates:
        for region in family:
            if np.min(region.boundary_distance(points)) >= clearance:
                chosen.append(region)
                break
    return chosen


def _brown_grid(p: dict, seed: int, mapper: Mapper) -> Outcome:
    out = Outcome()
    for name, value in _fk_identity_suite(p["fk_trials"], p["fk_size"], seed).items():
        out.metrics.append(at_most(name, value, 1e-8))
    m = _brown_matrix_for(p, seed)
    cx, cy = p["center"]
    grid = brown.Grid.square(p["half_width"], p["cells"], complex(cx, cy))
    gm = brown.brown_grid(m, grid, p["eps"] or None)
    atoms = brown.brown_matrix(m)
    out.metrics.append(within("grid_total_mass", gm.total(), 1.0, 0.05))
    out.metrics.append(at_least("grid_min_cell_mass", gm.min_mass(), -0.01))
    clearance = p["clearance_cells"] * max(grid.hx, grid.hy)
    shift = complex(cx, cy)
    specs = p["regions"] or [_shifted(r, shift).to_dict()
                             for r in _clear_regions(atoms.points, clearance, p["half_width"], shift)]
    for i, spec in enumerate(specs):
        region = brown.parse_region(spec)
        name = f"region_{i}_{next(iter(spec))}"
        if np.min(region.boundary_distance(atoms.points)) < clearance:
            out.metrics.append(reported(f"{name}_skipped_near_atom", 1.0))
            continue
        diff = abs(gm.mass_in(region) - atoms.mass(region))
        out.metrics.append(at_most(f"{name}_mass_difference", diff, p["region_tolerance"]))
    out.artifacts["grid.csv"] = gm.to_csv()
    out.artifacts["plots/heatmap.svg"] = svg.heatmap(gm.mass, (grid.x0, grid.x1, grid.y0, grid.y1),
                                                     title=f"Brown measure estimate ({p['matrix']}, n={p['n']})")
    return out


def _circular_split(p: dict, seed: int, mapper: Mapper) -> Outcome:
    n = p["n"]
    spec = EnsembleSpec("ginibre", n)

    def one(s: Seed):
        x = sample_ginibre(spec, s.generator())
        ev = np.linalg.eigvals(x)
        inside = float(np.mean(np.abs(ev) <= p["radius"]))
        splits = []
        for r in p["radii"]:
            sp = brown.invariant_subspace(x, brown.Disc(0, r))
            count = int(np.count_nonzero(np.abs(ev) <= r))
            splits.append((np.trace(sp.P).real / n, count / n, sp.invariance_residual / np.linalg.norm(x, 2)))
        return inside, splits

    rows = list(mapper(one, [Seed(seed, i) for i in range(p["seeds"])]))
    out = Outcome()
    out.metrics.append(at_least("min_fraction_inside_radius", min(r[0] for r in rows), p["inside_fraction"]))
    worst_inv = 0.0
    for j, r in enumerate(p["radii"]):
        a = np.array([row[1][j][0] for row in rows])
        worst_inv = max(worst_inv, max(row[1][j][2] for row in rows))
        out.metrics.append(within(f"trace_projection_r{r}", float(np.median(a)), r * r, p["tolerance"]))
        out.metrics.append(at_most(f"trace_vs_count_r{r}_max_gap",
                                   max(abs(row[1][j][0] - row[1][j][1]) for row in rows), 1e-10))
    out.metrics.append(at_most("invariance_residual_rel_max", worst_inv, 1e-8))
    return out


# ---------------------------------------------------------------- DT operator

def _dt_moments(p: dict, seed: int, mapper: Mapper) -> Outcome:
    out = Outcome()
    lines = ["n,k,exact,mean,stderr"]
    for n, k in p["queries"]:
        q = dt.DtMomentQuery(n, k)
        exact = dt.dt_moment_formula(q)
        mean, se = dt.dt_empirical_moment(p["size"], q, p["replicas"], seed, mapper)
        out.metrics.append(within(f"moment_n{n}_k{k}", mean, float(exact), p["sigma_multiple"] * se))
        lines.append(f"{n},{k},{exact},{mean},{se}")
    out.artifacts["moments.csv"] = "\n".join(lines) + "\n"
    if p["d0_k"]:
        reports = list(mapper(lambda s: dt.d0_convergence_report(p["d0_size"], p["d0_k"], s),
                              [Seed(seed, 1000 + i) for i in range(p["d0_seeds"])]))
        med = np.median([r.ks_values() for r in reports], axis=0)
        for k, v in zip(p["d0_k"], med):
            out.metrics.append(reported(f"d0_ks_median_k{k}", float(v), 0.0))
        out.metrics.append(reported("d0_ks_nonincreasing", float(np.all(np.diff(med) <= 0))))
        out.metrics.append(reported("d0_clipped_fraction_max",
                                    max(row.clipped_fraction for r in reports for row in r.rows)))
        trace_last = np.median([r.rows[-1].trace_f for r in reports])
        out.metrics.append(reported(f"d0_trace_f_median_k{p['d0_k'][-1]}", float(trace_last), 0.5))
        out.artifacts["d0_report.csv"] = "".join(
            (r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]) for i, r in enumerate(reports))
    return out


def _f_curve(p: dict, seed: int, mapper: Mapper) -> Outcome:
    out = Outcome()
    v = np.linspace(p["v_min"], math.pi - p["v_min"], p["points"])
    err_log = float(np.max(np.abs(dt.f_of_log_x(dt.log_x_of_v(v)) - dt.f_of_v(v))))
    out.metrics.append(at_most("identity_max_error_log_domain", err_log, 1e-10))
    v2 = np.linspace(p["v_min"], math.pi - p["x_domain_margin"], p["points"])
    err_x = float(np.max(np.abs(dt.f_of_x(dt.x_of_v(v2)) - dt.f_of_v(v2))))
    out.metrics.append(at_most("identity_max_error", err_x, 1e-10))
    out.metrics.append(within("f_at_0", dt.f_of_x(0.0), 0.0, 0.0))
    out.metrics.append(within("f_at_e", dt.f_of_x(math.e), 1.0, 0.0))
    xs = np.linspace(0.0, math.e, p["points"])
    fx = dt.f_of_x(xs)
    out.metrics.append(at_most("non_increasing_steps", int(np.count_nonzero(np.diff(fx) <= 0)), 0))
    out.artifacts["f_curve.csv"] = "x,F\n" + "".join(f"{a},{b}\n" for a, b in zip(xs, fx))
    out.plots["f_curve.svg"] = svg.line_plot([(xs, fx, "F(x)", "line")], title="F on [0, e]", xlabel="x", ylabel="F")
    return out


def _distortion(p: dict, seed: int, mapper: Mapper) -> Outcome:
    n = p["n"]

    def one(i: int):
        t = sample_dt_upper(EnsembleSpec("dt-upper", n), Seed(seed, 2 * i))
        radii, norms = [], []
        for eps in p["eps_list"]:
            d = brown.random_distortion(t, eps, Seed(seed, 2 * i + 1))
            radii.append(float(np.mean(np.abs(np.linalg.eigvals(d)))))
            norms.append(float(np.linalg.norm(d - t, 2)))
        small = sample_dt_upper(EnsembleSpec("dt-upper", p["profile_n"]), Seed(seed, 2 * i))
        return radii, norms, brown.quasinilpotent_profile(small, p["profile_k"])

    rows = list(mapper(one, range(p["seeds"])))
    radii = np.median([r[0] for r in rows], axis=0)
    norms = np.median([r[1] for r in rows], axis=0)
    profile = np.median([r[2] for r in rows], axis=0)
    out = Outcome()
    for eps, val, nv in zip(p["eps_list"], radii, norms):
        out.metrics.append(reported(f"median_mean_abs_eigenvalue_eps{eps:g}", float(val), 0.0))
        out.metrics.append(reported(f"median_perturbation_norm_eps{eps:g}", float(nv)))
    order = np.argsort(p["eps_list"])[::-1]
    out.metrics.append(reported("eigenvalue_shrinkage_monotone", float(np.all(np.diff(radii[order]) < 0))))
    for k, val in enumerate(profile, start=1):
        out.metrics.append(reported(f"median_power_norm_root_k{k}", float(val), 0.0))
    out.metrics.append(reported("power_norm_root_decreasing", float(np.all(np.diff(profile) < 0))))
    return out


# ---------------------------------------------------------------- registry

_SEMICIRCLE = {
    "n": Param(2000, int, _pos, "n >= 1"),
    "replicas": Param(1, int, _pos, "replicas >= 1"),
    "bins": Param(50, int, _pos, "bins >= 1"),
    "ks_bound": Param(0.05, float, _pos, "must be > 0"),
    "edge_tolerance": Param(0.15, float, _pos, "must be > 0"),
    "level_n": Param(50, int, _pos, "level_n >= 1"),
    "normalization_n": Param([1, 5, 20], list, _int_list(1), "list of dimensions >= 1"),
}

_FREENESS = {
    "words": Param([[1, 1], [1, 1, 1, 1], [1, 2, 1, 2], [1, 2, 2, 1]], list, _words,
                   "non-empty list of words over generator indices >= 1"),
    "n": Param(500, int, _pos, "n >= 1"),
    "replicas": Param(100, int, lambda v: v >= 2, "replicas >= 2"),
    "sigma_multiple": Param(3.0, float, _pos, "must be > 0"),
    "max_letters": Param(4, int, lambda v: 1 <= v <= 6, "1 <= max_letters <= 6"),
    "max_degree": Param(3, int, lambda v: 1 <= v <= 4, "1 <= max_degree <= 4"),
    "alphabet": Param(3, int, lambda v: 2 <= v <= 4, "2 <= alphabet <= 4"),
}

_MASTER = {
    **PENCIL,
    "points": Param([], list, lambda v: not v or _points(v), "list of [re, im] pairs with im > 0"),
    "closed_form_tol": Param(1e-10, float, _pos, "must be > 0"),
    "series_point": Param([0.0, 2.0], list, lambda v: len(v) == 2 and v[1] > 0, "[re, im] with im > 0"),
    "n_list": Param([25, 50, 100, 200, 400], list, _ascending_ints, "ascending distinct dimensions"),
    "replicas": Param(200, int, lambda v: v >= 2, "replicas >= 2"),
    "control_degree": Param(16, int, _nonneg, "0 (plain Monte Carlo) or a polynomial degree"),
    "slope_band": Param([-2.5, -1.5], list, _band, "[low, high] with low < high"),
    "variance_poly": Param([0.0, 0.0, 1 / 4, 0.0, 1 / 16, 0.0, 1 / 64], list, lambda v: len(v) > 0, "power-series coefficients"),
    "variance_replicas": Param(50, int, _nonneg, "0 disables the variance report, else >= 2"),
}

_CONTAINMENT = {
    **PENCIL,
    "n": Param(1000, int, _pos, "n >= 1"),
    "eps": Param(0.3, float, _pos, "eps > 0"),
    "runs": Param(100, int, _pos, "runs >= 1"),
    "min_clean": Param(95, int, _nonneg, "min_clean >= 0"),
}

_WISHART = {
    "r": Param(4, int, _pos, "r >= 1"),
    "n": Param(1000, int, _pos, "n >= 1"),
    "seeds": Param(50, int, _pos, "seeds >= 1"),
    "max_band": Param([8.4, 9.5], list, _band, "[low, high] with low < high"),
    "min_band": Param([0.6, 1.4], list, _band, "[low, high] with low < high"),
    "required_fraction": Param(0.95, float, lambda v: 0 <= v <= 1, "0 <= fraction <= 1"),
}

_BROWN = {
    "matrix": Param("ginibre", str, lambda v: v in ("ginibre", "dt-upper", "jordan"),
                    "one of ginibre, dt-upper, jordan"),
    "n": Param(30, int, lambda v: 2 <= v <= 200, "2 <= n <= 200"),
    "half_width": Param(1.6, float, _pos, "half_width > 0"),
    "cells": Param(128, int, lambda v: v >= 8, "cells >= 8"),
    "center": Param([0.0, 0.0], list, lambda v: len(v) == 2, "[re, im]"),
    "eps": Param(0.0, float, _nonneg, "eps >= 0 (0 selects the cell area)"),
    "regions": Param([], list, _regions, "list of region tables (empty: chosen to avoid the atoms)"),
    "clearance_cells": Param(2, int, _nonneg, "clearance_cells >= 0"),
    "region_tolerance": Param(0.05, float, _pos, "must be > 0"),
    "fk_trials": Param(20, int, _pos, "fk_trials >= 1"),
    "fk_size": Param(12, int, _pos, "fk_size >= 1"),
}

_CIRCULAR = {
    "n": Param(500, int, _pos, "n >= 1"),
    "seeds": Param(20, int, _pos, "seeds >= 1"),
    "radii": Param([0.5, 0.7, 0.9], list, _pos_floats, "positive radii"),
    "radius": Param(1.05, float, _pos, "radius > 0"),
    "inside_fraction": Param(0.95, float, lambda v: 0 <= v <= 1, "0 <= fraction <= 1"),
    "tolerance": Param(0.05, float, _pos, "must be > 0"),
}

_DT = {
    "size": Param(1000, int, lambda v: v >= 2, "size >= 2"),
    "replicas": Param(50, int, lambda v: v >= 2, "replicas >= 2"),
    "queries": Param([[2, 1], [1, 2]], list, lambda v: len(v) > 0 and all(_int_list(1)(q) and len(q) == 2 for q in v),
                     "list of [n, k] pairs with n, k >= 1"),
    "sigma_multiple": Param(3.0, float, _pos, "must be > 0"),
    "d0_size": Param(500, int, lambda v: v >= 2, "d0_size >= 2"),
    "d0_k": Param([1, 2, 4, 8], list, lambda v: not v or _ascending_ints(v), "ascending powers (empty disables)"),
    "d0_seeds": Param(10, int, _pos, "d0_seeds >= 1"),
}

_FCURVE = {
    "points": Param(1000, int, lambda v: v >= 2, "points >= 2"),
    "v_min": Param(1e-3, float, lambda v: 0 < v < 1, "0 < v_min < 1"),
    "x_domain_margin": Param(0.02, float, lambda v: 0 < v < 1, "0 < margin < 1"),
}

_DISTORTION = {
    "n": Param(300, int, lambda v: v >= 2, "n >= 2"),
    "eps_list": Param([0.1, 0.01, 0.001], list, _pos_floats, "positive distortion sizes"),
    "seeds": Param(20, int, _pos, "seeds >= 1"),
    "profile_n": Param(200, int, lambda v: v >= 2, "profile_n >= 2"),
    "profile_k": Param(8, int, _pos, "profile_k >= 1"),
}

EXPERIMENTS: dict[str, Experiment] = {e.name: e for e in [
    Experiment("semicircle", "Wigner semicircle law for GUE and the GUE mean level density",
               _SEMICIRCLE, _semicircle),
    Experiment("freeness", "semicircular moments by non-crossing pairings; free independence definition",
               _FREENESS, _freeness),
    Experiment("master-equation", "operator-valued Stieltjes transform equation and its O(1/n^2) residual",
               _MASTER, _master_equation),
    Experiment("containment", "eventual spectrum containment in an eps-neighbourhood of the limit",
               _CONTAINMENT, _containment),
    Experiment("wishart", "Wishart extreme eigenvalues tend to (sqrt(c) -+ 1)^2",
               _WISHART, _wishart),
    Experiment("brown-grid", "Fuglede-Kadison determinant; Brown measure as Laplacian of log-determinant",
               _BROWN, _brown_grid),
    Experiment("circular-split", "circular law; disc projections of a circular element have trace r^2",
               _CIRCULAR, _circular_split),
    Experiment("dt-moments", "DT operator moments n^(nk)/(nk+1)! and convergence of F(S_k) to D_0",
               _DT, _dt_moments),
    Experiment("f-curve", "implicit F-curve (sin v/v) exp(v cot v) -> 1 - v/pi + sin^2 v/(pi v)",
               _FCURVE, _f_curve),
    Experiment("distortion", "random distortion of upper-triangular Gaussian matrices; quasinilpotency",
               _DISTORTION, _distortion),
]}

SCHEMAS: dict[str, dict[str, Param]] = {name: e.params for name, e in EXPERIMENTS.items()}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Report:
    """Run ``cfg`` and return its report.

    Numeric and domain errors raised by the computation are recorded in the
    report (which then fails) rather than propagated.  ``workers`` only changes
    scheduling; results are identical for every worker count.
    """
    exp = EXPERIMENTS[cfg.experiment]
    report = Report(cfg.experiment, exp.anchor, cfg.seed, cfg.canonical(), cfg.config_hash())
    start = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    mapper = pool.map if pool is not None else map
    try:
        outcome = exp.run(cfg.parameters, cfg.seed, mapper)
        report.metrics = outcome.metrics
        report.artifacts = outcome.artifacts
        report.plots = outcome.plots
    except (NumericError, DomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    finally:
        if pool is not None:
            pool.shutdown()
        report.wall_clock = time.perf_counter() - start
    return report
