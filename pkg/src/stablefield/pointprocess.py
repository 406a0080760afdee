"""Normalized empirical point measures and their Poisson cluster limits.

One side builds weighted atom sets from simulated fields; the other samples
the limiting cluster measure directly and evaluates its Laplace functional
by quadrature.  Agreement between the two closes the loop.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.integrate import quad

from .lattice import MathDomainError, QuotientStructure
from .geometry import build_body, build_fiber_volume, sample_in_body, scaling_constant
from .simulate import KernelModel, sample_field, stable_tail_constant, substream


@dataclass(frozen=True)
class TestFunction:
    """Trapezoid bump: zero on [-a, a], ramps to height beta over width."""

    a: float
    width: float
    beta: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.width > 0.0 and self.beta > 0.0):
            raise ValueError("a, width and beta must all be positive")

    def __call__(self, x):
        return self.beta * np.clip((np.abs(x) - self.a) / self.width, 0.0, 1.0)


class WeightedPointMeasure:
    """Finitely many atoms (location != 0, weight >= 0)."""

    def __init__(self, locations, weights):
        locations = np.asarray(locations, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if locations.shape != weights.shape:
            raise ValueError("locations and weights must have equal length")
        if np.any(locations == 0.0) or not np.all(np.isfinite(locations)):
            raise ValueError("atom locations must be finite and nonzero")
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("atom weights must be finite and nonnegative")
        self.locations = locations
        self.weights = weights

    def __len__(self):
        return len(self.locations)

    def integrate(self, g) -> float:
        if len(self.locations) == 0:
            return 0.0
        return float(np.dot(self.weights, g(self.locations)))

    def mass_above(self, delta) -> float:
        """Total weight sitting at distance at least delta from the origin."""
        if delta <= 0.0:
            raise ValueError("delta must be positive")
        return float(np.sum(self.weights[np.abs(self.locations) >= delta]))


class LimitMeasureSample(WeightedPointMeasure):
    """Cluster measure draw: magnitudes j, positions xi, per-cluster weights."""

    def __init__(self, locations, weights, j, xi, cluster_weights):
        super().__init__(locations, weights)
        self.j = j
        self.xi = xi
        self.cluster_weights = cluster_weights


@dataclass(frozen=True)
class GeometryContext:
    """Geometry inputs for the limit objects, built once per structure."""

    body: object
    fiber: object
    scale: Optional[float]


def geometry_context(structure: QuotientStructure, rng=None) -> GeometryContext:
    _system, body = build_body(structure, rng=rng)
    fiber = build_fiber_volume(structure, rng=rng)
    scale = scaling_constant(structure, rng=rng) if structure.free_rank else None
    return GeometryContext(body, fiber, scale)


def build_normalized_measure(field, qs: QuotientStructure, c, alpha):
    """Field atoms under the n^(p/alpha) scaling, weighted by m(u,n)/n^q.

    Cosets where the field is exactly zero are dropped: the state space of
    the limit excludes the origin.
    """
    p, q = qs.free_rank, qs.kernel_rank
    n = field.level
    if n < 1:
        raise ValueError("measures need level at least 1")
    locations = (float(c) * n) ** (-p / float(alpha)) * field.values
    weights = field.multiplicities / float(n) ** q
    keep = locations != 0.0
    return WeightedPointMeasure(locations[keep], weights[keep])


def sample_limit_measure(model: KernelModel, qs: QuotientStructure,
                         geom: GeometryContext, count, rng) -> LimitMeasureSample:
    """One draw of the limiting cluster measure.

    Ranked magnitudes carry the mark-space mass; each magnitude spawns one
    cluster of atoms through the kernel profile, weighted by the fiber
    volume at a uniform position in the projected body.  Rank-0 kernels
    have unit fiber volume, so the position draw is skipped.
    Draw order: arrivals, signs, marks (when several), positions.
    """
    model._require_structure(qs)
    count = int(count)
    if count < 1:
        raise ValueError("count must be at least 1")
    alpha = model.alpha
    q = qs.kernel_rank
    gammas = np.cumsum(rng.standard_exponential(count))
    signs = rng.integers(0, 2, size=count) * 2 - 1
    if len(model.mark_ids) == 1:
        marks = np.zeros(count, dtype=np.int64)
    else:
        marks = rng.choice(len(model.mark_ids), size=count,
                           p=model.mark_weights / model.total_weight)
    with np.errstate(divide="ignore", over="ignore"):
        j = signs * model.total_weight ** (1.0 / alpha) * gammas ** (-1.0 / alpha)

    if q == 0:
        xi = None
        cluster_weights = np.ones(count)
    else:
        xi = sample_in_body(qs, rng, count)
        cluster_weights = np.array([geom.fiber(y) for y in xi])

    croot = stable_tail_constant(alpha) ** (1.0 / alpha)
    profiles = model.h_matrix[marks]                  # (count, support size)
    locations = croot * j[:, None] * profiles
    weights = np.broadcast_to(cluster_weights[:, None], locations.shape)
    keep = locations != 0.0
    return LimitMeasureSample(locations[keep], weights[keep], j, xi,
                              cluster_weights)


def expected_limit_mass(model: KernelModel, delta) -> float:
    """Mean unweighted atom count at distance >= delta in the limit measure."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    return (stable_tail_constant(model.alpha) * float(delta) ** (-model.alpha)
            * model.stable_norm() ** model.alpha)


def laplace_empirical(measures, g):
    """Mean and standard error of exp(-integral of g) across measures."""
    if len(measures) < 2:
        raise ValueError("need at least two measures")
    vals = np.array([math.exp(-m.integrate(g)) for m in measures])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def _cluster_exponent(model: KernelModel, fiber_value, g, errors):
    """Inner integral against the magnitude intensity for one fiber value.

    Substituting s = x^(-alpha) turns the two-sided heavy tail into a flat
    measure on a finite interval; the integrand vanishes once every scaled
    kernel value falls inside the dead zone of g.
    """
    if fiber_value <= 0.0:
        return 0.0
    alpha = model.alpha
    calpha = stable_tail_constant(alpha)
    total = 0.0
    for wi in range(len(model.mark_ids)):
        habs = np.abs(model.h_matrix[wi])
        habs = habs[habs > 0.0]
        if habs.size == 0:
            continue
        smax = (float(habs.max()) / g.a) ** alpha

        def integrand(s):
            with np.errstate(divide="ignore"):
                x = s ** (-1.0 / alpha) if s > 0.0 else np.inf
            return -math.expm1(-fiber_value * float(np.sum(g(x * habs))))

        val, err = quad(integrand, 0.0, smax, limit=200,
                        epsabs=1e-11, epsrel=1e-9)
        errors.append(err)
        total += float(model.mark_weights[wi]) * calpha * val
    return total


def laplace_theoretical(model: KernelModel, qs: QuotientStructure,
                        geom: GeometryContext, g: TestFunction,
                        rng=None, samples=20000) -> float:
    """Laplace functional of the limit measure at g, by quadrature.

    Averages the cluster exponent against the fiber volume over the
    projected body; free rank up to 2 integrates adaptively, higher ranks
    fall back to Monte Carlo positions and need an rng.
    """
    model._require_structure(qs)
    p, q = qs.free_rank, qs.kernel_rank
    errors = []
    if q == 0:
        exponent = _cluster_exponent(model, 1.0, g, errors)
    elif p == 0:
        raise MathDomainError(
            "limit objects are undefined for a finite quotient")
    elif p == 1:
        (lo, hi), = geom.body.bounds
        lo, hi = float(lo), float(hi)
        val, err = quad(
            lambda y: _cluster_exponent(model, geom.fiber((y,)), g, errors),
            lo, hi, limit=200, epsabs=1e-9)
        errors.append(err)
        exponent = val / (hi - lo)
    elif p == 2:
        (lo0, hi0), (lo1, hi1) = [(float(a), float(b)) for a, b in geom.body.bounds]
        outer_errors = []

        def inner(y0):
            val, err = quad(
                lambda y1: _cluster_exponent(model, geom.fiber((y0, y1)), g, errors),
                lo1, hi1, limit=100, epsabs=1e-8)
            outer_errors.append(err)
            return val

        val, err = quad(inner, lo0, hi0, limit=100, epsabs=1e-7)
        errors.append(err)
        errors.extend(outer_errors)
        exponent = val / geom.body.volume
    else:
        if rng is None:
            raise ValueError("free rank above 2 needs an rng for the average")
        points = sample_in_body(qs, rng, int(samples))
        vals = [_cluster_exponent(model, geom.fiber(y), g, errors) for y in points]
        exponent = float(np.mean(vals))

    achieved = float(sum(errors))
    if achieved > 1e-4 * max(1.0, abs(exponent)):
        warnings.warn(f"quadrature achieved absolute error {achieved:.2g}",
                      RuntimeWarning, stacklevel=2)
    return math.exp(-exponent)


def convergence_report(model: KernelModel, qs: QuotientStructure,
                       geom: GeometryContext, n_list, replicates, g_list,
                       master_seed, truncation_index=2048):
    """Empirical Laplace functionals along n against the limit formula.

    Each (n, replicate) cell owns substream (master_seed, n index,
    replicate).  The pass flag compares the largest-n discrepancy with
    three standard errors; the trend flag is a soft monotonicity check.
    """
    model._require_structure(qs)
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list:
        raise ValueError("n values must be strictly increasing and nonempty")
    if int(replicates) < 100:
        raise ValueError("need at least 100 replicates")
    if not g_list:
        raise ValueError("need at least one test function")
    if geom.scale is None:
        raise MathDomainError("limit comparison needs free directions")

    theoretical = [laplace_theoretical(model, qs, geom, g) for g in g_list]
    rows = []
    gaps = {gi: [] for gi in range(len(g_list))}
    for ni, n in enumerate(n_list):
        measures = []
        for r in range(int(replicates)):
            rng = substream(master_seed, ni, r)
            field = sample_field(model, qs, n, truncation_index, rng)
            measures.append(build_normalized_measure(field, qs, geom.scale,
                                                     model.alpha))
        for gi, g in enumerate(g_list):
            est, se = laplace_empirical(measures, g)
            gap = abs(est - theoretical[gi])
            gaps[gi].append(gap)
            rows.append({
                "n": n, "gId": gi, "empirical": est, "se": se,
                "theoretical": theoretical[gi], "gap": gap,
                "pass": bool(gap <= 3.0 * se),
            })

    pass_at_largest = {}
    trend_decreasing = {}
    for gi in range(len(g_list)):
        last = [row for row in rows if row["gId"] == gi and row["n"] == n_list[-1]]
        pass_at_largest[gi] = last[0]["pass"]
        if len(n_list) >= 3:
            tau = stats.kendalltau(n_list, gaps[gi])
            trend_decreasing[gi] = bool(tau.statistic < 0
                                        and tau.pvalue < 0.2)
        else:
            trend_decreasing[gi] = None
    return {
        "nList": n_list,
        "replicates": int(replicates),
        "rows": rows,
        "passAtLargest": pass_at_largest,
        "trendDecreasing": trend_decreasing,
    }


def scaling_diagnostics(model: KernelModel, qs: QuotientStructure,
                        geom: GeometryContext, n_list, replicates, master_seed,
                        delta=1.0, epsilon=0.3, truncation_index=1024):
    """Mass growth under the raw and deliberately wrong normalizations.

    unnormalized: weight 1 per lattice point (coset weight m(u,n), no n^-q),
    locations still scaled by (cn)^(-p/alpha); grows like n^q.
    overScaled / underScaled: weights m(u,n)/n^q but locations divided by
    n^((p +/- epsilon)/alpha); these must drain to 0 / blow up.
    """
    model._require_structure(qs)
    if geom.scale is None:
        raise MathDomainError("scaling diagnostics need free directions")
    p, q = qs.free_rank, qs.kernel_rank
    alpha = model.alpha
    n_list = [int(n) for n in n_list]
    unnorm = {}
    over = {}
    under = {}
    for ni, n in enumerate(n_list):
        acc_u = acc_o = acc_d = 0.0
        for r in range(int(replicates)):
            rng = substream(master_seed, ni, r)
            field = sample_field(model, qs, n, truncation_index, rng)
            absvals = np.abs(field.values)
            mult = field.multiplicities
            scaled = (geom.scale * n) ** (-p / alpha) * absvals
            acc_u += float(np.sum(mult[scaled >= delta]))
            norm_w = mult / float(n) ** q
            b_over = float(n) ** ((p + epsilon) / alpha)
            b_under = float(n) ** ((p - epsilon) / alpha)
            acc_o += float(np.sum(norm_w[absvals / b_over >= delta]))
            acc_d += float(np.sum(norm_w[absvals / b_under >= delta]))
        unnorm[n] = acc_u / int(replicates)
        over[n] = acc_o / int(replicates)
        under[n] = acc_d / int(replicates)
    ratios = [unnorm[b] / unnorm[a] if unnorm[a] > 0 else math.inf
              for a, b in zip(n_list, n_list[1:])]
    return {
        "delta": float(delta),
        "epsilon": float(epsilon),
        "nList": n_list,
        "unnormalized": unnorm,
        "growthRatios": ratios,
        "overScaled": over,
        "underScaled": under,
        "overMonotone": all(over[b] < over[a] for a, b in zip(n_list, n_list[1:])),
        "underMonotone": all(under[b] > under[a]
                             for a, b in zip(n_list, n_list[1:])),
    }
