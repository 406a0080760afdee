"""Polyhedral slices of a box preimage under an integer change of basis.

The lattice analysis produces a square integer matrix whose columns split
into a free block and a kernel block.  The preimage of the unit sup-norm
box under that matrix is a parallelepiped.  Projecting it onto the free
coordinates gives a convex body; slicing it at a fixed free coordinate
gives a fiber whose volume drives the scaling limits.  Low-dimensional
cases are handled exactly with rational arithmetic, higher-dimensional
ones by seeded Monte Carlo with a reported standard error.

Throughout, p is the number of free columns and q the number of kernel
columns; p + q equals the ambient dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .lattice import (
    MathDomainError,
    QuotientStructure,
    _count_fiber,
    _det,
    _fraction_inverse,
    count_in_box,
    enumerate_ball,
)

# exact FM projection is used whenever both blocks are this small
EXACT_FREE_MAX = 2
EXACT_KERNEL_MAX = 3

_PROJECTION_CAP = 50000


@dataclass(frozen=True)
class ConstraintSystem:
    """Square integer matrix [free block : kernel block], rows as tuples."""

    matrix: Tuple[Tuple[int, ...], ...]
    dim: int
    free_count: int
    kernel_count: int


@dataclass(frozen=True)
class ProjectedBody:
    """Projection onto the free coordinates.

    constraints is a tuple of (coefficients, bound) half-spaces a.y <= b
    when the projection was computed exactly, otherwise None.  vertices is
    populated for two-dimensional exact bodies.  volume_se is zero for
    exact volumes.
    """

    dimension: int
    constraints: Optional[Tuple[Tuple[Tuple[Fraction, ...], Fraction], ...]]
    vertices: Optional[Tuple[Tuple[Fraction, ...], ...]]
    volume: float
    volume_exact: Optional[Fraction]
    volume_se: float
    bounds: Tuple[Tuple[Fraction, Fraction], ...]


@dataclass(frozen=True)
class FiberVolume:
    """Callable fiber-volume evaluator with its sup-norm."""

    evaluator: Callable[[Sequence[float]], float]
    sup_norm: float

    def __call__(self, y) -> float:
        return self.evaluator(y)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    method: str  # "exact", "quadrature", or "monte-carlo"


def _to_fraction_vec(y, expected_len) -> Tuple[Fraction, ...]:
    vec = tuple(Fraction(v) for v in y)
    if len(vec) != expected_len:
        raise ValueError(
            f"expected a vector of length {expected_len}, got {len(vec)}"
        )
    return vec


@lru_cache(maxsize=128)
def constraint_system(structure: QuotientStructure) -> ConstraintSystem:
    """Assemble the [free : kernel] column matrix and check independence."""
    d = structure.dim
    cols = list(structure.free_basis) + list(structure.kernel_basis)
    if len(cols) != d:
        raise MathDomainError("free and kernel bases do not span the space")
    rows = tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))
    if _det([list(r) for r in rows]) == 0:
        raise MathDomainError("dependent basis columns: invalid structure")
    return ConstraintSystem(rows, d, structure.free_rank, structure.kernel_rank)


# ---------------------------------------------------------------------------
# exact Fourier-Motzkin machinery
#
# A one-sided constraint is (a, b, r) meaning a.y + b.lam <= r with
# rational coefficients.  Eliminating a lam variable combines each pair of
# constraints in which it appears with opposite signs.


def _box_constraints(system: ConstraintSystem):
    p = system.free_count
    cons = []
    for row in system.matrix:
        a = tuple(Fraction(x) for x in row[:p])
        b = tuple(Fraction(x) for x in row[p:])
        cons.append((a, b, Fraction(1)))
        cons.append((tuple(-x for x in a), tuple(-x for x in b), Fraction(1)))
    return cons


def _eliminate_last(cons):
    pos, neg, zero = [], [], []
    for a, b, r in cons:
        coeff = b[-1]
        if coeff > 0:
            pos.append((a, b, r))
        elif coeff < 0:
            neg.append((a, b, r))
        else:
            zero.append((a, b[:-1], r))
    out = zero
    for a1, b1, r1 in pos:
        s1 = 1 / b1[-1]
        for a2, b2, r2 in neg:
            s2 = -1 / b2[-1]
            a = tuple(x * s1 + y * s2 for x, y in zip(a1, a2))
            b = tuple(x * s1 + y * s2 for x, y in zip(b1[:-1], b2[:-1]))
            out.append((a, b, r1 * s1 + r2 * s2))
    if len(out) > _PROJECTION_CAP:
        raise MathDomainError("projection grew past the supported size")
    return out


@lru_cache(maxsize=128)
def _projected_constraints(structure: QuotientStructure):
    """Half-spaces a.y <= r describing the body, exact."""
    system = constraint_system(structure)
    cons = _box_constraints(system)
    for _ in range(system.kernel_count):
        cons = _eliminate_last(cons)
    out = []
    for a, _b, r in cons:
        if all(x == 0 for x in a):
            if r < 0:
                raise MathDomainError("empty projection: invalid structure")
            continue
        out.append((a, r))
    return tuple(out)


def _interval_from_halfspaces(cons):
    """[lo, hi] for one-variable constraints; None when empty."""
    lo, hi = None, None
    for (a,), r in cons:
        v = r / a
        if a > 0:
            hi = v if hi is None or v < hi else hi
        else:
            lo = v if lo is None or v > lo else lo
    if lo is None or hi is None:
        raise MathDomainError("projection is unbounded")
    if lo > hi:
        return None
    return lo, hi


def _polygon_vertices(cons):
    """Vertices of {a.y <= r} in the plane, counterclockwise, exact."""
    pts = set()
    m = len(cons)
    for i in range(m):
        (ai, ri) = cons[i]
        for j in range(i + 1, m):
            (aj, rj) = cons[j]
            det = ai[0] * aj[1] - ai[1] * aj[0]
            if det == 0:
                continue
            x = (ri * aj[1] - rj * ai[1]) / det
            y = (ai[0] * rj - aj[0] * ri) / det
            if all(a[0] * x + a[1] * y <= r for a, r in cons):
                pts.add((x, y))
    if len(pts) < 3:
        return tuple(sorted(pts))
    cx = sum(x for x, _ in pts) / len(pts)
    cy = sum(y for _, y in pts) / len(pts)
    ordered = sorted(pts, key=lambda v: math.atan2(float(v[1] - cy), float(v[0] - cx)))
    return tuple(ordered)


def _shoelace(verts) -> Fraction:
    n = len(verts)
    if n < 3:
        return Fraction(0)
    total = Fraction(0)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2


def _bounding_radii(system: ConstraintSystem):
    """Per-coordinate bound on the body from the inverse matrix rows."""
    inv = _fraction_inverse([list(r) for r in system.matrix])
    d = system.dim
    return tuple(sum(abs(inv[i][k]) for k in range(d)) for i in range(d))


# ---------------------------------------------------------------------------
# fibers at a fixed free coordinate


def _fiber_halfspaces(structure, yfrac):
    """Constraints b.lam <= r' once the free part is substituted."""
    system = constraint_system(structure)
    out = []
    for a, b, r in _box_constraints(system):
        out.append((b, r - sum(x * v for x, v in zip(a, yfrac))))
    return out


def _fiber_feasible_exact(cons, nvars):
    for _ in range(nvars):
        cons = _eliminate_last(cons)
    return all(r >= 0 for _a, _b, r in cons)


def fiber_feasible(y, structure: QuotientStructure) -> bool:
    """Membership of y in the projected body (boundary included)."""
    system = constraint_system(structure)
    p, q = system.free_count, system.kernel_count
    yfrac = _to_fraction_vec(y, p)
    cons = _fiber_halfspaces(structure, yfrac)
    if q <= EXACT_KERNEL_MAX:
        return _fiber_feasible_exact([((), b, r) for b, r in cons], q)
    from scipy.optimize import linprog

    amat = [[float(c) for c in b] for b, _r in cons]
    bvec = [float(r) for _b, r in cons]
    res = linprog(
        c=[0.0] * q, A_ub=amat, b_ub=bvec, bounds=[(None, None)] * q,
        method="highs",
    )
    return res.status == 0


def fiber_volume(y, structure: QuotientStructure, rng=None, samples=20000):
    """Volume of the kernel-coordinate slice at free coordinate y.

    Exact (a Fraction) for kernel rank at most two; Monte Carlo (a float)
    above that, which requires an explicit rng.
    """
    system = constraint_system(structure)
    p, q = system.free_count, system.kernel_count
    yfrac = _to_fraction_vec(y, p)
    if q == 0:
        w = [sum(Fraction(row[j]) * yfrac[j] for j in range(p))
             for row in system.matrix]
        return Fraction(1) if all(abs(x) <= 1 for x in w) else Fraction(0)
    cons = _fiber_halfspaces(structure, yfrac)
    if any(all(x == 0 for x in b) and r < 0 for b, r in cons):
        return Fraction(0)
    if q == 1:
        iv = _interval_from_halfspaces(
            [((b[0],), r) for b, r in cons if b[0] != 0]
        )
        if iv is None:
            return Fraction(0)
        lo, hi = iv
        return max(Fraction(0), hi - lo)
    if q == 2:
        active = [(b, r) for b, r in cons if any(x != 0 for x in b)]
        return _shoelace(_polygon_vertices(active))
    est, _se = fiber_volume_mc(y, structure, rng, samples)
    return est


def fiber_volume_mc(y, structure: QuotientStructure, rng, samples=20000):
    """Monte Carlo fiber volume with standard error, any kernel rank."""
    if rng is None:
        raise ValueError("Monte Carlo fiber volume needs an explicit rng")
    system = constraint_system(structure)
    p, q = system.free_count, system.kernel_count
    yfrac = _to_fraction_vec(y, p)
    w = np.array(
        [float(sum(Fraction(row[j]) * yfrac[j] for j in range(p)))
         for row in system.matrix]
    )
    vmat = np.array([[row[p + m] for m in range(q)] for row in system.matrix],
                    dtype=float)
    radius = max(
        float(sum(abs(x) for x in vrow) * (1 + max(abs(v) for v in np.atleast_1d(w))))
        for vrow in structure._vplus_rows
    ) if q else 0.0
    lam = rng.uniform(-radius, radius, size=(samples, q))
    inside = np.all(np.abs(w[None, :] + lam @ vmat.T) <= 1.0, axis=1)
    box = (2 * radius) ** q
    frac = inside.mean()
    est = box * frac
    se = box * math.sqrt(max(frac * (1 - frac), 0.0) / samples)
    return est, se


def build_fiber_volume(structure: QuotientStructure, rng=None) -> FiberVolume:
    """Evaluator plus sup-norm; the sup sits at the origin by symmetry."""
    p = structure.free_rank

    def evaluate(y):
        return float(fiber_volume(y, structure, rng=rng))

    return FiberVolume(evaluate, evaluate((0,) * p))


# ---------------------------------------------------------------------------
# the projected body


def build_body(structure: QuotientStructure, rng=None, samples=200000):
    """Constraint system plus the projection onto the free coordinates."""
    system = constraint_system(structure)
    p, q = system.free_count, system.kernel_count
    if p == 0:
        body = ProjectedBody(0, (), None, 1.0, Fraction(1), 0.0, ())
        return system, body
    if p <= EXACT_FREE_MAX and q <= EXACT_KERNEL_MAX:
        cons = _projected_constraints(structure)
        if p == 1:
            iv = _interval_from_halfspaces(cons)
            if iv is None:
                raise MathDomainError("empty projection: invalid structure")
            lo, hi = iv
            vol = hi - lo
            body = ProjectedBody(
                1, cons, ((lo,), (hi,)), float(vol), vol, 0.0, ((lo, hi),),
            )
            return system, body
        verts = _polygon_vertices(cons)
        if len(verts) < 3:
            raise MathDomainError("degenerate projection: invalid structure")
        vol = _shoelace(verts)
        bounds = tuple(
            (min(v[i] for v in verts), max(v[i] for v in verts)) for i in range(2)
        )
        body = ProjectedBody(2, cons, verts, float(vol), vol, 0.0, bounds)
        return system, body
    if rng is None:
        raise ValueError("Monte Carlo projection volume needs an explicit rng")
    radii = _bounding_radii(system)[:p]
    bounds = tuple((-r, r) for r in radii)
    pts = rng.uniform(
        [-float(r) for r in radii], [float(r) for r in radii], size=(samples, p)
    )
    if q <= EXACT_KERNEL_MAX:
        # the projection's half-spaces are exact; test them vectorized
        cons = _projected_constraints(structure)
        amat = np.array([[float(x) for x in a] for a, _r in cons])
        rvec = np.array([float(r) for _a, r in cons])
        hits = np.all(pts @ amat.T <= rvec[None, :] + 1e-12, axis=1)
    else:
        hits = np.fromiter(
            (fiber_feasible(tuple(row), structure) for row in pts),
            dtype=bool, count=samples,
        )
    box = float(np.prod([2 * float(r) for r in radii]))
    frac = hits.mean()
    vol = box * frac
    se = box * math.sqrt(max(frac * (1 - frac), 0.0) / samples)
    body = ProjectedBody(p, None, None, vol, None, se, bounds)
    return system, body


def scaling_constant(structure: QuotientStructure, rng=None, samples=200000) -> float:
    """(torsion * body volume) ** (1/p); undefined without free directions."""
    p = structure.free_rank
    if p == 0:
        raise MathDomainError("scaling constant undefined when the quotient is finite")
    _system, body = build_body(structure, rng=rng, samples=samples)
    return float(structure.torsion * body.volume) ** (1.0 / p)


# ---------------------------------------------------------------------------
# occupancy profiles


def m_profile(k: int, n: int, y, structure: QuotientStructure) -> Fraction:
    """Scaled box count of the coset shifted by the integer part of n*y."""
    if n < 1:
        raise ValueError("profile level must be positive")
    reps = structure.coset_reps
    if not 0 <= k < len(reps):
        raise ValueError(f"coset index out of range: {k}")
    p = structure.free_rank
    yfrac = _to_fraction_vec(y, p)
    vec = list(reps[k])
    for i in range(p):
        step = math.floor(n * yfrac[i])
        col = structure.free_basis[i]
        for j in range(structure.dim):
            vec[j] += step * col[j]
    count = _count_fiber(structure, tuple(vec), n)
    return Fraction(count, n ** structure.kernel_rank)


def kappa0_empirical(structure: QuotientStructure, n_max: int = 12) -> Fraction:
    """Empirical sup of the scaled box counts over balls up to n_max."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    q = structure.kernel_rank
    best = Fraction(0)
    for n in range(1, n_max + 1):
        for u in enumerate_ball(n, structure):
            val = Fraction(count_in_box(u, n, structure), n ** q)
            if val > best:
                best = val
    return best


# ---------------------------------------------------------------------------
# integrating the fiber volume over the body


def _integrate_envelope(uppers, lowers, lo, hi) -> Fraction:
    """Exact integral of max(0, min uppers - max lowers) over [lo, hi].

    uppers and lowers are affine (slope, intercept) pairs with rational
    coefficients; the integrand is piecewise linear, so trapezoids over
    the crossing points are exact.
    """
    if hi <= lo:
        return Fraction(0)
    cuts = {lo, hi}
    lines = uppers + lowers
    for (s1, c1), (s2, c2) in itertools.combinations(lines, 2):
        if s1 != s2:
            x = (c2 - c1) / (s1 - s2)
            if lo < x < hi:
                cuts.add(x)
    grid = sorted(cuts)

    def value(x):
        up = min(s * x + c for s, c in uppers)
        dn = max(s * x + c for s, c in lowers)
        return max(Fraction(0), up - dn)

    # every kink of the integrand, including the clamp at zero, sits at a
    # pairwise crossing, so each segment is affine and trapezoids are exact
    total = Fraction(0)
    for x1, x2 in zip(grid, grid[1:]):
        total += (x2 - x1) * (value(x1) + value(x2)) / 2
    return total


def _integral_interval_exact(structure) -> Fraction:
    """Exact integral for one free and at most one kernel direction."""
    cons = _projected_constraints(structure)
    lo, hi = _interval_from_halfspaces(cons)
    q = structure.kernel_rank
    if q == 0:
        return hi - lo
    # upper/lower envelopes of the fiber interval are affine in y
    system = constraint_system(structure)
    uppers, lowers = [], []
    for a, b, r in _box_constraints(system):
        if b[0] > 0:
            uppers.append((-a[0] / b[0], r / b[0]))
        elif b[0] < 0:
            lowers.append((-a[0] / b[0], r / b[0]))
    return _integrate_envelope(uppers, lowers, lo, hi)


def integral_fiber_volume(
    structure: QuotientStructure, rng=None, samples=200000
) -> IntegralResult:
    """Integral of the fiber volume over the projected body."""
    p, q = structure.free_rank, structure.kernel_rank
    if p == 0:
        vol = fiber_volume((), structure, rng=rng, samples=samples)
        if isinstance(vol, Fraction):
            return IntegralResult(float(vol), 0.0, "exact")
        _est, se = fiber_volume_mc((), structure, rng, samples)
        return IntegralResult(float(vol), se, "monte-carlo")
    if p == 1 and q <= 1:
        return IntegralResult(float(_integral_interval_exact(structure)), 0.0, "exact")
    if p <= 2 and q <= 2:
        return _integral_quadrature(structure)
    return _integral_monte_carlo(structure, rng, samples)


def _fiber_area_float(structure, y):
    """Float fiber area for kernel rank two; used inside quadrature."""
    system = constraint_system(structure)
    p = system.free_count
    rows = system.matrix
    cons = []
    for row in rows:
        w = sum(row[j] * y[j] for j in range(p))
        b1, b2 = float(row[p]), float(row[p + 1])
        cons.append((b1, b2, 1.0 - w))
        cons.append((-b1, -b2, 1.0 + w))
    pts = []
    m = len(cons)
    for i in range(m):
        a1, b1, r1 = cons[i]
        for j in range(i + 1, m):
            a2, b2, r2 = cons[j]
            det = a1 * b2 - b1 * a2
            if abs(det) < 1e-14:
                continue
            x = (r1 * b2 - r2 * b1) / det
            z = (a1 * r2 - a2 * r1) / det
            if all(a * x + b * z <= r + 1e-9 for a, b, r in cons):
                pts.append((x, z))
    if len(pts) < 3:
        return 0.0
    cx = sum(v[0] for v in pts) / len(pts)
    cy = sum(v[1] for v in pts) / len(pts)
    pts.sort(key=lambda v: math.atan2(v[1] - cy, v[0] - cx))
    total = 0.0
    for i in range(len(pts)):
        x1, z1 = pts[i]
        x2, z2 = pts[(i + 1) % len(pts)]
        total += x1 * z2 - x2 * z1
    return abs(total) / 2


def _integral_quadrature(structure) -> IntegralResult:
    from scipy.integrate import quad

    p, q = structure.free_rank, structure.kernel_rank
    cons = _projected_constraints(structure)
    if p == 1:
        lo, hi = _interval_from_halfspaces(cons)

        def f(x):
            return float(fiber_volume((x,), structure))

        val, err = quad(f, float(lo), float(hi), limit=400,
                        epsabs=1e-11, epsrel=1e-11)
        return IntegralResult(val, max(err, 1e-12), "quadrature")
    if q == 0:
        _system, body = build_body(structure)
        return IntegralResult(float(body.volume_exact), 0.0, "exact")
    system = constraint_system(structure)
    _system, body = build_body(structure)
    (lo1, hi1), _ = body.bounds

    def slice_bounds(x):
        one_d = []
        for a, r in cons:
            if a[1] != 0:
                one_d.append(((a[1],), r - a[0] * x))
            elif a[0] * x > r:
                return None
        return _interval_from_halfspaces(one_d)

    if q == 1:
        # inner integral over the second free coordinate is exact
        def outer(xf):
            x = Fraction(xf)
            iv = slice_bounds(x)
            if iv is None:
                return 0.0
            lo2, hi2 = iv
            uppers, lowers = [], []
            for a, b, r in _box_constraints(system):
                shifted = r - a[0] * x
                if b[0] > 0:
                    uppers.append((-a[1] / b[0], shifted / b[0]))
                elif b[0] < 0:
                    lowers.append((-a[1] / b[0], shifted / b[0]))
            return float(_integrate_envelope(uppers, lowers, lo2, hi2))

        val, err = quad(outer, float(lo1), float(hi1), limit=400,
                        epsabs=1e-9, epsrel=1e-9)
        return IntegralResult(val, max(err, 1e-9), "quadrature")

    def outer(xf):
        x = Fraction(xf)
        iv = slice_bounds(x)
        if iv is None:
            return 0.0
        lo2, hi2 = iv
        if hi2 <= lo2:
            return 0.0

        def inner(yf):
            return _fiber_area_float(structure, (xf, yf))

        val, _err = quad(inner, float(lo2), float(hi2), limit=100,
                         epsabs=1e-10, epsrel=1e-10)
        return val

    val, err = quad(outer, float(lo1), float(hi1), limit=200,
                    epsabs=1e-8, epsrel=1e-8)
    return IntegralResult(val, max(err, 1e-7), "quadrature")


def _integral_monte_carlo(structure, rng, samples) -> IntegralResult:
    if rng is None:
        raise ValueError("Monte Carlo integration needs an explicit rng")
    p, q = structure.free_rank, structure.kernel_rank
    system = constraint_system(structure)
    if q == 0:
        _sys, body = build_body(structure, rng=rng, samples=samples)
        return IntegralResult(body.volume, body.volume_se, "monte-carlo")
    if p <= EXACT_FREE_MAX and q <= EXACT_KERNEL_MAX:
        # exact projection bounds give the tightest sampling box
        _sys, body = build_body(structure)
        lows = [float(lo) for lo, _hi in body.bounds]
        highs = [float(hi) for _lo, hi in body.bounds]
    else:
        radii = _bounding_radii(system)[:p]
        lows = [-float(r) for r in radii]
        highs = [float(r) for r in radii]
    pts = rng.uniform(lows, highs, size=(samples, p))
    if q == 1:
        vals = _fiber_lengths_vectorized(system, pts)
    elif q == 2:
        vals = np.fromiter(
            (float(fiber_volume(tuple(row), structure)) for row in pts),
            dtype=float, count=len(pts),
        )
    else:
        outer = min(samples, 30000)
        pts = pts[:outer]
        vals = np.empty(outer)
        for i, row in enumerate(pts):
            vals[i], _ = fiber_volume_mc(tuple(row), structure, rng, 3000)
    box = float(np.prod([h - l for l, h in zip(lows, highs)]))
    est = box * vals.mean()
    se = box * vals.std(ddof=1) / math.sqrt(len(vals))
    return IntegralResult(est, se, "monte-carlo")


def _fiber_lengths_vectorized(system, pts):
    """Fiber interval lengths for kernel rank one, float batch."""
    p = system.free_count
    rows = system.matrix
    uppers, lowers, flats = [], [], []
    for row in rows:
        a = np.array(row[:p], dtype=float)
        b = float(row[p])
        for sign in (1.0, -1.0):
            aa, bb = sign * a, sign * b
            if bb > 0:
                uppers.append((aa / bb, 1.0 / bb))
            elif bb < 0:
                lowers.append((aa / bb, 1.0 / bb))
            else:
                flats.append((aa, 1.0))
    up = np.min(
        [r - pts @ a for a, r in uppers], axis=0
    )
    lo = np.max(
        [r - pts @ a for a, r in lowers], axis=0
    )
    ok = np.ones(len(pts), dtype=bool)
    for a, r in flats:
        ok &= pts @ a <= r
    return np.where(ok, np.maximum(up - lo, 0.0), 0.0)


# ---------------------------------------------------------------------------
# grids and sampling on the body


def membership_grid(structure: QuotientStructure, per_axis: int = 41):
    """Deterministic grid over the body's bounding box, filtered exactly."""
    if per_axis < 2:
        raise ValueError("per_axis must be at least 2")
    p = structure.free_rank
    if p == 0:
        return [()]
    _system, body = build_body(structure)
    axes = []
    for lo, hi in body.bounds:
        lo, hi = Fraction(lo), Fraction(hi)
        axes.append(
            [lo + (hi - lo) * i / (per_axis - 1) for i in range(per_axis)]
        )
    grid = []
    for y in itertools.product(*axes):
        if fiber_feasible(y, structure):
            grid.append(y)
    return grid


def sample_in_body(structure: QuotientStructure, rng, count: int):
    """Uniform draws from the body by rejection from its bounding box."""
    p = structure.free_rank
    if p == 0:
        return [()] * count
    _system, body = build_body(structure, rng=rng)
    lows = [float(lo) for lo, _hi in body.bounds]
    highs = [float(hi) for _lo, hi in body.bounds]
    if p == 1:
        # a one-dimensional convex projection is exactly its bounding interval
        draws = rng.uniform(lows[0], highs[0], size=count)
        return [(float(v),) for v in draws]
    out = []
    guard = 0
    while len(out) < count:
        batch = rng.uniform(lows, highs, size=(max(64, count), p))
        for row in batch:
            if fiber_feasible(tuple(row), structure):
                out.append(tuple(float(v) for v in row))
                if len(out) == count:
                    break
        guard += 1
        if guard > 10000:
            raise MathDomainError("rejection sampling failed to accept")
    return out


# ---------------------------------------------------------------------------
# reports


def geometry_report(structure: QuotientStructure, rng=None, n_max: int = 12,
                    samples=200000) -> dict:
    """Summary dict: ranks, torsion, scaling constant, volumes, sup profile."""
    p, q = structure.free_rank, structure.kernel_rank
    _system, body = build_body(structure, rng=rng, samples=samples)
    integ = integral_fiber_volume(structure, rng=rng, samples=samples)
    return {
        "p": p,
        "q": q,
        "l": structure.torsion,
        "c": None if p == 0 else scaling_constant(structure, rng=rng,
                                                  samples=samples),
        "volumeC": float(body.volume),
        "integralV": integ.value,
        "kappa0Empirical": float(kappa0_empirical(structure, n_max)),
    }


def profile_table(structure: QuotientStructure, k: int, n: int,
                  per_axis: int = 41):
    """Rows (y, fiber volume, scaled count) over the membership grid."""
    rows = []
    for y in membership_grid(structure, per_axis):
        rows.append(
            {
                "y": tuple(float(v) for v in y),
                "fiberVolume": float(fiber_volume(y, structure)),
                "profile": float(m_profile(k, n, y, structure)),
            }
        )
    return rows
