"""Tests for the polyhedral geometry layer.

Exact values on the small reference structures were derived by hand;
Monte Carlo paths are cross-checked against the exact ones and against
an independent convex-hull computation.
"""

import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from stablefield.lattice import (
    GroupSpec,
    MathDomainError,
    analyze_quotient,
    count_in_box,
    enumerate_ball,
    rebase_structure,
)
from stablefield.geometry import (
    build_body,
    build_fiber_volume,
    constraint_system,
    fiber_feasible,
    fiber_volume,
    fiber_volume_mc,
    geometry_report,
    integral_fiber_volume,
    kappa0_empirical,
    m_profile,
    membership_grid,
    profile_table,
    sample_in_body,
    scaling_constant,
    _fiber_area_float,
)

warnings.filterwarnings("ignore", category=Warning, module="scipy")


@pytest.fixture(scope="module")
def diag():
    return analyze_quotient(GroupSpec(2, ((1, 1),)))


@pytest.fixture(scope="module")
def grid3():
    # d=3, kernel spanned by (1,1,0) and (0,1,1): p=1, q=2, torsion 1
    return analyze_quotient(GroupSpec(3, ((1, 1, 0), (0, 1, 1))))


# ---------------------------------------------------------------------------
# diagonal-shift reference values


def test_diag_constraint_system(diag):
    system = constraint_system(diag)
    assert system.dim == 2
    assert system.free_count == 1
    assert system.kernel_count == 1
    det = (system.matrix[0][0] * system.matrix[1][1]
           - system.matrix[0][1] * system.matrix[1][0])
    assert abs(det) == diag.torsion == 1


def test_diag_body(diag):
    _system, body = build_body(diag)
    assert body.dimension == 1
    assert body.volume_exact == 4
    assert body.volume_se == 0.0
    (lo, hi), = body.bounds
    assert (lo, hi) == (-2, 2)


def test_diag_fiber_values(diag):
    assert fiber_volume((0,), diag) == 2
    assert fiber_volume((0.5,), diag) == Fraction(3, 2)
    assert fiber_volume((-0.5,), diag) == Fraction(3, 2)
    assert fiber_volume((-1.25,), diag) == Fraction(3, 4)
    assert fiber_volume((2,), diag) == 0
    assert fiber_volume((-2,), diag) == 0
    assert fiber_volume((2.5,), diag) == 0


def test_diag_fiber_evaluator(diag):
    fv = build_fiber_volume(diag)
    assert fv.sup_norm == 2.0
    assert fv((1.0,)) == 1.0


def test_diag_scaling_constant(diag):
    assert scaling_constant(diag) == pytest.approx(4.0, abs=1e-12)


def test_diag_profile_value(diag):
    assert m_profile(0, 100, (0.5,), diag) == Fraction(151, 100)
    assert m_profile(0, 100, (0.5,), diag) - fiber_volume((0.5,), diag) == Fraction(1, 100)


def test_diag_profile_outside_body(diag):
    assert m_profile(0, 200, (3.0,), diag) == 0


def test_diag_kappa0(diag):
    # the scaled count (2n+1-|t|)/n peaks at t=0, n=1
    assert kappa0_empirical(diag, 12) == 3


def test_diag_integral_exact(diag):
    res = integral_fiber_volume(diag)
    assert res.method == "exact"
    assert res.error == 0.0
    assert diag.torsion * res.value == 4.0


def test_diag_profile_convergence(diag):
    grid = membership_grid(diag, 41)
    assert len(grid) == 41
    worst_by_n = []
    for n in (25, 50, 100, 200):
        worst = max(
            abs(m_profile(0, n, y, diag) - fiber_volume(y, diag)) for y in grid
        )
        worst_by_n.append(worst)
    assert all(a >= b for a, b in zip(worst_by_n, worst_by_n[1:]))
    assert worst_by_n[-1] <= Fraction(5, 100)
    assert worst_by_n[-1] == Fraction(1, 200)


def test_diag_average_identity(diag):
    n = 200
    total = sum(Fraction(count_in_box(u, n, diag), n) for u in enumerate_ball(n, diag))
    avg = total / n
    assert avg == Fraction(2 * n + 1, n) ** 2
    assert abs(float(avg) / 4 - 1) <= 0.025


def test_diag_symmetry(diag):
    for y in membership_grid(diag, 21):
        neg = tuple(-v for v in y)
        assert fiber_volume(y, diag) == fiber_volume(neg, diag)
        assert fiber_feasible(neg, diag)


# ---------------------------------------------------------------------------
# trivial kernel


def test_trivial_kernel_geometry():
    qs = analyze_quotient(GroupSpec(2))
    _system, body = build_body(qs)
    assert body.dimension == 2
    assert body.volume_exact == 4
    assert scaling_constant(qs) == pytest.approx(2.0, abs=1e-12)
    assert fiber_volume((0.3, -0.7), qs) == 1
    assert fiber_volume((1, 1), qs) == 1
    assert fiber_volume((1.2, 0.0), qs) == 0
    res = integral_fiber_volume(qs)
    assert res.method == "exact"
    assert qs.torsion * res.value == 4.0


# ---------------------------------------------------------------------------
# d=3 reference: p=1, q=2


def test_grid3_volume_and_constant(grid3):
    assert (grid3.free_rank, grid3.kernel_rank, grid3.torsion) == (1, 2, 1)
    _system, body = build_body(grid3)
    assert body.volume_exact == 6
    assert scaling_constant(grid3) == pytest.approx(6.0, abs=1e-12)


def test_grid3_volume_against_ball_growth(grid3):
    c = scaling_constant(grid3)
    n = 40
    est = len(enumerate_ball(n, grid3)) / (grid3.torsion * n)
    assert abs(est - c) / c <= 0.03


def test_grid3_integral_quadrature(grid3):
    res = integral_fiber_volume(grid3)
    assert res.method == "quadrature"
    assert grid3.torsion * res.value == pytest.approx(8.0, abs=1e-6)


def test_grid3_fiber_exact_vs_mc(grid3):
    rng = np.random.default_rng(404)
    for y in [(0.0,), (1.5,), (-2.5,)]:
        exact = float(fiber_volume(y, grid3))
        est, se = fiber_volume_mc(y, grid3, rng, samples=200000)
        assert abs(est - exact) <= max(4 * se, 5e-3)


def test_grid3_fiber_float_area(grid3):
    for yv in (0.0, 0.75, -1.5, 2.2):
        exact = float(fiber_volume((yv,), grid3))
        assert _fiber_area_float(grid3, (Fraction(yv),)) == pytest.approx(
            exact, abs=1e-9
        )


# ---------------------------------------------------------------------------
# finite quotient: p = 0


def test_finite_quotient_geometry():
    qs = analyze_quotient(GroupSpec(2, ((2, 1), (1, 2))))
    assert qs.free_rank == 0
    _system, body = build_body(qs)
    assert body.dimension == 0
    assert body.volume == 1.0
    assert fiber_volume((), qs) == Fraction(4, 3)
    res = integral_fiber_volume(qs)
    assert res.method == "exact"
    assert qs.torsion * res.value == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(MathDomainError):
        scaling_constant(qs)


# ---------------------------------------------------------------------------
# a two-dimensional projection


def test_polygon_body_matches_hull():
    from scipy.spatial import ConvexHull

    qs = analyze_quotient(GroupSpec(3, ((1, 2, 1),)))
    assert (qs.free_rank, qs.kernel_rank) == (2, 1)
    _system, body = build_body(qs)
    assert body.dimension == 2
    verts = [(float(x), float(y)) for x, y in body.vertices]
    hull = ConvexHull(verts)
    assert float(body.volume_exact) == pytest.approx(hull.volume, rel=1e-9)
    # central symmetry of the vertex set
    vset = set(body.vertices)
    assert {(-x, -y) for x, y in vset} == vset


def test_polygon_integral_identity():
    qs = analyze_quotient(GroupSpec(3, ((1, 2, 1),)))
    res = integral_fiber_volume(qs)
    assert res.method == "quadrature"
    assert qs.torsion * res.value == pytest.approx(8.0, abs=1e-6)


# ---------------------------------------------------------------------------
# Monte Carlo regimes


def test_mc_integral_p1q3():
    qs = analyze_quotient(GroupSpec(4, ((1, 1, 0, 0), (0, 1, 1, 0), (0, 0, 1, 1))))
    assert (qs.free_rank, qs.kernel_rank) == (1, 3)
    rng = np.random.default_rng(2024)
    res = integral_fiber_volume(qs, rng=rng, samples=30000)
    assert res.method == "monte-carlo"
    lhs = qs.torsion * res.value
    assert abs(lhs - 16.0) <= max(4 * qs.torsion * res.error, 0.16)


def test_mc_integral_p3q1():
    qs = analyze_quotient(GroupSpec(4, ((1, 2, 0, 1),)))
    assert (qs.free_rank, qs.kernel_rank) == (3, 1)
    rng = np.random.default_rng(7)
    res = integral_fiber_volume(qs, rng=rng, samples=200000)
    lhs = qs.torsion * res.value
    assert abs(lhs - 16.0) <= max(4 * qs.torsion * res.error, 0.16)


def test_mc_body_volume_p3():
    qs = analyze_quotient(GroupSpec(4, ((1, 2, 0, 1),)))
    rng = np.random.default_rng(99)
    _system, body = build_body(qs, rng=rng, samples=200000)
    assert body.volume_se > 0
    # cross-check against ball growth: |H_n| / (l n^p) -> body volume
    n = 14
    est = len(enumerate_ball(n, qs)) / (qs.torsion * n ** 3)
    assert abs(est - body.volume) / body.volume <= 0.12


def test_mc_requires_rng():
    qs = analyze_quotient(GroupSpec(4, ((1, 2, 0, 1),)))
    with pytest.raises(ValueError):
        build_body(qs)
    with pytest.raises(ValueError):
        integral_fiber_volume(analyze_quotient(
            GroupSpec(4, ((1, 1, 0, 0), (0, 1, 1, 0), (0, 0, 1, 1)))))


# ---------------------------------------------------------------------------
# invariance and identity across a structure set


STRUCTURES = [
    (2, ((1, 1),)),
    (2, ()),
    (2, ((2, 1), (1, 2))),
    (3, ((1, 1, 0), (0, 1, 1))),
    (3, ((1, 2, 1),)),
    (3, ((2, 0, 1),)),
    (1, ((3,),)),
]


def test_volume_identity_exact_structures():
    for d, gens in STRUCTURES:
        qs = analyze_quotient(GroupSpec(d, gens))
        res = integral_fiber_volume(qs)
        assert res.method in ("exact", "quadrature")
        lhs = qs.torsion * res.value
        assert lhs == pytest.approx(2 ** d, abs=1e-6), (d, gens)


def test_scaling_constant_rebase_invariance():
    rng = np.random.default_rng(31)
    cases = [
        (2, ((1, 1),), ((1,),), ((1,),)),
        (3, ((1, 1, 0), (0, 1, 1)), ((-1,),), ((1, 1), (0, 1))),
        (3, ((1, 2, 1),), ((1, 1), (0, 1)), ((-1,),)),
    ]
    for d, gens, fmap, kmap in cases:
        qs = analyze_quotient(GroupSpec(d, gens))
        rb = rebase_structure(qs, fmap, kmap)
        assert scaling_constant(rb) == pytest.approx(
            scaling_constant(qs), abs=1e-9
        )


def test_integral_rebase_invariance():
    qs = analyze_quotient(GroupSpec(3, ((1, 1, 0), (0, 1, 1))))
    rb = rebase_structure(qs, ((-1,),), ((1, 0), (1, 1)))
    a = integral_fiber_volume(qs)
    b = integral_fiber_volume(rb)
    assert a.value == pytest.approx(b.value, abs=1e-6)


# ---------------------------------------------------------------------------
# grids, sampling, reports


def test_membership_grid_p2():
    qs = analyze_quotient(GroupSpec(3, ((1, 2, 1),)))
    grid = membership_grid(qs, 21)
    assert 0 < len(grid) < 21 * 21
    for y in grid:
        assert fiber_feasible(y, qs)


def test_sample_in_body(diag):
    rng = np.random.default_rng(5)
    pts = sample_in_body(diag, rng, 500)
    assert len(pts) == 500
    xs = [y[0] for y in pts]
    assert all(-2 <= x <= 2 for x in xs)
    assert abs(np.mean(xs)) < 0.25
    assert np.std(xs) > 0.8


def test_geometry_report(diag):
    rep = geometry_report(diag, n_max=6)
    assert rep["p"] == 1 and rep["q"] == 1 and rep["l"] == 1
    assert rep["c"] == pytest.approx(4.0)
    assert rep["volumeC"] == pytest.approx(4.0)
    assert rep["integralV"] == pytest.approx(4.0)
    assert rep["kappa0Empirical"] == pytest.approx(3.0)


def test_profile_table(diag):
    rows = profile_table(diag, 0, 50, per_axis=9)
    assert len(rows) == 9
    for row in rows:
        assert set(row) == {"y", "fiberVolume", "profile"}
        assert abs(row["fiberVolume"] - row["profile"]) <= 0.05


# ---------------------------------------------------------------------------
# validation


def test_dependent_columns_rejected(diag):
    import dataclasses

    broken = dataclasses.replace(diag, free_basis=diag.kernel_basis)
    with pytest.raises(MathDomainError):
        constraint_system(broken)


def test_grid_per_axis_validation(diag):
    with pytest.raises(ValueError):
        membership_grid(diag, 1)


def test_profile_validation(diag):
    with pytest.raises(ValueError):
        m_profile(0, 0, (0.0,), diag)
    with pytest.raises(ValueError):
        m_profile(5, 10, (0.0,), diag)
    with pytest.raises(ValueError):
        m_profile(0, 10, (0.0, 0.0), diag)
