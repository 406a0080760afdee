"""Quotient structure of integer shift lattices.

A sublattice K of Z^d (the kernel of the index shifts that leave a random
field invariant) splits the index space into cosets.  This module computes
an explicit splitting of Z^d into a free complement, the kernel lattice and
a finite torsion part, starting from the Smith normal form of the generator
matrix.  On top of that splitting it provides exact group arithmetic on the
quotient, canonical coset representatives, enumeration of quotient balls and
counts of coset points inside centered boxes.

All arithmetic here is exact (Python ints, fractions.Fraction and int64
vectors); nothing in this module depends on floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

Vec = tuple[int, ...]
Mat = tuple[tuple[int, ...], ...]


class MathDomainError(ValueError):
    """Inputs are structurally valid but outside the supported math domain."""


# ---------------------------------------------------------------------------
# small exact matrix helpers (row-major tuples)

def _identity(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _mat_vec(rows, vec):
    return tuple(sum(r[j] * vec[j] for j in range(len(vec))) for r in rows)


def _mat_mul(a, b):
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(cols))
        for i in range(len(a))
    )


def _transpose(a):
    if not a:
        return ()
    return tuple(tuple(row[j] for row in a) for j in range(len(a[0])))


def _det(a) -> Fraction:
    n = len(a)
    m = [[Fraction(x) for x in row] for row in a]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col]:
                f = m[r][col] * inv
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def _fraction_inverse(a):
    """Exact inverse of a square matrix, as rows of Fractions."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise MathDomainError("matrix is singular")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def _int_inverse(a) -> Mat:
    # valid only for unimodular matrices; entries of the inverse are integers
    inv = _fraction_inverse(a)
    out = []
    for row in inv:
        for x in row:
            if x.denominator != 1:
                raise MathDomainError("matrix is not unimodular")
        out.append(tuple(int(x) for x in row))
    return tuple(out)


def is_unimodular(a) -> bool:
    return len(a) > 0 and len(a) == len(a[0]) and abs(_det(a)) == 1


def _sup_norm(vec) -> int:
    return max((abs(x) for x in vec), default=0)


# ---------------------------------------------------------------------------
# Smith normal form

def smith_normal_form(matrix):
    """Diagonalize an integer matrix by unimodular row and column operations.

    Returns (S, D, T) with S @ matrix @ T == D, where S and T are unimodular,
    D is diagonal with nonnegative entries and each nonzero diagonal entry
    divides the next.

    Parameters
    ----------
    matrix : sequence of rows of ints, shape (nrows, ncols); ncols may be 0.
    """
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    m = [list(map(int, row)) for row in matrix]
    for row in m:
        if len(row) != ncols:
            raise ValueError("ragged matrix")
    s = _identity(nrows)
    t = _identity(ncols)

    def row_op(i, j, f):
        # row i += f * row j
        m[i] = [a + f * b for a, b in zip(m[i], m[j])]
        s[i] = [a + f * b for a, b in zip(s[i], s[j])]

    def col_op(i, j, f):
        # col i += f * col j
        for row in m:
            row[i] += f * row[j]
        for row in t:
            row[i] += f * row[j]

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        s[i], s[j] = s[j], s[i]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]
        for row in t:
            row[i], row[j] = row[j], row[i]

    def negate_row(i):
        m[i] = [-a for a in m[i]]
        s[i] = [-a for a in s[i]]

    def clear_at(k):
        # produce zeros below and right of the pivot (k, k)
        while True:
            pivot = None
            best = None
            for i in range(k, nrows):
                for j in range(k, ncols):
                    v = abs(m[i][j])
                    if v and (best is None or v < best):
                        best, pivot = v, (i, j)
            if pivot is None:
                return False
            if pivot != (k, k):
                if pivot[0] != k:
                    swap_rows(k, pivot[0])
                if pivot[1] != k:
                    swap_cols(k, pivot[1])
            dirty = False
            for i in range(k + 1, nrows):
                if m[i][k]:
                    row_op(i, k, -(m[i][k] // m[k][k]))
                    if m[i][k]:
                        dirty = True
            for j in range(k + 1, ncols):
                if m[k][j]:
                    col_op(j, k, -(m[k][j] // m[k][k]))
                    if m[k][j]:
                        dirty = True
            if not dirty:
                return True

    def diagonalize(start):
        r = start
        for k in range(start, min(nrows, ncols)):
            if not clear_at(k):
                break
            r = k + 1
        for k in range(r):
            if m[k][k] < 0:
                negate_row(k)
        return r

    rank = diagonalize(0)

    # enforce the divisibility chain; each repair strictly shrinks the
    # diagonal entry at the repair position, so this terminates
    k = 0
    while k < rank - 1:
        if m[k + 1][k + 1] % m[k][k] == 0:
            k += 1
            continue
        col_op(k, k + 1, 1)
        diagonalize(k)
        k = 0

    return (
        tuple(tuple(r) for r in s),
        tuple(tuple(r) for r in m),
        tuple(tuple(r) for r in t),
    )


# ---------------------------------------------------------------------------
# quotient structure

@dataclass(frozen=True)
class GroupSpec:
    """Input description of the shift kernel: dimension plus generators."""

    dim: int
    kernel_generators: tuple[Vec, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        gens = tuple(tuple(int(x) for x in g) for g in self.kernel_generators)
        for g in gens:
            if len(g) != self.dim:
                raise ValueError("kernel generator has wrong length")
        object.__setattr__(self, "kernel_generators", gens)


@dataclass(frozen=True)
class QuotientStructure:
    """Explicit splitting of Z^d into free part, kernel lattice and torsion.

    free_basis and kernel_basis are column vectors; coset_reps lists the
    torsion representatives with the zero vector first.  The private fields
    hold exact data used by the enumeration routines: integer coordinate rows
    for the free and torsion parts and rational norm bounds for the kernel
    basis.
    """

    dim: int
    free_rank: int
    kernel_rank: int
    torsion: int
    free_basis: tuple[Vec, ...]
    kernel_basis: tuple[Vec, ...]
    coset_reps: tuple[Vec, ...]
    invariant_factors: tuple[int, ...]
    _free_rows: Mat
    _torsion_rows: Mat
    _vplus_rows: tuple[tuple[Fraction, ...], ...]
    _vplus_norm: Fraction
    _alpha_bound: int
    _rep_norm: int

    def element(self, vec) -> "HElement":
        return coset_element(vec, self)


@dataclass(frozen=True)
class HElement:
    """A coset of the kernel lattice, stored by its canonical representative.

    The canonical representative is the coset member of minimal sup norm;
    ties are broken by picking the lexicographically smallest vector.
    """

    vec: Vec


def _derive_kernel_data(dim, kernel_basis):
    q = len(kernel_basis)
    if q == 0:
        return (), Fraction(0)
    vt = tuple(kernel_basis)          # rows of V^T = columns of V
    gram = _mat_mul(vt, _transpose(vt))
    gram_inv = _fraction_inverse(gram)
    vplus = _mat_mul(gram_inv, vt)    # q x d left inverse of V
    norm = max(sum(abs(x) for x in row) for row in vplus)
    return vplus, norm


def _build_structure(dim, free_basis, kernel_basis, coset_reps, factors,
                     free_rows, torsion_rows):
    vplus_rows, vplus_norm = _derive_kernel_data(dim, kernel_basis)
    alpha_bound = max(
        (sum(abs(x) for x in row) for row in free_rows), default=0)
    rep_norm = max((_sup_norm(r) for r in coset_reps), default=0)
    torsion = 1
    for f in factors:
        torsion *= f
    return QuotientStructure(
        dim=dim,
        free_rank=len(free_basis),
        kernel_rank=len(kernel_basis),
        torsion=torsion,
        free_basis=tuple(free_basis),
        kernel_basis=tuple(kernel_basis),
        coset_reps=tuple(coset_reps),
        invariant_factors=tuple(factors),
        _free_rows=tuple(free_rows),
        _torsion_rows=tuple(torsion_rows),
        _vplus_rows=vplus_rows,
        _vplus_norm=vplus_norm,
        _alpha_bound=alpha_bound,
        _rep_norm=rep_norm,
    )


def _lll_reduce(vectors):
    """Lovasz-reduced basis (delta 3/4) of the given independent vectors.

    Exact rational arithmetic throughout; the output spans the same lattice
    through a unimodular change of basis.
    """
    b = [list(v) for v in vectors]
    n = len(b)
    if n <= 1:
        return tuple(tuple(v) for v in b)

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    def orthogonalize():
        gs, mu, norms = [], [], []
        for i in range(n):
            w = [Fraction(x) for x in b[i]]
            row = []
            for j in range(i):
                m = Fraction(dot(b[i], gs[j])) / norms[j]
                row.append(m)
                w = [a - m * g for a, g in zip(w, gs[j])]
            gs.append(w)
            norms.append(dot(w, w))
            mu.append(row)
        return gs, mu, norms

    delta = Fraction(3, 4)
    _gs, mu, norms = orthogonalize()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            shift = math.floor(mu[k][j] + Fraction(1, 2))
            if shift:
                b[k] = [a - shift * c for a, c in zip(b[k], b[j])]
                _gs, mu, norms = orthogonalize()
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            _gs, mu, norms = orthogonalize()
            k = max(k - 1, 1)
    return tuple(tuple(int(x) for x in v) for v in b)


def analyze_quotient(spec: GroupSpec) -> QuotientStructure:
    """Split Z^d along the lattice generated by spec.kernel_generators.

    The generators may be dependent, repeated or zero; the kernel rank is
    read off the Smith normal form.  Returns the full quotient structure
    with an independent kernel basis, a free complement basis and torsion
    coset representatives (the zero vector first).
    """
    d = spec.dim
    gens = spec.kernel_generators
    if not gens:
        s = tuple(tuple(_identity(d)[i]) for i in range(d))
        return _build_structure(
            d,
            [tuple(int(i == j) for i in range(d)) for j in range(d)],
            [], [tuple([0] * d)], [], s, (),
        )

    b = tuple(tuple(g[i] for g in gens) for i in range(d))  # d x q0, columns = gens
    s, dmat, _t = smith_normal_form(b)
    factors = []
    for i in range(min(len(dmat), len(dmat[0]) if dmat else 0)):
        if dmat[i][i]:
            factors.append(dmat[i][i])
    r = len(factors)
    s_inv = _int_inverse(s)
    s_inv_cols = _transpose(s_inv)

    # the raw product basis can be badly skewed even for tame generators;
    # reduce it (a unimodular change, so the lattice and all counts agree)
    kernel_basis = list(_lll_reduce(
        [tuple(factors[i] * x for x in s_inv_cols[i]) for i in range(r)]))
    free_basis = [s_inv_cols[i] for i in range(r, d)]
    coset_reps = []
    for torsion_coords in itertools.product(*[range(f) for f in factors]):
        vec = tuple(
            sum(torsion_coords[i] * s_inv_cols[i][j] for i in range(r))
            for j in range(d)
        )
        coset_reps.append(vec)

    free_rows = tuple(s[i] for i in range(r, d))
    torsion_rows = tuple(s[i] for i in range(r))
    return _build_structure(d, free_basis, kernel_basis, coset_reps,
                            factors, free_rows, torsion_rows)


def rebase_structure(structure: QuotientStructure,
                     free_map=None, kernel_map=None) -> QuotientStructure:
    """Re-express the same quotient in different bases.

    free_map (p x p) and kernel_map (q x q) must be unimodular; the new
    free basis columns are free_basis @ free_map, likewise for the kernel.
    The underlying group is unchanged, so every quotient-level quantity
    must be invariant under this operation.
    """
    p, q = structure.free_rank, structure.kernel_rank
    free_basis = list(structure.free_basis)
    kernel_basis = list(structure.kernel_basis)
    free_rows = structure._free_rows
    if free_map is not None:
        if len(free_map) != p or not is_unimodular(free_map):
            raise ValueError("free_map must be a p x p unimodular matrix")
        cols = _transpose(free_map)
        free_basis = [
            tuple(sum(cols[j][i] * structure.free_basis[i][k] for i in range(p))
                  for k in range(structure.dim))
            for j in range(p)
        ]
        inv = _int_inverse(free_map)
        free_rows = _mat_mul(inv, structure._free_rows)
    if kernel_map is not None:
        if len(kernel_map) != q or not is_unimodular(kernel_map):
            raise ValueError("kernel_map must be a q x q unimodular matrix")
        cols = _transpose(kernel_map)
        kernel_basis = [
            tuple(sum(cols[j][i] * structure.kernel_basis[i][k] for i in range(q))
                  for k in range(structure.dim))
            for j in range(q)
        ]
    return _build_structure(
        structure.dim, free_basis, kernel_basis, structure.coset_reps,
        structure.invariant_factors, free_rows, structure._torsion_rows)


# ---------------------------------------------------------------------------
# coset fibers inside boxes: existence, counting, enumeration
#
# For a vector t and level n the fiber is the set of integer kernel
# coordinates lam with ||t + V lam||_inf <= n.  Each coordinate row of V
# yields a two-sided constraint; kernel ranks 1 and 2 are resolved by exact
# interval arithmetic, higher ranks by a bounded box scan.

def _kernel_image(structure, lam):
    v = structure.kernel_basis
    d = structure.dim
    return tuple(sum(v[i][j] * lam[i] for i in range(len(lam))) for j in range(d))


def _fiber_interval_1d(structure, vec, level):
    # returns (lo, hi) integer bounds for the single kernel coordinate,
    # or None if the fiber is empty
    col = structure.kernel_basis[0]
    lo, hi = None, None
    for vi, ti in zip(col, vec):
        if vi == 0:
            if abs(ti) > level:
                return None
            continue
        a = Fraction(-level - ti, vi)
        b = Fraction(level - ti, vi)
        if vi < 0:
            a, b = b, a
        lo = a if lo is None or a > lo else lo
        hi = b if hi is None or b < hi else hi
    if lo is None:
        raise MathDomainError("kernel basis column is zero")
    lo_i = math.ceil(lo)
    hi_i = math.floor(hi)
    if lo_i > hi_i:
        return None
    return lo_i, hi_i


def _fiber_ranges_2d(structure, vec, level):
    # yields (lam1, lo2, hi2) for each feasible first coordinate
    c1 = structure.kernel_basis[0]
    c2 = structure.kernel_basis[1]
    plain = []      # rows with a nonzero second coefficient: (a, b, lo, hi)
    only1 = []      # rows constraining lam1 alone: (a, lo, hi)
    for a, b, ti in zip(c1, c2, vec):
        lo, hi = -level - ti, level - ti
        if b == 0:
            if a == 0:
                if not (lo <= 0 <= hi):
                    return
                continue
            only1.append((a, lo, hi))
        else:
            plain.append((a, b, lo, hi))

    # project onto lam1: pairwise compatibility of the lam2 intervals
    lo1, hi1 = None, None

    def tighten(coeff, bound, upper):
        # coeff * lam1 <= bound (upper) or >= bound (lower), coeff != 0
        nonlocal lo1, hi1
        val = Fraction(bound, coeff)
        if (coeff > 0) == upper:
            hi1 = val if hi1 is None or val < hi1 else hi1
        else:
            lo1 = val if lo1 is None or val > lo1 else lo1

    for a, lo, hi in only1:
        tighten(a, hi, True)
        tighten(a, lo, False)

    bounded = False
    for (ai, bi, loi, hii) in plain:
        for (aj, bj, loj, hij) in plain:
            # lam2 >= (loi - ai x)/bi (bi>0) vs lam2 <= (hij - aj x)/bj (bj>0);
            # cross-multiplied with positive factors to stay exact
            si = loi if bi > 0 else hii
            sj = hij if bj > 0 else loj
            # lower bound from row i: (si - ai x)/bi with sign handling
            # condition: (si - ai x)/bi <= (sj - aj x)/bj
            # multiply by bi*bj, orienting by sign
            coeff = aj * bi - ai * bj
            bound = si * bj - sj * bi
            f = bi * bj
            if f < 0:
                coeff, bound = -coeff, -bound
            # now: coeff * x <= -bound
            if coeff == 0:
                if bound > 0:
                    return
                continue
            bounded = True
            tighten(coeff, -bound, True)

    if plain and not bounded and lo1 is None and hi1 is None:
        # lam1 unconstrained by projection; fall back to the global bound
        radius = structure._vplus_norm * (level + _sup_norm(vec))
        lo1, hi1 = -radius, radius
    if lo1 is None or hi1 is None:
        radius = structure._vplus_norm * (level + _sup_norm(vec))
        lo1 = -radius if lo1 is None else lo1
        hi1 = radius if hi1 is None else hi1
    for lam1 in range(math.ceil(lo1), math.floor(hi1) + 1):
        lo2, hi2 = None, None
        ok = True
        for a, b, lo, hi in plain:
            rlo, rhi = lo - a * lam1, hi - a * lam1
            aa = Fraction(rlo, b)
            bb = Fraction(rhi, b)
            if b < 0:
                aa, bb = bb, aa
            lo2 = aa if lo2 is None or aa > lo2 else lo2
            hi2 = bb if hi2 is None or bb < hi2 else hi2
        if lo2 is None:
            ok = False
        if ok:
            l2, h2 = math.ceil(lo2), math.floor(hi2)
            if l2 <= h2:
                yield lam1, l2, h2


def _fiber_points(structure, vec, level):
    """Yield kernel coordinates lam with ||vec + V lam||_inf <= level."""
    q = structure.kernel_rank
    if level < 0:
        return
    if q == 0:
        if _sup_norm(vec) <= level:
            yield ()
        return
    if q == 1:
        r = _fiber_interval_1d(structure, vec, level)
        if r is not None:
            for lam in range(r[0], r[1] + 1):
                yield (lam,)
        return
    if q == 2:
        for lam1, lo2, hi2 in _fiber_ranges_2d(structure, vec, level):
            for lam2 in range(lo2, hi2 + 1):
                yield (lam1, lam2)
        return
    # recenter on the Babai point first: the raw vector may sit far from the
    # origin (coset representatives do), which would blow up the scan radius
    lam0 = _babai_point(structure, vec)
    base = tuple(a + b for a, b in zip(vec, _kernel_image(structure, lam0)))
    radius = math.ceil(structure._vplus_norm * (level + _sup_norm(base)))
    axis = np.arange(-radius, radius + 1, dtype=np.int64)
    cols = np.array(structure.kernel_basis, dtype=np.int64)
    base_arr = np.asarray(base, dtype=np.int64)
    tail = np.meshgrid(*([axis] * (q - 1)), indexing="ij")
    tail = np.stack([g.ravel() for g in tail], axis=1)
    tail_pts = tail @ cols[1:]
    for first in axis:
        pts = (base_arr + int(first) * cols[0])[None, :] + tail_pts
        ok = np.max(np.abs(pts), axis=1) <= level
        for lam in tail[ok]:
            yield (int(first) + lam0[0],) + tuple(
                int(m + z) for m, z in zip(lam, lam0[1:]))


def _count_fiber(structure, vec, level):
    q = structure.kernel_rank
    if level < 0:
        return 0
    if q == 0:
        return 1 if _sup_norm(vec) <= level else 0
    if q == 1:
        r = _fiber_interval_1d(structure, vec, level)
        return 0 if r is None else r[1] - r[0] + 1
    if q == 2:
        return sum(hi - lo + 1 for _x, lo, hi in _fiber_ranges_2d(structure, vec, level))
    return sum(1 for _ in _fiber_points(structure, vec, level))


def _fiber_nonempty(structure, vec, level):
    if structure.kernel_rank == 1:
        return _fiber_interval_1d(structure, vec, level) is not None
    return next(iter(_fiber_points(structure, vec, level)), None) is not None


def _babai_point(structure, vec):
    # nearest-plane style rounding; gives an upper bound for the fold norm
    lam = []
    for row in structure._vplus_rows:
        x = -sum(r * v for r, v in zip(row, vec))
        lam.append(math.floor(x + Fraction(1, 2)))
    return tuple(lam)


def _norm_vec(structure, vec):
    if structure.kernel_rank == 0:
        return _sup_norm(vec)
    lam0 = _babai_point(structure, vec)
    shifted = tuple(a + b for a, b in zip(vec, _kernel_image(structure, lam0)))
    hi = min(_sup_norm(vec), _sup_norm(shifted))
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if _fiber_nonempty(structure, vec, mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


def _canonical_vec(structure, vec):
    vec = tuple(int(x) for x in vec)
    if structure.kernel_rank == 0:
        return vec
    n = _norm_vec(structure, vec)
    best = None
    for lam in _fiber_points(structure, vec, n):
        cand = tuple(a + b for a, b in zip(vec, _kernel_image(structure, lam)))
        if best is None or cand < best:
            best = cand
    return best


def coset_element(vec, structure: QuotientStructure) -> HElement:
    """Reduce an integer vector to the canonical representative of its coset."""
    vec = tuple(int(x) for x in vec)
    if len(vec) != structure.dim:
        raise ValueError("vector has wrong length")
    return HElement(_canonical_vec(structure, vec))


def group_add(u1: HElement, u2: HElement, structure: QuotientStructure) -> HElement:
    return coset_element(tuple(a + b for a, b in zip(u1.vec, u2.vec)), structure)


def group_inverse(u: HElement, structure: QuotientStructure) -> HElement:
    return coset_element(tuple(-a for a in u.vec), structure)


def quotient_norm(u: HElement, structure: QuotientStructure) -> int:
    """Minimal sup norm over the coset (exact, by bounded enumeration)."""
    return _norm_vec(structure, u.vec)


def count_in_box(u: HElement, level: int, structure: QuotientStructure) -> int:
    """Number of coset members inside the centered box of radius level."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    return _count_fiber(structure, u.vec, level)


def element_coords(vec, structure: QuotientStructure):
    """Coset coordinates (torsion tuple, free tuple); independent of the
    representative chosen for the coset."""
    torsion = tuple(
        sum(r * v for r, v in zip(row, vec)) % f
        for row, f in zip(structure._torsion_rows, structure.invariant_factors)
    )
    free = tuple(sum(r * v for r, v in zip(row, vec))
                 for row in structure._free_rows)
    return torsion, free


def element_from_coords(torsion, free, structure: QuotientStructure) -> HElement:
    rep_index = 0
    for a, f in zip(torsion, structure.invariant_factors):
        rep_index = rep_index * f + (a % f)
    base = structure.coset_reps[rep_index]
    vec = tuple(
        base[j] + sum(free[i] * structure.free_basis[i][j]
                      for i in range(structure.free_rank))
        for j in range(structure.dim)
    )
    return coset_element(vec, structure)


def enumerate_ball(level: int, structure: QuotientStructure):
    """All cosets whose fold norm is at most level, canonically represented,
    sorted by representative.  The count grows like level**free_rank."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    d = structure.dim
    if structure.kernel_rank == 0:
        rng = range(-level, level + 1)
        return tuple(HElement(v) for v in itertools.product(rng, repeat=d))
    out = []
    bound = structure._alpha_bound * level
    p = structure.free_rank
    for rep in structure.coset_reps:
        for alpha in itertools.product(range(-bound, bound + 1), repeat=p):
            vec = tuple(
                rep[j] + sum(alpha[i] * structure.free_basis[i][j] for i in range(p))
                for j in range(d)
            )
            if _fiber_nonempty(structure, vec, level):
                out.append(HElement(_canonical_vec(structure, vec)))
    out.sort(key=lambda e: e.vec)
    return tuple(out)
