"""Plane geometry of approximation-coefficient pairs.

The homeomorphism psi maps the dynamic-pair strip (0,1) x (-inf, m-k)
into the (u,v) plane; consecutive approximation coefficients land exactly
on psi of the orbit's (future, past).  The image splits into convex
quadrangles indexed by the adjacent digit pair (a, b), whose vertices and
bounding lines are closed-form rational functions of (m, k, a, b).  All
formulas below run unchanged on exact Fractions, which the tests use to
pin the k=1 special cases.

Known degeneracies, handled explicitly: at m=0, k=1 the (0,0) quadrangle
collapses to a triangle (one vertex falls inside an edge); at m=1, k=1
its counterpart is unbounded (one vertex escapes to infinity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf, mpmathify, sqrt as mp_sqrt

from .core import DomainError
from .params import Params, Real


class VertexAtInfinityError(ValueError):
    """The requested corner escapes to infinity (m=1, k=1, a=b=0 only)."""


class UnboundedRegionError(ValueError):
    """A diameter was requested for a region containing the unbounded cell."""


@dataclass(frozen=True)
class JagerPoint:
    """A point (u, v) of the pair space, optionally tagged with the digit
    pair that predicts which subdivision it belongs to."""

    u: Real
    v: Real
    predicted_a: Optional[int] = None
    predicted_b: Optional[int] = None


@dataclass(frozen=True)
class HalfPlane:
    """alpha*u + beta*v > gamma (or >= when closed)."""

    alpha: Real
    beta: Real
    gamma: Real
    closed: bool = False

    def eval(self, u: Real, v: Real) -> Real:
        return self.alpha * u + self.beta * v - self.gamma

    def margin(self, u: Real, v: Real) -> mpf:
        """Signed distance of (u, v) from the boundary line, interior positive."""
        norm = mp_sqrt(mpmathify(self.alpha) ** 2 + mpmathify(self.beta) ** 2)
        return mpmathify(self.eval(u, v)) / norm

    def flipped(self) -> "HalfPlane":
        return HalfPlane(-self.alpha, -self.beta, -self.gamma, self.closed)


@dataclass
class SubdivisionRegion:
    """Quadrangle cell for the digit pair (a, b): half-plane form plus
    cached vertices in cyclic order.  Degenerate and unbounded cells keep
    the same half-plane representation."""

    a: int
    b: int
    halfplanes: list[HalfPlane]
    vertices: list[JagerPoint]
    degenerate: bool = False
    unbounded: bool = False


@dataclass
class BoundsReport:
    """Bound values for a digit window [l, L].

    ``form`` is "sum_sq" (bound on the squared diagonal of consecutive
    pair differences) or "max_abs" (bound on the larger single difference).
    ``upper`` is None exactly when the classical m=1, k=1 exception makes
    the region unbounded.
    """

    l: int
    L: int
    upper: Optional[Real]
    lower: Optional[Real]
    classical_exception: bool = False
    form: str = "sum_sq"


def psi(x: Real, y: Real, params: Params) -> JagerPoint:
    """Map a dynamic pair to (u, v) = (1/(x-y), (m-x)(m-y)/((2m-1)k(x-y))).

    Accepts y on the closed boundary y = m-k; orbits with all-zero digit
    prefixes attain it.
    """
    m, k = params.m, params.k
    if not (0 < x < 1):
        raise DomainError(f"psi needs x in (0,1), got {x}")
    if y - (m - k) > 0:  # difference form: mixed mpf/Fraction comparisons fail
        raise DomainError(f"psi needs y <= m-k = {m - k}, got {y}")
    gap = x - y
    u = 1 / gap
    v = (m - x) * (m - y) / ((2 * m - 1) * k * gap)
    return JagerPoint(u, v)


def cylinder_interval(a: int, params: Params) -> tuple[Real, Real]:
    """Open interval of seeds whose first digit is a; the intervals tile (0,1)."""
    if a < 0:
        raise DomainError("digit must be >= 0")
    m, k = params.m, params.k
    lo = ((1 - m) * k + m * a) / (a + k + 1 - m)
    hi = ((1 - m) * k + m * (a + 1)) / (a + k + m)
    return lo, hi


def vertex_uv(a: int, b: int, params: Params) -> JagerPoint:
    """Corner where the a-th past line meets the b-th future line:
    ((b+k)/den, (a+k)/den) with den = (1-2m)k + (a+k)(b+k)."""
    if a < 0 or b < 0:
        raise DomainError("digit indices must be >= 0")
    m, k = params.m, params.k
    den = (1 - 2 * m) * k + (a + k) * (b + k)
    if den <= 0:
        raise VertexAtInfinityError(
            f"corner ({a},{b}) at infinity for m={m}, k={k}"
        )
    return JagerPoint((b + k) / den, (a + k) / den)


def p_line(a: int, params: Params) -> tuple[HalfPlane, tuple[Optional[JagerPoint], Optional[JagerPoint]]]:
    """Boundary line (a+k)^2 u + (1-2m)k v = a+k of the a-th past strip,
    with its two endpoints.

    The first endpoint is None for m=1, k=1, a=0, where the segment
    becomes a ray to infinity.
    """
    if a < 0:
        raise DomainError("digit must be >= 0")
    m, k = params.m, params.k
    line = HalfPlane((a + k) ** 2, (1 - 2 * m) * k, a + k)
    d1 = a + k - m
    first = None
    if d1 > 0:
        first = JagerPoint(1 / d1, m * (a + k) / (k * d1))
    d2 = a + k + 1 - m
    second = JagerPoint(1 / d2, (1 - m) * (a + k) / (k * d2))
    return line, (first, second)


def f_line(b: int, params: Params) -> tuple[HalfPlane, tuple[Optional[JagerPoint], Optional[JagerPoint]]]:
    """Boundary line of the b-th future strip: the u<->v reflection of p_line(b)."""
    line, (first, second) = p_line(b, params)
    swap = lambda p: None if p is None else JagerPoint(p.v, p.u)
    return HalfPlane(line.beta, line.alpha, line.gamma), (swap(first), swap(second))


def _collinear(p: JagerPoint, q: JagerPoint, r: JagerPoint, tol: Real) -> bool:
    cross = (q.u - p.u) * (r.v - p.v) - (q.v - p.v) * (r.u - p.u)
    return mpmathify(abs(cross)) <= tol


def subdivision(a: int, b: int, params: Params) -> SubdivisionRegion:
    """The quadrangle cell for adjacent digits (a, b).

    Vertices run cyclically (a,b) -> (a+1,b) -> (a+1,b+1) -> (a,b+1);
    half-planes are oriented so the cell's interior is positive, which
    settles the boundary-line orientations uniformly (including both k=1
    special cells).
    """
    corners = []
    unbounded = False
    for (i, j) in ((a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)):
        try:
            corners.append(vertex_uv(i, j, params))
        except VertexAtInfinityError:
            unbounded = True
    cu = sum(p.u for p in corners) / len(corners)
    cv = sum(p.v for p in corners) / len(corners)
    halfplanes = []
    for line in (p_line(a, params)[0], p_line(a + 1, params)[0],
                 f_line(b, params)[0], f_line(b + 1, params)[0]):
        if line.eval(cu, cv) < 0:
            line = line.flipped()
        halfplanes.append(line)
    tol = params.boundary_tolerance
    degenerate = len(corners) == 4 and any(
        _collinear(corners[i - 1], corners[i], corners[(i + 1) % 4], tol)
        for i in range(4)
    )
    return SubdivisionRegion(a, b, halfplanes, corners, degenerate, unbounded)


def contains(region: SubdivisionRegion, p: JagerPoint, tol: Real) -> str:
    """Locate a point against the region: "inside", "boundary", or "outside".

    tol is an absolute distance band around each boundary line; the same
    sign tests serve bounded, degenerate, and unbounded cells.
    """
    tol = mpmathify(tol)
    worst = None
    for hp in region.halfplanes:
        s = hp.margin(p.u, p.v)
        worst = s if worst is None else min(worst, s)
    if worst < -tol:
        return "outside"
    if worst <= tol:
        return "boundary"
    return "inside"


def _dist_sq(p: JagerPoint, q: JagerPoint) -> Real:
    return (p.u - q.u) ** 2 + (p.v - q.v) ** 2


def acute_diagonal_sq(a: int, A: int, b: int, B: int, params: Params) -> Real:
    """Squared length of the diagonal joining the two acute corners of the
    union cell [a..A] x [b..B]: the true squared diameter.

    The slopes of the bounding lines put the acute corners at
    (a, B+1)-(A+1, b) when m=0 and at (a, b)-(A+1, B+1) when m=1.
    """
    if params.m == 0:
        return _dist_sq(vertex_uv(a, B + 1, params), vertex_uv(A + 1, b, params))
    return _dist_sq(vertex_uv(a, b, params), vertex_uv(A + 1, B + 1, params))


def obtuse_diagonal_sq(a: int, A: int, b: int, B: int, params: Params) -> Real:
    """Squared length of the other diagonal, kept for comparison."""
    if params.m == 0:
        return _dist_sq(vertex_uv(a, b, params), vertex_uv(A + 1, B + 1, params))
    return _dist_sq(vertex_uv(a, B + 1, params), vertex_uv(A + 1, b, params))


def lemma_bounds(a: int, A: int, b: int, B: int, params: Params) -> tuple[Real, Optional[Real]]:
    """(diam^2 of the union cell, diam^2 of the peeled cell or None).

    The peeled value exists only when max(A-a, B-b) > 1.  Raises
    UnboundedRegionError when the union would contain the unbounded
    m=1, k=1 cell (a = b = 0).
    """
    if not (0 <= a <= A and 0 <= b <= B):
        raise DomainError("need 0 <= a <= A and 0 <= b <= B")
    m, k = params.m, params.k
    if m == 1 and k == 1 and a == 0 and b == 0:
        raise UnboundedRegionError("union contains the unbounded (0,0) cell")
    upper_sq = acute_diagonal_sq(a, A, b, B, params)
    lower_sq = None
    if max(A - a, B - b) > 1:
        if m == 0:
            lower_sq = _dist_sq(vertex_uv(a + 1, B, params), vertex_uv(A, b + 1, params))
        else:
            lower_sq = _dist_sq(vertex_uv(a + 1, b + 1, params), vertex_uv(A, B, params))
    return upper_sq, lower_sq


def theorem_bounds(l: int, L: int, params: Params) -> BoundsReport:
    """Window bounds on the sum of two consecutive squared differences.

    upper = 2((L-l+1)/((1-2m)k + (l+k)(L+k+1)))^2, with the classical
    exception (m=1, k=1, l=0) reported instead of an upper value;
    lower = 2((L-l)/((1-2m)k + (l+k+1)(L+k)))^2, present iff L-l > 1.
    """
    if not 0 <= l <= L:
        raise DomainError("need 0 <= l <= L")
    m, k = params.m, params.k
    exception = (m == 1 and k == 1 and l == 0)
    upper = None
    if not exception:
        upper = 2 * ((L - l + 1) / ((1 - 2 * m) * k + (l + k) * (L + k + 1))) ** 2
    lower = None
    if L - l > 1:
        lower = 2 * ((L - l) / ((1 - 2 * m) * k + (l + k + 1) * (L + k))) ** 2
    return BoundsReport(l, L, upper, lower, exception, form="sum_sq")


def corollary_bounds(l: int, L: int, params: Params) -> BoundsReport:
    """Window bounds on max/min of the two consecutive absolute differences.

    sqrt(2)-scaled versions of theorem_bounds, same classical exception.
    """
    if not 0 <= l <= L:
        raise DomainError("need 0 <= l <= L")
    m, k = params.m, params.k
    exception = (m == 1 and k == 1 and l == 0)
    with mp.workprec(params.precision_bits):
        root2 = mp_sqrt(mpf(2))
        upper = None
        if not exception:
            upper = root2 * (L - l + 1) / ((1 - 2 * m) * k + (l + k) * (L + k + 1))
        lower = None
        if L - l > 1:
            lower = root2 * (L - l) / ((1 - 2 * m) * k + (l + k + 1) * (L + k))
    return BoundsReport(l, L, upper, lower, exception, form="max_abs")


def region_mesh(params: Params, a_max: int, b_max: int) -> list[SubdivisionRegion]:
    """All cells with a <= a_max and b <= b_max, in lexicographic order."""
    if a_max < 0 or b_max < 0:
        raise DomainError("a_max and b_max must be >= 0")
    return [subdivision(a, b, params)
            for a in range(a_max + 1) for b in range(b_max + 1)]
