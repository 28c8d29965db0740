from fractions import Fraction
from itertools import combinations

import pytest
from mpmath import mp, mpf, sqrt as mp_sqrt

from mkcf import (
    DomainError,
    JagerPoint,
    Params,
    UnboundedRegionError,
    VertexAtInfinityError,
    acute_diagonal_sq,
    contains,
    corollary_bounds,
    cylinder_interval,
    expand,
    f_line,
    lemma_bounds,
    p_line,
    parse_real,
    psi,
    region_mesh,
    step_map,
    subdivision,
    theorem_bounds,
    vertex_uv,
)
from conftest import K_GRID_OPEN, make_params

TOL = mpf(2) ** -128


def frac_params(m, k):
    return Params(m=m, k=Fraction(k))


# ---------------------------------------------------------------------------
# psi

def test_psi_exact_example():
    p = frac_params(0, 1)
    pt = psi(Fraction(1, 2), Fraction(-3, 2), p)
    assert (pt.u, pt.v) == (Fraction(1, 2), Fraction(3, 8))


def test_psi_u_is_perron(params_m0):
    from mkcf import theta_perron
    x, y = mpf("0.42"), mpf("-2.71")
    pt = psi(x, y, params_m0)
    assert pt.u == theta_perron(x, y)


def test_psi_matches_orbit_thetas():
    # psi of (future, past) reproduces the consecutive coefficient pair
    from mkcf import theta_perron
    for m, k in [(0, "1"), (1, "sqrt(2)")]:
        params = make_params(m, k)
        orbit = expand(parse_real("0.57721566490153286060651209008240243", 256),
                       params, depth=16)
        with mp.workprec(256):
            for n in range(1, orbit.usable_depth() - 1):
                pt = psi(orbit.futures[n], orbit.pasts[n], params)
                assert pt.u == theta_perron(orbit.futures[n], orbit.pasts[n])
                nxt = psi(orbit.futures[n + 1], orbit.pasts[n + 1], params)
                # v-coordinate is the next coefficient
                assert abs(pt.v - nxt.u) < mpf(2) ** -200


def test_psi_domain(params_m0):
    with pytest.raises(DomainError):
        psi(mpf("1.5"), mpf(-2), params_m0)
    with pytest.raises(DomainError):
        psi(mpf("0.5"), mpf("-0.5"), params_m0)  # y above m-k = -1


# ---------------------------------------------------------------------------
# cylinders

def test_cylinder_intervals_classical():
    p0, p1 = frac_params(0, 1), frac_params(1, 1)
    assert cylinder_interval(0, p0) == (Fraction(1, 2), Fraction(1))
    assert cylinder_interval(0, p1) == (Fraction(0), Fraction(1, 2))
    # classical digit-a cylinder (1/(a+2), 1/(a+1)) for m=0
    for a in range(5):
        assert cylinder_interval(a, p0) == (Fraction(1, a + 2), Fraction(1, a + 1))


def test_cylinders_tile():
    for m in (0, 1):
        p = frac_params(m, Fraction(7, 5))
        for a in range(20):
            lo_a, hi_a = cylinder_interval(a, p)
            assert lo_a < hi_a
            lo_b, hi_b = cylinder_interval(a + 1, p)
            if m == 0:
                assert lo_a == hi_b  # m=0 intervals descend
            else:
                assert hi_a == lo_b


def test_cylinder_agrees_with_step_map():
    for m, k in [(0, "1"), (1, "1"), (0, "2"), (1, "1.1")]:
        params = make_params(m, k)
        for a in (0, 1, 4):
            lo, hi = cylinder_interval(a, params)
            mid = (lo + hi) / 2
            digit, _ = step_map(mid, params)
            assert digit == a


# ---------------------------------------------------------------------------
# vertices and lines

def test_vertex_examples():
    p = frac_params(0, 1)
    assert (vertex_uv(0, 0, p).u, vertex_uv(0, 0, p).v) == (Fraction(1, 2), Fraction(1, 2))
    assert (vertex_uv(1, 0, p).u, vertex_uv(1, 0, p).v) == (Fraction(1, 3), Fraction(2, 3))
    assert (vertex_uv(0, 1, p).u, vertex_uv(0, 1, p).v) == (Fraction(2, 3), Fraction(1, 3))
    assert (vertex_uv(1, 1, p).u, vertex_uv(1, 1, p).v) == (Fraction(2, 5), Fraction(2, 5))


def test_vertex_swap_symmetry():
    for m in (0, 1):
        p = frac_params(m, Fraction(8, 5))
        for a, b in [(0, 1), (2, 5), (3, 3)]:
            ab, ba = vertex_uv(a, b, p), vertex_uv(b, a, p)
            assert (ab.u, ab.v) == (ba.v, ba.u)


def test_vertex_at_infinity():
    with pytest.raises(VertexAtInfinityError):
        vertex_uv(0, 0, frac_params(1, 1))
    # fine for k > 1
    v = vertex_uv(0, 0, frac_params(1, 2))
    assert v.u == v.v == Fraction(2, 2 * 2 - 2)


def test_p_line_classical_hypotenuse():
    p = frac_params(0, 1)
    line, (e1, e2) = p_line(0, p)
    assert (line.alpha, line.beta, line.gamma) == (1, 1, 1)
    assert (e1.u, e1.v) == (Fraction(1), Fraction(0))
    assert (e2.u, e2.v) == (Fraction(1, 2), Fraction(1, 2))


def test_p_line_backward_example():
    line, _ = p_line(1, frac_params(1, 1))
    # 4u - v = 2
    assert (line.alpha, line.beta, line.gamma) == (4, -1, 2)


def test_f_line_backward_example():
    line, _ = f_line(1, frac_params(1, 1))
    # 4v - u = 2
    assert (line.alpha, line.beta, line.gamma) == (-1, 4, 2)


def test_f_line_is_reflection():
    for m in (0, 1):
        p = frac_params(m, Fraction(3, 2))
        for c in (0, 2, 7):
            pl, pe = p_line(c, p)
            fl, fe = f_line(c, p)
            assert (fl.alpha, fl.beta, fl.gamma) == (pl.beta, pl.alpha, pl.gamma)
            assert (fe[0].u, fe[0].v) == (pe[0].v, pe[0].u)


def test_p_line_ray_flag():
    line, (e1, e2) = p_line(0, frac_params(1, 1))
    assert e1 is None and e2 is not None


def test_endpoints_lie_on_line():
    for m in (0, 1):
        for k in (Fraction(1), Fraction(3, 2), Fraction(2)):
            p = Params(m=m, k=k)
            for c in range(6):
                line, ends = p_line(c, p)
                for e in ends:
                    if e is not None:
                        assert line.eval(e.u, e.v) == 0


def test_slope_ranges():
    # m=0: past-line slopes < -1, future-line slopes in (-1, 0);
    # m=1: past-line slopes > 1, future-line slopes in (0, 1).
    for k_str in K_GRID_OPEN:
        for m in (0, 1):
            params = make_params(m, k_str)
            k = params.k
            for c in range(0, 101):
                pl, _ = p_line(c, params)
                fl_, _ = f_line(c, params)
                p_slope = -pl.alpha / pl.beta
                f_slope = -fl_.alpha / fl_.beta
                if m == 0:
                    assert p_slope < -1
                    assert -1 < f_slope < 0
                else:
                    assert p_slope > 1
                    assert 0 < f_slope < 1


def test_slope_ranges_k1_positive_digits():
    # at k=1 the strict ranges hold from digit 1 up
    for m in (0, 1):
        params = frac_params(m, 1)
        for c in range(1, 101):
            pl, _ = p_line(c, params)
            s = Fraction(-pl.alpha, pl.beta)
            assert s < -1 if m == 0 else s > 1


# ---------------------------------------------------------------------------
# subdivisions

def test_degenerate_triangle_exact():
    reg = subdivision(0, 0, frac_params(0, 1))
    assert reg.degenerate and not reg.unbounded
    vs = [(v.u, v.v) for v in reg.vertices]
    assert (Fraction(1, 3), Fraction(2, 3)) in vs
    assert (Fraction(2, 3), Fraction(1, 3)) in vs
    assert (Fraction(2, 5), Fraction(2, 5)) in vs
    # the fourth corner sits on the segment joining the first two
    assert (Fraction(1, 2), Fraction(1, 2)) in vs
    a, b = (Fraction(1, 3), Fraction(2, 3)), (Fraction(2, 3), Fraction(1, 3))
    mid = (Fraction(1, 2), Fraction(1, 2))
    cross = (b[0] - a[0]) * (mid[1] - a[1]) - (b[1] - a[1]) * (mid[0] - a[0])
    assert cross == 0


def test_unbounded_cell_halfplanes():
    reg = subdivision(0, 0, frac_params(1, 1))
    assert reg.unbounded and not reg.degenerate
    assert len(reg.vertices) == 3
    # the four half-planes pin down |u-v| < 1, 4u-v > 2, 4v-u > 2
    inside = [(3, 3), (Fraction(12, 10), Fraction(12, 10))]
    outside = [(3, 1), (1, 3), (Fraction(1, 2), Fraction(1, 2)), (5, Fraction(39, 10))]
    for u, v in inside:
        assert contains(reg, JagerPoint(u, v), TOL) == "inside"
    for u, v in outside:
        assert contains(reg, JagerPoint(u, v), TOL) == "outside"


def test_only_classical_cells_are_special():
    for k_str in K_GRID_OPEN:
        for m in (0, 1):
            params = make_params(m, k_str)
            for a in range(3):
                for b in range(3):
                    reg = subdivision(a, b, params)
                    assert not reg.degenerate and not reg.unbounded
                    assert len(reg.vertices) == 4
    for (a, b) in [(0, 1), (1, 0), (1, 1), (2, 0)]:
        assert not subdivision(a, b, frac_params(0, 1)).degenerate
        assert not subdivision(a, b, frac_params(1, 1)).unbounded


def test_vertices_on_incident_lines_exact():
    for m in (0, 1):
        p = Params(m=m, k=Fraction(7, 4))
        for (a, b) in [(0, 0), (2, 1), (4, 5)]:
            reg = subdivision(a, b, p)
            for v in reg.vertices:
                incident = sum(1 for hp in reg.halfplanes if hp.eval(v.u, v.v) == 0)
                assert incident == 2


def test_contains_classification():
    params = make_params(0, "2")
    reg = subdivision(1, 0, params)
    cu = sum(v.u for v in reg.vertices) / 4
    cv = sum(v.v for v in reg.vertices) / 4
    assert contains(reg, JagerPoint(cu, cv), TOL) == "inside"
    assert contains(reg, reg.vertices[0], TOL) == "boundary"
    far = vertex_uv(3, 0, params)
    assert contains(reg, far, TOL) == "outside"


def test_mirror_symmetry_of_cells():
    for k_str in ["1", "sqrt(2)"]:
        params0 = make_params(0, k_str)
        for (a, b) in [(0, 1), (2, 3)]:
            ab = subdivision(a, b, params0)
            ba = subdivision(b, a, params0)
            got = sorted(((v.u, v.v) for v in ab.vertices), key=str)
            mirrored = sorted(((v.v, v.u) for v in ba.vertices), key=str)
            for (u1, v1), (u2, v2) in zip(got, mirrored):
                assert abs(u1 - u2) < TOL and abs(v1 - v2) < TOL


# ---------------------------------------------------------------------------
# bounds

def test_lemma_degenerate_triangle_diameter():
    up, lo = lemma_bounds(0, 0, 0, 0, frac_params(0, 1))
    assert up == Fraction(2, 9)
    assert lo is None


def test_lemma_square_symmetry():
    for m in (0, 1):
        p = Params(m=m, k=Fraction(3, 2))
        for (a, A, b, B) in [(0, 1, 2, 3), (1, 4, 0, 2)]:
            u1, _ = lemma_bounds(a, A, b, B, p)
            u2, _ = lemma_bounds(b, B, a, A, p)
            assert u1 == u2


def brute_force_diam_sq(a, A, b, B, params):
    pts = []
    for i in range(a, A + 2):
        for j in range(b, B + 2):
            v = vertex_uv(i, j, params)
            pts.append((v.u, v.v))
    best = None
    for (u1, v1), (u2, v2) in combinations(pts, 2):
        d = (u1 - u2) ** 2 + (v1 - v2) ** 2
        best = d if best is None or d > best else best
    return best


def test_lemma_upper_matches_brute_force():
    # includes the spec's k=2, m=0, (0,2,1,3) case plus a sweep
    for m in (0, 1):
        for k in (Fraction(2), Fraction(3, 2)):
            p = Params(m=m, k=k)
            for (a, A, b, B) in [(0, 2, 1, 3), (0, 0, 0, 0), (1, 3, 0, 0), (0, 4, 2, 2)]:
                up, _ = lemma_bounds(a, A, b, B, p)
                assert up == brute_force_diam_sq(a, A, b, B, p)


def test_lemma_peeled_nesting():
    # every peeled-cell vertex lies inside or on the outer cell hull
    for m in (0, 1):
        p = Params(m=m, k=Fraction(2))
        a, A, b, B = 0, 3, 1, 4
        up, lo = lemma_bounds(a, A, b, B, p)
        assert lo is not None and lo < up
        inner = [vertex_uv(i, j, p)
                 for i in (a + 1, A) for j in (b + 1, B)]
        # hull of the outer region: between the four bounding lines
        outer_lines = [p_line(a, p)[0], p_line(A + 1, p)[0],
                       f_line(b, p)[0], f_line(B + 1, p)[0]]
        sample = vertex_uv(a + 1, b + 1, p)
        for line in outer_lines:
            side = line.eval(sample.u, sample.v)
            for v in inner:
                val = line.eval(v.u, v.v)
                assert val == 0 or (val > 0) == (side > 0)


def test_lemma_unbounded_error():
    with pytest.raises(UnboundedRegionError):
        lemma_bounds(0, 1, 0, 2, frac_params(1, 1))


def test_acute_diagonal_is_max_diagonal():
    for m in (0, 1):
        p = Params(m=m, k=Fraction(2))
        for (a, A, b, B) in [(0, 0, 0, 0), (0, 1, 0, 2), (2, 3, 1, 1)]:
            assert acute_diagonal_sq(a, A, b, B, p) >= brute_force_diam_sq(a, A, b, B, p)


def test_theorem_bounds_examples():
    p = frac_params(0, 1)
    rep = theorem_bounds(0, 2, p)
    assert rep.upper == Fraction(18, 25)
    assert rep.lower == Fraction(8, 49)
    assert not rep.classical_exception
    rep = theorem_bounds(1, 1, p)
    assert rep.upper == Fraction(2, 49)  # 2/((1-2m)k + (l+k)(l+k+1))^2
    assert rep.lower is None


def test_theorem_upper_monotone_in_l():
    params = make_params(0, "2")
    gap = 2
    uppers = [theorem_bounds(l, l + gap, params).upper for l in range(6)]
    assert all(uppers[i] > uppers[i + 1] for i in range(5))


def test_corollary_bounds_examples(params_m0):
    with mp.workprec(256):
        rep = corollary_bounds(0, 0, params_m0)
        assert abs(rep.upper - mp_sqrt(mpf(2)) / 3) < TOL
        assert rep.lower is None
        rep = corollary_bounds(0, 2, params_m0)
        assert abs(rep.upper - 3 * mp_sqrt(mpf(2)) / 5) < TOL
        assert abs(rep.lower - 2 * mp_sqrt(mpf(2)) / 7) < TOL


def test_classical_exception_flag():
    p = frac_params(1, 1)
    rep = theorem_bounds(0, 0, p)
    assert rep.classical_exception and rep.upper is None
    rep = corollary_bounds(0, 0, p)
    assert rep.classical_exception and rep.upper is None
    # gone for l >= 1 or k > 1
    assert not theorem_bounds(1, 2, p).classical_exception
    assert not theorem_bounds(0, 2, frac_params(1, 2)).classical_exception


# ---------------------------------------------------------------------------
# meshes

def test_region_mesh_counts():
    params = make_params(0, "1.5")
    mesh = region_mesh(params, 6, 6)
    assert len(mesh) == 49
    assert [(r.a, r.b) for r in mesh[:3]] == [(0, 0), (0, 1), (0, 2)]


def test_mesh_neighbors_share_boundary_line():
    # the separating line appears in both neighbors with opposite orientation
    params = make_params(1, "sqrt(2)")
    left = subdivision(0, 0, params)
    right = subdivision(0, 1, params)
    flipped_pairs = sum(
        1
        for hl in left.halfplanes
        for hr in right.halfplanes
        if (hl.alpha, hl.beta, hl.gamma) == (-hr.alpha, -hr.beta, -hr.gamma)
    )
    assert flipped_pairs == 1


def test_mesh_disjoint_interiors():
    params = make_params(0, "1.5")
    mesh = region_mesh(params, 4, 4)
    probes = [JagerPoint(mpf("0.31") + mpf("0.037") * i, mpf("0.22") + mpf("0.029") * j)
              for i in range(5) for j in range(5)]
    for pt in probes:
        hits = sum(1 for reg in mesh if contains(reg, pt, TOL) == "inside")
        assert hits <= 1


def shoelace_area(vertices):
    total = 0
    n = len(vertices)
    for i in range(n):
        u1, v1 = vertices[i].u, vertices[i].v
        u2, v2 = vertices[(i + 1) % n].u, vertices[(i + 1) % n].v
        total += u1 * v2 - u2 * v1
    return abs(total) / 2


def test_classical_mesh_fills_triangle():
    params = frac_params(0, 1)
    mesh = region_mesh(params, 40, 40)
    area = sum(shoelace_area(reg.vertices) for reg in mesh)
    assert area > Fraction(49, 100)
    assert area < Fraction(1, 2)
    # every cell stays inside the open coordinate triangle u+v < 1
    for reg in mesh[:50]:
        for v in reg.vertices:
            assert v.u > 0 and v.v > 0 and v.u + v.v <= 1
