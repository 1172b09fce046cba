import math

import numpy as np
import pytest

from biharmlab import (GridFunction, PhiFamily, Region, build_box_grid,
                       build_radial_grid, dilate, euclidean_distance, lp_norm,
                       make_phi, probe_functions, sphere_area)
from biharmlab.grids import (GridError, TANH_HESS_MAX, ball_volume,
                             boundary_taper, weighted_lp)


class TestRadialGrid:
    def test_nodes_staggered_off_singularity(self):
        g = build_radial_grid(5, 10.0, 64, "uniform")
        assert np.all(g.r > 0)
        assert np.all(np.diff(g.r) > 0)
        assert np.all(g.w > 0)

    def test_uniform_weights_sum_to_ball_volume(self):
        for n in (16, 64, 256):
            g = build_radial_grid(5, 10.0, n, "uniform")
            vol = ball_volume(5, 10.0)
            assert abs(g.w.sum() - vol) / vol < 0.01

    def test_log_mode_spans_six_decades(self):
        g = build_radial_grid(5, 1000.0, 200, "log")
        assert g.faces[0] == pytest.approx(1000.0 * 1e-6)
        assert g.faces[-1] == pytest.approx(1000.0)
        ratios = g.faces[1:] / g.faces[:-1]
        assert np.allclose(ratios, ratios[0], rtol=1e-10)

    def test_rejects_small_dimension(self):
        with pytest.raises(GridError):
            build_radial_grid(4, 10.0, 64)

    def test_rejects_tiny_grid(self):
        with pytest.raises(GridError):
            build_radial_grid(5, 10.0, 8)

    def test_content_hash_stable_and_discriminating(self):
        a = build_radial_grid(5, 10.0, 64)
        b = build_radial_grid(5, 10.0, 64)
        c = build_radial_grid(5, 10.0, 128)
        assert a.content_hash() == b.content_hash()
        assert a.content_hash() != c.content_hash()


class TestBoxGrid:
    def test_nodes_avoid_origin(self):
        g = build_box_grid(5, 4, 2.0)
        assert math.sqrt(g.radii_sq().min()) >= g.h / 2 - 1e-12

    def test_rejects_odd_subdivision(self):
        with pytest.raises(GridError):
            build_box_grid(5, 5, 2.0)

    def test_cell_measure(self):
        g = build_box_grid(5, 4, 2.0)
        assert g.w[0] * g.size == pytest.approx(4.0**5)


class TestGridFunction:
    def test_length_mismatch_rejected(self, grid128):
        with pytest.raises(GridError):
            GridFunction(grid128, np.ones(7))

    def test_csv_round_trip_header(self, grid128):
        u = GridFunction(grid128, np.linspace(0, 1, grid128.n))
        text = u.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "index,r,re,im"
        assert len(lines) == grid128.n + 1


class TestNorms:
    def test_gaussian_l2_norm(self):
        # int exp(-2r^2) over R^5 equals (pi/2)^(5/2)
        g = build_radial_grid(5, 20.0, 512, "uniform")
        u = GridFunction(g, np.exp(-g.r**2))
        exact = (math.pi / 2.0) ** 2.5
        assert lp_norm(u, 2.0) ** 2 == pytest.approx(exact, rel=0.01)

    def test_sup_norm(self, grid128):
        u = GridFunction(grid128, np.sin(grid128.r))
        assert lp_norm(u, math.inf) == np.abs(u.values).max()

    def test_p_below_one_rejected(self, grid128):
        u = GridFunction(grid128, np.ones(grid128.n))
        with pytest.raises(GridError):
            lp_norm(u, 0.5)

    def test_weighted_lp_matches(self, grid128):
        v = np.linspace(0.0, 1.0, grid128.n)
        u = GridFunction(grid128, v)
        assert weighted_lp(v, grid128.w, 3.0) == pytest.approx(lp_norm(u, 3.0))


class TestDilate:
    def test_identity_at_s_one(self, grid128):
        u = GridFunction(grid128, np.exp(-grid128.r**2))
        v = dilate(u, 1.0)
        assert np.array_equal(u.values, v.values)

    def test_samples_scaled_profile(self):
        g = build_radial_grid(5, 20.0, 1024, "uniform")
        u = GridFunction(g, np.exp(-g.r**2))
        v = dilate(u, 0.5)
        assert np.allclose(v.values, np.exp(-(0.5 * g.r) ** 2), atol=1e-4)

    def test_rejects_expanding(self, grid128):
        u = GridFunction(grid128, np.ones(grid128.n))
        with pytest.raises(GridError):
            dilate(u, 2.0)


class TestRegion:
    def test_indicator_binary(self, grid128):
        ind = Region.annulus(2.0, 8.0).indicator(grid128)
        assert set(np.unique(ind)) <= {0.0, 1.0}

    def test_ball_distance(self):
        E = Region.ball(np.zeros(5), 1.0)
        F = Region.ball(np.array([4.0, 0, 0, 0, 0]), 1.0)
        assert euclidean_distance(E, F) == pytest.approx(2.0)

    def test_annulus_distance(self):
        E = Region.annulus(0.0, 1.0)
        F = Region.annulus(3.0, math.inf)
        assert euclidean_distance(E, F) == pytest.approx(2.0)

    def test_convex_flags(self):
        assert Region.ball(np.zeros(5), 1.0).convex
        assert Region.annulus(0.0, 1.0).convex
        assert not Region.annulus(1.0, 2.0).convex


class TestPhiFamily:
    def test_certification_100_random(self, grid128):
        rng = np.random.default_rng(1)
        for _ in range(100):
            e = rng.standard_normal(5)
            e /= np.linalg.norm(e)
            s = float(rng.uniform(TANH_HESS_MAX, 10.0))
            b = float(rng.uniform(-3.0, 3.0))
            phi = make_phi(e, s, b)
            rep = phi.certify(grid128)
            assert rep["ok"]
            assert rep["grad_bound"] <= 1.0
            assert rep["hess_bound"] <= 1.0 + 1e-12
            assert rep["sup_observed"] <= s + 1e-12

    def test_rejects_steepness_below_class_bound(self):
        with pytest.raises(GridError):
            PhiFamily(kind="linear", e=np.array([1.0, 0, 0, 0, 0]), s=0.5,
                      b=0.0)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(GridError):
            make_phi(np.array([2.0, 0, 0, 0, 0]), 2.0)

    def test_radial_kind_certified_on_grid(self, grid128):
        phi = make_phi(np.zeros(5), 2.0, b=-8.0, kind="radial", grid=grid128)
        rep = phi.certify(grid128)
        assert rep["ok"]

    def test_radial_kind_raises_near_origin(self, grid128):
        # r0 far inside with minimal steepness puts the 1/r Hessian term
        # above 1 at the first node
        with pytest.raises(GridError):
            make_phi(np.zeros(5), TANH_HESS_MAX, b=-0.05, kind="radial",
                     grid=grid128)

    def test_gradient_laplacian_match_finite_differences(self):
        g = build_box_grid(5, 4, 2.0)
        phi = make_phi(np.array([1.0, 0, 0, 0, 0]) , 2.0, 0.3)
        X = g.coords()
        h = 1e-5
        vals = phi.values(g)
        grad = phi.gradient(g)
        fd = (2.0 * np.tanh((X @ phi.e + phi.b + h) / phi.s)
              - 2.0 * np.tanh((X @ phi.e + phi.b - h) / phi.s)) * phi.s / 2.0
        # directional derivative along e
        num = (fd / (2 * h))
        assert np.allclose(grad @ phi.e, num, atol=1e-6)
        assert np.max(np.abs(vals)) <= phi.s


class TestProbes:
    def test_deterministic(self, grid128):
        a = probe_functions(grid128, 6, seed=3)
        b = probe_functions(grid128, 6, seed=3)
        for ua, ub in zip(a, b):
            assert np.array_equal(ua.values, ub.values)

    def test_first_probe_is_unit_gaussian(self, grid128):
        u = probe_functions(grid128, 1)[0]
        interior = grid128.r <= 0.8 * grid128.R
        assert np.allclose(u.values[interior],
                           np.exp(-grid128.r[interior] ** 2))

    def test_vanish_at_outer_boundary(self, grid128):
        for u in probe_functions(grid128, 5, seed=2):
            assert abs(u.values[-1]) < 1e-3

    def test_taper_profile(self):
        rr = np.array([0.0, 7.9, 8.0, 9.0, 10.0])
        t = boundary_taper(rr, 10.0)
        assert t[0] == 1.0 and t[1] == 1.0
        assert t[-1] == pytest.approx(0.0, abs=1e-30)
        assert np.all(np.diff(t) <= 0)
