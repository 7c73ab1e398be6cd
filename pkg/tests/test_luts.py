"""LUT core: fusion, trilinear lookup, analytic builders, gradients."""

import numpy as np
import pytest

from tonelut import (
    BasisLutBank,
    DimensionError,
    InvalidCoordinatesError,
    Lut3D,
    SamplingCoordinates,
    fuse,
    lookup,
    lookup_grad,
    make_contrast_scurve,
    make_gamma,
    make_identity,
    make_saturation,
)
from conftest import random_coords


def scalar_lookup(lut, coords, pixel):
    """Independent scalar reference interpolator (no vectorization)."""
    idx = []
    t = []
    for c in range(3):
        xs = coords.x[c]
        v = pixel[c]
        i = 0
        while i < len(xs) - 2 and v >= xs[i + 1]:
            i += 1
        idx.append(i)
        t.append((v - xs[i]) / (xs[i + 1] - xs[i]))
    i, j, k = idx
    tr, tg, tb = t
    out = np.zeros(3)
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = (tr if di else 1 - tr) * (tg if dj else 1 - tg) * (tb if dk else 1 - tb)
                out += w * lut.values[i + di, j + dj, k + dk]
    return np.clip(out, 0.0, 1.0)


def random_lut(rng, n, lo=0.0, hi=1.0):
    return Lut3D(n, rng.uniform(lo, hi, size=(n, n, n, 3)))


class TestFuse:
    def test_identity_weight_copies_basis(self, rng):
        bank = BasisLutBank((random_lut(rng, 4), random_lut(rng, 4), random_lut(rng, 4)))
        fused = fuse(bank, [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(fused.values, bank.luts[0].values)

    def test_zero_weights_zero_lut(self, rng):
        bank = BasisLutBank((random_lut(rng, 3), random_lut(rng, 3)))
        fused = fuse(bank, [0.0, 0.0])
        assert np.all(fused.values == 0.0)

    def test_half_identity_half_constant(self):
        n = 5
        const = Lut3D(n, np.full((n, n, n, 3), 0.5))
        bank = BasisLutBank((make_identity(n), const))
        fused = fuse(bank, [0.5, 0.5])
        u = np.linspace(0, 1, n)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    expected = [(u[i] + 0.5) / 2, (u[j] + 0.5) / 2, (u[k] + 0.5) / 2]
                    np.testing.assert_allclose(fused.values[i, j, k], expected, atol=1e-15)

    def test_matches_per_entry_sum_oracle(self, rng):
        bank = BasisLutBank(tuple(random_lut(rng, 4) for _ in range(3)))
        w = rng.normal(size=3)
        fused = fuse(bank, w)
        oracle = sum(w[l] * bank.luts[l].values for l in range(3))
        np.testing.assert_allclose(fused.values, oracle, atol=1e-12)

    def test_weight_length_mismatch(self, rng):
        bank = BasisLutBank((random_lut(rng, 3),))
        with pytest.raises(DimensionError):
            fuse(bank, [1.0, 2.0])


class TestLookup:
    def test_identity_lut_is_identity_on_images(self, rng):
        n = 7
        lut = make_identity(n)
        coords = SamplingCoordinates.uniform(n)
        img = rng.uniform(0, 1, size=(9, 5, 3))
        np.testing.assert_allclose(lookup(lut, coords, img), img, atol=1e-6)

    def test_n2_linear_ramp(self):
        lut = make_identity(2)
        coords = SamplingCoordinates.uniform(2)
        img = np.array([[[0.25, 0.5, 0.75]]])
        np.testing.assert_allclose(lookup(lut, coords, img), img, atol=1e-12)

    def test_matches_scalar_oracle_nonuniform(self, rng):
        n = 5
        lut = random_lut(rng, n)
        coords = random_coords(rng, n)
        img = rng.uniform(0, 1, size=(10, 10, 3))
        out = lookup(lut, coords, img)
        flat = img.reshape(-1, 3)
        expect = np.array([scalar_lookup(lut, coords, p) for p in flat]).reshape(img.shape)
        np.testing.assert_allclose(out, expect, atol=1e-9)

    def test_knot_hits_and_domain_endpoints(self, rng):
        n = 4
        lut = random_lut(rng, n)
        coords = random_coords(rng, n)
        # pixels exactly on knots, including 0 and 1
        pix = np.stack([coords.x[0], coords.x[1], coords.x[2]], axis=1)
        img = pix.reshape(1, -1, 3)
        out = lookup(lut, coords, img).reshape(-1, 3)
        for i in range(n):
            np.testing.assert_allclose(
                out[i], np.clip(lut.values[i, i, i], 0, 1), atol=1e-12
            )

    def test_linear_in_lut_values_through_fuse(self, rng):
        n = 4
        bank = BasisLutBank(tuple(random_lut(rng, n, -0.2, 1.2) for _ in range(3)))
        w = rng.normal(size=3)
        coords = random_coords(rng, n)
        img = rng.uniform(0, 1, size=(6, 6, 3))
        via_fuse = lookup(fuse(bank, w), coords, img, clamp=False)
        per_basis = sum(
            w[l] * lookup(bank.luts[l], coords, img, clamp=False) for l in range(3)
        )
        np.testing.assert_allclose(via_fuse, per_basis, atol=1e-9)

    def test_pixel_order_invariance(self, rng):
        n = 5
        lut = random_lut(rng, n)
        coords = random_coords(rng, n)
        img = rng.uniform(0, 1, size=(8, 8, 3))
        out = lookup(lut, coords, img)
        perm = rng.permutation(64)
        flat = img.reshape(-1, 3)[perm].reshape(8, 8, 3)
        out_perm = lookup(lut, coords, flat)
        np.testing.assert_array_equal(out.reshape(-1, 3)[perm], out_perm.reshape(-1, 3))

    def test_size_mismatch_rejected(self, rng):
        with pytest.raises(DimensionError):
            lookup(make_identity(4), SamplingCoordinates.uniform(5), rng.uniform(0, 1, (2, 2, 3)))

    def test_non_monotone_coords_rejected(self):
        x = np.tile(np.array([0.0, 0.6, 0.4, 1.0]), (3, 1))
        with pytest.raises(InvalidCoordinatesError):
            SamplingCoordinates(x)

    def test_bad_endpoints_rejected(self):
        x = np.tile(np.linspace(0.1, 1.0, 5), (3, 1))
        with pytest.raises(InvalidCoordinatesError):
            SamplingCoordinates(x)


class TestLookupGrad:
    def test_zero_upstream_zero_grads(self, rng):
        n = 4
        lut = random_lut(rng, n)
        coords = random_coords(rng, n)
        img = rng.uniform(0.1, 0.9, size=(3, 3, 3))
        d_lut, d_coords, d_img = lookup_grad(lut, coords, img, np.zeros_like(img))
        assert np.all(d_lut == 0) and np.all(d_coords == 0) and np.all(d_img == 0)

    def test_corner_grad_equals_trilinear_weight(self):
        lut = Lut3D(2, np.full((2, 2, 2, 3), 0.5))
        coords = SamplingCoordinates.uniform(2)
        pix = np.array([[[0.3, 0.6, 0.2]]])
        up = np.zeros_like(pix)
        up[0, 0, 0] = 1.0  # red output only
        d_lut, _, _ = lookup_grad(lut, coords, pix, up)
        tr, tg, tb = 0.3, 0.6, 0.2
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    w = (tr if di else 1 - tr) * (tg if dj else 1 - tg) * (tb if dk else 1 - tb)
                    assert d_lut[di, dj, dk, 0] == pytest.approx(w, abs=1e-12)
                    assert d_lut[di, dj, dk, 1] == 0.0

    @pytest.mark.parametrize("trial", range(5))
    def test_finite_difference_all_inputs(self, trial):
        rng = np.random.default_rng(100 + trial)
        n = 4
        lut = random_lut(rng, n, 0.1, 0.9)  # keep outputs away from the clamp
        coords = random_coords(rng, n)
        img = rng.uniform(0.05, 0.95, size=(3, 3, 3))
        # keep pixels away from knots so FD stays inside one cell
        for c in range(3):
            d = np.abs(img[..., c][..., None] - coords.x[c]).min(-1)
            img[..., c][d < 1e-3] += 2e-3
        img = np.clip(img, 0, 0.999)
        up = rng.normal(size=img.shape)
        d_lut, d_coords, d_img = lookup_grad(lut, coords, img, up)

        def f(lut_v=None, coords_x=None, image=None):
            l2 = Lut3D(n, lut.values if lut_v is None else lut_v)
            c2 = SamplingCoordinates(coords.x if coords_x is None else coords_x)
            i2 = img if image is None else image
            return float(np.sum(lookup(l2, c2, i2) * up))

        h = 1e-6
        for _ in range(10):
            ix = tuple(rng.integers(0, s) for s in lut.values.shape)
            v1, v2 = lut.values.copy(), lut.values.copy()
            v1[ix] += h
            v2[ix] -= h
            fd = (f(lut_v=v1) - f(lut_v=v2)) / (2 * h)
            assert fd == pytest.approx(d_lut[ix], rel=1e-4, abs=1e-7)
        for _ in range(6):
            c = int(rng.integers(0, 3))
            i = int(rng.integers(1, n - 1))  # interior knots only
            x1, x2 = coords.x.copy(), coords.x.copy()
            x1[c, i] += h
            x2[c, i] -= h
            fd = (f(coords_x=x1) - f(coords_x=x2)) / (2 * h)
            assert fd == pytest.approx(d_coords[c, i], rel=1e-4, abs=1e-6)
        for _ in range(6):
            ix = tuple(rng.integers(0, s) for s in img.shape)
            i1, i2 = img.copy(), img.copy()
            i1[ix] += h
            i2[ix] -= h
            fd = (f(image=i1) - f(image=i2)) / (2 * h)
            assert fd == pytest.approx(d_img[ix], rel=1e-4, abs=1e-6)

    def test_clamped_pixels_get_zero_gradient(self):
        n = 2
        lut = Lut3D(n, np.full((n, n, n, 3), 1.7))  # always clamps to 1
        coords = SamplingCoordinates.uniform(n)
        img = np.full((2, 2, 3), 0.5)
        d_lut, d_coords, d_img = lookup_grad(lut, coords, img, np.ones_like(img))
        assert np.all(d_lut == 0) and np.all(d_coords == 0) and np.all(d_img == 0)


class TestBuilders:
    def test_gamma_one_is_identity(self):
        np.testing.assert_array_equal(make_gamma(6, 1.0).values, make_identity(6).values)

    def test_saturation_one_is_identity(self):
        np.testing.assert_allclose(make_saturation(6, 1.0).values, make_identity(6).values, atol=1e-15)

    def test_gamma_half_at_quarter(self):
        lut = make_gamma(17, 0.5)
        # grid value 0.25 sits at index 4 of 17 (4/16)
        np.testing.assert_allclose(lut.values[4, 4, 4], [0.5, 0.5, 0.5], atol=1e-12)

    def test_scurve_fixes_endpoints_and_midpoint(self):
        lut = make_contrast_scurve(5, 6.0)
        np.testing.assert_allclose(lut.values[0, 0, 0], [0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(lut.values[4, 4, 4], [1, 1, 1], atol=1e-12)
        np.testing.assert_allclose(lut.values[2, 2, 2], [0.5, 0.5, 0.5], atol=1e-12)

    def test_saturation_values_clamped(self):
        lut = make_saturation(5, 3.0)
        assert lut.values.min() >= 0.0 and lut.values.max() <= 1.0

    def test_small_n_rejected(self):
        with pytest.raises(DimensionError):
            make_identity(1)
