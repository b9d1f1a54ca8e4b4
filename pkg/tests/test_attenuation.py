"""Finite Hilbert transform, integrating factors, and the attenuated cycle."""
import numpy as np
import pytest

from aradon.attenuation import (
    build_h,
    finite_hilbert,
    hilbert_Ha,
    range_residual_a,
    reconstruct_f_attenuated,
    residual_route_gap,
)
from aradon.bukhgeim import CartesianGrid, hilbert_H0, reconstruct_f0
from aradon.errors import (
    FactorBuildError,
    GridMismatch,
    InconsistentInput,
    SupportTouchesEdge,
)
from aradon.harmonics import AngularGrid, ModeTrace, project_minus
from aradon.xray import forward_sinogram, phantom


@pytest.fixture(scope="module")
def att_setup(disk256):
    """Small attenuated problem shared by the factor tests."""
    ang = AngularGrid(64)
    f = phantom("poly-bump", disk256)
    a = phantom("poly-bump", disk256, params={"amplitude": 0.3})
    sino = forward_sinogram(f, a, disk256, ang)
    g = project_minus(sino, 16)
    factors = build_h(a, disk256, ang, 16)
    return {"ang": ang, "f": f, "a": a, "sino": sino, "g": g, "factors": factors}


class TestFiniteHilbert:
    def test_semicircle_pair(self):
        s = np.linspace(-1.5, 1.5, 2048)
        f = np.sqrt(np.maximum(1.0 - s * s, 0.0))
        h = finite_hilbert(f)
        window = np.abs(s) <= 0.95
        assert np.max(np.abs(h[window] - s[window])) <= 1e-4

    def test_error_shrinks_with_resolution(self):
        errs = []
        for n in (512, 2048):
            s = np.linspace(-1.5, 1.5, n)
            f = np.sqrt(np.maximum(1.0 - s * s, 0.0))
            h = finite_hilbert(f)
            window = np.abs(s) <= 0.9
            errs.append(np.max(np.abs(h[window] - s[window])))
        assert errs[1] < 0.3 * errs[0]

    def test_support_touching_edge_rejected(self):
        s = np.linspace(-0.9, 0.9, 256)
        f = np.sqrt(np.maximum(1.0 - s * s, 0.0))  # nonzero at both ends
        with pytest.raises(SupportTouchesEdge):
            finite_hilbert(f)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        n = 512
        f1 = np.zeros(n)
        f2 = np.zeros(n)
        f1[100:400] = rng.standard_normal(300)
        f2[150:350] = rng.standard_normal(200)
        h = finite_hilbert(f1 + 2.0 * f2)
        assert np.max(np.abs(h - finite_hilbert(f1) - 2.0 * finite_hilbert(f2))) < 1e-12


class TestIntegratingFactor:
    def test_zero_attenuation_identity(self, disk256):
        ang = AngularGrid(32)
        fac = build_h(phantom("zero", disk256), disk256, ang, 8)
        assert fac.zero_attenuation
        assert np.max(np.abs(fac.h_boundary)) == 0.0
        assert np.max(np.abs(fac.alpha[0] - 1.0)) == 0.0
        assert np.max(np.abs(fac.alpha[1:])) == 0.0
        assert np.max(np.abs(fac.beta[0] - 1.0)) == 0.0
        assert np.max(np.abs(fac.beta[1:])) == 0.0

    def test_analyticity_diagnostics(self, att_setup):
        fac = att_setup["factors"]
        assert fac.max_neg_mode <= 1e-6
        assert fac.max_identity_dev <= 1e-8

    def test_factor_gate_raises(self, disk256, att_setup):
        with pytest.raises(FactorBuildError):
            build_h(att_setup["a"], disk256, att_setup["ang"], 16, tol_neg=1e-18)

    def test_alpha_consistent_under_angular_refinement(self, disk256, att_setup):
        """Coefficients are angular-grid integrals; 4x angles is an oracle."""
        fine = build_h(att_setup["a"], disk256, AngularGrid(256), 16)
        coarse = att_setup["factors"]
        dev_a = np.max(np.abs(fine.alpha - coarse.alpha))
        dev_b = np.max(np.abs(fine.beta - coarse.beta))
        assert dev_a <= 1e-8
        assert dev_b <= 1e-8


class TestHilbertHa:
    def test_zero_attenuation_reduces_to_h0(self, disk256, polybump_trace):
        ang = AngularGrid(128)
        fac = build_h(phantom("zero", disk256), disk256, ang, 16)
        rng = np.random.default_rng(2)
        data = rng.standard_normal((17, 256)) + 1j * rng.standard_normal((17, 256))
        g = ModeTrace(disk256, 16, data)
        ha = hilbert_Ha(g, fac)
        h0 = hilbert_H0(g)
        assert np.max(np.abs(ha.data - h0.data)) == 0.0

    def test_two_routes_agree(self, att_setup):
        gap = residual_route_gap(att_setup["g"], att_setup["factors"])
        assert gap <= 1e-9

    def test_consistent_residual_small(self, att_setup):
        res = range_residual_a(att_setup["g"], att_setup["factors"])
        assert res.relative <= 5e-3

    def test_inconsistent_residual_large(self, att_setup, disk256):
        bad = att_setup["g"].data.copy()
        bad[0] += 0.1 * np.sum(np.abs(bad), axis=0).max() * np.conj(
            disk256.complex_nodes()
        )
        g = ModeTrace(disk256, 16, bad)
        res = range_residual_a(g, att_setup["factors"])
        assert res.relative >= 0.05

    def test_grid_mismatch(self, disk512, att_setup):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((17, 512)) + 1j * rng.standard_normal((17, 512))
        g = ModeTrace(disk512, 16, data)
        with pytest.raises(GridMismatch):
            hilbert_Ha(g, att_setup["factors"])


class TestAttenuatedReconstruction:
    def test_zero_attenuation_matches_plain_route(self, disk256, att_setup):
        ang = AngularGrid(64)
        f = phantom("poly-bump", disk256)
        sino = forward_sinogram(f, phantom("zero", disk256), disk256, ang)
        g = project_minus(sino, 16)
        grid = CartesianGrid(disk256, 16, 16, margin=0.1)
        fac = build_h(phantom("zero", disk256), disk256, ang, 16, interior_grid=grid)
        pic_a = reconstruct_f_attenuated(g, fac, grid)
        pic_0 = reconstruct_f0(g, grid)
        assert np.max(np.abs(pic_a - pic_0)) == 0.0

    def test_attenuated_recovery(self, disk256, att_setup):
        grid = CartesianGrid(disk256, 24, 24, margin=0.12)
        fac = build_h(
            att_setup["a"], disk256, att_setup["ang"], 16, interior_grid=grid
        )
        pic = reconstruct_f_attenuated(att_setup["g"], fac, grid)
        xs, ys = np.meshgrid(grid.xs, grid.ys)
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        ref = att_setup["f"](pts).reshape(24, 24)
        mask = grid.valid.reshape(24, 24) & (
            np.hypot(xs, ys) <= 0.85
        )
        rel = np.linalg.norm((pic - ref)[mask]) / np.linalg.norm(ref[mask])
        assert rel <= 0.08

    def test_interior_grid_required_to_match(self, disk256, att_setup):
        grid = CartesianGrid(disk256, 16, 16, margin=0.1)
        other = CartesianGrid(disk256, 18, 18, margin=0.1)
        fac = build_h(
            att_setup["a"], disk256, att_setup["ang"], 16, interior_grid=grid
        )
        with pytest.raises(GridMismatch):
            reconstruct_f_attenuated(att_setup["g"], fac, other)

    def test_gate_warns(self, disk256, att_setup):
        grid = CartesianGrid(disk256, 12, 12, margin=0.12)
        fac = build_h(
            att_setup["a"], disk256, att_setup["ang"], 16, interior_grid=grid
        )
        bad = att_setup["g"].data.copy()
        bad[0] += 0.2 * np.sum(np.abs(bad), axis=0).max() * np.conj(
            disk256.complex_nodes()
        )
        g = ModeTrace(disk256, 16, bad)
        with pytest.warns(InconsistentInput):
            reconstruct_f_attenuated(g, fac, grid)
