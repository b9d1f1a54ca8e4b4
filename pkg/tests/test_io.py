"""File-format round trips: binary containers, CSV exports, caches."""
import numpy as np
import pytest

from aradon.attenuation import build_h
from aradon.bukhgeim import CartesianGrid, cauchy_build
from aradon.errors import ConfigError, GridMismatch
from aradon.harmonics import AngularGrid, ModeTrace
from aradon.io import (
    read_boundary_table,
    read_factors_cache,
    read_field_csv,
    read_mode_field,
    read_mode_trace,
    read_sinogram,
    sinogram_to_csv,
    write_factors_cache,
    write_field_csv,
    write_mode_field,
    write_mode_trace,
    write_residual_report,
    write_sinogram,
)
from aradon.xray import forward_sinogram, phantom


class TestModeTraceRoundTrip:
    def test_round_trip(self, tmp_path, disk256):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((9, 256)) + 1j * rng.standard_normal((9, 256))
        g = ModeTrace(disk256, 8, data)
        p = tmp_path / "trace.bin"
        write_mode_trace(p, g)
        back = read_mode_trace(p)
        assert back.n_modes == 8
        assert back.boundary.kind == "unit-disk"
        assert back.boundary.n_nodes == 256
        assert np.array_equal(back.data, g.data)

    def test_checksum_detects_corruption(self, tmp_path, disk256):
        g = ModeTrace(disk256, 2, np.ones((3, 256), dtype=complex))
        p = tmp_path / "trace.bin"
        write_mode_trace(p, g)
        blob = bytearray(p.read_bytes())
        blob[-5] ^= 0xFF
        p.write_bytes(bytes(blob))
        with pytest.raises(ConfigError):
            read_mode_trace(p)

    def test_wrong_format_rejected(self, tmp_path, disk256, polybump_sino):
        p = tmp_path / "sino.bin"
        write_sinogram(p, polybump_sino)
        with pytest.raises(ConfigError):
            read_mode_trace(p)


class TestSinogram:
    def test_round_trip_with_hash(self, tmp_path, polybump_sino):
        p = tmp_path / "sino.bin"
        write_sinogram(p, polybump_sino, config_hash="abc123")
        back = read_sinogram(p)
        assert np.array_equal(back.data, polybump_sino.data)
        assert back.attenuated == polybump_sino.attenuated
        assert back.meta.get("config_hash") == "abc123"
        assert back.angular.n_angles == polybump_sino.angular.n_angles

    def test_csv_export_parses_back(self, tmp_path, disk256):
        ang = AngularGrid(16)
        sino = forward_sinogram(
            phantom("poly-bump", disk256), phantom("zero", disk256), disk256, ang
        )
        p = tmp_path / "sino.csv"
        sinogram_to_csv(p, sino)
        rows = np.loadtxt(p, delimiter=",", skiprows=1)
        assert rows.shape == (256 * 16, 6)
        # columns: node_index, angle_index, z_x, z_y, phi, value
        k = 37
        i, j = int(rows[k, 0]), int(rows[k, 1])
        assert rows[k, 5] == sino.data[i, j]
        assert abs(rows[k, 4] - ang.angles[j]) < 1e-15
        assert np.allclose(rows[k, 2:4], disk256.positions[i], atol=1e-15)


class TestModeField:
    def test_round_trip(self, tmp_path, disk256, polybump_trace):
        g = ModeTrace(disk256, 4, polybump_trace.data[:5, ::2].copy())
        pts = np.array([[0.1, 0.2], [-0.3, 0.05], [0.0, 0.0]])
        field = cauchy_build(g, pts)
        p = tmp_path / "field.bin"
        write_mode_field(p, field)
        back = read_mode_field(p)
        assert np.array_equal(back.data, field.data)
        assert np.allclose(back.points, pts, atol=0)


class TestFieldCsv:
    def test_round_trip(self, tmp_path):
        xs = np.linspace(-1, 1, 5)
        ys = np.linspace(-1, 1, 7)
        pic = np.arange(35, dtype=float).reshape(7, 5)
        p = tmp_path / "field.csv"
        write_field_csv(p, xs, ys, pic)
        bx, by, bpic = read_field_csv(p)
        assert np.allclose(bx, xs)
        assert np.allclose(by, ys)
        assert np.allclose(bpic, pic)


class TestResidualReport:
    def test_json_contents(self, tmp_path, polybump_trace):
        from aradon.bukhgeim import range_residual_0
        import json

        res = range_residual_0(polybump_trace)
        p = tmp_path / "residual.json"
        write_residual_report(p, res, extra={"config_hash": "deadbeef"})
        doc = json.loads(p.read_text())
        assert doc["config_hash"] == "deadbeef"
        assert doc["relative"] == res.relative
        assert "norm_l1" in doc


class TestFactorsCache:
    def test_boundary_only_round_trip(self, tmp_path, disk256):
        ang = AngularGrid(64)
        a = phantom("poly-bump", disk256, params={"amplitude": 0.3})
        fac = build_h(a, disk256, ang, 8)
        p = tmp_path / "factors.bin"
        write_factors_cache(p, fac)
        back = read_factors_cache(p, boundary=disk256, angular=ang)
        assert np.array_equal(back.alpha, fac.alpha)
        assert np.array_equal(back.beta, fac.beta)
        assert np.array_equal(back.h_boundary, fac.h_boundary)
        assert back.interior is None

    def test_interior_round_trip(self, tmp_path, disk256):
        ang = AngularGrid(64)
        a = phantom("poly-bump", disk256, params={"amplitude": 0.3})
        grid = CartesianGrid(disk256, 12, 12, margin=0.1)
        fac = build_h(a, disk256, ang, 8, interior_grid=grid)
        p = tmp_path / "factors.bin"
        write_factors_cache(p, fac)
        back = read_factors_cache(p, boundary=disk256, angular=ang)
        assert back.interior is not None
        assert np.array_equal(back.interior.alpha, fac.interior.alpha)
        assert np.array_equal(back.interior.inside, fac.interior.inside)
        assert back.interior.grid.nx == 12

    def test_grid_mismatch_on_read(self, tmp_path, disk256, disk512):
        ang = AngularGrid(64)
        a = phantom("poly-bump", disk256, params={"amplitude": 0.3})
        fac = build_h(a, disk256, ang, 8)
        p = tmp_path / "factors.bin"
        write_factors_cache(p, fac)
        with pytest.raises(GridMismatch):
            read_factors_cache(p, boundary=disk512, angular=ang)
        with pytest.raises(GridMismatch):
            read_factors_cache(p, boundary=disk256, angular=AngularGrid(32))


class TestBoundaryTable:
    def test_csv_reader(self, tmp_path):
        t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        pts = np.stack([1.3 * np.cos(t), 0.9 * np.sin(t)], axis=1)
        p = tmp_path / "boundary.csv"
        lines = ["# comment", "x,y"] + ["%.17g,%.17g" % (x, y) for x, y in pts]
        p.write_text("\n".join(lines) + "\n")
        table = read_boundary_table(p)
        assert np.allclose(table, pts, atol=0)

    def test_too_short_rejected(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text("0,0\n1,0\n")
        with pytest.raises(ConfigError):
            read_boundary_table(p)
