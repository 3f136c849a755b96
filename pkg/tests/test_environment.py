import numpy as np
import pytest

from sarsim.environment import (ConfigError, FieldFileError, FieldGenParams,
                                FieldPair, GridWorld, VectorField,
                                generate_synthetic_fields, load_fields, save_fields)


class TestGridWorld:
    def test_first_cell(self):
        w = GridWorld((0.0, 0.0), 100.0, 10, 10)
        assert w.cell_of((50.0, 50.0)) == (0, 0)

    def test_boundary_belongs_to_next_cell(self):
        w = GridWorld((0.0, 0.0), 100.0, 10, 10)
        assert w.cell_of((100.0, 0.0)) == (1, 0)

    def test_far_edge_of_paper_scale_grid_is_outside(self):
        # 2500 cells of 100 m: the point at 250 km sits on the outer boundary
        w = GridWorld((0.0, 0.0), 100.0, 2500, 2500)
        assert w.cell_of((250_000.0, 0.0)) is None
        assert w.cell_of((249_999.9, 0.0)) == (2499, 0)

    def test_cell_center_roundtrip_is_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            origin = tuple(rng.uniform(-5000, 5000, 2))
            cs = float(rng.uniform(10, 500))
            w = GridWorld(origin, cs, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
            for _ in range(50):
                i = int(rng.integers(0, w.nx))
                j = int(rng.integers(0, w.ny))
                assert w.cell_of(w.cell_center(i, j)) == (i, j)

    def test_cells_of_matches_scalar(self):
        w = GridWorld((-250.0, 120.0), 30.0, 25, 18)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-240, 500, size=(200, 2))
        ij = w.cells_of(pts)
        for p, (i, j) in zip(pts, ij):
            expect = w.cell_of(p)
            if expect is not None:
                assert (i, j) == expect

    def test_invalid_geometry_rejected(self):
        with pytest.raises(ConfigError):
            GridWorld((0, 0), 0.0, 5, 5)
        with pytest.raises(ConfigError):
            GridWorld((0, 0), 10.0, 0, 5)


def constant_field(u, v, nt=2, nx=4, ny=4, spacing=1000.0, frame_dt=3600.0):
    frames = np.zeros((nt, nx, ny, 2))
    frames[..., 0] = u
    frames[..., 1] = v
    return VectorField((0.0, 0.0), spacing, frame_dt, frames)


class TestVectorField:
    def test_constant_field_everywhere(self):
        f = constant_field(1.0, 0.0)
        for p in [(0, 0), (1500, 700), (2999.9, 2999.9)]:
            assert f.sample(p, 1000.0) == pytest.approx((1.0, 0.0))

    def test_time_midpoint_blend(self):
        frames = np.zeros((2, 3, 3, 2))
        frames[1, ..., 0] = 2.0
        f = VectorField((0, 0), 1000.0, 3600.0, frames)
        assert f.sample((500.0, 500.0), 1800.0) == pytest.approx((1.0, 0.0))

    def test_spatial_midpoint_hand_value(self):
        # Nodes along x carry (0,0) then (1,0); halfway must read (0.5, 0)
        frames = np.zeros((1, 2, 2, 2))
        frames[0, 1, :, 0] = 1.0
        f = VectorField((0, 0), 1000.0, 3600.0, frames)
        assert f.sample((500.0, 250.0), 0.0) == pytest.approx((0.5, 0.0))

    def test_node_exactness(self):
        rng = np.random.default_rng(11)
        frames = rng.normal(size=(3, 5, 6, 2))
        f = VectorField((-2000.0, 500.0), 750.0, 600.0, frames)
        for k in range(3):
            for i in range(5):
                for j in range(6):
                    got = f.sample((-2000.0 + i * 750.0, 500.0 + j * 750.0), k * 600.0)
                    assert got == pytest.approx(tuple(frames[k, i, j]), abs=1e-12)

    def test_sample_bounded_by_bracketing_nodes(self):
        rng = np.random.default_rng(13)
        frames = rng.normal(size=(4, 6, 6, 2))
        f = VectorField((0, 0), 100.0, 60.0, frames)
        pts = rng.uniform(0, 500, size=(300, 2))
        for t in (0.0, 37.5, 180.0):
            out = f.sample_many(pts, t)
            assert out[:, 0].max() <= frames[..., 0].max() + 1e-12
            assert out[:, 0].min() >= frames[..., 0].min() - 1e-12
            assert out[:, 1].max() <= frames[..., 1].max() + 1e-12
            assert out[:, 1].min() >= frames[..., 1].min() - 1e-12

    def test_out_of_extent_clamps_and_counts(self):
        f = constant_field(0.5, -0.25)
        before = f.clamp_events
        far = f.sample((1e7, 1e7), 0.0)
        assert far == pytest.approx((0.5, -0.25))
        assert f.clamp_events > before

    def test_rejects_nonfinite(self):
        frames = np.zeros((1, 2, 2, 2))
        frames[0, 0, 0, 0] = np.nan
        with pytest.raises(ConfigError):
            VectorField((0, 0), 100.0, 60.0, frames)


class TestSyntheticFields:
    def test_deterministic_in_seed(self):
        extent = (0.0, 0.0, 30_000.0, 30_000.0)
        a = generate_synthetic_fields(42, extent, 7200.0)
        b = generate_synthetic_fields(42, extent, 7200.0)
        assert np.array_equal(a.current.frames, b.current.frames)
        assert np.array_equal(a.wind.frames, b.wind.frames)
        c = generate_synthetic_fields(43, extent, 7200.0)
        assert not np.array_equal(a.current.frames, c.current.frames)

    def test_zero_params_give_zero_current(self):
        params = FieldGenParams(n_gyres=0, background_ms=(0.0, 0.0))
        fp = generate_synthetic_fields(1, (0, 0, 20_000, 20_000), 3600.0, params)
        assert np.all(fp.current.frames == 0.0)

    def test_default_current_capped_at_one_mps(self):
        fp = generate_synthetic_fields(42, (0.0, 0.0, 80_000.0, 80_000.0), 18_000.0)
        mag = np.hypot(fp.current.frames[..., 0], fp.current.frames[..., 1])
        assert mag.max() <= 1.0

    def test_wind_capped(self):
        fp = generate_synthetic_fields(7, (0, 0, 40_000, 40_000), 7200.0)
        mag = np.hypot(fp.wind.frames[..., 0], fp.wind.frames[..., 1])
        assert mag.max() <= 12.0

    def test_negative_magnitude_rejected(self):
        with pytest.raises(ConfigError):
            FieldGenParams(current_max_ms=-1.0)

    def test_covers_requested_extent_and_duration(self):
        extent = (0.0, 0.0, 55_000.0, 42_000.0)
        fp = generate_synthetic_fields(9, extent, 10_000.0)
        assert fp.covers(extent, 10_000.0)


class TestFieldFile:
    def test_roundtrip_identity(self, tmp_path):
        fp = generate_synthetic_fields(5, (0, 0, 25_000, 25_000), 7200.0)
        path = tmp_path / "fields.bin"
        save_fields(fp, path)
        back = load_fields(path)
        assert np.array_equal(back.current.frames, fp.current.frames)
        assert np.array_equal(back.wind.frames, fp.wind.frames)
        assert back.current.spacing == fp.current.spacing
        assert back.wind.frame_dt == fp.wind.frame_dt
        assert back.current.origin == fp.current.origin

    def test_truncated_payload_names_lengths(self, tmp_path):
        fp = generate_synthetic_fields(5, (0, 0, 25_000, 25_000), 7200.0)
        path = tmp_path / "fields.bin"
        save_fields(fp, path)
        data = path.read_bytes()
        path.write_bytes(data[:-100])
        with pytest.raises(FieldFileError, match="expected .* bytes"):
            load_fields(path)

    def test_bad_magic_rejected_at_offset_zero(self, tmp_path):
        path = tmp_path / "fields.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(FieldFileError, match="offset 0"):
            load_fields(path)

    def test_nonfinite_value_rejected(self, tmp_path):
        fp = generate_synthetic_fields(5, (0, 0, 25_000, 25_000), 7200.0)
        path = tmp_path / "fields.bin"
        save_fields(fp, path)
        data = bytearray(path.read_bytes())
        # Overwrite the first payload float with NaN
        hlen = int(np.frombuffer(bytes(data[12:16]), dtype="<u4")[0])
        data[16 + hlen:16 + hlen + 8] = np.float64("nan").tobytes()
        path.write_bytes(bytes(data))
        with pytest.raises(FieldFileError, match="non-finite"):
            load_fields(path)

    def test_garbled_header_rejected(self, tmp_path):
        fp = generate_synthetic_fields(5, (0, 0, 25_000, 25_000), 7200.0)
        path = tmp_path / "fields.bin"
        save_fields(fp, path)
        data = bytearray(path.read_bytes())
        data[20] = 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(FieldFileError):
            load_fields(path)
