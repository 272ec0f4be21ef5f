"""Persistence: binary containers, PGM images, CSV series. Round trips are bit-exact."""

import json
import struct

import numpy as np
import pytest

import plapspec as pl
from plapspec import io as pio
from plapspec.errors import InputError


@pytest.fixture()
def small_traj():
    rng = np.random.default_rng(7)
    f = pl.Field(rng.standard_normal((6, 5)), spacing=(0.5, 0.25))
    cfg = pl.FlowConfig(p=1.5, dt=1e-3, t_max=0.05, record_stride=2)
    return pl.run_p_flow(f, cfg)


class TestTrajectoryContainer:
    def test_round_trip_is_bit_exact(self, tmp_path, small_traj):
        path = tmp_path / "a.pflw"
        pio.save_trajectory(path, small_traj)
        loaded = pio.load_trajectory(path)
        assert np.array_equal(loaded.frames, small_traj.frames)
        assert loaded.spacing == small_traj.spacing
        assert loaded.p == small_traj.p
        assert loaded.dt_effective == small_traj.dt_effective
        assert loaded.extinction_time_empirical == small_traj.extinction_time_empirical
        assert loaded.mass_drift == small_traj.mass_drift

    def test_resave_reproduces_bytes(self, tmp_path, small_traj):
        p1, p2 = tmp_path / "a.pflw", tmp_path / "b.pflw"
        pio.save_trajectory(p1, small_traj)
        pio.save_trajectory(p2, pio.load_trajectory(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_extinction_round_trips_through_nan(self, tmp_path, pair_1d):
        traj = pl.run_p_flow(
            pair_1d.phi, pl.FlowConfig(p=1.5, dt=1e-3, extinction_tol=1e-4, record_stride=50)
        )
        path = tmp_path / "e.pflw"
        pio.save_trajectory(path, traj)
        assert pio.load_trajectory(path).extinction_time_empirical == pytest.approx(
            traj.extinction_time_empirical
        )

    def test_magic_mismatch_rejected(self, tmp_path, small_traj):
        path = tmp_path / "a.pflw"
        pio.save_trajectory(path, small_traj)
        with pytest.raises(InputError):
            pio.load_spectral_field(path)

    def test_truncation_rejected(self, tmp_path, small_traj):
        path = tmp_path / "a.pflw"
        pio.save_trajectory(path, small_traj)
        raw = path.read_bytes()
        bad = tmp_path / "t.pflw"
        bad.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(InputError):
            pio.load_trajectory(bad)

    def test_trailing_bytes_rejected(self, tmp_path, small_traj):
        path = tmp_path / "a.pflw"
        pio.save_trajectory(path, small_traj)
        bad = tmp_path / "t.pflw"
        bad.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(InputError):
            pio.load_trajectory(bad)

    def test_non_finite_frames_rejected(self, tmp_path):
        head = b"PFLW1" + struct.pack("<I", 1) + struct.pack("<I", 2) + struct.pack("<d", 1.0)
        head += struct.pack("<ddQd", 1.5, 0.1, 2, float("nan"))
        body = struct.pack("<4d", 1.0, float("inf"), 0.0, 0.0)
        bad = tmp_path / "n.pflw"
        bad.write_bytes(head + body)
        with pytest.raises(InputError):
            pio.load_trajectory(bad)

    def test_bad_header_fields_rejected(self, tmp_path):
        # 3D grids and non-positive spacing are both outside the format.
        head = b"PFLW1" + struct.pack("<I", 3)
        bad = tmp_path / "d.pflw"
        bad.write_bytes(head + b"\x00" * 64)
        with pytest.raises(InputError):
            pio.load_trajectory(bad)
        head = b"PFLW1" + struct.pack("<I", 1) + struct.pack("<I", 2) + struct.pack("<d", -1.0)
        head += struct.pack("<ddQd", 1.5, 0.1, 2, 0.0) + struct.pack("<4d", 0, 0, 0, 0)
        bad.write_bytes(head)
        with pytest.raises(InputError):
            pio.load_trajectory(bad)


class TestSpectralAndFieldContainers:
    def test_spectral_round_trip(self, tmp_path, sfield_1d):
        path = tmp_path / "s.pspc"
        pio.save_spectral_field(path, sfield_1d)
        loaded = pio.load_spectral_field(path)
        assert np.array_equal(loaded.phi, sfield_1d.phi)
        assert loaded.beta == sfield_1d.beta
        assert loaded.h_t == sfield_1d.h_t
        assert loaded.extinction_time == sfield_1d.extinction_time
        assert loaded.spacing == sfield_1d.spacing

    def test_field_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        f = pl.Field(rng.standard_normal((4, 6)), spacing=(2.0, 0.5))
        path = tmp_path / "f.pfld"
        pio.save_field(path, f)
        loaded = pio.load_field(path)
        assert np.array_equal(loaded.values, f.values)
        assert loaded.spacing == f.spacing

    def test_field_container_requires_single_frame(self, tmp_path, small_traj):
        path = tmp_path / "x.pfld"
        pio.save_trajectory(path, small_traj)
        with pytest.raises(InputError):
            pio.load_field(path)


class TestEigenpairPersistence:
    def test_round_trip_with_sidecar(self, tmp_path, pair_1d):
        path = tmp_path / "pair.pfld"
        pio.save_eigenpair(path, pair_1d)
        sidecar = json.loads((tmp_path / "pair.json").read_text())
        assert sidecar["p"] == pair_1d.p
        assert sidecar["lambda"] == pair_1d.lam
        assert sidecar["residual"] == pair_1d.residual
        assert sidecar["provenance"] == "generated"
        assert sidecar["converged"] is True
        loaded = pio.load_eigenpair(path)
        assert np.array_equal(loaded.phi.values, pair_1d.phi.values)
        assert loaded.lam == pair_1d.lam
        assert loaded.residual == pair_1d.residual
        assert loaded.converged == pair_1d.converged

    def test_missing_sidecar_rejected(self, tmp_path, pair_1d):
        path = tmp_path / "pair.pfld"
        pio.save_eigenpair(path, pair_1d)
        (tmp_path / "pair.json").unlink()
        with pytest.raises(InputError):
            pio.load_eigenpair(path)


class TestPGM:
    def test_binary_and_ascii_agree(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(9, 7)).astype(np.uint8)
        p5 = tmp_path / "b.pgm"
        p5.write_bytes(b"P5 7 9 255\n" + img.tobytes())
        lines = ["P2", "# comment", "7 9", "255"]
        lines += [" ".join(str(v) for v in row) for row in img]
        p2 = tmp_path / "a.pgm"
        p2.write_text("\n".join(lines) + "\n")
        a, b = pio.read_pgm(p2), pio.read_pgm(p5)
        assert np.array_equal(a.values, b.values)
        assert np.allclose(b.values, img / 255.0)

    def test_sixteen_bit_samples_are_big_endian(self, tmp_path):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 65536, size=(4, 3)).astype(">u2")
        path = tmp_path / "w.pgm"
        path.write_bytes(b"P5 3 4 65535\n" + img.tobytes())
        got = pio.read_pgm(path)
        assert np.allclose(got.values, img.astype(float) / 65535.0)

    def test_write_rescales_to_full_range(self, tmp_path):
        f = pl.Field(np.array([[0.0, 0.5], [1.5, 2.0]]))
        path = tmp_path / "o.pgm"
        pio.write_pgm(path, f)
        back = pio.read_pgm(path)
        expected = (f.values - f.values.min()) / (f.values.max() - f.values.min())
        assert np.max(np.abs(back.values - expected)) <= 1.0 / 255.0

    def test_constant_field_writes_zeros(self, tmp_path):
        path = tmp_path / "c.pgm"
        pio.write_pgm(path, pl.Field(np.full((3, 3), 7.0)))
        assert np.all(pio.read_pgm(path).values == 0.0)

    def test_write_requires_2d(self, tmp_path):
        with pytest.raises(InputError):
            pio.write_pgm(tmp_path / "x.pgm", pl.Field(np.zeros(4)))

    def test_malformed_headers_rejected(self, tmp_path):
        cases = [b"P3 2 2 255\n" + b"\x00" * 4, b"P5 2 2\n", b"P5 2 2 0\n", b"P5 2 2 255\n\x00"]
        for k, raw in enumerate(cases):
            path = tmp_path / f"bad{k}.pgm"
            path.write_bytes(raw)
            with pytest.raises(InputError):
                pio.read_pgm(path)


class TestCSV:
    def test_signal_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        f = pl.Field(rng.standard_normal(17))
        path = tmp_path / "x.csv"
        pio.write_signal_csv(path, f)
        assert np.array_equal(pio.read_signal_csv(path).values, f.values)

    def test_signal_skips_comments_and_blanks(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("# header\n1.5\n\n2.5\n")
        assert np.array_equal(pio.read_signal_csv(path).values, [1.5, 2.5])

    def test_signal_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1.0\noops\n")
        with pytest.raises(InputError, match=":2:"):
            pio.read_signal_csv(path)
        path.write_text("1.0\n")
        with pytest.raises(InputError):
            pio.read_signal_csv(path)

    def test_spectrum_round_trip_and_header(self, tmp_path, pair_1d, sfield_1d):
        spec = pl.spectrum(pair_1d.phi, sfield_1d)
        path = tmp_path / "s.csv"
        pio.write_spectrum_csv(path, spec)
        assert path.read_text().splitlines()[0] == "t,S"
        loaded = pio.read_spectrum_csv(path)
        assert np.array_equal(loaded.values, spec.values)
        assert loaded.h_t == spec.h_t

    def test_spectrum_header_and_axis_validated(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("time,S\n0.0,1.0\n0.1,2.0\n")
        with pytest.raises(InputError):
            pio.read_spectrum_csv(path)
        path.write_text("t,S\n0.5,1.0\n1.0,2.0\n")
        with pytest.raises(InputError):
            pio.read_spectrum_csv(path)
        path.write_text("t,S\n0.0,1.0\n0.1,2.0\n0.5,3.0\n")
        with pytest.raises(InputError):
            pio.read_spectrum_csv(path)

    def test_missing_file_is_input_error(self, tmp_path):
        with pytest.raises(InputError):
            pio.read_signal_csv(tmp_path / "nope.csv")
