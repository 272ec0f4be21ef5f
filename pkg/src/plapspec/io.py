"""File formats: binary containers, PGM images, CSV series, JSON sidecars.

The three binary containers share one layout and differ only by magic:

    magic     5 bytes   PFLW1 (trajectory) | PSPC1 (spectral) | PFLD1 (field)
    ndim      uint32    grid dimensionality (1 or 2)
    shape     ndim * uint32
    spacing   ndim * float64
    param     float64   p for PFLW1, beta for PSPC1, 0 for PFLD1
    dt_eff    float64   frame time spacing (0 for PFLD1)
    count     uint64    frame count (1 for PFLD1)
    t_ext     float64   empirical extinction time, NaN when absent
    frames    count * prod(shape) * float64, row-major

All multi-byte values are little-endian; 16-bit PGM samples are the one
exception (most significant byte first, as PGM requires). Round trips are
bit-exact: save(load(x)) reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .eigen import EigenPair
from .errors import InputError
from .flow import FlowTrajectory
from .grid import Field
from .transform import SpectralField, Spectrum

__all__ = [
    "save_trajectory",
    "load_trajectory",
    "save_spectral_field",
    "load_spectral_field",
    "save_field",
    "load_field",
    "save_eigenpair",
    "load_eigenpair",
    "read_pgm",
    "write_pgm",
    "read_signal_csv",
    "write_signal_csv",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

MAGIC_TRAJECTORY = b"PFLW1"
MAGIC_SPECTRAL = b"PSPC1"
MAGIC_FIELD = b"PFLD1"


def _pack_container(magic, shape, spacing, param, dt_eff, t_ext, frames):
    ndim = len(shape)
    head = [
        magic,
        struct.pack("<I", ndim),
        struct.pack(f"<{ndim}I", *shape),
        struct.pack(f"<{ndim}d", *spacing),
        struct.pack(
            "<ddQd",
            float(param),
            float(dt_eff),
            frames.shape[0],
            math.nan if t_ext is None else float(t_ext),
        ),
    ]
    body = np.ascontiguousarray(frames, dtype="<f8").tobytes()
    return b"".join(head) + body


class _Cursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise InputError(f"{self.path}: truncated container")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out


def _unpack_container(path, expected_magic):
    data = Path(path).read_bytes()
    cur = _Cursor(data, path)
    magic = cur.take(5)
    if magic != expected_magic:
        raise InputError(
            f"{path}: bad magic {magic!r}, expected {expected_magic.decode()}"
        )
    (ndim,) = struct.unpack("<I", cur.take(4))
    if ndim not in (1, 2):
        raise InputError(f"{path}: unsupported grid dimensionality {ndim}")
    shape = struct.unpack(f"<{ndim}I", cur.take(4 * ndim))
    if any(n < 1 for n in shape):
        raise InputError(f"{path}: non-positive grid shape {shape}")
    spacing = struct.unpack(f"<{ndim}d", cur.take(8 * ndim))
    if any(not math.isfinite(h) or h <= 0.0 for h in spacing):
        raise InputError(f"{path}: invalid spacing {spacing}")
    param, dt_eff, count, t_ext = struct.unpack("<ddQd", cur.take(32))
    nvals = count * int(np.prod(shape))
    body = cur.take(8 * nvals)
    if cur.off != len(data):
        raise InputError(f"{path}: {len(data) - cur.off} trailing bytes")
    frames = np.frombuffer(body, dtype="<f8").reshape(count, *shape).copy()
    if not np.all(np.isfinite(frames)):
        raise InputError(f"{path}: non-finite frame values")
    return shape, spacing, param, dt_eff, (None if math.isnan(t_ext) else t_ext), frames


def save_trajectory(path, traj: FlowTrajectory) -> None:
    Path(path).write_bytes(
        _pack_container(
            MAGIC_TRAJECTORY,
            traj.grid_shape,
            traj.spacing,
            traj.p,
            traj.dt_effective,
            traj.extinction_time_empirical,
            traj.frames.reshape(traj.nframes, -1),
        )
    )


def load_trajectory(path) -> FlowTrajectory:
    shape, spacing, p, dt_eff, t_ext, frames = _unpack_container(path, MAGIC_TRAJECTORY)
    frames = frames.reshape(frames.shape[0], *shape)
    # Mass drift is derived data and is recomputed rather than serialized.
    means = frames.reshape(frames.shape[0], -1).mean(axis=1)
    drift = float(np.max(np.abs(means - means[0])))
    return FlowTrajectory(frames, spacing, p, dt_eff, t_ext, drift)


def save_spectral_field(path, sf: SpectralField) -> None:
    Path(path).write_bytes(
        _pack_container(
            MAGIC_SPECTRAL,
            sf.grid_shape,
            sf.spacing,
            sf.beta,
            sf.h_t,
            sf.extinction_time,
            sf.phi.reshape(sf.nframes, -1),
        )
    )


def load_spectral_field(path) -> SpectralField:
    shape, spacing, beta, h_t, t_ext, frames = _unpack_container(path, MAGIC_SPECTRAL)
    return SpectralField(frames.reshape(frames.shape[0], *shape), spacing, beta, h_t, t_ext)


def save_field(path, field: Field) -> None:
    Path(path).write_bytes(
        _pack_container(
            MAGIC_FIELD,
            field.shape,
            field.spacing,
            0.0,
            0.0,
            None,
            field.values.reshape(1, -1),
        )
    )


def load_field(path) -> Field:
    shape, spacing, _, _, _, frames = _unpack_container(path, MAGIC_FIELD)
    if frames.shape[0] != 1:
        raise InputError(f"{path}: a field container must hold exactly 1 frame")
    return Field(frames.reshape(shape), spacing)


def _sidecar_path(pfld_path) -> Path:
    return Path(pfld_path).with_suffix(".json")


def save_eigenpair(pfld_path, pair: EigenPair) -> None:
    """Write the field container plus its JSON sidecar (same stem, .json)."""
    save_field(pfld_path, pair.phi)
    meta = {
        "p": pair.p,
        "lambda": pair.lam,
        "residual": pair.residual,
        "provenance": pair.provenance,
        "converged": pair.converged,
    }
    _sidecar_path(pfld_path).write_text(json.dumps(meta, indent=2) + "\n")


def load_eigenpair(pfld_path) -> EigenPair:
    phi = load_field(pfld_path)
    sidecar = _sidecar_path(pfld_path)
    try:
        meta = json.loads(sidecar.read_text())
    except FileNotFoundError:
        raise InputError(f"{sidecar}: eigenpair sidecar missing") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{sidecar}: invalid JSON ({e})") from None
    try:
        return EigenPair(
            phi=phi,
            lam=float(meta["lambda"]),
            p=float(meta["p"]),
            residual=float(meta["residual"]),
            provenance=str(meta["provenance"]),
            converged=bool(meta.get("converged", True)),
        )
    except KeyError as e:
        raise InputError(f"{sidecar}: missing key {e}") from None


def _pgm_tokens(data: bytes):
    """Header tokens, skipping whitespace and # comments; yields (token, end)."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < n and data[j : j + 1] not in b" \t\r\n":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path) -> Field:
    """Read P2/P5 grayscale, normalized to [0, 1] by the stated maxval."""
    data = Path(path).read_bytes()
    toks = _pgm_tokens(data)
    try:
        (kind, _) = next(toks)
        (w_tok, _) = next(toks)
        (h_tok, _) = next(toks)
        (max_tok, max_end) = next(toks)
    except StopIteration:
        raise InputError(f"{path}: incomplete PGM header") from None
    if kind not in (b"P2", b"P5"):
        raise InputError(f"{path}: not a PGM file (magic {kind!r})")
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise InputError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise InputError(f"{path}: invalid PGM dimensions/maxval")
    npix = width * height
    if kind == b"P5":
        raster = data[max_end + 1 :]
        if maxval < 256:
            if len(raster) != npix:
                raise InputError(f"{path}: raster size mismatch")
            vals = np.frombuffer(raster, dtype=np.uint8)
        else:
            if len(raster) != 2 * npix:
                raise InputError(f"{path}: raster size mismatch")
            vals = np.frombuffer(raster, dtype=">u2")
    else:
        try:
            vals = np.array([int(t) for t, _ in toks], dtype=np.int64)
        except ValueError:
            raise InputError(f"{path}: malformed P2 sample") from None
        if vals.size != npix:
            raise InputError(f"{path}: expected {npix} samples, got {vals.size}")
    if vals.max(initial=0) > maxval:
        raise InputError(f"{path}: sample exceeds maxval {maxval}")
    values = vals.astype(np.float64).reshape(height, width) / maxval
    return Field(values)


def write_pgm(path, field: Field, maxval: int = 255) -> None:
    """Write 8-bit P5, rescaling the value range onto [0, maxval].

    A constant field maps to all zeros. The rescaling is lossy by design;
    write the raw values to a field container alongside when exactness
    matters.
    """
    if field.ndim != 2:
        raise InputError("PGM output needs a 2D field")
    if not (0 < maxval < 256):
        raise InputError(f"maxval must lie in [1, 255], got {maxval}")
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        scaled = np.rint((v - lo) / (hi - lo) * maxval)
    else:
        scaled = np.zeros_like(v)
    h, w = v.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode()
    Path(path).write_bytes(header + scaled.astype(np.uint8).tobytes())


def read_signal_csv(path) -> Field:
    """Read a single-column series of floats, one value per line.

    Blank lines and lines starting with # are skipped.
    """
    values = []
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e}") from None
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise InputError(f"{path}:{k}: not a number: {line!r}") from None
    if len(values) < 2:
        raise InputError(f"{path}: need at least 2 samples, got {len(values)}")
    return Field(np.asarray(values))


def write_signal_csv(path, field: Field) -> None:
    if field.ndim != 1:
        raise InputError("signal CSV output needs a 1D field")
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in field.values))


def write_spectrum_csv(path, spec: Spectrum) -> None:
    """Header exactly `t,S`, one row per sample, repr precision."""
    rows = ["t,S"]
    for t, s in zip(spec.times, spec.values):
        rows.append(f"{float(t)!r},{float(s)!r}")
    Path(path).write_text("\n".join(rows) + "\n")


def read_spectrum_csv(path) -> Spectrum:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise InputError(f"{path}: {e}") from None
    if not lines or lines[0] != "t,S":
        raise InputError(f"{path}: missing `t,S` header")
    ts, ss = [], []
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            t_str, s_str = line.split(",")
            ts.append(float(t_str))
            ss.append(float(s_str))
        except ValueError:
            raise InputError(f"{path}:{k}: malformed row {line!r}") from None
    if len(ts) < 2:
        raise InputError(f"{path}: need at least 2 rows")
    t = np.asarray(ts)
    steps = np.diff(t)
    if t[0] != 0.0 or steps.min() <= 0 or not np.allclose(steps, steps[0], rtol=1e-9):
        raise InputError(f"{path}: time axis must be uniform and start at 0")
    return Spectrum(np.asarray(ss), float(steps[0]))
