"""Command-line surface: flow, transform, spectrum, filter, decompose, eigen,
demo-noise.

Every command writes its outputs, a manifest.json describing the run, and
matplotlib figures into --out. All numeric paths are single-threaded with a
fixed reduction order, so reruns of the same manifest produce byte-identical
outputs; --deterministic exists to record that guarantee in the manifest.

Exit codes: 0 success, 2 input error, 3 parameter error, 4 instability,
5 non-convergence (see README for the table).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eigen import EigenConfig, generate_eigenfunction, rescale_contrast
from .errors import ConvergenceError, InputError, ParameterError, PlapspecError
from .flow import FlowConfig, extinction_time, run_p_flow
from .grid import Field, norm, project_kernel_orthogonal
from .io import (
    load_eigenpair,
    load_trajectory,
    read_pgm,
    read_signal_csv,
    save_eigenpair,
    save_field,
    save_spectral_field,
    save_trajectory,
    write_pgm,
    write_signal_csv,
    write_spectrum_csv,
)
from .plots import (
    save_decay_plot,
    save_field_image,
    save_fields_figure,
    save_spectrum_plot,
)
from .transform import (
    FilterSpec,
    apply_filter,
    band_decompose,
    flow_spectrum,
    inverse_transform,
    p_transform,
)

__all__ = ["main"]

_FILTER_CHOICES = ("ideal_lpf", "ideal_hpf", "band_pass", "band_stop", "liouville")
_DEFAULT_EDGES = "0.015,0.075,0.2"


def _load_input(path_str: str):
    path = Path(path_str)
    suffix = path.suffix.lower()
    try:
        if suffix == ".pgm":
            return read_pgm(path), "pgm"
        if suffix == ".csv":
            return read_signal_csv(path), "csv"
    except OSError as e:
        raise InputError(f"{path}: {e}") from None
    raise InputError(f"{path}: unsupported input format {suffix!r}; expected .pgm or .csv")


def _load_traj(path_str: str):
    try:
        return load_trajectory(path_str)
    except OSError as e:
        raise InputError(f"{path_str}: {e}") from None


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_tmax(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"--tmax must be a number or 'auto', got {text!r}") from None


def _parse_edges(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ParameterError(f"--edges must be comma-separated numbers, got {text!r}") from None


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ParameterError(f"--shape must be comma-separated integers, got {text!r}") from None
    if len(shape) not in (1, 2) or any(n < 2 for n in shape):
        raise ParameterError(f"--shape needs 1 or 2 axes of at least 2 nodes, got {text!r}")
    return shape


def _write_manifest(out: Path, command: str, args, **extra) -> None:
    manifest = {
        "tool": "plapspec",
        "version": __version__,
        "command": command,
        "out": str(args.out),
        "deterministic": bool(getattr(args, "deterministic", False)),
        "input": None,
        "input_format": None,
        "p": None,
        "dt": None,
        "t_max": None,
        "record_stride": None,
        "extinction_tol": None,
        "edges": None,
        "filter": None,
        "seed": None,
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _save_field_outputs(out: Path, stem: str, field: Field) -> None:
    """Raw container always; PGM for 2D, CSV for 1D alongside it."""
    save_field(out / f"{stem}.pfld", field)
    if field.ndim == 2:
        write_pgm(out / f"{stem}.pgm", field)
    else:
        write_signal_csv(out / f"{stem}.csv", field)


def cmd_flow(args) -> int:
    f, fmt = _load_input(args.input)
    t_max = _parse_tmax(args.tmax)
    cfg = FlowConfig(
        p=args.p,
        dt=args.dt,
        t_max=t_max,
        extinction_tol=args.tol,
        record_stride=args.stride,
        normalized=args.normalized,
    )
    traj = run_p_flow(f, cfg)
    out = _outdir(args)
    save_trajectory(out / "trajectory.pflw", traj)
    save_decay_plot(
        out / "decay.png", traj.times, traj.frame_norms(), traj.extinction_time_empirical
    )
    _write_manifest(
        out,
        "flow",
        args,
        input=args.input,
        input_format=fmt,
        p=args.p,
        dt=args.dt,
        t_max="auto" if t_max is None else t_max,
        record_stride=args.stride,
        extinction_tol=args.tol,
        normalized=args.normalized,
    )
    t_ext = traj.extinction_time_empirical
    print(f"extinction_time={'none' if t_ext is None else repr(t_ext)}")
    print(f"mass_drift={traj.mass_drift!r}")
    print(f"frames={traj.nframes}")
    return 0


def cmd_transform(args) -> int:
    traj = _load_traj(args.trajectory)
    sf = p_transform(traj)
    out = _outdir(args)
    save_spectral_field(out / "spectral.pspc", sf)
    spec = flow_spectrum(traj.frame(0), traj)
    k_peak = int(np.argmax(np.abs(spec.values)))
    save_field_image(
        out / "phi_peak.png",
        Field(sf.phi[k_peak], sf.spacing),
        title=f"phi at t={spec.times[k_peak]:.4g}",
    )
    _write_manifest(out, "transform", args, input=args.trajectory, input_format="pflw", p=traj.p)
    print(f"beta={sf.beta!r}")
    print(f"peak_time={float(spec.times[k_peak])!r}")
    return 0


def cmd_spectrum(args) -> int:
    traj = _load_traj(args.trajectory)
    spec = flow_spectrum(traj.frame(0), traj)
    out = _outdir(args)
    write_spectrum_csv(out / "spectrum.csv", spec)
    k_peak = int(np.argmax(np.abs(spec.values)))
    save_spectrum_plot(out / "spectrum.png", spec.times, spec.values, spec.times[k_peak])
    _write_manifest(out, "spectrum", args, input=args.trajectory, input_format="pflw", p=traj.p)
    print(f"peak_time={float(spec.times[k_peak])!r}")
    print(f"spectrum_integral={spec.integral()!r}")
    return 0


def cmd_filter(args) -> int:
    traj = _load_traj(args.trajectory)
    spec = FilterSpec(kind=args.filter_kind, t1=args.t1, t2=args.t2)
    sf = p_transform(traj)
    filtered = apply_filter(sf, spec)
    out = _outdir(args)
    _save_field_outputs(out, "filtered", filtered)
    save_field_image(out / "filtered.png", filtered, title=args.filter_kind)
    _write_manifest(
        out,
        "filter",
        args,
        input=args.trajectory,
        input_format="pflw",
        p=traj.p,
        filter={"kind": args.filter_kind, "t1": args.t1, "t2": args.t2},
    )
    if args.filter_kind == "liouville":
        # The liouville response evaluates the flow at t1; report the match
        # against the nearest recorded frame.
        k = min(int(round(args.t1 / traj.dt_effective)), traj.nframes - 1)
        ref = traj.frame(k)
        denom = norm(ref)
        if denom > 0.0:
            dev = norm(ref.with_values(filtered.values - ref.values)) / denom
            print(f"liouville_frame_deviation={dev!r}")
    print(f"filtered_norm={norm(filtered)!r}")
    return 0


def cmd_decompose(args) -> int:
    traj = _load_traj(args.trajectory)
    edges = _parse_edges(args.edges)
    sf = p_transform(traj)
    bands = band_decompose(sf, edges)
    recon = inverse_transform(sf)
    out = _outdir(args)
    for i, band in enumerate(bands):
        _save_field_outputs(out, f"band_{i:02d}", band)
    total = np.zeros(recon.shape)
    for band in bands:
        total += band.values
    denom = norm(recon)
    dev = norm(recon.with_values(total - recon.values)) / denom if denom > 0.0 else 0.0
    ok = dev <= 1e-12
    lines = [
        f"bands={len(bands)}",
        f"edges={','.join(repr(e) for e in edges)}",
        f"band_norms={','.join(repr(norm(b)) for b in bands)}",
        f"sum_rel_deviation={dev!r}",
        f"status={'PASS' if ok else 'FAIL'}",
    ]
    (out / "sum_check.txt").write_text("\n".join(lines) + "\n")
    save_fields_figure(
        out / "bands.png", bands, [f"band {i}" for i in range(len(bands))]
    )
    _write_manifest(
        out,
        "decompose",
        args,
        input=args.trajectory,
        input_format="pflw",
        p=traj.p,
        edges=edges,
    )
    print(f"sum_check={'PASS' if ok else 'FAIL'}")
    print(f"sum_rel_deviation={dev!r}")
    return 0


def _seed_field(shape: tuple[int, ...], seed: int) -> Field:
    """Smooth low-mode seed plus a little seeded noise."""
    rng = np.random.default_rng(seed)
    if len(shape) == 1:
        (n,) = shape
        base = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    else:
        nx, ny = shape
        cx = np.cos(np.pi * (np.arange(nx) + 0.5) / nx)
        cy = np.cos(np.pi * (np.arange(ny) + 0.5) / ny)
        base = np.add.outer(cx, cy)
    return Field(base + 0.2 * rng.standard_normal(shape))


def cmd_eigen(args) -> int:
    shape = _parse_shape(args.shape)
    cfg = EigenConfig(dt=args.dt, stages=args.stages, max_cycles=args.cycles)
    pair = generate_eigenfunction(_seed_field(shape, args.seed), args.p, cfg)
    out = _outdir(args)
    save_eigenpair(out / "eigenpair.pfld", pair)
    save_field_image(out / "eigen.png", pair.phi, title=f"lambda={pair.lam:.6g}")
    _write_manifest(
        out,
        "eigen",
        args,
        p=args.p,
        dt=args.dt,
        seed=args.seed,
        shape=list(shape),
        stages=args.stages,
        cycles=args.cycles,
    )
    print(f"lambda={pair.lam!r}")
    print(f"residual={pair.residual!r}")
    print(f"converged={pair.converged}")
    if not pair.converged:
        print("warning: iteration budget exhausted before convergence", file=sys.stderr)
        return ConvergenceError.exit_code
    return 0


def cmd_demo_noise(args) -> int:
    pair = load_eigenpair(args.eigenpair)
    if args.lambda_target is not None:
        clean = rescale_contrast(pair, args.lambda_target)
        lam = args.lambda_target
    else:
        clean = pair.phi
        lam = pair.lam
    t_pred = extinction_time(lam, pair.p)
    if t_pred is None:
        raise ParameterError(f"eigenpair with lambda={lam} has no finite extinction")
    t1 = 0.55 * t_pred if args.t1 is None else args.t1
    rng = np.random.default_rng(args.seed)
    noisy = Field(
        clean.values + args.noise_amp * rng.uniform(0.0, 1.0, clean.shape), clean.spacing
    )
    cfg = FlowConfig(
        p=pair.p, dt=args.dt, t_max=None, extinction_tol=args.tol, record_stride=args.stride
    )
    traj = run_p_flow(noisy, cfg)
    sf = p_transform(traj)
    recovered = apply_filter(sf, FilterSpec(kind="ideal_lpf", t1=t1))
    noise_part = apply_filter(sf, FilterSpec(kind="ideal_hpf", t1=t1))
    clean0 = project_kernel_orthogonal(clean)
    if float(np.std(recovered.values)) > 0.0 and float(np.std(clean0.values)) > 0.0:
        corr = float(np.corrcoef(recovered.values.ravel(), clean0.values.ravel())[0, 1])
    else:
        corr = 0.0
    out = _outdir(args)
    _save_field_outputs(out, "noisy", project_kernel_orthogonal(noisy))
    _save_field_outputs(out, "recovered", recovered)
    _save_field_outputs(out, "noise_component", noise_part)
    save_fields_figure(
        out / "demo.png",
        [clean0, project_kernel_orthogonal(noisy), recovered, noise_part],
        ["clean", "noisy", "recovered", "noise part"],
    )
    report = [
        f"t1={t1!r}",
        f"lambda={lam!r}",
        f"predicted_extinction={t_pred!r}",
        f"empirical_extinction={traj.extinction_time_empirical!r}",
        f"correlation={corr!r}",
    ]
    (out / "report.txt").write_text("\n".join(report) + "\n")
    _write_manifest(
        out,
        "demo-noise",
        args,
        input=args.eigenpair,
        input_format="pfld",
        p=pair.p,
        dt=args.dt,
        record_stride=args.stride,
        extinction_tol=args.tol,
        seed=args.seed,
        noise_amp=args.noise_amp,
        lambda_target=args.lambda_target,
        filter={"kind": "ideal_lpf/ideal_hpf", "t1": t1, "t2": None},
    )
    print(f"correlation={corr!r}")
    print(f"t1={t1!r}")
    return 0


def _add_common(sub) -> None:
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument(
        "--deterministic",
        action="store_true",
        help="record the determinism guarantee in the manifest (outputs are "
        "byte-stable either way; every numeric path uses a fixed reduction order)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plapspec",
        description="Nonlinear spectral decomposition via the p-Laplacian flow",
    )
    parser.add_argument("--version", action="version", version=f"plapspec {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("flow", help="run the p-flow on a PGM image or CSV signal")
    s.add_argument("input", help="input file (.pgm or .csv)")
    s.add_argument("--p", type=float, required=True, help="homogeneity parameter in (1, 2]")
    s.add_argument("--dt", type=float, default=1e-4, help="time step (default 1e-4)")
    s.add_argument("--tmax", default="auto", help="horizon or 'auto' (default auto)")
    s.add_argument("--stride", type=int, default=1, help="record every k-th step")
    s.add_argument("--tol", type=float, default=1e-3, help="relative extinction threshold")
    s.add_argument("--normalized", action="store_true", help="zero-homogeneous variant")
    _add_common(s)
    s.set_defaults(func=cmd_flow)

    s = subs.add_parser("transform", help="spectral field of a trajectory")
    s.add_argument("trajectory", help="trajectory container (.pflw)")
    _add_common(s)
    s.set_defaults(func=cmd_transform)

    s = subs.add_parser("spectrum", help="scalar spectrum S(t) of a trajectory")
    s.add_argument("trajectory", help="trajectory container (.pflw)")
    _add_common(s)
    s.set_defaults(func=cmd_spectrum)

    s = subs.add_parser("filter", help="apply a spectral filter")
    s.add_argument("trajectory", help="trajectory container (.pflw)")
    s.add_argument("--filter-kind", required=True, choices=_FILTER_CHOICES)
    s.add_argument("--t1", type=float, required=True, help="first cutoff time")
    s.add_argument("--t2", type=float, default=None, help="second cutoff time (band kinds)")
    _add_common(s)
    s.set_defaults(func=cmd_filter)

    s = subs.add_parser("decompose", help="band decomposition at percent cutoffs")
    s.add_argument("trajectory", help="trajectory container (.pflw)")
    s.add_argument(
        "--edges",
        default=_DEFAULT_EDGES,
        help=f"comma-separated fractions of the spectrum width (default {_DEFAULT_EDGES})",
    )
    _add_common(s)
    s.set_defaults(func=cmd_decompose)

    s = subs.add_parser("eigen", help="generate an eigenpair from a seeded start")
    s.add_argument("--shape", required=True, help="grid nodes, e.g. 128 or 32,32")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dt", type=float, default=2e-3, help="first-stage step")
    s.add_argument("--stages", type=int, default=6, help="step-shrink stages")
    s.add_argument("--cycles", type=int, default=2000, help="first-stage cycle budget")
    _add_common(s)
    s.set_defaults(func=cmd_eigen)

    s = subs.add_parser("demo-noise", help="noise separation demo on an eigenpair")
    s.add_argument("eigenpair", help="eigenpair container (.pfld with .json sidecar)")
    s.add_argument("--t1", type=float, default=None, help="cutoff (default 0.55 * T)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise-amp", type=float, default=0.3, help="uniform noise amplitude")
    s.add_argument(
        "--lambda-target", type=float, default=None, help="rescale contrast to this eigenvalue"
    )
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--stride", type=int, default=50)
    s.add_argument("--tol", type=float, default=1e-4)
    _add_common(s)
    s.set_defaults(func=cmd_demo_noise)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlapspecError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
