"""Figure rendering for the CLI report path (Agg backend, file output only).

PNG metadata is pinned so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import Field

__all__ = [
    "save_spectrum_plot",
    "save_decay_plot",
    "save_field_image",
    "save_fields_figure",
]

_META = {"Software": "plapspec"}
_DPI = 110


def _finish(fig, path) -> None:
    fig.savefig(path, metadata=_META, dpi=_DPI)
    plt.close(fig)


def save_spectrum_plot(path, times, values, peak_time=None) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(times, values, lw=1.0)
    if peak_time is not None:
        ax.axvline(peak_time, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("S(t)")
    ax.set_title("spectrum")
    fig.tight_layout()
    _finish(fig, path)


def save_decay_plot(path, times, norms, extinction=None) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(times, norms, lw=1.0)
    if extinction is not None:
        ax.axvline(extinction, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("|u(t)|")
    ax.set_title("norm decay")
    fig.tight_layout()
    _finish(fig, path)


def _draw_field(ax, field: Field, title: str) -> None:
    if field.ndim == 2:
        ax.imshow(field.values, cmap="gray", interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
    else:
        ax.plot(field.values, lw=1.0)
    ax.set_title(title, fontsize=9)


def save_field_image(path, field: Field, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    _draw_field(ax, field, title)
    fig.tight_layout()
    _finish(fig, path)


def save_fields_figure(path, fields, titles) -> None:
    """One row of panels, e.g. decomposition bands or demo stages."""
    n = len(fields)
    fig, axes = plt.subplots(1, n, figsize=(3.0 * n, 3.2))
    axes = np.atleast_1d(axes)
    for ax, f, title in zip(axes, fields, titles):
        _draw_field(ax, f, title)
    fig.tight_layout()
    _finish(fig, path)
