"""Static figures written next to the CSV outputs."""

from __future__ import annotations

import math
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import SweepRow  # noqa: E402


def _save(fig, path: str | os.PathLike) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(rows: Sequence[SweepRow], path: str | os.PathLike,
               b1q: float | None = None, title: str = "") -> None:
    b1 = np.array([r.b1 for r in rows])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(b1, [r.r_measured for r in rows], "o", label="simulation")
    ax.plot(b1, [r.r_predicted for r in rows], "-", label="normal form")
    if b1q is not None:
        ax.axvline(b1q, ls="--", color="gray", lw=1)
    ax.set_xlabel("$b_1$")
    ax.set_ylabel("$r$")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_snapshot(u: np.ndarray, path: str | os.PathLike, stride: int = 100, first: int = 50) -> None:
    """``u_k mod 2 pi`` for every ``stride``-th node starting at ``first``."""
    k = np.arange(1, u.size + 1)
    sel = slice(first - 1, None, stride) if u.size >= first else slice(None)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(k[sel], np.mod(u[sel], 2 * math.pi), "o")
    ax.set_xlabel("$k$")
    ax.set_ylabel(r"$u_k$ mod $2\pi$")
    ax.set_ylim(0, 2 * math.pi)
    _save(fig, path)


def plot_mode_history(times: np.ndarray, r: np.ndarray, psi: np.ndarray, path: str | os.PathLike) -> None:
    fig, (a0, a1) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 4.8))
    a0.plot(times, r)
    a0.set_ylabel("$r$")
    a1.plot(times, psi)
    a1.set_ylabel(r"$\psi$")
    a1.set_xlabel("$t$")
    _save(fig, path)
