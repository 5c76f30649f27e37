"""Figure output: PGM space-time diagrams and matplotlib report figures."""

from __future__ import annotations

import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

# 0 white, 1 black, 2 red, 3 blue, 4 yellow
STATE_RGB = ["#ffffff", "#000000", "#ff0000", "#0000ff", "#ffff00"]
# Rec. 601 luma of the same colours, so every state keeps a distinct grey level
STATE_GREY = np.array([255, 0, 76, 29, 226], dtype=np.uint8)


def write_pgm(path, diagram: np.ndarray) -> None:
    """Binary P5 PGM, one byte per cell, time 0 drawn as the bottom row."""
    diagram = np.asarray(diagram)
    if diagram.max(initial=0) >= len(STATE_GREY):
        raise ValueError("PGM palette covers at most 5 states")
    pixels = STATE_GREY[diagram.astype(np.intp)][::-1]
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels).tobytes())


def read_pgm(path) -> np.ndarray:
    """Decode a PGM written by :func:`write_pgm` back into states (time 0 first)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit P5 PGM")
    w, h = (int(v) for v in dims.split())
    pixels = np.frombuffer(rest, dtype=np.uint8, count=w * h).reshape(h, w)[::-1]
    lut = np.full(256, -1, dtype=np.int16)
    lut[STATE_GREY] = np.arange(len(STATE_GREY))
    states = lut[pixels]
    if (states < 0).any():
        raise ValueError("unexpected grey level")
    return states.astype(np.int8)


def plot_space_time(diagram: np.ndarray, path, n: int, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 8 * diagram.shape[0] / max(diagram.shape[1], 1) + 0.6))
    cmap = ListedColormap(STATE_RGB[:n])
    ax.imshow(diagram, cmap=cmap, vmin=-0.5, vmax=n - 0.5, origin="lower",
              interpolation="nearest", aspect="auto")
    ax.set_xlabel("site")
    ax.set_ylabel("time")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_table(name: str, rows: list, path) -> None:
    """Estimated state probabilities against time, with the published values as markers."""
    times = sorted({r["time"] for r in rows})
    states = sorted({r["state"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in states:
        pts = [r for r in rows if r["state"] == s]
        pts.sort(key=lambda r: r["time"])
        color = STATE_RGB[s] if s else "#888888"
        ax.errorbar([r["time"] for r in pts], [r["estimate"] for r in pts],
                    yerr=[r["half_width"] for r in pts], color=color, marker="o",
                    label=f"state {s}", capsize=3)
        ax.plot([r["time"] for r in pts], [r["published"] for r in pts], ls="none",
                marker="x", color=color, ms=8)
    ax.set_xticks(times)
    ax.set_xlabel("t")
    ax.set_ylabel("P(F^t(x)_0 = state)")
    ax.set_title(f"{name} (x: published values)")
    ax.legend(fontsize="small")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def plot_convergence(entries: list, path) -> None:
    ns = [e["n"] for e in entries]
    err = [max(e["linf_error"], 1e-16) for e in entries]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(ns, err, "o-", label="L-inf distance to prey weights")
    ref = err[0] * (np.asarray(ns, dtype=float) / ns[0]) ** -0.25
    ax.loglog(ns, ref, "k--", lw=0.8, label="n^(-1/4) reference")
    ax.set_xlabel("walk length n")
    ax.legend(fontsize="small")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def plot_tail_histogram(hist: dict, n: int, path) -> None:
    ms = sorted(m for m in hist if m is not None)
    counts = [hist[m] for m in ms]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(ms, counts, width=1.0)
    ax.axvline(n ** 0.25, color="r", ls="--", label="n^(1/4)")
    ax.set_xscale("symlog")
    ax.set_xlabel("3-tail length m")
    ax.set_ylabel("count")
    ax.legend()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
