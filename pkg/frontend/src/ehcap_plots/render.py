"""Figure specs, CSV schema checks, and matplotlib rendering.

Each figure kind names the CSV columns it needs; a mismatch aborts with a
column diff before any file is written. Values are plotted exactly as read
(display-level selections like the annotated minimum aside, nothing is
recomputed). Layout is fixed: same figure size, DPI, scales, and salted
SVG ids on every run.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (6.4, 4.2)
_DPI = 150
_RATIO_LINE = 0.7473

SCHEMAS = {
    "eta_ratio": ("S", "smith", "epi", "upper", "ratio"),
    "throughput_sweep": ("q", "mu", "upper", "bernoulli_lb", "genbern_lb",
                         "binquant_lb", "genbern_mc", "genbern_stderr",
                         "binquant_mc", "binquant_stderr"),
    "gap_branches": ("q", "binquant", "genbern", "envelope"),
}


class SchemaMismatchError(ValueError):
    """CSV columns do not match the figure kind's schema."""

    def __init__(self, kind: str, missing, unexpected):
        self.missing = tuple(missing)
        self.unexpected = tuple(unexpected)
        parts = [f"column mismatch for {kind}: missing {list(self.missing)}"]
        if self.unexpected:
            parts.append(f"unexpected {list(self.unexpected)}")
        super().__init__("; ".join(parts))


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which CSV, which figure kind, where to write."""

    input_csv: str
    figure_kind: str
    output_path: str

    def __post_init__(self):
        if self.figure_kind not in SCHEMAS:
            raise ValueError(
                f"unknown figure_kind {self.figure_kind!r}; "
                f"expected one of {sorted(SCHEMAS)}"
            )

    @classmethod
    def from_json(cls, obj: dict) -> "FigureSpec":
        keys = {"input_csv", "figure_kind", "output_path"}
        if not isinstance(obj, dict) or set(obj) != keys:
            raise ValueError(f"figure spec must have exactly the keys {sorted(keys)}")
        return cls(str(obj["input_csv"]), str(obj["figure_kind"]),
                   str(obj["output_path"]))


def read_table(path) -> np.ndarray:
    """Load a CSV with '#' metadata lines into a named record array."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValueError(f"no data rows in {path}")
    data = np.genfromtxt(io.StringIO("\n".join(lines)), delimiter=",", names=True)
    return np.atleast_1d(data)


def _check_schema(kind: str, data: np.ndarray) -> None:
    present = set(data.dtype.names or ())
    wanted = set(SCHEMAS[kind])
    if wanted - present:
        raise SchemaMismatchError(kind, sorted(wanted - present),
                                  sorted(present - wanted))


def _eta_ratio_figure(data: np.ndarray):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(data["S"], data["ratio"], lw=1.5,
            label="discrete-input capacity / half-log bound")
    ax.set_xscale("log")
    ax.axhline(_RATIO_LINE, color="crimson", ls="--", lw=1.0,
               label=f"{_RATIO_LINE}")
    i = int(np.argmin(data["ratio"]))
    ax.plot(data["S"][i], data["ratio"][i], "kv", ms=5)
    ax.annotate(f"min = {data['ratio'][i]:.4f}",
                xy=(float(data["S"][i]), float(data["ratio"][i])),
                xytext=(0, -18), textcoords="offset points",
                ha="center", fontsize=9)
    ax.margins(y=0.15)
    ax.set_xlabel("amplitude constraint S")
    ax.set_ylabel("capacity ratio")
    ax.legend(loc="lower right", fontsize=9)
    return fig


def _throughput_sweep_figure(data: np.ndarray):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    q = data["q"]
    ax.plot(q, data["upper"], lw=1.8, label="upper bound")
    analytic = (("bernoulli_lb", "Bernoulli lower bound", "--"),
                ("genbern_lb", "generalized-Bernoulli lower bound", "-."),
                ("binquant_lb", "binary-quantization lower bound", ":"))
    for column, label, style in analytic:
        y = data[column]
        mask = np.isfinite(y)
        if mask.any():
            ax.plot(q[mask], y[mask], lw=1.0, ls=style, label=label)
    ax.errorbar(q, data["genbern_mc"], yerr=data["genbern_stderr"], fmt="o",
                ms=4, capsize=3, lw=1.0, label="generalized-Bernoulli MC")
    ax.errorbar(q, data["binquant_mc"], yerr=data["binquant_stderr"], fmt="s",
                ms=4, capsize=3, lw=1.0, label="binary-quantization MC")
    ax.set_xlabel("q")
    ax.set_ylabel("throughput (bits/use)")
    ax.legend(loc="best", fontsize=8)
    return fig


def _gap_branches_figure(data: np.ndarray):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    q = data["q"]
    ax.plot(q, data["binquant"], lw=1.0, ls="--", label="binary-quantization branch")
    ax.plot(q, data["genbern"], lw=1.0, ls=":", label="generalized-Bernoulli branch")
    ax.plot(q, data["envelope"], lw=1.8, label="envelope")
    ax.set_xlabel("q")
    ax.set_ylabel("gap (bits)")
    ax.legend(loc="best", fontsize=9)
    return fig


_BUILDERS = {
    "eta_ratio": _eta_ratio_figure,
    "throughput_sweep": _throughput_sweep_figure,
    "gap_branches": _gap_branches_figure,
}


def render(spec: FigureSpec) -> tuple[str, str]:
    """Render one figure; returns the written (png_path, svg_path)."""
    data = read_table(spec.input_csv)
    _check_schema(spec.figure_kind, data)
    base, ext = os.path.splitext(spec.output_path)
    if ext not in (".png", ".svg"):
        base = spec.output_path
    png_path, svg_path = base + ".png", base + ".svg"
    with matplotlib.rc_context({"svg.hashsalt": "ehcap-plots"}):
        fig = _BUILDERS[spec.figure_kind](data)
        try:
            fig.savefig(png_path, dpi=_DPI)
            fig.savefig(svg_path, metadata={"Date": None})
        finally:
            plt.close(fig)
    return png_path, svg_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot.py",
        description="Render a figure from an ehcap CSV artifact.",
    )
    parser.add_argument("--spec", required=True, help="figure spec JSON file")
    args = parser.parse_args(argv)
    try:
        with open(args.spec) as fh:
            spec = FigureSpec.from_json(json.load(fh))
        png_path, svg_path = render(spec)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(png_path)
    print(svg_path)
    return 0
