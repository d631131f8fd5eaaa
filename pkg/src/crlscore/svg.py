"""Radar and origami plots as standalone SVG 1.1 documents."""

import math
import xml.etree.ElementTree as ET
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from crlscore.model import ValidationError
from crlscore.scoring import ScoreCard

CANVAS = 800
RADIUS = 350.0
CENTER = (CANVAS / 2.0, CANVAS / 2.0)
FILL_OPACITY = 0.2
LABEL_OFFSET = 18.0
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
)
SVG_NS = "http://www.w3.org/2000/svg"

PlotKind = Literal["radar", "origami"]


@dataclass(frozen=True)
class PlotSpec:
    kind: PlotKind
    axes: tuple[str, ...]
    polygons: Mapping[str, tuple[float, ...]]
    h: float | None = None

    def __post_init__(self):
        if self.kind not in ("radar", "origami"):
            raise ValidationError(f"unknown plot kind: {self.kind}")
        if len(self.axes) < 3:
            raise ValidationError(f"need at least 3 axes, got {len(self.axes)}")
        for name, values in self.polygons.items():
            if len(values) != len(self.axes):
                raise ValidationError(
                    f"{name}: {len(values)} values for {len(self.axes)} axes"
                )
        if self.kind == "origami" and (self.h is None or not 0 < self.h <= 1):
            raise ValidationError("origami plots need h in (0, 1]")


def plot_from_scorecard(card: ScoreCard, kind: PlotKind = "radar") -> PlotSpec:
    return PlotSpec(
        kind=kind,
        axes=tuple(a.name for a in card.axes),
        polygons={
            m: tuple(float(v) for v in card.normalized[i])
            for i, m in enumerate(card.models)
        },
        h=card.h if kind == "origami" else None,
    )


def polygon_vertices(
    values: Sequence[float], kind: PlotKind = "radar", h: float | None = None
) -> np.ndarray:
    """Unit-radius vertices around the origin, axis i at angle 2*pi*i/N.

    Origami polygons alternate data vertices with auxiliary vertices of
    radius h halfway between neighbouring axes, so they have 2N corners.
    """
    r = np.asarray(values, dtype=float)
    n = r.size
    angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    if kind == "radar":
        radii, thetas = r, angles
    else:
        radii = np.column_stack([r, np.full(n, h)]).ravel()
        thetas = np.column_stack([angles, angles + np.pi / n]).ravel()
    return np.column_stack([radii * np.cos(thetas), radii * np.sin(thetas)])


def shoelace_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def _path_data(points: np.ndarray) -> str:
    pixels = points * RADIUS + np.array(CENTER)
    coords = [f"{x:.6f},{y:.6f}" for x, y in pixels]
    return "M " + " L ".join(coords) + " Z"


def _anchor(theta: float) -> str:
    c = math.cos(theta)
    if c > 0.3:
        return "start"
    if c < -0.3:
        return "end"
    return "middle"


def emit_svg(plot: PlotSpec) -> str:
    """Render every model as one closed path over the shared axes."""
    n = len(plot.axes)
    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "version": "1.1",
            "width": str(CANVAS),
            "height": str(CANVAS),
            "viewBox": f"0 0 {CANVAS} {CANVAS}",
        },
    )
    axes = ET.SubElement(root, "g", {"class": "axes", "stroke": "#999999"})
    labels = ET.SubElement(root, "g", {"class": "labels", "font-size": "14"})
    cx, cy = CENTER
    for i, name in enumerate(plot.axes):
        theta = 2.0 * math.pi * i / n
        ex, ey = cx + RADIUS * math.cos(theta), cy + RADIUS * math.sin(theta)
        ET.SubElement(
            axes,
            "line",
            {"x1": f"{cx:g}", "y1": f"{cy:g}", "x2": f"{ex:.6f}", "y2": f"{ey:.6f}"},
        )
        text = ET.SubElement(
            labels,
            "text",
            {
                "x": f"{cx + (RADIUS + LABEL_OFFSET) * math.cos(theta):.2f}",
                "y": f"{cy + (RADIUS + LABEL_OFFSET) * math.sin(theta):.2f}",
                "text-anchor": _anchor(theta),
            },
        )
        text.text = name

    shapes = ET.SubElement(root, "g", {"class": plot.kind})
    for k, (model, values) in enumerate(plot.polygons.items()):
        color = PALETTE[k % len(PALETTE)]
        path = ET.SubElement(
            shapes,
            "path",
            {
                "d": _path_data(polygon_vertices(values, plot.kind, plot.h)),
                "stroke": color,
                "fill": color,
                "fill-opacity": f"{FILL_OPACITY:g}",
                "stroke-width": "2",
            },
        )
        ET.SubElement(path, "title").text = model
    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def write_svg(plot: PlotSpec, path: str | Path) -> None:
    Path(path).write_text(emit_svg(plot), encoding="utf-8")
