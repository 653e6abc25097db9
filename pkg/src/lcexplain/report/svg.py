"""SVG 1.1 rendering of explanation artifacts.

Output depends only on the artifact and the :class:`PlotSpec`; numbers are
printed with fixed precision so repeated renders are byte-identical. Bars
and points carry ``data-*`` attributes (feature name, value, cumulative
total) so the drawing can be checked without parsing geometry.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..explain_global import CurveSet, ImportanceReport
from ..explain_local import AttributionSet

KINDS = ("importance_bars", "pdp_with_histogram", "ice_spaghetti", "ale_line", "waterfall")
SVG_NS = "http://www.w3.org/2000/svg"

POSITIVE = "#c0392b"
NEGATIVE = "#2e86c1"
NEUTRAL = "#7f8c8d"
LINE = "#1f3a5f"
BAR = "#4a7ab5"
HIST = "#b8c4d6"
FONT = "font-family:sans-serif;font-size:11px"


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    width: int = 640
    height: int = 400
    x_label: str = ""
    y_label: str = ""
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("plot dimensions must be positive")


def default_spec(artifact) -> PlotSpec:
    if isinstance(artifact, ImportanceReport):
        return PlotSpec("importance_bars", x_label=f"increase in {artifact.loss}")
    if isinstance(artifact, AttributionSet):
        return PlotSpec("waterfall", x_label="prediction")
    if isinstance(artifact, CurveSet):
        kind = {"pdp": "pdp_with_histogram", "ice": "ice_spaghetti", "ale": "ale_line"}[artifact.kind]
        y = {"pdp": "average prediction", "ice": "prediction", "ale": "accumulated local effect"}[artifact.kind]
        return PlotSpec(kind, x_label=artifact.feature, y_label=y)
    raise TypeError(f"cannot render {type(artifact).__name__}")


def _n(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t = start + len(ticks) * step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


class _Canvas:
    def __init__(self, spec: PlotSpec):
        self.spec = spec
        self.root = ET.Element("svg", {
            "xmlns": SVG_NS,
            "version": "1.1",
            "width": str(spec.width),
            "height": str(spec.height),
            "viewBox": f"0 0 {spec.width} {spec.height}",
            "data-kind": spec.kind,
        })
        ET.SubElement(self.root, "rect", {"x": "0", "y": "0", "width": str(spec.width),
                                          "height": str(spec.height), "fill": "white"})
        if spec.title:
            self.text(spec.width / 2, 18, spec.title, anchor="middle", style=FONT + ";font-size:14px")

    def group(self, cls: str, parent=None) -> ET.Element:
        return ET.SubElement(self.root if parent is None else parent, "g", {"class": cls})

    def rect(self, parent, x, y, w, h, fill, **data) -> ET.Element:
        attrs = {"x": _n(x), "y": _n(y), "width": _n(max(w, 0.0)), "height": _n(max(h, 0.0)), "fill": fill}
        attrs.update({f"data-{k.replace('_', '-')}": str(v) for k, v in data.items()})
        return ET.SubElement(parent, "rect", attrs)

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0, parent=None, dash=None):
        attrs = {"x1": _n(x1), "y1": _n(y1), "x2": _n(x2), "y2": _n(y2), "stroke": stroke,
                 "stroke-width": _n(width)}
        if dash:
            attrs["stroke-dasharray"] = dash
        return ET.SubElement(self.root if parent is None else parent, "line", attrs)

    def polyline(self, parent, pts, stroke=LINE, width=1.5, opacity=1.0, **data):
        attrs = {"points": " ".join(f"{_n(x)},{_n(y)}" for x, y in pts), "fill": "none",
                 "stroke": stroke, "stroke-width": _n(width)}
        if opacity != 1.0:
            attrs["stroke-opacity"] = _n(opacity)
        attrs.update({f"data-{k.replace('_', '-')}": str(v) for k, v in data.items()})
        return ET.SubElement(parent, "polyline", attrs)

    def text(self, x, y, s, anchor="start", rotate=False, style=FONT, parent=None):
        attrs = {"x": _n(x), "y": _n(y), "text-anchor": anchor, "style": style}
        if rotate:
            attrs["transform"] = f"rotate(-90 {_n(x)} {_n(y)})"
        el = ET.SubElement(self.root if parent is None else parent, "text", attrs)
        el.text = s
        return el

    def tostring(self) -> str:
        ET.indent(self.root, space=" ")
        return ET.tostring(self.root, encoding="unicode") + "\n"


class _Scale:
    def __init__(self, lo, hi, a, b):
        if not hi > lo:
            pad = abs(lo) * 0.05 or 1.0
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.a, self.b = lo, hi, a, b

    def __call__(self, v):
        return self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)


def _x_axis(c: _Canvas, sx: _Scale, y: float, label: str, categories=None):
    g = c.group("x-axis")
    c.line(sx.a, y, sx.b, y, parent=g)
    if categories is not None:
        for pos, lab in categories:
            c.text(sx(pos), y + 14, lab, anchor="middle", parent=g)
    else:
        for t in nice_ticks(sx.lo, sx.hi):
            c.line(sx(t), y, sx(t), y + 4, parent=g)
            c.text(sx(t), y + 15, _tick_label(t), anchor="middle", parent=g)
    if label:
        c.text((sx.a + sx.b) / 2, y + 32, label, anchor="middle", parent=g)


def _y_axis(c: _Canvas, sy: _Scale, x: float, label: str):
    g = c.group("y-axis")
    c.line(x, sy.a, x, sy.b, parent=g)
    for t in nice_ticks(sy.lo, sy.hi):
        c.line(x - 4, sy(t), x, sy(t), parent=g)
        c.text(x - 6, sy(t) + 4, _tick_label(t), anchor="end", parent=g)
    if label:
        c.text(14, (sy.a + sy.b) / 2, label, anchor="middle", rotate=True, parent=g)


def _label_margin(labels, spec: PlotSpec) -> float:
    # ~6.2px per character at 11px sans-serif; never more than 45% of the width
    longest = max((len(t) for t in labels), default=0)
    return min(max(70.0, 12.0 + 6.2 * longest), spec.width * 0.45)


def _padded(lo, hi, frac=0.05):
    span = hi - lo
    pad = span * frac if span > 0 else (abs(hi) * frac or 1.0)
    return lo - pad, hi + pad


def _importance(a: ImportanceReport, spec: PlotSpec) -> str:
    c = _Canvas(spec)
    entries = a.ranked()
    top, bottom, right = 34, spec.height - 44, spec.width - 20
    left = _label_margin([e.name for e in entries], spec)
    lo, hi = min(0.0, *(e.vi for e in entries)), max(0.0, *(e.vi for e in entries))
    sx = _Scale(*_padded(lo, hi), left, right)
    band = (bottom - top) / len(entries)
    g = c.group("bars")
    for i, e in enumerate(entries):
        y = top + i * band + band * 0.15
        x0, x1 = sx(0.0), sx(e.vi)
        c.rect(g, min(x0, x1), y, abs(x1 - x0), band * 0.7, BAR, feature=e.name, value=repr(e.vi), rank=i + 1)
        c.text(left - 6, y + band * 0.35 + 4, e.name, anchor="end")
    c.line(sx(0.0), top, sx(0.0), bottom, dash="3,3")
    _x_axis(c, sx, bottom, spec.x_label)
    return c.tostring()


def _hist_panel(c: _Canvas, a: CurveSet, sx: _Scale, top: float, bottom: float, categorical: bool):
    counts = a.histogram.counts
    peak = max(counts) if counts else 0
    g = c.group("histogram")
    if peak == 0:
        return
    sy = _Scale(0.0, float(peak), bottom, top)
    if categorical:
        width = (sx.b - sx.a) / max(len(counts), 1) * 0.6
        for k, n in enumerate(counts):
            c.rect(g, sx(k) - width / 2, sy(n), width, bottom - sy(n), HIST, bin=k, count=n)
    else:
        edges = a.histogram.edges
        for k, n in enumerate(counts):
            x0, x1 = sx(edges[k]), sx(edges[k + 1])
            c.rect(g, x0, sy(n), x1 - x0, bottom - sy(n), HIST, bin=k, count=n)
    c.text(sx.a - 6, top + 10, f"n={sum(counts)}", anchor="end")


def _curve_frame(a: CurveSet, spec: PlotSpec, with_hist: bool):
    c = _Canvas(spec)
    categorical = a.grid_labels is not None
    left, right, top = 70, spec.width - 20, 34
    bottom = spec.height - 44
    hist_h = (bottom - top) * 0.25 if with_hist else 0.0
    curve_bottom = bottom - hist_h - (10 if with_hist else 0)
    if categorical:
        n = len(a.grid)
        sx = _Scale(-0.5, n - 0.5, left, right)
    else:
        xs = list(a.grid)
        if with_hist and a.histogram.edges:
            xs += [a.histogram.edges[0], a.histogram.edges[-1]]
        sx = _Scale(min(xs), max(xs), left, right)
    return c, sx, categorical, (left, right, top, curve_bottom, bottom)


def _curve_points(a: CurveSet, values, sx, sy, categorical):
    xs = range(len(a.grid)) if categorical else a.grid
    return [(sx(x), sy(v)) for x, v in zip(xs, values)]


def _pdp(a: CurveSet, spec: PlotSpec) -> str:
    c, sx, categorical, (left, right, top, cb, bottom) = _curve_frame(a, spec, with_hist=True)
    vals = a.values
    sy = _Scale(*_padded(min(vals), max(vals)), cb, top)
    g = c.group("curve")
    pts = _curve_points(a, vals, sx, sy, categorical)
    if not categorical:
        c.polyline(g, pts, width=2.0, feature=a.feature)
    for (x, y), z, v in zip(pts, a.grid, vals):
        ET.SubElement(g, "circle", {"cx": _n(x), "cy": _n(y), "r": "2.5", "fill": LINE,
                                    "data-grid": repr(z), "data-value": repr(v)})
    _y_axis(c, sy, left, spec.y_label)
    _hist_panel(c, a, sx, cb + 10, bottom, categorical)
    cats = [(k, lab) for k, lab in enumerate(a.grid_labels)] if categorical else None
    _x_axis(c, sx, bottom, spec.x_label, cats)
    return c.tostring()


def _ice(a: CurveSet, spec: PlotSpec) -> str:
    c, sx, categorical, (left, right, top, cb, bottom) = _curve_frame(a, spec, with_hist=False)
    rows = a.values
    flat = [v for r in rows for v in r]
    sy = _Scale(*_padded(min(flat), max(flat)), cb, top)
    g = c.group("ice-curves")
    opacity = max(0.05, min(0.6, 20.0 / max(len(rows), 1)))
    for inst, r in zip(a.instances or range(len(rows)), rows):
        c.polyline(g, _curve_points(a, r, sx, sy, categorical), stroke=BAR, width=1.0, opacity=opacity,
                   instance=inst)
    mean = [math.fsum(col) / len(rows) for col in zip(*rows)]
    c.polyline(c.group("ice-mean"), _curve_points(a, mean, sx, sy, categorical), stroke=POSITIVE, width=2.5)
    _y_axis(c, sy, left, spec.y_label)
    cats = [(k, lab) for k, lab in enumerate(a.grid_labels)] if categorical else None
    _x_axis(c, sx, bottom, spec.x_label, cats)
    return c.tostring()


def _ale(a: CurveSet, spec: PlotSpec) -> str:
    c, sx, _, (left, right, top, cb, bottom) = _curve_frame(a, spec, with_hist=False)
    sy = _Scale(*_padded(min(a.values), max(a.values)), cb, top)
    g = c.group("curve")
    c.polyline(g, _curve_points(a, a.values, sx, sy, False), width=2.0, feature=a.feature)
    c.line(left, sy(0.0), right, sy(0.0), stroke=NEUTRAL, dash="3,3")
    rug = c.group("bin-edges")
    for e in a.bin_edges or []:
        c.line(sx(e), cb, sx(e), cb - 6, stroke=NEUTRAL, parent=rug)
    _y_axis(c, sy, left, spec.y_label)
    _x_axis(c, sx, bottom, spec.x_label)
    return c.tostring()


def _waterfall(a: AttributionSet, spec: PlotSpec) -> str:
    c = _Canvas(spec)
    rows = [("intercept", a.intercept, 0.0, a.intercept)]
    for (name, v), cum in zip(a.contributions, a.cumulative()):
        rows.append((name, v, cum - v, cum))
    rows.append(("prediction", a.prediction, 0.0, a.prediction))
    labels = dict(zip(a.names, a.instance_labels or []))
    texts = [f"{r[0]} = {labels[r[0]]}" if r[0] in labels else r[0] for r in rows]
    top, bottom, right = 34, spec.height - 44, spec.width - 60
    left = _label_margin(texts, spec)
    ends = [r[2] for r in rows] + [r[3] for r in rows] + [0.0]
    sx = _Scale(*_padded(min(ends), max(ends)), left, right)
    band = (bottom - top) / len(rows)
    g = c.group("bars")
    for i, ((name, v, start, end), label) in enumerate(zip(rows, texts)):
        y = top + i * band + band * 0.15
        if name in ("intercept", "prediction"):
            fill = NEUTRAL
        else:
            fill = POSITIVE if v > 0 else NEGATIVE
        x0, x1 = sx(start), sx(end)
        c.rect(g, min(x0, x1), y, abs(x1 - x0), band * 0.7, fill, feature=name, value=repr(v),
               cumulative=repr(end), order=i)
        c.text(left - 6, y + band * 0.35 + 4, label, anchor="end")
        sign = "+" if v >= 0 and name not in ("intercept", "prediction") else ""
        c.text(max(x0, x1) + 4, y + band * 0.35 + 4, f"{sign}{v:.4g}")
        if 0 < i < len(rows) - 1:
            c.line(sx(start), y - band * 0.3, sx(start), y, stroke=NEUTRAL, dash="2,2")
    _x_axis(c, sx, bottom, spec.x_label)
    return c.tostring()


def render(artifact, spec: PlotSpec | None = None) -> str:
    """Draw ``artifact`` as an SVG document string."""
    spec = spec or default_spec(artifact)
    if isinstance(artifact, ImportanceReport):
        if spec.kind != "importance_bars":
            raise ValueError(f"plot kind {spec.kind!r} does not fit an importance report")
        if not artifact.entries:
            raise ValueError("importance report has no entries")
        return _importance(artifact, spec)
    if isinstance(artifact, AttributionSet):
        if spec.kind != "waterfall":
            raise ValueError(f"plot kind {spec.kind!r} does not fit an attribution set")
        return _waterfall(artifact, spec)
    if isinstance(artifact, CurveSet):
        expected = {"pdp": "pdp_with_histogram", "ice": "ice_spaghetti", "ale": "ale_line"}[artifact.kind]
        if spec.kind != expected:
            raise ValueError(f"plot kind {spec.kind!r} does not fit a {artifact.kind} curve")
        if not artifact.grid or not artifact.values:
            raise ValueError("curve set is empty")
        return {"pdp": _pdp, "ice": _ice, "ale": _ale}[artifact.kind](artifact, spec)
    raise TypeError(f"cannot render {type(artifact).__name__}")
