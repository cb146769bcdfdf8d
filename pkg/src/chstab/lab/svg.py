"""Minimal SVG line charts and contour plots built with ElementTree."""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)
PALETTE = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e", "#17becf", "#7f7f7f"]


class _Axes:
    def __init__(self, xlim, ylim, xlog=False, ylog=False):
        self.xlog, self.ylog = xlog, ylog
        self.x0, self.x1 = self._tf(xlim[0], xlog), self._tf(xlim[1], xlog)
        self.y0, self.y1 = self._tf(ylim[0], ylog), self._tf(ylim[1], ylog)
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    @staticmethod
    def _tf(v, log):
        return math.log10(v) if log else float(v)

    def px(self, x):
        return MARGIN["left"] + (self._tf(x, self.xlog) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + self.ph - (self._tf(y, self.ylog) - self.y0) / (self.y1 - self.y0) * self.ph

    def ticks(self, axis):
        lo, hi = (self.x0, self.x1) if axis == "x" else (self.y0, self.y1)
        log = self.xlog if axis == "x" else self.ylog
        if log:
            return [10.0**e for e in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
        return [float(t) for t in np.linspace(lo, hi, 6)]


def _root(title):
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", version="1.1",
                     width=str(WIDTH), height=str(HEIGHT),
                     viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    if title:
        t = ET.SubElement(svg, "text", x=str(WIDTH / 2), y="18", attrib={"text-anchor": "middle"})
        t.text = title
    return svg


def _draw_axes(svg, ax, xlabel, ylabel):
    g = ET.SubElement(svg, "g", stroke="black", fill="none")
    x0, y0 = MARGIN["left"], MARGIN["top"] + ax.ph
    ET.SubElement(g, "rect", x=f"{x0}", y=f"{MARGIN['top']}", width=f"{ax.pw}", height=f"{ax.ph}")
    labels = ET.SubElement(svg, "g", attrib={"font-size": "11", "font-family": "sans-serif"})
    for t in ax.ticks("x"):
        x = ax.px(t)
        ET.SubElement(g, "line", x1=f"{x:.2f}", y1=f"{y0}", x2=f"{x:.2f}", y2=f"{y0 + 5}")
        e = ET.SubElement(labels, "text", x=f"{x:.2f}", y=f"{y0 + 18}", attrib={"text-anchor": "middle"})
        e.text = f"{t:g}"
    for t in ax.ticks("y"):
        y = ax.py(t)
        ET.SubElement(g, "line", x1=f"{x0 - 5}", y1=f"{y:.2f}", x2=f"{x0}", y2=f"{y:.2f}")
        e = ET.SubElement(labels, "text", x=f"{x0 - 8}", y=f"{y + 4:.2f}", attrib={"text-anchor": "end"})
        e.text = f"{t:.3g}"
    e = ET.SubElement(labels, "text", x=f"{x0 + ax.pw / 2}", y=f"{HEIGHT - 10}",
                      attrib={"text-anchor": "middle"})
    e.text = xlabel
    e = ET.SubElement(labels, "text", x="16", y=f"{MARGIN['top'] + ax.ph / 2}",
                      transform=f"rotate(-90 16 {MARGIN['top'] + ax.ph / 2})",
                      attrib={"text-anchor": "middle"})
    e.text = ylabel


def _polyline(parent, ax, xs, ys, **attrs):
    pts = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys)
                   if math.isfinite(x) and math.isfinite(y))
    return ET.SubElement(parent, "polyline", points=pts, fill="none", **attrs)


def line_plot(series, path, title="", xlabel="", ylabel="", reference=None):
    """Write a line chart.

    ``series`` is a list of ``(label, xs, ys)``; ``reference`` an optional
    ``(label, xs, ys)`` drawn dashed in red.
    """
    all_x = np.concatenate([np.asarray(s[1], float) for s in series])
    all_y = np.concatenate([np.asarray(s[2], float) for s in series])
    if reference is not None:
        all_y = np.concatenate([all_y, np.asarray(reference[2], float)])
    all_y = all_y[np.isfinite(all_y)]
    ax = _Axes((all_x.min(), all_x.max()), (all_y.min(), all_y.max()))
    svg = _root(title)
    _draw_axes(svg, ax, xlabel, ylabel)
    data = ET.SubElement(svg, "g", attrib={"stroke-width": "1.5"})
    legend = ET.SubElement(svg, "g", attrib={"font-size": "11", "font-family": "sans-serif"})
    entries = [(lbl, xs, ys, PALETTE[i % len(PALETTE)], None) for i, (lbl, xs, ys) in enumerate(series)]
    if reference is not None:
        entries.append((*reference, "red", "6,4"))
    for i, (lbl, xs, ys, color, dash) in enumerate(entries):
        attrs = {"stroke": color}
        if dash:
            attrs["stroke-dasharray"] = dash
        _polyline(data, ax, xs, ys, **attrs)
        ly = MARGIN["top"] + 14 + 14 * i
        lx = WIDTH - MARGIN["right"] - 150
        ET.SubElement(legend, "line", x1=f"{lx}", y1=f"{ly - 4}", x2=f"{lx + 20}", y2=f"{ly - 4}", **attrs)
        t = ET.SubElement(legend, "text", x=f"{lx + 25}", y=f"{ly}")
        t.text = lbl
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)


def contour_segments(xs, ys, Z, level):
    """Marching squares on a rectilinear grid; ``Z[i, j]`` sits at ``(xs[i], ys[j])``.

    Returns a list of ``((x_a, y_a), (x_b, y_b))`` segments. Interpolation is
    linear in the coordinates passed in.
    """
    xs, ys, Z = np.asarray(xs, float), np.asarray(ys, float), np.asarray(Z, float)
    segs = []

    def cross(p, q, zp, zq):
        t = 0.5 if zq == zp else (level - zp) / (zq - zp)
        return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))

    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
            z = [Z[i, j], Z[i + 1, j], Z[i + 1, j + 1], Z[i, j + 1]]
            above = [v >= level for v in z]
            pts = []
            for e in range(4):
                a, b = e, (e + 1) % 4
                if above[a] != above[b]:
                    pts.append(cross(corners[a], corners[b], z[a], z[b]))
            if len(pts) == 2:
                segs.append((pts[0], pts[1]))
            elif len(pts) == 4:
                # saddle: decide the pairing by the cell-centre average
                if (np.mean(z) >= level) == above[0]:
                    segs += [(pts[0], pts[1]), (pts[2], pts[3])]
                else:
                    segs += [(pts[3], pts[0]), (pts[1], pts[2])]
    return segs


def contour_plot(xs, ys, Z, levels, path, highlight=None, title="", xlabel="", ylabel="",
                 ylog=None):
    """Iso-level lines of ``Z`` over (xs, ys); ``highlight`` is drawn red and dotted."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if ylog is None:
        ylog = bool(np.all(ys > 0) and len(ys) > 1 and ys.max() / ys.min() > 20)
    ty = np.log10(ys) if ylog else ys
    ax = _Axes((xs.min(), xs.max()), (ys.min(), ys.max()), ylog=ylog)
    svg = _root(title)
    _draw_axes(svg, ax, xlabel, ylabel)
    group = ET.SubElement(svg, "g", fill="none")
    labels = ET.SubElement(svg, "g", attrib={"font-size": "10", "font-family": "sans-serif"})
    all_levels = [(lv, PALETTE[i % len(PALETTE)], None) for i, lv in enumerate(sorted(levels))]
    if highlight is not None:
        all_levels.append((highlight, "red", "2,3"))
    for lv, color, dash in all_levels:
        segs = contour_segments(xs, ty, Z, lv)
        if not segs:
            continue
        d = []
        for (xa, ya), (xb, yb) in segs:
            ya, yb = (10**ya, 10**yb) if ylog else (ya, yb)
            d.append(f"M{ax.px(xa):.2f} {ax.py(ya):.2f}L{ax.px(xb):.2f} {ax.py(yb):.2f}")
        attrs = {"stroke": color, "stroke-width": "2" if dash else "1.5", "d": "".join(d)}
        if dash:
            attrs["stroke-dasharray"] = dash
        ET.SubElement(group, "path", attrib={**attrs, "data-level": f"{lv:.17g}"})
        (xa, ya), _ = segs[0]
        ya = 10**ya if ylog else ya
        t = ET.SubElement(labels, "text", x=f"{ax.px(xa) + 3:.2f}", y=f"{ax.py(ya) - 3:.2f}", fill=color)
        t.text = f"{lv:g}"
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
