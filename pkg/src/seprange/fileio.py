"""Reading observable and shot files; writing JSON, CSV and SVG artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidMatrix, ShapeError
from .qlinalg import ObservableSet


def load_observables(path) -> ObservableSet:
    """Parse ``{"dims": [...], "observables": [{"re": [[...]], "im": [[...]]}, ...]}``."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read observable file {path}: {exc}") from exc
    try:
        dims = [int(d) for d in raw["dims"]]
        mats = []
        for entry in raw["observables"]:
            re = np.asarray(entry["re"], dtype=float)
            im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
            mats.append(re + 1j * im)
        return ObservableSet.of(*mats, dims=dims)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (InvalidMatrix, ShapeError)):
            raise DataFormatError(f"{path}: {exc}") from exc
        raise DataFormatError(f"{path} does not follow the observable schema: {exc}") from exc


def observables_to_json(obs: ObservableSet) -> str:
    return json.dumps({"dims": list(obs.dims),
                       "observables": [{"re": np.real(a).tolist(), "im": np.imag(a).tolist()}
                                       for a in obs]}, indent=1)


def load_shots(path, k: int) -> np.ndarray:
    """One row per shot, one column per observable; an optional header row is skipped."""
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot read data file {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric outcome ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != k or len(data) == 0:
        raise DataFormatError(f"{path}: expected rows of {k} outcomes, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DataFormatError(f"{path}: non-finite outcome")
    return data


def write_shots(path, data) -> None:
    np.savetxt(path, np.asarray(data), delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list) and v and isinstance(v[0], (dict, list)):
            yield key, json.dumps(v)
        else:
            yield key, v


def format_report(meta: dict, data, fmt: str) -> str:
    """Serialize ``data`` (a dict or a list of row dicts) with a metadata header."""
    meta, data = _plain(meta), _plain(data)
    if fmt == "json":
        return json.dumps({"meta": meta, "data": data}, indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    for k, v in sorted(meta.items()):
        buf.write(f"# {k}={json.dumps(v) if isinstance(v, (list, dict)) else v}\n")
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(data, dict):
        w.writerow(["key", "value"])
        for k, v in _flatten(data):
            w.writerow([k, json.dumps(v) if isinstance(v, list) else v])
    else:
        cols = list(data[0].keys()) if data else []
        w.writerow(cols)
        for row in data:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    return buf.getvalue()


def write_report(out_dir, name: str, meta: dict, data, fmt: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.{fmt}"
    path.write_text(format_report(meta, data, fmt))
    return path


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

def svg_path(out_dir, command: str, when: datetime | None = None) -> Path:
    stamp = (when or datetime.now()).strftime("%Y%m%dT%H%M%S")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{command}-{stamp}.svg"


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


class _Canvas:
    def __init__(self, xlim, ylim, size=420, pad=48):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.size, self.pad = size, pad
        self.items = []

    def px(self, x, y):
        s, p = self.size, self.pad
        fx = (x - self.x0) / (self.x1 - self.x0 or 1)
        fy = (y - self.y0) / (self.y1 - self.y0 or 1)
        return p + fx * s, p + (1 - fy) * s

    def polyline(self, pts, color, closed=False, fill="none", width=1.5, dash=None):
        coords = " ".join("%.2f,%.2f" % self.px(x, y) for x, y in pts)
        tag = "polygon" if closed else "polyline"
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<{tag} points="{coords}" fill="{fill}" fill-opacity="0.25" '
                          f'stroke="{color}" stroke-width="{width}"{extra}/>')

    def rect(self, x, y, w, h, color):
        (ax, ay), (bx, by) = self.px(x, y + h), self.px(x + w, y)
        self.items.append(f'<rect x="{ax:.2f}" y="{ay:.2f}" width="{bx - ax:.2f}" '
                          f'height="{by - ay:.2f}" fill="{color}" stroke="none"/>')

    def marker(self, x, y, color, err=0.0):
        cx, cy = self.px(x, y)
        if err:
            _, top = self.px(x, y + err)
            _, bot = self.px(x, y - err)
            self.items.append(f'<line x1="{cx:.2f}" y1="{top:.2f}" x2="{cx:.2f}" y2="{bot:.2f}" '
                              f'stroke="{color}"/>')
        self.items.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{color}"/>')

    def text(self, x_px, y_px, s, anchor="middle", size=12):
        s = s.replace("&", "&amp;").replace("<", "&lt;")
        self.items.append(f'<text x="{x_px:.1f}" y="{y_px:.1f}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{s}</text>')

    def frame(self, title, xlabel, ylabel):
        s, p = self.size, self.pad
        self.items.insert(0, f'<rect x="{p}" y="{p}" width="{s}" height="{s}" fill="white" '
                             f'stroke="black"/>')
        self.text(p + s / 2, p / 2, title, size=14)
        self.text(p + s / 2, p + s + 32, xlabel)
        self.items.append(f'<text x="14" y="{p + s / 2:.1f}" font-size="12" font-family="sans-serif" '
                          f'text-anchor="middle" transform="rotate(-90 14 {p + s / 2:.1f})">{ylabel}</text>')
        for frac in (0, 0.5, 1):
            xv = self.x0 + frac * (self.x1 - self.x0)
            yv = self.y0 + frac * (self.y1 - self.y0)
            self.text(p + frac * s, p + s + 16, f"{xv:.3g}", size=10)
            self.text(p - 6, p + (1 - frac) * s + 4, f"{yv:.3g}", anchor="end", size=10)

    def render(self) -> str:
        total = self.size + 2 * self.pad + 20
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" '
                f'viewBox="0 0 {total} {total}">\n{body}\n</svg>\n')


def svg_regions(polygons: dict, title: str, labels=("x1", "x2")) -> str:
    """Overlay of closed planar polygons, e.g. inner hulls of two numerical ranges."""
    allpts = np.vstack([np.asarray(p) for p in polygons.values()])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) * 0.55 or 1.0
    mid = (lo + hi) / 2
    c = _Canvas((mid[0] - span, mid[0] + span), (mid[1] - span, mid[1] + span))
    for i, (name, poly) in enumerate(polygons.items()):
        col = _PALETTE[i % len(_PALETTE)]
        c.polyline(np.asarray(poly), col, closed=True, fill=col)
        c.text(c.pad + 8, c.pad + 18 + 16 * i, name, anchor="start")
        c.items[-1] = c.items[-1].replace("<text ", f'<text fill="{col}" ')
    c.frame(title, *labels)
    return c.render()


def svg_heatmap(xs, ys, values, title: str, labels=("x", "y")) -> str:
    """Cell-centred heatmap of ``values[i, j]`` at ``(xs[i], ys[j])``."""
    xs, ys, v = np.asarray(xs), np.asarray(ys), np.asarray(values, dtype=float)
    dx = (xs[1] - xs[0]) if len(xs) > 1 else 1.0
    dy = (ys[1] - ys[0]) if len(ys) > 1 else 1.0
    c = _Canvas((xs[0] - dx / 2, xs[-1] + dx / 2), (ys[0] - dy / 2, ys[-1] + dy / 2))
    finite = v[np.isfinite(v)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if not np.isfinite(v[i, j]):
                continue
            f = (v[i, j] - lo) / (hi - lo) if hi > lo else 0.5
            col = "#%02x%02x%02x" % (int(255 * f), int(80 + 100 * (1 - abs(2 * f - 1))), int(255 * (1 - f)))
            c.rect(x - dx / 2, y - dy / 2, dx, dy, col)
    c.frame(f"{title} (range {lo:.4g} .. {hi:.4g})", *labels)
    return c.render()


def svg_series(series: dict, title: str, labels=("x", "y")) -> str:
    """Line/marker plot; each series is ``(xs, ys, errs_or_None, style)`` with style 'line' or 'points'."""
    xs_all = np.concatenate([np.asarray(s[0], float) for s in series.values()])
    ys_all = np.concatenate([np.asarray(s[1], float) for s in series.values()])
    pad_x = 0.05 * (xs_all.max() - xs_all.min() or 1)
    pad_y = 0.1 * (ys_all.max() - ys_all.min() or 1)
    c = _Canvas((xs_all.min() - pad_x, xs_all.max() + pad_x), (ys_all.min() - pad_y, ys_all.max() + pad_y))
    for i, (name, (xs, ys, errs, style)) in enumerate(series.items()):
        col = _PALETTE[i % len(_PALETTE)]
        if style == "line":
            c.polyline(list(zip(xs, ys)), col, dash="4 3")
        else:
            for j, (x, y) in enumerate(zip(xs, ys)):
                c.marker(x, y, col, float(errs[j]) if errs is not None else 0.0)
        c.text(c.pad + c.size - 8, c.pad + 18 + 16 * i, name, anchor="end")
        c.items[-1] = c.items[-1].replace("<text ", f'<text fill="{col}" ')
    c.frame(title, *labels)
    return c.render()
