"""CSV tables, hand-rolled SVG line charts and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from datetime import datetime, timezone
from html import escape
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DIP_COLUMNS = ("delay_ps", "p", "p_fit")
COUNT_COLUMNS = ("coincidences", "singles_a", "singles_b")
SPECTRA_COLUMNS = ("wavelength_nm", "intensity_norm", "which")
SPECTRUM_KINDS = ("input", "converted", "reference", "dft")
OPTIMIZER_COLUMNS = ("scenario", "f_m_GHz", "A_pi", "gdd_ps2", "visibility_michelson", "visibility_depth",
                     "evals")
TRACE_COLUMNS = ("evaluation", "stage", "gdd_ps2", "f_m_GHz", "A_pi", "t0_ps", "visibility", "best_visibility")
CURVE_COLUMNS = ("compression", "visibility_michelson", "visibility_depth", "p_min")
DESIGN_COLUMNS = ("compression", "visibility_michelson", "visibility_depth", "gdd_ps2", "amplitude_pi",
                  "modulation_frequency_GHz", "target_fwhm_nm")
SUMMARY_COLUMNS = ("metric", "value")


def fmt(value) -> str:
    """Locale-independent rendering; floats get 9 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{path.name}: row has {len(row)} fields, header has {len(header)}")
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# SVG

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def svg_line_chart(path: Path, series, title: str, xlabel: str, ylabel: str,
                   width: int = 640, height: int = 400) -> Path:
    """Write a line chart; ``series`` is a sequence of ``(label, x, y)``."""
    series = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in series]
    finite = [(x[np.isfinite(y)], y[np.isfinite(y)]) for _, x, y in series]
    xs = np.concatenate([f[0] for f in finite]) if finite else np.zeros(1)
    ys = np.concatenate([f[1] for f in finite]) if finite else np.zeros(1)
    if xs.size == 0:
        xs = ys = np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = sx(t)
        parts.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        parts.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, x, y) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        if pts:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 16 + 16 * k
        parts.append(f'<line x1="{left + pw - 120}" y1="{ly - 4}" x2="{left + pw - 100}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw - 95}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# manifest

def _versions() -> dict:
    import scipy

    from . import __version__
    return {"timelens": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, *, command: str, config_hash: str, seed: int, config_text: str,
                   extra: dict | None = None) -> Path:
    """``manifest.json``; the ``timestamp`` line is the only non-reproducible content."""
    out_dir = Path(out_dir)
    files = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[p.relative_to(out_dir).as_posix()] = sha256_file(p)
    body = {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "versions": _versions(),
        "files": files,
        "config": config_text,
    }
    if extra:
        body["results"] = extra
    body["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path
