"""End-to-end pipelines and report serialization (JSON reports, CSV polylines, SVG overview)."""

from __future__ import annotations

import csv
import io
import json
import time
from pathlib import Path

import numpy as np

from orbistrat.geodesics import ExistenceOutcome, Strategy, existence_dispatch, run_strategy
from orbistrat.geom import Box, GeodesicSegment
from orbistrat.strata import OrbifoldModel, Stratification, stratify

REPORT_SCHEMA = "orbistrat.report/1"


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def model_summary(model: OrbifoldModel) -> dict:
    G = model.group
    return {
        "label": model.label,
        "dimension": model.dimension,
        "generators": G.declared_generators,
        "lattice": G.has_lattice,
        "fundamental_box": {"min": _floats(model.fundamental_box.lo), "max": _floats(model.fundamental_box.hi)},
        "tolerance": model.tolerance,
    }


def properness_summary(model: OrbifoldModel) -> dict:
    cert = model.certificate
    return {
        "elements_meeting_box": cert.count,
        "search_radius": cert.search_radius,
        "frontier_separated": cert.frontier_separated,
    }


def stratification_table(strat: Stratification) -> list[dict]:
    return [
        {
            "id": c.id,
            "k": c.k,
            "isotropy_order": c.isotropy_order,
            "closed": c.is_closed,
            "frontier_count": len(c.frontier_points),
            "sample_point": _floats(c.sample_points[0]),
        }
        for c in strat.components
    ]


def outcome_summary(outcome: ExistenceOutcome) -> dict:
    out: dict = {"strategy": outcome.strategy.value}
    if outcome.geodesic is None:
        out["explanation"] = outcome.explanation
        return out
    seg = outcome.geodesic.segment
    g = outcome.geodesic.gamma
    out.update(
        {
            "segment": {"start": _floats(seg.start), "end": _floats(seg.end), "t0": seg.t0, "t1": seg.t1},
            "gamma": {
                "linear": [_floats(r) for r in g.linear],
                "translation": _floats(g.translation),
                "word": list(g.witness_word),
            },
            "length": outcome.report.length,
            "residuals": {
                "position": outcome.report.position_residual,
                "velocity": outcome.report.velocity_residual,
            },
            "details": outcome.details,
        }
    )
    return out


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


# --- polylines ---------------------------------------------------------------------------------


def clip_segment(p, q, box: Box, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray] | None:
    """Part of the segment ``[p, q]`` inside ``box`` (slab clipping), or ``None``."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    d = q - p
    lo_t, hi_t = 0.0, 1.0
    for i in range(p.shape[0]):
        if abs(d[i]) < 1e-15:
            if p[i] < box.lo[i] - tol or p[i] > box.hi[i] + tol:
                return None
            continue
        t1, t2 = (box.lo[i] - p[i]) / d[i], (box.hi[i] - p[i]) / d[i]
        lo_t, hi_t = max(lo_t, min(t1, t2)), min(hi_t, max(t1, t2))
        if hi_t - lo_t <= 1e-12:
            return None
    a, b = p + lo_t * d, p + hi_t * d
    return np.clip(a, box.lo, box.hi), np.clip(b, box.lo, box.hi)


def component_polylines(model: OrbifoldModel, strat: Stratification) -> list[tuple[int, int, int, np.ndarray]]:
    """``(component, k, piece, points)`` for every zero- and one-dimensional component, clipped to the box."""
    box = model.fundamental_box
    near = model._near
    out = []
    for c in strat.components:
        if c.k == 0:
            out.append((c.id, 0, 0, np.atleast_2d(c.sample_points[0])))
            continue
        if c.k != 1:
            continue
        line = c.line
        spans = [line.intervals()[i] for i in c.intervals] if c.intervals else [(0.0, line.period)]
        seen: set = set()
        piece = 0
        for a, b in spans:
            p, q = line.point(a), line.point(b)
            for e in near:
                clipped = clip_segment(e(p), e(q), box)
                if clipped is None:
                    continue
                key = frozenset(tuple(np.round(v, 7)) for v in clipped)
                if key in seen:
                    continue
                seen.add(key)
                out.append((c.id, 1, piece, np.vstack(clipped)))
                piece += 1
    out.sort(key=lambda r: (r[0], tuple(np.round(r[3][0], 9))))
    renumbered = []
    counts: dict[int, int] = {}
    for cid, k, _, pts in out:
        renumbered.append((cid, k, counts.get(cid, 0), pts))
        counts[cid] = counts.get(cid, 0) + 1
    return renumbered


def polylines_csv(model: OrbifoldModel, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    axes = ["x", "y", "z"][: model.dimension]
    w.writerow(["component", "k", "piece", *axes])
    for cid, k, piece, pts in rows:
        for p in pts:
            w.writerow([cid, k, piece, *(repr(float(v)) for v in p)])
    return buf.getvalue()


_COLORS = {2: "#1f77b4", 3: "#2ca02c", 4: "#d62728", 6: "#9467bd"}


def overview_svg(model: OrbifoldModel, strat: Stratification, rows, size: int = 400) -> str:
    """Static picture of the box with the singular locus; planar models only."""
    if model.dimension != 2:
        raise ValueError("SVG overview is drawn for planar models only")
    box = model.fundamental_box
    span = box.hi - box.lo
    scale = size / float(span.max())
    pad = 20

    def xy(p):
        x = pad + (p[0] - box.lo[0]) * scale
        y = pad + (box.hi[1] - p[1]) * scale
        return f"{x:.3f}", f"{y:.3f}"

    w = span[0] * scale + 2 * pad
    h = span[1] * scale + 2 * pad
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" viewBox="0 0 {w:.3f} {h:.3f}">',
        f'<title>{model.label or "model"}</title>',
        f'<rect x="{pad}" y="{pad}" width="{span[0] * scale:.3f}" height="{span[1] * scale:.3f}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    orders = {c.id: c.isotropy_order for c in strat.components}
    for cid, k, _, pts in rows:
        color = _COLORS.get(orders[cid], "#555")
        if k == 1:
            (x1, y1), (x2, y2) = xy(pts[0]), xy(pts[-1])
            parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" stroke-width="2"/>')
    for cid, k, _, pts in rows:
        if k == 0:
            x, y = xy(pts[0])
            color = _COLORS.get(orders[cid], "#555")
            parts.append(
                f'<circle cx="{x}" cy="{y}" r="5" fill="{color}"><title>component {cid}, '
                f"isotropy order {orders[cid]}</title></circle>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- pipelines ---------------------------------------------------------------------------------


def run_stratify(model: OrbifoldModel, out: Path | None = None, svg: bool = False) -> tuple[dict, Stratification]:
    """Stratify ``model``; with ``out`` set, write the report, CSV polylines and (planar) SVG there."""
    t0 = time.perf_counter()
    strat = stratify(model)
    elapsed = time.perf_counter() - t0
    report = {
        "schema": REPORT_SCHEMA,
        "model": model_summary(model),
        "properness": properness_summary(model),
        "stratification": stratification_table(strat),
        "timing": {"stratify_seconds": elapsed},
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        stem = model.label or "model"
        (out / f"{stem}.stratify.json").write_text(dumps_report(report), encoding="utf-8")
        if model.dimension <= 3:
            rows = component_polylines(model, strat)
            (out / f"{stem}.polylines.csv").write_text(polylines_csv(model, rows), encoding="utf-8")
            if svg and model.dimension == 2:
                (out / f"{stem}.svg").write_text(overview_svg(model, strat, rows), encoding="utf-8")
    return report, strat


def run_geodesic(
    model: OrbifoldModel,
    strategy: Strategy | None = None,
    disable=(),
    out: Path | None = None,
) -> tuple[dict, ExistenceOutcome]:
    """Find a closed geodesic by dispatch (``strategy=None``) or with one named strategy."""
    t0 = time.perf_counter()
    strat = stratify(model)
    if strategy is None:
        outcome = existence_dispatch(model, disable=disable, strat=strat)
    else:
        outcome = run_strategy(model, strategy, strat)
    elapsed = time.perf_counter() - t0
    report = {
        "schema": REPORT_SCHEMA,
        "model": model_summary(model),
        "properness": properness_summary(model),
        "stratification": stratification_table(strat),
        "existence": outcome_summary(outcome),
        "timing": {"geodesic_seconds": elapsed},
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        stem = model.label or "model"
        (out / f"{stem}.geodesic.json").write_text(dumps_report(report), encoding="utf-8")
    return report, outcome


def segment_from_report(entry: dict) -> GeodesicSegment:
    seg = entry["segment"]
    t0, t1 = seg["t0"], seg["t1"]
    start, end = np.array(seg["start"]), np.array(seg["end"])
    return GeodesicSegment(start, (end - start) / (t1 - t0), t0, t1)
