"""
Plotly figures of tilted persistence diagrams and static SVG export.
"""
import logging
import re
from typing import Optional, Sequence

import numpy as np
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from src.errors import InvalidSpec

logger = logging.getLogger(__name__)

MARKER = dict(size=8, color="#1f77b4", line=dict(width=1, color="#0b3d62"))
# plotly.js stamps a random per-render id into clip paths and defs
_RENDER_ID = re.compile(r'id="clip([0-9a-f]+)')


def _axis_limit(point_sets: Sequence[np.ndarray]) -> float:
    stacked = [p for p in point_sets if len(p)]
    if not stacked:
        return 1.0
    return max(1.0, float(np.vstack(stacked).max()) * 1.05)


def _points(D) -> np.ndarray:
    return np.asarray(getattr(D, "points", D), dtype=float).reshape(-1, 2)


def diagram_figure(D, title: Optional[str] = None) -> go.Figure:
    """Scatter of (birth, persistence); an empty diagram gives bare wedge axes."""
    pts = _points(D)
    limit = _axis_limit([pts])
    fig = go.Figure(go.Scatter(x=pts[:, 0], y=pts[:, 1], mode="markers", marker=MARKER, name="diagram", uid="diagram"))
    fig.update_layout(title=title, template="plotly_white", width=520, height=480, showlegend=False)
    fig.update_xaxes(title_text="birth", range=[0, limit])
    fig.update_yaxes(title_text="persistence", range=[0, limit])
    return fig


def iterates_figure(samples, iterates: Sequence[int] = (100, 500), chain: int = 0) -> go.Figure:
    """Recorded diagrams at the given iterations of one chain, side by side."""
    lookup = {
        t: d for d, t, c in zip(samples.diagrams, samples.iterations, samples.chain_ids) if c == chain
    }
    missing = [t for t in iterates if t not in lookup]
    if missing:
        raise InvalidSpec(f"Iteration(s) {missing} were not recorded for chain {chain}")

    chosen = [_points(lookup[t]) for t in iterates]
    limit = _axis_limit(chosen)
    fig = make_subplots(rows=1, cols=len(iterates), subplot_titles=[f"iteration {t}" for t in iterates])
    for col, (t, pts) in enumerate(zip(iterates, chosen), start=1):
        fig.add_trace(
            go.Scatter(x=pts[:, 0], y=pts[:, 1], mode="markers", marker=MARKER, name=f"iteration {t}", uid=f"it{t}"),
            row=1, col=col,
        )
        fig.update_xaxes(title_text="birth", range=[0, limit], row=1, col=col)
        fig.update_yaxes(title_text="persistence", range=[0, limit], row=1, col=col)
    fig.update_layout(template="plotly_white", width=480 * len(iterates), height=480, showlegend=False)
    return fig


def write_svg(fig: go.Figure, path) -> None:
    """Render through kaleido with the per-render id replaced, so reruns are byte-identical."""
    try:
        svg = fig.to_image(format="svg").decode("utf-8")
    except (ImportError, ValueError) as exc:
        raise OSError(f"Static SVG export failed (is kaleido installed?): {exc}") from exc
    match = _RENDER_ID.search(svg)
    if match:
        svg = re.sub(rf"(?<=[a-z#]){match.group(1)}", "pdsim", svg)
    with open(path, "w") as f:
        f.write(svg)
    logger.debug("Wrote %s", path)
