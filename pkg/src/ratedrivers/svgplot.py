"""Minimal deterministic SVG renderings: gain bar charts and per-class beeswarms.

Hand-rolled markup keeps output byte-stable across runs, which the run
manifest relies on for digest comparisons.
"""

from __future__ import annotations

from .explain import FeatureSummary

_FONT = "font-family='Helvetica,Arial,sans-serif'"


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _svg_doc(width: int, height: int, body: list[str]) -> str:
    head = (
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}' "
        f"viewBox='0 0 {width} {height}'>"
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _color(q: float) -> str:
    """Blue (low feature value) to red (high feature value)."""
    q = min(max(q, 0.0), 1.0)
    lo = (31, 119, 208)
    hi = (208, 31, 78)
    rgb = tuple(round(a + (b - a) * q) for a, b in zip(lo, hi))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def bar_chart(items: list[tuple[str, float]], path, title: str, x_label: str = "") -> None:
    """Horizontal bar chart; items are (label, value) in display order."""
    left, top, bar_h, gap = 200, 56, 22, 10
    plot_w = 480
    height = top + len(items) * (bar_h + gap) + 48
    width = left + plot_w + 80
    vmax = max((v for _, v in items), default=0.0)
    scale = (plot_w / vmax) if vmax > 0 else 0.0
    body = [
        f"<rect width='{width}' height='{height}' fill='white'/>",
        f"<text x='{width // 2}' y='28' text-anchor='middle' font-size='16' {_FONT}>{_esc(title)}</text>",
    ]
    for i, (label, value) in enumerate(items):
        y = top + i * (bar_h + gap)
        w = value * scale
        body.append(
            f"<text x='{left - 8}' y='{y + bar_h - 6}' text-anchor='end' font-size='12' {_FONT}>{_esc(label)}</text>"
        )
        body.append(
            f"<rect x='{left}' y='{y}' width='{w:.2f}' height='{bar_h}' fill='#4a7fb5'/>"
        )
        body.append(
            f"<text x='{left + w + 6:.2f}' y='{y + bar_h - 6}' font-size='11' {_FONT}>{value:.3f}</text>"
        )
    if x_label:
        body.append(
            f"<text x='{left + plot_w // 2}' y='{height - 12}' text-anchor='middle' font-size='12' {_FONT}>{_esc(x_label)}</text>"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_svg_doc(width, height, body))


def beeswarm(summaries: list[FeatureSummary], path, title: str) -> None:
    """Per-feature strip of attribution points, colored by feature-value quantile."""
    left, top, row_h = 200, 56, 42
    plot_w = 520
    height = top + len(summaries) * row_h + 56
    width = left + plot_w + 60
    all_phi = [p for s in summaries for p, _ in s.points]
    lo = min(all_phi, default=-1.0)
    hi = max(all_phi, default=1.0)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(v: float) -> float:
        return left + (v - lo) / (hi - lo) * plot_w

    body = [
        f"<rect width='{width}' height='{height}' fill='white'/>",
        f"<text x='{width // 2}' y='28' text-anchor='middle' font-size='16' {_FONT}>{_esc(title)}</text>",
    ]
    zero_x = sx(0.0)
    body.append(
        f"<line x1='{zero_x:.2f}' y1='{top - 8}' x2='{zero_x:.2f}' y2='{height - 44}' stroke='#999999' stroke-dasharray='4 3'/>"
    )
    for i, s in enumerate(summaries):
        cy = top + i * row_h + row_h // 2
        body.append(
            f"<text x='{left - 8}' y='{cy + 4}' text-anchor='end' font-size='12' {_FONT}>{_esc(s.name)}</text>"
        )
        body.append(
            f"<line x1='{left}' y1='{cy}' x2='{left + plot_w}' y2='{cy}' stroke='#eeeeee'/>"
        )
        ordered = sorted(s.points)  # deterministic layout keyed by value
        for k, (phi, q) in enumerate(ordered):
            dy = (k * 37) % 25 - 12  # fixed pseudo-scatter, stable across runs
            body.append(
                f"<circle cx='{sx(phi):.2f}' cy='{cy + dy}' r='3' fill='{_color(q)}' fill-opacity='0.75'/>"
            )
    for v in (lo + pad, 0.0, hi - pad):
        body.append(
            f"<text x='{sx(v):.2f}' y='{height - 26}' text-anchor='middle' font-size='11' {_FONT}>{v:.2f}</text>"
        )
    body.append(
        f"<text x='{left + plot_w // 2}' y='{height - 8}' text-anchor='middle' font-size='12' {_FONT}>attribution (margin scale)</text>"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_svg_doc(width, height, body))
