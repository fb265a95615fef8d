import math
from typing import Dict, List

from sqpack.application.services import LayoutRenderer
from sqpack.domain.models import Layout

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")
OUTLINE_COLOR = "#000000"
MARGIN = 1.0

PREAMBLE = """\
<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<defs>
<pattern id="hatch" patternUnits="userSpaceOnUse" width="0.5" height="0.5" patternTransform="rotate(45)">
<line x1="0" y1="0" x2="0" y2="0.5" stroke="{hatch}" stroke-width="{stroke}"/>
</pattern>
</defs>
<g transform="translate({tx},{ty}) scale({scale},{neg_scale})" stroke-width="{stroke}">
"""

POSTAMBLE = """\
</g>
</svg>
"""


def _num(value: float) -> str:
    return f"{value:.10g}"


def tag_colors(layout: Layout) -> Dict[str, str]:
    """One palette colour per tag, in order of first appearance."""
    colors: Dict[str, str] = {}
    for tag in layout.tags:
        if tag not in colors:
            colors[tag] = PALETTE[len(colors) % len(PALETTE)]
    return colors


class SvgLayoutRenderer(LayoutRenderer):
    """Region outline, one rotated rect per square, one hatched rect per grid block; y points up."""

    def render(self, layout: Layout, stroke_width: float = 0.05, scale: float = 10.0) -> str:
        x0, y0, x1, y1 = layout.region.bounds
        width, height = (x1 - x0 + 2 * MARGIN) * scale, (y1 - y0 + 2 * MARGIN) * scale
        colors = tag_colors(layout)
        lines: List[str] = [PREAMBLE.format(
            width=_num(width),
            height=_num(height),
            hatch="#999999",
            stroke=_num(stroke_width),
            tx=_num((MARGIN - x0) * scale),
            ty=_num((y1 + MARGIN) * scale),
            scale=_num(scale),
            neg_scale=_num(-scale),
        )]

        points = " ".join(f"{_num(p.x)},{_num(p.y)}" for p in layout.region.vertices)
        lines.append(f'<polygon class="region" points="{points}" fill="none" stroke="{OUTLINE_COLOR}"/>\n')

        for (cx, cy), angle, tag in zip(layout.centers, layout.angles, layout.square_tags):
            lines.append(
                f'<rect class="square" x="{_num(cx - 0.5)}" y="{_num(cy - 0.5)}" width="1" height="1" '
                f'transform="rotate({_num(math.degrees(angle))} {_num(cx)} {_num(cy)})" '
                f'fill="{colors[tag]}" fill-opacity="0.4" stroke="{colors[tag]}"/>\n'
            )

        for block, tag in zip(layout.grid_blocks, layout.block_tags):
            ox, oy = block.origin.x, block.origin.y
            lines.append(
                f'<rect class="block" x="{_num(ox)}" y="{_num(oy)}" width="{block.cols}" height="{block.rows}" '
                f'transform="rotate({_num(math.degrees(block.angle))} {_num(ox)} {_num(oy)})" '
                f'fill="url(#hatch)" stroke="{colors[tag]}"/>\n'
            )

        lines.append(POSTAMBLE)
        return "".join(lines)
