#!/usr/bin/env python3
"""Regenerates src/service/colormap_data.inc from matplotlib's colormaps."""
import sys
from pathlib import Path

import matplotlib

NAMES = ["Greys", "Oranges", "Blues", "YlOrBr", "magma", "gray", "viridis"]


def main() -> int:
    out = Path(__file__).resolve().parent.parent / "src" / "service" / "colormap_data.inc"
    lines = ["// Generated by tools/gen_colormaps.py. Do not edit.", ""]
    for name in NAMES:
        cmap = matplotlib.colormaps[name].resampled(256)
        lines.append(f'{{"{name}", {{{{')
        rows = []
        for i in range(256):
            r, g, b, _ = cmap(i)
            rows.append(f"    {{{round(r * 255)}, {round(g * 255)}, {round(b * 255)}}}")
        lines.append(",\n".join(rows))
        lines.append("}}},")
    out.write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
