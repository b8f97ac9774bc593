"""Regenerate the embedded colormap tables from matplotlib's published data.

Run once by hand; the outputs are committed under src/modviz/data/colormaps.
matplotlib is only needed here, not at runtime.
"""

from pathlib import Path

import matplotlib

OUT = Path(__file__).resolve().parents[1] / "src" / "modviz" / "data" / "colormaps"

# name on disk -> (matplotlib name, samples or None for the listed table)
TABLES = {
    "viridis": ("viridis", None),
    "cividis": ("cividis", None),
    "inferno": ("inferno", None),
    "plasma": ("plasma", None),
    "twilight": ("twilight", None),
    "coolwarm": ("coolwarm", 256),
    "paired": ("Paired", None),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (mpl_name, samples) in TABLES.items():
        cmap = matplotlib.colormaps[mpl_name]
        if samples is None:
            rows = [tuple(c[:3]) for c in cmap.colors]
        else:
            rows = [tuple(cmap(i / (samples - 1))[:3]) for i in range(samples)]
        with open(OUT / f"{name}.txt", "w") as fh:
            for r, g, b in rows:
                fh.write(f"{r:.8f} {g:.8f} {b:.8f}\n")
        print(name, len(rows))


if __name__ == "__main__":
    main()
