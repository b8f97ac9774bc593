"""Regenerate the bundled q-expansion coefficient files with PARI/GP.

Needs cypari2 (not a runtime dependency). For each level/weight the rational
newforms are ordered by dimension and then by their trace vectors, which is how
the labels' "a" orbit is picked.
"""

import json
from pathlib import Path

import cypari2

from modviz.ingest import write_coeff_json

OUT = Path(__file__).resolve().parents[1] / "src" / "modviz" / "data" / "forms"
COUNT = 512
LABELS = ["1.12.a.a.1.1", "5.4.a.a.1.1", "105.2.a.a.1.1", "10.20.a.a.1.1"]


def rational_newforms(pari, level, weight, count):
    mf = pari.mfinit([level, weight], 0)
    forms = []
    for f in pari.mfeigenbasis(mf):
        coefs = pari.mfcoefs(f, count)
        try:
            ints = [int(c) for c in coefs[1:]]
        except (TypeError, cypari2.PariError):
            continue  # dimension > 1
        forms.append(ints)
    return sorted(forms)


def main():
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    OUT.mkdir(parents=True, exist_ok=True)
    for label in LABELS:
        level, weight = (int(t) for t in label.split(".")[:2])
        coefs = rational_newforms(pari, level, weight, COUNT)[0]
        write_coeff_json(OUT / f"{label}.json", label=label, weight=weight,
                         level=level, period=1.0, coefficients=coefs)
        print(label, coefs[:6])


if __name__ == "__main__":
    main()
