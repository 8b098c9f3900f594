"""Spectral leakage on a spectrum with a deep floor.

The ``tftr_like`` model decays over four decades and then sits on a flat
floor, which is where the untapered periodogram goes wrong: sidelobes of
the rectangular window carry low-frequency power out to the floor.

The Tukey taper fixes the floor. A uniform average of eight Slepian
eigenspectra does not fully fix it, because the last tapers have the
poorest concentration and leak the most. Sequential deselection drops
those eigenspectra where they stand out and recovers most of the floor.
Where nothing stands out it reads about ten percent low, since it divides
the sum of K' kept eigenspectra by K' + 1.
Both multitaper columns also show the price of a wide bandwidth: the
narrow peak at f = 0.2 is smeared to about half its height.

Run with ``python3 demos/02_leakage.py``.
"""

import numpy as np

from mtspec import (apply_weighting, build_slepian_family, build_tukey_taper,
                    eigencoefficients, generate, periodogram,
                    tapered_periodogram, uniform_multitaper)
from mtspec.synth import model_values, tftr_like

model = tftr_like()
N, records = 300, 200
fam = build_slepian_family(N, 4.0)
tukey = build_tukey_taper(N, 33)

sums = {"periodogram": 0.0, "tukey": 0.0, "mt uniform": 0.0,
        "mt deselect": 0.0}
for seed in range(records):
    x = generate(model, N, seed)
    sums["periodogram"] = sums["periodogram"] + periodogram(x).values
    sums["tukey"] = sums["tukey"] + tapered_periodogram(x, tukey).values
    es = eigencoefficients(x, fam)
    sums["mt uniform"] = sums["mt uniform"] + uniform_multitaper(es).values
    sums["mt deselect"] = sums["mt deselect"] + \
        apply_weighting(es, "sequential_deselection")[1].values

f = periodogram(x).frequencies
truth = model_values(model, f)
print(f"mean of {records} estimates divided by the true spectrum")
print(f"{'f':>6}  {'truth':>9}  " + "  ".join(f"{k:>11}" for k in sums))
for fj in (0.05, 0.15, 0.2, 0.3, 0.4, 0.48):
    j = int(round(fj * 4 * N))
    ratios = "  ".join(f"{sums[k][j] / records / truth[j]:11.3f}"
                       for k in sums)
    print(f"{f[j]:6.3f}  {truth[j]:9.2e}  {ratios}")
