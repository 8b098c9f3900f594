"""Adaptive eigenspectrum weightings at one frequency and across a band.

Sequential deselection drops the highest-order eigenspectra where they
exceed the mean of the lower-order ones by a threshold. This script shows
where that happens on a ``tftr_like`` record and compares the three
weightings in how many degrees of freedom they keep.

Run with ``python3 demos/03_adaptive_weighting.py``.
"""

import numpy as np

from mtspec import apply_weighting, build_slepian_family, eigencoefficients
from mtspec.synth import generate, tftr_like

N = 300
x = generate(tftr_like(), N, seed=4)
fam = build_slepian_family(N, 5.46, 10)
es = eigencoefficients(x, fam)
f = es.grid.frequencies

field, est = apply_weighting(es, "sequential_deselection")
kept = field.selected.sum(axis=0)
print("eigenspectra kept by sequential deselection")
for lo, hi in ((0.0, 0.1), (0.1, 0.3), (0.3, 0.5)):
    m = (f >= lo) & (f <= hi)
    print(f"  f in [{lo:.1f}, {hi:.1f}]: mean {kept[m].mean():.2f} of "
          f"{fam.K}, fewest {kept[m].min()}")

print("\nmedian degrees of freedom")
for kind in ("uniform", "sequential_deselection", "minimal_loss", "wiener"):
    wf, e = apply_weighting(es, kind)
    extra = ""
    if not wf.converged.all():
        extra = f" ({int((~wf.converged).sum())} frequencies unconverged)"
    print(f"  {kind:24s} {np.median(e.dof):6.2f}{extra}")

# The weights at the frequency with the fewest survivors.
j = int(np.argmin(kept))
print(f"\nat f = {f[j]:.4f} the weights are")
print("  " + " ".join(f"{w:.3f}" for w in field.weights[:, j]))
