"""
Style matrix figures
====================

Writes CSV (and SVG) data for two figures: a heatmap of the leading
eigenvectors of each attitude's style matrix, and a 2-D MDS map of those
eigenvectors from both corpora, where clusters show directions the two
styles share.

Run with ``python3 recipes/figures.py [output_dir]`` (default ``figures``).
"""

import sys
from pathlib import Path

from stylematrix.experiments import build_toy_setup
from stylematrix.neural import encode_batch
from stylematrix.stylemat import compute_style_matrix, symmetric_eigen
from stylematrix.viz import classical_mds, export_heatmap, export_scatter, top_eigenvectors

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out.mkdir(parents=True, exist_ok=True)
setup = build_toy_setup()
k = 8

points, labels = [], []
for value, name in ((0, "negative"), (1, "positive")):
    Z = encode_batch(setup.model, setup.encode(setup.train.where(label=value))).T
    ef = symmetric_eigen(compute_style_matrix(Z).S)
    share = ef.lam[:k].sum() / ef.lam.sum()
    print(f"{name}: top {k} eigenvalues carry {share:.1%} of the variance")
    P = top_eigenvectors(ef, k)
    export_heatmap(P, out / f"eigvecs_{name}.csv", svg=True)
    points.extend(P.T)
    labels.extend(f"{name}:{i}" for i in range(k))

# Eigenvectors are defined up to sign; both signs are plotted so that
# matching directions land close together.
points = points + [-p for p in points]
labels = labels + [f"-{l}" for l in labels]
export_scatter(classical_mds(points, 2, labels), out / "eigvec_mds.csv", svg=True)
print(f"wrote {sorted(p.name for p in out.iterdir())}")
