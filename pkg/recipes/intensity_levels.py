"""
Style contrast and transfer strength
====================================

Attitude and intensity together give four ratings: 1 (strongly negative),
2 (mildly negative), 4 (mildly positive) and 5 (strongly positive). Here the
autoencoder is trained with reconstruction loss only, so the style matrices
are purely unsupervised. Operators are prepared from pairs of rating
corpora with different contrast and applied to the same held-out sentences.

Run with ``python3 recipes/intensity_levels.py``.
"""

from stylematrix.experiments import build_toy_setup, desk_config, evaluate_transfer, operators_for
from stylematrix.toygen import rating

setup = build_toy_setup(config=desk_config(semi_supervised=False))
for corpus in (setup.train, setup.heldout):
    corpus.attributes["rating"] = rating(corpus)

# Negative held-out sentences (ratings 1 and 2) pushed towards positive by
# operators of decreasing contrast; the judge scores positive attitude.
sources = setup.heldout.where(label=0)
print(f"{'operators':<10}{'acc':>8}{'bleu':>8}")
for src, tgt in ((1, 5), (1, 4), (2, 5), (2, 4)):
    pair = operators_for(setup, "rating", src, tgt)
    r = evaluate_transfer(setup, pair, sources, target_label=1).report
    print(f"R{src} -> R{tgt}{r.acc:>10.2f}{r.bleu:>8.2f}")
