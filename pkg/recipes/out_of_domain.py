"""
Out-of-domain transfer
======================

The autoencoder is trained on labeled restaurant sentences plus unlabeled
product sentences (reconstruction loss only for the latter). Attitude
operators are prepared from the restaurant corpus alone and then applied to
product sentences, whose nouns and templates the operators never saw.

Run with ``python3 recipes/out_of_domain.py``.
"""

from stylematrix.experiments import (
    build_toy_setup,
    evaluate_transfer,
    exact_match_rate,
    operators_for,
    two_way_transfer,
)

setup = build_toy_setup(unlabeled_domains=("product",))
restaurant = setup.heldout.where(domain=0)
product = setup.heldout.where(domain=1)
print(f"exact reconstruction: restaurant {exact_match_rate(setup, restaurant):.1%}, "
      f"product {exact_match_rate(setup, product):.1%}")

# Both directions, judged by a TextCNN that saw labeled sentences of both domains.
inside = two_way_transfer(setup, source_domain=0, operator_domain=0).report
outside = two_way_transfer(setup, source_domain=1, operator_domain=0).report
print(f"in-domain      acc {inside.acc:6.2f}  bleu {inside.bleu:6.2f}  g {inside.g_score:6.2f}")
print(f"cross-domain   acc {outside.acc:6.2f}  bleu {outside.bleu:6.2f}  g {outside.g_score:6.2f}")

# A few negative product sentences pushed towards positive.
pair = operators_for(setup, "label", 0, 1, domain=0)
negatives = product.where(label=0).subset(range(6))
res = evaluate_transfer(setup, pair, negatives, target_label=1)
for src, out in zip(res.sources, res.outputs):
    print(f"  {' '.join(src):<45} -> {' '.join(out)}")
