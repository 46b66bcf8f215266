"""
Two style attributes from one model
===================================

Every toy sentence carries an attitude (negative/positive) and a tense
(present/past). A single autoencoder is trained with the attitude classifier
head only; tense is never supervised. Operators for each attribute are
prepared from the matching pair of sub-corpora, and each transfer is judged
by a TextCNN trained on that attribute.

Run with ``python3 recipes/multi_style.py``.
"""

from dataclasses import replace

from stylematrix.evaluation import train_eval_classifier
from stylematrix.experiments import build_toy_setup, two_way_transfer

setup = build_toy_setup()
ids = setup.encode(setup.train)
tense_judge = train_eval_classifier(ids, setup.train.attributes["tense"], len(setup.vocab),
                                    setup.config.cnn_config())

# Attitude flips with the other attribute left free; tense likewise.
for attribute, judge in (("attitude", setup.judge), ("tense", tense_judge)):
    r = two_way_transfer(setup, attribute=attribute, judge=judge).report
    print(f"{attribute:<9} acc {r.acc:6.2f}  bleu {r.bleu:6.2f}  g {r.g_score:6.2f}  mean {r.mean:6.2f}")

# Attitude transfer restricted to one tense at a time: the operators come from
# sentences that agree on tense, so only attitude differs between X and Y.
for tense, name in ((0, "present"), (1, "past")):
    sub = replace(setup, train=setup.train.where(tense=tense), heldout=setup.heldout.where(tense=tense))
    r = two_way_transfer(sub, attribute="attitude").report
    print(f"attitude within {name:<7} acc {r.acc:6.2f}  bleu {r.bleu:6.2f}")
