"""Synthetic attitude/tense/intensity corpora for desk-scale experiments.

Two domains share adjectives, verbs and function words but use different
nouns and sentence templates, so operators prepared on one domain can be
applied to the other.

Words that fill the same template slot would get identical contexts and
therefore near-identical CBOW vectors. To avoid that, the grammar has
selectional preferences: each noun licenses its own subset of adjectives
and verbs, each verb its pronoun, each adjective one intensifier, and time
adverbs follow the tense and the noun.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .corpus import LabeledCorpus

NEG, POS = 0, 1
PRESENT, PAST = 0, 1

ATTITUDES = {"neg": NEG, "pos": POS}
TENSES = {"pres": PRESENT, "past": PAST}

ADJECTIVES = {
    POS: ("good", "great", "nice", "excellent", "amazing"),
    NEG: ("bad", "awful", "poor", "terrible", "horrible"),
}
VERBS = {
    (POS, PRESENT): ("love", "like", "enjoy"),
    (POS, PAST): ("loved", "liked", "enjoyed"),
    (NEG, PRESENT): ("hate", "dislike", "avoid"),
    (NEG, PAST): ("hated", "disliked", "avoided"),
}
COPULA = {PRESENT: "is", PAST: "was"}
ADVERBS = {PRESENT: ("now", "today"), PAST: ("yesterday", "before")}
PRONOUNS = ("i", "we", "they")
INTENSIFIERS = ("very", "really")

# Slots: {n} noun, {be} copula, {int} adjective intensifier and {intv} verb
# intensifier (both empty at intensity 1), {a}/{a2} adjectives of the
# sentence polarity, {v} verb, {p} pronoun, {t} time adverb.
TEMPLATES = {
    "restaurant": (
        "the {n} {be} {int} {a} {t}",
        "{p} {intv} {v} the {n} {t}",
        "the {n} {be} {int} {a} and {a2}",
    ),
    "product": (
        "this {n} {be} {int} {a} {t}",
        "{p} {intv} {v} this {n} {t}",
        "my {n} {be} {a} and {int} {a2}",
    ),
}
NOUNS = {
    "restaurant": ("food", "staff", "service", "place", "pizza", "waiter"),
    "product": ("phone", "screen", "battery", "case", "charger", "price"),
}


def _licences(n_heads: int, n_deps: int, k: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Give each head a k-subset of dependents, distinct across heads where possible."""
    subsets = list(combinations(range(n_deps), k))
    rng.shuffle(subsets)
    return [subsets[i % len(subsets)] for i in range(n_heads)]


@dataclass
class ToyGrammar:
    """Template grammar for one domain.

    ``seed`` drives sampling; ``structure_seed`` fixes the selectional
    preferences and is best left shared between domains.
    """

    domain: str = "restaurant"
    seed: int = 0
    structure_seed: int = 7
    templates: tuple[str, ...] = field(default=())
    nouns: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.domain not in TEMPLATES:
            raise ValueError(f"unknown toy domain {self.domain!r}")
        self.templates = self.templates or TEMPLATES[self.domain]
        self.nouns = self.nouns or NOUNS[self.domain]
        rng = np.random.default_rng([self.structure_seed, len(self.domain)])
        n = len(self.nouns)
        self.noun_adjectives = {a: _licences(n, 5, 3, rng) for a in (NEG, POS)}
        self.noun_verbs = {a: _licences(n, 3, 2, rng) for a in (NEG, POS)}
        self.verb_pronouns = {a: _licences(3, len(PRONOUNS), 1, rng) for a in (NEG, POS)}
        self.noun_adverb = rng.integers(2, size=n)
        self.adjective_intensifier = {a: rng.integers(len(INTENSIFIERS), size=5) for a in (NEG, POS)}

    @property
    def max_len(self) -> int:
        return max(len(t.split()) for t in self.templates)

    def sentence(self, rng: np.random.Generator, attitude: int, tense: int,
                 intensity: int) -> list[str]:
        template = self.templates[rng.integers(len(self.templates))]
        noun = int(rng.integers(len(self.nouns)))
        adj_ids = self.noun_adjectives[attitude][noun]
        a, a2 = rng.choice(adj_ids, size=2, replace=False)
        verb_ids = self.noun_verbs[attitude][noun]
        verb = int(verb_ids[rng.integers(len(verb_ids))])
        pron_ids = self.verb_pronouns[attitude][verb]
        strong = intensity == 2
        int_adj = a2 if "{int} {a2}" in template else a
        slots = {
            "n": self.nouns[noun],
            "be": COPULA[tense],
            "int": INTENSIFIERS[self.adjective_intensifier[attitude][int_adj]] if strong else "",
            "intv": "really" if strong else "",
            "a": ADJECTIVES[attitude][a],
            "a2": ADJECTIVES[attitude][a2],
            "v": VERBS[attitude, tense][verb],
            "p": PRONOUNS[pron_ids[rng.integers(len(pron_ids))]],
            "t": ADVERBS[tense][self.noun_adverb[noun]],
        }
        return template.format(**slots).split()


def _parse_cell(cell) -> tuple[int, int, int]:
    try:
        attitude, tense, intensity = cell
        att = ATTITUDES[attitude] if isinstance(attitude, str) else int(attitude)
        ten = TENSES[tense] if isinstance(tense, str) else int(tense)
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"unknown cell {cell!r}") from None
    if att not in (NEG, POS) or ten not in (PRESENT, PAST) or intensity not in (1, 2):
        raise ValueError(f"unknown cell {cell!r}")
    return att, ten, int(intensity)


def generate(grammar: ToyGrammar, n_per_cell: int, cells, name: str | None = None) -> LabeledCorpus:
    """Sample ``n_per_cell`` sentences for each (attitude, tense, intensity) cell.

    Labels are the attitude (0 negative, 1 positive); tense and intensity are
    stored as attributes. Cells may use names ("pos", "past") or integers.
    """
    if n_per_cell < 1:
        raise ValueError("n_per_cell must be >= 1")
    parsed = [_parse_cell(c) for c in cells]
    rng = np.random.default_rng(grammar.seed)
    texts, att, ten, inten = [], [], [], []
    for a, t, i in parsed:
        for _ in range(n_per_cell):
            texts.append(grammar.sentence(rng, a, t, i))
            att.append(a)
            ten.append(t)
            inten.append(i)
    return LabeledCorpus(texts, np.array(att), name or grammar.domain,
                         {"attitude": np.array(att), "tense": np.array(ten),
                          "intensity": np.array(inten)})


def all_cells() -> list[tuple[int, int, int]]:
    return [(a, t, i) for a in (NEG, POS) for t in (PRESENT, PAST) for i in (1, 2)]


def rating(corpus: LabeledCorpus) -> np.ndarray:
    """Map attitude and intensity to a 1/2/4/5 star rating."""
    att = corpus.attributes["attitude"]
    inten = corpus.attributes["intensity"]
    return np.where(att == POS, 3 + inten, 3 - inten)
