"""Template-generated two-register corpus for the transfer experiments.

Body sentences are full clauses with determiners and auxiliaries; headlines
are derived from them by deleting every DET/AUX token and recasing nouns
with a capital first letter, which makes case ambiguous between NOUN and
PROPN in headline position (several forms double as names).
"""
from __future__ import annotations

import numpy as np

from headtag.data import Corpus, DomainId, Sentence, Token
from headtag.rng import stream
from headtag.tags import PosTag

T = PosTag

NOUNS = [
    "dog", "cat", "market", "firm", "deal", "strike", "budget", "report",
    "road", "bridge", "school", "court", "film", "crowd", "garden", "farmer",
    "doctor", "mayor", "talk", "game", "price", "union", "ban", "tax",
    # These forms double as proper names below, so case carries the signal.
    "bill", "mark", "rose", "sage", "hunter", "grace",
]
PLURAL_NOUNS = [
    "dogs", "markets", "firms", "deals", "strikes", "budgets", "reports",
    "roads", "schools", "courts", "films", "farmers", "doctors", "talks",
    "games", "prices", "unions", "taxes", "bills",
]
NAME_LIKE_NOUNS = ["bill", "mark", "rose", "sage", "hunter", "grace"]
PURE_NAMES = ["Mary", "John", "Paris", "Berlin", "Tesla", "Nokia", "Oslo", "Kenya"]

# base, 3rd person, past/participle, gerund
VERBS = [
    ("walk", "walks", "walked", "walking"),
    ("buy", "buys", "bought", "buying"),
    ("sell", "sells", "sold", "selling"),
    ("open", "opens", "opened", "opening"),
    ("close", "closes", "closed", "closing"),
    ("cut", "cuts", "cut", "cutting"),
    ("raise", "raises", "raised", "raising"),
    ("move", "moves", "moved", "moving"),
    ("win", "wins", "won", "winning"),
    ("meet", "meets", "met", "meeting"),
    ("join", "joins", "joined", "joining"),
    ("review", "reviews", "reviewed", "reviewing"),
    ("visit", "visits", "visited", "visiting"),
    ("back", "backs", "backed", "backing"),
]
ADJS = ["new", "old", "big", "small", "late", "early", "local", "major"]
ADPS = ["in", "on", "at", "over", "from", "by"]
NUMS = ["two", "three", "five", "ten"]


def _name(rng) -> tuple[str, PosTag]:
    pool = PURE_NAMES + [w.capitalize() for w in NAME_LIKE_NOUNS]
    return pool[rng.integers(len(pool))], T.PROPN


def _noun(rng) -> tuple[str, PosTag]:
    return NOUNS[rng.integers(len(NOUNS))], T.NOUN


def _plural(rng) -> tuple[str, PosTag]:
    return PLURAL_NOUNS[rng.integers(len(PLURAL_NOUNS))], T.NOUN


def _adj(rng) -> tuple[str, PosTag]:
    return ADJS[rng.integers(len(ADJS))], T.ADJ


def _adp(rng) -> tuple[str, PosTag]:
    return ADPS[rng.integers(len(ADPS))], T.ADP


def _num(rng) -> tuple[str, PosTag]:
    return NUMS[rng.integers(len(NUMS))], T.NUM


def _verb(rng, form: int) -> tuple[str, PosTag]:
    return VERBS[rng.integers(len(VERBS))][form], T.VERB


def _det(rng) -> tuple[str, PosTag]:
    return ("the" if rng.random() < 0.7 else "a"), T.DET


def _aux_prog(rng) -> tuple[str, PosTag]:
    return ("is" if rng.random() < 0.6 else "was"), T.AUX


def _maybe_adj(rng, out):
    if rng.random() < 0.45:
        out.append(_adj(rng))


def _np(rng, out):
    """Determiner phrase: det [adj] noun."""
    out.append(_det(rng))
    _maybe_adj(rng, out)
    out.append(_noun(rng))


def _make_body(rng) -> list[tuple[str, PosTag]]:
    out: list[tuple[str, PosTag]] = []
    kind = int(rng.integers(11))
    if kind == 0:
        # The old firm is walking to the market .
        _np(rng, out)
        out.append(_aux_prog(rng))
        out.append(_verb(rng, 3))
        out.append(("to", T.ADP))
        _np(rng, out)
    elif kind == 1:
        # Mary is opening a new school .
        out.append(_name(rng))
        out.append(_aux_prog(rng))
        out.append(_verb(rng, 3))
        _np(rng, out)
    elif kind == 2:
        # The road over the bridge is old .
        _np(rng, out)
        out.append(_adp(rng))
        _np(rng, out)
        out.append(_aux_prog(rng))
        out.append(_adj(rng))
    elif kind == 3:
        # The firm is moving to buy three schools .
        _np(rng, out)
        out.append(_aux_prog(rng))
        out.append(_verb(rng, 3))
        out.append(("to", T.PART))
        out.append(_verb(rng, 0))
        out.append(_num(rng))
        out.append(_noun(rng))
    elif kind == 4:
        # John will open a market in Oslo .
        out.append(_name(rng))
        out.append(("will", T.AUX))
        out.append(_verb(rng, 0))
        _np(rng, out)
        out.append(_adp(rng))
        out.append(_name(rng))
    elif kind == 5:
        # The deal was backed by the mayor .
        _np(rng, out)
        out.append(("was", T.AUX))
        out.append(_verb(rng, 2))
        out.append(("by", T.ADP))
        _np(rng, out)
    elif kind == 6:
        # Mary met the doctor at the court .
        out.append(_name(rng))
        out.append(_verb(rng, 2))
        _np(rng, out)
        out.append(_adp(rng))
        _np(rng, out)
    elif kind == 7:
        # The mayor is meeting Nokia and the union .
        _np(rng, out)
        out.append(_aux_prog(rng))
        out.append(_verb(rng, 3))
        out.append(_name(rng))
        out.append(("and", T.CCONJ))
        _np(rng, out)
    elif kind == 8:
        # Local doctors visited Berlin .  (bare plural subject)
        _maybe_adj(rng, out)
        out.append(_plural(rng))
        out.append(_verb(rng, 2))
        out.append(_name(rng))
    elif kind == 9:
        # Mary met local farmers in two courts .  (bare plural objects)
        out.append(_name(rng))
        out.append(_verb(rng, 2))
        _maybe_adj(rng, out)
        out.append(_plural(rng))
        out.append(_adp(rng))
        out.append(_num(rng))
        out.append(_plural(rng))
    else:
        # The farmer selling films met Mary .  (reduced relative)
        _np(rng, out)
        out.append(_verb(rng, 3))
        out.append(_plural(rng))
        out.append(_verb(rng, 2))
        out.append(_name(rng))
    out.append((".", T.PUNCT))
    # Bodies are truecased sentences: capitalize the first word.
    form0, tag0 = out[0]
    out[0] = (form0[0].upper() + form0[1:], tag0)
    return out


def generate_body_corpus(
    n: int, domain: DomainId, seed: int, id_prefix: str = "b"
) -> Corpus:
    rng = stream(seed, "synth-bodies")
    sentences = []
    for i in range(n):
        pairs = _make_body(rng)
        tokens = tuple(Token(form, tag) for form, tag in pairs)
        sentences.append(Sentence(f"{id_prefix}{i}", tokens, domain))
    return Corpus(tuple(sentences), domain)


def derive_headline(sentence: Sentence, domain: DomainId) -> Sentence:
    """Headline register: drop DET/AUX tokens and capitalize nouns."""
    kept = []
    for token in sentence.tokens:
        if token.gold_tag in (T.DET, T.AUX):
            continue
        form = token.form
        if token.gold_tag == T.NOUN:
            form = form[0].upper() + form[1:]
        kept.append(Token(form, token.gold_tag))
    return Sentence(f"{sentence.id}.h", tuple(kept), domain)


def headline_corpus(body: Corpus, domain: DomainId) -> Corpus:
    return Corpus(tuple(derive_headline(s, domain) for s in body), domain)


def strip_tags(sentence: Sentence, domain: DomainId) -> Sentence:
    return Sentence(sentence.id, tuple(Token(t.form) for t in sentence.tokens), domain)


def make_pairs(body: Corpus, domain: DomainId) -> list[tuple[Sentence, Sentence]]:
    """Untagged (headline, lead) candidates, as the projection stage sees them."""
    pairs = []
    for sentence in body:
        headline = derive_headline(sentence, domain)
        pairs.append((strip_tags(headline, domain), strip_tags(sentence, domain)))
    return pairs


def _slice(corpus: Corpus, lo: int, hi: int) -> Corpus:
    return Corpus(corpus.sentences[lo:hi], corpus.domain)


def register_transfer_data(n_bodies: int = 2000, data_seed: int = 97):
    """Fixed experimental split: body train/val, a disjoint pool of
    (headline, lead) pairs for projection, and a gold headline test set."""
    body_dom = DomainId("body", 0)
    head_dom = DomainId("head", 1)
    bodies = generate_body_corpus(n_bodies, body_dom, seed=data_seed)
    n_train = int(n_bodies * 0.55)
    n_val = int(n_bodies * 0.125)
    n_pairs = int(n_bodies * 0.2)
    body_train = _slice(bodies, 0, n_train)
    body_val = _slice(bodies, n_train, n_train + n_val)
    pair_src = _slice(bodies, n_train + n_val, n_train + n_val + n_pairs)
    test_src = _slice(bodies, n_train + n_val + n_pairs, n_bodies)
    return {
        "body_dom": body_dom,
        "head_dom": head_dom,
        "body_train": body_train,
        "body_val": body_val,
        "pairs": make_pairs(pair_src, body_dom),
        "headline_test": headline_corpus(test_src, head_dom),
    }


def run_register_transfer(
    train_seed: int,
    data: dict | None = None,
    epochs: int = 3,
    learning_rate: float = 2e-3,
    dropout: float = 0.1,
    with_softmax_baseline: bool = False,
) -> dict[str, float]:
    """One seed of the body-vs-multi-domain experiment.

    Trains a body-only tagger, projects its predictions onto the pair pool
    to get silver headlines, trains a multi-domain tagger on body + silver
    under the identical budget, and scores both on the gold headline test.
    """
    from headtag.data import build_vocab
    from headtag.model import build_model, tag_corpus
    from headtag.projection import build_silver_corpus
    from headtag.training import TrainConfig, train, token_accuracy

    if data is None:
        data = register_transfer_data()
    body_dom, head_dom = data["body_dom"], data["head_dom"]
    config = TrainConfig(
        learning_rate=learning_rate,
        dropout_rate=dropout,
        epochs=epochs,
        seed=train_seed,
    )

    vocab_body = build_vocab([data["body_train"]])
    body_model = build_model(vocab_body, [body_dom], seed=train_seed)
    body_model, _ = train(body_model, [data["body_train"]], [data["body_val"]], config)

    silver_train, silver_val, _ = build_silver_corpus(
        data["pairs"], body_model, body_dom, 0.7, seed=train_seed, out_domain=head_dom
    )

    vocab_multi = build_vocab([data["body_train"], silver_train])
    multi_model = build_model(vocab_multi, [body_dom, head_dom], seed=train_seed)
    multi_model, _ = train(
        multi_model,
        [data["body_train"], silver_train],
        [data["body_val"], silver_val],
        config,
    )

    test = data["headline_test"]
    results = {
        "body_only": token_accuracy(test, body_model, body_dom),
        "multi_domain": token_accuracy(test, multi_model, head_dom),
    }
    if with_softmax_baseline:
        soft_model = build_model(vocab_body, [body_dom], use_crf=False, seed=train_seed)
        soft_model, _ = train(
            soft_model, [data["body_train"]], [data["body_val"]], config
        )
        results["body_only_softmax"] = token_accuracy(test, soft_model, body_dom)
    return results
