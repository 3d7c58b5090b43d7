"""Writes embeddings.txt: small word2vec-format vectors for the bundled corpus.

Words share a cluster direction (people, animals, motion verbs, ...) plus an
individual offset; inflections sit close to their lemma and near-synonyms
close to each other. Deterministic for a fixed seed.
"""
import random

DIM = 16
rng = random.Random(20170915)


def gauss(scale):
    return [rng.gauss(0.0, scale) for _ in range(DIM)]


def add(*vs):
    return [sum(xs) for xs in zip(*vs)]


clusters = {name: gauss(1.0) for name in
            ["person", "animal", "pursue", "emotion", "transfer", "food",
             "music", "place", "size", "colour", "function", "rest", "number"]}

words = {}


def word(name, cluster, spread=0.6, near=None):
    base = words[near] if near else clusters[cluster]
    words[name] = add(base, gauss(spread if not near else 0.15))


for n in ["tom", "jerry", "morty", "rick", "anna", "mark"]:
    word(n, "person", 0.7)
for n in ["man", "woman", "teacher", "student", "kid"]:
    word(n, "person", 0.8)
word("kids", None, near="kid")
for n in ["cat", "dog", "bird", "mouse"]:
    word(n, "animal", 0.7)

word("chase", "pursue", 0.5)
word("catch", None, near="chase")
for f in ["chasing", "chased"]:
    word(f, None, near="chase")
for f in ["catching", "caught"]:
    word(f, None, near="catch")
word("bite", "pursue", 0.8)
for f in ["bit", "bitten", "bites"]:
    word(f, None, near="bite")
word("watch", "pursue", 0.9)
for f in ["watched", "watches"]:
    word(f, None, near="watch")

word("laugh", "emotion", 0.6)
for f in ["laughing", "laughs"]:
    word(f, None, near="laugh")
word("thank", "emotion", 0.7)
for f in ["thanked", "thanks"]:
    word(f, None, near="thank")
word("pay", "transfer", 0.6)
word("paid", None, near="pay")

word("slice", "food", 0.5)
word("cut", None, near="slice")
for f in ["slicing", "cutting"]:
    word(f, None, near=f.replace("slicing", "slice").replace("cutting", "cut"))
word("onion", "food", 0.6)

word("play", "music", 0.6)
word("playing", None, near="play")
word("guitar", "music", 0.6)
word("sing", "music", 0.7)
word("sings", None, near="sing")
word("dance", "music", 0.7)
word("dancing", None, near="dance")

word("run", "rest", 0.9)
for f in ["running", "runs"]:
    word(f, None, near="run")
word("sleep", "rest", 0.6)
word("sleeps", None, near="sleep")

word("yard", "place", 0.5)
word("forecourt", None, near="yard")
word("park", "place", 0.5)

word("little", "size", 0.5)
word("big", "size", 0.5)
word("three", "number", 0.5)
word("asian", "colour", 1.0)
word("blue", "colour", 0.5)
word("brown", "colour", 0.5)

for f in ["the", "a", "an", "is", "are", "was", "be", "being", "by", "at", "in"]:
    words[f] = [0.3 * x for x in add(clusters["function"], gauss(0.4))]

with open("embeddings.txt", "w") as out:
    out.write(f"{len(words)} {DIM}\n")
    for name, vec in words.items():
        out.write(name + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")
