#!/usr/bin/env python3
"""Regenerates the small fixture files under tests/data.

Two toy embedding tables (dims 5 and 3) with partial vocabulary overlap, plus
16-pair STS / entailment / paraphrase sets and the coverage fixtures.
Output is deterministic.
"""
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"

VOCAB = ("bob mary alice john likes loves hates sees helps a the dog cat man woman "
         "boy girl park ball runs plays sleeps in with big small red .").split()
MISSING_A = {"alice", "red"}
MISSING_B = {"john", "helps", "ball", "sleeps", "with", "big", ".", "park"}


def write_table(path, dim, words, rng, header):
    lines = []
    if header:
        lines.append(f"{len(words)} {dim}")
    for w in words:
        lines.append(w + " " + " ".join(f"{rng.uniform(-4, 4):.6f}" for _ in range(dim)))
    path.write_text("\n".join(lines) + "\n")


STS = [
    ("A man plays with a dog.", "A man plays with a cat.", 3.2),
    ("Bob likes Mary.", "Mary likes Bob.", 2.5),
    ("The girl runs in the park.", "A girl runs in a park.", 4.8),
    ("The cat sleeps.", "The dog runs.", 0.6),
    ("Alice loves John.", "Alice loves John.", 5.0),
    ("A big dog plays.", "A small dog plays.", 3.0),
    ("The boy sees the ball.", "The woman helps the man.", 0.2),
    ("Mary hates the red ball.", "Mary likes the red ball.", 1.8),
    ("A woman runs.", "A woman runs in the park.", 4.0),
    ("John helps Bob.", "Bob helps John.", 2.2),
    ("The small cat plays with a ball.", "A cat plays with the ball.", 4.4),
    ("A man sleeps.", "The girl sees a dog.", 0.0),
    ("Bob sees the big park.", "Bob sees the park.", 4.2),
    ("The dog likes the cat.", "The cat hates the dog.", 1.2),
    ("Alice plays.", "Mary plays.", 2.8),
    ("A boy loves a girl.", "A girl loves a boy.", 3.6),
]

NLI = [
    ("A man plays with a dog.", "A man plays.", "entailment"),
    ("A man plays with a dog.", "A man sleeps.", "contradiction"),
    ("A man plays with a dog.", "A man plays with a big dog.", "neutral"),
    ("The girl runs in the park.", "The girl runs.", "entailment"),
    ("The girl runs in the park.", "The girl sleeps.", "contradiction"),
    ("The girl runs.", "The girl runs in the park.", "neutral"),
    ("Bob loves Mary.", "Bob likes Mary.", "entailment"),
    ("Bob loves Mary.", "Bob hates Mary.", "contradiction"),
    ("Bob likes Mary.", "Bob loves Mary.", "neutral"),
    ("A small cat sleeps.", "A cat sleeps.", "entailment"),
    ("A small cat sleeps.", "A small cat runs.", "contradiction"),
    ("A cat sleeps.", "A red cat sleeps.", "neutral"),
    ("The woman helps the boy.", "The woman sees the boy.", "neutral"),
    ("The boy plays with the ball.", "The boy plays.", "entailment"),
    ("The boy plays with the ball.", "The boy sleeps.", "contradiction"),
    ("John sees Alice.", "John sees Alice in the park.", "neutral"),
]

PARA = [
    ("Bob likes Mary.", "Bob loves Mary.", 1),
    ("Bob likes Mary.", "Mary likes Bob.", 0),
    ("The girl runs in the park.", "A girl runs in a park.", 1),
    ("The cat sleeps.", "The dog runs.", 0),
    ("A man plays with a dog.", "A man plays with the dog.", 1),
    ("A man plays with a dog.", "A woman sees a cat.", 0),
    ("John helps Alice.", "John helps Alice.", 1),
    ("John helps Alice.", "Alice helps John.", 0),
    ("A big ball.", "The big ball.", 1),
    ("A big ball.", "A small ball.", 0),
    ("The boy sees the girl.", "The boy sees a girl.", 1),
    ("The boy sees the girl.", "The girl hates the boy.", 0),
    ("Mary plays in the park.", "Mary plays in a park.", 1),
    ("Mary plays in the park.", "Mary sleeps.", 0),
    ("The red cat sleeps.", "A red cat sleeps.", 1),
    ("The red cat sleeps.", "The small dog runs.", 0),
]

# Word order is the only difference between high- and low-scoring pairs, and
# it sits after a shared four-token prefix. With max_len = 4 the word-level
# comparisons see only the prefix, so the order signal has to come through
# the sentence embeddings.
ORDER_PREFIXES = ["in the big park", "with a small dog", "the red ball and", "a boy with the"]
ORDER_AGENTS = ["bob", "mary", "alice", "john", "man", "woman", "girl", "cat"]
ORDER_VERBS = ["likes", "loves", "hates", "sees", "helps"]
ORDER_TRIPLES = 240


def order_pairs(rng, n):
    combos = [(p, x, v, y) for p in ORDER_PREFIXES for x in ORDER_AGENTS for v in ORDER_VERBS
              for y in ORDER_AGENTS if x != y]
    rows = []
    for prefix, x, verb, y in rng.sample(combos, n):
        s1 = f"{prefix} {x} {verb} {y}"
        rows.append((s1, s1, 5.0))
        rows.append((s1, f"{prefix} {y} {verb} {x}", 1.0))
    return rows


def write_pairs(path, rows):
    path.write_text("".join(f"{a}\t{b}\t{g}\n" for a, b, g in rows))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20180401)
    write_table(OUT / "emb_a.txt", 5, [w for w in VOCAB if w not in MISSING_A], rng, header=True)
    write_table(OUT / "emb_b.txt", 3, [w for w in VOCAB if w not in MISSING_B], rng, header=False)
    write_pairs(OUT / "sts_toy.tsv", STS)
    write_pairs(OUT / "nli_toy.tsv", NLI)
    write_pairs(OUT / "para_toy.tsv", PARA)
    write_pairs(OUT / "order_toy.tsv", order_pairs(random.Random(1994), ORDER_TRIPLES))

    # Coverage: vocab {a, b, c, d}; cov_abc holds a, b, c.
    (OUT / "cov_abc.txt").write_text("a 0.1 0.2\nb 0.3 0.4\nc 0.5 0.6\n")
    (OUT / "cov_ab.txt").write_text("a 1 0\nb 0 1\n")
    (OUT / "cov_cd.txt").write_text("c 1 1\nd -1 1\n")
    write_pairs(OUT / "cov_pairs.tsv", [("a b", "c d", 1.0)])


if __name__ == "__main__":
    main()
