"""Reference BLEU values for tests/data/bleu_oracle.json, computed with NLTK.

Variant: BLEU-4, uniform weights, brevity penalty, zero when no unigram
matches, add-one on numerator and denominator for higher orders without
matches. Run: python3 tests/oracles/bleu_oracle.py > tests/data/bleu_oracle.json
"""
import json

from nltk.translate.bleu_score import sentence_bleu

PAIRS = [
    ("the cat sat on the mat", "the cat sat on a mat"),
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("a b c d e f g", "a b c d e f g h i j"),
    ("x y z", "a b c d"),
    ("ent3 attr1 val2", "w1 ent3 w9 attr1 val2 w4"),
    ("w1 ent3 w9 attr1 val2 w4", "w1 ent3 w9 attr1 val2 w4"),
    ("w1 ent3 w9 attr1 val0 w4", "w1 ent3 w9 attr1 val2 w4"),
    ("the the the the the the the", "the cat is on the mat"),
    ("on the mat the cat sat", "the cat sat on the mat"),
    ("a", "a"),
    ("a b", "a b c"),
    ("a b c", "a b c"),
    ("a b c d", "a b c d"),
    ("one two three four five six seven eight nine ten", "one two three four five"),
    ("alpha beta gamma delta alpha beta gamma delta", "alpha beta gamma delta"),
    ("w5 w6 w7 w8 ent1 attr2 val1", "ent1 attr2 val1"),
    ("p q r s t u", "u t s r q p"),
    ("m n m n m n", "m n o p m n"),
    ("", "a b c d"),
    ("the quick brown fox jumps over the lazy dog", "a quick brown dog jumps over the lazy fox"),
]


def add_one_higher_orders(p_n, *args, **kwargs):
    out = []
    for i, p in enumerate(p_n):
        if i > 0 and p.numerator == 0:
            out.append((p.numerator + 1) / (p.denominator + 1))
        else:
            out.append(p.numerator / p.denominator)
    return out


def main():
    rows = []
    for hyp, ref in PAIRS:
        value = sentence_bleu([ref.split()], hyp.split(), smoothing_function=add_one_higher_orders)
        rows.append({"retrieved": hyp, "gold": ref, "bleu": float(value)})
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
