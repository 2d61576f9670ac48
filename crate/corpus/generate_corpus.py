#!/usr/bin/env python3
"""Deterministically regenerate the bundled corpus (zipf-137k.txt).

The corpus is synthetic so the repository stays self-contained and freely
redistributable. Word shapes are pronounceable pseudo-words; rank
frequencies follow a Zipf-Mandelbrot law, the standard model for word
frequencies in natural-language text, so coverage behaves like it does on
a real novel-length corpus.

    python3 generate_corpus.py > zipf-137k.txt

Requires numpy. Output is fixed by the constants below; regeneration is
byte-identical.
"""

import numpy as np

TOKENS = 137_738  # total corpus size
VOCAB = 40_000  # available ranks (the realized distinct count is lower)
EXPONENT = 1.15  # Zipf-Mandelbrot exponent a
SHIFT = 2.7  # Zipf-Mandelbrot shift b: weight(r) = (r + b) ** -a
SEED = 19_530_716

# Syllable parts are chosen so no concatenation of syllables can be read
# as a different syllable sequence (codas never combine with a following
# onset to form another onset), keeping word_for injective.
ONSETS = [
    "b", "c", "d", "f", "g", "h", "j", "l", "m", "n", "p", "r", "s", "t",
    "v", "z", "br", "ch", "cl", "cr", "fl", "fr", "gr", "pl", "pr", "qu",
    "tr", "bl",
]
VOWELS = ["a", "e", "i", "o", "u", "ai", "ia", "ue"]
CODAS = ["", "n", "r", "s", "l"]


def word_for(index: int) -> str:
    """Pseudo-word for a vocabulary index: 2-3 syllables, mixed radix."""
    syllables = 2 + index % 2
    parts = []
    state = index
    for _ in range(syllables):
        state, onset = divmod(state, len(ONSETS))
        state, vowel = divmod(state, len(VOWELS))
        state, coda = divmod(state, len(CODAS))
        parts.append(ONSETS[onset] + VOWELS[vowel] + CODAS[coda])
    return "".join(parts)


def main() -> None:
    rng = np.random.Generator(np.random.PCG64(SEED))

    # Frequency-rank weights, then shuffle which word carries which rank so
    # alphabetically similar words do not share similar frequencies.
    ranks = np.arange(1, VOCAB + 1, dtype=np.float64)
    weights = (ranks + SHIFT) ** -EXPONENT
    weights /= weights.sum()
    vocabulary = [word_for(i) for i in range(VOCAB)]
    assert len(set(vocabulary)) == VOCAB, "word shapes must be unique"
    rng.shuffle(vocabulary)

    draws = rng.choice(VOCAB, size=TOKENS, p=weights)

    lines = []
    position = 0
    while position < TOKENS:
        length = int(rng.integers(6, 16))
        sentence = [vocabulary[draw] for draw in draws[position : position + length]]
        sentence[0] = sentence[0].capitalize()
        lines.append(" ".join(sentence) + ".")
        position += length
    print("\n".join(lines))


if __name__ == "__main__":
    main()
