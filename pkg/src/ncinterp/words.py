"""Words over N generators and admissible index sets.

A word is a plain tuple of 1-based generator indices; ``()`` is the empty
word.  A finite word set is *admissible* when removing the first or the
last letter of any member stays inside the set, which is the closure
property that makes backward shifts and prefix-product recursions well
defined downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import InvalidDataError, ResourceCapError

Word = tuple  # tuple[int, ...], letters in 1..n_vars

EMPTY_WORD: Word = ()

#: hard default on enumerated word-set sizes
DEFAULT_WORD_CAP = 50_000


def word_key(w: Word):
    """Canonical sort key: by length, then lexicographically."""
    return (len(w), w)


def word_to_str(w: Word) -> str:
    """Serialize a word as dot-separated letters; the empty word is ``""``."""
    return ".".join(str(k) for k in w)


def word_from_str(s: str) -> Word:
    if s == "":
        return ()
    try:
        letters = tuple(int(tok) for tok in s.split("."))
    except ValueError as exc:
        raise InvalidDataError(f"malformed word key {s!r}") from exc
    if any(k < 1 for k in letters):
        raise InvalidDataError(f"word letters must be >= 1, got {s!r}")
    return letters


def concat(w1: Word, w2: Word) -> Word:
    """Product in the free semigroup; the empty word is neutral."""
    return tuple(w1) + tuple(w2)


def check_letters(w: Word, n_vars: int) -> bool:
    return all(1 <= k <= n_vars for k in w)


def validate_admissible(n_vars, words):
    """Check the admissibility of a word set.

    Returns ``(True, None)`` when ``words`` is closed under deletion of the
    first or last letter (with the empty word present unless the set is
    empty), else ``(False, diagnostic)`` naming the first violating word in
    canonical order.
    """
    wset = set(map(tuple, words))
    for w in sorted(wset, key=word_key):
        if not check_letters(w, n_vars):
            return False, f"word {word_to_str(w)!r} has letters outside 1..{n_vars}"
    if wset and EMPTY_WORD not in wset:
        return False, "non-empty admissible set must contain the empty word"
    for w in sorted(wset, key=word_key):
        if len(w) < 1:
            continue
        if w[1:] not in wset:
            return False, (
                f"first-letter deletion of {word_to_str(w)!r} "
                f"({word_to_str(w[1:])!r}) is missing"
            )
        if w[:-1] not in wset:
            return False, (
                f"last-letter deletion of {word_to_str(w)!r} "
                f"({word_to_str(w[:-1])!r}) is missing"
            )
    return True, None


@dataclass(frozen=True)
class AdmissibleSet:
    """A finite admissible word set over ``n_vars`` generators.

    ``words`` is kept in canonical order (length, then lexicographic) so
    iteration is deterministic everywhere.
    """

    n_vars: int
    words: tuple = field(default=())

    def __post_init__(self):
        if self.n_vars < 1:
            raise InvalidDataError("n_vars must be >= 1")
        ordered = tuple(sorted(set(map(tuple, self.words)), key=word_key))
        ok, why = validate_admissible(self.n_vars, ordered)
        if not ok:
            raise InvalidDataError(f"not an admissible set: {why}")
        object.__setattr__(self, "words", ordered)

    def __iter__(self):
        return iter(self.words)

    def __len__(self):
        return len(self.words)

    def __contains__(self, w) -> bool:
        return tuple(w) in set(self.words)

    @property
    def max_len(self) -> int:
        return max((len(w) for w in self.words), default=0)

    def index(self) -> dict:
        """Word -> position in canonical order."""
        return {w: i for i, w in enumerate(self.words)}

    def issubset(self, other: "AdmissibleSet") -> bool:
        return set(self.words) <= set(other.words)


def lambda_m(n_vars: int, m: int, cap: int = DEFAULT_WORD_CAP) -> AdmissibleSet:
    """All words of length at most ``m``."""
    if n_vars < 1 or m < 0:
        raise InvalidDataError("need n_vars >= 1 and m >= 0")
    count = m + 1 if n_vars == 1 else (n_vars ** (m + 1) - 1) // (n_vars - 1)
    if count > cap:
        raise ResourceCapError(
            f"lambda_m(n_vars={n_vars}, m={m}) has {count} words, cap is {cap}"
        )
    words = [()]
    for length in range(1, m + 1):
        words.extend(product(range(1, n_vars + 1), repeat=length))
    return AdmissibleSet(n_vars, tuple(words))


def is_lambda_m(lam: AdmissibleSet):
    """Return ``m`` if ``lam`` is exactly all words of length <= m, else None."""
    m = lam.max_len
    count = m + 1 if lam.n_vars == 1 else (lam.n_vars ** (m + 1) - 1) // (lam.n_vars - 1)
    return m if len(lam) == count else None


def boundary(lam: AdmissibleSet) -> tuple:
    """Minimal words outside the set certifying joint nilpotency.

    ``B = { g_k w : w in lam, g_k w not in lam }``.  A tuple annihilates
    every word outside ``lam`` iff it annihilates every word of ``B``:
    any outside word factors as ``prefix . b`` where ``b`` is the shortest
    outside suffix, which lands in ``B`` by construction.
    """
    inside = set(lam.words)
    out = {
        (k,) + w
        for w in lam.words
        for k in range(1, lam.n_vars + 1)
        if (k,) + w not in inside
    }
    if not lam.words:
        out = {(k,) for k in range(1, lam.n_vars + 1)}
    return tuple(sorted(out, key=word_key))


def random_admissible(n_vars: int, n_words: int, seed: int) -> AdmissibleSet:
    """Grow a random admissible set of exactly ``n_words`` words.

    Starts from the empty word and repeatedly appends a letter to a member
    whose first-letter deletion is already present, which preserves
    admissibility at every step.
    """
    if n_words < 1:
        raise InvalidDataError("n_words must be >= 1")
    rng = np.random.default_rng(seed)
    words = {EMPTY_WORD}
    while len(words) < n_words:
        candidates = sorted(
            {
                w + (k,)
                for w in words
                for k in range(1, n_vars + 1)
                if w + (k,) not in words and (w + (k,))[1:] in words
            },
            key=word_key,
        )
        pick = candidates[rng.integers(0, len(candidates))]
        words.add(pick)
    return AdmissibleSet(n_vars, tuple(words))
