"""Independent brute-force reference implementations used only by tests.

Everything here is written from the published metric definitions with naive
algorithms (plain loops, recursive enumeration) and shares no code with the
package's metric or retrieval paths.
"""

from __future__ import annotations

import math
import re
from functools import lru_cache

from claimnorm.stemmer import stem_token

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def toks(text):
    return _TOKEN_RE.findall(text.lower())


def ngram_counts(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def prf(overlap, n_cand, n_ref):
    p = overlap / n_cand if n_cand else 0.0
    r = overlap / n_ref if n_ref else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def rouge_n_oracle(candidate, reference, n):
    cand = ngram_counts(toks(candidate), n)
    ref = ngram_counts(toks(reference), n)
    overlap = 0
    for g, c in cand.items():
        overlap += min(c, ref.get(g, 0))
    return prf(overlap, sum(cand.values()), sum(ref.values()))


def rouge_l_oracle(candidate, reference):
    a = tuple(toks(candidate))
    b = tuple(toks(reference))

    @lru_cache(maxsize=None)
    def lcs(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + lcs(i + 1, j + 1)
        return max(lcs(i + 1, j), lcs(i, j + 1))

    length = lcs(0, 0) if a and b else 0
    return prf(length, len(a), len(b))


def meteor_oracle(candidate, reference):
    """Exhaustive matching + chunk search; feasible for short sentences."""
    cand = toks(candidate)
    ref = toks(reference)
    if not cand or not ref:
        return 0.0
    ref_stems = [stem_token(t) for t in ref]
    compatible = [
        [j for j in range(len(ref)) if cand[i] == ref[j] or stem_token(cand[i]) == ref_stems[j]]
        for i in range(len(cand))
    ]

    best = {"m": -1, "chunks": 0}

    def chunks_of(pairs):
        if not pairs:
            return 0
        count = 1
        for (c0, r0), (c1, r1) in zip(pairs, pairs[1:]):
            if c1 != c0 + 1 or r1 != r0 + 1:
                count += 1
        return count

    def enumerate_matchings(i, used, pairs):
        if i == len(cand):
            m = len(pairs)
            ch = chunks_of(pairs)
            if m > best["m"] or (m == best["m"] and ch < best["chunks"]):
                best["m"], best["chunks"] = m, ch
            return
        for j in compatible[i]:
            if j in used:
                continue
            enumerate_matchings(i + 1, used | {j}, pairs + [(i, j)])
        enumerate_matchings(i + 1, used, pairs)

    enumerate_matchings(0, frozenset(), [])
    m = best["m"]
    if m == 0:
        return 0.0
    p = m / len(cand)
    r = m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (best["chunks"] / m) ** 3
    return fmean * (1 - penalty)


def max_matching_oracle(cand, ref):
    """Maximum bipartite matching size over stem-compatible token pairs."""
    ref_stems = [stem_token(t) for t in ref]
    compatible = [
        [j for j in range(len(ref)) if cand[i] == ref[j] or stem_token(cand[i]) == ref_stems[j]]
        for i in range(len(cand))
    ]

    def recurse(i, used):
        if i == len(cand):
            return 0
        best = recurse(i + 1, used)
        for j in compatible[i]:
            if j not in used:
                best = max(best, 1 + recurse(i + 1, used | {j}))
        return best

    return recurse(0, frozenset())


def top_k_oracle(ids, vectors, query, k, exclude=None):
    """Exhaustive scan with plain-python cosine and (−sim, id) ordering."""

    def cos(u, v):
        dot = sum(a * b for a, b in zip(u, v))
        nu = math.sqrt(sum(a * a for a in u))
        nv = math.sqrt(sum(b * b for b in v))
        return dot / (nu * nv)

    scored = [
        (id_, cos(vec, query)) for id_, vec in zip(ids, vectors) if id_ != exclude
    ]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]
