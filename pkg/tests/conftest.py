import random

import pytest

from claimnorm.corpus import Post, PostClaimPair

# The five low-recall post/claim rows used throughout the filtering tests.
LOW_RECALL_ROWS = [
    (
        "Photo Before Landing Of PK-320",
        "Image shows Pakistani plane moments before crash in Karachi in May 2020",
        0.09,
    ),
    (
        "Strong people these health workers for Covid 19 ... they carry the dead "
        "bodies with one hand",
        "Authorities planted empty body bags in 'fake' pandemic plot",
        0.00,
    ),
    (
        "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA\n"
        "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA\n"
        "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA None",
        "Photo shows a fatal mosque blast in Bangladesh",
        0.00,
    ),
    (
        "Vladmir Putin has dropped 800 Tigers and lions across the country to push "
        "people to stay home..sana all Russia: Containment:",
        "This photo shows a lion patrolling Russian streets during coronavirus lockdown",
        0.00,
    ),
    (
        '"Say it...you stand with.....?? ZELENSKYY 2018 5 @chrisskyarmy1 45"',
        "Photo shows Volodymyr Zelensky holding a jersey featuring a swastika",
        0.00,
    ),
]

# the same triplicated sentence with the stray trailing token on its own
# line, so segmentation sees three exact repeats
TRIPLICATED_POST = (
    "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA\n"
    "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA\n"
    "AC MASJID MELEDAK, 2 JEMAAH MENINGGAL DUNIA\n"
    "None"
)


def make_pair(idx, post_text, claim, language="eng", split="train"):
    post = Post(id=f"{language}-{split}-{idx}", language=language, text=post_text, split=split)
    return PostClaimPair(post=post, claim=claim)


@pytest.fixture
def low_recall_pairs():
    return [make_pair(i, post, claim) for i, (post, claim, _) in enumerate(LOW_RECALL_ROWS)]


_SUBJECTS = [
    "city council", "health ministry", "railway board", "school district",
    "water authority", "port agency", "labor union", "housing office",
    "transit agency", "energy board",
]
_ACTIONS = [
    "approves", "suspends", "expands", "delays", "audits",
    "funds", "cancels", "reviews", "launches", "restores",
]
_OBJECTS = [
    "new bridge repair program", "rural clinic vaccination drive",
    "night bus service routes", "flood relief payment scheme",
    "solar panel subsidy plan", "teacher training budget line",
    "harbor dredging contract work", "apartment inspection backlog list",
    "ticket pricing pilot study", "grid maintenance outage window",
]


def synthetic_corpus(n=20, seed=7):
    """Pairs whose claims are fully covered by their posts (recall 1.0)."""
    rng = random.Random(seed)
    pairs = []
    for i in range(n):
        subject = _SUBJECTS[i % len(_SUBJECTS)]
        action = _ACTIONS[i % len(_ACTIONS)]
        obj = _OBJECTS[(i * 3 + 1) % len(_OBJECTS)]
        claim = f"{subject} {action} {obj} in sector {i}"
        filler = " ".join(rng.choice(["breaking", "share", "urgent", "viral", "update"])
                          for _ in range(3))
        # duplicate sentence exercises the dedup stage
        post = f"{claim}. {claim}. {filler} everyone please read this now {i}."
        pairs.append(make_pair(i, post, claim))
    return pairs


@pytest.fixture
def clean_corpus_20():
    return synthetic_corpus(20)
