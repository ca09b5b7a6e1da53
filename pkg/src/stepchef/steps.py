"""Step canonicalization: reduce step text to (verb, object, destination).

The grammar covers both domains' step wordings as printed in the guideline
documents plus the common paraphrases providers produce ("grasp the empty
cup", "place the cup in the final workspace").  Unknown text canonicalizes to
None and is compared by normalized string instead.
"""

from __future__ import annotations

import re

Canonical = tuple[str, str | None, str | None]


def normalize_step_text(text: str) -> str:
    t = " ".join(text.strip().lower().split())
    t = t.rstrip(".!?").strip()
    return t.replace("dishwaster", "dishwasher")


_CANONICAL_PATTERNS = [
    (re.compile(r"^(?:get|grasp|take|fetch) (?:an |the )?empty cup\b.*$"),
     lambda m: ("get", "empty cup", "working area")),
    (re.compile(r"^discard\b.*cup.*$"),
     lambda m: ("discard", "cup", None)),
    (re.compile(r"^add (?:the )?(.+?) detergent (?:into|to) the detergent dispenser$"),
     lambda m: ("add", f"{m.group(1)} detergent", "detergent dispenser")),
    (re.compile(r"^(?:put|place) the (?:working )?cup (?:in|at|to|into) the (?:finished location|final workspace|finished area)$"),
     lambda m: ("put", "working cup", "finished location")),
    (re.compile(r"^put (?:the |one |a )?(.+?) on the (first|second|third) rack$"),
     lambda m: ("put", m.group(1), f"{m.group(2)} rack")),
    (re.compile(r"^(?:add|pour) (?:the )?(.+?) (?:to|into) the (?:working )?cup$"),
     lambda m: ("pour", "milk", "working cup") if "milk" in m.group(1) else ("add", m.group(1), "working cup")),
    (re.compile(r"^grasp the (.+)$"),
     lambda m: ("grasp", m.group(1), None)),
    (re.compile(r"^remove (?:the )?(?:large )?particles? from the (.+)$"),
     lambda m: ("remove", "particles", m.group(1))),
    (re.compile(r"^open the dishwasher$"),
     lambda m: ("open", "dishwasher", None)),
    (re.compile(r"^pull out the rack$"),
     lambda m: ("pull", "rack", None)),
    (re.compile(r"^close the dishwasher$"),
     lambda m: ("close", "dishwasher", None)),
    (re.compile(r"^(?:select the cycle and )?start (?:the )?dishwasher$"),
     lambda m: ("start", "dishwasher", None)),
    (re.compile(r"^after the dishwasher cycle is complete\b.*$"),
     lambda m: ("wait", "dishwasher", None)),
    (re.compile(r"^(?:make sure|verify|check)(?: that)? (?:the )?(.+?) (?:is|are) clean and dry\b.*$"),
     lambda m: ("verify", m.group(1), None)),
    (re.compile(r"^return (?:the |all )?(.+?) to the finished location$"),
     lambda m: ("return", m.group(1), "finished location")),
    (re.compile(r"^stir\b.*$"),
     lambda m: ("stir", "mixture", None)),
]


def canonicalize(text: str) -> Canonical | None:
    """Reduce a step to a (verb, object, destination) triple, or None if unparsed."""
    t = normalize_step_text(text)
    for pattern, build in _CANONICAL_PATTERNS:
        m = pattern.match(t)
        if m:
            return build(m)
    return None
