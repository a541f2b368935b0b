"""Turning free-form completion text back into taxonomy action sequences.

The language backend answers with something like::

    take brick, put brick, ___ mortar. The rest of the day ...

Parsing lowercases, truncates at the first period, splits on commas and
parentheses, then walks the items two slots at a time: verb slot, noun
slot.  Each slot keeps the longest lexicon entry found in its item;
underscore runs repeat the previous value for that slot; items matching
nothing are dropped.  The result is padded (or cut) to exactly ``z``
actions by repeating the last one, so a prediction always has the full
horizon length.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptySequenceError
from .taxonomy import NOUN, VERB, ActionLabel, ActionSequence, Taxonomy, longest_match

_SPLIT = re.compile(r"[,()]")
_BLANK = re.compile(r"_+$")


@dataclass(frozen=True)
class ParseContext:
    taxonomy: Taxonomy
    fallback_action: ActionLabel
    z: int


def truncate_first_period(text: str) -> str:
    """Everything before the first '.', or all of it if there is none."""
    head, _, _ = text.partition(".")
    return head


def split_items(text: str) -> list[str]:
    """Split on commas and parentheses, strip, drop empties."""
    return [item.strip() for item in _SPLIT.split(text) if item.strip()]


def map_items(
    items: list[str], tax: Taxonomy, fallback: ActionLabel
) -> ActionSequence:
    """Walk items through alternating verb/noun slots.

    A verb-slot item supplies the next action's verb; a noun-slot item
    completes it.  Items holding both a verb and a noun in separate spans
    form a whole action on their own.  Underscore runs reuse the previous
    verb or noun; unmatched items are skipped without consuming a slot.
    A pending verb at the end is completed with the previous noun.
    """
    tax.validate_label(fallback)
    prev_verb = fallback.verb_id
    prev_noun = fallback.noun_id
    pending_verb: int | None = None
    actions: list[ActionLabel] = []

    def emit(verb_id: int, noun_id: int) -> None:
        nonlocal prev_verb, prev_noun
        actions.append(ActionLabel(verb_id, noun_id))
        prev_verb = verb_id
        prev_noun = noun_id

    for item in items:
        vm = longest_match(item, tax, VERB)
        nm = longest_match(item, tax, NOUN)
        blank = _BLANK.fullmatch(item) is not None
        both = (
            vm is not None
            and nm is not None
            and (vm[1][1] <= nm[1][0] or nm[1][1] <= vm[1][0])
        )
        if both:
            # Self-contained "verb noun" item: flush any half-built action
            # first, then emit this one whole.
            if pending_verb is not None:
                emit(pending_verb, prev_noun)
                pending_verb = None
            emit(vm[0], nm[0])
        elif pending_verb is None:
            if vm is not None:
                pending_verb = vm[0]
            elif nm is not None:
                emit(prev_verb, nm[0])
            elif blank:
                pending_verb = prev_verb
        else:
            if nm is not None:
                emit(pending_verb, nm[0])
                pending_verb = None
            elif vm is not None:
                emit(pending_verb, prev_noun)
                pending_verb = vm[0]
            elif blank:
                emit(pending_verb, prev_noun)
                pending_verb = None
    if pending_verb is not None:
        emit(pending_verb, prev_noun)
    return actions


def pad_to_z(actions: ActionSequence, z: int) -> ActionSequence:
    """Repeat the last action until the sequence is exactly ``z`` long."""
    if z <= 0:
        raise EmptySequenceError(f"horizon must be positive, got {z}")
    if not actions:
        raise EmptySequenceError("cannot pad an empty action sequence")
    if len(actions) >= z:
        return list(actions[:z])
    return list(actions) + [actions[-1]] * (z - len(actions))


def parse_output(raw: str, ctx: ParseContext) -> ActionSequence:
    """Full completion-to-actions path; total over arbitrary input text.

    Text that yields no action at all becomes ``z`` copies of the
    fallback action.
    """
    items = split_items(truncate_first_period(raw.lower()))
    actions = map_items(items, ctx.taxonomy, ctx.fallback_action)
    if not actions:
        actions = [ctx.fallback_action]
    return pad_to_z(actions, ctx.z)
