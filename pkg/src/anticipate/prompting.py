"""Prompt template: instruction, worked examples, and the open query.

The template is frozen because completions are parsed back against it:

    <instruction>

    Narrations: <n1>; <n2>; ...
    Past actions: (verb, noun), (verb, noun), ...
    Future actions: (verb, noun), ...

    ... more example blocks ...

    Narrations: ...
    Past actions: ...
    Future actions:

Blocks are separated by blank lines; the query block ends with the bare
"Future actions:" label the model must continue.  An optional
"Candidate nouns:" line can be injected into the query block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .dataset import ExemplarRecord
from .errors import MalformedFileError, MissingFutureActionsError
from .taxonomy import Taxonomy, sequence_to_text

log = logging.getLogger(__name__)

NARRATIONS_LABEL = "Narrations: "
PAST_LABEL = "Past actions: "
NOUNS_LABEL = "Candidate nouns: "
FUTURE_LABEL = "Future actions:"

DEFAULT_INSTRUCTION = (
    "You will see recent scene narrations and the past actions of a "
    "person, then worked examples of how past actions continue. Predict "
    "the next {Z} future actions of the final sequence. Answer with "
    "exactly {Z} comma-separated (verb, noun) pairs on one line and "
    "nothing else."
)


@dataclass(frozen=True)
class PromptOptions:
    include_captions: bool = True
    include_noun_list: bool = False
    instruction_text: str = DEFAULT_INSTRUCTION
    max_output_tokens: int = 80

    def __post_init__(self) -> None:
        if not self.instruction_text.strip():
            raise MalformedFileError("instruction text must be non-empty")
        if self.max_output_tokens < 16:
            raise MalformedFileError(
                f"max output tokens must be >= 16, got {self.max_output_tokens}"
            )


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    exemplar_ids: tuple[str, ...]
    prompt_index: int


def format_instruction(options: PromptOptions, z: int) -> str:
    """Instruction text with the horizon length substituted in."""
    return options.instruction_text.replace("{Z}", str(z))


def render_block(
    record: ExemplarRecord,
    tax: Taxonomy,
    options: PromptOptions,
    with_future: bool,
    candidate_nouns: list[str] | None = None,
) -> str:
    """One example or query block; the query leaves the future unfilled."""
    lines = []
    if options.include_captions and record.narrations:
        lines.append(NARRATIONS_LABEL + "; ".join(record.narrations))
    lines.append(PAST_LABEL + sequence_to_text(record.past_actions, tax))
    if options.include_noun_list and candidate_nouns is not None:
        lines.append(NOUNS_LABEL + ", ".join(candidate_nouns))
    if with_future:
        if not record.future_actions:
            raise MissingFutureActionsError(
                f"exemplar {record.exemplar_id} has no future actions to render"
            )
        lines.append(
            FUTURE_LABEL + " " + sequence_to_text(record.future_actions, tax)
        )
    else:
        lines.append(FUTURE_LABEL)
    return "\n".join(lines)


def compose_prompt(
    instruction: str,
    exemplar_group: list[ExemplarRecord],
    query: ExemplarRecord,
    tax: Taxonomy,
    options: PromptOptions,
    prompt_index: int = 0,
    candidate_nouns: list[str] | None = None,
) -> RenderedPrompt:
    """Instruction, example blocks with futures, then the open query."""
    if not exemplar_group:
        raise MalformedFileError("a prompt needs at least one exemplar")
    parts = [instruction]
    parts.extend(
        render_block(ex, tax, options, with_future=True) for ex in exemplar_group
    )
    parts.append(
        render_block(
            query, tax, options, with_future=False, candidate_nouns=candidate_nouns
        )
    )
    return RenderedPrompt(
        text="\n\n".join(parts),
        exemplar_ids=tuple(ex.exemplar_id for ex in exemplar_group),
        prompt_index=prompt_index,
    )


def top5_nouns(distribution: list[float], tax: Taxonomy) -> list[str]:
    """The five most probable nouns, descending, ties to the lowest id."""
    nouns = tax.lexicon("noun")
    if len(distribution) != len(nouns):
        raise MalformedFileError(
            f"noun distribution has {len(distribution)} entries for "
            f"{len(nouns)} nouns"
        )
    order = sorted(range(len(nouns)), key=lambda i: (-distribution[i], i))
    if len(nouns) < 5:
        log.warning("taxonomy has only %d nouns, returning all", len(nouns))
        return [nouns[i] for i in order]
    return [nouns[i] for i in order[:5]]
