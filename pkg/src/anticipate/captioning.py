"""Caption request construction and narration attachment.

Each observed segment gets one caption request at its middle timestamp.
Generation is conditioned either on a sentence prefix (default
"A person is") or on one of six scene questions; the exact question
wording is configuration, with defaults shipped here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import VideoRecord, middle_timestamp
from .errors import LengthMismatchError, MalformedFileError

PREFIX_MODE = "prefix"
QUESTION_MODE = "question"
DEFAULT_PREFIX = "A person is"
EMPTY_CAPTION_PLACEHOLDER = "unknown scene"

QUESTION_CONCEPTS = (
    "location",
    "detection",
    "action",
    "prediction",
    "interaction",
    "intention",
)

DEFAULT_QUESTIONS = {
    "location": "Where is the person",
    "detection": "What objects are visible in the image",
    "action": "What is the person doing",
    "prediction": "What will the person do next",
    "interaction": "What object is the person interacting with",
    "intention": "What is the intention of the person in the image",
}


@dataclass(frozen=True)
class CaptionMode:
    """Prefix-conditioned or question-conditioned captioning."""

    kind: str
    concept: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in (PREFIX_MODE, QUESTION_MODE):
            raise MalformedFileError(f"unknown caption mode {self.kind!r}")
        if self.kind == QUESTION_MODE and self.concept not in QUESTION_CONCEPTS:
            raise MalformedFileError(
                f"unknown question concept {self.concept!r}; "
                f"expected one of {QUESTION_CONCEPTS}"
            )
        if self.kind == PREFIX_MODE and self.concept is not None:
            raise MalformedFileError("prefix mode takes no question concept")

    @classmethod
    def parse(cls, text: str) -> "CaptionMode":
        """Parse "prefix" or "question:<concept>"."""
        if text == PREFIX_MODE:
            return cls(PREFIX_MODE)
        head, sep, concept = text.partition(":")
        if head == QUESTION_MODE and sep:
            return cls(QUESTION_MODE, concept)
        raise MalformedFileError(f"cannot parse caption mode {text!r}")


@dataclass(frozen=True)
class CaptionRequestSpec:
    video_id: str
    segment_index: int
    timestamp_s: float
    conditional_text: str


def conditional_text(
    mode: CaptionMode,
    prefix_text: str = DEFAULT_PREFIX,
    questions: dict[str, str] | None = None,
) -> str:
    """The generation-conditioning string for a caption mode."""
    if mode.kind == PREFIX_MODE:
        return prefix_text
    table = DEFAULT_QUESTIONS if questions is None else questions
    try:
        question = table[mode.concept]
    except KeyError:
        raise MalformedFileError(
            f"question dictionary has no entry for {mode.concept!r}"
        ) from None
    return f"Question: {question}? Answer:"


def make_caption_requests(
    video: VideoRecord,
    mode: CaptionMode,
    prefix_text: str = DEFAULT_PREFIX,
    questions: dict[str, str] | None = None,
) -> list[CaptionRequestSpec]:
    """One request per observed segment, at the segment midpoint."""
    observed = video.observed()
    if not observed:
        raise MalformedFileError(f"video {video.video_id} has nothing observed")
    text = conditional_text(mode, prefix_text, questions)
    return [
        CaptionRequestSpec(
            video_id=video.video_id,
            segment_index=seg.index,
            timestamp_s=middle_timestamp(seg),
            conditional_text=text,
        )
        for seg in observed
    ]


def attach_narrations(video: VideoRecord, captions: list[str]) -> list[str]:
    """Captions in observed-segment order; empty ones become a placeholder."""
    observed = video.observed()
    if len(captions) != len(observed):
        raise LengthMismatchError(
            f"video {video.video_id}: {len(captions)} captions for "
            f"{len(observed)} observed segments"
        )
    return [c if c else EMPTY_CAPTION_PLACEHOLDER for c in captions]
