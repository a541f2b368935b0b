"""Non-learned reference predictors for harness calibration.

Three strategies: hold the last observed action, repeat the observed
actions cyclically, or copy the futures of the nearest training
exemplars.  Retrieval uses K distinct neighbors so the min-over-K
evaluation is not vacuous.
"""

from __future__ import annotations

from typing import Sequence

from .dataset import ExemplarRecord
from .errors import EmptyPastError, MalformedFileError, PoolTooSmallError
from .metrics import PredictionSet
from .parsing import pad_to_z
from .retrieval import EmbeddingStore, select_similar
from .taxonomy import ActionSequence

BASELINE_KINDS = ("last", "repeat", "retrieve")


def predict_last(
    video_id: str, past: ActionSequence, z: int, k: int
) -> PredictionSet:
    """K copies of the last observed action held for the whole horizon."""
    if not past:
        raise EmptyPastError(f"video {video_id} has no past actions")
    sequence = [past[-1]] * z
    return PredictionSet(video_id, tuple(list(sequence) for _ in range(k)))


def predict_repeat(
    video_id: str, past: ActionSequence, z: int, k: int
) -> PredictionSet:
    """K copies of the observed actions repeated cyclically to length z."""
    if not past:
        raise EmptyPastError(f"video {video_id} has no past actions")
    sequence = [past[i % len(past)] for i in range(z)]
    return PredictionSet(video_id, tuple(list(sequence) for _ in range(k)))


def predict_retrieve(
    video_id: str,
    query_embedding: Sequence[float],
    store: EmbeddingStore,
    exemplars: dict[str, ExemplarRecord],
    z: int,
    k: int,
) -> PredictionSet:
    """Futures of the K nearest exemplars, each padded or cut to z."""
    pool = sorted(set(store.ids()) & set(exemplars))
    if len(pool) < k:
        raise PoolTooSmallError(
            f"need {k} embedded exemplars with futures, have {len(pool)}"
        )
    nearest = select_similar(query_embedding, store, k, ids=pool)
    sequences = []
    for exemplar_id in nearest:
        future = exemplars[exemplar_id].future_actions
        if not future:
            raise MalformedFileError(
                f"exemplar {exemplar_id} has no future actions to retrieve"
            )
        sequences.append(pad_to_z(future, z))
    return PredictionSet(video_id, tuple(sequences))
