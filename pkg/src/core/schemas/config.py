from typing import Literal

from pydantic import BaseModel, ConfigDict

from core.constants import FRAME_THRESHOLD, MIN_NOTE_DURATION, ONSET_THRESHOLD


class RunConfig(BaseModel):
    """Settings of one command invocation, echoed into every report and container it writes."""

    model_config = ConfigDict(frozen=True)

    command: str
    taxonomy: str | None = None
    onset_threshold: float = ONSET_THRESHOLD
    frame_threshold: float = FRAME_THRESHOLD
    min_duration: float = MIN_NOTE_DURATION
    merge: Literal["sum", "concat"] = "sum"
    feature_kind: Literal["posteriorgram", "binary_roll"] = "posteriorgram"
    feature: dict | None = None
    seed: int | None = None
    jobs: int = 1
    options: dict = {}
