from pydantic import BaseModel, Field

from core.schemas.config import RunConfig


class PRF(BaseModel):
    """Note-wise precision, recall and F1. A None field is undefined."""

    precision: float | None
    recall: float | None
    f1: float | None
    n_ref: int = Field(ge=0)
    n_est: int = Field(ge=0)
    n_match: int = Field(ge=0)

    @property
    def is_defined(self) -> bool:
        return self.f1 is not None

    @property
    def has_undefined(self) -> bool:
        return self.precision is None or self.recall is None or self.f1 is None


class F1Aggregates(BaseModel):
    flat_f1: float | None
    piece_wise_f1: float
    instrument_wise_f1: float


class SdrAggregates(BaseModel):
    source: float
    piece: float
    instrument: float


class MapAggregates(BaseModel):
    macro_map: float
    weighted_map: float


class MultilabelF1(BaseModel):
    macro_f1: float | None
    weighted_f1: float | None
    per_class: dict[int, PRF]


class EvalReport(BaseModel):
    """Serialized as UTF-8 JSON with floats at six decimals and undefined values as null."""

    per_instrument: dict
    per_piece: dict
    aggregates: dict
    undefined_count: int = Field(ge=0)
    config: RunConfig
