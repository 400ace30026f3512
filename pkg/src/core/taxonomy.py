from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, field_validator

from core.constants import DRUM_CLASS_INDEX, NUM_CLASSES, TAXONOMY_ENV_VAR, TAXONOMY_PATH

TAXONOMY_VERSION = 1
TAXONOMY_HEADER = f"# amtkit-taxonomy v{TAXONOMY_VERSION}"
DRUMS_TOKEN = "DRUMS"


class TaxonomyError(ValueError):
    pass


class InstrumentClass(BaseModel):
    """One entry of the instrument vocabulary."""

    model_config = ConfigDict(frozen=True)

    index: int
    name: str
    programs: tuple[int, ...]
    is_drums: bool = False

    @property
    def first_program(self) -> int:
        return self.programs[0] if self.programs else 0


class ConditionVector(BaseModel):
    """39 binary indicators selecting the target instruments."""

    model_config = ConfigDict(frozen=True)

    bits: tuple[int, ...]

    @field_validator("bits")
    @classmethod
    def _check_bits(cls, bits: tuple[int, ...]) -> tuple[int, ...]:
        if len(bits) != NUM_CLASSES:
            raise ValueError(f"Condition vector must have {NUM_CLASSES} entries, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("Condition vector entries must be 0 or 1")
        return bits

    @classmethod
    def one_hot(cls, index: int) -> "ConditionVector":
        return condition_from_classes({index})

    @classmethod
    def full(cls) -> "ConditionVector":
        """All 39 instruments, the full-fledge transcription mode."""
        return condition_from_classes(range(NUM_CLASSES))

    def classes(self) -> set[int]:
        return {i for i, bit in enumerate(self.bits) if bit}

    def to_tensor(self) -> torch.Tensor:
        return torch.tensor(self.bits, dtype=torch.float32)


def condition_from_classes(indices: Iterable[int]) -> ConditionVector:
    """Builds the condition vector with exactly the given class indices set.

    Raises:
        TaxonomyError: If the set is empty or an index is outside 0..38.
    """
    indices = set(indices)
    if not indices:
        raise TaxonomyError("A condition must target at least one instrument")
    for i in indices:
        if not 0 <= i < NUM_CLASSES:
            raise TaxonomyError(f"Class index {i} outside 0..{NUM_CLASSES - 1}")
    return ConditionVector(bits=tuple(1 if i in indices else 0 for i in range(NUM_CLASSES)))


def threshold_recognition(scores: Sequence[float] | np.ndarray, p_thresh: float = 0.5) -> ConditionVector | None:
    """Turns recognizer probabilities into a condition vector (strict `score > p_thresh`).

    Returns None when no class passes the threshold, since an empty set is not a valid condition.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (NUM_CLASSES,):
        raise TaxonomyError(f"Expected {NUM_CLASSES} scores, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)) or np.any(scores < 0) or np.any(scores > 1):
        raise TaxonomyError("Recognition scores must lie in [0, 1]")
    selected = np.flatnonzero(scores > p_thresh)
    if selected.size == 0:
        logger.info(f"No instrument scored above {p_thresh}")
        return None
    return condition_from_classes(int(i) for i in selected)


def _parse_programs(token: str, line_no: int) -> tuple[int, ...]:
    programs: list[int] = []
    for part in token.split(","):
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                programs.extend(range(lo, hi + 1))
            else:
                programs.append(int(part))
        except ValueError:
            raise TaxonomyError(f"Line {line_no}: invalid program list {token!r}")
    return tuple(sorted(programs))


def _format_programs(programs: Sequence[int]) -> str:
    runs: list[str] = []
    start = prev = programs[0]
    for p in list(programs[1:]) + [None]:
        if p is not None and p == prev + 1:
            prev = p
            continue
        runs.append(str(start) if start == prev else f"{start}-{prev}")
        if p is not None:
            start = prev = p
    return ",".join(runs)


class InstrumentTaxonomy:
    """The 39-class instrument vocabulary and its MIDI program lookup. Immutable after construction."""

    def __init__(self, classes: Sequence[InstrumentClass]) -> None:
        self.classes: tuple[InstrumentClass, ...] = tuple(sorted(classes, key=lambda c: c.index))
        self._validate()
        self._program_table = np.full(128, -1, dtype=np.int64)
        for c in self.classes:
            for p in c.programs:
                self._program_table[p] = c.index
        self._by_name = {c.name: c for c in self.classes}

    def _validate(self) -> None:
        if len(self.classes) != NUM_CLASSES:
            raise TaxonomyError(f"Taxonomy must define exactly {NUM_CLASSES} classes, got {len(self.classes)}")
        if [c.index for c in self.classes] != list(range(NUM_CLASSES)):
            raise TaxonomyError(f"Class indices must be exactly 0..{NUM_CLASSES - 1}")
        if len({c.name for c in self.classes}) != NUM_CLASSES:
            raise TaxonomyError("Class names must be unique")

        drums = [c for c in self.classes if c.is_drums]
        if len(drums) != 1 or drums[0].index != DRUM_CLASS_INDEX:
            raise TaxonomyError(f"Exactly one DRUMS class is required, at index {DRUM_CLASS_INDEX}")

        seen: dict[int, int] = {}
        for c in self.classes:
            for p in c.programs:
                if not 0 <= p <= 127:
                    raise TaxonomyError(f"Class {c.name!r} lists program {p} outside 0..127")
                if p in seen:
                    raise TaxonomyError(f"Program {p} is mapped to both class {seen[p]} and class {c.index}")
                seen[p] = c.index
        missing = sorted(set(range(128)) - seen.keys())
        if missing:
            raise TaxonomyError(f"Programs {missing} are not mapped to any class")

    @property
    def drum_class_index(self) -> int:
        return DRUM_CLASS_INDEX

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    def __len__(self) -> int:
        return len(self.classes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InstrumentTaxonomy) and self.classes == other.classes

    def map_program(self, program: int, is_drum_channel: bool = False) -> int:
        """Maps a General MIDI program (or the drum channel) to a class index."""
        if not 0 <= program <= 127:
            raise TaxonomyError(f"MIDI program {program} outside 0..127")
        if is_drum_channel:
            return DRUM_CLASS_INDEX
        return int(self._program_table[program])

    def class_name(self, index: int) -> str:
        if not 0 <= index < NUM_CLASSES:
            raise TaxonomyError(f"Class index {index} outside 0..{NUM_CLASSES - 1}")
        return self.classes[index].name

    def class_index(self, name: str) -> int:
        try:
            return self._by_name[name].index
        except KeyError:
            raise TaxonomyError(f"Unknown instrument class {name!r}")

    def parse_class_list(self, text: str) -> list[int]:
        """Parses `piano,drums` or `0,38` (or a mix) into sorted unique class indices."""
        indices: set[int] = set()
        for token in (t.strip() for t in text.split(",")):
            if not token:
                continue
            if token.isdigit():
                index = int(token)
                self.class_name(index)
                indices.add(index)
            else:
                indices.add(self.class_index(token))
        return sorted(indices)

    def dumps(self) -> str:
        lines = [TAXONOMY_HEADER]
        for c in self.classes:
            members = DRUMS_TOKEN if c.is_drums else _format_programs(c.programs)
            lines.append(f"{c.index} {c.name} {members}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "InstrumentTaxonomy":
        classes: list[InstrumentClass] = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# amtkit-taxonomy") and line != TAXONOMY_HEADER:
                    raise TaxonomyError(f"Unsupported taxonomy version: {line!r}")
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TaxonomyError(f"Line {line_no}: expected '<index> <name> <programs>', got {line!r}")
            index_token, name, members = parts
            if not index_token.isdigit():
                raise TaxonomyError(f"Line {line_no}: invalid class index {index_token!r}")
            if members == DRUMS_TOKEN:
                classes.append(InstrumentClass(index=int(index_token), name=name, programs=(), is_drums=True))
            else:
                programs = _parse_programs(members, line_no)
                classes.append(InstrumentClass(index=int(index_token), name=name, programs=programs))
        return cls(classes)


def load_taxonomy(path: str | Path | None = None) -> InstrumentTaxonomy:
    """Loads a taxonomy file, falling back to the built-in default table."""
    if path is None:
        logger.debug("Loading built-in taxonomy")
        text = resources.files("core.data").joinpath("taxonomy_v1.txt").read_text(encoding="utf-8")
    else:
        logger.info(f"Loading taxonomy from {path}")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise TaxonomyError(f"Could not read taxonomy file {path}: {e}")
    return InstrumentTaxonomy.loads(text)


@lru_cache(maxsize=1)
def default_taxonomy() -> InstrumentTaxonomy:
    """The taxonomy named by ${AMTKIT_TAXONOMY}, or the built-in one."""
    if TAXONOMY_PATH:
        logger.info(f"Using taxonomy from ${TAXONOMY_ENV_VAR}")
    return load_taxonomy(TAXONOMY_PATH)
