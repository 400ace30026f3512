from typing import Iterable, NamedTuple

import numpy as np
import torch
from loguru import logger
from torch import nn

from core.constants import RECOGNITION_THRESHOLD
from core.dsp import AudioClip, SpectroTensor, apply_mask_and_invert
from core.nnref.recognizer import RecognizerNet, f_ir_forward
from core.nnref.separator import FeatureKind, MergeMode, SeparatorNet, f_mss_forward
from core.nnref.shapes import Trace
from core.nnref.transcriber import TranscriberNet, f_t_forward
from core.score import NoteList, Posteriorgram, decode_notes, decode_roll
from core.taxonomy import ConditionVector, threshold_recognition


class ClassTranscription(NamedTuple):
    onset: Posteriorgram
    frame: Posteriorgram

    def notes(self, **decode_kwargs) -> NoteList:
        return decode_notes(self.onset, self.frame, **decode_kwargs)


def _mel_batch(mel: SpectroTensor) -> torch.Tensor:
    if mel.kind != "logmel":
        raise ValueError(f"Expected a log-mel tensor, got {mel.kind}")
    return torch.from_numpy(np.ascontiguousarray(mel.data, dtype=np.float32))[None, None]


class Jointist(nn.Module):
    """Recognizer, transcriber and separator wired together.

    In end-to-end mode the recognizer picks the instruments; in controllable mode the caller passes class
    indices directly to `transcribe` and `separate`.
    """

    kind = "jointist"

    def __init__(
        self,
        recognizer: RecognizerNet | None = None,
        transcriber: TranscriberNet | None = None,
        separator: SeparatorNet | None = None,
        merge: MergeMode = "sum",
    ) -> None:
        super().__init__()
        self.recognizer = recognizer or RecognizerNet()
        self.transcriber = transcriber or TranscriberNet()
        self.separator = separator or SeparatorNet(merge=merge)

    def architecture(self) -> dict:
        return {
            "ir": self.recognizer.architecture(),
            "t": self.transcriber.architecture(),
            "mss": self.separator.architecture(),
        }

    def recognize(
        self, mel: SpectroTensor, threshold: float = RECOGNITION_THRESHOLD, trace: Trace | None = None
    ) -> ConditionVector | None:
        """Instruments whose probability is strictly above `threshold`, or None when nothing is detected."""
        scores = f_ir_forward(self.recognizer, _mel_batch(mel), trace=trace)[0].numpy()
        cond = threshold_recognition(scores, threshold)
        if cond is not None:
            logger.info(f"Recognized instruments {sorted(cond.classes())}")
        return cond

    def transcribe(self, mel: SpectroTensor, classes: Iterable[int]) -> dict[int, ClassTranscription]:
        """Runs the transcriber once per class with a one-hot condition."""
        batch = _mel_batch(mel)
        results: dict[int, ClassTranscription] = {}
        for index in sorted(set(classes)):
            output = f_t_forward(self.transcriber, batch, ConditionVector.one_hot(index))
            results[index] = ClassTranscription(
                Posteriorgram(output.onset[0].numpy(), instrument=index),
                Posteriorgram(output.frame[0].numpy(), instrument=index),
            )
            logger.debug(f"Transcribed class {index}")
        return results

    def separate(
        self,
        mix_stft: SpectroTensor,
        transcriptions: dict[int, ClassTranscription],
        feature_kind: FeatureKind = "posteriorgram",
    ) -> dict[int, AudioClip]:
        """Masks the mixture once per transcribed class, fed with Ŷ_frame or its decoded binary roll."""
        if mix_stft.kind != "stft":
            raise ValueError(f"Expected an STFT tensor, got {mix_stft.kind}")
        magnitude = torch.from_numpy(mix_stft.magnitude().astype(np.float32))[None]
        stems: dict[int, AudioClip] = {}
        for index, transcription in sorted(transcriptions.items()):
            if feature_kind == "binary_roll":
                feature = decode_roll(transcription.onset, transcription.frame).data.astype(np.float32)
            else:
                feature = transcription.frame.data
            mask = f_mss_forward(
                self.separator,
                magnitude,
                ConditionVector.one_hot(index),
                torch.from_numpy(np.ascontiguousarray(feature))[None],
                feature_kind=feature_kind,
            )
            stems[index] = apply_mask_and_invert(mix_stft, mask[0].numpy(), mix_stft.n_samples)
        return stems
