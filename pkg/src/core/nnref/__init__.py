from .film import FiLM, FiLMParams, film_gradients, film_modulate
from .jointist import ClassTranscription, Jointist
from .losses import LossBreakdown, bce, losses, recognition_loss, separation_loss, transcription_loss
from .recognizer import RecognizerNet, f_ir_forward
from .separator import FEATURE_KINDS, MERGE_MODES, SeparatorNet, align_frames, f_mss_forward
from .shapes import ShapeError, Trace, condition_batch, format_trace
from .transcriber import TranscriberNet, TranscriptionOutput, f_t_forward
from .weights import (
    NETWORKS,
    WeightsError,
    build_network,
    init_weights,
    load_weights,
    save_weights,
    set_film_identity,
    zero_weights,
)
