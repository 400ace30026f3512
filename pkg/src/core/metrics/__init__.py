from .errors import MetricError
from .recognition import average_precision, map_aggregates, multilabel_f1
from .separation import sdr, sdr_aggregates
from .transcription import f1_aggregates, match_count, note_prf, undefined_count
