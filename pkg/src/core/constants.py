import os

TAXONOMY_ENV_VAR = "AMTKIT_TAXONOMY"
TAXONOMY_PATH = os.getenv(TAXONOMY_ENV_VAR)

NUM_CLASSES = 39
DRUM_CLASS_INDEX = 38
DRUM_CHANNEL = 9  # zero-based, "channel 10" in MIDI speak

SAMPLE_RATE = 16000
HOP_LENGTH = 160
FRAMES_PER_SECOND = SAMPLE_RATE // HOP_LENGTH  # 100

MEL_N_FFT = 2048
N_MELS = 229
MEL_FMIN = 0.0
MEL_FMAX = 8000.0
LOG_FLOOR = 1e-10

STFT_N_FFT = 1024
STFT_BINS = STFT_N_FFT // 2 + 1  # 513

RESAMPLE_ZERO_CROSSINGS = 64
RESAMPLE_KAISER_BETA = 14.0

MIN_PITCH = 21  # A0
MAX_PITCH = 108  # C8
N_PITCHES = MAX_PITCH - MIN_PITCH + 1  # 88

ONSET_THRESHOLD = 0.5
FRAME_THRESHOLD = 0.5
MIN_NOTE_DURATION = 0.05
DECODED_VELOCITY = 100
RECOGNITION_THRESHOLD = 0.5

ONSET_TOLERANCE = 0.05
OFFSET_RATIO = 0.2
OFFSET_MIN_TOLERANCE = 0.05

SDR_CAP_DB = 100.0
BCE_EPSILON = 1e-7

MIDI_TICKS_PER_BEAT = 480
MIDI_TEMPO = 500000  # microseconds per quarter, 120 BPM

REPORT_FLOAT_DECIMALS = 6
STEM_SEPARATOR = "__"
