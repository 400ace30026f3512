from .midi import MidiParseError, MidiScore, parse_midi, write_midi
from .notes import NoteEvent, NoteList, PianoRoll, Posteriorgram, frame_to_seconds, seconds_to_frame, sort_notes
from .rolls import decode_notes, decode_roll, notes_to_rolls
