import argparse
from pathlib import Path

from loguru import logger

from commands.common import EXIT_OK, InputError, get_taxonomy, require_file, run_config
from core.constants import FRAME_THRESHOLD, MIN_NOTE_DURATION, ONSET_THRESHOLD
from core.container import read_container
from core.score import Posteriorgram, decode_notes, write_midi


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("decode", help="Decode onset/frame posteriorgrams into a MIDI file.")
    parser.add_argument("--onset", required=True, help="T×88 onset posteriorgram container.")
    parser.add_argument("--frame", required=True, help="T×88 frame posteriorgram container.")
    parser.add_argument("--class", dest="class_name", required=True, help="Instrument class name.")
    parser.add_argument("--out", required=True, help="Output MIDI file.")
    add_threshold_arguments(parser)
    parser.set_defaults(func=decode)


def add_threshold_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--onset-threshold", type=float, default=ONSET_THRESHOLD)
    parser.add_argument("--frame-threshold", type=float, default=FRAME_THRESHOLD)
    parser.add_argument("--min-duration", type=float, default=MIN_NOTE_DURATION, help="Seconds.")


async def decode(args: argparse.Namespace) -> int:
    taxonomy = get_taxonomy(args)
    index = taxonomy.class_index(args.class_name)
    onset = read_container(require_file(args.onset, "onset container")).array
    frame = read_container(require_file(args.frame, "frame container")).array
    if onset.shape != frame.shape:
        raise InputError(f"Onset {list(onset.shape)} and frame {list(frame.shape)} posteriorgrams differ in shape")

    notes = decode_notes(
        Posteriorgram(onset, instrument=index),
        Posteriorgram(frame, instrument=index),
        onset_threshold=args.onset_threshold,
        frame_threshold=args.frame_threshold,
        min_duration=args.min_duration,
    )
    config = run_config(
        args,
        onset_threshold=args.onset_threshold,
        frame_threshold=args.frame_threshold,
        min_duration=args.min_duration,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(write_midi({index: notes}, taxonomy, meta=config.model_dump(mode="json")))

    print(f"{len(notes)} notes")
    logger.info(f"Wrote {len(notes)} {args.class_name} notes to {out}")
    return EXIT_OK
