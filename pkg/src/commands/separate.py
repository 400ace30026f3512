import argparse
from pathlib import Path

import numpy as np
from loguru import logger

from commands.common import (
    EXIT_OK,
    get_taxonomy,
    parse_conditions,
    require_file,
    resolve_network,
    run_config,
    write_run_config,
)
from commands.decode import add_threshold_arguments
from core.constants import STEM_SEPARATOR
from core.dsp import apply_mask_and_invert, logmel, read_wav, resample, stft, write_wav
from core.nnref import FEATURE_KINDS, MERGE_MODES, Jointist
from core.score import write_midi


def add_network_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--weights", help="Jointist weight file.")
    source.add_argument("--random-seed", type=int, help="Seed for random He-uniform weights.")
    parser.add_argument("--merge", choices=MERGE_MODES, default="sum", help="Separator merge mode (random weights).")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("separate", help="Separate one stem per requested instrument from a mix.")
    parser.add_argument("--mix", required=True, help="Input mixture WAV.")
    parser.add_argument("--cond", required=True, help="Comma separated class names or indices.")
    parser.add_argument("--out", required=True, help="Output directory for <mix>__<class>.wav stems.")
    parser.add_argument("--feature-kind", choices=FEATURE_KINDS, default="posteriorgram")
    parser.add_argument("--mask-ones", action="store_true", help="Bypass the networks with an all-ones mask.")
    add_network_arguments(parser)
    parser.set_defaults(func=separate)

    parser = subparsers.add_parser("transcribe", help="Transcribe a mix into one multi-track MIDI file.")
    parser.add_argument("--mix", required=True, help="Input mixture WAV.")
    parser.add_argument("--cond", help="Classes to transcribe; the recognizer chooses when omitted.")
    parser.add_argument("--out", required=True, help="Output directory for <mix>.mid.")
    add_threshold_arguments(parser)
    add_network_arguments(parser)
    parser.set_defaults(func=transcribe)


async def separate(args: argparse.Namespace) -> int:
    taxonomy = get_taxonomy(args)
    classes = parse_conditions(taxonomy, args.cond)
    path = require_file(args.mix, "mix WAV")
    mix = resample(read_wav(path))
    spectrum = stft(mix)

    if args.mask_ones:
        mask = np.ones(spectrum.data.shape)
        stems = {index: apply_mask_and_invert(spectrum, mask, len(mix)) for index in classes}
    else:
        jointist: Jointist = resolve_network("jointist", args.weights, args.random_seed, args.merge)
        transcriptions = jointist.transcribe(logmel(mix), classes)
        stems = jointist.separate(spectrum, transcriptions, args.feature_kind)

    config = run_config(
        args,
        merge=args.merge,
        feature_kind=args.feature_kind,
        seed=args.random_seed,
        options={"mask_ones": args.mask_ones, "weights": args.weights},
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, clip in stems.items():
        write_wav(out_dir / f"{path.stem}{STEM_SEPARATOR}{taxonomy.class_name(index)}.wav", clip)
    write_run_config(out_dir / f"{path.stem}.run.json", config)

    logger.info(f"Wrote {len(stems)} stems of {path.name} to {out_dir}")
    return EXIT_OK


async def transcribe(args: argparse.Namespace) -> int:
    taxonomy = get_taxonomy(args)
    path = require_file(args.mix, "mix WAV")
    mel = logmel(resample(read_wav(path)))
    jointist: Jointist = resolve_network("jointist", args.weights, args.random_seed, args.merge)

    if args.cond:
        classes = parse_conditions(taxonomy, args.cond)
    else:
        cond = jointist.recognize(mel)
        if cond is None:
            logger.warning(f"No instrument recognized in {path.name}, nothing to transcribe")
            return EXIT_OK
        classes = sorted(cond.classes())

    transcriptions = jointist.transcribe(mel, classes)
    tracks = {
        index: transcription.notes(
            onset_threshold=args.onset_threshold,
            frame_threshold=args.frame_threshold,
            min_duration=args.min_duration,
        )
        for index, transcription in transcriptions.items()
    }

    config = run_config(
        args,
        onset_threshold=args.onset_threshold,
        frame_threshold=args.frame_threshold,
        min_duration=args.min_duration,
        merge=args.merge,
        seed=args.random_seed,
        options={"classes": classes, "recognized": not args.cond, "weights": args.weights},
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{path.stem}.mid"
    out.write_bytes(write_midi(tracks, taxonomy, meta=config.model_dump(mode="json")))

    counts = ", ".join(f"{taxonomy.class_name(i)}: {len(notes)}" for i, notes in tracks.items())
    logger.info(f"Wrote {out} ({counts})")
    return EXIT_OK
