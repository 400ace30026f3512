import argparse
from pathlib import Path

from loguru import logger

from commands.common import EXIT_OK, require_file, run_config
from core.container import write_container
from core.dsp import logmel, read_wav, resample, stft

FEATURES = {"mel": logmel, "stft": stft}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("featurize", help="Compute a log-mel or STFT tensor container from a WAV file.")
    parser.add_argument("--in", dest="input", required=True, help="Input WAV file.")
    parser.add_argument("--out", required=True, help="Output directory.")
    parser.add_argument("--kind", choices=sorted(FEATURES), default="mel")
    parser.set_defaults(func=featurize)


async def featurize(args: argparse.Namespace) -> int:
    path = require_file(args.input, "WAV file")
    clip = resample(read_wav(path))
    tensor = FEATURES[args.kind](clip)

    config = run_config(args, feature=tensor.config.model_dump())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{path.stem}.{args.kind}.jtz"
    write_container(out_path, tensor.data, {**tensor.to_meta(), "source": path.name, "config": config.model_dump()})
    logger.info(f"{args.kind} features of {path.name}: {tensor.n_frames} frames")
    return EXIT_OK
