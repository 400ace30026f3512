import argparse

import numpy as np
import torch
from loguru import logger

from commands.common import (
    EXIT_OK,
    InputError,
    get_taxonomy,
    parse_conditions,
    require_file,
    resolve_network,
    run_config,
)
from core.constants import N_PITCHES
from core.container import read_container, write_container
from core.nnref import FEATURE_KINDS, MERGE_MODES, Trace, f_ir_forward, f_mss_forward, f_t_forward, format_trace
from core.taxonomy import condition_from_classes

MODULES = ("ir", "t", "mss")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("forward", help="Run one reference network and print its shape trace.")
    parser.add_argument("--module", choices=MODULES, required=True)
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--weights", help="Weight file (a module or a jointist file).")
    source.add_argument("--random-seed", type=int, help="Seed for random He-uniform weights.")
    parser.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        help="Input containers: a T×229 log-mel for ir/t; a T×513 STFT and a T'×88 roll for mss.",
    )
    parser.add_argument("--cond", help="Comma separated class names or indices (t and mss).")
    parser.add_argument("--out", required=True, help="Output container.")
    parser.add_argument("--merge", choices=MERGE_MODES, default="sum", help="Separator merge mode.")
    parser.add_argument("--feature-kind", choices=FEATURE_KINDS, default="posteriorgram")
    parser.add_argument("--film-identity", action="store_true", help="Zero every FiLM projection first.")
    parser.set_defaults(func=forward)


def _read_matrix(path: str, columns: int, what: str) -> np.ndarray:
    array = read_container(require_file(path, what)).array
    if array.ndim != 2 or array.shape[1] != columns:
        raise InputError(f"{what} must be T×{columns}, got {list(array.shape)}")
    return array


def _tensor(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))


async def forward(args: argparse.Namespace) -> int:
    expected_inputs = 2 if args.module == "mss" else 1
    if len(args.inputs) != expected_inputs:
        raise InputError(f"--module {args.module} takes {expected_inputs} input containers, got {len(args.inputs)}")

    net = resolve_network(args.module, args.weights, args.random_seed, args.merge, args.film_identity)
    trace: Trace = []

    if args.module == "ir":
        mel = read_container(require_file(args.inputs[0], "log-mel container")).array
        output = f_ir_forward(net, _tensor(mel)[None, None], trace=trace)[0].numpy()
    elif args.module == "t":
        mel = read_container(require_file(args.inputs[0], "log-mel container")).array
        cond = condition_from_classes(parse_conditions(get_taxonomy(args), args.cond))
        result = f_t_forward(net, _tensor(mel)[None, None], cond, trace=trace)
        output = np.stack([result.onset[0].numpy(), result.frame_raw[0].numpy(), result.frame[0].numpy()])
    else:
        spectrum = read_container(require_file(args.inputs[0], "STFT container")).array
        roll = _read_matrix(args.inputs[1], N_PITCHES, "roll container")
        cond = condition_from_classes(parse_conditions(get_taxonomy(args), args.cond))
        magnitude = _tensor(np.abs(spectrum))[None]
        mask = f_mss_forward(net, magnitude, cond, _tensor(roll)[None], args.feature_kind, trace=trace)
        output = mask[0].numpy()

    for line in format_trace(trace):
        print(line)

    config = run_config(
        args,
        merge=args.merge,
        feature_kind=args.feature_kind,
        seed=args.random_seed,
        options={"module": args.module, "weights": args.weights, "film_identity": args.film_identity},
    )
    meta = {
        "module": args.module,
        "trace": [[stage, list(shape)] for stage, shape in trace],
        "config": config.model_dump(),
    }
    write_container(args.out, output, meta)
    logger.info(f"{args.module} output {list(output.shape)}, range [{output.min():.4f}, {output.max():.4f}]")
    return EXIT_OK
