import argparse
from pathlib import Path

from commands.common import EXIT_OK, resolve_network
from core.nnref import MERGE_MODES, NETWORKS, save_weights


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("init-weights", help="Write a seeded random weight file.")
    parser.add_argument("--module", choices=sorted(NETWORKS), required=True)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--merge", choices=MERGE_MODES, default="sum", help="Separator merge mode.")
    parser.add_argument("--out", required=True, help="Output weight file.")
    parser.set_defaults(func=init_weights)


async def init_weights(args: argparse.Namespace) -> int:
    net = resolve_network(args.module, None, args.seed, args.merge)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_weights(net, args.out, seed=args.seed)
    return EXIT_OK
