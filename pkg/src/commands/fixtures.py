import argparse

from commands.common import EXIT_OK, get_taxonomy
from core.fixtures import write_fixtures


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fixtures", help="Write the deterministic evaluation fixtures.")
    parser.add_argument("--out", required=True, help="Output directory.")
    parser.set_defaults(func=fixtures)


async def fixtures(args: argparse.Namespace) -> int:
    write_fixtures(args.out, get_taxonomy(args))
    return EXIT_OK
