import argparse
import asyncio
from pathlib import Path
from typing import Any, Awaitable, Callable, Iterable, TypeVar

import orjson
from loguru import logger

from core.constants import REPORT_FLOAT_DECIMALS, TAXONOMY_PATH
from core.nnref import Jointist, ShapeError, build_network, init_weights, load_weights, set_film_identity
from core.nnref.weights import Network
from core.schemas.config import RunConfig
from core.schemas.metrics import EvalReport
from core.taxonomy import InstrumentTaxonomy, default_taxonomy, load_taxonomy

T = TypeVar("T")
R = TypeVar("R")
Handler = Callable[[argparse.Namespace], Awaitable[int]]

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_PAIRING = 3
EXIT_SHAPE = 4

SUBNETWORKS = {"ir": "recognizer", "t": "transcriber", "mss": "separator"}


class CommandError(Exception):
    exit_code = EXIT_INPUT


class InputError(CommandError):
    exit_code = EXIT_INPUT


class PairingError(CommandError):
    exit_code = EXIT_PAIRING


def exit_code_for(error: Exception) -> int:
    """Maps an exception to the exit-code contract: 2 input, 3 pairing, 4 shape, 1 anything unexpected."""
    if isinstance(error, CommandError):
        return error.exit_code
    if isinstance(error, ShapeError):
        return EXIT_SHAPE
    if isinstance(error, (ValueError, OSError)):
        return EXIT_INPUT
    return EXIT_UNEXPECTED


async def run_jobs(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Runs `func` over `items` in worker threads, at most `jobs` at a time, keeping input order."""
    semaphore = asyncio.Semaphore(max(jobs, 1))

    async def run(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(func, item)

    return await asyncio.gather(*(run(item) for item in items))


def get_taxonomy(args: argparse.Namespace) -> InstrumentTaxonomy:
    if getattr(args, "taxonomy", None):
        return load_taxonomy(args.taxonomy)
    return default_taxonomy()


def run_config(args: argparse.Namespace, **fields: Any) -> RunConfig:
    return RunConfig(
        command=args.command,
        taxonomy=getattr(args, "taxonomy", None) or TAXONOMY_PATH,
        jobs=getattr(args, "jobs", 1),
        **fields,
    )


def require_file(path: str | Path, what: str = "file") -> Path:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Missing {what}: {path}")
    return path


def require_dir(path: str | Path, what: str = "directory") -> Path:
    path = Path(path)
    if not path.is_dir():
        raise InputError(f"Missing {what}: {path}")
    return path


def parse_conditions(taxonomy: InstrumentTaxonomy, text: str | None) -> list[int]:
    indices = taxonomy.parse_class_list(text or "")
    if not indices:
        raise InputError("At least one instrument class is required")
    return indices


def pair_files(ref_dir: Path, est_dir: Path, suffixes: tuple[str, ...], allow_missing: bool = False) -> list[str]:
    """Stems present in both directories. Unpaired stems are listed and fail the run unless `allow_missing`."""

    def stems(directory: Path) -> set[str]:
        return {p.stem for p in directory.iterdir() if p.is_file() and p.suffix.lower() in suffixes}

    ref, est = stems(ref_dir), stems(est_dir)
    unpaired = sorted(ref ^ est)
    for stem in unpaired:
        side = "reference" if stem in ref else "estimate"
        logger.error(f"Unpaired {side} file: {stem}")
    if unpaired and not allow_missing:
        raise PairingError(f"{len(unpaired)} files have no counterpart")
    paired = sorted(ref & est)
    if not paired:
        raise PairingError(f"No paired files between {ref_dir} and {est_dir}")
    return paired


def round_floats(value: Any, decimals: int = REPORT_FLOAT_DECIMALS) -> Any:
    if isinstance(value, float):
        return round(value, decimals)
    if isinstance(value, dict):
        return {k: round_floats(v, decimals) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, decimals) for v in value]
    return value


def dump_report(report: EvalReport) -> bytes:
    data = round_floats(report.model_dump(mode="json"))
    return orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS | orjson.OPT_SORT_KEYS)


def write_report(path: str | Path, report: EvalReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dump_report(report))
    logger.info(f"Wrote report to {path} ({report.undefined_count} undefined terms)")


def write_run_config(path: str | Path, config: RunConfig) -> None:
    """Sidecar for outputs that cannot carry metadata themselves (WAV stems)."""
    path = Path(path)
    path.write_bytes(orjson.dumps(config.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    logger.debug(f"Wrote run config to {path}")


def resolve_network(
    kind: str, weights: str | None, seed: int | None, merge: str = "sum", film_identity: bool = False
) -> Network:
    """Loads `--weights` or builds a seeded random network; a Jointist file also serves its sub-networks."""
    if weights:
        net = load_weights(require_file(weights, "weight file"))
        if net.kind != kind:
            if net.kind != Jointist.kind or kind not in SUBNETWORKS:
                raise InputError(f"{weights} holds {net.kind!r} weights, expected {kind!r}")
            net = getattr(net, SUBNETWORKS[kind])
    elif seed is not None:
        architecture = {"merge": merge} if kind == "mss" else {"mss": {"merge": merge}} if kind == "jointist" else {}
        net = init_weights(build_network(kind, architecture), seed)
    else:
        raise InputError("Either --weights or --random-seed is required")
    if film_identity:
        set_film_identity(net)
    return net
