import argparse
from pathlib import Path

import numpy as np
from loguru import logger

from commands.common import (
    EXIT_OK,
    InputError,
    get_taxonomy,
    pair_files,
    require_dir,
    require_file,
    run_config,
    run_jobs,
    write_report,
)
from core.constants import RECOGNITION_THRESHOLD, STEM_SEPARATOR
from core.container import read_container
from core.dsp import read_wav
from core.metrics import (
    MetricError,
    average_precision,
    f1_aggregates,
    map_aggregates,
    multilabel_f1,
    note_prf,
    sdr,
    sdr_aggregates,
    undefined_count,
)
from core.schemas.metrics import PRF, EvalReport
from core.score import MidiScore, parse_midi
from core.taxonomy import InstrumentTaxonomy

MIDI_SUFFIXES = (".mid", ".midi")
WAV_SUFFIXES = (".wav",)
MODES = {"onset": False, "onset_offset": True}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval-transcription", help="Note-wise F1 of estimated MIDI files.")
    parser.add_argument("--ref", required=True, help="Directory of reference MIDI files.")
    parser.add_argument("--est", required=True, help="Directory of estimated MIDI files.")
    parser.add_argument("--report", required=True, help="Output JSON report.")
    parser.add_argument("--allow-missing", action="store_true", help="Skip unpaired files instead of failing.")
    parser.add_argument(
        "--literal-I-denominator",
        dest="literal_denominator",
        action="store_true",
        help="Divide instrument-wise F1 by the vocabulary size instead of the instruments scored.",
    )
    parser.set_defaults(func=eval_transcription)

    parser = subparsers.add_parser("eval-separation", help="SDR of estimated stems.")
    parser.add_argument("--ref", required=True, help="Directory of reference <piece>__<class>.wav stems.")
    parser.add_argument("--est", required=True, help="Directory of estimated <piece>__<class>.wav stems.")
    parser.add_argument("--report", required=True, help="Output JSON report.")
    parser.add_argument("--allow-missing", action="store_true", help="Skip unpaired files instead of failing.")
    parser.set_defaults(func=eval_separation)

    parser = subparsers.add_parser("eval-recognition", help="mAP and F1@0.5 of instrument recognition scores.")
    parser.add_argument("--scores", required=True, help="Container of B×39 recognition probabilities.")
    parser.add_argument("--labels", required=True, help="Container of B×39 binary labels.")
    parser.add_argument("--report", required=True, help="Output JSON report.")
    parser.set_defaults(func=eval_recognition)


class PieceScores:
    """Per-instrument and pooled PRFs of one piece, in both matching modes."""

    def __init__(self, piece: str, ref: MidiScore, est: MidiScore) -> None:
        self.piece = piece
        self.instruments: dict[int, dict[str, PRF]] = {}
        for index in sorted(set(ref.tracks) | set(est.tracks)):
            ref_notes, est_notes = ref.tracks.get(index, []), est.tracks.get(index, [])
            self.instruments[index] = {mode: note_prf(ref_notes, est_notes, offset) for mode, offset in MODES.items()}
        ref_all, est_all = ref.all_notes(), est.all_notes()
        self.flat = {mode: note_prf(ref_all, est_all, offset) for mode, offset in MODES.items()}


def _file_names(directory: Path, suffixes: tuple[str, ...]) -> dict[str, str]:
    return {p.stem: p.name for p in directory.iterdir() if p.is_file() and p.suffix.lower() in suffixes}


async def eval_transcription(args: argparse.Namespace) -> int:
    taxonomy = get_taxonomy(args)
    ref_dir, est_dir = require_dir(args.ref, "reference directory"), require_dir(args.est, "estimate directory")
    pieces = pair_files(ref_dir, est_dir, MIDI_SUFFIXES, args.allow_missing)
    ref_names, est_names = _file_names(ref_dir, MIDI_SUFFIXES), _file_names(est_dir, MIDI_SUFFIXES)

    def score(piece: str) -> PieceScores:
        ref = parse_midi((ref_dir / ref_names[piece]).read_bytes(), taxonomy)
        est = parse_midi((est_dir / est_names[piece]).read_bytes(), taxonomy)
        logger.debug(f"Scoring {piece}: {len(ref.all_notes())} reference / {len(est.all_notes())} estimated notes")
        return PieceScores(piece, ref, est)

    results = await run_jobs(score, pieces, args.jobs)

    per_piece: dict = {}
    per_instrument: dict = {}
    aggregates: dict = {}
    undefined = 0
    for mode in MODES:
        per = {(r.piece, i): prfs[mode] for r in results for i, prfs in r.instruments.items()}
        flat = {r.piece: r.flat[mode] for r in results}
        undefined += undefined_count(per) + undefined_count(flat)
        try:
            aggregates[mode] = f1_aggregates(per, flat, args.literal_denominator).model_dump()
        except MetricError as e:
            logger.warning(f"No {mode} aggregate: {e}")
            aggregates[mode] = None

        for index in sorted({i for _, i in per}):
            defined = [prf.f1 for (_, i), prf in per.items() if i == index and prf.f1 is not None]
            entry = per_instrument.setdefault(taxonomy.class_name(index), {})
            entry[mode] = {"mean_f1": float(np.mean(defined)) if defined else None, "n_pieces": len(defined)}

    for r in results:
        per_piece[r.piece] = {
            "flat": {mode: prf.model_dump() for mode, prf in r.flat.items()},
            "instruments": {
                taxonomy.class_name(i): {mode: prf.model_dump() for mode, prf in prfs.items()}
                for i, prfs in r.instruments.items()
            },
        }

    config = run_config(args, options={"literal_denominator": args.literal_denominator})
    report = EvalReport(
        per_instrument=per_instrument,
        per_piece=per_piece,
        aggregates=aggregates,
        undefined_count=undefined,
        config=config,
    )
    write_report(args.report, report)
    if aggregates["onset"]:
        logger.info(
            f"Transcription F1 over {len(results)} pieces: flat {aggregates['onset']['flat_f1']}, "
            f"piece-wise {aggregates['onset']['piece_wise_f1']:.4f}, "
            f"instrument-wise {aggregates['onset']['instrument_wise_f1']:.4f}"
        )
    return EXIT_OK


def split_stem(stem: str) -> tuple[str, str]:
    """`<piece>__<class>` -> (piece, class); the piece name may itself contain the separator."""
    piece, separator, class_name = stem.rpartition(STEM_SEPARATOR)
    if not separator or not piece or not class_name:
        raise InputError(f"Stem file {stem!r} does not follow <piece>{STEM_SEPARATOR}<class>.wav")
    return piece, class_name


async def eval_separation(args: argparse.Namespace) -> int:
    ref_dir, est_dir = require_dir(args.ref, "reference directory"), require_dir(args.est, "estimate directory")
    stems = pair_files(ref_dir, est_dir, WAV_SUFFIXES, args.allow_missing)
    keys = [split_stem(stem) for stem in stems]
    ref_names, est_names = _file_names(ref_dir, WAV_SUFFIXES), _file_names(est_dir, WAV_SUFFIXES)

    def score(stem: str) -> float | None:
        value = sdr(read_wav(ref_dir / ref_names[stem]), read_wav(est_dir / est_names[stem]))
        if value is None:
            logger.warning(f"Reference stem {stem} is silent, SDR undefined")
        return value

    values = await run_jobs(score, stems, args.jobs)
    per = dict(zip(keys, values))

    per_piece: dict = {}
    by_instrument: dict[str, list[float]] = {}
    for (piece, class_name), value in per.items():
        per_piece.setdefault(piece, {})[class_name] = value
        if value is not None:
            by_instrument.setdefault(class_name, []).append(value)
    per_instrument = {name: {"mean_sdr": float(np.mean(v)), "n_sources": len(v)} for name, v in by_instrument.items()}

    aggregates = sdr_aggregates(per)
    report = EvalReport(
        per_instrument=per_instrument,
        per_piece=per_piece,
        aggregates=aggregates.model_dump(),
        undefined_count=sum(1 for v in values if v is None),
        config=run_config(args),
    )
    write_report(args.report, report)
    logger.info(
        f"SDR over {len(values)} stems: source {aggregates.source:.3f} dB, piece {aggregates.piece:.3f} dB, "
        f"instrument {aggregates.instrument:.3f} dB"
    )
    return EXIT_OK


async def eval_recognition(args: argparse.Namespace) -> int:
    taxonomy = get_taxonomy(args)
    scores = read_container(require_file(args.scores, "scores container")).array
    labels = read_container(require_file(args.labels, "labels container")).array
    if scores.shape != labels.shape or scores.ndim != 2 or scores.shape[1] != len(taxonomy):
        raise InputError(
            f"Scores {list(scores.shape)} and labels {list(labels.shape)} must both be B×{len(taxonomy)}"
        )
    if np.iscomplexobj(scores) or np.iscomplexobj(labels):
        raise InputError("Recognition containers must be real-valued")
    if not np.isin(labels, (0, 1)).all():
        raise InputError("Labels must be 0 or 1")

    labels = labels.astype(np.int64)
    predictions = (scores > RECOGNITION_THRESHOLD).astype(np.int64)
    f1 = multilabel_f1(predictions, labels)

    per_instrument: dict = {}
    ap_table: dict[int, tuple[float | None, int]] = {}
    for index in range(len(taxonomy)):
        ap = average_precision(scores[:, index], labels[:, index])
        support = int(labels[:, index].sum())
        ap_table[index] = (ap, support)
        per_instrument[taxonomy.class_name(index)] = {"ap": ap, "support": support, **f1.per_class[index].model_dump()}

    undefined = sum(1 for ap, _ in ap_table.values() if ap is None)
    if undefined:
        logger.warning(f"{undefined} classes have no positive label and are excluded from mAP")

    per_piece = {
        str(row): {
            "predicted": [taxonomy.class_name(i) for i in np.flatnonzero(predictions[row])],
            "labels": [taxonomy.class_name(i) for i in np.flatnonzero(labels[row])],
        }
        for row in range(scores.shape[0])
    }

    try:
        maps = map_aggregates(ap_table).model_dump()
    except MetricError as e:
        raise InputError(f"Cannot compute mAP: {e}")
    aggregates = {**maps, "macro_f1": f1.macro_f1, "weighted_f1": f1.weighted_f1}

    report = EvalReport(
        per_instrument=per_instrument,
        per_piece=per_piece,
        aggregates=aggregates,
        undefined_count=undefined,
        config=run_config(args, options={"threshold": RECOGNITION_THRESHOLD}),
    )
    write_report(args.report, report)
    logger.info(f"Recognition: macro mAP {maps['macro_map']:.4f}, weighted mAP {maps['weighted_map']:.4f}")
    return EXIT_OK
