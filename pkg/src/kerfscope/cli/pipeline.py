# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import os
import sys
import asyncio
import logging

from argparse import Namespace, ArgumentParser

# -------------------
# Third party imports
# -------------------

import cv2

from lica.sqlalchemy import sqa_logging
from lica.asyncio.cli import execute
from lica.tabulate import paging
from lica.validators import vfile

# --------------
# local imports
# -------------

from .. import __version__
from .util import parser as prs
from .util.misc import load_config, subscribe, write_json, log_report
from ..lib.error import KerfError
from ..lib.roi import RoiParams
from ..lib.attention.hva import TemplateBank
from ..lib.attention.model import AttentionModel
from ..lib.nn.augment import AugmentSpec
from ..lib.synth.manifest import read_manifest
from ..lib.controller.metrics import WaferReport
from ..lib.controller.training import TrainParams
from ..lib.controller.ablation import ablate_attention
from ..lib.controller.wafermap import MapSource, render_wafer_map, wafer_ids, cell_counts
from ..lib.controller.pipeline import (
    Controller,
    Models,
    PipelineParams,
    read_report,
    wafer_ids_of,
)

# ----------------
# Module constants
# ----------------

DESCRIPTION = "Diced wafer street inspection pipeline"

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])

# ------------------
# Auxiliar functions
# ------------------


def write_maps(report: WaferReport, out_dir: str, source: MapSource) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for wafer_id in wafer_ids(report):
        path = os.path.join(out_dir, f"{wafer_id}_map_{source}.png")
        cv2.imwrite(path, render_wafer_map(report, wafer_id, source))
        counts = cell_counts(report, wafer_id)
        log.info(
            "[%s] wafer map %s: %s",
            wafer_id,
            path,
            ", ".join(f"{k} {v}" for k, v in counts.items()),
        )


# -----------------
# CLI API functions
# -----------------


async def cli_run(args: Namespace) -> None:
    config = load_config(args)
    params = config.build("pipeline", PipelineParams, workers=args.workers)
    roi = config.build("roi", RoiParams)
    models = Models.load(args.border_model, args.street_model, args.templates, config)
    chips = None
    if args.manifest:
        manifest = await asyncio.to_thread(read_manifest, args.manifest)
        chips = {
            (r.wafer_id, r.chip_col, r.chip_row)
            for r in manifest.select(args.split, kind="chip")
            if not r.duplicate
        }
        log.info("Restricted to %d chips of the %s split", len(chips), args.split)
    wafers = args.wafers or wafer_ids_of(args.dataset)
    controller = Controller(models, params, roi, out_dir=args.output_dir)
    report = await controller.run_pipeline(args.dataset, wafers, chips)
    log_report(report)
    write_maps(report, args.output_dir, MapSource.PREDICTED)
    if args.persist:
        # the database layer reads DATABASE_URL when imported
        from ..lib.controller.persist import Controller as PersistController

        comment = " ".join(args.comment) if args.comment else None
        await PersistController().persist(report, args.dataset, comment)


async def cli_ablate(args: Namespace) -> None:
    config = load_config(args)
    params = config.build(
        "train",
        TrainParams,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        patience=args.patience,
        num_classes=args.num_classes,
        augment=False if args.no_augment else None,
    )
    augment_spec = config.build("augment", AugmentSpec)
    roi = config.build("roi", RoiParams)
    attention = AttentionModel.from_config(TemplateBank.load(args.templates), config)
    manifest = await asyncio.to_thread(read_manifest, args.manifest)
    held_out = None
    if args.eval_manifest:
        held_out = await asyncio.to_thread(read_manifest, args.eval_manifest)
    result = await asyncio.to_thread(
        ablate_attention,
        manifest,
        attention,
        params,
        augment_spec,
        tuple(args.seeds),
        held_out,
        roi,
    )
    for metric, stats in result["summary"]["improvement"].items():
        log.info("improvement %-16s %+0.4f +/- %0.4f", metric, stats["mean"], stats["std"])
    found = result["summary"]["found_rate"]
    log.info("attention found rate %0.4f +/- %0.4f", found["mean"], found["std"])
    write_json(args.output, result)


async def cli_report(args: Namespace) -> None:
    report = await asyncio.to_thread(read_report, args.report)
    log_report(report)
    out_dir = args.output_dir or os.path.dirname(os.path.abspath(args.report))
    write_maps(report, out_dir, args.source)


async def cli_init_db(args: Namespace) -> None:
    from ..lib.controller.persist import Controller as PersistController

    await PersistController().create_schema(keep=args.keep)


async def cli_history(args: Namespace) -> None:
    from ..lib.controller.persist import Controller as PersistController

    store = PersistController()
    HEADERS = (
        "Timestamp (UTC)",
        "Dataset",
        "# Wafers",
        "# Chips",
        "Found",
        "Street Acc.",
        "Chip Acc.",
        "Fault Det.",
    )
    iterable = await store.history()
    paging(iterable, HEADERS, page_size=args.page_size, table_fmt=args.table_format)


def add_args(parser: ArgumentParser):
    subparser = parser.add_subparsers(dest="command", required=True)
    p = subparser.add_parser(
        "run",
        parents=[
            prs.cfg(),
            prs.dset(),
            prs.odir(),
            prs.models(),
            prs.tmpl(),
            prs.workers(),
            prs.split(),
            prs.persist(),
        ],
        help="Inspect whole wafers: border check, street search, classification, metrics",
    )
    p.add_argument(
        "--wafers", type=str, nargs="+", default=None, metavar="<ID>", help="Wafer ids (all)"
    )
    p.add_argument(
        "-m",
        "--manifest",
        type=vfile,
        default=None,
        metavar="<File>",
        help="Only inspect chips of this manifest in the --split split",
    )
    p.set_defaults(func=cli_run)
    p = subparser.add_parser(
        "ablate",
        parents=[prs.cfg(), prs.mani(), prs.train(), prs.tmpl()],
        help="Attention guided against whole chip classification over several seeds",
    )
    p.add_argument(
        "--eval-manifest",
        type=vfile,
        default=None,
        metavar="<File>",
        help="Held out corpus manifest (default: test split of --manifest)",
    )
    p.add_argument(
        "--seeds", type=int, nargs="+", default=[0, 1, 2], metavar="<N>", help="Training seeds"
    )
    p.add_argument(
        "-o",
        "--output",
        type=str,
        default="ablation.json",
        metavar="<File>",
        help="JSON output (default %(default)s)",
    )
    p.set_defaults(func=cli_ablate)
    p = subparser.add_parser(
        "report",
        help="Log the metrics and draw the wafer maps of a stored report",
    )
    p.add_argument(
        "-r", "--report", type=vfile, required=True, metavar="<File>", help="report.json"
    )
    p.add_argument(
        "-o",
        "--output-dir",
        type=str,
        default=None,
        metavar="<Dir>",
        help="Wafer map directory (default: next to the report)",
    )
    p.add_argument(
        "--source",
        type=MapSource,
        choices=MapSource,
        default=MapSource.PREDICTED,
        help="Predicted or ground truth labels (default %(default)s)",
    )
    p.set_defaults(func=cli_report)
    p = subparser.add_parser(
        "history",
        parents=[prs.tbl()],
        help="List the stored inspections",
    )
    p.set_defaults(func=cli_history)
    p = subparser.add_parser(
        "init-db",
        help="Create the inspection history tables",
    )
    p.add_argument(
        "-k",
        "--keep",
        action="store_true",
        default=False,
        help="Keep existing tables and their inspections (default %(default)s)",
    )
    p.set_defaults(func=cli_init_db)


async def cli_main(args: Namespace) -> None:
    sqa_logging(args)
    subscribe()
    try:
        await args.func(args)
    except KerfError as e:
        if args.trace:
            log.exception(e)
        else:
            log.error(e)
        sys.exit(e.exit_code)


def main():
    """The main entry point specified by pyproject.toml"""
    execute(
        main_func=cli_main,
        add_args_func=add_args,
        name=__name__,
        version=__version__,
        description=DESCRIPTION,
    )


if __name__ == "__main__":
    main()
