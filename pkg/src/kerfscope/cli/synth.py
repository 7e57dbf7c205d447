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

from lica.asyncio.cli import execute

# --------------
# local imports
# -------------

from .. import __version__
from .util import parser as prs
from .util.misc import load_config, subscribe
from ..lib.error import KerfError
from ..lib.synth.dataset import CorpusSpec
from ..lib.synth.manifest import read_manifest, write_manifest, class_balance, border_key
from ..lib.attention.hva import write_default_sketches
from ..lib.controller.dataset import Controller as DatasetController

# ----------------
# Module constants
# ----------------

DESCRIPTION = "Synthetic diced wafer corpus generation tool"

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])

# -----------------
# CLI API functions
# -----------------


async def cli_generate(args: Namespace) -> None:
    config = load_config(args)
    corpus = config.build("synth", CorpusSpec, n_wafers=args.wafers, seed=args.seed)
    controller = DatasetController(corpus, args.output_dir, workers=args.workers)
    manifest = await controller.generate()
    for kind in ("chip", "street"):
        n = len(manifest.select(kind=kind))
        log.info("%d %s records", n, kind)


async def cli_balance(args: Namespace) -> None:
    manifest = await asyncio.to_thread(read_manifest, args.manifest)
    if args.kind == "border":
        balanced = class_balance(manifest, "chip", key=border_key, classes=(0, 1))
    else:
        balanced = class_balance(manifest, args.kind)
    path = os.path.join(manifest.base_dir, args.name)
    await asyncio.to_thread(write_manifest, path, balanced)
    log.info("%d duplicated records", sum(1 for r in balanced.records if r.duplicate))


async def cli_sketches(args: Namespace) -> None:
    os.makedirs(args.output_dir, exist_ok=True)
    paths = await asyncio.to_thread(write_default_sketches, args.output_dir)
    log.info("Written %d street sketches to %s", len(paths), args.output_dir)


def add_args(parser: ArgumentParser):
    subparser = parser.add_subparsers(dest="command", required=True)
    p = subparser.add_parser(
        "generate",
        parents=[prs.cfg(), prs.odir(), prs.workers(), prs.seed()],
        help="Generate wafers, chip crops, street ROIs and the manifest",
    )
    p.add_argument(
        "-n", "--wafers", type=int, default=None, metavar="<N>", help="Number of wafers"
    )
    p.set_defaults(func=cli_generate)
    p = subparser.add_parser(
        "balance",
        parents=[prs.mani()],
        help="Oversample minority classes of the training split",
    )
    p.add_argument(
        "-k",
        "--kind",
        choices=("street", "chip", "border"),
        default="street",
        help="Records and classes to balance (default %(default)s)",
    )
    p.add_argument(
        "--name",
        type=str,
        default="balanced.jsonl",
        help="Balanced manifest file name, next to the input (default %(default)s)",
    )
    p.set_defaults(func=cli_balance)
    p = subparser.add_parser(
        "sketches",
        parents=[prs.odir()],
        help="Draw the stock street sketches used to learn templates",
    )
    p.set_defaults(func=cli_sketches)


async def cli_main(args: Namespace) -> None:
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
