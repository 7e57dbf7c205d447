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
from .util.misc import load_config, subscribe, write_json, log_matrix
from ..lib import Arch
from ..lib.error import KerfError
from ..lib.nn.augment import AugmentSpec
from ..lib.nn.checkpoint import save_network, load_network
from ..lib.synth.manifest import read_manifest
from ..lib.controller.training import (
    TrainParams,
    EvalReport,
    evaluate,
    train_border_classifier,
    train_chip_classifier,
    train_street_classifier,
)

# ----------------
# Module constants
# ----------------

DESCRIPTION = "Street, chip and border classifier training tool"

TRAINERS = {
    Arch.STREET: train_street_classifier,
    Arch.CHIP: train_chip_classifier,
    Arch.BORDER: train_border_classifier,
}

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])

# ------------------
# Auxiliar functions
# ------------------


def log_eval(report: EvalReport) -> None:
    log.info("#" * 74)
    log_matrix(f"{report.arch} confusion (raw)", report.raw)
    log_matrix(f"{report.arch} confusion (merged)", report.merged)
    log.info(
        "accuracy %0.4f, macro accuracy %0.4f, fault detection %0.4f",
        report.accuracy,
        report.macro_accuracy,
        report.fault_detection,
    )
    log.info("#" * 74)


# -----------------
# CLI API functions
# -----------------


async def cli_train(args: Namespace) -> None:
    config = load_config(args)
    params = config.build(
        "train",
        TrainParams,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        patience=args.patience,
        seed=args.seed,
        num_classes=args.num_classes,
        augment=False if args.no_augment else None,
    )
    augment_spec = config.build("augment", AugmentSpec)
    manifest = await asyncio.to_thread(read_manifest, args.manifest)
    trainer = TRAINERS[args.arch]
    result, report = await asyncio.to_thread(trainer, manifest, params, augment_spec)
    output = args.output or f"{args.arch}.kstc"
    save_network(
        output,
        result.network,
        {"arch": str(args.arch), "best_epoch": result.best_epoch, "version": __version__},
    )
    result.save_history(os.path.splitext(output)[0] + ".history.json")
    log_eval(report)


async def cli_eval(args: Namespace) -> None:
    network, extra = load_network(args.model)
    arch = Arch(extra.get("arch", args.arch))
    manifest = await asyncio.to_thread(read_manifest, args.manifest)
    report = await asyncio.to_thread(evaluate, network, manifest, arch, args.split)
    log_eval(report)
    if args.output:
        write_json(args.output, report.to_dict())


def add_args(parser: ArgumentParser):
    subparser = parser.add_subparsers(dest="command", required=True)
    p = subparser.add_parser(
        "train",
        parents=[prs.cfg(), prs.mani(), prs.arch(), prs.train(), prs.seed()],
        help="Train a classifier on the train split, early stopping on the val split",
    )
    p.add_argument(
        "-o",
        "--output",
        type=str,
        default=None,
        metavar="<File>",
        help="Model checkpoint (default <arch>.kstc)",
    )
    p.set_defaults(func=cli_train)
    p = subparser.add_parser(
        "eval",
        parents=[prs.mani(), prs.arch(), prs.split()],
        help="Confusion matrices of a trained classifier",
    )
    p.add_argument(
        "-M", "--model", type=str, required=True, metavar="<File>", help="Model checkpoint"
    )
    p.add_argument("-o", "--output", type=str, default=None, metavar="<File>", help="JSON output")
    p.set_defaults(func=cli_eval)


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
