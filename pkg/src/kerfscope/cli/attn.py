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

from lica.asyncio.cli import execute
from lica.validators import vdir, vfile

# --------------
# local imports
# -------------

from .. import __version__
from .util import parser as prs
from .util.misc import load_config, subscribe, write_json
from ..lib.error import KerfError, DataError
from ..lib.attention.earlyvision import V1Params
from ..lib.attention.hva import TemplateBank, learn_bank
from ..lib.attention.model import AttentionModel
from ..lib.synth.manifest import read_manifest
from ..lib.controller.localization import evaluate_localization

# ----------------
# Module constants
# ----------------

DESCRIPTION = "Visual attention street finder tool"

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])

# -----------------
# CLI API functions
# -----------------


async def cli_learn(args: Namespace) -> None:
    config = load_config(args)
    v1 = config.build("v1", V1Params)
    bank = await asyncio.to_thread(learn_bank, args.sketch_dir, v1)
    bank.save(args.output)


async def cli_find(args: Namespace) -> None:
    config = load_config(args)
    model = AttentionModel.from_config(
        TemplateBank.load(args.templates), config, suppress_map=args.suppress
    )
    results = dict()
    for path in args.images:
        image = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
        if image is None:
            raise DataError(f"cannot read chip image {path}")
        chip_id = os.path.splitext(os.path.basename(path))[0]
        plan = await asyncio.to_thread(model.find_streets, image, chip_id, args.dump_dir)
        for k, s in enumerate(plan.saccades, start=1):
            log.info(
                "[%s] saccade %d: x = %0.3f, y = %0.3f, side %s, width %0.1f px%s",
                chip_id,
                k,
                s.x,
                s.y,
                s.side,
                s.width_px,
                "" if s.valid else " INVALID",
            )
        results[chip_id] = [
            {"x": s.x, "y": s.y, "side": str(s.side), "valid": s.valid, "steps": s.steps}
            for s in plan.saccades
        ]
    if args.output:
        write_json(args.output, results)


async def cli_evaluate(args: Namespace) -> None:
    config = load_config(args)
    model = AttentionModel.from_config(
        TemplateBank.load(args.templates), config, suppress_map=args.suppress
    )
    manifest = await asyncio.to_thread(read_manifest, args.manifest)
    report = await evaluate_localization(model, manifest, args.limit, args.workers)
    p = report.precision
    log.info("#" * 74)
    log.info(
        "Found %d of %d streets (%0.4f) on %d chips",
        report.found_streets,
        report.total_streets,
        report.found_rate,
        report.n_chips,
    )
    log.info(
        "Deviation mean (%0.2f, %0.2f) px, std (%0.2f, %0.2f) px",
        p["mean_x"],
        p["mean_y"],
        p["std_x"],
        p["std_y"],
    )
    log.info(
        "%d fixations in the chip center, %d chips with separated fixations",
        report.center_fixations,
        report.separated_chips,
    )
    log.info("#" * 74)
    if args.output:
        write_json(args.output, report.to_dict())


def add_args(parser: ArgumentParser):
    subparser = parser.add_subparsers(dest="command", required=True)
    p = subparser.add_parser(
        "learn-templates",
        parents=[prs.cfg()],
        help="One shot learning of the street templates from sketches",
    )
    p.add_argument(
        "-i", "--sketch-dir", type=vdir, required=True, metavar="<Dir>", help="Sketch directory"
    )
    p.add_argument(
        "-o",
        "--output",
        type=str,
        default="templates.kstc",
        metavar="<File>",
        help="Template bank file (default %(default)s)",
    )
    p.set_defaults(func=cli_learn)
    p = subparser.add_parser(
        "find-streets",
        parents=[prs.cfg(), prs.tmpl(), prs.suppress()],
        help="Run the saccade sequence on chip context images",
    )
    p.add_argument(
        "-i", "--images", type=vfile, nargs="+", required=True, metavar="<File>", help="Chips"
    )
    p.add_argument(
        "--dump-dir", type=str, default=None, metavar="<Dir>", help="Per saccade activity dumps"
    )
    p.add_argument("-o", "--output", type=str, default=None, metavar="<File>", help="JSON output")
    p.set_defaults(func=cli_find)
    p = subparser.add_parser(
        "evaluate",
        parents=[prs.cfg(), prs.tmpl(), prs.suppress(), prs.mani(), prs.workers()],
        help="Street found rate and center precision against the ground truth",
    )
    p.add_argument(
        "-l", "--limit", type=int, default=None, metavar="<N>", help="Evaluate the first N chips"
    )
    p.add_argument("-o", "--output", type=str, default=None, metavar="<File>", help="JSON output")
    p.set_defaults(func=cli_evaluate)


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
