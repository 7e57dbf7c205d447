# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import os

from argparse import ArgumentParser

# ---------------------------
# Third-party library imports
# ----------------------------

from lica.validators import vdir, vfile

# --------------
# local imports
# -------------

from ...lib import Arch, Split


def cfg() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-c",
        "--config",
        type=vfile,
        default=None,
        metavar="<File>",
        help="TOML configuration file (default: KERFSCOPE_CONFIG or built-in values)",
    )
    return parser


def odir() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-o",
        "--output-dir",
        type=str,
        default=os.getcwd(),
        metavar="<Dir>",
        help="Output directory, created if needed (default %(default)s)",
    )
    return parser


def dset() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-d",
        "--dataset",
        type=vdir,
        required=True,
        metavar="<Dir>",
        help="Generated dataset directory",
    )
    return parser


def mani() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-m",
        "--manifest",
        type=vfile,
        required=True,
        metavar="<File>",
        help="Dataset manifest (JSON Lines)",
    )
    return parser


def arch() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-a",
        "--arch",
        type=Arch,
        choices=Arch,
        default=Arch.STREET,
        help="Network architecture (default %(default)s)",
    )
    return parser


def split() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-s",
        "--split",
        type=Split,
        choices=Split,
        default=Split.TEST,
        help="Manifest split (default %(default)s)",
    )
    return parser


def workers() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-w",
        "--workers",
        type=int,
        default=None,
        metavar="<N>",
        help="Worker threads (default: KERFSCOPE_WORKERS or 4)",
    )
    return parser


def seed() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        metavar="<N>",
        help="Random seed, overrides the configuration file",
    )
    return parser


def suppress() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "--suppress",
        type=vfile,
        default=None,
        metavar="<File>",
        help="External attention map, mid gray is neutral (default: configuration file)",
    )
    return parser


def tmpl() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-t",
        "--templates",
        type=str,
        default="templates.kstc",
        metavar="<File>",
        help="Learned template bank (default %(default)s)",
    )
    return parser


def models() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-B",
        "--border-model",
        type=str,
        default="border.kstc",
        metavar="<File>",
        help="Inside/border chip classifier (default %(default)s)",
    )
    parser.add_argument(
        "-S",
        "--street-model",
        type=str,
        default="street.kstc",
        metavar="<File>",
        help="Street classifier (default %(default)s)",
    )
    return parser


def train() -> ArgumentParser:
    """Training options, all of them override the [train] section"""
    parser = ArgumentParser(add_help=False)
    parser.add_argument("-e", "--epochs", type=int, default=None, metavar="<N>", help="Epochs")
    parser.add_argument(
        "-b", "--batch-size", type=int, default=None, metavar="<N>", help="Mini batch size"
    )
    parser.add_argument("--lr", type=float, default=None, metavar="<float>", help="Learning rate")
    parser.add_argument(
        "--patience", type=int, default=None, metavar="<N>", help="Early stopping patience"
    )
    parser.add_argument(
        "--num-classes",
        type=int,
        choices=(2, 3),
        default=None,
        help="Street/chip network outputs: raw 3 classes or merged 2",
    )
    parser.add_argument(
        "--no-augment",
        action="store_true",
        default=False,
        help="Disable on-the-fly augmentation",
    )
    return parser


def persist() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "-p",
        "--persist",
        default=False,
        action="store_true",
        help="Store inspection results in database (default %(default)s)",
    )
    parser.add_argument(
        "--comment",
        type=str,
        nargs="+",
        default=None,
        help="Optional inspection comment (default %(default)s)",
    )
    return parser


def tbl() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "--page-size",
        type=int,
        default=10,
        help="Table page size",
    )
    parser.add_argument(
        "--table-format",
        choices=("simple", "grid"),
        default="simple",
        help="Table format",
    )
    return parser
