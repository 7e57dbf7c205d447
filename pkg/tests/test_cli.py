from argparse import ArgumentParser

import pytest

from kerfscope.lib import Arch, Split
from kerfscope.cli import synth, attn, clf, pipeline


def parser_of(module) -> ArgumentParser:
    parser = ArgumentParser()
    module.add_args(parser)
    return parser


@pytest.fixture
def manifest(tmp_path) -> str:
    path = tmp_path / "manifest.jsonl"
    path.write_text("")
    return str(path)


def test_generate_defaults(tmp_path):
    args = parser_of(synth).parse_args(["generate", "-o", str(tmp_path), "-n", "2"])
    assert args.func is synth.cli_generate
    assert args.wafers == 2
    assert args.seed is None and args.workers is None and args.config is None


def test_balance_kinds(manifest):
    args = parser_of(synth).parse_args(["balance", "-m", manifest, "-k", "border"])
    assert args.kind == "border"
    assert args.name == "balanced.jsonl"


def test_train_overrides(manifest):
    args = parser_of(clf).parse_args(
        ["train", "-m", manifest, "-a", "chip", "-e", "5", "--lr", "0.001", "--no-augment"]
    )
    assert args.func is clf.cli_train
    assert args.arch == Arch.CHIP
    assert (args.epochs, args.lr, args.no_augment) == (5, 0.001, True)
    assert args.batch_size is None and args.num_classes is None


def test_eval_needs_model(manifest):
    with pytest.raises(SystemExit):
        parser_of(clf).parse_args(["eval", "-m", manifest])
    args = parser_of(clf).parse_args(["eval", "-m", manifest, "-M", "street.kstc", "-s", "val"])
    assert args.split == Split.VAL


def test_pipeline_run(tmp_path):
    args = parser_of(pipeline).parse_args(["run", "-d", str(tmp_path), "-p", "--comment", "a", "b"])
    assert args.func is pipeline.cli_run
    assert args.border_model == "border.kstc"
    assert args.street_model == "street.kstc"
    assert args.templates == "templates.kstc"
    assert args.persist and args.comment == ["a", "b"]
    assert args.wafers is None


def test_ablation_seeds(manifest):
    args = parser_of(pipeline).parse_args(["ablate", "-m", manifest])
    assert args.seeds == [0, 1, 2]
    assert args.eval_manifest is None
    assert args.templates == "templates.kstc"


def test_init_db():
    args = parser_of(pipeline).parse_args(["init-db", "--keep"])
    assert args.func is pipeline.cli_init_db
    assert args.keep
    assert not parser_of(pipeline).parse_args(["init-db"]).keep


def test_every_architecture_has_a_trainer():
    assert set(clf.TRAINERS) == set(Arch)


def test_attention_subcommands(tmp_path, manifest):
    args = parser_of(attn).parse_args(["learn-templates", "-i", str(tmp_path)])
    assert args.func is attn.cli_learn
    args = parser_of(attn).parse_args(["find-streets", "-i", manifest])
    assert args.images == [manifest]
    assert args.suppress is None
    args = parser_of(attn).parse_args(["find-streets", "-i", manifest, "--suppress", manifest])
    assert args.suppress == manifest
    args = parser_of(attn).parse_args(["evaluate", "-m", manifest, "--suppress", manifest])
    assert args.suppress == manifest


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        parser_of(pipeline).parse_args(["deploy"])
