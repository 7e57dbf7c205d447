from lica import StrEnum


class Event(StrEnum):
    SYNTH = "synth_event"
    SACCADE = "saccade_event"
    CHIP = "chip_event"
    WAFER_START = "wafer_start_event"
    WAFER_END = "wafer_end_event"
    EPOCH = "epoch_event"
    TRAIN_START = "train_start_event"
    TRAIN_END = "train_end_event"
    ABLATION_ROUND = "ablation_round_event"
