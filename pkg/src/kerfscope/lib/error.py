# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------


class KerfError(RuntimeError):
    """Base class for the errors the command line tools map to exit codes"""

    exit_code = 1


class ConfigError(KerfError):
    exit_code = 2


class DataError(KerfError):
    exit_code = 3


class ConvergenceError(KerfError):
    exit_code = 4


class ShapeError(DataError):
    def __init__(self, layer: str, msg: str):
        super().__init__(f"layer {layer}: {msg}")
        self.layer = layer


class ManifestError(DataError):
    def __init__(self, path: str, msg: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


class TemplateError(DataError):
    pass
