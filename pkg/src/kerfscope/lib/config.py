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
import logging
import tomllib
import dataclasses

from typing import Any, Mapping, Sequence, TypeVar

if sys.version_info[1] < 11:
    from typing_extensions import Self
else:
    from typing import Self

# ---------------------------
# Third-party library imports
# ----------------------------

import decouple

# --------------
# local imports
# -------------

from .error import ConfigError

# ----------------
# Module constants
# ----------------

SECTIONS = ("synth", "v1", "hva", "fef", "attention", "roi", "train", "augment", "pipeline")

T = TypeVar("T")

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])


def default_workers() -> int:
    return decouple.config("KERFSCOPE_WORKERS", default=4, cast=int)


class Config:
    """Read only view of the declarative TOML configuration, one table per section"""

    def __init__(self, data: Mapping[str, Any] | None = None, path: str | None = None):
        self.path = path
        self._data = dict(data or {})
        unknown = set(self._data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown configuration sections {sorted(unknown)} in {path}")

    @classmethod
    def load(cls, path: str | None = None) -> Self:
        path = path if path is not None else decouple.config("KERFSCOPE_CONFIG", default=None)
        if path is None:
            log.debug("No configuration file, using built-in defaults")
            return cls()
        if not os.path.isfile(path):
            raise ConfigError(f"configuration file not found: {path}")
        try:
            with open(path, "rb") as fd:
                data = tomllib.load(fd)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        log.info("Loaded configuration from %s", path)
        return cls(data, path)

    def section(self, section: str) -> Mapping[str, Any]:
        return self._data.get(section, {})

    def get(self, section: str, prop: str, default: Any = None) -> Any:
        return self.section(section).get(prop, default)

    def build(
        self, section: str, cls: type[T], shared: Sequence[type] = (), **overrides: Any
    ) -> T:
        """
        Instantiate a parameters dataclass from a section.
        Non None overrides (i.e. command line values) take precedence over file values.
        Keys of the other dataclasses in shared live in the same section and are skipped.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        others = {f.name for other in shared for f in dataclasses.fields(other)}
        values = dict(self.section(section))
        unknown = set(values) - names - others
        if unknown:
            raise ConfigError(f"[{section}] unknown keys {sorted(unknown)}")
        for key, val_arg in overrides.items():
            val_cfg = values.get(key)
            values[key] = val_arg if val_arg is not None else val_cfg
        values = {k: v for k, v in values.items() if v is not None and k in names}
        for f in dataclasses.fields(cls):
            # TOML arrays come as lists, the parameter classes use tuples
            if f.name in values and isinstance(values[f.name], list):
                values[f.name] = tuple(values[f.name])
        try:
            return cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {e}") from e
