# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------


# --------------------
# System wide imports
# -------------------

import logging

from typing import Optional, List
from datetime import datetime

# =====================
# Third party libraries
# =====================

from sqlalchemy import (
    Enum,
    String,
    DateTime,
    ForeignKey,
    UniqueConstraint,
)
from sqlalchemy.orm import Mapped, mapped_column, relationship

from lica.sqlalchemy.asyncio.dbase import Model

from .. import Side, StreetClass

# =======================
# Module global variables
# =======================

# get the module logger
log = logging.getLogger(__name__)


def datestr(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%d %H:%M:%S") if dt is not None else None


# =================================
# Data Model, declarative ORM style
# =================================

# ---------------------------------------------
# Additional conveniente types for enumerations
# ---------------------------------------------

StreetClassType: Enum = Enum(
    StreetClass,
    name="street_class_type",
    create_constraint=False,
    metadata=Model.metadata,
    validate_strings=True,
    values_callable=lambda x: [e.name.lower() for e in x],
)

SideType: Enum = Enum(
    Side,
    name="side_type",
    create_constraint=False,
    metadata=Model.metadata,
    validate_strings=True,
    values_callable=lambda x: [e.value for e in x],
)

# --------
# Entities
# --------


class Inspection(Model):
    __tablename__ = "inspection_t"

    id: Mapped[int] = mapped_column(primary_key=True)
    tstamp: Mapped[datetime] = mapped_column(DateTime, unique=True)
    version: Mapped[Optional[str]] = mapped_column(String(64))  # software version
    dataset: Mapped[str] = mapped_column(String(255))
    n_wafers: Mapped[int]
    n_inside: Mapped[int]
    n_border: Mapped[int]
    total_streets: Mapped[int]
    found_streets: Mapped[int]
    street_accuracy: Mapped[float]
    chip_accuracy: Mapped[float]
    fault_detection: Mapped[float]
    comment: Mapped[Optional[str]] = mapped_column(String(255))

    # These are not a real columns, it is meant for the ORM
    chips: Mapped[List["ChipResult"]] = relationship(back_populates="inspection")

    def __repr__(self) -> str:
        return f"Inspection(tstamp={datestr(self.tstamp)}, dataset={self.dataset!r})"


class ChipResult(Model):
    __tablename__ = "chip_t"

    id: Mapped[int] = mapped_column(primary_key=True)
    insp_id: Mapped[int] = mapped_column(ForeignKey("inspection_t.id"), index=True)
    wafer_id: Mapped[str] = mapped_column(String(32))
    col: Mapped[int]
    row: Mapped[int]
    border: Mapped[bool]
    predicted: Mapped[Optional[StreetClass]] = mapped_column(StreetClassType, nullable=True)
    truth: Mapped[Optional[StreetClass]] = mapped_column(StreetClassType, nullable=True)

    # These are not a real columns, it is meant for the ORM
    inspection: Mapped["Inspection"] = relationship(back_populates="chips")
    streets: Mapped[List["StreetResult"]] = relationship(back_populates="chip")

    def __repr__(self) -> str:
        return f"ChipResult(wafer={self.wafer_id!r}, col={self.col}, row={self.row})"

    __table_args__ = (UniqueConstraint(insp_id, wafer_id, col, row), {})


class StreetResult(Model):
    __tablename__ = "street_t"

    id: Mapped[int] = mapped_column(primary_key=True)
    chip_id: Mapped[int] = mapped_column(ForeignKey("chip_t.id"), index=True)
    side: Mapped[Side] = mapped_column(SideType)
    found: Mapped[bool]
    predicted: Mapped[Optional[StreetClass]] = mapped_column(StreetClassType, nullable=True)
    truth: Mapped[Optional[StreetClass]] = mapped_column(StreetClassType, nullable=True)
    x: Mapped[Optional[float]]  # normalized fixation
    y: Mapped[Optional[float]]

    # These are not a real columns, it is meant for the ORM
    chip: Mapped["ChipResult"] = relationship(back_populates="streets")

    def __repr__(self) -> str:
        return f"StreetResult(chip_id={self.chip_id}, side={self.side!r}, found={self.found})"

    __table_args__ = (UniqueConstraint(chip_id, side), {})
