# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import logging

from datetime import datetime, timezone
from typing import Iterable, List, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

from sqlalchemy import select, func

from lica.sqlalchemy.asyncio.dbase import engine, Model, AsyncSession

# --------------
# local imports
# -------------

from ... import __version__
from .. import Side
from ..dbase.model import Inspection, ChipResult, StreetResult
from .metrics import WaferReport

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])


class Controller:
    """Inspection history store"""

    def __init__(self):
        self.Session = AsyncSession

    async def create_schema(self, keep: bool = False) -> List[str]:
        """Inspection tables, dropping the stored history unless keep"""
        async with engine.begin() as conn:
            if not keep:
                await conn.run_sync(Model.metadata.drop_all)
            await conn.run_sync(Model.metadata.create_all)
        tables = sorted(Model.metadata.tables)
        log.info("Inspection tables ready: %s", ", ".join(tables))
        return tables

    async def persist(
        self, report: WaferReport, dataset: str, comment: str | None = None
    ) -> datetime:
        tstamp = datetime.now(timezone.utc).replace(microsecond=0)
        summary = report.summary()
        async with self.Session() as session:
            async with session.begin():
                inspection = Inspection(
                    tstamp=tstamp,
                    version=__version__,
                    dataset=dataset,
                    n_wafers=len({v.wafer_id for v in report.chips}),
                    n_inside=report.n_inside,
                    n_border=report.n_border,
                    total_streets=report.total_streets,
                    found_streets=report.found_streets,
                    street_accuracy=summary["street_accuracy"],
                    chip_accuracy=summary["chip_accuracy"],
                    fault_detection=summary["fault_detection"],
                    comment=comment,
                )
                session.add(inspection)
                for v in report.chips:
                    graded = not v.border and bool(v.truth)
                    chip = ChipResult(
                        wafer_id=v.wafer_id,
                        col=v.col,
                        row=v.row,
                        border=v.border,
                        predicted=None if v.border else v.chip_class(),
                        truth=v.true_class() if graded else None,
                    )
                    chip.inspection = inspection
                    session.add(chip)
                    if v.border:
                        continue
                    for side in Side.streets():
                        fixation = v.fixations.get(side)
                        street = StreetResult(
                            side=side,
                            found=v.sides.get(side) is not None,
                            predicted=v.sides.get(side),
                            truth=v.truth.get(side),
                            x=None if fixation is None else fixation[0],
                            y=None if fixation is None else fixation[1],
                        )
                        street.chip = chip
                        session.add(street)
        log.info("Stored inspection %s with %d chips", tstamp.isoformat(), len(report.chips))
        return tstamp

    async def history(
        self,
    ) -> Iterable[Tuple[datetime, str, int, int, float, float, float, float]]:
        async with self.Session() as session:
            async with session.begin():
                q = select(
                    Inspection.tstamp,
                    Inspection.dataset,
                    Inspection.n_wafers,
                    Inspection.n_inside,
                    Inspection.found_streets * 1.0 / func.nullif(Inspection.total_streets, 0),
                    Inspection.street_accuracy,
                    Inspection.chip_accuracy,
                    Inspection.fault_detection,
                ).order_by(Inspection.tstamp.desc())
                rows = (await session.execute(q)).all()
        return rows

    async def count(self) -> int:
        async with self.Session() as session:
            q = select(func.count("*")).select_from(Inspection)
            return (await session.scalars(q)).one()
