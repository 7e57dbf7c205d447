import asyncio

import pytest

from kerfscope.lib import Side, StreetClass
from kerfscope.lib.controller.metrics import ChipVerdict, compute_metrics

G, B = StreetClass.GOOD, StreetClass.BAD


def sample_report():
    truth = {
        ("W000", 1, 1): {side: G for side in Side.streets()},
        ("W000", 2, 1): {**{side: G for side in Side.streets()}, Side.W: B},
    }
    verdicts = [
        ChipVerdict(
            "W000",
            1,
            1,
            sides={Side.N: G, Side.E: G, Side.S: None, Side.W: G},
            fixations={Side.N: (0.5, 0.15), Side.E: (0.85, 0.5), Side.W: (0.15, 0.5)},
        ),
        ChipVerdict("W000", 2, 1, sides={side: B for side in Side.streets()}),
        ChipVerdict("W000", 0, 0, border=True),
    ]
    return compute_metrics(verdicts, truth, {"W000": (3, 3)})


async def store_and_query(report):
    # DATABASE_URL is set by conftest before the database layer is imported
    from sqlalchemy import select, func
    from lica.sqlalchemy.asyncio.dbase import engine, Model, AsyncSession

    from kerfscope.lib.dbase.model import ChipResult, StreetResult
    from kerfscope.lib.controller.persist import Controller

    controller = Controller()
    tables = await controller.create_schema()
    try:
        tstamp = await controller.persist(report, "corpus", comment="unit test")
        count = await controller.count()
        history = list(await controller.history())
        async with AsyncSession() as session:
            chips = (await session.scalars(select(func.count("*")).select_from(ChipResult))).one()
            found = (
                await session.scalars(
                    select(func.count("*")).select_from(StreetResult).where(StreetResult.found)
                )
            ).one()
            bad = (
                await session.scalars(select(ChipResult).where(ChipResult.predicted == B))
            ).all()
        kept = await controller.create_schema(keep=True)
        still = await controller.count()
        bad = [(c.col, c.row) for c in bad]
        return tables, kept, still, tstamp, count, history, chips, found, bad
    finally:
        async with engine.begin() as conn:
            await conn.run_sync(Model.metadata.drop_all)
        await engine.dispose()


def test_persist_inspection():
    report = sample_report()
    tables, kept, still, tstamp, count, history, chips, found, bad = asyncio.run(
        store_and_query(report)
    )
    assert {"chip_t", "inspection_t", "street_t"} <= set(tables)
    assert kept == tables
    assert still == 1
    assert count == 1
    assert chips == 3
    # three found sides on the first chip, four on the second one
    assert found == 7
    assert bad == [(2, 1)]
    assert len(history) == 1
    row = history[0]
    assert row[0] == tstamp.replace(tzinfo=None) or row[0] == tstamp
    assert row[1] == "corpus"
    assert row[3] == 2
    assert row[4] == pytest.approx(7 / 8)
    assert row[6] == report.summary()["chip_accuracy"]
