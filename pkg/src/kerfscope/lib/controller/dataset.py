# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import os
import asyncio
import logging

# ---------------------------
# Third-party library imports
# ----------------------------

from pubsub import pub

# --------------
# local imports
# -------------

from ..config import default_workers
from ..synth.dataset import CorpusSpec, render_wafer, finish_manifest, wafer_id_of
from ..synth.manifest import DatasetManifest
from .types import Event

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])


class Controller:
    """Parallel corpus generation, one wafer per worker thread"""

    def __init__(self, corpus: CorpusSpec, out_dir: str, workers: int | None = None):
        self.corpus = corpus
        self.out_dir = out_dir
        self.workers = workers if workers is not None else default_workers()

    async def generate(self, name: str = "manifest.jsonl") -> DatasetManifest:
        os.makedirs(self.out_dir, exist_ok=True)
        specs = self.corpus.wafer_specs()
        semaphore = asyncio.Semaphore(self.workers)

        async def render(i: int):
            wafer_id = wafer_id_of(i)
            async with semaphore:
                records = await asyncio.to_thread(
                    render_wafer, specs[i], wafer_id, self.out_dir, self.corpus.jitter_px
                )
            pub.sendMessage(Event.SYNTH, wafer_id=wafer_id, n_records=len(records))
            return records

        async with asyncio.TaskGroup() as tg:
            tasks = [tg.create_task(render(i)) for i in range(len(specs))]
        # wafer order, whatever the completion order
        records = [r for t in tasks for r in t.result()]
        return await asyncio.to_thread(
            finish_manifest, records, self.corpus, self.out_dir, name
        )
