"""
Sweep Worker - Runs independent scan points on a thread pool
"""

import logging
from concurrent.futures import ThreadPoolExecutor

from .settings import DEFAULTS


class SweepWorker:
    """Evaluates ``task(item)`` for every item, keeping input order."""

    def __init__(self, items, task, jobs=None, progress_callback=None, label='sweep'):
        self.logger = logging.getLogger(__name__)
        self.items = list(items)
        self.task = task
        self.jobs = max(1, int(jobs or DEFAULTS['jobs']))
        self.progress_callback = progress_callback
        self.label = label
        self.is_cancelled = False

    def cancel(self):
        """Stop scheduling further items."""
        self.is_cancelled = True
        self.logger.info(f"{self.label} cancelled")

    def run(self):
        """Main processing loop; returns results in item order."""
        total = len(self.items)
        if total == 0:
            return []
        self.logger.debug(f"Starting {self.label} over {total} points with {self.jobs} workers")

        if self.jobs == 1:
            results = []
            for i, item in enumerate(self.items):
                if self.is_cancelled:
                    break
                results.append(self.process_single_item(i, item))
            return results

        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            futures = [pool.submit(self.process_single_item, i, item)
                       for i, item in enumerate(self.items)]
            results = []
            try:
                for future in futures:
                    if self.is_cancelled:
                        break
                    results.append(future.result())
            except Exception as e:
                self.logger.error(f"{self.label} failed: {e}")
                for future in futures:
                    future.cancel()
                raise
            finally:
                if self.is_cancelled:
                    for future in futures:
                        future.cancel()
        return results

    def process_single_item(self, index, item):
        """Evaluate one point and report progress."""
        if self.is_cancelled:
            return None
        result = self.task(item)
        self.logger.debug(f"{self.label}: point {index + 1}/{len(self.items)} done")
        if self.progress_callback is not None:
            self.progress_callback(index, result)
        return result
