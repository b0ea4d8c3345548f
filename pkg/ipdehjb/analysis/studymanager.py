import concurrent.futures
import logging
import math
import time

import ipdehjb.helper

logger = logging.getLogger(__name__)

# Levels computed at the same time unless configured otherwise
DEFAULT_LEVEL_WORKERS = 1


class StudyManager(object):
    """ Runs the levels of a study on a thread pool and keeps them in level order.

        Arguments:
            threads: (int) total worker budget. Each level receives threads // level_workers
                workers for its own assembly.
            level_workers: (int) number of levels computed concurrently.
    """
    def __init__(self, threads=None, level_workers=DEFAULT_LEVEL_WORKERS):
        self.threads = ipdehjb.helper.resolve_threads(threads)
        self.level_workers = max(1, min(int(level_workers), self.threads))

    @property
    def level_threads(self):
        return max(1, self.threads // self.level_workers)

    def run_levels(self, study):
        """ Compute every level of the study; returns the rows in level order. """
        n_levels = len(study.levels)
        inner = self.level_threads

        def task(item):
            index, level = item
            start = time.perf_counter()
            row = study.run_level(level, inner)
            row['seconds'] = time.perf_counter() - start
            logger.info('%s level %d/%d (%s): %s = %.6e, %.3fs.', study.name, index + 1, n_levels,
                        study.describe_level(level), study.quantity, row.get('error', math.nan), row['seconds'])
            return row

        if self.level_workers == 1:
            return [task(item) for item in enumerate(study.levels)]
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.level_workers) as executor:
            return list(executor.map(task, enumerate(study.levels)))
