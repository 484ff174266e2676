"""
Output artifacts of a command run and the manifest that lists them.

Every artifact is written through ``ArtifactWriter`` so that its sha256
checksum ends up in ``manifest.json``.  CSV floats carry 17 significant
digits and SVG output is free of dates and random ids, so identical inputs
give byte-identical files.
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import matplotlib as mpl

mpl.use('Agg')
import matplotlib.pyplot as plt

from python import __version__
from python.timecounter import TimeCounter

logger = logging.getLogger(__name__)

mpl.rcParams['svg.hashsalt'] = 'corner-unfold'
mpl.rcParams['svg.fonttype'] = 'none'

MANIFEST = 'manifest.json'


def get_checksum(filename):
    digest = hashlib.sha256()
    with open(filename, 'rb') as stream:
        for chunk in iter(lambda: stream.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _to_json(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    if hasattr(value, 'to_json'):
        return value.to_json()
    raise TypeError(f'{type(value).__name__} is not JSON serialisable')


class ArtifactWriter:
    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.artifacts = {}
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def _record(self, name):
        self.artifacts[name] = get_checksum(self.path(name))
        logger.debug('wrote %s', self.path(name))
        return self.path(name)

    def csv(self, name, frame):
        frame.to_csv(self.path(name), index=False, float_format='%.17g', lineterminator='\n')
        return self._record(name)

    def json(self, name, doc):
        with open(self.path(name), 'w') as stream:
            json.dump(doc, stream, sort_keys=True, indent=2, default=_to_json)
            stream.write('\n')
        return self._record(name)

    def svg(self, name, fig):
        fig.savefig(self.path(name), format='svg', metadata={'Date': None})
        plt.close(fig)
        return self._record(name)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int | None = None
    workers: int = 1
    version: str = __version__
    status: str = 'running'
    wall_time: float = 0.0
    tasks: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    counter: TimeCounter = field(default_factory=TimeCounter, repr=False)

    def __post_init__(self):
        self.counter.start()

    def add_tasks(self, statuses):
        self.tasks.extend(s.to_json() for s in statuses)

    @property
    def failed_tasks(self):
        return [task['name'] for task in self.tasks if task['status'] != 'ok']

    def to_json(self):
        return {
            'command': self.command, 'config_hash': self.config_hash, 'seed': self.seed, 'workers': self.workers,
            'version': self.version, 'status': self.status, 'wall_time': self.wall_time, 'tasks': self.tasks,
            'artifacts': dict(sorted(self.artifacts.items())), 'notes': self.notes,
        }

    def write(self, writer, status=None):
        if status is not None:
            self.status = status
        self.wall_time = self.counter.time()
        self.artifacts.update(writer.artifacts)
        path = writer.path(MANIFEST)
        with open(path, 'w') as stream:
            json.dump(self.to_json(), stream, sort_keys=True, indent=2)
            stream.write('\n')
        logger.info('manifest written to %s (%s, %d artifacts)', path, self.status, len(self.artifacts))
        return path
