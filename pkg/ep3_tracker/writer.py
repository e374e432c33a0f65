import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from queue import Queue

from ep3_tracker import TRACKER_SIGNAL, __version__
from ep3_tracker.settings import get_settings
from ep3_tracker.utils import canonical_json, sha256_digest

logger = logging.getLogger(__name__)

WRITER_THREAD_NAME = 'ep3_tracker_result_writer'

_STOP = object()


def write_atomic(path, payload):
    """
    Write ``payload`` next to ``path`` in a temporary file, fsync it and
    rename it over ``path``.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path) + '.')
    try:
        with os.fdopen(fd, 'wb') as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise
    return sha256_digest(payload)


@dataclass
class RunManifest:
    subcommand: str
    flags: dict
    config: dict
    outputs: list = field(default_factory=list)
    duration_seconds: float = 0.0
    tool_version: str = __version__

    def as_dict(self):
        return {
            'tool_version': self.tool_version,
            'subcommand': self.subcommand,
            'flags': self.flags,
            'config': self.config,
            'outputs': self.outputs,
            'duration_seconds': self.duration_seconds,
        }


class ResultWriter(threading.Thread):
    """
    Background thread committing result files from a bounded queue.

    Producers call :meth:`put_result`; :meth:`close` drains the queue,
    joins the thread and re-raises the first write failure.
    """

    def __init__(self, out_dir):
        super().__init__(name=WRITER_THREAD_NAME, daemon=True)
        self.out_dir = out_dir
        self._queue = Queue(maxsize=get_settings().QUEUE_MAX_SIZE)
        self._started_at = time.monotonic()
        self.outputs = []
        self.error = None

    def run(self) -> None:
        self.start_queue_process()

    def put_result(self, name, payload):
        if isinstance(payload, str):
            payload = payload.encode('utf-8')
        self._queue.put((name, payload))

    def put_json(self, name, data):
        self.put_result(name, canonical_json(data))

    def start_queue_process(self):
        while True:
            job = self._queue.get()
            if job is _STOP:
                break
            if self.error is not None:
                continue
            self._commit(*job)

    def _commit(self, name, payload):
        path = os.path.join(self.out_dir, name)
        try:
            digest = write_atomic(path, payload)
        except OSError as e:
            logger.error('could not write %s: %s', path, e)
            self.error = e
            return
        self.outputs.append({'path': name, 'sha256': digest, 'bytes': len(payload)})
        logger.info('wrote %s (%d bytes)', path, len(payload))
        TRACKER_SIGNAL.fire('output_written', path=path, digest=digest)

    def close(self, manifest=None):
        """
        Stop the thread once the queue is drained and, when ``manifest`` is
        given, write it last as ``manifest.json``.
        """
        self._queue.put(_STOP)
        self.join()
        if self.error is not None:
            raise self.error
        if manifest is not None:
            manifest.outputs = sorted(self.outputs, key=lambda o: o['path'])
            manifest.duration_seconds = round(time.monotonic() - self._started_at, 3)
            write_atomic(os.path.join(self.out_dir, 'manifest.json'), canonical_json(manifest.as_dict()))
        return self.outputs


def start_writer(out_dir):
    writer = ResultWriter(out_dir)
    writer.start()
    return writer
