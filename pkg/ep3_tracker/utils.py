import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor

from ep3_tracker.settings import get_settings


def format_number(value):
    """
        Function:       format_number(value)
        Description:    Fixed 12 significant digit rendering used in every CSV cell
    """
    return '%.12g' % value


def complex_cells(value):
    return [format_number(value.real), format_number(value.imag)]


def canonical_json(data):
    """
    UTF-8 JSON with sorted keys and 2-space indentation, newline terminated.
    """
    return (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + '\n').encode('utf-8')


def sha256_digest(payload):
    return hashlib.sha256(payload).hexdigest()


def wrap_phase(angle):
    """
    Map an angle onto (-pi, pi].
    """
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def cycle_notation(permutation):
    """
    Cycle notation of a 1-based permutation tuple, fixed points omitted.

    >>> cycle_notation((3, 1, 2))
    '(1 3 2)'
    >>> cycle_notation((1, 2, 3))
    '()'
    """
    seen = set()
    cycles = []
    for start in range(1, len(permutation) + 1):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        nxt = permutation[start - 1]
        while nxt != start:
            cycle.append(nxt)
            seen.add(nxt)
            nxt = permutation[nxt - 1]
        if len(cycle) > 1:
            cycles.append('(' + ' '.join(str(i) for i in cycle) + ')')
    return ''.join(cycles) or '()'


def thread_map(func, items):
    """
    ``map`` over a pool sized by ``EP3_TRACKER_THREADS``. Results keep the
    order of ``items``.
    """
    items = list(items)
    threads = get_settings().THREADS
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
