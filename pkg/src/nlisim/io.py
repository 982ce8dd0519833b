"""
Binary timetag files.

Layout (little-endian)::

    header   magic "NLTT" | u16 version (=1) | u16 channel_count | 8 reserved
    record   u64 time_ps | u8 channel | 7 reserved           (16 bytes each)

Both channels of a run live in one file. Records are written in time order
(ties: lower channel first), which keeps every channel sorted.
"""

import numpy as np

MAGIC = b"NLTT"
VERSION = 1

HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u2"), ("channel_count", "<u2"), ("reserved", "V8")])
RECORD_DTYPE = np.dtype([("time_ps", "<u8"), ("channel", "u1"), ("reserved", "V7")])

assert HEADER_DTYPE.itemsize == 16 and RECORD_DTYPE.itemsize == 16


class TimetagFormatError(ValueError):
    """File is not a readable timetag file (bad magic, version or length)."""


def pack_records(streams):
    """Merge per-channel tag arrays into one record array in time order."""
    times = [np.asarray(t, dtype=np.int64) for t in streams]
    for ch, t in enumerate(times):
        if len(t) and t.min() < 0:
            raise ValueError(f"channel {ch} holds negative timetags")
    all_t = np.concatenate(times) if times else np.empty(0, np.int64)
    all_c = np.concatenate([np.full(len(t), ch, dtype=np.uint8) for ch, t in enumerate(times)]) \
        if times else np.empty(0, np.uint8)
    order = np.lexsort((all_c, all_t))
    rec = np.zeros(len(all_t), dtype=RECORD_DTYPE)
    rec["time_ps"] = all_t[order]
    rec["channel"] = all_c[order]
    return rec


def write_timetags(path, streams, channel_count=None):
    """
    Write tag arrays (one per channel, index = channel id) to ``path``.

    ``streams`` may hold arrays or objects with a ``tags`` attribute.
    """
    arrays = [getattr(s, "tags", s) for s in streams]
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["channel_count"] = len(arrays) if channel_count is None else channel_count
    rec = pack_records(arrays)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        rec.tofile(fh)


def read_records(path):
    """Return ``(channel_count, records)`` after validating the header."""
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_DTYPE.itemsize)
        if len(raw) < HEADER_DTYPE.itemsize:
            raise TimetagFormatError("file shorter than its header")
        header = np.frombuffer(raw, dtype=HEADER_DTYPE)[0]
        if header["magic"] != MAGIC:
            raise TimetagFormatError(f"bad magic {bytes(header['magic'])!r}")
        if int(header["version"]) != VERSION:
            raise TimetagFormatError(f"unsupported version {int(header['version'])}")
        body = np.fromfile(fh, dtype=np.uint8)
    if len(body) % RECORD_DTYPE.itemsize:
        raise TimetagFormatError("truncated record")
    return int(header["channel_count"]), body.view(RECORD_DTYPE)


def read_timetags(path):
    """
    Read a timetag file into one int64 array per channel.

    Raises TimetagFormatError if a channel is out of order.
    """
    n_ch, rec = read_records(path)
    ch = rec["channel"]
    t = rec["time_ps"].astype(np.int64)
    if len(ch) and int(ch.max()) >= n_ch:
        raise TimetagFormatError(f"record channel {int(ch.max())} exceeds channel count {n_ch}")
    out = [t[ch == k] for k in range(n_ch)]
    for k, tags in enumerate(out):
        if len(tags) > 1 and np.any(tags[1:] < tags[:-1]):
            raise TimetagFormatError(f"channel {k} is not time-ordered")
    return out
