"""Independent reference implementations used only by the tests."""

import numpy as np


def all_pairs(s, i, window, block=512):
    """Every (signal index, idler index) with |t_i - t_s| <= window, by exhaustive comparison."""
    s = np.asarray(s, dtype=np.int64)
    i = np.asarray(i, dtype=np.int64)
    out_s, out_i = [], []
    for a in range(0, len(s), block):
        d = i[None, :] - s[a:a + block, None]
        js, ji = np.nonzero(np.abs(d) <= window)
        out_s.append(js + a)
        out_i.append(ji)
    if not out_s:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(out_s), np.concatenate(out_i)


def exclusive_matching(s, i, window):
    """
    Enumerate all candidate pairs, then accept them nearest-first.

    Ordering key: |delay|, then idler index, then signal index. Returns a
    sorted list of (signal index, idler index, midpoint, delay).
    """
    s = np.asarray(s, dtype=np.int64)
    i = np.asarray(i, dtype=np.int64)
    cs, ci = all_pairs(s, i, window)
    cand = sorted(zip(np.abs(i[ci] - s[cs]).tolist(), ci.tolist(), cs.tolist()))
    used_s, used_i = set(), set()
    out = []
    for _, b, a in cand:
        if a in used_s or b in used_i:
            continue
        used_s.add(a)
        used_i.add(b)
        ts, ti = int(s[a]), int(i[b])
        total = ts + ti
        mid = total // 2 if total % 2 == 0 else (total - 1) // 2
        out.append((a, b, mid, ti - ts))
    return sorted(out)
