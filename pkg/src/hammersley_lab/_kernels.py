"""Compiled inner loops shared by the increasing-sequence and particle code.

All kernels take points already sorted by ``x`` (ascending). Equal ``x``
values are treated as mutually incomparable: a group of points sharing an
``x`` is inserted against the pile tops as they stood before the group.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _bisect_left(tails, size, value):
    lo = 0
    hi = size
    while lo < hi:
        mid = (lo + hi) >> 1
        if tails[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def lis_sorted(xs, ts):
    """Length of the longest strictly increasing chain; ``xs`` sorted."""
    n = xs.shape[0]
    tails = np.empty(n + 1)
    slots = np.empty(n, dtype=np.int64)
    size = 0
    i = 0
    while i < n:
        j = i
        while j < n and xs[j] == xs[i]:
            j += 1
        for k in range(i, j):
            slots[k] = _bisect_left(tails, size, ts[k])
        for k in range(i, j):
            s = slots[k]
            if s == size:
                tails[size] = ts[k]
                size += 1
            elif ts[k] < tails[s]:
                tails[s] = ts[k]
        i = j
    return size


@njit(cache=True)
def reach_sweep(xs, ts, start, x_cap, t_lo, t_hi, m_max):
    """First ``x`` at which the sweep from index ``start`` holds ``m`` piles.

    Only points with ``t_lo < t <= t_hi`` and ``x <= x_cap`` take part.
    Returns ``out`` with ``out[m]`` the reaching abscissa for ``m = 1..m_max``
    and ``inf`` where the pile count never got there; ``out[0]`` is unused.
    """
    out = np.full(m_max + 1, np.inf)
    if m_max <= 0:
        return out
    n = xs.shape[0]
    tails = np.empty(m_max + 1)
    slots = np.empty(64, dtype=np.int64)
    size = 0
    i = start
    while i < n and size < m_max:
        x = xs[i]
        if x > x_cap:
            break
        j = i
        while j < n and xs[j] == x:
            j += 1
        if j - i > slots.shape[0]:
            slots = np.empty(2 * (j - i), dtype=np.int64)
        for k in range(i, j):
            t = ts[k]
            if t <= t_lo or t > t_hi:
                slots[k - i] = -1
            else:
                slots[k - i] = _bisect_left(tails, size, t)
        for k in range(i, j):
            s = slots[k - i]
            if s < 0:
                continue
            if s == size:
                if size < m_max:
                    tails[size] = ts[k]
                    size += 1
                    out[size] = x
            elif ts[k] < tails[s]:
                tails[s] = ts[k]
        i = j
    return out


@njit(cache=True)
def pull_leftmost(positions, event_xs):
    """Apply time-ordered Poisson points to sorted particle positions.

    Each point moves the leftmost particle at or right of it onto the point.
    ``positions[0]`` never moves: points at or left of it have no effect
    (the labels below the window are treated as an infinite pile there).
    Returns the number of jumps performed.
    """
    n = positions.shape[0]
    jumps = 0
    for e in range(event_xs.shape[0]):
        x = event_xs[e]
        k = _bisect_left(positions, n, x)
        if k == 0 or k == n:
            continue
        if positions[k] != x:
            positions[k] = x
            jumps += 1
    return jumps


@njit(cache=True)
def reach_one(xs, ts, start, x_stop, t_lo, t_hi, m):
    """Abscissa where the sweep from ``start`` first holds ``m`` piles.

    Gives up and returns ``inf`` once the sweep passes ``x_stop``; a reach
    exactly at ``x_stop`` is still reported.
    """
    if m <= 0:
        return -np.inf
    n = xs.shape[0]
    tails = np.empty(m + 1)
    slots = np.empty(64, dtype=np.int64)
    size = 0
    i = start
    while i < n:
        x = xs[i]
        if x > x_stop:
            break
        j = i
        while j < n and xs[j] == x:
            j += 1
        if j - i > slots.shape[0]:
            slots = np.empty(2 * (j - i), dtype=np.int64)
        for k in range(i, j):
            t = ts[k]
            if t <= t_lo or t > t_hi:
                slots[k - i] = -1
            else:
                slots[k - i] = _bisect_left(tails, size, t)
        for k in range(i, j):
            s = slots[k - i]
            if s < 0:
                continue
            if s == size:
                tails[size] = ts[k]
                size += 1
                if size == m:
                    return x
            elif ts[k] < tails[s]:
                tails[s] = ts[k]
        i = j
    return np.inf
