"""Numba kernels shared by the event fabric and the simulation engines.

Everything here is deterministic: the only randomness source is the
counter-mode generator `counter_u64`, a splitmix64-style hash of
(master seed, stream domain, site x, site y, subspace, index).  The pure
Python fabric and the compiled engines call the *same* jitted scalar
functions, so event times and marks agree bit for bit between them.

Boundary codes: 0 = ghost ones, 1 = ghost zeros, 2 = periodic.
Counter subspaces: 0 = inter-arrival gap, 1 = reset mark.
"""

import numpy as np
from numba import njit, uint64, int64, float64

U64 = np.uint64

# counter subspaces (disjoint streams per site)
KIND_GAP = 0
KIND_MARK = 1

# boundary codes
B_GHOST_ONES = 0
B_GHOST_ZEROS = 1
B_PERIODIC = 2

_SEED_SALT = U64(0x9E3779B97F4A7C15)
_INV_2_53 = 2.0 ** -53


@njit(uint64(uint64), cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(uint64(uint64, uint64, int64, int64, int64, int64), cache=True,
      inline="always")
def counter_u64(seed, domain, x, y, kind, index):
    """Hash of one counter point; pure function of its arguments."""
    h = mix64(seed ^ uint64(0x9E3779B97F4A7C15))
    h = mix64(h ^ domain)
    h = mix64(h ^ uint64(x))
    h = mix64(h ^ uint64(y))
    h = mix64(h ^ ((uint64(index) << uint64(1)) | uint64(kind)))
    return h


@njit(float64(uint64, uint64, int64, int64, int64, int64), cache=True,
      inline="always")
def uniform_at(seed, domain, x, y, kind, index):
    """Uniform draw in the open interval (0, 1)."""
    h = counter_u64(seed, domain, x, y, kind, index)
    return (float64(h >> uint64(11)) + 0.5) * _INV_2_53


@njit(float64(uint64, uint64, int64, int64, int64), cache=True,
      inline="always")
def gap_at(seed, domain, x, y, index):
    """index-th exponential(1) inter-arrival gap of the site's clock."""
    return -np.log(uniform_at(seed, domain, x, y, KIND_GAP, index))


@njit(float64(uint64, uint64, int64, int64, int64), cache=True,
      inline="always")
def mark_at_(seed, domain, x, y, index):
    return uniform_at(seed, domain, x, y, KIND_MARK, index)


def mix64_np(z):
    """Vectorized counterpart of `mix64` (uint64 ndarray in/out)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
        return z ^ (z >> U64(31))


def counter_u64_np(seed, domain, x, y, kind, index):
    """Vectorized counterpart of `counter_u64`; broadcasts its arguments."""
    x = np.asarray(x, dtype=np.int64).astype(np.uint64)
    y = np.asarray(y, dtype=np.int64).astype(np.uint64)
    index = np.asarray(index, dtype=np.int64).astype(np.uint64)
    h = mix64_np(U64(seed) ^ _SEED_SALT)
    h = mix64_np(h ^ U64(domain))
    h = mix64_np(h ^ x)
    h = mix64_np(h ^ y)
    h = mix64_np(h ^ ((index << U64(1)) | U64(kind)))
    return h


def uniform_np(seed, domain, x, y, kind, index):
    h = counter_u64_np(seed, domain, x, y, kind, index)
    return ((h >> U64(11)).astype(np.float64) + 0.5) * _INV_2_53


@njit(cache=True)
def site_event_times(seed, domain, x, y, t_max):
    """Times (in order) of all clock occurrences at a site with time <= t_max.

    Accumulates gaps sequentially, exactly as the engines do.
    """
    buf = np.empty(64, np.float64)
    n = 0
    t = 0.0
    j = int64(0)
    while True:
        t = t + gap_at(seed, domain, x, y, j + 1)
        if t > t_max:
            break
        if n == buf.shape[0]:
            grown = np.empty(2 * n, np.float64)
            grown[:n] = buf
            buf = grown
        buf[n] = t
        n += 1
        j += 1
    return buf[:n].copy()


@njit(float64(uint64, uint64, int64, int64, int64), cache=True)
def site_event_time_at(seed, domain, x, y, index):
    """Time of the index-th (1-based) clock occurrence at a site."""
    t = 0.0
    for j in range(1, index + 1):
        t = t + gap_at(seed, domain, x, y, j)
    return t


# ---------------------------------------------------------------------------
# forward engine kernel
# ---------------------------------------------------------------------------

STATUS_OK = 0
STATUS_LOG_OVERFLOW = 1
STATUS_SHAPE_OVERFLOW = 2

_OFF_GHOST = np.int16(-32768)


@njit(cache=True, inline="always")
def _neighbor_spin(spins, ix, iy, W, H, boundary, west):
    """Spin read through the boundary rule for the S (west=0) or W neighbor."""
    if west:
        if ix > 0:
            return spins[iy * W + ix - 1]
        if boundary == 0:
            return 1
        if boundary == 1:
            return 0
        return spins[iy * W + W - 1]
    else:
        if iy > 0:
            return spins[(iy - 1) * W + ix]
        if boundary == 0:
            return 1
        if boundary == 1:
            return 0
        return spins[(H - 1) * W + ix]


@njit(cache=True, inline="always")
def _sift_down(ht, hid, n):
    j = 0
    while True:
        left = 2 * j + 1
        right = left + 1
        m = j
        if left < n and (ht[left] < ht[m]
                         or (ht[left] == ht[m] and hid[left] < hid[m])):
            m = left
        if right < n and (ht[right] < ht[m]
                          or (ht[right] == ht[m] and hid[right] < hid[m])):
            m = right
        if m == j:
            break
        ht[j], ht[m] = ht[m], ht[j]
        hid[j], hid[m] = hid[m], hid[j]
        j = m


@njit(cache=True)
def count_events(seed, domain, W, H, gx0, gy0, t_end):
    """Number of clock occurrences with time <= t_end at each window site."""
    counts = np.zeros(W * H, np.int64)
    for iy in range(H):
        gy = gy0 + iy
        for ix in range(W):
            gx = gx0 + ix
            t = 0.0
            j = int64(0)
            while True:
                t = t + gap_at(seed, domain, gx, gy, j + 1)
                if t > t_end:
                    break
                j += 1
            counts[iy * W + ix] = j
    return counts


@njit(cache=True)
def run_forward(seed, domain, p, W, H, gx0, gy0, boundary, spins,
                t_end,
                opportunities, resets, first_reset, first_flip,
                next_index, tacc,
                sample_times, tracked, tracked_out,
                log_time, log_site, log_old, log_new,
                shape_csr, shape_elig, shape_off_s, shape_off_w):
    """Consume all clock events with time <= t_end in chronological order.

    Mutates the per-site state arrays in place and resumes from them, so
    run_forward(t1) followed by run_forward(t2) is identical to a single
    run_forward(t2).  Ties in event times are broken by site id, i.e. by
    (y, x) lexicographic order.

    Optional recording (enabled by passing nonzero-length arrays):
    tracked spins copied at each sample time, a reset log, and the
    per-event query-replay tables used by the influence-region study.

    Returns (number of log entries written, status).
    """
    n = W * H
    record_log = log_time.shape[0] > 0
    record_shape = shape_elig.shape[0] > 0
    nsamp = sample_times.shape[0]
    ntrack = tracked.shape[0]

    # rebuild the heap of next unconsumed event times from the state
    ht = np.empty(n, np.float64)
    hid = np.empty(n, np.int64)
    for sid in range(n):
        gx = gx0 + sid % W
        gy = gy0 + sid // W
        ht[sid] = tacc[sid] + gap_at(seed, domain, gx, gy, next_index[sid])
        hid[sid] = sid
    for start in range(n // 2 - 1, -1, -1):
        j = start
        while True:
            left = 2 * j + 1
            right = left + 1
            m = j
            if left < n and (ht[left] < ht[m]
                             or (ht[left] == ht[m] and hid[left] < hid[m])):
                m = left
            if right < n and (ht[right] < ht[m]
                              or (ht[right] == ht[m] and hid[right] < hid[m])):
                m = right
            if m == j:
                break
            ht[j], ht[m] = ht[m], ht[j]
            hid[j], hid[m] = hid[m], hid[j]
            j = m

    # the caller passes only sample times not yet recorded by prior calls
    nlog = int64(0)
    samp = 0
    while True:
        te = ht[0]
        while samp < nsamp and sample_times[samp] < te:
            if sample_times[samp] <= t_end:
                for k in range(ntrack):
                    tracked_out[samp, k] = spins[tracked[k]]
            samp += 1
        if te > t_end:
            break
        sid = hid[0]
        ix = sid % W
        iy = sid // W
        gx = gx0 + ix
        gy = gy0 + iy
        j = next_index[sid]
        opportunities[sid] += 1
        s_spin = _neighbor_spin(spins, ix, iy, W, H, boundary, False)
        w_spin = _neighbor_spin(spins, ix, iy, W, H, boundary, True)
        eligible = s_spin == 1 and w_spin == 1

        if record_shape:
            e = shape_csr[sid] + j - 1
            if e >= shape_csr[sid + 1]:
                return nlog, STATUS_SHAPE_OVERFLOW
            if iy > 0:
                d = (next_index[sid - W] - 1) - j
                shape_off_s[e] = np.int16(d)
            else:
                shape_off_s[e] = _OFF_GHOST
            if ix > 0:
                d = (next_index[sid - 1] - 1) - j
                shape_off_w[e] = np.int16(d)
            else:
                shape_off_w[e] = _OFF_GHOST
            shape_elig[e] = 1 if eligible else 0

        if eligible:
            old = spins[sid]
            u = mark_at_(seed, domain, gx, gy, j)
            new = np.int8(1) if u <= p else np.int8(0)
            resets[sid] += 1
            if first_reset[sid] == np.inf:
                first_reset[sid] = te
            if record_log:
                if nlog >= log_time.shape[0]:
                    return nlog, STATUS_LOG_OVERFLOW
                log_time[nlog] = te
                log_site[nlog] = sid
                log_old[nlog] = old
                log_new[nlog] = new
                nlog += 1
            if new != old:
                spins[sid] = new
                if first_flip[sid] == np.inf:
                    first_flip[sid] = te

        tacc[sid] = te
        next_index[sid] = j + 1
        ht[0] = te + gap_at(seed, domain, gx, gy, j + 1)
        hid[0] = sid
        _sift_down(ht, hid, n)

    while samp < nsamp:
        if sample_times[samp] <= t_end:
            for k in range(ntrack):
                tracked_out[samp, k] = spins[tracked[k]]
        samp += 1
    return nlog, STATUS_OK


# ---------------------------------------------------------------------------
# oriented site percolation
# ---------------------------------------------------------------------------


@njit(cache=True)
def oriented_survival_count(seed, domain, beta, depth, trials, trial0):
    """Trials of oriented site percolation surviving to the given depth.

    Generation d holds positions k in [0, d]; a site is open with
    probability beta and is reached when open with a reached parent at
    position k or k-1 of the previous generation.  The origin counts as
    generation 0 and is itself random.
    """
    surv = int64(0)
    reach = np.zeros(depth + 1, np.uint8)
    nxt = np.zeros(depth + 1, np.uint8)
    for tr in range(trials):
        idx = trial0 + tr
        if uniform_at(seed, domain, 0, 0, 0, idx) > beta:
            continue
        reach[0] = 1
        lo = 0
        hi = 0
        alive = True
        for d in range(1, depth + 1):
            nlo = -1
            nhi = -1
            khi = hi + 1 if hi + 1 <= d else d
            for k in range(lo, khi + 1):
                ok = np.uint8(0)
                if (k <= hi and reach[k]) or (k - 1 >= lo and reach[k - 1]):
                    if uniform_at(seed, domain, k, d, 0, idx) <= beta:
                        ok = np.uint8(1)
                nxt[k] = ok
                if ok:
                    if nlo < 0:
                        nlo = k
                    nhi = k
            if nlo < 0:
                alive = False
                break
            for k in range(nlo, nhi + 1):
                reach[k] = nxt[k]
            lo = nlo
            hi = nhi
        if alive:
            surv += 1
    return surv


# ---------------------------------------------------------------------------
# backward query replay (large-scale query-region computation)
# ---------------------------------------------------------------------------


@njit(cache=True)
def query_replay(csr, elig, off_s, off_w, W, H, probe_sid, probe_k,
                 scanned, queried, max_nodes):
    """Mark the sites and (site, event) nodes touched by backward queries.

    Replays the memoized backward recursion over the per-event tables
    recorded by a forward run (`shape_*` outputs of run_forward): resolving
    (site, k) scans events k, k-1, ... down to the first reset event,
    querying both southwest neighbors at each scanned event; previously
    scanned events act as memo hits.  Order independent, so a worklist
    replaces the recursion.

    Returns (distinct nodes scanned, status); status 1 means the node
    budget was exhausted.
    """
    cap = 1 << 16
    stack = np.empty(cap, np.int64)
    sp = 0
    nodes = int64(0)
    for i in range(probe_sid.shape[0]):
        sid = probe_sid[i]
        k = probe_k[i]
        queried[sid] = 1
        if k <= 0:
            continue
        if scanned[csr[sid] + k - 1]:
            continue
        if sp == cap:
            cap *= 2
            grown = np.empty(cap, np.int64)
            grown[:sp] = stack[:sp]
            stack = grown
        stack[sp] = (int64(sid) << int64(32)) | int64(k)
        sp += 1

    while sp > 0:
        sp -= 1
        packed = stack[sp]
        sid = packed >> int64(32)
        k = packed & int64(0xFFFFFFFF)
        base = csr[sid]
        if scanned[base + k - 1]:
            continue
        ix = sid % W
        iy = sid // W
        j = k
        while j >= 1 and not scanned[base + j - 1]:
            e = base + j - 1
            scanned[e] = 1
            nodes += 1
            if nodes > max_nodes:
                return nodes, 1
            # query south then west neighbor at this event's time
            for w in range(2):
                off = off_s[e] if w == 0 else off_w[e]
                if off == -32768:
                    continue
                nb = sid - W if w == 0 else sid - 1
                queried[nb] = 1
                kk = j + off
                if kk <= 0:
                    continue
                if scanned[csr[nb] + kk - 1]:
                    continue
                if sp == cap:
                    cap *= 2
                    grown = np.empty(cap, np.int64)
                    grown[:sp] = stack[:sp]
                    stack = grown
                stack[sp] = (int64(nb) << int64(32)) | int64(kk)
                sp += 1
            if elig[e]:
                break
            j -= 1
    return nodes, 0
