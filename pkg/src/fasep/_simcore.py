"""Event-driven Gillespie cores (jitted).

Both processes have only two distinct jump rates, p for right-type moves
(injection included) and q for left-type moves, so the scheduler keeps two
indexed lists of enabled transitions: draw one exponential holding time at
rate ``p*NR + q*NL``, pick the right list with probability ``p*NR / total``,
then a uniform member of the chosen list.  Every event touches at most two
sites, so list membership is repaired locally in O(1).

Half-line layout: ``occ[x]`` is sigma(x) for x in 1..n_store-1 (index 0 is
the reservoir, never occupied).  Bond ``b >= 1`` is the ordered pair
(b, b+1); bond 0 is the injection pseudo-bond, enabled while site 1 is empty.

The half-line core optionally maintains the exponentiated height field
``Y(x) = exp(eps*h(x))`` on a prefix window.  Each event multiplies Y at a
single site by exp(-2*eps) (right-type) or exp(+2*eps) (left-type), and
between events the Hopf-Cole field is exactly Y(x)*exp(nu*s), so time
integrals of linear and quadratic functionals of Z accumulate in closed form
per holding interval.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# event codes used in logs (shared with dynamics.py)
CODE_INJECT = 0
CODE_ASEP_RIGHT = 1
CODE_ASEP_LEFT = 2
CODE_FASEP_RIGHT = 3
CODE_FASEP_LEFT = 4


@njit(cache=True, nogil=True, inline="always")
def _next_u64(rng_state):
    # splitmix64 step; rng_state is a length-1 uint64 array
    rng_state[0] = rng_state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = rng_state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _u01(rng_state):
    # uniform in the open interval (0, 1): 53 high bits, offset by half an ulp
    return (np.float64(_next_u64(rng_state) >> np.uint64(11)) + 0.5) * (2.0 ** -53)


@njit(cache=True, nogil=True)
def asep_gillespie(occ, inj0, p, q, eps, nu, t_end, seed,
                   snap_times, want_log, log_times, log_codes, log_sites,
                   track_sites, w_pair, m_y):
    """Evolve the half-line process to time t_end.

    occ         int8, length n_store (sites 1..n_store-1; occ[0] unused).
                Modified in place to the terminal state.
    snap_times  sorted float64 times (possibly empty); snapshots use the
                cadlag convention (state after the last event <= t).
    want_log    when True, events are appended to the preallocated log
                arrays; overflow sets the breach flag to 2.
    track_sites int64 sites x at which the integrals int_0^t (Delta_mu Z)(x) ds
                and int_0^t qv_rate(x) ds accumulate.
    w_pair      float64 weights on sites 0..len-1 for the running integral
                int_0^t sum_x w(x) Z_s(x) ds (length 0 disables it).
    m_y         length of the maintained Y window (0 disables Y entirely;
                otherwise must cover w_pair and track_sites + 1).

    Returns (injections, n_events, breach, n_logged, snaps, snap_inj,
             i_lap, i_qv, i_pair, t_last_event).
    breach: 0 ok, 1 truncation breach (particle reached the last site),
    2 log overflow.
    """
    n_store = occ.shape[0]
    rng_state = np.empty(1, dtype=np.uint64)
    rng_state[0] = np.uint64(seed)
    # warm the stream so nearby seeds decorrelate
    for _ in range(8):
        _next_u64(rng_state)

    # ---- bond lists -------------------------------------------------------
    # bonds 0..n_store-2 can be right-enabled; bonds 1..n_store-2 left-enabled
    n_bonds = n_store - 1
    right_list = np.empty(n_bonds, dtype=np.int64)
    right_pos = np.full(n_bonds, -1, dtype=np.int64)
    left_list = np.empty(n_bonds, dtype=np.int64)
    left_pos = np.full(n_bonds, -1, dtype=np.int64)
    n_right = 0
    n_left = 0
    for b in range(n_bonds):
        if (occ[1] == 0) if b == 0 else (occ[b] == 1 and occ[b + 1] == 0):
            right_list[n_right] = b
            right_pos[b] = n_right
            n_right += 1
        if b >= 1 and occ[b] == 0 and occ[b + 1] == 1:
            left_list[n_left] = b
            left_pos[b] = n_left
            n_left += 1

    # ---- height/Hopf-Cole instrumentation --------------------------------
    y = np.empty(max(m_y, 1), dtype=np.float64)
    if m_y > 0:
        h = -2.0 * inj0
        y[0] = np.exp(eps * h)
        for x in range(1, m_y):
            h += 2.0 * occ[x] - 1.0 if x < n_store else -1.0
            y[x] = np.exp(eps * h)
    mu = np.exp(-eps)
    f_right = np.exp(-2.0 * eps)
    f_left = np.exp(2.0 * eps)
    cqv_p = p * (f_right - 1.0) ** 2
    cqv_q = q * (f_left - 1.0) ** 2

    n_track = track_sites.shape[0]
    i_lap = np.zeros(n_track, dtype=np.float64)
    i_qv = np.zeros(n_track, dtype=np.float64)
    n_w = w_pair.shape[0]
    s_pair = 0.0
    for x in range(n_w):
        s_pair += w_pair[x] * y[x]
    i_pair = 0.0

    n_snap = snap_times.shape[0]
    snaps = np.zeros((n_snap, n_store), dtype=np.int8)
    snap_inj = np.zeros(n_snap, dtype=np.int64)
    k_snap = 0

    inj = inj0
    t = 0.0
    t_last = 0.0
    n_events = 0
    n_logged = 0
    breach = 0
    log_cap = log_times.shape[0]

    while True:
        total = p * n_right + q * n_left
        if total > 0.0:
            t_next = t + (-np.log(_u01(rng_state)) / total)
        else:
            t_next = t_end + 1.0

        # snapshots falling strictly inside the current holding interval
        while k_snap < n_snap and snap_times[k_snap] < t_next:
            for x in range(n_store):
                snaps[k_snap, x] = occ[x]
            snap_inj[k_snap] = inj
            k_snap += 1

        # exact time integrals of Z-functionals over [t, min(t_next, t_end)]
        t_stop = t_next if t_next < t_end else t_end
        if m_y > 0 and t_stop > t:
            dt = t_stop - t
            wf1 = np.exp(nu * t) * np.expm1(nu * dt) / nu
            wf2 = np.exp(2.0 * nu * t) * np.expm1(2.0 * nu * dt) / (2.0 * nu)
            if n_w > 0:
                i_pair += s_pair * wf1
            for j in range(n_track):
                xj = track_sites[j]
                if xj == 0:
                    lap = y[1] + (mu - 2.0) * y[0]
                    r_qv = cqv_p if occ[1] == 0 else 0.0
                else:
                    lap = y[xj + 1] + y[xj - 1] - 2.0 * y[xj]
                    r_qv = 0.0
                    if occ[xj] == 1 and occ[xj + 1] == 0:
                        r_qv = cqv_p
                    elif occ[xj] == 0 and occ[xj + 1] == 1:
                        r_qv = cqv_q
                i_lap[j] += lap * wf1
                i_qv[j] += r_qv * y[xj] * y[xj] * wf2

        if t_next > t_end:
            break

        # ---- pick and apply one event -------------------------------------
        u = _u01(rng_state) * total
        if u < p * n_right:
            idx = int(_u01(rng_state) * n_right)
            if idx >= n_right:
                idx = n_right - 1
            b = right_list[idx]
            code = CODE_INJECT if b == 0 else CODE_ASEP_RIGHT
            if b == 0:
                occ[1] = 1
                inj += 1
            else:
                occ[b] = 0
                occ[b + 1] = 1
                if b + 1 >= n_store - 1:
                    breach = 1
            y_fac = f_right
        else:
            idx = int(_u01(rng_state) * n_left)
            if idx >= n_left:
                idx = n_left - 1
            b = left_list[idx]
            code = CODE_ASEP_LEFT
            occ[b] = 1
            occ[b + 1] = 0
            y_fac = f_left

        t = t_next
        t_last = t_next
        n_events += 1

        if m_y > 0 and b < m_y:
            y_old = y[b]
            y[b] = y_old * y_fac
            if b < n_w:
                s_pair += w_pair[b] * (y[b] - y_old)

        if want_log:
            if n_logged >= log_cap:
                breach = 2
                break
            log_times[n_logged] = t
            log_codes[n_logged] = code
            log_sites[n_logged] = b
            n_logged += 1

        # repair bond membership around the touched sites
        lo = b - 1 if b >= 1 else 0
        hi = b + 1 if b + 1 < n_bonds else n_bonds - 1
        for bb in range(lo, hi + 1):
            if bb == 0:
                want_r = occ[1] == 0
            else:
                want_r = occ[bb] == 1 and occ[bb + 1] == 0
            have_r = right_pos[bb] >= 0
            if want_r and not have_r:
                right_list[n_right] = bb
                right_pos[bb] = n_right
                n_right += 1
            elif have_r and not want_r:
                i = right_pos[bb]
                last = right_list[n_right - 1]
                right_list[i] = last
                right_pos[last] = i
                right_pos[bb] = -1
                n_right -= 1
            want_l = bb >= 1 and occ[bb] == 0 and occ[bb + 1] == 1
            have_l = left_pos[bb] >= 0
            if want_l and not have_l:
                left_list[n_left] = bb
                left_pos[bb] = n_left
                n_left += 1
            elif have_l and not want_l:
                i = left_pos[bb]
                last = left_list[n_left - 1]
                left_list[i] = last
                left_pos[last] = i
                left_pos[bb] = -1
                n_left -= 1

        if breach == 1:
            break

    return (inj, n_events, breach, n_logged, snaps, snap_inj,
            i_lap, i_qv, i_pair, t_last)


@njit(cache=True, nogil=True)
def fasep_gillespie(occ, p, q, t_end, seed,
                    snap_times, want_log, log_times, log_codes, log_sites):
    """Evolve the full-line facilitated process to time t_end.

    occ is int8 over a storage window; the lattice continues with ones below
    index 0 and zeros above the top.  A jump is enabled at index i when
    occ[i-1], occ[i], 1-occ[i+1] are all 1 (right, rate p) or occ[i+1],
    occ[i], 1-occ[i-1] are all 1 (left, rate q).  Margins must be wide
    enough that indices 0,1 stay solid and the top two stay empty; any event
    that violates this sets the breach flag.

    Returns (n_events, breach, n_logged, snaps, t_last_event).  Logged sites
    are storage indices (the caller re-bases them to lattice sites).
    """
    n_store = occ.shape[0]
    rng_state = np.empty(1, dtype=np.uint64)
    rng_state[0] = np.uint64(seed)
    for _ in range(8):
        _next_u64(rng_state)

    right_list = np.empty(n_store, dtype=np.int64)
    right_pos = np.full(n_store, -1, dtype=np.int64)
    left_list = np.empty(n_store, dtype=np.int64)
    left_pos = np.full(n_store, -1, dtype=np.int64)
    n_right = 0
    n_left = 0
    for i in range(1, n_store - 1):
        if occ[i] == 1 and occ[i - 1] == 1 and occ[i + 1] == 0:
            right_list[n_right] = i
            right_pos[i] = n_right
            n_right += 1
        if occ[i] == 1 and occ[i + 1] == 1 and occ[i - 1] == 0:
            left_list[n_left] = i
            left_pos[i] = n_left
            n_left += 1

    n_snap = snap_times.shape[0]
    snaps = np.zeros((n_snap, n_store), dtype=np.int8)
    k_snap = 0

    t = 0.0
    t_last = 0.0
    n_events = 0
    n_logged = 0
    breach = 0
    log_cap = log_times.shape[0]

    while True:
        total = p * n_right + q * n_left
        if total > 0.0:
            t_next = t + (-np.log(_u01(rng_state)) / total)
        else:
            t_next = t_end + 1.0

        while k_snap < n_snap and snap_times[k_snap] < t_next:
            for x in range(n_store):
                snaps[k_snap, x] = occ[x]
            k_snap += 1

        if t_next > t_end:
            break

        u = _u01(rng_state) * total
        if u < p * n_right:
            idx = int(_u01(rng_state) * n_right)
            if idx >= n_right:
                idx = n_right - 1
            i = right_list[idx]
            code = CODE_FASEP_RIGHT
            occ[i] = 0
            occ[i + 1] = 1
            touched_lo = i
            touched_hi = i + 1
        else:
            idx = int(_u01(rng_state) * n_left)
            if idx >= n_left:
                idx = n_left - 1
            i = left_list[idx]
            code = CODE_FASEP_LEFT
            occ[i] = 0
            occ[i - 1] = 1
            touched_lo = i - 1
            touched_hi = i

        t = t_next
        t_last = t_next
        n_events += 1

        # margin breach: a hole reaching the solid edge or a particle the empty edge
        if touched_lo <= 2 or touched_hi >= n_store - 3:
            breach = 1

        if want_log:
            if n_logged >= log_cap:
                breach = 2
                break
            log_times[n_logged] = t
            log_codes[n_logged] = code
            log_sites[n_logged] = i
            n_logged += 1

        lo = touched_lo - 1 if touched_lo >= 2 else 1
        hi = touched_hi + 1 if touched_hi + 1 < n_store - 1 else n_store - 2
        for j in range(lo, hi + 1):
            want_r = occ[j] == 1 and occ[j - 1] == 1 and occ[j + 1] == 0
            have_r = right_pos[j] >= 0
            if want_r and not have_r:
                right_list[n_right] = j
                right_pos[j] = n_right
                n_right += 1
            elif have_r and not want_r:
                k = right_pos[j]
                last = right_list[n_right - 1]
                right_list[k] = last
                right_pos[last] = k
                right_pos[j] = -1
                n_right -= 1
            want_l = occ[j] == 1 and occ[j + 1] == 1 and occ[j - 1] == 0
            have_l = left_pos[j] >= 0
            if want_l and not have_l:
                left_list[n_left] = j
                left_pos[j] = n_left
                n_left += 1
            elif have_l and not want_l:
                k = left_pos[j]
                last = left_list[n_left - 1]
                left_list[k] = last
                left_pos[last] = k
                left_pos[j] = -1
                n_left -= 1

        if breach == 1:
            break

    return n_events, breach, n_logged, snaps, t_last
