"""Numba kernels for the boundary random walk.

Interior stretches are simulated exactly without touching every jump time:
interior sites all carry the same total rate, so jump epochs form a Poisson
process independent of the embedded coin-flip chain.  A stretch samples the
jump count over the remaining window, walks the embedded chain watching for
absorption (64 steps at a time via popcount while no absorbing site is in
reach), and dates the absorbing step with the matching Beta order statistic.
Boundary states are handled by competing exponential clocks.

Every path owns a splittable RNG stream keyed by (master seed, path index),
so batch output is independent of execution order.
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
_MIX1 = U64(0x9E3779B97F4A7C15)
_MIX2 = U64(0xBF58476D1CE4E5B9)
_MIX3 = U64(0x94D049BB133111EB)
_M5 = U64(0x5555555555555555)
_M3 = U64(0x3333333333333333)
_MF = U64(0x0F0F0F0F0F0F0F0F)
_M1 = U64(0x0101010101010101)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53

# Terminal flags.
ALIVE, KILLED, TRUNCATED = 0, 1, 2
# Record modes understood by the fast kernel.
MODE_SUMMARY, MODE_BOUNDARY = 0, 1
# Topologies.
T_LINE, T_TWOHALF = 0, 1
# Event codes are topology codes from states.py; the line cemetery sentinel:
LINE_CEMETERY = -(2**62)


@njit(cache=True, inline="always")
def _sm64(s):
    s = s + _MIX1
    z = s
    z = (z ^ (z >> U64(30))) * _MIX2
    z = (z ^ (z >> U64(27))) * _MIX3
    return s, z ^ (z >> U64(31))


@njit(cache=True)
def _stream_init(seed, idx):
    """Four xoshiro256++ words from splitmix64 over (seed, idx)."""
    s = (U64(seed) ^ (U64(idx) * _MIX2)) + _MIX3
    out = np.empty(4, dtype=np.uint64)
    for i in range(4):
        s, z = _sm64(s)
        out[i] = z
    # All-zero state is invalid for xoshiro; splitmix cannot produce it for
    # all four words, but guard anyway.
    if out[0] | out[1] | out[2] | out[3] == U64(0):
        out[0] = _MIX1
    return out


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << U64(k)) | (x >> U64(64 - k))


@njit(cache=True, inline="always")
def _next(S):
    result = _rotl(S[0] + S[3], 23) + S[0]
    t = S[1] << U64(17)
    S[2] ^= S[0]
    S[3] ^= S[1]
    S[1] ^= S[2]
    S[0] ^= S[3]
    S[2] ^= t
    S[3] = _rotl(S[3], 45)
    return result


@njit(cache=True, inline="always")
def _unif(S):
    return float(_next(S) >> U64(11)) * _INV53


@njit(cache=True, inline="always")
def _expo(S):
    return -math.log(1.0 - _unif(S))


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> U64(1)) & _M5)
    x = (x & _M3) + ((x >> U64(2)) & _M3)
    x = (x + (x >> U64(4))) & _MF
    return np.int64((x * _M1) >> U64(56))


@njit(cache=True)
def _normal(S):
    while True:
        u = 2.0 * _unif(S) - 1.0
        v = 2.0 * _unif(S) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * math.sqrt(-2.0 * math.log(s) / s)


@njit(cache=True)
def _poisson(S, lam):
    if lam <= 0.0:
        return np.int64(0)
    if lam < 10.0:
        # Inversion by multiplication.
        p = math.exp(-lam)
        cum = p
        u = _unif(S)
        k = np.int64(0)
        while u > cum:
            k += 1
            p *= lam / k
            cum += p
            if k > 10000:  # numerically impossible fallback
                break
        return k
    # Hormann's PTRD transformed rejection.
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = _unif(S) - 0.5
        v = _unif(S)
        us = 0.5 - abs(u)
        k = np.int64(math.floor((2.0 * a / us + b) * u + lam + 0.43))
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= k * math.log(lam) - lam - math.lgamma(k + 1.0)):
            return k


@njit(cache=True)
def _gamma(S, shape):
    """Marsaglia-Tsang for shape >= 1 (integer shapes <= 8 by direct sums)."""
    if shape <= 8.5 and shape == math.floor(shape):
        tot = 0.0
        for _ in range(int(shape)):
            tot += _expo(S)
        return tot
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal(S)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _unif(S)
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


@njit(cache=True)
def _beta(S, a, b):
    ga = _gamma(S, a)
    gb = _gamma(S, b)
    return ga / (ga + gb)


@njit(cache=True)
def _interior_stretch(S, d0, window, rate, dmax):
    """Distance-from-origin walk absorbed at 0 and dmax over a time window.

    Returns (outcome, d_end, t_event): outcome 0 means no absorption within
    the window (d_end is the endpoint, t_event = window), 1 means absorption
    at 0 and 2 absorption at dmax, with t_event the exact absorption time.
    """
    n_jumps = _poisson(S, rate * window)
    if n_jumps == 0:
        return 0, d0, window
    d = d0
    j = np.int64(0)
    hit = 0
    while j < n_jumps:
        rem = n_jumps - j
        if d > 64 and dmax - d > 64 and rem >= 64:
            w = _next(S)
            d += 2 * _popcount(w) - 64
            j += 64
            continue
        w = _next(S)
        bits = 64 if rem >= 64 else rem
        for b in range(bits):
            if (w >> U64(b)) & U64(1):
                d += 1
            else:
                d -= 1
            j += 1
            if d == 0:
                hit = 1
                break
            if d >= dmax:
                hit = 2
                break
        if hit != 0:
            break
    if hit == 0:
        return 0, d, window
    t_event = window * _beta(S, float(j), float(n_jumps - j + 1))
    return hit, d, t_event


@njit(cache=True)
def _sim_unified(S, topology, n, a_p, a_m, nb_p, nb_m, c_p, c_m,
                 side0, d0, start_cem, horizon, lsites,
                 mode, ev_t, ev_c, cap):
    """One walk path; state is (side, distance) plus terminal flags.

    Returns (flag, side, d, kill_t, trunc_t, first0_t, t0p, t0m, tip, tin,
    swpm, swmp, visp, vism, nev).  Event buffers are filled in boundary mode
    with (time, public state code) pairs; nev < 0 signals a cap overflow.
    """
    t = 0.0
    side = side0
    d = d0
    flag = ALIVE
    kill_t = -1.0
    trunc_t = -1.0
    first0_t = -1.0
    t0p = 0.0
    t0m = 0.0
    tip = 0.0
    tin = 0.0
    swpm = np.int64(0)
    swmp = np.int64(0)
    visp = np.int64(0)
    vism = np.int64(0)
    nev = np.int64(0)
    rate_int = float(n) * float(n)

    def _code(topology, side, d, dead):
        if dead:
            return LINE_CEMETERY if topology == T_LINE else 0
        if topology == T_LINE:
            return side * d
        return side * (d + 1)

    if start_cem == 1:
        flag = KILLED
        kill_t = 0.0
        if mode == MODE_BOUNDARY and cap > 0:
            ev_t[0] = 0.0
            ev_c[0] = _code(topology, side, d, True)
            nev = 1
        return flag, side, d, kill_t, trunc_t, first0_t, t0p, t0m, tip, tin, swpm, swmp, visp, vism, nev

    if mode == MODE_BOUNDARY:
        if nev >= cap:
            return flag, side, d, kill_t, trunc_t, first0_t, t0p, t0m, tip, tin, swpm, swmp, visp, vism, np.int64(-1)
        ev_t[nev] = 0.0
        ev_c[nev] = _code(topology, side, d, False)
        nev += 1

    if d == 0 and first0_t < 0.0:
        first0_t = 0.0
        if side > 0:
            visp += 1
        else:
            vism += 1

    while t < horizon:
        if d == 0:
            # Boundary state: competing exponential clocks.
            if topology == T_LINE:
                r_kill = a_p
                r_up = nb_p
                r_down = nb_m
                r_switch = 0.0
            else:
                if side > 0:
                    r_kill, r_up, r_switch = a_p, nb_p, c_p
                else:
                    r_kill, r_up, r_switch = a_m, nb_m, c_m
                r_down = 0.0
            total = r_kill + r_up + r_down + r_switch
            if total <= 0.0:
                if side > 0:
                    t0p += horizon - t
                else:
                    t0m += horizon - t
                t = horizon
                break
            dt = _expo(S) / total
            if t + dt >= horizon:
                if side > 0:
                    t0p += horizon - t
                else:
                    t0m += horizon - t
                t = horizon
                break
            if side > 0:
                t0p += dt
            else:
                t0m += dt
            t += dt
            u = _unif(S) * total
            if u < r_kill:
                flag = KILLED
                kill_t = t
                if mode == MODE_BOUNDARY:
                    if nev >= cap:
                        nev = -1
                        break
                    ev_t[nev] = t
                    ev_c[nev] = _code(topology, side, d, True)
                    nev += 1
                break
            elif u < r_kill + r_up:
                if topology == T_LINE:
                    side = 1
                d = 1
            elif u < r_kill + r_up + r_down:
                side = -1
                d = 1
            else:
                if side > 0:
                    swpm += 1
                    side = -1
                    vism += 1
                else:
                    swmp += 1
                    side = 1
                    visp += 1
            if mode == MODE_BOUNDARY:
                if nev >= cap:
                    nev = -1
                    break
                ev_t[nev] = t
                ev_c[nev] = _code(topology, side, d, False)
                nev += 1
        else:
            window = horizon - t
            outcome, d_new, dt = _interior_stretch(S, d, window, rate_int, lsites)
            if side > 0:
                tip += dt
            else:
                tin += dt
            t += dt
            d = d_new
            if outcome == 0:
                break
            if outcome == 2:
                flag = TRUNCATED
                trunc_t = t
                if mode == MODE_BOUNDARY:
                    if nev >= cap:
                        nev = -1
                        break
                    ev_t[nev] = t
                    ev_c[nev] = _code(topology, side, d, False)
                    nev += 1
                break
            # Arrived at the origin of the current side.
            if first0_t < 0.0:
                first0_t = t
            if side > 0:
                visp += 1
            else:
                vism += 1
            if mode == MODE_BOUNDARY:
                if nev >= cap:
                    nev = -1
                    break
                ev_t[nev] = t
                ev_c[nev] = _code(topology, side, d, False)
                nev += 1

    if mode == MODE_BOUNDARY and nev > 0 and flag == ALIVE:
        # Record the endpoint only when it differs from the last event
        # (records are cadlag step functions; equal consecutive states are
        # redundant and would break the distinct-consecutive invariant).
        code_now = _code(topology, side, d, False)
        if ev_c[nev - 1] != code_now:
            if nev >= cap:
                nev = -1
            else:
                ev_t[nev] = t
                ev_c[nev] = code_now
                nev += 1
    return flag, side, d, kill_t, trunc_t, first0_t, t0p, t0m, tip, tin, swpm, swmp, visp, vism, nev


@njit(cache=True)
def _batch_summary(seed, m, topology, n, a_p, a_m, nb_p, nb_m, c_p, c_m,
                   side0, d0, start_cem, horizon, lsites,
                   out_flag, out_side, out_d, out_kill, out_trunc, out_first0,
                   out_t0p, out_t0m, out_tip, out_tin,
                   out_swpm, out_swmp, out_visp, out_vism):
    ev_t = np.empty(0, dtype=np.float64)
    ev_c = np.empty(0, dtype=np.int64)
    for i in range(m):
        S = _stream_init(seed, i)
        (flag, side, d, kill_t, trunc_t, first0_t, t0p, t0m, tip, tin,
         swpm, swmp, visp, vism, _nev) = _sim_unified(
            S, topology, n, a_p, a_m, nb_p, nb_m, c_p, c_m,
            side0, d0, start_cem, horizon, lsites,
            MODE_SUMMARY, ev_t, ev_c, 0)
        out_flag[i] = flag
        out_side[i] = side
        out_d[i] = d
        out_kill[i] = kill_t
        out_trunc[i] = trunc_t
        out_first0[i] = first0_t
        out_t0p[i] = t0p
        out_t0m[i] = t0m
        out_tip[i] = tip
        out_tin[i] = tin
        out_swpm[i] = swpm
        out_swmp[i] = swmp
        out_visp[i] = visp
        out_vism[i] = vism


@njit(cache=True)
def _sim_full(S, topology, n, a_p, a_m, nb_p, nb_m, c_p, c_m,
              side0, d0, start_cem, horizon, lsites, ev_t, ev_c, cap):
    """Plain per-jump Gillespie path recording every event.

    Slow but structurally independent of the stretch shortcut; used for
    full-path records and as a distributional cross-check of the fast path.
    """
    t = 0.0
    side = side0
    d = d0
    flag = ALIVE
    kill_t = -1.0
    trunc_t = -1.0
    nev = np.int64(0)
    rate_int = float(n) * float(n)

    def _code(topology, side, d, dead):
        if dead:
            return LINE_CEMETERY if topology == T_LINE else 0
        if topology == T_LINE:
            return side * d
        return side * (d + 1)

    if cap > 0:
        ev_t[0] = 0.0
        ev_c[0] = _code(topology, side, d, start_cem == 1)
        nev = 1
    if start_cem == 1:
        return KILLED, 0.0, trunc_t, nev

    r_kill = r_up = r_down = r_switch = 0.0
    while t < horizon:
        if d == 0:
            if topology == T_LINE:
                r_kill, r_up, r_down, r_switch = a_p, nb_p, nb_m, 0.0
            else:
                if side > 0:
                    r_kill, r_up, r_switch = a_p, nb_p, c_p
                else:
                    r_kill, r_up, r_switch = a_m, nb_m, c_m
                r_down = 0.0
            total = r_kill + r_up + r_down + r_switch
        else:
            total = rate_int
        if total <= 0.0:
            break
        dt = _expo(S) / total
        if t + dt >= horizon:
            t = horizon
            break
        t += dt
        if d == 0:
            u = _unif(S) * total
            if u < r_kill:
                flag = KILLED
                kill_t = t
            elif u < r_kill + r_up:
                if topology == T_LINE:
                    side = 1
                d = 1
            elif u < r_kill + r_up + r_down:
                side = -1
                d = 1
            else:
                side = -side
        else:
            if _next(S) & U64(1):
                d += 1
            else:
                d -= 1
        if nev >= cap:
            return flag, kill_t, trunc_t, np.int64(-1)
        ev_t[nev] = t
        ev_c[nev] = _code(topology, side, d, flag == KILLED)
        nev += 1
        if flag == KILLED:
            break
        if d >= lsites:
            flag = TRUNCATED
            trunc_t = t
            break
    return flag, kill_t, trunc_t, nev


@njit(cache=True)
def _exit_batch(seed, m, rate, d0, dmax, tmax,
                out_time, out_high, out_flag):
    """First exit of the free walk from a window, in distance coordinates.

    d0 is the start offset from the low edge, dmax the window width in
    sites; out_high is 1 when the exit is through the high edge.
    """
    for i in range(m):
        S = _stream_init(seed, i)
        t = 0.0
        d = d0
        flag = ALIVE
        high = np.int64(0)
        while t < tmax:
            outcome, d, dt = _interior_stretch(S, d, tmax - t, rate, dmax)
            t += dt
            if outcome == 0:
                break
            high = np.int64(0) if outcome == 1 else np.int64(1)
            flag = KILLED  # reused as "exited"
            break
        out_time[i] = t
        out_high[i] = high
        out_flag[i] = flag
