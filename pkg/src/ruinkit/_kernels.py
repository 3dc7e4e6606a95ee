"""Compiled kernels shared by the sampling and simulation layers.

Private module. Holds the Philox4x64-10 generator, the inverse-CDF and
rejection samplers built on it, and (further down) the excursion
resolver and path engine. Everything is numba nopython code so the
Python wrappers and the parallel engine run the exact same arithmetic.

Stream state layout (uint64[11]):
    [0] key word 0 (seed)        [1] key word 1 (stream id)
    [2:6] 256-bit counter        [6:10] output block buffer
    [10] buffer cursor, 4 means exhausted
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_MASK32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
_PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_U64_ONE = np.uint64(1)
_U64_ZERO = np.uint64(0)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0
_TWO_PI = 6.283185307179586476925287


@njit(cache=True)
def _mulhi64(a, b):
    """High 64 bits of the 128-bit product, via 32-bit limbs."""
    a_lo = a & _MASK32
    a_hi = a >> _SHIFT32
    b_lo = b & _MASK32
    b_hi = b >> _SHIFT32
    t = a_lo * b_lo
    k = t >> _SHIFT32
    t = a_hi * b_lo + k
    w1 = t & _MASK32
    w2 = t >> _SHIFT32
    t = a_lo * b_hi + w1
    k = t >> _SHIFT32
    return a_hi * b_hi + w2 + k


@njit(cache=True)
def _philox_refill(state):
    """Advance the counter (pre-increment, with carry) and fill the buffer."""
    state[2] += _U64_ONE
    if state[2] == _U64_ZERO:
        state[3] += _U64_ONE
        if state[3] == _U64_ZERO:
            state[4] += _U64_ONE
            if state[4] == _U64_ZERO:
                state[5] += _U64_ONE
    c0 = state[2]
    c1 = state[3]
    c2 = state[4]
    c3 = state[5]
    k0 = state[0]
    k1 = state[1]
    for r in range(10):
        if r > 0:
            k0 = k0 + _PHILOX_W0
            k1 = k1 + _PHILOX_W1
        hi0 = _mulhi64(_PHILOX_M0, c0)
        lo0 = _PHILOX_M0 * c0
        hi1 = _mulhi64(_PHILOX_M1, c2)
        lo1 = _PHILOX_M1 * c2
        n0 = hi1 ^ c1 ^ k0
        n2 = hi0 ^ c3 ^ k1
        c0 = n0
        c1 = lo1
        c2 = n2
        c3 = lo0
    state[6] = c0
    state[7] = c1
    state[8] = c2
    state[9] = c3
    state[10] = _U64_ZERO


@njit(cache=True)
def stream_new(seed, stream):
    """Fresh stream keyed by (seed, stream id); empty buffer."""
    state = np.zeros(11, dtype=np.uint64)
    state[0] = seed
    state[1] = stream
    state[10] = np.uint64(4)
    return state


@njit(cache=True)
def next_u64(state):
    if state[10] >= np.uint64(4):
        _philox_refill(state)
    w = state[6 + np.int64(state[10])]
    state[10] += _U64_ONE
    return w


@njit(cache=True)
def uniform01(state):
    """Uniform double in [0, 1): top 53 bits of one output word."""
    return np.float64(next_u64(state) >> _SHIFT11) * _INV_2_53


@njit(cache=True)
def exp_draw(state, rate):
    # u in [0,1) keeps 1-u in (0,1], so the log is always finite
    return -np.log1p(-uniform01(state)) / rate


@njit(cache=True)
def normal_draw(state):
    u1 = uniform01(state)
    u2 = uniform01(state)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(_TWO_PI * u2)


@njit(cache=True)
def pareto_draw(state, shape, scale):
    u = uniform01(state)
    return scale * ((1.0 - u) ** (-1.0 / shape) - 1.0)


@njit(cache=True)
def gamma_draw(state, shape, rate):
    """Marsaglia-Tsang squeeze; shape < 1 boosted through shape + 1."""
    k = shape
    boost = 1.0
    if k < 1.0:
        u = uniform01(state)
        boost = (1.0 - u) ** (1.0 / k)
        k = k + 1.0
    d = k - 1.0 / 3.0
    cc = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = normal_draw(state)
        t = 1.0 + cc * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = uniform01(state)
        if u == 0.0:
            return boost * d * v / rate
        if np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v):
            return boost * d * v / rate


# Claim-family codes shared with the Python layer.
CLAIM_EXPONENTIAL = 0
CLAIM_PARETO = 1
CLAIM_GAMMA = 2


@njit(cache=True)
def claim_draw(state, kind, p1, p2):
    if kind == CLAIM_EXPONENTIAL:
        return exp_draw(state, p1)
    elif kind == CLAIM_PARETO:
        return pareto_draw(state, p1, p2)
    else:
        return gamma_draw(state, p1, p2)


@njit(cache=True, parallel=True)
def sample_claims_batch(seed, n, kind, p1, p2, out):
    """Batch sampler, one stream per draw index (used by tests and tools)."""
    for i in prange(n):
        state = stream_new(seed, np.uint64(i))
        out[i] = claim_draw(state, kind, p1, p2)


# Mechanism codes shared with the Python layer.
MECH_CLASSICAL = 0
MECH_PARISIAN_FIXED = 1
MECH_PARISIAN_EXP = 2
MECH_CUM_PARISIAN_FIXED = 3
MECH_CUM_PARISIAN_EXP = 4
MECH_OMEGA = 5
MECH_DEBIT = 6
MECH_INVESTOR = 7

RESCUE_CONSTANT = 0
RESCUE_EXP_DECAY = 1
RESCUE_TABLE = 2

VERDICT_RECOVERED = 0
VERDICT_RUINED = 1
VERDICT_EVENT_BUDGET = 2


@njit(cache=True)
def rescue_prob_kernel(kind, param, ys, ps, y):
    if kind == RESCUE_CONSTANT:
        return param
    if kind == RESCUE_EXP_DECAY:
        return np.exp(param * y)
    n = ys.shape[0]
    if y <= ys[0]:
        return ps[0]
    if y >= ys[n - 1]:
        return ps[n - 1]
    j = 0
    while j < n - 1 and ys[j + 1] < y:
        j += 1
    w = (y - ys[j]) / (ys[j + 1] - ys[j])
    return ps[j] + w * (ps[j + 1] - ps[j])


@njit(cache=True)
def omega_segment(breaks, levels, start, drift, duration, budget):
    """Integrate a piecewise-constant bankruptcy rate along a linear segment.

    breaks holds descending negative thresholds; levels has one extra entry
    and levels[j] applies on [breaks[j], breaks[j-1]) with breaks[-1] read as
    0 and levels[m] extending to -inf.  Returns (consumed, offset) where
    offset is the segment time at which consumption crosses the budget, or
    -1.0 if the budget survives the whole segment.
    """
    consumed = 0.0
    if duration <= 0.0:
        return consumed, -1.0
    m = breaks.shape[0]
    t = 0.0
    max_steps = 4 * (m + 2)
    for _ in range(max_steps):
        if t >= duration:
            break
        y = start + drift * t
        # piece lookup, half-open on the side the path is entering
        j = 0
        if drift < 0.0:
            while j < m and y <= breaks[j]:
                j += 1
        else:
            while j < m and y < breaks[j]:
                j += 1
        lvl = levels[j]
        # time until the path leaves the current piece
        if drift > 0.0:
            target = 0.0 if j == 0 else breaks[j - 1]
            t_bound = (target - y) / drift
        elif drift < 0.0:
            t_bound = np.inf if j == m else (breaks[j] - y) / drift
        else:
            t_bound = np.inf
        if t_bound < 0.0:
            t_bound = 0.0
        t_step = duration - t
        if t_bound < t_step:
            t_step = t_bound
        h = lvl * t_step
        if consumed + h > budget:
            return budget, t + (budget - consumed) / lvl
        consumed += h
        if t_step <= 0.0:
            t = np.nextafter(t, np.inf)
        else:
            t += t_step
    return consumed, -1.0


@njit(cache=True)
def resolve_excursion_kernel(
    mech_kind,
    mech_param,
    omega_breaks,
    omega_levels,
    resc_kind,
    resc_param,
    resc_ys,
    resc_ps,
    entry_deficit,
    c,
    lam,
    claim_kind,
    cp1,
    cp2,
    state_vec,
    rng_state,
    events_left,
):
    """Play one negative excursion to recovery or ruin.

    state_vec layout: [remaining_budget, accumulated_hazard, rescue_used],
    mutated in place.  Returns (verdict, events_used) where events counts
    claim arrivals inside the excursion.
    """
    x = -entry_deficit
    events = 0

    if mech_kind == MECH_CLASSICAL:
        return VERDICT_RUINED, events
    if mech_kind == MECH_INVESTOR:
        p = rescue_prob_kernel(resc_kind, resc_param, resc_ys, resc_ps, x)
        if uniform01(rng_state) < p:
            state_vec[2] = 1.0
            return VERDICT_RECOVERED, events
        return VERDICT_RUINED, events

    t_budget = np.inf
    h_budget = np.inf
    if mech_kind == MECH_PARISIAN_FIXED:
        t_budget = mech_param
    elif mech_kind == MECH_PARISIAN_EXP:
        t_budget = exp_draw(rng_state, mech_param)
    elif mech_kind == MECH_CUM_PARISIAN_FIXED:
        t_budget = state_vec[0]
    elif mech_kind == MECH_CUM_PARISIAN_EXP:
        if state_vec[0] == np.inf:
            state_vec[0] = exp_draw(rng_state, mech_param)
        t_budget = state_vec[0]
    elif mech_kind == MECH_OMEGA:
        h_budget = exp_draw(rng_state, 1.0)

    cumulative = (
        mech_kind == MECH_CUM_PARISIAN_FIXED or mech_kind == MECH_CUM_PARISIAN_EXP
    )

    while True:
        if mech_kind == MECH_DEBIT:
            limit = c / mech_param
            if x <= -limit:
                return VERDICT_RUINED, events
            t_rec = np.log(limit / (limit + x)) / mech_param
        else:
            t_rec = -x / c
        dt = exp_draw(rng_state, lam)

        if mech_kind == MECH_OMEGA:
            seg = dt if dt < t_rec else t_rec
            consumed, offset = omega_segment(
                omega_breaks, omega_levels, x, c, seg, h_budget
            )
            state_vec[1] += consumed
            if offset >= 0.0:
                return VERDICT_RUINED, events
            h_budget -= consumed
            if t_rec <= dt:
                return VERDICT_RECOVERED, events
        elif mech_kind == MECH_DEBIT:
            if t_rec <= dt:
                return VERDICT_RECOVERED, events
        else:
            # Parisian family: the budget is clock time spent below zero.
            # Recovery wins ties; a budget hit at or before the next claim
            # means the sojourn is about to strictly exceed it.
            if t_rec <= dt and t_rec <= t_budget:
                if cumulative:
                    state_vec[0] = t_budget - t_rec
                return VERDICT_RECOVERED, events
            if t_budget <= dt:
                if cumulative:
                    state_vec[0] = 0.0
                return VERDICT_RUINED, events
            t_budget -= dt
            if cumulative:
                state_vec[0] = t_budget

        # a claim arrives while still below zero
        events += 1
        if events > events_left:
            return VERDICT_EVENT_BUDGET, events
        if mech_kind == MECH_DEBIT:
            limit = c / mech_param
            x = -limit + (x + limit) * np.exp(mech_param * dt)
        else:
            x = x + c * dt
        x -= claim_draw(rng_state, claim_kind, cp1, cp2)


@njit(cache=True, parallel=True)
def excursion_batch(
    mech_kind,
    mech_param,
    omega_breaks,
    omega_levels,
    resc_kind,
    resc_param,
    resc_ys,
    resc_ps,
    entry_deficit,
    c,
    lam,
    claim_kind,
    cp1,
    cp2,
    seed,
    n,
    events_per_excursion,
    out,
):
    """Resolve n independent fresh-state excursions; out[i] = verdict code."""
    for i in prange(n):
        st = stream_new(seed, np.uint64(i))
        sv = np.zeros(3, np.float64)
        if mech_kind == MECH_CUM_PARISIAN_FIXED:
            sv[0] = mech_param
        else:
            sv[0] = np.inf
        verdict, _ = resolve_excursion_kernel(
            mech_kind,
            mech_param,
            omega_breaks,
            omega_levels,
            resc_kind,
            resc_param,
            resc_ys,
            resc_ps,
            entry_deficit,
            c,
            lam,
            claim_kind,
            cp1,
            cp2,
            sv,
            st,
            events_per_excursion,
        )
        out[i] = verdict


@njit(cache=True, parallel=True)
def path_batch(
    u0,
    barrier,
    c,
    lam,
    claim_kind,
    cp1,
    cp2,
    mech_kind,
    mech_param,
    omega_breaks,
    omega_levels,
    resc_kind,
    resc_param,
    resc_ys,
    resc_ps,
    seed,
    stream_offset,
    n_paths,
    max_events,
    out_verdict,
    out_classical,
    out_deficit,
    out_nexc,
):
    """Run n_paths surplus paths from u0 until ruin or the barrier.

    One RNG stream per global path index (stream_offset + i), so results are
    identical for any worker count and batches can continue a path sequence.
    out_verdict uses the shared codes: 0 survived to barrier, 1 ruined,
    2 event budget exhausted (counted as a survivor by callers, reported).
    out_deficit[i] is the first-passage deficit, NaN when the path never went
    below zero.
    """
    for i in prange(n_paths):
        st = stream_new(seed, np.uint64(stream_offset + i))
        sv = np.zeros(3, np.float64)
        if mech_kind == MECH_CUM_PARISIAN_FIXED:
            sv[0] = mech_param
        else:
            sv[0] = np.inf
        x = u0
        events = 0
        classical = 0
        deficit = np.nan
        nexc = 0
        verdict = VERDICT_RECOVERED  # survived-to-barrier path code
        while True:
            dt = exp_draw(st, lam)
            if (barrier - x) / c <= dt:
                break
            events += 1
            if events > max_events:
                verdict = VERDICT_EVENT_BUDGET
                break
            x = x + c * dt - claim_draw(st, claim_kind, cp1, cp2)
            if x < 0.0:
                nexc += 1
                if classical == 0:
                    classical = 1
                    deficit = -x
                res, used = resolve_excursion_kernel(
                    mech_kind,
                    mech_param,
                    omega_breaks,
                    omega_levels,
                    resc_kind,
                    resc_param,
                    resc_ys,
                    resc_ps,
                    -x,
                    c,
                    lam,
                    claim_kind,
                    cp1,
                    cp2,
                    sv,
                    st,
                    max_events - events,
                )
                events += used
                if res == VERDICT_RUINED:
                    verdict = VERDICT_RUINED
                    break
                if res == VERDICT_EVENT_BUDGET:
                    verdict = VERDICT_EVENT_BUDGET
                    break
                x = 0.0
        out_verdict[i] = verdict
        out_classical[i] = classical
        out_deficit[i] = deficit
        out_nexc[i] = nexc
