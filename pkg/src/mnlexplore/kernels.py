"""Per-round simulation kernels.

Two hot loops need round-level resolution: Thompson sampling (the plan is
resampled every round) and the realized-reward estimator for a fixed plan.
Each kernel consumes a block of pre-drawn uniforms, so the compiled numba
path and the vectorized numpy path see identical randomness and return
identical results (regret sums are accumulated sequentially in both).

Set ``MNLEXPLORE_DISABLE_NUMBA=1`` to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BLOCK_DONE, BLOCK_FINISHED, BLOCK_CAPPED = 0, 1, 2


def _env_backend() -> str:
    off = os.environ.get("MNLEXPLORE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
    return "numpy" if off or not HAVE_NUMBA else "numba"


_backend = _env_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


# ------------------------------------------------------------------ TS block


def _ts_block_py(known, n_known, m_left, queue, q_pos, values, cdf, h, w0, c, opt,
                 us, uc, t0, cap, reg, pur_round, pur_w, n_pur):
    """Reference loop; compiled by numba when available.

    ``known`` holds the known weights sorted in descending order in its first
    ``n_known`` slots. Returns (status, rounds, regret, n_known, m_left, q_pos, n_pur).
    """
    nv = values.shape[0]
    cnt = np.zeros(nv, dtype=np.int64)
    B = us.shape[0]
    for i in range(B):
        if m_left == 0 or values[nv - 1] <= known[c - 1]:
            return BLOCK_FINISHED, i, reg, n_known, m_left, q_pos, n_pur
        if t0 + i >= cap:
            return BLOCK_CAPPED, i, reg, n_known, m_left, q_pos, n_pur
        for k in range(nv):
            cnt[k] = 0
        for j in range(m_left):
            u = us[i, j]
            k = 0
            while k < nv - 1 and u >= cdf[k]:
                k += 1
            cnt[k] += 1
        ki = 0
        vi = nv - 1
        ell = 0
        W = 0.0
        for _ in range(c):
            while vi >= 0 and cnt[vi] == 0:
                vi -= 1
            if vi >= 0 and values[vi] > known[ki]:
                ell += 1
                cnt[vi] -= 1
            else:
                W = W + known[ki]
                ki += 1
        den = W + ell * h + w0
        rev = (W + ell * h) / den
        p = ell * h / den
        reg = reg + (opt - rev)
        if uc[i] < p:
            w = queue[q_pos]
            q_pos += 1
            pos = n_known
            while pos > 0 and known[pos - 1] < w:
                known[pos] = known[pos - 1]
                pos -= 1
            known[pos] = w
            n_known += 1
            m_left -= 1
            pur_round[n_pur] = t0 + i + 1
            pur_w[n_pur] = w
            n_pur += 1
    return BLOCK_DONE, B, reg, n_known, m_left, q_pos, n_pur


def _ts_block_numpy(known, n_known, m_left, queue, q_pos, values, cdf, h, w0, c, opt,
                    us, uc, t0, cap, reg, pur_round, pur_w, n_pur):
    nv = values.shape[0]
    B = us.shape[0]
    i = 0
    while i < B:
        if m_left == 0 or values[nv - 1] <= known[c - 1]:
            return BLOCK_FINISHED, i, reg, n_known, m_left, q_pos, n_pur
        if t0 + i >= cap:
            return BLOCK_CAPPED, i, reg, n_known, m_left, q_pos, n_pur
        stop = min(B, i + (cap - (t0 + i)))
        rows = us[i:stop, :m_left]
        idx = np.minimum((rows[:, :, None] >= cdf[None, None, :]).sum(axis=2), nv - 1)
        samp = -np.sort(-values[idx], axis=1)
        if m_left < c:
            samp = np.hstack([samp, np.full((samp.shape[0], c - m_left), -np.inf)])
        samp = samp[:, :c]
        thresh = known[:c][::-1]  # known[c - j] for j = 1..c
        ell = (samp > thresh[None, :]).sum(axis=1)
        prefix = np.concatenate(([0.0], np.cumsum(known[:c])))
        W = prefix[c - ell]
        den = W + ell * h + w0
        rev = (W + ell * h) / den
        p = ell * h / den
        hits = np.flatnonzero(uc[i:stop] < p)
        last = hits[0] if hits.size else stop - i - 1
        reg = np.cumsum(np.concatenate(([reg], opt - rev[: last + 1])))[-1]
        if hits.size == 0:
            i = stop
            continue
        w = queue[q_pos]
        q_pos += 1
        pos = n_known
        while pos > 0 and known[pos - 1] < w:
            known[pos] = known[pos - 1]
            pos -= 1
        known[pos] = w
        n_known += 1
        m_left -= 1
        pur_round[n_pur] = t0 + i + last + 1
        pur_w[n_pur] = w
        n_pur += 1
        i = i + last + 1
    return BLOCK_DONE, B, float(reg), n_known, m_left, q_pos, n_pur


# ------------------------------------------------------- realized-reward block


def _realized_block_py(cum, rew, us, reward):
    """Scan rounds of a fixed plan until the unknown (option 0) is chosen.

    ``cum`` is the cumulative choice distribution over (unknowns, known members,
    outside); ``rew`` the reward of each option. Returns (found, rounds, reward).
    """
    n = cum.shape[0]
    for i in range(us.shape[0]):
        u = us[i]
        k = 0
        while k < n - 1 and u >= cum[k]:
            k += 1
        reward = reward + rew[k]
        if k == 0:
            return True, i + 1, reward
    return False, us.shape[0], reward


def _realized_block_numpy(cum, rew, us, reward):
    n = cum.shape[0]
    ks = np.minimum((us[:, None] >= cum[None, :]).sum(axis=1), n - 1)
    hits = np.flatnonzero(ks == 0)
    last = hits[0] if hits.size else us.shape[0] - 1
    total = np.cumsum(np.concatenate(([reward], rew[ks[: last + 1]])))[-1]
    return bool(hits.size), int(last + 1), float(total)


if HAVE_NUMBA:
    _ts_block_numba = numba.njit(cache=True)(_ts_block_py)
    _realized_block_numba = numba.njit(cache=True)(_realized_block_py)
else:  # pragma: no cover
    _ts_block_numba = _ts_block_py
    _realized_block_numba = _realized_block_py


def ts_block(*args):
    if _backend == "numba":
        return _ts_block_numba(*args)
    return _ts_block_numpy(*args)


def realized_block(cum, rew, us, reward):
    if _backend == "numba":
        return _realized_block_numba(cum, rew, us, reward)
    return _realized_block_numpy(cum, rew, us, reward)
