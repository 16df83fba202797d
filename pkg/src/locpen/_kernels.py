"""Compiled inner loops.

Every routine here is a pure function of its arguments and has either a
plain-python mirror in the test suite or an enumeration oracle checking it at
small sizes. Signs for Monte Carlo draws are generated in place from the same
stateless 64-bit mixer the data module uses, so a draw depends only on
(seed, draw index) and results are independent of batching or worker count.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_NEG = np.int64(-(1 << 60))
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)

# 16-bit popcount table; masks up to 2^20 need two lookups.
try:
    POP16 = np.bitwise_count(np.arange(1 << 16, dtype=np.uint64)).astype(np.int64)
except AttributeError:  # older numpy
    POP16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.int64)


@njit(cache=True, inline="always")
def _mix64(z):
    z = np.uint64(z)
    z ^= z >> np.uint64(30)
    z *= _C1
    z ^= z >> np.uint64(27)
    z *= _C2
    z ^= z >> np.uint64(31)
    return z


@njit(cache=True, inline="always")
def _child(seed, index):
    # child stream seed for (seed, index); matches data.sub_seed
    return _mix64(seed + (np.uint64(index) + np.uint64(1)) * _GOLDEN)


@njit(cache=True)
def _fill_signs(seed, out):
    # out[i] in {-1, +1} from bit i of the stream's 64-bit words
    n = out.shape[0]
    nwords = (n + 63) // 64
    pos = 0
    for w in range(nwords):
        bits = _child(seed, w)
        stop = min(64, n - pos)
        for b in range(stop):
            out[pos + b] = np.int64(1) if (bits >> np.uint64(b)) & np.uint64(1) else np.int64(-1)
        pos += stop
    return out


@njit(cache=True)
def erm_interval_tables(w, kmax):
    """Suffix tables for best-sum patterns of at most r runs over block weights.

    Returns (a_out, a_in), each (B+1) x (kmax+1) int64, where a_out[b, r] is
    the best total over blocks b.. with at most r runs and no run open at b,
    and a_in[b, r] the best total given a run is open through block b-1
    (that run already counted, r fresh runs still available).
    """
    nb = w.shape[0]
    a_out = np.empty((nb + 1, kmax + 1), dtype=np.int64)
    a_in = np.empty((nb + 1, kmax + 1), dtype=np.int64)
    for r in range(kmax + 1):
        a_out[nb, r] = 0
        a_in[nb, r] = 0
    for b in range(nb - 1, -1, -1):
        for r in range(kmax + 1):
            cont = w[b] + a_in[b + 1, r]
            close = a_out[b + 1, r]
            a_in[b, r] = cont if cont > close else close
            stay = a_out[b + 1, r]
            if r >= 1:
                opened = w[b] + a_in[b + 1, r - 1]
                a_out[b, r] = opened if opened > stay else stay
            else:
                a_out[b, r] = stay
    return a_out, a_in


@njit(cache=True)
def erm_lex_patterns(w, kmax):
    """Best weights and canonical patterns per run budget.

    For each r in 1..kmax, reconstructs the pattern achieving best[r] with the
    fewest runs, breaking remaining ties by opening runs as early and closing
    them as early as possible (lexicographically smallest endpoint list).

    Returns (best, patterns): best is int64[kmax+1] with best[r] the maximal
    total using at most r runs, patterns is uint8[kmax+1, B].
    """
    nb = w.shape[0]
    a_out, a_in = erm_interval_tables(w, kmax)
    best = np.empty(kmax + 1, dtype=np.int64)
    for r in range(kmax + 1):
        best[r] = a_out[0, r]
    patterns = np.zeros((kmax + 1, nb), dtype=np.uint8)
    for r in range(1, kmax + 1):
        target = best[r]
        # fewest runs achieving the budget-r optimum
        rstar = 0
        while a_out[0, rstar] != target:
            rstar += 1
        left = rstar
        want = target
        in_run = False
        for b in range(nb):
            if not in_run:
                if left >= 1 and w[b] + a_in[b + 1, left - 1] == want:
                    patterns[r, b] = 1
                    want -= w[b]
                    left -= 1
                    in_run = True
            else:
                if a_out[b + 1, left] == want:
                    in_run = False
                else:
                    patterns[r, b] = 1
                    want -= w[b]
    return best, patterns


@njit(cache=True)
def max_runs_float(pw, gw, kmax):
    """Best sum of at most r runs with per-block and per-internal-gap weights.

    pw[b] accrues when block b is selected; gw[b] accrues when blocks b and
    b+1 belong to the same run. The empty selection scores 0. Returns
    float64[kmax+1] of bests for r = 0..kmax.
    """
    nb = pw.shape[0]
    neg = -1e300
    cur_in = np.full(kmax + 1, neg)
    cur_out = np.zeros(kmax + 1)
    for b in range(nb):
        for r in range(kmax, 0, -1):
            ext = cur_in[r] + (gw[b - 1] if b > 0 else neg)
            opn = cur_out[r - 1]
            src = ext if ext > opn else opn
            new_in = pw[b] + src
            if cur_in[r] > cur_out[r]:
                cur_out[r] = cur_in[r]
            cur_in[r] = new_in
        # r = 0 stays: only the empty selection
    out = np.empty(kmax + 1)
    out[0] = 0.0
    for r in range(1, kmax + 1):
        m = cur_out[r] if cur_out[r] > cur_in[r] else cur_in[r]
        out[r] = m if m > 0.0 else 0.0
    return out


@njit(cache=True)
def rademacher_mc_runs(mc_seed, draws, y_sorted, block_starts, kmax):
    """Per-draw exact suprema of the signed error mean over run patterns.

    For sign vector sigma, the supremum over classifiers whose prediction
    pattern has at most k maximal runs of ones equals
    (-sum_{y_i=1} v_i + best_k(v)) / n with v_i = sigma_i (1 - 2 y_i), where
    best_k maximizes the selected-block sum of v over patterns with at most k
    runs (empty pattern allowed). Returns float64[draws, kmax]; column k-1
    holds the draw's supremum for budget k.
    """
    n = y_sorted.shape[0]
    nb = block_starts.shape[0] - 1
    sups = np.empty((draws, kmax))
    v = np.empty(n, dtype=np.int64)
    bw = np.empty(nb, dtype=np.int64)
    cur_in = np.empty(kmax + 1, dtype=np.int64)
    cur_out = np.empty(kmax + 1, dtype=np.int64)
    for d in range(draws):
        _fill_signs(_child(mc_seed, d), v)
        # sum sigma_i e_i = c + sum_{i in pattern} sigma_i (1 - 2 y_i)
        # with c = sum_{y_i = 1} sigma_i (errors of the empty pattern).
        c = np.int64(0)
        for b in range(nb):
            acc = np.int64(0)
            for i in range(block_starts[b], block_starts[b + 1]):
                if y_sorted[i] == 1:
                    c += v[i]
                    acc -= v[i]
                else:
                    acc += v[i]
            bw[b] = acc
        for r in range(kmax + 1):
            cur_in[r] = _NEG
            cur_out[r] = 0
        for b in range(nb):
            wb = bw[b]
            for r in range(kmax, 0, -1):
                src = cur_in[r] if cur_in[r] > cur_out[r - 1] else cur_out[r - 1]
                new_in = wb + src
                if cur_in[r] > cur_out[r]:
                    cur_out[r] = cur_in[r]
                cur_in[r] = new_in
        for r in range(1, kmax + 1):
            m = cur_out[r] if cur_out[r] > cur_in[r] else cur_in[r]
            if m < 0:
                m = np.int64(0)
            sups[d, r - 1] = (c + m) / n
    return sups


@njit(cache=True)
def rademacher_mc_runs_budgeted(mc_seed, draws, y_sorted, block_starts, kmax, max_errors):
    """Like rademacher_mc_runs but restricted to patterns misclassifying at
    most ``max_errors`` sample points.

    Tracks the exact error count of the partial pattern as a DP dimension.
    Error counts only accumulate, so states past the budget are dead and the
    dimension is capped at max_errors + 1; cost is B * kmax * (max_errors + 1)
    per draw.
    """
    n = y_sorted.shape[0]
    nb = block_starts.shape[0] - 1
    sups = np.empty((draws, kmax))
    v = np.empty(n, dtype=np.int64)
    bw = np.empty(nb, dtype=np.int64)
    b0 = np.empty(nb, dtype=np.int64)  # errors added when block unselected
    b1 = np.empty(nb, dtype=np.int64)  # errors added when block selected
    n1 = 0
    for i in range(n):
        if y_sorted[i] == 1:
            n1 += 1
    for b in range(nb):
        c1 = 0
        for i in range(block_starts[b], block_starts[b + 1]):
            if y_sorted[i] == 1:
                c1 += 1
        b1[b] = (block_starts[b + 1] - block_starts[b]) - c1
        b0[b] = c1
    cap = (max_errors if max_errors < n else n) + 1
    cur_in = np.empty((kmax + 1, cap), dtype=np.int64)
    cur_out = np.empty((kmax + 1, cap), dtype=np.int64)
    new_in = np.empty((kmax + 1, cap), dtype=np.int64)
    new_out = np.empty((kmax + 1, cap), dtype=np.int64)
    for d in range(draws):
        _fill_signs(_child(mc_seed, d), v)
        c = np.int64(0)
        for b in range(nb):
            acc = np.int64(0)
            for i in range(block_starts[b], block_starts[b + 1]):
                if y_sorted[i] == 1:
                    c += v[i]
                    acc -= v[i]
                else:
                    acc += v[i]
            bw[b] = acc
        for r in range(kmax + 1):
            for u in range(cap):
                cur_in[r, u] = _NEG
                cur_out[r, u] = _NEG
        cur_out[0, 0] = 0  # u dimension carries the absolute error count
        for b in range(nb):
            wb = bw[b]
            d0 = b0[b]
            d1 = b1[b]
            for r in range(kmax + 1):
                for u in range(cap):
                    new_in[r, u] = _NEG
                    new_out[r, u] = _NEG
            for r in range(kmax + 1):
                for u in range(cap):
                    val_in = cur_in[r, u]
                    val_out = cur_out[r, u]
                    if val_out > _NEG:
                        # leave block b unselected
                        uu = u + d0
                        if uu < cap and val_out > new_out[r, uu]:
                            new_out[r, uu] = val_out
                        # open a run at b
                        if r < kmax:
                            uu = u + d1
                            if uu < cap and val_out + wb > new_in[r + 1, uu]:
                                new_in[r + 1, uu] = val_out + wb
                    if val_in > _NEG:
                        # extend the open run
                        uu = u + d1
                        if uu < cap and val_in + wb > new_in[r, uu]:
                            new_in[r, uu] = val_in + wb
                        # close it before b
                        uu = u + d0
                        if uu < cap and val_in > new_out[r, uu]:
                            new_out[r, uu] = val_in
            cur_in, new_in = new_in, cur_in
            cur_out, new_out = new_out, cur_out
        for k in range(1, kmax + 1):
            bestv = _NEG
            for r in range(k + 1):
                for u in range(cap):
                    if cur_in[r, u] > bestv:
                        bestv = cur_in[r, u]
                    if cur_out[r, u] > bestv:
                        bestv = cur_out[r, u]
            sups[d, k - 1] = (c + bestv) / n if bestv > _NEG else np.nan
    return sups


@njit(cache=True)
def rademacher_exact_masks(masks, pops, n, pop16):
    """Exact conditional Rademacher average of an error-vector set.

    Averages max_e (2 popcount(s & e) - |e|) over all 2^n sign masks s; the
    accumulation is integer, so the result is the exact rational divided out
    once at the end. Requires n <= 20.
    """
    m = masks.shape[0]
    total = np.int64(0)
    for s in range(np.int64(1) << np.int64(n)):
        su = np.uint64(s)
        best = np.int64(-(1 << 40))
        for j in range(m):
            e = masks[j] & su
            pc = pop16[np.int64(e & np.uint64(0xFFFF))] + pop16[np.int64(e >> np.uint64(16))]
            val = 2 * pc - pops[j]
            if val > best:
                best = val
        total += best
    return total / (n * float(2 ** n))


@njit(cache=True)
def pair_scan_sup_k1(vals, msr, pref_diff, n1, n, eta, lam_target, loss_cap):
    """Suprema of (Lhat - L) and (L - Lhat) over single-interval patterns with
    true loss at most ``loss_cap``, plus the empty pattern.

    vals[b] is the b-th distinct feature value, msr[b] the target measure of
    [0, vals[b]], pref_diff[b] the cumulative count difference
    sum_{blocks <= b} (n0 - n1). Canonical representative of run [s..e] is the
    closed interval [vals[s], vals[e]]. Returns (sup_hat_minus, sup_minus_hat,
    feasible_count).
    """
    nb = vals.shape[0]
    scale = 1.0 - 2.0 * eta
    neg = -1e300
    sup_a = neg  # Lhat - L
    sup_b = neg  # L - Lhat
    count = np.int64(0)
    l_empty = eta + scale * lam_target
    lhat_empty = n1 / n
    if l_empty <= loss_cap:
        count += 1
        if lhat_empty - l_empty > sup_a:
            sup_a = lhat_empty - l_empty
        if l_empty - lhat_empty > sup_b:
            sup_b = l_empty - lhat_empty
    for s in range(nb):
        below = pref_diff[s - 1] if s > 0 else np.int64(0)
        for e in range(s, nb):
            lam = lam_target + (vals[e] - vals[s]) - 2.0 * (msr[e] - msr[s])
            lv = eta + scale * lam
            if lv > loss_cap:
                continue
            lh = (n1 + pref_diff[e] - below) / n
            count += 1
            if lh - lv > sup_a:
                sup_a = lh - lv
            if lv - lh > sup_b:
                sup_b = lv - lh
    return sup_a, sup_b, count
