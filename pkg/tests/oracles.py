"""Independent oracles shared by the scheduler and acceptance tests."""

import numpy as np

from leoaoi.schedulers import PolicyConfig, flag_patterns

def _class_paths(a0, q, n_out, ticks, on):
    """Expected age and violation probability per tick by propagating the
    full age distribution. ``q`` has shape (P,), the result (P, ticks)."""
    size = int(a0) + ticks + 2
    dist = np.zeros((q.size, size))
    dist[:, int(a0)] = 1.0
    ages = np.arange(size)
    mean, tail = [], []
    for n in range(1, ticks + 1):
        shifted = np.zeros_like(dist)
        shifted[:, 1:] = dist[:, :-1]
        if on and n > n_out:
            shifted *= (1.0 - q)[:, None]
            shifted[:, 1] += q
        dist = shifted
        mean.append(dist @ ages)
        tail.append(dist)
    return np.array(mean).T, np.stack(tail, axis=1)


def oracle_scores(ages, z, qp, qh, current, cur_ok, sats, gain, interference, link, cfg):
    """List of (score, handover, power, sat, pattern, flags) for every candidate."""
    n = link.ticks_per_slot
    grid = np.asarray(cfg.power_grid, dtype=float)
    pats = flag_patterns(link.classes)
    out = []
    for k in sats:
        ho = k != current
        disc = ho and cur_ok and current >= 0
        n_out = link.outage_ticks if ho else 0
        sinr = grid * gain[k] * link.beam_gain / (link.noise_power + interference[k])
        q = link.pool.success_probability(sinr)
        rate = np.log2(1 + grid * gain[k] * link.beam_gain * link.mean_fading / link.noise_power)
        per_class = []
        for m in range(link.classes):
            on_mean, on_dist = _class_paths(ages[m], q, n_out, n, True)
            off_mean, off_dist = _class_paths(ages[m], q[:1], n_out, n, False)
            s = link.n_safe[m]
            term = lambda mean, dist: (z[m] * (dist[..., s + 1:].sum(-1).sum(-1) - n * link.epsilon[m])
                                       + cfg.V * link.weights[m] * mean.mean(-1))
            per_class.append((term(on_mean, on_dist), term(off_mean, off_dist)[0]))
        queue = qh * (float(disc) - link.ho_budget / link.n_vehicles) - qp * link.reference_power
        ho_power = link.p_ho if ho else 0.0
        silent = sum(off for _, off in per_class) + qp * ho_power + queue
        out.append((silent, ho, 0.0, k, 0))
        for p_idx, power in enumerate(grid):
            for pat in range(1, pats.shape[0]):
                if rate[p_idx] < pats[pat] @ np.asarray(link.rate_min) - 1e-12:
                    continue
                cls = sum(on[p_idx] if pats[pat][m] else off for m, (on, off) in enumerate(per_class))
                out.append((cls + qp * (power + ho_power) + queue, ho, float(power), k, pat))
    return out


def random_state(rng, link):
    n_sat = int(rng.integers(1, 5))
    gain = link.noise_power / link.beam_gain * 10 ** rng.uniform(0.0, 3.0, n_sat) / 10
    interference = link.noise_power * rng.uniform(0, 2, n_sat)
    current = int(rng.integers(-1, n_sat))
    cur_ok = current >= 0 and bool(rng.random() < 0.8)
    sats = list(range(n_sat)) if cur_ok or current < 0 else [s for s in range(n_sat) if s != current]
    if not sats:
        sats = [current]
        cur_ok = True
    ages = rng.integers(1, 60, link.classes).astype(float)
    z = np.where(rng.random(link.classes) < 0.3, 0.0, rng.uniform(0, 50, link.classes))
    cfg = PolicyConfig(V=float(10 ** rng.uniform(-1, 3)))
    return (ages, z, float(rng.uniform(0, 100)), float(rng.uniform(0, 50)), current, cur_ok,
            sats, gain, interference, link, cfg)


def oracle_argmin(rows):
    """Minimum score and the candidate the tie-break order prefers among
    rows within float noise of it."""
    best = min(r[0] for r in rows)
    tol = 1e-9 * max(1.0, abs(best))
    ties = sorted((r for r in rows if r[0] <= best + tol), key=lambda r: (r[1], r[2], r[3], r[4]))
    return best, tol, ties[0]
