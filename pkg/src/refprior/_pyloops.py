"""Pure-Python mirror of the compiled loops in `_fastloops`.

Same call signatures, same pregenerated-randomness contract. The log
likelihood is vectorized with numpy here, so summation order (pairwise) can
differ from the compiled sequential loop at the last-ulp level; chains are
therefore reproducible per backend, not across backends.
"""

import math

import numpy as np

_LOG2 = 0.6931471805599453
_HALF_LOG_2PI = 0.9189385332046727


def twopiece_loglik_sum(y, mu, s1, s2):
    """Sum of two-piece location-scale log densities over the dataset."""
    if s1 <= 0.0 or s2 <= 0.0:
        return -math.inf
    y = np.asarray(y, dtype=float)
    scale = np.where(y < mu, s1, s2)
    z = (y - mu) / scale
    c = _LOG2 - math.log(s1 + s2) - _HALF_LOG_2PI
    return float(np.sum(c - 0.5 * z * z))


def _logtarget(y, z0, z1, z2, p1, p2, q):
    # saturate like the C exp in the compiled twin instead of raising
    s1 = math.exp(z1) if z1 < 709.0 else math.inf
    s2 = math.exp(z2) if z2 < 709.0 else math.inf
    return twopiece_loglik_sum(y, z0, s1, s2) + p1 * z1 + p2 * z2 \
        + q * math.log(s1 + s2)


def twopiece_power_chain(y, z_init, steps_init, p1, p2, q, normals, uniforms,
                         n_burn, adapt, target_rate, draws_out, logp_out,
                         steps_out):
    """Component-wise random-walk Metropolis in z = (mu, log s1, log s2).

    See the compiled twin for the full contract. Returns (accepted proposals,
    longest run of consecutive rejections).
    """
    n_total = normals.shape[0]
    z = [float(z_init[0]), float(z_init[1]), float(z_init[2])]
    ls = [math.log(float(s)) for s in steps_init]
    accepted = 0
    streak = 0
    max_streak = 0
    cur = _logtarget(y, z[0], z[1], z[2], p1, p2, q)
    if not cur > -math.inf:
        raise ValueError("log target not finite at the initial point")
    for t in range(n_total):
        for j in range(3):
            steps_out[t, j] = math.exp(ls[j])
        for j in range(3):
            zj_old = z[j]
            z[j] = zj_old + math.exp(ls[j]) * normals[t, j]
            prop = _logtarget(y, z[0], z[1], z[2], p1, p2, q)
            u = uniforms[t, j]
            log_u = math.log(u) if u > 0.0 else -math.inf
            if prop - cur > log_u:
                cur = prop
                accepted += 1
                streak = 0
                if adapt and t < n_burn:
                    gain = 1.5 / (t + 10.0) ** 0.6
                    ls[j] += gain * (1.0 - target_rate)
            else:
                z[j] = zj_old
                streak += 1
                if streak > max_streak:
                    max_streak = streak
                if adapt and t < n_burn:
                    gain = 1.5 / (t + 10.0) ** 0.6
                    ls[j] -= gain * target_rate
        draws_out[t, 0] = z[0]
        draws_out[t, 1] = z[1]
        draws_out[t, 2] = z[2]
        logp_out[t] = cur
    return accepted, max_streak
